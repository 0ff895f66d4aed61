"""Dyadic partition of unity, Littlewood-Paley blocks and Besov norms.

Frequencies are absolute, ``omega_k = 2*pi*k/L``, so a block index names the
same octave on every grid.  All multipliers are radial, which lets the block
transforms run on the real FFT half-spectrum.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EstimationError, GridError, ParameterError
from .gridfn import GridFunction, GridSpec, lp_norm_array

INNER = 3.0 / 4.0
OUTER = 4.0 / 3.0


def _g(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def transition(t):
    """Smooth step: 1 on ``[0, 3/4]``, 0 on ``[4/3, inf)``, C-infinity in between."""
    t = np.abs(np.asarray(t, dtype=float))
    width = OUTER - INNER
    a = _g((OUTER - t) / width)
    b = _g((t - INNER) / width)
    return a / (a + b)


def smooth_step(t, a: float, b: float):
    """The same transition rescaled so it is 1 on ``[0, a]`` and 0 beyond ``b``."""
    t = np.abs(np.asarray(t, dtype=float))
    return transition(INNER + (t - a) * (OUTER - INNER) / (b - a))


@dataclass(frozen=True, eq=False)
class DyadicPartition:
    """Multipliers for blocks ``-1..J_max`` sampled on the real-FFT frequencies.

    ``multipliers[j + 1]`` belongs to block ``j``.  Block ``J_max`` is the tail
    ``1 - chi(2^-J_max omega)``, which closes the sum exactly.
    """

    spec: GridSpec
    J_max: int
    multipliers: np.ndarray

    @property
    def indices(self) -> range:
        return range(-1, self.J_max + 1)

    @property
    def n_blocks(self) -> int:
        return self.J_max + 2

    def multiplier(self, j: int) -> np.ndarray:
        self._check(j)
        return self.multipliers[j + 1]

    def full_multiplier(self, j: int) -> np.ndarray:
        """Multiplier over ``k in [-N/2, N/2)`` (the layout used by the full FFT, fftshifted)."""
        m = self.multiplier(j)
        N = self.spec.N
        k = np.arange(-N // 2, N // 2)
        return m[np.abs(k)]

    def _check(self, j: int) -> None:
        if not (-1 <= j <= self.J_max):
            raise ParameterError(f"block index {j} outside [-1, {self.J_max}]")

    def default_fit_range(self) -> tuple[int, int]:
        return 2, self.J_max - 2


_partition_cache: dict = {}


def build_partition(spec: GridSpec) -> DyadicPartition:
    """Littlewood-Paley partition of unity for ``spec`` (cached per grid)."""
    hit = _partition_cache.get(spec)
    if hit is not None:
        return hit
    omega = spec.omega
    nyquist = omega[-1]
    if nyquist < OUTER * 2.0:
        raise GridError(
            f"grid N={spec.N}, L={spec.L} resolves frequencies up to {nyquist:.3g}; "
            "the first annulus needs 8/3")
    # first j whose annulus starts above the Nyquist frequency; the block below it is the tail
    j_first_empty = int(math.ceil(math.log2(nyquist / INNER)))
    while INNER * 2.0 ** j_first_empty <= nyquist:
        j_first_empty += 1
    J_max = j_first_empty - 1
    rows = [transition(omega)]
    for j in range(J_max):
        rows.append(transition(omega / 2.0 ** (j + 1)) - transition(omega / 2.0 ** j))
    rows.append(1.0 - transition(omega / 2.0 ** J_max))
    mult = np.array(rows)
    mult.setflags(write=False)
    part = DyadicPartition(spec, J_max, mult)
    _partition_cache[spec] = part
    return part


@dataclass(frozen=True)
class BesovParams:
    alpha: float
    p: float = math.inf
    q: float = math.inf

    def __post_init__(self):
        if not (self.p >= 1 and self.q >= 1):
            raise ParameterError(f"Besov p, q must be >= 1, got p={self.p}, q={self.q}")


def _check_part(f: GridFunction, part: DyadicPartition) -> None:
    if f.spec != part.spec:
        raise GridError(f"partition built for {part.spec}, function lives on {f.spec}")


def block_stack_array(values: np.ndarray, part: DyadicPartition) -> np.ndarray:
    """All blocks of ``values`` (shape ``(N, d)``) as an array ``(J_max+2, N, d)``."""
    N = part.spec.N
    F = np.fft.rfft(values, axis=0)
    spectra = part.multipliers[:, :, None] * F[None, :, :]
    return np.fft.irfft(spectra, n=N, axis=1)


def block_stack(f: GridFunction, part: DyadicPartition) -> np.ndarray:
    _check_part(f, part)
    return block_stack_array(f.values, part)


def lp_block(f: GridFunction, part: DyadicPartition, j: int) -> GridFunction:
    """Littlewood-Paley block ``Delta_j f``."""
    _check_part(f, part)
    m = part.multiplier(j)
    F = np.fft.rfft(f.values, axis=0)
    return GridFunction(f.spec, np.fft.irfft(m[:, None] * F, n=f.spec.N, axis=0))


def block_norms(f: GridFunction, part: DyadicPartition, p: float) -> np.ndarray:
    """``||Delta_j f||_{L^p}`` for ``j = -1..J_max``."""
    blocks = block_stack(f, part)
    return lp_norm_array(blocks, f.spec.dx, p)


def block_norms_batch(rows: np.ndarray, part: DyadicPartition, p: float) -> np.ndarray:
    """Block norms of many scalar functions at once; ``rows`` is ``(K, N)``, result ``(K, J_max+2)``."""
    N = part.spec.N
    F = np.fft.rfft(rows, axis=1)
    out = np.empty((rows.shape[0], part.n_blocks))
    for b in range(part.n_blocks):
        blk = np.fft.irfft(F * part.multipliers[b][None, :], n=N, axis=1)
        out[:, b] = lp_norm_array(blk[..., None], part.spec.dx, p)
    return out


def aggregate(norms: np.ndarray, alpha: float, q: float, J_max: int) -> np.ndarray:
    """``l^q`` aggregation of ``2^{j alpha} * norms`` over the last axis (blocks ``-1..J_max``)."""
    j = np.arange(-1, J_max + 1)
    w = 2.0 ** (j * alpha) * norms
    if math.isinf(q):
        return np.max(w, axis=-1)
    return np.sum(w ** q, axis=-1) ** (1.0 / q)


def besov_norm(f: GridFunction, part: DyadicPartition, bp: BesovParams) -> float:
    """``|| (2^{j alpha} ||Delta_j f||_p)_j ||_{l^q}`` over the finite block range."""
    return float(aggregate(block_norms(f, part, bp.p), bp.alpha, bp.q, part.J_max))


def besov(f: GridFunction, part: DyadicPartition, alpha: float, p: float = math.inf,
          q: float = math.inf) -> float:
    return besov_norm(f, part, BesovParams(alpha, p, q))


@dataclass(frozen=True)
class RegularityFit:
    alpha: float
    stderr: float
    js: np.ndarray
    log2_norms: np.ndarray


def fit_regularity(f: GridFunction, part: DyadicPartition, p: float = math.inf,
                   j_range: tuple[int, int] | None = None) -> RegularityFit:
    """Least-squares fit of ``log2 ||Delta_j f||_p`` against ``j``; slope sign flipped."""
    norms = block_norms(f, part, p)
    return fit_from_norms(norms, part, j_range)


def fit_from_norms(norms: np.ndarray, part: DyadicPartition,
                   j_range: tuple[int, int] | None = None) -> RegularityFit:
    lo, hi = j_range if j_range is not None else part.default_fit_range()
    lo, hi = max(lo, -1), min(hi, part.J_max)
    js = np.arange(lo, hi + 1)
    vals = norms[js + 1]
    floor = 1e-13 * max(float(np.max(norms)), 1e-300)
    keep = vals > floor
    if np.count_nonzero(keep) < 4:
        raise EstimationError(
            f"regularity fit needs at least 4 nonzero blocks in [{lo}, {hi}], found {np.count_nonzero(keep)}")
    js, y = js[keep], np.log2(vals[keep])
    A = np.column_stack([js, np.ones_like(js, dtype=float)])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    dof = max(len(js) - 2, 1)
    s2 = float(resid @ resid) / dof
    se = math.sqrt(s2 / float(np.sum((js - js.mean()) ** 2)))
    return RegularityFit(alpha=-float(coef[0]), stderr=se, js=js, log2_norms=y)


def estimate_regularity(f: GridFunction, part: DyadicPartition, p: float = math.inf,
                        j_range: tuple[int, int] | None = None) -> float:
    """Empirical Besov regularity: minus the slope of ``log2 ||Delta_j f||_p`` in ``j``."""
    return fit_regularity(f, part, p, j_range).alpha


# ---------------------------------------------------------------------------
# spectral utilities shared by the probes and the models


def truncate(f: GridFunction, cut: float) -> GridFunction:
    """Hard spectral truncation: drop every frequency with ``|omega| > cut``."""
    F = np.fft.rfft(f.values, axis=0)
    F[f.spec.omega > cut] = 0.0
    return GridFunction(f.spec, np.fft.irfft(F, n=f.spec.N, axis=0))


def top_octave_fraction(f: GridFunction) -> float:
    """Share of spectral energy above half the Nyquist frequency."""
    F = np.fft.rfft(f.values, axis=0)
    e = np.sum(np.abs(F) ** 2, axis=1)
    e[1:-1] *= 2.0
    total = float(np.sum(e))
    if total == 0.0:
        return 0.0
    omega = f.spec.omega
    return float(np.sum(e[omega > omega[-1] / 2.0])) / total


def synthetic_field(spec: GridSpec, alpha: float, rng: np.random.Generator, cut: float | None = None,
                    channels: int = 1, normalize: bool = True) -> GridFunction:
    """Random trigonometric polynomial whose block norms decay like ``2^{-j alpha}``.

    Fourier coefficients are complex Gaussians with amplitude ``|omega|^{-alpha-1/2}``,
    so the energy per octave scales like ``2^{-2 j alpha}``.  Frequencies above
    ``cut`` (default: half the Nyquist frequency) are left empty.
    """
    omega = spec.omega
    if cut is None:
        cut = omega[-1] / 2.0
    K = len(omega)
    amp = np.zeros(K)
    live = (omega > 0) & (omega <= cut)
    amp[live] = omega[live] ** (-alpha - 0.5)
    Z = rng.standard_normal((K, channels)) + 1j * rng.standard_normal((K, channels))
    vals = np.fft.irfft(amp[:, None] * Z, n=spec.N, axis=0)
    if normalize:
        vals /= np.max(np.abs(vals))
    return GridFunction(spec, vals)


def lacunary_field(spec: GridSpec, alpha: float, rng: np.random.Generator, per_block: int = 3,
                   j_range: tuple[int, int] | None = None) -> GridFunction:
    """Sum of a few random-phase cosines per block, each block with sup norm ``<= 2^{-j alpha}``.

    Frequencies sit where the block multiplier equals 1, so ``Delta_j`` sees
    exactly its own cosines.  Unlike Gaussian series there is no
    ``sqrt(log)`` growth of block maxima, so the measured slope is ``alpha``.
    Blocks default to ``1 .. J_max - 2``.
    """
    part = build_partition(spec)
    lo, hi = (1, part.J_max - 2) if j_range is None else j_range
    x = spec.x
    vals = np.zeros(spec.N)
    for j in range(lo, hi + 1):
        pure = np.nonzero(part.multiplier(j) > 1 - 1e-12)[0]
        pure = pure[(pure > 0) & (pure < spec.N // 2)]
        if pure.size == 0:
            continue
        ks = rng.choice(pure, size=min(per_block, pure.size), replace=False)
        for k in ks:
            vals += 2.0 ** (-j * alpha) / len(ks) * np.cos(spec.omega[k] * x + rng.uniform(0, 2 * np.pi))
    return GridFunction(spec, vals)
