"""Convolutional rough paths: the pair ``(xi, mu)`` with ``mu`` standing for ``pi(phi * xi, xi)``.

Three ways to obtain ``mu``: the deterministic lift of a band-limited signal,
the limit of random series truncated along a schedule ``m_n``, and (for
regular kernels) the reduction to the step kernel.  The ill-posedness probe
shows what goes wrong when none of these applies.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from . import _core
from ._gauss import sample_fgn
from .errors import EstimationError, NumericalError, ParameterError, SmoothnessError, SpecError
from .gridfn import GridFunction, GridSpec, check_compatible
from .kernels import bump, fractional_kernel, kernel_gamma, kernel_id, step_kernel
from .paracalc import convolve, resonant
from .spectral import (DyadicPartition, besov, block_norms_batch, build_partition, estimate_regularity,
                       top_octave_fraction, truncate)

log = logging.getLogger(__name__)

SMOOTH_TOL = 1e-8


@dataclass(frozen=True)
class ConvRoughPath:
    """Noise ``xi`` (``m`` channels) and resonant datum ``mu`` (``m*m`` channels, row-major in ``(a, b)``)."""

    xi: GridFunction
    mu: GridFunction
    kernel_id: str
    besov_report: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.xi.spec != self.mu.spec:
            raise SpecError("xi and mu live on different grids")
        m = self.xi.channels
        if self.mu.channels != m * m:
            raise SpecError(f"mu needs {m * m} channels for {m} noise channels, got {self.mu.channels}")

    @property
    def channels(self) -> int:
        return self.xi.channels

    def mu_pair(self, a: int, b: int) -> GridFunction:
        """``pi(phi * xi_a, xi_b)``."""
        m = self.channels
        return GridFunction(self.mu.spec, self.mu.values[:, a * m + b])


def resonant_datum(phi: GridFunction, xi: GridFunction, part: DyadicPartition) -> GridFunction:
    """Channel-pairwise ``pi(phi * xi_a, xi_b)``; ``phi`` has one channel or one per noise channel."""
    check_compatible(phi, xi)
    m = xi.channels
    w = convolve(phi, xi).values
    W = np.repeat(w, m, axis=1)
    X = np.tile(xi.values, (1, m))
    return resonant(GridFunction(xi.spec, W), GridFunction(xi.spec, X), part)


def _safe_regularity(f: GridFunction, part: DyadicPartition, p: float = math.inf) -> float:
    try:
        return estimate_regularity(f, part, p)
    except EstimationError:
        return math.nan


def lift_smooth(phi: GridFunction, xi: GridFunction, part: DyadicPartition) -> ConvRoughPath:
    """Canonical lift of a band-limited signal: ``mu = pi(phi * xi, xi)`` computed directly."""
    frac = top_octave_fraction(xi)
    if frac > SMOOTH_TOL:
        raise SmoothnessError(
            f"noise has top-octave energy fraction {frac:.2e} > {SMOOTH_TOL:g}; "
            "mollify it or supply mu from a stochastic construction")
    mu = resonant_datum(phi, xi, part)
    report = {"xi_regularity": _safe_regularity(xi, part), "mu_regularity": _safe_regularity(mu, part)}
    return ConvRoughPath(xi, mu, kernel_id(phi), report)


# ---------------------------------------------------------------------------
# random series


@dataclass(frozen=True, eq=False)
class SeriesExpansion:
    """Coefficient functions ``a_k`` of ``xi = sum_k a_k zeta_k`` on a grid.

    ``rows`` has shape ``(K, N)``.  For fBM the two coefficient families are
    interleaved and ``family`` tells them apart.  ``norms`` are the
    ``B^{beta-1}_{p,1}`` norms that drive the schedule; ``norms_pp`` use
    ``q = p``.
    """

    spec: GridSpec
    kind: str
    rows: np.ndarray
    norms: np.ndarray
    norms_pp: np.ndarray
    family: np.ndarray
    frequencies: np.ndarray
    beta: float
    p: float
    hurst: float | None = None
    meta: dict = field(default_factory=dict)

    @property
    def size(self) -> int:
        return self.rows.shape[0]

    def functions(self) -> list[GridFunction]:
        return [GridFunction(self.spec, r) for r in self.rows]

    def partial_sum(self, zeta: np.ndarray, m: int) -> GridFunction:
        return GridFunction(self.spec, zeta[:m] @ self.rows[:m])


def _coefficient_norms(rows: np.ndarray, part: DyadicPartition, beta: float, p: float):
    j = np.arange(-1, part.J_max + 1)
    w = 2.0 ** ((beta - 1.0) * j)
    q1 = np.empty(rows.shape[0])
    qp = np.empty(rows.shape[0])
    for s in range(0, rows.shape[0], 256):
        bn = block_norms_batch(rows[s:s + 256], part, p) * w[None, :]
        q1[s:s + 256] = bn.sum(axis=1)
        qp[s:s + 256] = (bn ** p).sum(axis=1) ** (1.0 / p)
    return q1, qp


def _check_chi(spec: GridSpec, chi: GridFunction) -> None:
    if chi.spec != spec:
        raise SpecError("localising function lives on a different grid")
    if np.max(np.abs(chi.values[spec.N // 2:])) > 0:
        raise ParameterError("localising function must be supported in [0, L/2]")


def default_chi(spec: GridSpec) -> GridFunction:
    """Smooth bump on ``[0, L/2]``: 1 on ``[L/8, 3L/8]``."""
    return bump(spec, spec.L / 4, spec.L / 8, spec.L / 4)


def _resolvable(freqs: np.ndarray, spec: GridSpec) -> int:
    """Number of leading frequencies that stay clear of the top octave."""
    limit = 0.49 * spec.omega[-1]
    return int(np.searchsorted(freqs, limit, side="right"))


def bm_coefficients(spec: GridSpec, chi: GridFunction | None = None, N_max: int | None = None,
                    beta: float = 0.45, p: float = 4.0) -> SeriesExpansion:
    """Localised derivative of the Karhunen-Loeve series of Brownian motion on ``[0, L/2]``.

    ``a_n(t) = sqrt(2/T0) cos((n - 1/2) pi t / T0) chi(t)`` with ``T0 = L/2``.
    ``N_max`` defaults to every term whose frequency stays below half the
    Nyquist frequency.
    """
    if not 0 < beta < 1:
        raise ParameterError(f"beta must lie in (0, 1), got {beta}")
    chi = default_chi(spec) if chi is None else chi
    _check_chi(spec, chi)
    T0 = spec.L / 2
    n_all = np.arange(1, spec.N + 1)
    freqs = (n_all - 0.5) * math.pi / T0
    K = _resolvable(freqs, spec) if N_max is None else int(N_max)
    freqs = freqs[:K]
    x = spec.signed_x
    rows = math.sqrt(2.0 / T0) * np.cos(np.outer(freqs, x)) * chi.scalar[None, :]
    part = build_partition(spec)
    q1, qp = _coefficient_norms(rows, part, beta, p)
    return SeriesExpansion(spec, "bm", rows, q1, qp, np.zeros(K, dtype=int), freqs, beta, p)


def _bessel_zeros(nu: float, count: int) -> np.ndarray:
    zeros, failed = _core.bessel_zeros(nu, count)
    if failed >= 0:
        raise NumericalError(f"Newton iteration for zero #{failed + 1} of J_{nu:g} did not converge")
    return zeros


def _fbm_unit_weights(H: float, count: int):
    """Zeros and unnormalised weights on the unit interval (constant ``c_H = 1``)."""
    x = _bessel_zeros(-H, count)
    y = _bessel_zeros(1.0 - H, count)
    sig2 = x ** (-2 * H) / _core.bessel_j(1.0 - H, x) ** 2
    tau2 = y ** (-2 * H) / _core.bessel_j(-H, y) ** 2
    return x, y, sig2, tau2


def _unit_variance(t: float, x, y, sig2, tau2) -> float:
    return float(np.sum((np.sin(x * t) / x) ** 2 * sig2) + np.sum(((1 - np.cos(y * t)) / y) ** 2 * tau2))


def fbm_constant(H: float, t: float = 0.5, count: int = 20000) -> float:
    """``c_H`` from matching the series variance at ``t`` (unit interval) to ``t^{2H}``.

    Uses ``count`` terms of each family plus the averaged tail
    ``sum_{n > count} c n^{-1-2H}`` estimated from the last terms.
    """
    x, y, sig2, tau2 = _fbm_unit_weights(H, count)
    v = _unit_variance(t, x, y, sig2, tau2)
    # terms behave like A n^{-1-2H} on average; fit A from the last quarter of both sums
    n = np.arange(1, count + 1)
    tail_terms = (np.sin(x * t) / x) ** 2 * sig2 + ((1 - np.cos(y * t)) / y) ** 2 * tau2
    q = slice(3 * count // 4, count)
    A = float(np.mean(tail_terms[q] * n[q] ** (1 + 2 * H)))
    v += A * count ** (-2 * H) / (2 * H)
    return t ** (2 * H) / v


def fbm_coefficients(spec: GridSpec, H: float, chi: GridFunction | None = None, N_max: int | None = None,
                     beta: float | None = None, p: float = 4.0) -> SeriesExpansion:
    """Localised derivative of the Bessel-zero series of fBM on ``[0, L/2]``.

    Families ``sigma_n cos(x_n t/T0) chi`` and ``tau_n sin(y_n t/T0) chi`` scaled by
    ``T0^{H-1}``, interleaved.  ``N_max`` counts terms per family.
    """
    if not 0 < H < 1:
        raise ParameterError(f"Hurst index must lie in (0, 1), got {H}")
    beta = H - 0.05 if beta is None else beta
    if not 0 < beta < 1:
        raise ParameterError(f"beta must lie in (0, 1), got {beta}")
    chi = default_chi(spec) if chi is None else chi
    _check_chi(spec, chi)
    T0 = spec.L / 2
    guess = int(0.49 * spec.omega[-1] * T0 / math.pi) + 2 if N_max is None else int(N_max)
    x, y, sig2, tau2 = _fbm_unit_weights(H, guess)
    if N_max is None:
        guess = min(_resolvable(x / T0, spec), _resolvable(y / T0, spec))
        x, y, sig2, tau2 = x[:guess], y[:guess], sig2[:guess], tau2[:guess]
    K = guess
    c_H = fbm_constant(H)
    sig = np.sqrt(c_H * sig2)
    tau = np.sqrt(c_H * tau2)
    t = spec.signed_x
    scale = T0 ** (H - 1.0)
    rows = np.empty((2 * K, spec.N))
    rows[0::2] = scale * sig[:, None] * np.cos(np.outer(x / T0, t))
    rows[1::2] = scale * tau[:, None] * np.sin(np.outer(y / T0, t))
    rows *= chi.scalar[None, :]
    family = np.tile([1, 2], K)
    freqs = np.empty(2 * K)
    freqs[0::2], freqs[1::2] = x / T0, y / T0
    part = build_partition(spec)
    q1, qp = _coefficient_norms(rows, part, beta, p)
    t_cal = spec.L / 4
    trunc_var = T0 ** (2 * H) * c_H * _unit_variance(t_cal / T0, x, y, sig2, tau2)
    meta = {"c_H": c_H, "truncated_variance": trunc_var, "target_variance": t_cal ** (2 * H)}
    return SeriesExpansion(spec, "fbm", rows, q1, qp, family, freqs, beta, p, hurst=H, meta=meta)


@dataclass(frozen=True)
class Schedule:
    """Truncation levels ``m_1 <= m_2 <= ...``.

    ``exhausted`` is set when a level hit the last built coefficient.
    ``beyond_budget`` lists the levels ``n`` for which the tail past the built
    range (extrapolated from a power-law fit) already exceeds ``n^-6``, so the
    finite-tail level understates the one an infinite series would need.
    """

    levels: list
    exhausted: bool
    beyond_budget: list
    tail_estimate: float


def _extrapolated_tail(c: np.ndarray) -> float:
    K = len(c)
    if K < 16:
        return math.nan
    k = np.arange(K // 2, K) + 1.0
    vals = c[K // 2:]
    good = vals > 0
    if good.sum() < 4:
        return 0.0
    slope, icpt = np.polyfit(np.log(k[good]), np.log(vals[good]), 1)
    s = -slope
    if s <= 1:
        return math.inf
    return float(math.exp(icpt) * K ** (1 - s) / (s - 1))


def truncation_schedule(exp: SeriesExpansion, n_levels: int, use: str = "q1") -> Schedule:
    """``m_n = min{K >= m_{n-1} : sum_{k > K} ||a_k||^2 <= n^-6}`` with the tail cut at the built range.

    ``use`` picks the coefficient norm: ``"q1"`` (the summability norm) or ``"pp"``.
    """
    norms = exp.norms if use == "q1" else exp.norms_pp
    c = norms ** 2
    K = len(c)
    # tail[K'] = sum_{k > K'} c_k with 1-based k
    tail = np.concatenate([np.cumsum(c[::-1])[::-1], [0.0]])
    extra = _extrapolated_tail(c)
    levels, beyond = [], []
    m = 1
    for n in range(1, n_levels + 1):
        bound = float(n) ** -6
        cand = np.nonzero(tail[m:] <= bound)[0]
        m = m + int(cand[0]) if cand.size else K
        levels.append(m)
        if not extra <= bound:
            beyond.append(n)
    exhausted = bool(levels and levels[-1] >= K)
    if exhausted:
        log.info("truncation schedule reached the last built coefficient (%d)", K)
    return Schedule(levels, exhausted, beyond, extra)


def split_seeds(master: int, count: int) -> list[np.random.Generator]:
    """Independent generators for ensemble members: ``SeedSequence(master).spawn(count)``."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(master).spawn(count)]


@dataclass(frozen=True)
class StochasticLift:
    path: ConvRoughPath
    diagnostics: list
    schedule: Schedule
    levels_mu: list = field(default_factory=list, repr=False)


def stochastic_resonant(exp: SeriesExpansion, phi: GridFunction, seed: int, n_levels: int,
                        gamma: float | None = None, schedule: Schedule | None = None,
                        zeta: np.ndarray | None = None, keep_levels: bool = False) -> StochasticLift:
    """Random lift ``mu = lim pi(phi * xi^n, xi^n)`` along the truncation schedule.

    ``d_n = ||mu^{n+1} - mu^n||`` in ``B^{2 beta + gamma - 2}_{p/2, inf}`` for
    ``n = 1..n_levels-1``.  ``gamma`` defaults to the measured kernel
    regularity minus 0.05.  ``zeta`` overrides the Gaussian draws.
    """
    if n_levels < 1:
        raise ParameterError("need at least one level")
    part = build_partition(exp.spec)
    if gamma is None:
        gamma = kernel_gamma(phi, part) - 0.05
    schedule = truncation_schedule(exp, n_levels) if schedule is None else schedule
    if zeta is None:
        zeta = np.random.default_rng(seed).standard_normal(exp.size)
    zeta = np.asarray(zeta, dtype=float)
    idx = 2 * exp.beta + gamma - 2
    mus, diags = [], []
    xi = None
    prev = None
    for m in schedule.levels[:n_levels]:
        xi = exp.partial_sum(zeta, m)
        mu = resonant_datum(phi, xi, part)
        if prev is not None:
            diags.append(besov(mu - prev, part, idx, exp.p / 2, math.inf))
        if keep_levels:
            mus.append(mu)
        prev = mu
    report = {"xi_regularity": _safe_regularity(xi, part), "mu_regularity": _safe_regularity(prev, part),
              "mu_index": idx, "levels": list(schedule.levels[:n_levels]), "exhausted": schedule.exhausted}
    path = ConvRoughPath(xi, prev, kernel_id(phi), report)
    return StochasticLift(path, diags, schedule, mus)


# ---------------------------------------------------------------------------
# regular kernels and the counterexample


def heaviside_product(psi: GridFunction) -> GridFunction:
    """``psi * 1_[0, inf)`` on the grid, with the midpoint value ``psi(0)/2`` at the jump."""
    v = psi.values.copy()
    v[psi.spec.N // 2:] = 0.0
    v[0] *= 0.5
    return GridFunction(psi.spec, v)


def regular_reduction_check(psi: GridFunction, chi: GridFunction, xi: GridFunction,
                            part: DyadicPartition, p: float = 4.0):
    """Defect between ``pi(phi * xi, xi)`` and ``psi(0) pi((1_[0,inf) chi) * xi, xi)`` for ``phi = psi 1_[0,inf)``.

    Returns ``(defect, report)``; the report holds measured ``B_{p/2}``
    regularities of the defect and of both resonant terms.
    """
    psi0 = float(psi.values[0, 0])
    if psi0 == 0.0:
        raise ParameterError("the reduction needs psi(0) != 0")
    if xi.channels != 1:
        raise ParameterError("regular_reduction_check works on scalar noise")
    phi = heaviside_product(psi)
    step = heaviside_product(chi)
    full = resonant(convolve(phi, xi), xi, part)
    reduced = resonant(convolve(step, xi), xi, part)
    defect = full - reduced * psi0
    report = {
        "defect_regularity": _safe_regularity(defect, part, p / 2),
        "full_regularity": _safe_regularity(full, part, p / 2),
        "reduced_regularity": _safe_regularity(reduced, part, p / 2),
        "psi0": psi0,
    }
    return defect, report


@dataclass(frozen=True)
class ProbeReport:
    hurst: float
    r_exp: float
    norm_index: float
    levels: list
    singular_slopes: np.ndarray
    step_slopes: np.ndarray
    singular_norms: np.ndarray
    step_norms: np.ndarray

    @property
    def singular_slope(self) -> float:
        return float(np.median(self.singular_slopes))

    @property
    def step_slope(self) -> float:
        return float(np.median(self.step_slopes))

    def as_dict(self) -> dict:
        return {"hurst": self.hurst, "r_exp": self.r_exp, "norm_index": self.norm_index,
                "levels": list(self.levels), "singular_slope": self.singular_slope,
                "step_slope": self.step_slope, "seeds": len(self.singular_slopes)}


def fbm_noise(spec: GridSpec, H: float, rng: np.random.Generator, chi: GridFunction | None = None,
              size: int = 1) -> np.ndarray:
    """Localised fBM derivatives: fGn increments over ``dx`` times ``chi``; shape ``(size, N)``."""
    chi = default_chi(spec) if chi is None else chi
    inc = sample_fgn(rng, spec.N, H, spec.dx, size)
    return inc / spec.dx * chi.scalar[None, :]


def _probe_seed(spec: GridSpec, H: float, phis: dict, cuts: np.ndarray, idx: float, p: float,
                rng: np.random.Generator) -> dict:
    part = build_partition(spec)
    noise = fbm_noise(spec, H, rng, size=2)
    xi1 = GridFunction(spec, noise[0])
    xi2 = GridFunction(spec, noise[1])
    out = {k: np.empty(len(cuts)) for k in phis}
    for i, cut in enumerate(cuts):
        a, b = truncate(xi1, cut), truncate(xi2, cut)
        for k, phi in phis.items():
            out[k][i] = besov(resonant(convolve(phi, a), b, part), part, idx, p / 2, math.inf)
    return out


def illposedness_probe(H: float, r_exp: float, seeds: int = 20, spec: GridSpec | None = None,
                       levels=(1, 2, 3, 4, 5, 6), master_seed: int = 0, p: float = 4.0,
                       beta_margin: float = 0.01, jobs: int = 1) -> ProbeReport:
    """Growth of ``pi(phi * xi1, xi2)`` under spectral mollification for two independent fBM noises.

    Level ``l`` truncates both noises at frequency ``2^{J_max - l}``.  Norms are
    taken in ``B^{2 beta - 1}_{p/2, inf}`` with ``beta = H - beta_margin``, the
    space where the step-kernel product lives.  Slopes are fitted in
    ``log2 norm`` against ``log2 cut``: a positive slope means divergence.
    Seeds draw from independent spawned streams, so ``jobs`` does not change
    the result.
    """
    if not 0.5 < H < 2.0 / 3.0:
        raise ParameterError(f"probe needs H in (1/2, 2/3), got {H}")
    if not 4.0 / 3.0 - H < r_exp < 2.0 - 2.0 * H:
        raise ParameterError(f"probe needs r_exp in ({4 / 3 - H:.4f}, {2 - 2 * H:.4f}), got {r_exp}")
    spec = GridSpec(4096, 2.0) if spec is None else spec
    part = build_partition(spec)
    T = spec.L / 8
    phis = {"singular": fractional_kernel(spec, r_exp, T), "step": step_kernel(spec, T)}
    idx = 2 * (H - beta_margin) - 1
    levels = list(levels)
    cuts = np.array([2.0 ** (part.J_max - lv) for lv in levels])
    rngs = split_seeds(master_seed, seeds)
    task = partial(_probe_seed, spec, H, phis, cuts, idx, p)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(task, rngs))
    else:
        rows = [task(rng) for rng in rngs]
    norms = {k: np.array([r[k] for r in rows]) for k in phis}
    lc = np.log2(cuts)
    slopes = {k: np.polyfit(lc, np.log2(v).T, 1)[0] for k, v in norms.items()}
    return ProbeReport(H, r_exp, idx, levels, slopes["singular"], slopes["step"],
                       norms["singular"], norms["step"])
