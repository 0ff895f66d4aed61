"""Sampled functions on a uniform periodic grid.

A ``GridFunction`` stores ``N`` samples of a (possibly vector-valued) function at
``x_i = i*dx`` on the circle of length ``L``.  Indices ``i >= N/2`` represent the
negative times ``x_i - L``; kernels and noises live on ``[0, L/2]`` so that
circular convolution agrees with convolution on the line over the window of
interest.
"""
from __future__ import annotations

import io
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import CapabilityError, GridError, ParameterError, SpecError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class GridSpec:
    N: int
    L: float

    def __post_init__(self):
        N = int(self.N)
        if N != self.N or N < 64 or N & (N - 1):
            raise GridError(f"N must be a power of two >= 64, got {self.N}")
        if not (self.L > 0 and math.isfinite(self.L)):
            raise GridError(f"L must be positive and finite, got {self.L}")
        object.__setattr__(self, "N", N)
        object.__setattr__(self, "L", float(self.L))

    @property
    def dx(self) -> float:
        return self.L / self.N

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.N) * self.dx

    @property
    def signed_x(self) -> np.ndarray:
        """Coordinates in ``[-L/2, L/2)``: upper half of the grid is negative time."""
        i = np.arange(self.N)
        return np.where(i < self.N // 2, i, i - self.N) * self.dx

    @property
    def omega(self) -> np.ndarray:
        """Nonnegative angular frequencies of the real FFT, ``2*pi*k/L``."""
        return 2.0 * np.pi * np.arange(self.N // 2 + 1) / self.L

    def index(self, t: float) -> int:
        """Nearest grid index of time ``t`` (periodic)."""
        return int(round(t / self.dx)) % self.N


class GridFunction:
    """Immutable samples of an ``R^d``-valued function on a ``GridSpec``."""

    __slots__ = ("spec", "values")

    def __init__(self, spec: GridSpec, values):
        arr = np.array(values, dtype=float)
        if arr.ndim == 1:
            arr = arr[:, None]
        if arr.ndim != 2 or arr.shape[0] != spec.N:
            raise SpecError(f"values must have shape (N, d) with N={spec.N}, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ParameterError("grid function values must be finite")
        arr.setflags(write=False)
        self.spec = spec
        self.values = arr

    @classmethod
    def from_callable(cls, spec: GridSpec, fn: Callable[[np.ndarray], np.ndarray]) -> "GridFunction":
        return cls(spec, fn(spec.x))

    @classmethod
    def constant(cls, spec: GridSpec, c: float, channels: int = 1) -> "GridFunction":
        return cls(spec, np.full((spec.N, channels), float(c)))

    @classmethod
    def zeros(cls, spec: GridSpec, channels: int = 1) -> "GridFunction":
        return cls(spec, np.zeros((spec.N, channels)))

    @property
    def channels(self) -> int:
        return self.values.shape[1]

    @property
    def scalar(self) -> np.ndarray:
        """Sample vector of a single-channel function."""
        if self.channels != 1:
            raise SpecError(f"expected one channel, got {self.channels}")
        return self.values[:, 0]

    def sup(self) -> float:
        return lp_norm(self, math.inf)

    def with_values(self, values) -> "GridFunction":
        return GridFunction(self.spec, values)

    # arithmetic -----------------------------------------------------------
    def _operand(self, other):
        if isinstance(other, GridFunction):
            check_compatible(self, other)
            return other.values
        return other

    def __add__(self, other):
        return GridFunction(self.spec, self.values + self._operand(other))

    __radd__ = __add__

    def __sub__(self, other):
        return GridFunction(self.spec, self.values - self._operand(other))

    def __rsub__(self, other):
        return GridFunction(self.spec, self._operand(other) - self.values)

    def __mul__(self, other):
        return GridFunction(self.spec, self.values * self._operand(other))

    __rmul__ = __mul__

    def __truediv__(self, c):
        if isinstance(c, GridFunction):
            raise SpecError("division by a grid function is not supported")
        return GridFunction(self.spec, self.values / c)

    def __neg__(self):
        return GridFunction(self.spec, -self.values)

    def __repr__(self):
        return f"GridFunction(N={self.spec.N}, L={self.spec.L}, channels={self.channels})"


def check_compatible(f: GridFunction, g: GridFunction) -> None:
    if f.spec != g.spec:
        raise SpecError(f"grid mismatch: {f.spec} vs {g.spec}")
    if f.channels != g.channels and 1 not in (f.channels, g.channels):
        raise SpecError(f"channel mismatch: {f.channels} vs {g.channels}")


def lp_norm(f: GridFunction, p: float) -> float:
    """Discrete ``L^p`` norm ``(dx * sum |f|^p)^(1/p)``; grid maximum for ``p = inf``."""
    return float(lp_norm_array(f.values, f.spec.dx, p))


def lp_norm_array(values: np.ndarray, dx: float, p: float, axis=-2):
    """``L^p`` norm of sample arrays shaped ``(..., N, d)``; reduces over ``axis`` and channels."""
    if not p >= 1:
        raise ParameterError(f"p must lie in [1, inf], got {p}")
    a = np.abs(values) if values.shape[-1] == 1 else np.sqrt(np.sum(values * values, axis=-1, keepdims=True))
    a = a[..., 0]
    axis = axis + 1 if axis < 0 else axis
    if math.isinf(p):
        return np.max(a, axis=axis)
    if p == 2:
        return np.sqrt(dx * np.sum(a * a, axis=axis))
    if p == 1:
        return dx * np.sum(a, axis=axis)
    # scale by the max to keep large p from overflowing
    m = np.max(a, axis=axis, keepdims=True)
    safe = np.where(m > 0, m, 1.0)
    s = np.sum((a / safe) ** p, axis=axis)
    return np.squeeze(safe, axis=axis) * (dx * s) ** (1.0 / p)


def grid_offset(spec: GridSpec, y: float) -> tuple[int, float]:
    """Nearest whole number of cells to ``y`` and the rounding applied."""
    m = int(round(y / spec.dx))
    return m, m * spec.dx - y


def shift(f: GridFunction, y: float) -> GridFunction:
    """Return ``f(. + y)`` with periodic wraparound; ``y`` is rounded to the grid."""
    m, rounding = grid_offset(f.spec, y)
    if rounding != 0.0 and abs(rounding) > 1e-12 * f.spec.dx:
        log.info("shift: y=%g rounded to %d cells (rounding %.3g)", y, m, rounding)
    return GridFunction(f.spec, np.roll(f.values, -m, axis=0))


def _dyadic_exponent(lam: float) -> int:
    if not lam > 0:
        raise ParameterError(f"dilation factor must be positive, got {lam}")
    k = round(math.log2(lam))
    if 2.0 ** k != lam:
        raise ParameterError(f"dilation factor must be a power of two, got {lam}")
    return int(k)


def dilate(f: GridFunction, lam: float) -> GridFunction:
    """``Lambda_lam f = f(lam * .)`` for dyadic ``lam``.

    For ``lam >= 1`` this is the index map ``i -> lam*i mod N``.  For ``lam < 1`` the
    samples that fall on the grid are copied and the others are filled by
    trigonometric interpolation of the periodic extension of ``f``.
    """
    k = _dyadic_exponent(lam)
    N = f.spec.N
    if k >= 0:
        idx = (np.arange(N) * (1 << k)) % N
        return GridFunction(f.spec, f.values[idx])
    s = 1 << (-k)
    if s > 64:
        raise ParameterError("dilation by less than 2**-6 is not supported")
    F = np.fft.rfft(f.values, axis=0)
    M = N * s
    G = np.zeros((M // 2 + 1, f.channels), dtype=complex)
    G[: N // 2] = F[: N // 2]
    G[N // 2] = 0.5 * F[N // 2]
    fine = np.fft.irfft(G, n=M, axis=0) * s
    out = fine[:N].copy()
    out[::s] = f.values[: N // s]
    return GridFunction(f.spec, out)


# ---------------------------------------------------------------------------
# vector fields


@dataclass(frozen=True)
class VectorField:
    """A map ``sigma: R^n -> L(R^m, R^n)`` with derivatives.

    ``derivs[k]`` evaluates the k-th derivative on an array of points shaped
    ``(N, n)`` and returns shape ``(N, n, m) + (n,)*k``.  Scalar builtins
    (``n = m = 1``) also expose elementwise callables via ``scalar(k)``.
    """

    name: str
    n: int
    m: int
    derivs: tuple
    epsilon: float = 1.0
    sup_bounds: tuple | None = None
    elementwise: tuple | None = field(default=None, compare=False)

    @property
    def order(self) -> int:
        return len(self.derivs) - 1

    def scalar(self, k: int) -> Callable[[np.ndarray], np.ndarray]:
        if self.elementwise is None:
            raise CapabilityError(f"{self.name} is not a scalar field")
        if k >= len(self.elementwise):
            raise CapabilityError(f"{self.name} provides derivatives up to order {self.order}, asked {k}")
        return self.elementwise[k]

    def cnorm(self, k: int, radius: float | None = None) -> float:
        """``max_{i<=k} sup |sigma^(i)|``, globally or over ``|x| <= radius``."""
        if k > self.order:
            raise CapabilityError(f"{self.name} provides derivatives up to order {self.order}, asked {k}")
        if radius is None and self.sup_bounds is not None:
            return float(max(self.sup_bounds[: k + 1]))
        if radius is None:
            return math.inf
        if self.n != 1:
            raise CapabilityError("radius-limited norms are only available for scalar fields")
        xs = np.linspace(-radius, radius, 20001)[:, None]
        return float(max(np.max(np.abs(self.derivs[i](xs))) for i in range(k + 1)) * 1.001)


def _scalar_field(name, eps, fns, sup_bounds):
    fns = tuple((lambda f: (lambda x: eps * f(x)))(fn) for fn in fns)

    def lift(fn, k):
        return lambda pts: fn(pts[:, 0]).reshape((-1,) + (1,) * (2 + k))

    derivs = tuple(lift(fn, k) for k, fn in enumerate(fns))
    bounds = None if sup_bounds is None else tuple(abs(eps) * b for b in sup_bounds)
    return VectorField(name=name, n=1, m=1, derivs=derivs, epsilon=eps,
                       sup_bounds=bounds, elementwise=fns)


def _dense_sup(fn, lo=-60.0, hi=60.0, n=480001):
    xs = np.linspace(lo, hi, n)
    return float(np.max(np.abs(fn(xs)))) * 1.001


def _rational_derivs():
    return (
        lambda x: x / (1 + x * x),
        lambda x: (1 - x * x) / (1 + x * x) ** 2,
        lambda x: 2 * x * (x * x - 3) / (1 + x * x) ** 3,
        lambda x: -6 * (x ** 4 - 6 * x * x + 1) / (1 + x * x) ** 4,
    )


def _tanh_derivs():
    def d2(x):
        t = np.tanh(x)
        return -2 * t * (1 - t * t)

    def d3(x):
        t = np.tanh(x)
        return -2 * (1 - t * t) * (1 - 3 * t * t)

    return (np.tanh, lambda x: 1 - np.tanh(x) ** 2, d2, d3)


BUILTIN_FIELDS = ("sin", "rational", "tanh", "linear", "zero")


def builtin_field(kind: str, epsilon: float = 1.0) -> VectorField:
    """One of the closed-form scalar fields ``eps*sin``, ``eps*x/(1+x^2)``,
    ``eps*tanh``, ``eps*x`` (``linear``) or the zero field."""
    eps = float(epsilon)
    if kind == "sin":
        fns = (np.sin, np.cos, lambda x: -np.sin(x), lambda x: -np.cos(x))
        return _scalar_field("sin", eps, fns, (1.0, 1.0, 1.0, 1.0))
    if kind == "rational":
        fns = _rational_derivs()
        return _scalar_field("rational", eps, fns, tuple(_dense_sup(fn) for fn in fns))
    if kind == "tanh":
        fns = _tanh_derivs()
        return _scalar_field("tanh", eps, fns, tuple(_dense_sup(fn) for fn in fns))
    if kind == "linear":
        fns = (lambda x: x, np.ones_like, np.zeros_like, np.zeros_like)
        return _scalar_field("linear", eps, fns, None)
    if kind == "zero":
        z = np.zeros_like
        return _scalar_field("zero", 0.0, (z, z, z, z), (0.0, 0.0, 0.0, 0.0))
    raise ParameterError(f"unknown vector field kind {kind!r}; expected one of {BUILTIN_FIELDS}")


def custom_field(name: str, fns: Sequence[Callable], sup_bounds=None) -> VectorField:
    """Scalar field from elementwise callables ``[f, f', f'', ...]``; ``f(0)`` must vanish."""
    if abs(float(np.asarray(fns[0](np.zeros(1)))[0])) > 1e-14:
        raise ParameterError("vector fields must vanish at the origin")
    return _scalar_field(name, 1.0, tuple(fns), sup_bounds)


def apply_field(sigma: VectorField, u: GridFunction, derivative_order: int = 0) -> GridFunction:
    """Pointwise ``sigma^(k)(u(x_i))`` flattened to ``n*m*n^k`` channels."""
    if u.channels != sigma.n:
        raise SpecError(f"field expects {sigma.n} channels, u has {u.channels}")
    if derivative_order < 0 or derivative_order > sigma.order:
        raise CapabilityError(
            f"{sigma.name} provides derivatives up to order {sigma.order}, asked {derivative_order}")
    out = sigma.derivs[derivative_order](u.values)
    return GridFunction(u.spec, np.asarray(out, dtype=float).reshape(u.spec.N, -1))


# ---------------------------------------------------------------------------
# CSV serialization


def to_csv(f: GridFunction, columns: Sequence[str] | None = None) -> str:
    names = list(columns) if columns else [f"v{i + 1}" for i in range(f.channels)]
    buf = io.StringIO(newline="")
    buf.write(",".join(["x"] + names) + "\n")
    data = np.column_stack([f.spec.x, f.values])
    for row in data.tolist():
        buf.write(",".join(format(v, ".17g") for v in row) + "\n")
    return buf.getvalue()


def write_csv(path, f: GridFunction, columns: Sequence[str] | None = None) -> None:
    with open(path, "w", newline="\n", encoding="ascii") as fh:
        fh.write(to_csv(f, columns))


def read_csv(path, spec: GridSpec | None = None) -> GridFunction:
    """Read a ``x,v1,...,vd`` file (first column ``x`` or ``t``); the grid is inferred from it unless given."""
    with open(path, encoding="ascii") as fh:
        header = fh.readline().strip().split(",")
        if not header or header[0] not in ("x", "t") or len(header) < 2:
            raise ParameterError(f"{path}: expected header 'x,v1,...'")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    x = data[:, 0]
    if spec is None:
        if len(x) < 2:
            raise GridError(f"{path}: need at least two rows")
        dx = x[1] - x[0]
        spec = GridSpec(len(x), round(dx * len(x), 12))
    if data.shape[0] != spec.N:
        raise GridError(f"{path}: {data.shape[0]} rows for a grid of {spec.N}")
    return GridFunction(spec, data[:, 1:])
