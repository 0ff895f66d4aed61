"""Kernel constructors and kernel quality reports.

Samples follow a midpoint convention: sample ``x_i`` stands for the cell
``[x_i - dx/2, x_i + dx/2]``.  A kernel supported on ``[0, inf)`` therefore gets
at ``x = 0`` the integral over ``[0, dx/2]`` divided by ``dx``: ``1/2`` for the
step kernel and ``2^-r dx^(r-1) / (r Gamma(r))`` for the fractional kernel.
With this choice the discrete convolution is a trapezoid-type rule.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ParameterError, SupportError
from .gridfn import GridFunction, GridSpec, read_csv, shift
from .spectral import DyadicPartition, besov, estimate_regularity, smooth_step


def _check_window(spec: GridSpec, T: float) -> None:
    if not T > 0:
        raise ParameterError(f"window T must be positive, got {T}")
    if 2 * T > spec.L / 2 + 1e-12:
        raise SupportError(f"window 2T = {2 * T:g} exceeds L/2 = {spec.L / 2:g}")


def halfline_window(spec: GridSpec, T: float) -> GridFunction:
    """1 on ``[0, T]``, smooth descent on ``[T, 2T]``, 0 for negative times; 1/2 at the jump."""
    _check_window(spec, T)
    x = spec.signed_x
    v = np.where(x > 0, smooth_step(x, T, 2 * T), 0.0)
    v[0] = 0.5
    return GridFunction(spec, v)


def step_kernel(spec: GridSpec, T: float) -> GridFunction:
    """``phi_T``: 1 on ``[0, T]``, smooth descent to 0 on ``[T, 2T]``, 0 elsewhere."""
    return halfline_window(spec, T)


def fractional_kernel(spec: GridSpec, r_exp: float, T: float, windowed: bool = True) -> GridFunction:
    """Riemann-Liouville kernel ``x^(r-1)/Gamma(r)`` cut off smoothly beyond ``T``.

    ``windowed=False`` keeps the bare power law on ``(0, L/2)``.
    """
    if not 0 < r_exp <= 1:
        raise ParameterError(f"fractional exponent must lie in (0, 1], got {r_exp}")
    if r_exp == 1:
        return step_kernel(spec, T)
    _check_window(spec, T)
    x = spec.signed_x
    pos = x > 0
    v = np.zeros(spec.N)
    v[pos] = x[pos] ** (r_exp - 1) / math.gamma(r_exp)
    if windowed:
        v *= np.where(pos, smooth_step(x, T, 2 * T), 0.0)
    v[0] = 2.0 ** (-r_exp) * spec.dx ** (r_exp - 1) / (r_exp * math.gamma(r_exp))
    return GridFunction(spec, v)


def cutoff(spec: GridSpec, a: float, b: float) -> GridFunction:
    """Symmetric smooth cutoff: 1 on ``|x| <= a``, 0 for ``|x| >= b``."""
    if not 0 < a < b:
        raise ParameterError(f"cutoff needs 0 < a < b, got a={a}, b={b}")
    if b > spec.L / 2 + 1e-12:
        raise SupportError(f"cutoff radius b = {b:g} exceeds L/2 = {spec.L / 2:g}")
    return GridFunction(spec, smooth_step(spec.signed_x, a, b))


def bump(spec: GridSpec, center: float, a: float, b: float) -> GridFunction:
    """Cutoff recentred at ``center``: 1 on ``|x - center| <= a``, 0 beyond ``b``."""
    return shift(cutoff(spec, a, b), -center)


def moment_norm(phi: GridFunction, r: float, part: DyadicPartition, gamma: float) -> float:
    """``||(x - r) phi||`` in ``B^{gamma+1}_{1,inf}``."""
    x = phi.spec.signed_x
    return besov(phi * (x - r)[:, None], part, gamma + 1, 1.0, math.inf)


def kernel_gamma(phi: GridFunction, part: DyadicPartition) -> float:
    """Measured ``B^gamma_{1,inf}`` regularity of a kernel."""
    return estimate_regularity(phi, part, p=1.0)


def kernel_id(phi: GridFunction) -> str:
    """Content hash tying a rough path to the exact kernel samples it was built with."""
    h = hashlib.sha256()
    h.update(f"{phi.spec.N}:{phi.spec.L!r}:{phi.channels}".encode())
    h.update(np.ascontiguousarray(phi.values).tobytes())
    return h.hexdigest()[:16]


def check_causal(phi: GridFunction, tol: float = 0.0) -> None:
    """Kernels must vanish at negative times (upper half of the grid)."""
    neg = np.abs(phi.values[phi.spec.N // 2:])
    if neg.size and float(np.max(neg)) > tol:
        raise SupportError("kernel does not vanish on negative times (support must lie in [0, L/2])")


# ---------------------------------------------------------------------------
# kernel descriptions (used by the CLI, the models and the quadrature oracle)

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)


@dataclass(frozen=True)
class KernelSpec:
    """A kernel described analytically, so it can be sampled or cell-averaged.

    ``shift`` moves the kernel to ``phi(. - shift)`` (delay base point);
    ``scale`` multiplies it.  ``custom`` kernels carry an evaluator for
    ``tau > 0``.
    """

    kind: str
    T: float = 0.25
    r_exp: float = 1.0
    shift: float = 0.0
    scale: float = 1.0
    center: float = 0.0
    width: float = 0.0
    fn: Callable | None = field(default=None, compare=False)
    label: str = ""

    def describe(self) -> str:
        if self.label:
            return self.label
        if self.kind == "step":
            return f"step:T={self.T:g}"
        if self.kind == "fractional":
            return f"frac:r={self.r_exp:g},T={self.T:g}"
        if self.kind == "bump":
            return f"bump:c={self.center:g},w={self.width:g}"
        return self.kind

    def evaluate(self, tau: np.ndarray) -> np.ndarray:
        """Kernel values at lags ``tau`` (no midpoint correction)."""
        s = np.asarray(tau, dtype=float) - self.shift
        pos = s > 0
        out = np.zeros_like(s)
        if self.kind == "step":
            out[pos] = smooth_step(s[pos], self.T, 2 * self.T)
        elif self.kind == "fractional":
            out[pos] = s[pos] ** (self.r_exp - 1) / math.gamma(self.r_exp) * smooth_step(s[pos], self.T, 2 * self.T)
        elif self.kind == "bump":
            out = smooth_step(s - self.center, self.width / 2, self.width)
        elif self.fn is not None:
            out[pos] = self.fn(s[pos])
        else:
            raise ParameterError(f"kernel kind {self.kind!r} cannot be evaluated")
        return self.scale * out

    def build(self, spec: GridSpec) -> GridFunction:
        if self.kind == "step":
            base = step_kernel(spec, self.T)
        elif self.kind == "fractional":
            base = fractional_kernel(spec, self.r_exp, self.T)
        elif self.kind == "bump":
            base = bump(spec, self.center, self.width / 2, self.width)
        else:
            vals = np.zeros(spec.N)
            x = spec.signed_x
            pos = x > 0
            vals[pos] = self.fn(x[pos])
            base = GridFunction(spec, vals)
        out = shift(base, -self.shift) if self.shift else base
        return out * self.scale

    def cell_averages(self, spec: GridSpec, n: int) -> np.ndarray:
        """``avg[m]`` = mean of the kernel over the lag cell ``[(m-1)dx, m dx]``, ``m >= 1``."""
        dx = spec.dx
        m = np.arange(1, n)
        lo = (m - 1) * dx
        nodes = lo[:, None] + 0.5 * dx * (_GL_NODES[None, :] + 1.0)
        avg = np.zeros(n)
        avg[1:] = 0.5 * (self.evaluate(nodes) @ _GL_WEIGHTS)
        if self.kind == "fractional" and self.r_exp < 1:
            # the cell starting at the singularity: integrate the power law exactly
            k0 = int(round(self.shift / dx)) + 1
            if k0 < n:
                avg[k0] = self.scale * dx ** (self.r_exp - 1) / (self.r_exp * math.gamma(self.r_exp))
        return avg


def parse_kernel(text: str, spec: GridSpec | None = None) -> KernelSpec | GridFunction:
    """Parse ``step:T=..``, ``frac:r=..,T=..``, ``bump:c=..,w=..`` or ``file:<path.csv>``."""
    kind, _, rest = text.partition(":")
    kind = kind.strip().lower()
    if kind == "file":
        if not rest:
            raise ParameterError("file kernel needs a path: file:<path.csv>")
        return read_csv(rest, spec)
    params = {}
    for item in filter(None, (s.strip() for s in rest.split(","))):
        key, eq, val = item.partition("=")
        if not eq:
            raise ParameterError(f"kernel parameter {item!r} is not key=value")
        try:
            params[key.strip()] = float(val)
        except ValueError as exc:
            raise ParameterError(f"kernel parameter {item!r} is not numeric") from exc
    shift_ = params.pop("shift", 0.0)
    if kind == "step":
        ks = KernelSpec("step", T=params.pop("T", 0.25), shift=shift_)
    elif kind in ("frac", "fractional"):
        if "r" not in params:
            raise ParameterError("fractional kernel needs r=<exponent>")
        r = params.pop("r")
        if not 0 < r < 1:
            raise ParameterError(f"fractional exponent must lie in (0, 1), got {r}")
        ks = KernelSpec("fractional", T=params.pop("T", 0.25), r_exp=r, shift=shift_)
    elif kind == "bump":
        ks = KernelSpec("bump", center=params.pop("c", 0.25), width=params.pop("w", 0.1), shift=shift_)
    else:
        raise ParameterError(f"unknown kernel kind {kind!r}; expected step, frac, bump or file")
    if params:
        raise ParameterError(f"unknown kernel parameters {sorted(params)} for {kind}")
    return ks
