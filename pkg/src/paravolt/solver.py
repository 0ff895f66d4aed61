"""Fixed-point solvers for ``u = u0 + phi1 * (sigma1(u) xi1) + phi2 * (sigma2(u) xi2)``.

* ``solve_young``: Picard iteration with pointwise products (Young regime).
* ``solve_young_jumps``: the same map tracked in ``B^{1/p}_{p,inf} + L^inf``.
* ``solve_paracontrolled``: the paracontrolled fixed point, which takes the
  resonant datum ``mu`` of a rough path instead of computing
  ``pi(phi1 * xi1, xi1)``.
* ``scale_localize``: localise the kernels to a window of size ``lam``, dilate
  and retry until the iteration contracts.
* ``lipschitz_probe``: finite-difference check of the solution map.

None of the smallness conditions is checked up front.  Each solver runs the
iteration and stops it once the defect trace grows three times in a row by
more than ``GROWTH``, or accepts it once the defect sinks to rounding level
(``FLOOR`` times the size of the iterate).
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (CapabilityError, EstimationError, LocalizationError, NonContractionError,
                     ParameterError, RegimeError, RoughPathError, SpecError, SupportError)
from .gridfn import GridFunction, GridSpec, VectorField, apply_field, check_compatible, shift
from .kernels import cutoff, kernel_gamma, kernel_id
from .paracalc import convolve, gamma_commutator, linearize_sigma, paraproduct, resonant, rphi_commutator
from .roughpath import ConvRoughPath
from .spectral import besov, build_partition, estimate_regularity

log = logging.getLogger(__name__)

GROWTH = 1.2
GROWTH_RUN = 3
SAFETY = 0.05
FLOOR = 1e-12


# ---------------------------------------------------------------------------
# problem description


@dataclass(frozen=True, eq=False)
class VolterraProblem:
    """Kernels, fields, noises and initial condition of one Volterra equation.

    The second term is optional.  ``u0`` is the plain initial condition;
    ``u0_triple = (u0_1, u0_2, u0_sharp)`` is its paracontrolled form, with
    ``(0, 0, u0)`` used when only ``u0`` is given.  Exponents left as ``None``
    are measured.
    """

    phi1: GridFunction
    sigma1: VectorField
    xi1: GridFunction
    u0: GridFunction | None = None
    phi2: GridFunction | None = None
    sigma2: VectorField | None = None
    xi2: GridFunction | None = None
    u0_triple: tuple | None = None
    r1: float = 0.0
    r2: float = 0.0
    beta1: float | None = None
    beta2: float | None = None
    gamma1: float | None = None
    gamma2: float | None = None
    p: float = 4.0

    def __post_init__(self):
        if self.u0 is None and self.u0_triple is None:
            raise ParameterError("problem needs u0 or a paracontrolled triple")
        second = (self.phi2, self.sigma2, self.xi2)
        if any(v is None for v in second) and any(v is not None for v in second):
            raise ParameterError("second term needs phi2, sigma2 and xi2 together")
        for f in (self.phi1, self.xi1) + tuple(v for v in (self.phi2, self.xi2) if v is not None):
            check_compatible(f, self.phi1)
        if not self.p >= 1:
            raise ParameterError(f"integrability p must be >= 1, got {self.p}")

    @property
    def spec(self) -> GridSpec:
        return self.phi1.spec

    @property
    def n(self) -> int:
        return self.sigma1.n

    def terms(self):
        out = [(self.phi1, self.sigma1, self.xi1, self.r1)]
        if self.phi2 is not None:
            out.append((self.phi2, self.sigma2, self.xi2, self.r2))
        return out

    def references(self):
        return [convolve(phi, xi) for phi, _, xi, _ in self.terms()]

    def triple(self):
        if self.u0_triple is not None:
            return self.u0_triple
        z = GridFunction.zeros(self.spec, self.n)
        return (z, z, self.u0)

    def initial(self) -> GridFunction:
        """Plain initial condition; reconstructed from the triple when only that is given."""
        if self.u0 is not None:
            return self.u0
        part = build_partition(self.spec)
        u1, u2, us = self.u0_triple
        w = self.references()
        out = paraproduct(u1, w[0], part) + us
        if len(w) > 1:
            out = out + paraproduct(u2, w[1], part)
        return out


@dataclass(frozen=True)
class Exponents:
    beta1: float
    beta2: float
    gamma1: float
    gamma2: float
    p: float
    measured: dict = field(default_factory=dict)
    notes: tuple = ()

    @property
    def alpha(self) -> float:
        return self.beta1 + self.gamma1 - 1.0

    def as_dict(self) -> dict:
        return {"beta1": self.beta1, "beta2": self.beta2, "gamma1": self.gamma1, "gamma2": self.gamma2,
                "p": self.p, "alpha": self.alpha, "measured": dict(self.measured), "notes": list(self.notes)}


def _measure_beta(xi: GridFunction, part, p: float) -> float:
    # the noise sits in B^{beta-1}_{p,inf}; band-limited noise counts as smooth
    try:
        return estimate_regularity(xi, part, p) + 1.0
    except EstimationError:
        return math.inf


def _measure_gamma(phi: GridFunction, part) -> float:
    try:
        return kernel_gamma(phi, part)
    except EstimationError:
        return math.inf


def resolve_exponents(prob: VolterraProblem, regime: str) -> Exponents:
    """Declared exponents, or measured ones minus a safety margin.

    Regularities are lower bounds, so values above a regime's upper limit
    (``beta <= 1``, ``alpha <= 1`` or ``alpha < 1``) are lowered to it.
    """
    part = build_partition(prob.spec)
    measured, notes = {}, []
    vals = {}
    terms = prob.terms()
    for j in (1, 2):
        if j > len(terms):
            vals[f"beta{j}"], vals[f"gamma{j}"] = 1.0, 1.0
            continue
        phi, _, xi, _ = terms[j - 1]
        mb = _measure_beta(xi, part, prob.p)
        mg = _measure_gamma(phi, part)
        measured[f"beta{j}"], measured[f"gamma{j}"] = mb, mg
        for name, declared, meas in ((f"beta{j}", getattr(prob, f"beta{j}"), mb),
                                     (f"gamma{j}", getattr(prob, f"gamma{j}"), mg)):
            if declared is None:
                vals[name] = meas - SAFETY
            else:
                vals[name] = float(declared)
                if declared > meas + 0.15:
                    notes.append(f"{name} declared {declared:g} exceeds measured {meas:.3f}")
        vals[f"beta{j}"] = min(vals[f"beta{j}"], 1.0)
    cap = 2.0 - vals["beta1"] - (0.01 if regime == "rough" else 0.0)
    if vals["gamma1"] > cap:
        vals["gamma1"] = cap
    vals["gamma2"] = min(vals["gamma2"], 3.0)
    return Exponents(vals["beta1"], vals["beta2"], vals["gamma1"], vals["gamma2"], prob.p,
                     measured, tuple(notes))


def regime_violations(ex: Exponents, regime: str) -> list[str]:
    a, b1, b2, g1, p = ex.alpha, ex.beta1, ex.beta2, ex.gamma1, ex.p
    out = []
    if regime in ("young", "jumps"):
        if not 1.0 / p < a <= 1.0:
            out.append(f"alpha in (1/p, 1] violated: {a:.4g}")
        if regime == "young" and not 2 * b1 + g1 > 2:
            out.append(f"2*beta1+gamma1>2 violated: {2 * b1 + g1:.4g}")
        if regime == "jumps" and not b1 + 1.0 / p > 1:
            out.append(f"beta1+1/p>1 violated: {b1 + 1.0 / p:.4g}")
    elif regime == "rough":
        if not 1.0 / 3.0 < a < 1.0:
            out.append(f"alpha in (1/3, 1) violated: {a:.4g}")
        if not 2 * a + b1 > 1:
            out.append(f"2*alpha+beta1>1 violated: {2 * a + b1:.4g}")
        if not a + b2 > 1:
            out.append(f"alpha+beta2>1 violated: {a + b2:.4g}")
    else:
        raise ParameterError(f"unknown regime {regime!r}")
    return out


def check_supports(prob: VolterraProblem) -> None:
    """Kernels vanish at negative times and kernel plus noise support fits in one period."""
    spec = prob.spec
    half = spec.N // 2
    for phi, _, xi, _ in prob.terms():
        if np.max(np.abs(phi.values[half:])) > 0:
            raise SupportError("kernel must vanish on negative times (upper half of the grid)")
        if _support_length(phi) + _support_length(xi) >= spec.L:
            raise SupportError("kernel and noise supports together wrap around the period")


def _support_length(f: GridFunction) -> float:
    # FFT round-off below 1e-13 of the peak does not count as support
    mag = np.max(np.abs(f.values), axis=1)
    nz = np.nonzero(mag > 1e-13 * np.max(mag, initial=0.0))[0]
    if nz.size == 0:
        return 0.0
    N = f.spec.N
    # shortest arc that covers every nonzero sample on the circle
    gaps = np.diff(np.concatenate([nz, [nz[0] + N]]))
    return (N - int(np.max(gaps))) * f.spec.dx


# ---------------------------------------------------------------------------
# iteration machinery


@dataclass
class SolveReport:
    mode: str
    iterations: int = 0
    residual: float = math.nan
    trace: list = field(default_factory=list)
    checks: dict = field(default_factory=dict)
    regularity: float = math.nan
    converged: bool = False
    extra: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"mode": self.mode, "iterations": self.iterations, "residual": self.residual,
                "trace": list(self.trace), "checks": self.checks, "regularity": self.regularity,
                "converged": self.converged, "extra": self.extra}


def _diverging(trace: list) -> bool:
    if len(trace) < GROWTH_RUN + 1:
        return False
    tail = trace[-(GROWTH_RUN + 1):]
    return all(b > GROWTH * a for a, b in zip(tail, tail[1:]))


def _iterate(step, state, defect, tol: float, max_iter: int, report: SolveReport, hint: str, scale=None):
    """Run ``state <- step(state)`` until ``defect(new, old) <= tol``.

    ``scale(new)`` is the size of the iterate in the defect metric; a defect
    below ``FLOOR * scale`` is rounding noise and also ends the iteration
    (flagged as ``floor_limited``).
    """
    for k in range(1, max_iter + 1):
        try:
            with np.errstate(over="ignore", invalid="ignore"):
                new = step(state)
                d = float(defect(new, state))
        except (ParameterError, FloatingPointError, OverflowError) as exc:
            report.iterations = k
            raise NonContractionError(f"iteration left the finite range at step {k}: {exc}; {hint}", report)
        report.trace.append(d)
        report.iterations = k
        if not math.isfinite(d):
            raise NonContractionError(f"defect became non-finite at step {k}; {hint}", report)
        floor = FLOOR * scale(new) if scale is not None and d > tol else 0.0
        if d <= tol or d <= floor:
            report.residual = d
            report.converged = True
            if d > tol:
                report.extra["floor_limited"] = True
                log.warning("defect %.3e stopped at the rounding floor %.3e above tol %.3e", d, floor, tol)
            return new
        if _diverging(report.trace):
            report.residual = d
            raise NonContractionError(
                f"defect grew {GROWTH_RUN} times in a row by more than {GROWTH} (last {d:.3e}); {hint}", report)
        state = new
    report.residual = report.trace[-1] if report.trace else math.nan
    raise NonContractionError(f"no convergence within {max_iter} iterations (defect {report.residual:.3e}); {hint}",
                              report)


_YOUNG_HINT = "the coefficients are probably not small enough for a global contraction; try scale_localize"
_ROUGH_HINT = ("the smallness of ||sigma1||_C3 ||phi1|| + ||sigma2||_C2 ||phi2|| is not met; "
               "try scale_localize")


def _noise_product(sigma: VectorField, u: GridFunction, xi: GridFunction) -> np.ndarray:
    s = apply_field(sigma, u).values.reshape(u.spec.N, sigma.n, sigma.m)
    if xi.channels != sigma.m:
        raise SpecError(f"field expects {sigma.m} noise channels, noise has {xi.channels}")
    return np.einsum("inm,im->in", s, xi.values)


class _YoungMap:
    """``u -> u0 + sum_j phi_j * (sigma_j(u) xi_j)`` with the kernel spectra cached."""

    def __init__(self, prob: VolterraProblem, u0: GridFunction | None = None):
        self.prob = prob
        self.u0 = prob.initial() if u0 is None else u0
        self.spec = prob.spec
        self.kernels = [np.fft.rfft(phi.values, axis=0) for phi, _, _, _ in prob.terms()]

    def __call__(self, u: GridFunction) -> GridFunction:
        N = self.spec.N
        acc = np.zeros((N, u.channels))
        for Phi, (phi, sigma, xi, _) in zip(self.kernels, self.prob.terms()):
            f = _noise_product(sigma, u, xi)
            acc += self.spec.dx * np.fft.irfft(Phi * np.fft.rfft(f, axis=0), n=N, axis=0)
        return GridFunction(self.spec, self.u0.values + acc)


def _validate(prob: VolterraProblem, regime: str, exponents: Exponents | None):
    check_supports(prob)
    ex = resolve_exponents(prob, regime) if exponents is None else exponents
    bad = regime_violations(ex, regime)
    if bad:
        raise RegimeError(bad)
    return ex


def _safe_regularity(u: GridFunction, part, p: float) -> float:
    try:
        return estimate_regularity(u, part, p)
    except EstimationError:
        return math.nan


def _picard(prob, regime, norm, tol, max_iter, exponents, u_init):
    ex = _validate(prob, regime, exponents)
    part = build_partition(prob.spec)
    report = SolveReport(regime, checks={"exponents": ex.as_dict(), "violations": []})
    phi_map = _YoungMap(prob)
    start = phi_map.u0 if u_init is None else u_init
    u = _iterate(phi_map, start, lambda new, old: norm(new - old, ex), tol, max_iter, report, _YOUNG_HINT,
                 scale=lambda new: norm(new, ex))
    report.regularity = _safe_regularity(u, part, ex.p)
    return u, report


def solve_young(prob: VolterraProblem, tol: float = 1e-10, max_iter: int = 200,
                exponents: Exponents | None = None, u_init: GridFunction | None = None):
    """Picard iteration stopped when ``||u_{k+1} - u_k||_{alpha,p,inf} <= tol``."""
    part = build_partition(prob.spec)

    def norm(d, ex):
        return besov(d, part, ex.alpha, ex.p, math.inf)

    return _picard(prob, "young", norm, tol, max_iter, exponents, u_init)


def solve_young_jumps(prob: VolterraProblem, tol: float = 1e-10, max_iter: int = 200,
                      exponents: Exponents | None = None, u_init: GridFunction | None = None):
    """Same map as ``solve_young``, tracked in ``||.||_{1/p,p,inf} + ||.||_inf``."""
    part = build_partition(prob.spec)

    def norm(d, ex):
        return besov(d, part, 1.0 / ex.p, ex.p, math.inf) + d.sup()

    return _picard(prob, "jumps", norm, tol, max_iter, exponents, u_init)


def young_residual(prob: VolterraProblem, u: GridFunction, exponents: Exponents | None = None) -> float:
    """``||Phi(u) - u||_{alpha,p,inf}`` for the Young map."""
    ex = resolve_exponents(prob, "young") if exponents is None else exponents
    part = build_partition(prob.spec)
    return besov(_YoungMap(prob)(u) - u, part, ex.alpha, ex.p, math.inf)


# ---------------------------------------------------------------------------
# paracontrolled fixed point


@dataclass(frozen=True)
class ParacontrolledTriple:
    """``u = T_{u1} w1 + T_{u2} w2 + usharp`` with ``w_j = phi_j * xi_j``."""

    u1: GridFunction
    u2: GridFunction
    usharp: GridFunction
    w1: GridFunction
    w2: GridFunction

    def reconstruct(self) -> GridFunction:
        part = build_partition(self.usharp.spec)
        return paraproduct(self.u1, self.w1, part) + paraproduct(self.u2, self.w2, part) + self.usharp


class _RoughMap:
    """One step of the paracontrolled iteration; state is ``(u, usharp_new, u1, u2)``."""

    def __init__(self, prob: VolterraProblem, rp: ConvRoughPath):
        self.prob = prob
        self.spec = prob.spec
        self.part = build_partition(prob.spec)
        part = self.part
        self.u01, self.u02, self.u0s = prob.triple()
        self.terms = prob.terms()
        w = prob.references()
        self.w1 = w[0]
        self.w2 = w[1] if len(w) > 1 else GridFunction.zeros(self.spec)
        self.mu = rp.mu
        self.xi1 = prob.xi1
        # cross term pi(phi2 * xi2, xi1) is well defined and computed directly
        self.cross = resonant(self.w2, self.xi1, part)
        zero = GridFunction.zeros(self.spec)
        s0 = apply_field(prob.sigma1, zero).values[0, 0]
        self.d0 = resonant(GridFunction.constant(self.spec, s0), self.xi1, part)

    def tilde(self, u: GridFunction):
        out = []
        for j, (phi, sigma, xi, r) in enumerate(self.terms):
            base = self.u01 if j == 0 else self.u02
            out.append(base + apply_field(sigma, shift(u, -r)))
        if len(out) == 1:
            out.append(GridFunction.zeros(self.spec))
        return out

    def resonant_sigma1(self, u: GridFunction, ut1, ut2, T1, T2) -> GridFunction:
        """``pi(sigma1(u), xi1)`` assembled from ``mu`` and well-defined terms only."""
        part, xi = self.part, self.xi1
        sigma = self.prob.sigma1
        ds = apply_field(sigma, u, 1)
        usharp = u - T1 - T2
        d1 = ds * (ut1 * self.mu + ut2 * self.cross)
        d2 = ds * (gamma_commutator(ut1, self.w1, xi, part) + gamma_commutator(ut2, self.w2, xi, part))
        d3 = gamma_commutator(ds, T1, xi, part) + gamma_commutator(ds, T2, xi, part)
        d4 = resonant(paraproduct(ds, usharp, part), xi, part)
        d5 = resonant(linearize_sigma(sigma, u, part), xi, part)
        return self.d0 + d1 + d2 + d3 + d4 + d5

    def __call__(self, state):
        u = state[0]
        part = self.part
        ut1, ut2 = self.tilde(u)
        T1 = paraproduct(ut1, self.w1, part)
        T2 = paraproduct(ut2, self.w2, part)
        usharp = self.u0s
        for j, (phi, sigma, xi, r) in enumerate(self.terms):
            s = apply_field(sigma, u)
            pi = self.resonant_sigma1(u, ut1, ut2, T1, T2) if j == 0 else resonant(s, xi, part)
            usharp = usharp + convolve(phi, pi + paraproduct(xi, s, part)) + rphi_commutator(phi, s, xi, r, part)
        return (T1 + T2 + usharp, usharp, ut1, ut2)


def _check_rough(prob: VolterraProblem, rp: ConvRoughPath) -> None:
    if prob.sigma1.n != 1 or prob.sigma1.m != 1 or prob.xi1.channels != 1:
        raise CapabilityError("the paracontrolled solver handles scalar equations with scalar noises only")
    if prob.sigma2 is not None and (prob.sigma2.n != 1 or prob.sigma2.m != 1):
        raise CapabilityError("the paracontrolled solver handles scalar equations with scalar noises only")
    if prob.sigma1.order < 3:
        raise CapabilityError("sigma1 needs derivatives up to order 3")
    if rp.kernel_id != kernel_id(prob.phi1):
        raise RoughPathError("rough path was built for a different kernel than phi1")
    if rp.xi.spec != prob.spec or not np.array_equal(rp.xi.values, prob.xi1.values):
        raise RoughPathError("rough path noise differs from xi1")


def solve_paracontrolled(prob: VolterraProblem, rp: ConvRoughPath, tol: float = 1e-9, max_iter: int = 200,
                         exponents: Exponents | None = None, u_init: GridFunction | None = None):
    """Paracontrolled fixed point; returns ``(u, ParacontrolledTriple, SolveReport)``.

    The defect is ``||du||_{alpha,p,inf} + ||d usharp||_{2 alpha,p/2,inf}``.  The weight
    ``2^{2 alpha j}`` magnifies rounding in the top blocks, so the defect
    bottoms out near ``1e-11`` for unit-size solutions; tolerances below that
    do not converge.
    """
    _check_rough(prob, rp)
    ex = _validate(prob, "rough", exponents)
    step = _RoughMap(prob, rp)
    part = step.part
    a, p = ex.alpha, ex.p
    if u_init is None:
        u_start = paraproduct(step.u01, step.w1, part) + paraproduct(step.u02, step.w2, part) + step.u0s
    else:
        u_start = u_init
    state = (u_start, step.u0s, step.u01, step.u02)

    def defect(new, old):
        return besov(new[0] - old[0], part, a, p, math.inf) + besov(new[1] - old[1], part, 2 * a, p / 2, math.inf)

    report = SolveReport("rough", checks={"exponents": ex.as_dict(), "violations": []})
    def scale(new):
        return besov(new[0], part, a, p, math.inf) + besov(new[1], part, 2 * a, p / 2, math.inf)

    final = _iterate(step, state, defect, tol, max_iter, report, _ROUGH_HINT, scale)
    u, usharp, u1, u2 = final
    triple = ParacontrolledTriple(u1, u2, usharp, step.w1, step.w2)
    report.regularity = _safe_regularity(u, part, p)
    report.extra["usharp_regularity"] = _safe_regularity(usharp, part, p / 2)
    return u, triple, report


def rough_residual(prob: VolterraProblem, rp: ConvRoughPath, u: GridFunction,
                   exponents: Exponents | None = None) -> float:
    """``||Phi(u) - u||_{alpha,p,inf}`` for the paracontrolled map."""
    ex = resolve_exponents(prob, "rough") if exponents is None else exponents
    step = _RoughMap(prob, rp)
    new = step((u, None, None, None))[0]
    return besov(new - u, step.part, ex.alpha, ex.p, math.inf)


# ---------------------------------------------------------------------------
# localisation and scaling


def scale_field(sigma: VectorField, c: float) -> VectorField:
    """``c * sigma`` with all derivatives scaled."""
    derivs = tuple((lambda f: (lambda x: c * f(x)))(d) for d in sigma.derivs)
    elem = None if sigma.elementwise is None else tuple((lambda f: (lambda x: c * f(x)))(d)
                                                        for d in sigma.elementwise)
    bounds = None if sigma.sup_bounds is None else tuple(abs(c) * b for b in sigma.sup_bounds)
    return VectorField(f"{c:g}*{sigma.name}", sigma.n, sigma.m, derivs, sigma.epsilon * c, bounds, elem)


def relabel(f: GridFunction, spec: GridSpec, c: float = 1.0) -> GridFunction:
    """Same samples read on another grid (``L`` rescaled), times ``c``."""
    return GridFunction(spec, f.values * c if c != 1.0 else f.values)


@dataclass(frozen=True)
class LocalizedProblem:
    """The localised equation on the original grid plus its dilated copy."""

    lam: float
    local: VolterraProblem
    dilated: VolterraProblem
    rp_local: ConvRoughPath | None
    rp_dilated: ConvRoughPath | None
    scalars: dict


def localize(prob: VolterraProblem, lam: float, radii: tuple[float, float],
             rp: ConvRoughPath | None = None, exponents: Exponents | None = None) -> LocalizedProblem:
    """Kernels ``chi(./lam) phi_j`` and initial condition ``chi(./lam) u0``, plus the dilation by ``lam``.

    The dilation reads the same samples on the grid of length ``L/lam`` and
    rescales noise, kernel and field by ``lam^{1+1/p-beta+tau}``,
    ``lam^{1-(gamma^1)+tau}`` and ``lam^{beta+(gamma^1)-1-1/p-2tau}``.  The
    three factors multiply to ``lam``, which the change of cell size absorbs,
    so the dilated iteration is the localised one in other units.
    """
    spec = prob.spec
    ex = resolve_exponents(prob, "rough" if rp is not None else "young") if exponents is None else exponents
    a, b = radii
    chi = cutoff(spec, lam * a, lam * b)
    for _, _, _, r in prob.terms():
        if r >= lam * a:
            raise SupportError(f"delay {r:g} is not inside the localisation radius {lam * a:g}")
    phis = [phi * chi for phi, _, _, _ in prob.terms()]
    u0_loc = prob.initial() * chi
    local = replace(prob, phi1=phis[0], phi2=phis[1] if len(phis) > 1 else None, u0=u0_loc, u0_triple=None,
                    beta1=ex.beta1, beta2=ex.beta2, gamma1=ex.gamma1, gamma2=ex.gamma2)
    p = ex.p
    taus = [ex.beta1 + min(1.0, ex.gamma1) - 1 - 1 / p]
    if prob.phi2 is not None:
        taus.append(ex.beta2 + min(1.0, ex.gamma2) - 1 - 1 / p)
    tau = max(min(taus) / 4.0, 0.0)
    spec_d = GridSpec(spec.N, spec.L / lam)
    scal = {"tau": tau}
    parts = []
    for j, (phi, (_, sigma, xi, r)) in enumerate(zip(phis, prob.terms()), start=1):
        beta, gamma = getattr(ex, f"beta{j}"), getattr(ex, f"gamma{j}")
        c_xi = lam ** (1 + 1 / p - beta + tau)
        c_phi = lam ** (1 - min(1.0, gamma) + tau)
        delta = lam / (c_xi * c_phi)
        scal[f"term{j}"] = {"noise": c_xi, "kernel": c_phi, "field": delta}
        parts.append((relabel(phi, spec_d, c_phi), scale_field(sigma, delta), relabel(xi, spec_d, c_xi), r / lam))
    d1 = parts[0]
    d2 = parts[1] if len(parts) > 1 else (None, None, None, 0.0)
    dilated = VolterraProblem(phi1=d1[0], sigma1=d1[1], xi1=d1[2], u0=relabel(u0_loc, spec_d),
                              phi2=d2[0], sigma2=d2[1], xi2=d2[2], r1=d1[3], r2=d2[3],
                              beta1=ex.beta1, beta2=ex.beta2, gamma1=ex.gamma1, gamma2=ex.gamma2, p=p)
    rp_local = rp_dilated = None
    if rp is not None:
        part = build_partition(spec)
        # mu for the localised kernel: remove the far part, which is regular and handled directly
        far = prob.phi1 - phis[0]
        mu_loc = rp.mu - resonant(convolve(far, rp.xi), rp.xi, part)
        rp_local = ConvRoughPath(rp.xi, mu_loc, kernel_id(phis[0]), {"localized": lam})
        # the dilated grid merges the lowest blocks; add the low-frequency pairs this changes
        part_d = build_partition(spec_d)
        w = convolve(phis[0], rp.xi)
        low = (resonant(relabel(w, spec_d), relabel(rp.xi, spec_d), part_d).values
               - resonant(w, rp.xi, part).values)
        c = scal["term1"]
        mu_d = GridFunction(spec_d, c["kernel"] * c["noise"] ** 2 / lam * (mu_loc.values + low))
        rp_dilated = ConvRoughPath(d1[2], mu_d, kernel_id(d1[0]), {"dilated": lam})
    return LocalizedProblem(lam, local, dilated, rp_local, rp_dilated, scal)


def scale_localize(prob: VolterraProblem, lambdas=None, radii: tuple[float, float] | None = None,
                   inner: str = "young", rp: ConvRoughPath | None = None, tol: float = 1e-10,
                   max_iter: int = 200):
    """Try ``lam`` in decreasing dyadic order until the dilated localised problem contracts.

    Returns ``(u, lam, SolveReport)`` with ``u`` on the original grid solving
    the localised equation; the residual there is re-checked and, if needed,
    polished by further iterations on the original grid.
    """
    spec = prob.spec
    lambdas = [2.0 ** -k for k in range(7)] if lambdas is None else list(lambdas)
    if any(b >= a for a, b in zip(lambdas, lambdas[1:])):
        raise ParameterError("lambda grid must be strictly decreasing")
    radii = (spec.L / 4, spec.L / 2) if radii is None else radii
    if inner not in ("young", "jumps", "rough"):
        raise ParameterError(f"unknown inner solver {inner!r}")
    if inner == "rough" and rp is None:
        raise ParameterError("rough inner solver needs a rough path")
    if rp is not None:
        _check_rough(prob, rp)
    ex = resolve_exponents(prob, "rough" if inner == "rough" else "young")
    attempts = []
    for lam in lambdas:
        try:
            loc = localize(prob, lam, radii, rp, ex)
        except SupportError as exc:
            attempts.append({"lambda": lam, "error": str(exc)})
            continue
        inner_tol = tol * lam ** max(0.0, ex.alpha - 1 / ex.p) * 0.5
        try:
            if inner == "rough":
                ud, _, rep = solve_paracontrolled(loc.dilated, loc.rp_dilated, inner_tol, max_iter, ex)
            elif inner == "jumps":
                ud, rep = solve_young_jumps(loc.dilated, inner_tol, max_iter, ex)
            else:
                ud, rep = solve_young(loc.dilated, inner_tol, max_iter, ex)
        except NonContractionError as exc:
            attempts.append({"lambda": lam, "error": str(exc),
                             "trace": list(exc.report.trace) if exc.report else []})
            log.info("lambda=%g did not contract", lam)
            continue
        u = relabel(ud, spec)
        polish = 0
        res = _residual(loc, inner, u, ex, rp is not None)
        if res > tol:
            if inner == "rough":
                u, _, prep = solve_paracontrolled(loc.local, loc.rp_local, tol, max_iter, ex, u_init=u)
            elif inner == "jumps":
                u, prep = solve_young_jumps(loc.local, tol, max_iter, ex, u_init=u)
            else:
                u, prep = solve_young(loc.local, tol, max_iter, ex, u_init=u)
            polish = prep.iterations
            res = _residual(loc, inner, u, ex, rp is not None)
        attempts.append({"lambda": lam, "iterations": rep.iterations, "polish_iterations": polish})
        rep.mode = f"localized-{inner}"
        rep.residual = res
        rep.extra.update({"lambda": lam, "attempts": attempts, "scalars": loc.scalars, "radii": list(radii),
                          "scaled_resonant_defect": _scaled_resonant_defect(loc, lam)})
        return u, lam, rep
    raise LocalizationError(f"no lambda in {lambdas} gave a contracting iteration", attempts)


def _residual(loc: LocalizedProblem, inner: str, u: GridFunction, ex: Exponents, rough: bool) -> float:
    if rough and inner == "rough":
        return rough_residual(loc.local, loc.rp_local, u, ex)
    return young_residual(loc.local, u, ex)


def _scaled_resonant_defect(loc: LocalizedProblem, lam: float) -> float:
    """``||Lambda_lam pi(f, g) - pi(Lambda_lam f, Lambda_lam g)||_inf`` for ``f = phi1_loc * xi1``, ``g = xi1``."""
    from .gridfn import dilate

    prob = loc.local
    part = build_partition(prob.spec)
    f = convolve(prob.phi1, prob.xi1)
    g = prob.xi1
    try:
        lhs = dilate(resonant(f, g, part), lam)
        rhs = resonant(dilate(f, lam), dilate(g, lam), part)
    except ParameterError:
        return math.nan
    return (lhs - rhs).sup()


# ---------------------------------------------------------------------------
# continuity of the solution map


@dataclass(frozen=True)
class LipschitzReport:
    radii: list
    ratios: list
    failures: dict
    direction_norm: float

    @property
    def max_ratio(self) -> float:
        good = [r for r in self.ratios if math.isfinite(r)]
        return max(good) if good else math.nan

    @property
    def variation(self) -> float:
        """``max/min - 1`` over the finite ratios."""
        good = [r for r in self.ratios if math.isfinite(r) and r > 0]
        if len(good) < 2:
            return math.nan
        return max(good) / min(good) - 1.0

    def as_dict(self) -> dict:
        return {"radii": list(self.radii), "ratios": list(self.ratios), "failures": dict(self.failures),
                "direction_norm": self.direction_norm, "max_ratio": self.max_ratio, "variation": self.variation}


def default_directions(spec: GridSpec) -> dict:
    """Smooth bumps inside ``[0, L/2]`` used as perturbation directions."""
    from .kernels import bump

    L = spec.L
    return {"xi": bump(spec, 0.20 * L, 0.03 * L, 0.06 * L),
            "mu": bump(spec, 0.25 * L, 0.04 * L, 0.08 * L),
            "u0": bump(spec, 0.15 * L, 0.03 * L, 0.06 * L)}


def lipschitz_probe(prob: VolterraProblem, rp: ConvRoughPath, radii=(1e-2, 1e-3, 1e-4),
                    directions: dict | None = None, components=("xi", "mu", "u0"), tol: float = 1e-10,
                    max_iter: int = 400, jobs: int = 1):
    """Ratios ``||u_eps - u||_{alpha,p,inf} / (eps * ||direction||)`` along fixed smooth directions.

    Moving ``xi`` by ``eps d`` moves ``mu`` by the matching cross terms, so the
    perturbed pair is again a rough path for the same kernel; ``mu`` and the
    initial remainder move independently on top of that.  ``jobs > 1`` solves
    the radii in threads.
    """
    spec = prob.spec
    part = build_partition(spec)
    ex = resolve_exponents(prob, "rough")
    dirs = default_directions(spec) if directions is None else directions
    use = set(components)
    zero = GridFunction.zeros(spec)
    d_xi = dirs["xi"] if "xi" in use else zero
    d_mu = dirs["mu"] if "mu" in use else zero
    d_u0 = dirs["u0"] if "u0" in use else zero
    a, p = ex.alpha, ex.p
    dnorm = (besov(d_xi, part, ex.beta1 - 1, p, math.inf) + besov(d_mu, part, a + ex.beta1 - 1, p / 2, math.inf)
             + besov(d_u0, part, 2 * a, p / 2, math.inf))
    if dnorm == 0:
        raise ParameterError("all perturbation directions vanish")
    u_base, _, _ = solve_paracontrolled(prob, rp, tol, max_iter, ex)
    w = convolve(prob.phi1, prob.xi1)
    wd = convolve(prob.phi1, d_xi)
    lin = resonant(w, d_xi, part) + resonant(wd, prob.xi1, part)
    quad = resonant(wd, d_xi, part)
    u1, u2, us = prob.triple()

    def one(eps):
        xi_e = prob.xi1 + d_xi * eps
        mu_e = rp.mu + lin * eps + quad * (eps * eps) + d_mu * eps
        rp_e = ConvRoughPath(xi_e, mu_e, rp.kernel_id, {})
        prob_e = replace(prob, xi1=xi_e, u0=None, u0_triple=(u1, u2, us + d_u0 * eps))
        try:
            u_e, _, _ = solve_paracontrolled(prob_e, rp_e, tol, max_iter, ex)
        except NonContractionError as exc:
            return math.nan, str(exc)
        return besov(u_e - u_base, part, a, p, math.inf) / (eps * dnorm), None

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(one, radii))
    else:
        results = [one(eps) for eps in radii]
    ratios = [r for r, _ in results]
    failures = {eps: err for eps, (_, err) in zip(radii, results) if err is not None}
    return LipschitzReport(list(radii), ratios, failures, dnorm)


def sup_relative(u: GridFunction, v: GridFunction) -> float:
    """``||u - v||_inf / max(||v||_inf, tiny)``."""
    return (u - v).sup() / max(v.sup(), 1e-300)

