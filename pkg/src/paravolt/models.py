"""Noise samplers, application drivers and the direct quadrature oracle.

Drivers rewrite each model as a localised Volterra equation on the window
``[0, T]``: kernels ``phi_T`` (or fractional / bump kernels) supported in
``[0, 2T]``, noises re-windowed by a function equal to 1 on ``[0, T]``, and
the initial value multiplied by a cutoff equal to 1 on ``|t| <= T``.  The
solution agrees with the model on ``[0, T]`` only.

The samplers are exact-law and independent of the random series in
:mod:`paravolt.roughpath`; the quadrature oracle never touches the FFT
convolution or the Besov machinery, so agreement between a driver and
``oracle_solution`` is a real cross-check.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import _core
from ._gauss import sample_fgn
from .errors import CapabilityError, ParameterError, RegimeError
from .gridfn import GridFunction, GridSpec, VectorField, builtin_field, shift
from .kernels import KernelSpec, cutoff, halfline_window, kernel_gamma
from .paracalc import convolve
from .roughpath import bm_coefficients, fbm_coefficients, lift_smooth, stochastic_resonant
from .solver import (SolveReport, VolterraProblem, solve_paracontrolled, solve_young,
                     solve_young_jumps)
from .spectral import besov, build_partition, estimate_regularity

log = logging.getLogger(__name__)

DEFAULT_SPEC = GridSpec(4096, 2.0)
MODELS = ("delay", "fractional", "levy", "moving-average", "spde-edge")


def default_window(spec: GridSpec) -> float:
    """``L/8``: kernels and noises then each occupy ``[0, L/4]``."""
    return spec.L / 8


def _window(spec: GridSpec, T: float | None) -> float:
    T = default_window(spec) if T is None else float(T)
    if not 0 < T <= spec.L / 8 + 1e-12:
        raise ParameterError(f"window T must lie in (0, L/8] = (0, {spec.L / 8:g}], got {T}")
    return T


def _rng(seed) -> np.random.Generator:
    return np.random.default_rng(seed)


def _child_seeds(seed: int, count: int) -> list[np.random.SeedSequence]:
    return np.random.SeedSequence(seed).spawn(count)


# ---------------------------------------------------------------------------
# samplers


@dataclass(frozen=True, eq=False)
class NoiseSample:
    """A windowed path and its derivative noise ``(path[i+1] - path[i]) / dx``."""

    kind: str
    path: GridFunction
    noise: GridFunction
    seed: int | None
    window: float
    meta: dict = field(default_factory=dict)


def _from_raw(spec: GridSpec, raw: np.ndarray, T: float, kind: str, seed, meta=None) -> NoiseSample:
    """Place ``raw`` (path values at ``x_0 .. x_{N/2-1}``) on the grid and window it."""
    half = spec.N // 2
    vals = np.zeros(spec.N)
    vals[:half] = raw[:half]
    chi = halfline_window(spec, T).scalar.copy()
    chi[0] = 1.0
    path = vals * chi
    noise = (np.roll(path, -1) - path) / spec.dx
    return NoiseSample(kind, GridFunction(spec, path), GridFunction(spec, noise), seed, T, meta or {})


def _walk(increments: np.ndarray) -> np.ndarray:
    out = np.empty(len(increments) + 1)
    out[0] = 0.0
    np.cumsum(increments, out=out[1:])
    return out


def sample_bm(spec: GridSpec, seed, T: float | None = None) -> NoiseSample:
    """Gaussian random walk with steps ``sqrt(dx) Z``, equal to BM on ``[0, T]``."""
    T = _window(spec, T)
    half = spec.N // 2
    steps = math.sqrt(spec.dx) * _rng(seed).standard_normal(half)
    return _from_raw(spec, _walk(steps), T, "bm", seed)


def sample_fbm(spec: GridSpec, H: float, seed, T: float | None = None) -> NoiseSample:
    """Exact-covariance fBM by circulant embedding of fractional Gaussian noise."""
    T = _window(spec, T)
    half = spec.N // 2
    steps = sample_fgn(_rng(seed), half, H, spec.dx)[0]
    return _from_raw(spec, _walk(steps), T, "fbm", seed, {"hurst": H})


def sample_levy(spec: GridSpec, jump_rate: float, jump_scale: float, diffusion: float, seed,
                drift: float = 0.0, T: float | None = None) -> NoiseSample:
    """Compound Poisson with centred Gaussian jumps, plus ``diffusion * W`` and a linear drift.

    Jumps arrive at rate ``jump_rate`` on ``[0, L/2)``; a jump at time ``s``
    enters the path from grid point ``ceil(s/dx)`` on.
    """
    if jump_rate < 0 or jump_scale < 0 or diffusion < 0:
        raise ParameterError("jump rate, jump scale and diffusion must be nonnegative")
    T = _window(spec, T)
    half = spec.N // 2
    rng = _rng(seed)
    horizon = spec.L / 2
    count = int(rng.poisson(jump_rate * horizon))
    times = np.sort(rng.uniform(0.0, horizon, count))
    sizes = jump_scale * rng.standard_normal(count)
    idx = np.minimum(np.ceil(times / spec.dx).astype(int), half)
    jumps = np.zeros(half + 1)
    np.add.at(jumps, idx, sizes)
    raw = np.cumsum(jumps)
    if diffusion:
        raw = raw + diffusion * _walk(math.sqrt(spec.dx) * rng.standard_normal(half))
    raw = raw + drift * spec.dx * np.arange(half + 1)
    meta = {"count": count, "times": times.tolist(), "sizes": sizes.tolist(),
            "jump_rate": jump_rate, "jump_scale": jump_scale, "diffusion": diffusion, "drift": drift}
    return _from_raw(spec, raw, T, "levy", seed, meta)


def mollify(f: GridFunction, width: float) -> GridFunction:
    """Convolution with a causal smooth bump of unit mass supported in ``[0, width]``."""
    spec = f.spec
    if not spec.dx * 4 <= width <= spec.L / 8:
        raise ParameterError(f"mollifier width must lie in [4 dx, L/8], got {width}")
    rho = KernelSpec("bump", center=width / 2, width=width / 2).build(spec)
    rho = rho / (float(np.sum(rho.scalar)) * spec.dx)
    return convolve(rho, f)


# ---------------------------------------------------------------------------
# direct quadrature oracle

_FIELD_CODES = {"zero": 0, "sin": 1, "rational": 2, "tanh": 3, "linear": 4}


def cell_increments(xi: GridFunction) -> np.ndarray:
    """Trapezoid increments ``(xi_k + xi_{k+1}) dx / 2`` over ``[x_k, x_{k+1}]``.

    Noises with jumps (windows, indicators) rule out the trigonometric
    interpolant, whose increments ring near a jump.
    """
    v = xi.scalar
    return 0.5 * (v + np.roll(v, -1)) * xi.spec.dx


def _field_code(sigma: VectorField) -> tuple[int, float]:
    if sigma.name not in _FIELD_CODES:
        raise CapabilityError(f"the quadrature oracle supports builtin fields only, got {sigma.name!r}")
    return _FIELD_CODES[sigma.name], float(sigma.epsilon)


def quadrature_solve(spec: GridSpec, forcing: GridFunction,
                     terms: list[tuple[KernelSpec, VectorField, GridFunction]],
                     t_start: float, t_end: float) -> tuple[np.ndarray, np.ndarray]:
    """O(n^2) product-rule solve of ``u = g + sum_j int k_j(t-s) sigma_j(u(s)) xi_j(s) ds``.

    Integration starts at ``t_start``, where the integrals vanish.  Kernels
    enter through their exact cell averages, noises through exact cell
    increments, and the field is evaluated at the midpoint of each step
    (implicit, fixed-point solved).  Returns ``(times, u)``.
    """
    i0 = int(round(t_start / spec.dx))
    i1 = int(round(t_end / spec.dx))
    n = i1 - i0 + 1
    if n < 2 or n > spec.N:
        raise ParameterError(f"bad oracle interval [{t_start}, {t_end}]")
    idx = np.arange(i0, i1 + 1) % spec.N
    kbar = np.empty((len(terms), n))
    dtheta = np.empty((len(terms), n))
    kinds = np.empty(len(terms), dtype=np.intc)
    eps = np.empty(len(terms))
    for t, (ks, sigma, xi) in enumerate(terms):
        kbar[t] = ks.cell_averages(spec, n)
        dtheta[t] = cell_increments(xi)[idx]
        kinds[t], eps[t] = _field_code(sigma)
    g = np.ascontiguousarray(forcing.scalar[idx])
    u, worst = _core.volterra_midpoint(g, kbar, dtheta, kinds, eps, n)
    if worst > 1e-8:
        log.warning("oracle inner iteration left a defect of %.2e", worst)
    return (i0 + np.arange(n)) * spec.dx, np.asarray(u)


# ---------------------------------------------------------------------------
# drivers


@dataclass(eq=False)
class ModelRun:
    """A driver's solution with everything needed to rerun it through the oracle."""

    name: str
    u: GridFunction
    report: SolveReport
    problem: VolterraProblem
    window: float
    params: dict
    noises: dict = field(default_factory=dict)
    quadrature: dict | None = None
    extra: dict = field(default_factory=dict)

    def window_values(self) -> tuple[np.ndarray, np.ndarray]:
        """Times and solution values on ``[0, T]``."""
        spec = self.u.spec
        n = int(round(self.window / spec.dx)) + 1
        return spec.x[:n], self.u.scalar[:n].copy()

    def as_dict(self) -> dict:
        return {"model": self.name, "params": self.params, "window": self.window,
                "report": self.report.as_dict(), "extra": self.extra}


def oracle_solution(run: ModelRun) -> tuple[np.ndarray, np.ndarray]:
    """Quadrature-oracle values on ``[0, T]`` for the same kernels, fields and noises."""
    if run.quadrature is None:
        raise CapabilityError(f"model {run.name!r} carries no quadrature description")
    q = run.quadrature
    t, u = quadrature_solve(run.u.spec, q["forcing"], q["terms"], q["t_start"], run.window)
    keep = t >= -1e-12
    return t[keep], u[keep]


def oracle_error(run: ModelRun) -> float:
    """Relative sup distance between the driver and the oracle on ``[0, T]``."""
    _, u = run.window_values()
    _, v = oracle_solution(run)
    return float(np.max(np.abs(u - v)) / max(np.max(np.abs(v)), 1e-300))


def parse_field(text) -> VectorField:
    """``kind`` or ``kind:epsilon``, e.g. ``sin:0.5``; a VectorField passes through."""
    if isinstance(text, VectorField):
        return text
    kind, _, eps = str(text).partition(":")
    try:
        return builtin_field(kind.strip(), float(eps) if eps else 1.0)
    except ValueError as exc:
        raise ParameterError(f"bad field spec {text!r}: {exc}") from exc


def _initial(spec: GridSpec, u0, T: float) -> GridFunction:
    """``u0 * chi`` with ``chi = 1`` on ``|t| <= T``; ``u0`` scalar or a grid function."""
    chi = cutoff(spec, T, 2 * T)
    if isinstance(u0, GridFunction):
        return u0 * chi
    return chi * float(u0)


def _indicator(spec: GridSpec, T: float) -> GridFunction:
    """Smooth stand-in for ``1_[0,T]``: 1 on ``[0, T]``, 0 after ``2T``."""
    return halfline_window(spec, T)


def _maybe_mollify(xi: GridFunction, width) -> GridFunction:
    return xi if width is None else mollify(xi, float(width))


def _margin(excess: float, cap: float = 0.05) -> float:
    return min(cap, excess / 2)


def run_delay_rde(H: float = 0.7, r1: float = 0.0, r2: float = 0.0, sigma1="linear:1", sigma2="zero",
                  seed: int = 0, mode: str = "young", u0: float = 0.5, spec: GridSpec | None = None,
                  T: float | None = None, mollify_width: float | None = None, n_levels: int = 6,
                  tol: float | None = None, max_iter: int = 200, p: float = 4.0) -> ModelRun:
    """``u(t) = u0 + int sigma1(u(s-r1)) dtheta(s) + int sigma2(u(s-r2)) ds`` with fBM ``theta``.

    Rewritten with kernels ``phi_T(. - r_j)``, noise ``theta'(. + r1)`` and
    drift indicator ``1_[0,T](. + r2)``.  ``mode='young'`` samples fBM by
    circulant embedding and needs ``H > 1/2``; ``mode='rough'`` needs
    ``H`` in ``(1/3, 1/2]`` and lifts the fBM series.
    """
    spec = DEFAULT_SPEC if spec is None else spec
    T = _window(spec, T)
    for name, r in (("r1", r1), ("r2", r2)):
        if not 0 <= r <= T:
            raise ParameterError(f"delay {name} must lie in [0, T] = [0, {T:g}], got {r}")
    # delays act as grid shifts, so they are snapped to grid times
    r1 = round(r1 / spec.dx) * spec.dx
    r2 = round(r2 / spec.dx) * spec.dx
    s1, s2 = parse_field(sigma1), parse_field(sigma2)
    phi_ks = KernelSpec("step", T=T, shift=r1)
    drift_ks = KernelSpec("step", T=T, shift=r2)
    drift_noise = shift(_indicator(spec, T), r2)
    noises = {}
    extra = {}
    if mode == "young":
        if not H > 0.5:
            raise RegimeError([f"young mode needs H > 1/2, got {H}"])
        sample = sample_fbm(spec, H, seed, T)
        noises["theta"] = sample
        xi = shift(_maybe_mollify(sample.noise, mollify_width), r1)
        beta1 = H - _margin(H - 0.5)
        rp = None
    elif mode == "rough":
        if not 1 / 3 < H <= 0.5:
            raise RegimeError([f"rough mode needs H in (1/3, 1/2], got {H}"])
        beta1 = H - _margin(H - 1 / 3)
        exp = fbm_coefficients(spec, H, chi=_indicator(spec, T), beta=beta1)
        lift = stochastic_resonant(exp, phi_ks.build(spec), seed, n_levels) if not r1 else None
        if r1:
            # shifting the noise changes the resonant pair; rebuild the series rows on the shifted axis
            k = int(round(r1 / spec.dx))
            rows = np.roll(exp.rows, -k, axis=1)
            exp = type(exp)(spec, exp.kind, rows, exp.norms, exp.norms_pp, exp.family, exp.frequencies,
                            exp.beta, exp.p, exp.hurst, dict(exp.meta))
            lift = stochastic_resonant(exp, phi_ks.build(spec), seed, n_levels)
        xi = lift.path.xi
        rp = lift.path
        extra["cauchy_diagnostics"] = lift.diagnostics
        extra["schedule"] = list(lift.schedule.levels)
    else:
        raise ParameterError(f"mode must be 'young' or 'rough', got {mode!r}")
    prob = VolterraProblem(phi1=phi_ks.build(spec), sigma1=s1, xi1=xi, u0=_initial(spec, u0, T),
                           phi2=drift_ks.build(spec), sigma2=s2, xi2=drift_noise, r1=r1, r2=r2,
                           beta1=beta1, gamma1=1.0, beta2=1.0, gamma2=1.0, p=p)
    if rp is None:
        u, rep = solve_young(prob, 1e-10 if tol is None else tol, max_iter)
    else:
        u, triple, rep = solve_paracontrolled(prob, rp, 1e-9 if tol is None else tol, max_iter)
        extra["usharp_regularity"] = rep.extra.get("usharp_regularity")
    params = {"H": H, "r1": r1, "r2": r2, "sigma1": s1.name, "epsilon1": s1.epsilon, "sigma2": s2.name,
              "epsilon2": s2.epsilon, "seed": seed, "mode": mode, "u0": u0, "T": T,
              "mollify_width": mollify_width, "p": p}
    quad = {"forcing": prob.u0, "terms": [(phi_ks, s1, xi), (drift_ks, s2, drift_noise)],
            "t_start": -max(r1, r2)}
    return ModelRun("delay", u, rep, prob, T, params, noises, quad, extra)


def fractional_exponents(r_exp: float) -> tuple[float, float]:
    """Declared ``(beta1, gamma1)`` for BM noise and a fractional kernel of order ``r``.

    ``beta1 = 1/2 - s`` and ``gamma1 = r - s'`` with slacks shrinking as
    ``r`` approaches 5/6, so that ``alpha = beta1 + gamma1 - 1 > 1/3``.
    """
    s = min(0.04, (r_exp - 5 / 6) / 3)
    return 0.5 - s, r_exp - min(0.01, s)


def _fractional_run(name: str, kernel: KernelSpec, r_exp: float, sigma, seed: int, u0: float,
                    spec: GridSpec, T: float, n_levels: int, mollify_width, tol, max_iter: int,
                    params: dict, p: float = 4.0) -> ModelRun:
    if not r_exp > 5 / 6:
        raise RegimeError([f"fractional order must satisfy r > 5/6, got r = {r_exp:g}"])
    s = parse_field(sigma)
    beta1, gamma1 = fractional_exponents(r_exp)
    phi = kernel.build(spec)
    exp = bm_coefficients(spec, chi=_indicator(spec, T), beta=min(beta1, 0.45), p=p)
    lift = stochastic_resonant(exp, phi, seed, n_levels)
    xi = lift.path.xi
    extra = {"cauchy_diagnostics": lift.diagnostics, "schedule": list(lift.schedule.levels),
             "alpha_target": r_exp - 0.5}
    if mollify_width is None:
        rp = lift.path
    else:
        xi = mollify(xi, float(mollify_width))
        rp = lift_smooth(phi, xi, build_partition(spec))
    prob = VolterraProblem(phi1=phi, sigma1=s, xi1=xi, u0=_initial(spec, u0, T),
                           beta1=beta1, gamma1=gamma1, p=p)
    u, triple, rep = solve_paracontrolled(prob, rp, 1e-9 if tol is None else tol, max_iter)
    extra["usharp_regularity"] = rep.extra.get("usharp_regularity")
    extra["alpha"] = beta1 + gamma1 - 1
    quad = {"forcing": prob.u0, "terms": [(kernel, s, xi)], "t_start": 0.0}
    params = dict(params, sigma=s.name, epsilon=s.epsilon, seed=seed, u0=u0, T=T,
                  mollify_width=mollify_width, n_levels=n_levels, p=p)
    run = ModelRun(name, u, rep, prob, T, params, {}, quad, extra)
    run.extra["rough_path"] = rp
    run.extra["triple"] = triple
    return run


def run_fractional_sde(r_exp: float = 0.9, sigma="sin:0.5", seed: int = 0, u0: float = 0.5,
                       spec: GridSpec | None = None, T: float | None = None, n_levels: int = 6,
                       mollify_width: float | None = None, tol: float | None = None,
                       max_iter: int = 200) -> ModelRun:
    """``u = u0 + I^r(sigma(u) dW)``: fractional kernel of order ``r > 5/6``, lifted BM noise, rough solve."""
    spec = DEFAULT_SPEC if spec is None else spec
    T = _window(spec, T)
    kernel = KernelSpec("fractional", T=T, r_exp=r_exp)
    return _fractional_run("fractional", kernel, r_exp, sigma, seed, u0, spec, T, n_levels,
                           mollify_width, tol, max_iter, {"r_exp": r_exp})


def spde_edge_order(theta: float) -> float:
    """Order ``r = 1 - 1/(2 - theta)`` of the edge kernel ``t^(-1/(2-theta))``."""
    return 1.0 - 1.0 / (2.0 - theta)


def run_spde_edge(theta: float = -5.0, sigma="sin:0.5", seed: int = 0, v0: float = 0.5,
                  spec: GridSpec | None = None, T: float | None = None, n_levels: int = 6,
                  mollify_width: float | None = None, tol: float | None = None,
                  max_iter: int = 200) -> ModelRun:
    """Edge process ``v(t) = v0 + int (t-s)^(-1/(2-theta)) sigma(v(s)) dW(s)``, ``theta < -4``.

    The normalising constant of the heat kernel is set to 1.
    """
    if not theta < -4:
        raise RegimeError([f"edge reduction needs theta < -4, got {theta}"])
    spec = DEFAULT_SPEC if spec is None else spec
    T = _window(spec, T)
    r = spde_edge_order(theta)
    kernel = KernelSpec("fractional", T=T, r_exp=r, scale=math.gamma(r))
    return _fractional_run("spde-edge", kernel, r, sigma, seed, v0, spec, T, n_levels,
                           mollify_width, tol, max_iter, {"theta": theta, "r_exp": r})


def levy_p(beta1: float) -> float:
    """Default ``p`` for the jumps regime: midpoint of ``(2, 1/(1-beta1))``, at most 3."""
    return min(3.0, 0.5 * (2.0 + 1.0 / (1.0 - beta1)))


def run_levy_sde(jump_rate: float = 5.0, jump_scale: float = 0.1, diffusion: float = 0.0, H: float = 0.75,
                 sigma_drift="linear:1", sigma_noise="sin:0.5", seed: int = 0, u0: float = 0.5,
                 p: float | None = None, spec: GridSpec | None = None, T: float | None = None,
                 mollify_width: float | None = None, tol: float = 1e-10, max_iter: int = 200) -> ModelRun:
    """``u = u0 + int sigma_drift(u) ds + int sigma_noise(u) dtheta + L`` with fBM ``theta`` and Lévy ``L``.

    ``L`` enters through the initial-condition slot, so the jumps solver sees
    a discontinuous ``u0`` and smooth integrals.
    """
    spec = DEFAULT_SPEC if spec is None else spec
    T = _window(spec, T)
    if not H > 0.5:
        raise RegimeError([f"Lévy SDE needs H > 1/2, got {H}"])
    beta1 = H - _margin(H - 0.5)
    p = levy_p(beta1) if p is None else float(p)
    if not p > 2:
        raise RegimeError([f"Lévy SDE needs p > 2, got {p}"])
    s_drift, s_noise = parse_field(sigma_drift), parse_field(sigma_noise)
    seeds = _child_seeds(seed, 2)
    theta = sample_fbm(spec, H, seeds[0], T)
    levy = sample_levy(spec, jump_rate, jump_scale, diffusion, seeds[1], T=T)
    xi = _maybe_mollify(theta.noise, mollify_width)
    ks = KernelSpec("step", T=T)
    phi = ks.build(spec)
    ind = _indicator(spec, T)
    forcing = _initial(spec, levy.path + u0, T)
    prob = VolterraProblem(phi1=phi, sigma1=s_noise, xi1=xi, u0=forcing, phi2=phi, sigma2=s_drift, xi2=ind,
                           beta1=beta1, gamma1=1.0, beta2=1.0, gamma2=1.0, p=p)
    u, rep = solve_young_jumps(prob, tol, max_iter)
    part = build_partition(spec)
    tracked = besov(u, part, 1.0 / p, p, math.inf) + u.sup()
    params = {"jump_rate": jump_rate, "jump_scale": jump_scale, "diffusion": diffusion, "H": H,
              "sigma_drift": s_drift.name, "epsilon_drift": s_drift.epsilon, "sigma_noise": s_noise.name,
              "epsilon_noise": s_noise.epsilon, "seed": seed, "u0": u0, "p": p, "T": T,
              "mollify_width": mollify_width}
    quad = {"forcing": forcing, "terms": [(ks, s_noise, xi), (ks, s_drift, ind)], "t_start": 0.0}
    extra = {"tracked_norm": tracked, "jump_count": levy.meta["count"]}
    return ModelRun("levy", u, rep, prob, T, params, {"theta": theta, "levy": levy}, quad, extra)


def run_moving_average(kernel: KernelSpec | None = None, sigma="sin:0.5", jump_rate: float = 5.0,
                       jump_scale: float = 0.1, diffusion: float = 0.0, seed: int = 0, u0: float = 0.5,
                       p: float = 4.0, spec: GridSpec | None = None, T: float | None = None,
                       mollify_width: float | None = None, tol: float = 1e-10, max_iter: int = 200) -> ModelRun:
    """``u(t) = u0 + int psi(t-s) sigma(u(s)) dL(s)`` for a kernel of regularity above 1.

    The default kernel is a smooth bump on ``[0, T]``.  The target
    regularity ``1/p + gamma - 1`` is reported in ``extra``.
    """
    spec = DEFAULT_SPEC if spec is None else spec
    T = _window(spec, T)
    if not p > 2:
        raise RegimeError([f"moving average needs p > 2, got {p}"])
    kernel = KernelSpec("bump", center=T / 2, width=T / 2) if kernel is None else kernel
    psi = kernel.build(spec)
    part = build_partition(spec)
    g_meas = kernel_gamma(psi, part)
    if not g_meas > 1:
        raise RegimeError([f"moving-average kernel needs regularity > 1, measured {g_meas:.3f}"])
    s = parse_field(sigma)
    levy = sample_levy(spec, jump_rate, jump_scale, diffusion, seed, T=T)
    xi = _maybe_mollify(levy.noise, mollify_width)
    beta1 = 1.0 / p - 0.01
    gamma1 = min(g_meas - 0.05, 2.0 - beta1)
    forcing = _initial(spec, u0, T)
    prob = VolterraProblem(phi1=psi, sigma1=s, xi1=xi, u0=forcing, beta1=beta1, gamma1=gamma1, p=p)
    u, rep = solve_young(prob, tol, max_iter)
    extra = {"kernel_gamma": g_meas, "alpha_target": 1.0 / p + min(g_meas, 2.0) - 1.0,
             "solution_regularity": estimate_regularity(u, part, p=p), "jump_count": levy.meta["count"]}
    params = {"kernel": kernel.describe(), "sigma": s.name, "epsilon": s.epsilon, "jump_rate": jump_rate,
              "jump_scale": jump_scale, "diffusion": diffusion, "seed": seed, "u0": u0, "p": p, "T": T,
              "mollify_width": mollify_width}
    quad = {"forcing": forcing, "terms": [(kernel, s, xi)], "t_start": 0.0}
    return ModelRun("moving-average", u, rep, prob, T, params, {"levy": levy}, quad, extra)


_RUNNERS = {"delay": run_delay_rde, "fractional": run_fractional_sde, "levy": run_levy_sde,
            "moving-average": run_moving_average, "spde-edge": run_spde_edge}


def run_model(name: str, params: dict | None = None, seed: int = 0, spec: GridSpec | None = None) -> ModelRun:
    """Dispatch by model name; ``params`` are keyword arguments of the driver."""
    if name not in _RUNNERS:
        raise ParameterError(f"unknown model {name!r}; expected one of {', '.join(MODELS)}")
    kwargs = dict(params or {})
    if "kernel" in kwargs and isinstance(kwargs["kernel"], str):
        from .kernels import parse_kernel

        kwargs["kernel"] = parse_kernel(kwargs["kernel"])
    try:
        return _RUNNERS[name](seed=seed, spec=spec, **kwargs)
    except TypeError as exc:
        raise ParameterError(f"bad parameters for model {name!r}: {exc}") from exc
