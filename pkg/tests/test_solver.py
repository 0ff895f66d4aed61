import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import mittag_leffler
from paravolt.errors import (CapabilityError, LocalizationError, NonContractionError, ParameterError,
                             RoughPathError, SupportError)
from paravolt.gridfn import GridFunction, GridSpec, builtin_field, lp_norm
from paravolt.kernels import KernelSpec, bump, cutoff, fractional_kernel, halfline_window, step_kernel
from paravolt.paracalc import convolve, paraproduct
from paravolt.roughpath import ConvRoughPath, lift_smooth
from paravolt.solver import (Exponents, VolterraProblem, check_supports, lipschitz_probe, localize,
                             regime_violations, relabel, resolve_exponents, rough_residual, scale_field,
                             scale_localize, solve_paracontrolled, solve_young, solve_young_jumps, sup_relative,
                             young_residual)
from paravolt.spectral import build_partition, synthetic_field

S = GridSpec(4096, 2.0)


def linear_problem(kernel, a, u0=1.0, T=0.5, spec=S):
    return VolterraProblem(phi1=kernel, sigma1=builtin_field("linear", a), xi1=halfline_window(spec, T),
                           u0=GridFunction.constant(spec, u0))


def band_limited(seed, spec=S):
    rng = np.random.default_rng(seed)
    cut = spec.omega[-1] / 16
    win = bump(spec, 0.5, 0.3, 0.45)
    return VolterraProblem(phi1=fractional_kernel(spec, 0.9, 0.25), sigma1=builtin_field("sin", 0.5),
                           xi1=synthetic_field(spec, 0.5, rng, cut=cut) * win,
                           phi2=step_kernel(spec, 0.25), sigma2=builtin_field("tanh", 0.3),
                           xi2=synthetic_field(spec, 0.5, rng, cut=cut) * win,
                           u0=GridFunction.constant(spec, 0.5))


def poisson_problem(spec=S):
    """Spike noise (a compound-Poisson derivative) under a smooth kernel, integrability 3/2."""
    v = np.zeros(spec.N)
    for t, h in ((0.07, 0.8), (0.21, -0.5), (0.33, 1.1)):
        v[int(round(t / spec.dx))] = h / spec.dx
    return VolterraProblem(phi1=KernelSpec("bump", center=0.15, width=0.1).build(spec),
                           sigma1=builtin_field("sin", 0.4), xi1=GridFunction(spec, v),
                           u0=GridFunction.constant(spec, 0.5), p=1.5)


@pytest.fixture(scope="module")
def fractional_run():
    from paravolt.models import run_fractional_sde
    return run_fractional_sde(0.9, "sin:0.5", seed=0)


# ---------------------------------------------------------------------------
# problem description and regime checks


def test_problem_validation():
    z = GridFunction.zeros(S)
    sig = builtin_field("sin", 0.5)
    with pytest.raises(ParameterError):
        VolterraProblem(phi1=z, sigma1=sig, xi1=z)
    with pytest.raises(ParameterError):
        VolterraProblem(phi1=z, sigma1=sig, xi1=z, u0=z, phi2=z)
    with pytest.raises(ParameterError):
        VolterraProblem(phi1=z, sigma1=sig, xi1=z, u0=z, p=0.5)


def test_initial_from_triple():
    prob = band_limited(0)
    part = build_partition(S)
    u1 = GridFunction.constant(S, 0.3)
    us = GridFunction.constant(S, 0.2)
    tri = replace(prob, u0=None, u0_triple=(u1, GridFunction.zeros(S), us))
    expect = paraproduct(u1, convolve(prob.phi1, prob.xi1), part) + us
    np.testing.assert_allclose(tri.initial().values, expect.values, atol=1e-14)


def test_resolve_exponents_declared_and_measured():
    prob = band_limited(0)
    ex = resolve_exponents(prob, "young")
    assert ex.beta1 == 1.0  # band-limited noise is smooth; beta is capped at 1
    assert ex.gamma1 == pytest.approx(ex.measured["gamma1"] - 0.05)
    dec = resolve_exponents(replace(prob, beta1=0.6, gamma1=0.8), "young")
    assert (dec.beta1, dec.gamma1) == (0.6, 0.8)
    assert dec.alpha == pytest.approx(0.4)
    wild = resolve_exponents(replace(prob, gamma1=1.9), "rough")
    assert wild.gamma1 <= 2 - wild.beta1 - 0.01 + 1e-15
    assert any("exceeds measured" in n for n in wild.notes)


@pytest.mark.parametrize("regime,exps,bad", [
    ("young", (0.7, 1.0, 0.8, 1.0, 4.0), False),
    ("young", (0.6, 1.0, 0.6, 1.0, 4.0), True),
    ("jumps", (0.5, 1.0, 1.2, 1.0, 1.5), False),
    ("jumps", (0.3, 1.0, 1.2, 1.0, 1.5), True),
    ("rough", (0.45, 0.7, 0.9, 1.0, 4.0), False),
    ("rough", (0.45, 0.45, 0.9, 1.0, 4.0), True),
])
def test_regime_violations(regime, exps, bad):
    assert bool(regime_violations(Exponents(*exps), regime)) == bad


def test_regime_name_checked():
    with pytest.raises(ParameterError):
        regime_violations(Exponents(0.6, 1, 0.8, 1, 4), "ito")


def test_support_checks():
    prob = band_limited(0)
    check_supports(prob)
    with pytest.raises(SupportError):
        check_supports(replace(prob, phi1=cutoff(S, 0.1, 0.2)))
    wide = GridFunction.constant(S, 1.0)
    with pytest.raises(SupportError):
        check_supports(replace(prob, xi1=wide))


# ---------------------------------------------------------------------------
# Young regime


def test_zero_field_returns_u0_in_one_step():
    prob = replace(band_limited(1), sigma1=builtin_field("zero"), sigma2=builtin_field("zero"))
    u, rep = solve_young(prob)
    assert rep.iterations == 1 and rep.converged
    assert np.array_equal(u.values, prob.u0.values)


@pytest.mark.parametrize("a", [1.0, -2.0])
def test_exponential_closed_form(a):
    T = S.L / 4
    u, rep = solve_young(linear_problem(step_kernel(S, T), a), tol=1e-11)
    n = int(round(T / S.dx)) + 1
    t = S.x[1:n]
    assert np.max(np.abs(u.scalar[1:n] / np.exp(a * t) - 1)) < 1e-4
    assert rep.residual <= 1e-11


@pytest.mark.parametrize("a", [1.0, -1.0])
def test_mittag_leffler_closed_form(a):
    T, r = S.L / 4, 0.9
    u, _ = solve_young(linear_problem(fractional_kernel(S, r, T), a), tol=1e-11)
    n = int(round(T / S.dx)) + 1
    t = S.x[1:n]
    exact = mittag_leffler(r, a * t ** r)
    assert np.max(np.abs(u.scalar[1:n] - exact) / np.abs(exact)) < 1e-3


def test_exponential_error_shrinks_with_grid():
    errs = []
    for N in (1024, 2048, 4096):
        s = GridSpec(N, 2.0)
        u, _ = solve_young(linear_problem(step_kernel(s, 0.5), 1.0, spec=s), tol=1e-11)
        n = int(round(0.5 / s.dx)) + 1
        errs.append(np.max(np.abs(u.scalar[1:n] - np.exp(s.x[1:n]))))
    assert errs[0] > errs[1] > errs[2]


@settings(max_examples=8)
@given(c=st.floats(0.1, 3.0))
def test_linear_equation_is_linear_in_u0(c):
    base, _ = solve_young(linear_problem(step_kernel(S, 0.25), 0.8, u0=1.0), tol=1e-11)
    scaled, _ = solve_young(linear_problem(step_kernel(S, 0.25), 0.8, u0=c), tol=1e-11)
    np.testing.assert_allclose(scaled.values, c * base.values, rtol=1e-9, atol=1e-10)


def test_causality():
    """Changing the noise after time t leaves the solution before t untouched."""
    prob = band_limited(2)
    u, _ = solve_young(prob, tol=1e-12)
    late = bump(S, 0.8, 0.02, 0.05)
    v, _ = solve_young(replace(prob, xi1=prob.xi1 + late), tol=1e-12)
    t_change = int(round(0.75 / S.dx))
    assert np.max(np.abs(u.scalar[:t_change] - v.scalar[:t_change])) < 1e-10
    assert np.max(np.abs(u.scalar - v.scalar)) > 1e-4


def test_fixed_point_property():
    prob = band_limited(3)
    u, rep = solve_young(prob, tol=1e-10)
    assert young_residual(prob, u) <= 2e-10
    again, rep2 = solve_young(prob, tol=1e-10, u_init=u)
    assert rep2.iterations == 1
    assert np.max(np.abs(again.values - u.values)) < 1e-9


def test_determinism():
    prob = band_limited(4)
    a, ra = solve_young(prob)
    b, rb = solve_young(prob)
    assert np.array_equal(a.values, b.values)
    assert ra.as_dict() == rb.as_dict()


def test_divergence_detected():
    prob = linear_problem(step_kernel(S, 0.25), 400.0)
    with pytest.raises(NonContractionError) as err:
        solve_young(prob)
    assert err.value.report is not None and len(err.value.report.trace) >= 4
    assert "scale_localize" in str(err.value)


def test_young_regime_violation_raised():
    from paravolt.errors import RegimeError
    prob = replace(band_limited(0), beta1=0.3, gamma1=0.9)
    with pytest.raises(RegimeError):
        solve_young(prob)


# ---------------------------------------------------------------------------
# jumps variant


def test_jumps_keep_initial_discontinuity():
    u0 = GridFunction(S, np.where(S.x < 0.3, 1.0, -0.5))
    prob = replace(poisson_problem(), sigma1=builtin_field("zero"), u0=u0)
    u, rep = solve_young_jumps(prob)
    assert rep.iterations == 1
    assert np.array_equal(u.values, u0.values)


def test_jumps_poisson_noise_matches_young():
    prob = poisson_problem()
    ex = resolve_exponents(prob, "jumps")
    assert ex.beta1 + 1 / ex.p > 1
    uj, rj = solve_young_jumps(prob)
    uy, _ = solve_young(prob)
    assert rj.converged
    assert np.max(np.abs(uj.values - uy.values)) <= 1e-10
    # the noise jumps are smoothed by the kernel: u is continuous at grid scale
    assert np.max(np.abs(np.diff(uj.scalar - prob.u0.scalar))) < 0.01


# ---------------------------------------------------------------------------
# paracontrolled solver


def test_paracontrolled_zero_field():
    prob = replace(band_limited(5), sigma1=builtin_field("zero"), sigma2=builtin_field("zero"))
    part = build_partition(S)
    u1 = GridFunction.constant(S, 0.4)
    tri = replace(prob, u0=None, u0_triple=(u1, GridFunction.zeros(S), GridFunction.constant(S, 0.1)))
    rp = lift_smooth(prob.phi1, prob.xi1, part)
    u, triple, rep = solve_paracontrolled(tri, rp)
    assert rep.iterations == 1
    expect = paraproduct(u1, convolve(prob.phi1, prob.xi1), part) + 0.1
    np.testing.assert_allclose(u.values, expect.values, atol=1e-13)


def test_oracle_equivalence_with_young():
    part = build_partition(S)
    for seed in (0, 1):
        prob = band_limited(seed)
        uy, _ = solve_young(prob, tol=1e-11)
        ur, triple, _ = solve_paracontrolled(prob, lift_smooth(prob.phi1, prob.xi1, part), tol=1e-10)
        assert sup_relative(ur, uy) <= 1e-6
        np.testing.assert_allclose(triple.reconstruct().values, ur.values, atol=1e-10)


def test_rough_solution_properties(fractional_run):
    rep = fractional_run.report
    alpha = rep.checks["exponents"]["alpha"]
    assert rep.converged
    assert rep.extra["usharp_regularity"] - rep.regularity >= 0.5 * alpha - 0.15
    rp = fractional_run.extra["rough_path"]
    assert rough_residual(fractional_run.problem, rp, fractional_run.u) <= 2e-9


def test_mu_is_a_genuine_input(fractional_run):
    prob, rp = fractional_run.problem, fractional_run.extra["rough_path"]
    base, _, _ = solve_paracontrolled(prob, rp)
    bumpy = bump(S, 0.5, 0.05, 0.1)
    slopes = []
    for c in (1e-3, 1e-2):
        moved = ConvRoughPath(rp.xi, rp.mu + bumpy * c, rp.kernel_id, {})
        u, _, _ = solve_paracontrolled(prob, moved)
        slopes.append((u - base).sup() / c)
    assert slopes[0] > 1e-4
    assert slopes[1] == pytest.approx(slopes[0], rel=0.05)


def test_rough_path_mismatch(fractional_run):
    prob, rp = fractional_run.problem, fractional_run.extra["rough_path"]
    with pytest.raises(RoughPathError):
        solve_paracontrolled(replace(prob, phi1=step_kernel(S, 0.25)), rp)
    with pytest.raises(RoughPathError):
        solve_paracontrolled(prob, ConvRoughPath(rp.xi * 2.0, rp.mu, rp.kernel_id, {}))
    two = GridFunction.zeros(S, 2)
    with pytest.raises(CapabilityError):
        solve_paracontrolled(replace(prob, xi1=two), ConvRoughPath(two, GridFunction.zeros(S, 4), rp.kernel_id))


# ---------------------------------------------------------------------------
# localisation and continuity


def test_scale_field_and_relabel():
    sig = builtin_field("sin", 0.5)
    half = scale_field(sig, 0.25)
    xs = np.linspace(-2, 2, 9)
    for k in range(sig.order + 1):
        np.testing.assert_allclose(half.scalar(k)(xs), 0.25 * sig.scalar(k)(xs))
    f = GridFunction.constant(S, 2.0)
    g = relabel(f, GridSpec(4096, 1.0), 3.0)
    assert g.spec.L == 1.0 and g.sup() == 6.0


def test_small_field_localizes_at_one():
    from paravolt.acceptance import scaling_problem
    prob = scaling_problem(0.2)
    direct, _ = solve_young(prob)
    u, lam, rep = scale_localize(prob)
    assert lam == 1.0
    n = int(round(S.L / 4 / S.dx))
    assert np.max(np.abs(u.scalar[:n] - direct.scalar[:n])) < 1e-10
    assert math.isfinite(rep.extra["scaled_resonant_defect"])


def test_scale_localize_argument_checks():
    from paravolt.acceptance import scaling_problem
    prob = scaling_problem(0.2)
    with pytest.raises(ParameterError):
        scale_localize(prob, lambdas=[0.5, 1.0])
    with pytest.raises(ParameterError):
        scale_localize(prob, inner="euler")
    with pytest.raises(ParameterError):
        scale_localize(prob, inner="rough")


def test_localization_exhausted():
    from paravolt.acceptance import scaling_problem
    with pytest.raises(LocalizationError) as err:
        scale_localize(scaling_problem(5000.0), lambdas=[1.0, 0.5])
    assert len(err.value.reports) == 2


def test_delay_outside_radius():
    from paravolt.acceptance import scaling_problem
    prob = replace(scaling_problem(0.2), r1=0.3)
    with pytest.raises(SupportError):
        localize(prob, 0.5, (0.25, 0.5))


def test_mu_only_perturbation_moves_solution(fractional_run):
    rep = lipschitz_probe(fractional_run.problem, fractional_run.extra["rough_path"], components=("mu",))
    assert not rep.failures
    assert min(rep.ratios) > 0
    assert rep.variation < 0.5
    with pytest.raises(ParameterError):
        lipschitz_probe(fractional_run.problem, fractional_run.extra["rough_path"], components=())


def test_sup_relative():
    a = GridFunction.constant(S, 2.0)
    assert sup_relative(a * 1.5, a) == pytest.approx(0.5)
    assert lp_norm(a, math.inf) == 2.0
