import math

import numpy as np
import pytest
from scipy.integrate import quad

from oracles import riemann_liouville_mass
from paravolt.errors import ParameterError, SupportError
from paravolt.gridfn import GridFunction, GridSpec, dilate, write_csv
from paravolt.paracalc import delta_grid
from paravolt.spectral import estimate_regularity
from paravolt.kernels import (KernelSpec, bump, check_causal, cutoff, fractional_kernel, halfline_window,
                              kernel_gamma, kernel_id, moment_norm, parse_kernel, step_kernel)


def test_step_kernel_shape(spec):
    T = 0.25
    k = step_kernel(spec, T).scalar
    x = spec.signed_x
    assert k[0] == 0.5
    assert np.all(k[(x > 0) & (x <= T)] == 1.0)
    assert np.all(k[x < 0] == 0.0)
    assert np.all(k[x >= 2 * T] == 0.0)
    mid = k[(x > T) & (x < 2 * T)]
    assert np.all((mid >= 0) & (mid <= 1)) and np.all(np.diff(mid) <= 0)
    assert np.array_equal(halfline_window(spec, T).values, step_kernel(spec, T).values)


def test_window_size_checked(spec):
    with pytest.raises(SupportError):
        step_kernel(spec, 0.6)
    with pytest.raises(ParameterError):
        step_kernel(spec, 0.0)
    with pytest.raises(ParameterError):
        fractional_kernel(spec, 1.3, 0.25)


def test_fractional_kernel_values(spec):
    r, T = 0.7, 0.25
    k = fractional_kernel(spec, r, T).scalar
    x = spec.signed_x
    inner = (x > 0) & (x <= T)
    np.testing.assert_allclose(k[inner], x[inner] ** (r - 1) / math.gamma(r), rtol=1e-14)
    # first sample is the mean over the half cell [0, dx/2]
    half = quad(lambda t: t ** (r - 1) / math.gamma(r), 0, spec.dx / 2)[0] / spec.dx
    assert k[0] == pytest.approx(half, rel=1e-10)
    assert np.array_equal(fractional_kernel(spec, 1.0, T).values, step_kernel(spec, T).values)


@pytest.mark.parametrize("r", [0.6, 0.85, 0.95])
def test_fractional_kernel_mass(r):
    s = GridSpec(2 ** 15, 2.0)
    T = 0.25
    k = fractional_kernel(s, r, T, windowed=False).scalar
    n = int(round(T / s.dx))
    mass = s.dx * (k[0] + k[1:n].sum() + 0.5 * k[n])
    assert mass == pytest.approx(riemann_liouville_mass(r, T), rel=5e-3)


def test_unwindowed_kernel_extends(spec):
    k = fractional_kernel(spec, 0.8, 0.25, windowed=False).scalar
    x = spec.signed_x
    assert np.all(k[(x > 0.6)] > 0)


@pytest.mark.parametrize("r", [0.7, 0.9])
def test_kernel_regularity_matches_exponent(spec, part, r):
    assert kernel_gamma(fractional_kernel(spec, r, 0.25), part) == pytest.approx(r, abs=0.1)


def test_step_kernel_regularity(spec, part):
    assert kernel_gamma(step_kernel(spec, 0.25), part) == pytest.approx(1.0, abs=0.1)


def test_moment_norm_finite_and_positive(spec, part):
    phi = fractional_kernel(spec, 0.9, 0.25)
    m = moment_norm(phi, 0.0, part, 0.9)
    assert 0 < m < math.inf


def test_cutoff_and_bump(spec):
    c = cutoff(spec, 0.1, 0.2).scalar
    x = spec.signed_x
    assert np.all(c[np.abs(x) <= 0.1] == 1.0)
    assert np.all(c[np.abs(x) >= 0.2] == 0.0)
    b = bump(spec, 0.5, 0.1, 0.2).scalar
    assert np.all(b[np.abs(x - 0.5) <= 0.1 - 1e-12] == 1.0)
    with pytest.raises(ParameterError):
        cutoff(spec, 0.2, 0.1)
    with pytest.raises(SupportError):
        cutoff(spec, 0.5, 1.5)


def test_causality_check(spec):
    check_causal(step_kernel(spec, 0.25))
    with pytest.raises(SupportError):
        check_causal(cutoff(spec, 0.1, 0.2))


def test_kernel_id_tracks_samples(spec):
    a = step_kernel(spec, 0.25)
    assert kernel_id(a) == kernel_id(step_kernel(spec, 0.25))
    assert kernel_id(a) != kernel_id(step_kernel(spec, 0.2))
    assert kernel_id(a) != kernel_id(a * (1 + 1e-15))
    assert len(kernel_id(a)) == 16


def test_parse_kernel_forms(spec, tmp_path):
    ks = parse_kernel("frac:r=0.9,T=0.2")
    assert ks == KernelSpec("fractional", T=0.2, r_exp=0.9)
    assert parse_kernel(ks.describe()) == ks
    assert parse_kernel("step:T=0.1,shift=0.05").shift == 0.05
    assert parse_kernel("bump:c=0.3,w=0.1").describe() == "bump:c=0.3,w=0.1"
    path = tmp_path / "k.csv"
    write_csv(path, step_kernel(spec, 0.25))
    assert np.array_equal(parse_kernel(f"file:{path}", spec).values, step_kernel(spec, 0.25).values)
    for bad in ("frac:T=0.2", "frac:r=1.2", "step:T=x", "step:T", "gauss:s=1", "step:T=0.1,z=2", "file:"):
        with pytest.raises(ParameterError):
            parse_kernel(bad)


def test_kernel_spec_build_matches_constructors(spec):
    assert np.array_equal(KernelSpec("step", T=0.2).build(spec).values, step_kernel(spec, 0.2).values)
    assert np.array_equal(KernelSpec("fractional", T=0.2, r_exp=0.8).build(spec).values,
                          fractional_kernel(spec, 0.8, 0.2).values)
    shifted = KernelSpec("step", T=0.2, shift=8 * spec.dx, scale=2.0).build(spec).scalar
    base = step_kernel(spec, 0.2).scalar
    np.testing.assert_array_equal(shifted[8:100], 2.0 * base[:92])


def test_custom_kernel_spec(spec):
    ks = KernelSpec("custom", fn=lambda t: np.exp(-t))
    k = ks.build(spec).scalar
    x = spec.signed_x
    np.testing.assert_allclose(k[x > 0], np.exp(-x[x > 0]))
    with pytest.raises(ParameterError):
        KernelSpec("mystery").evaluate(np.array([0.1]))


@pytest.mark.parametrize("ks", [KernelSpec("step", T=0.1), KernelSpec("fractional", T=0.1, r_exp=0.8),
                                KernelSpec("fractional", T=0.1, r_exp=0.9, shift=0.0)])
def test_cell_averages_against_quad(ks):
    s = GridSpec(512, 2.0)
    avg = ks.cell_averages(s, 120)
    for m in (1, 2, 5, 30, 51, 60, 119):
        a, b = (m - 1) * s.dx, m * s.dx
        ref = quad(ks.evaluate, a, b, limit=200)[0] / s.dx
        assert avg[m] == pytest.approx(ref, rel=1e-7, abs=1e-12)
    assert avg[0] == 0.0



def test_step_kernel_examples(spec):
    T = 0.25
    k = step_kernel(spec, T).scalar
    assert k[int(round(T / 2 / spec.dx))] == 1.0
    assert k[int(round(2 * T / spec.dx))] == 0.0


def test_fractional_mass_on_default_grid(spec):
    r, T = 0.9, 0.25
    k = fractional_kernel(spec, r, T).scalar
    n = int(round(T / spec.dx))
    mass = spec.dx * (k[0] + k[1:n].sum() + 0.5 * k[n])
    assert mass == pytest.approx(riemann_liouville_mass(r, T), rel=0.02)


@pytest.mark.parametrize("r", [0.6, 0.8, 0.95])
def test_fractional_kernel_dilation(spec, r):
    """``x -> 2x`` multiplies the bare power law by ``2^(r-1)``."""
    k = fractional_kernel(spec, r, 0.25, windowed=False)
    d = dilate(k, 2.0).scalar
    x = spec.signed_x
    sel = (x > 0) & (x < spec.L / 4)
    np.testing.assert_allclose(d[sel], 2.0 ** (r - 1) * k.scalar[sel], rtol=1e-10)


@pytest.mark.parametrize("make", [lambda s: step_kernel(s, 0.25), lambda s: fractional_kernel(s, 0.7, 0.25),
                                  lambda s: fractional_kernel(s, 0.9, 0.1, windowed=False)])
def test_kernels_causal_and_nonnegative(spec, make):
    k = make(spec)
    check_causal(k)
    assert np.all(k.values >= 0)


def test_cutoff_is_smooth(spec, part):
    c = cutoff(spec, 0.1, 0.3)
    assert np.all((c.values >= 0) & (c.values <= 1))
    assert estimate_regularity(c, part, 1.0, (3, 10)) >= 2.0
    x = spec.signed_x
    f = GridFunction(spec, np.where(np.abs(x) <= 0.1, np.cos(x), 0.0))
    assert np.array_equal((c * f).values, f.values)


def test_moment_norm_examples(spec, part):
    assert moment_norm(delta_grid(spec), 0.0, part, 0.5) == 0.0
    assert 0 < moment_norm(step_kernel(spec, 0.25), 0.0, part, 0.0) < math.inf
    assert 0 < moment_norm(fractional_kernel(spec, 0.8, 0.25), 0.0, part, -0.25) < math.inf
