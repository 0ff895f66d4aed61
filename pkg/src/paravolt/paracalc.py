"""Bony calculus on the grid: paraproducts, resonant term, convolution and commutators.

Products are plain pointwise grid products with no dealiasing, which keeps the
decomposition ``f g = T_f g + T_g f + pi(f, g)`` exact on the grid.
"""
from __future__ import annotations

import numpy as np

from . import _core
from .errors import SpecError
from .gridfn import GridFunction, VectorField, apply_field, check_compatible, shift
from .spectral import DyadicPartition, block_stack_array


def _stacks(f: GridFunction, g: GridFunction, part: DyadicPartition):
    check_compatible(f, g)
    if f.spec != part.spec:
        raise SpecError(f"partition built for {part.spec}, functions live on {f.spec}")
    d = max(f.channels, g.channels)
    fv = np.broadcast_to(f.values, (f.spec.N, d))
    gv = np.broadcast_to(g.values, (g.spec.N, d))
    F = np.ascontiguousarray(block_stack_array(fv, part))
    G = np.ascontiguousarray(block_stack_array(gv, part))
    return F, G


def bony(f: GridFunction, g: GridFunction, part: DyadicPartition):
    """``(T_f g, T_g f, pi(f, g))`` from a single pass over the block stacks."""
    F, G = _stacks(f, g, part)
    tfg, tgf, pi = _core.bony_blocks(F, G)
    return (GridFunction(f.spec, tfg), GridFunction(f.spec, tgf), GridFunction(f.spec, pi))


def paraproduct(f: GridFunction, g: GridFunction, part: DyadicPartition) -> GridFunction:
    """``T_f g = sum_{j>=1} S_{j-1} f * Delta_j g`` with ``S_{j-1}`` summing blocks ``<= j-2``."""
    return bony(f, g, part)[0]


def resonant(f: GridFunction, g: GridFunction, part: DyadicPartition) -> GridFunction:
    """``pi(f, g) = sum_{|i-j|<=1} Delta_i f * Delta_j g``."""
    return bony(f, g, part)[2]


def convolve(f: GridFunction, g: GridFunction) -> GridFunction:
    """``dx``-scaled circular convolution, computed with the FFT."""
    check_compatible(f, g)
    N = f.spec.N
    F = np.fft.rfft(f.values, axis=0)
    G = np.fft.rfft(g.values, axis=0)
    return GridFunction(f.spec, f.spec.dx * np.fft.irfft(F * G, n=N, axis=0))


def delta_grid(spec) -> GridFunction:
    """Discrete unit mass at the origin (the identity for ``convolve``)."""
    v = np.zeros(spec.N)
    v[0] = 1.0 / spec.dx
    return GridFunction(spec, v)


def gamma_commutator(f: GridFunction, g: GridFunction, h: GridFunction,
                     part: DyadicPartition) -> GridFunction:
    """``Gamma(f, g, h) = pi(T_f g, h) - f * pi(g, h)``."""
    return resonant(paraproduct(f, g, part), h, part) - f * resonant(g, h, part)


def rphi_commutator(phi: GridFunction, f: GridFunction, g: GridFunction, r: float,
                    part: DyadicPartition) -> GridFunction:
    """``R_phi(f, g) = phi * T_f g - T_{f(. - r)} (phi * g)``."""
    return convolve(phi, paraproduct(f, g, part)) - paraproduct(shift(f, -r), convolve(phi, g), part)


def linearize_sigma(sigma: VectorField, u: GridFunction, part: DyadicPartition) -> GridFunction:
    """Remainder ``S_sigma(u) = sigma(u) - sigma(0) - T_{sigma'(u)} u``."""
    s0 = apply_field(sigma, u, 0)
    zero = apply_field(sigma, GridFunction.zeros(u.spec, sigma.n), 0).values[0]
    ds = apply_field(sigma, u, 1)
    n, m = sigma.n, sigma.m
    if n == 1:
        lin = paraproduct(ds, u, part)
    else:
        # (sigma')_{a b c} acts on u_c; accumulate T_{sigma'_{abc}} u_c
        out = np.zeros((u.spec.N, n * m))
        dv = ds.values.reshape(u.spec.N, n * m, n)
        for ab in range(n * m):
            for c in range(n):
                t = paraproduct(GridFunction(u.spec, dv[:, ab, c]),
                                GridFunction(u.spec, u.values[:, c]), part)
                out[:, ab] += t.scalar
        lin = GridFunction(u.spec, out)
    return s0 - zero[None, :] - lin
