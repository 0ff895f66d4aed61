"""Independent reference implementations used only by the tests.

Nothing here calls the package's FFT paths: blocks come from an explicit DFT
matrix, convolutions from direct sums, Bessel values from scipy.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.optimize import brentq
from scipy.special import gamma as gamma_fn
from scipy.special import jv


def dft_matrix(N: int) -> np.ndarray:
    k = np.arange(N)
    return np.exp(-2j * np.pi * np.outer(k, k) / N)


def direct_blocks(values: np.ndarray, multipliers_full: list[np.ndarray]) -> np.ndarray:
    """Blocks of a scalar sample vector by explicit DFT; multipliers are given on all N frequencies."""
    N = len(values)
    W = dft_matrix(N)
    F = W @ values
    return np.array([(W.conj() @ (m * F)).real / N for m in multipliers_full])


def direct_convolution(f: np.ndarray, g: np.ndarray, dx: float) -> np.ndarray:
    """``(f * g)(x_i) = dx * sum_k f(x_{i-k}) g(x_k)`` with periodic indices, O(N^2)."""
    N = len(f)
    out = np.empty(N)
    for i in range(N):
        out[i] = dx * np.dot(f[(i - np.arange(N)) % N], g)
    return out


def block_paraproduct(F: np.ndarray, G: np.ndarray) -> np.ndarray:
    """``sum_{j} (sum_{i <= j-2} Delta_i f) Delta_j g`` from block rows indexed -1..J."""
    out = np.zeros(F.shape[1])
    for b in range(F.shape[0]):
        for a in range(b - 1):
            out += F[a] * G[b]
    return out


def block_resonant(F: np.ndarray, G: np.ndarray) -> np.ndarray:
    out = np.zeros(F.shape[1])
    for a in range(F.shape[0]):
        for b in range(F.shape[0]):
            if abs(a - b) <= 1:
                out += F[a] * G[b]
    return out


def mittag_leffler(r: float, z: np.ndarray, terms: int = 50) -> np.ndarray:
    """``E_r(z) = sum_k z^k / Gamma(r k + 1)`` by direct summation."""
    z = np.asarray(z, dtype=float)
    k = np.arange(terms)
    return np.sum(z[..., None] ** k / gamma_fn(r * k + 1.0), axis=-1)


def bessel_zeros(nu: float, count: int) -> np.ndarray:
    """Positive zeros of ``J_nu`` by bracketing sign changes and Brent's method."""
    out, x = [], 1e-3
    while len(out) < count:
        a, b = x, x + 0.05
        if jv(nu, a) * jv(nu, b) < 0:
            out.append(brentq(lambda t: jv(nu, t), a, b, xtol=1e-14))
        x = b
    return np.array(out)


def bessel_j(nu: float, x) -> np.ndarray:
    return jv(nu, x)


def fbm_covariance(s, t, H: float):
    return 0.5 * (np.abs(s) ** (2 * H) + np.abs(t) ** (2 * H) - np.abs(t - s) ** (2 * H))


def weierstrass(x: np.ndarray, L: float, H: float, levels: int = 12) -> np.ndarray:
    return sum(2.0 ** (-k * H) * np.cos(2.0 ** k * 2 * np.pi * x / L) for k in range(levels))


def exp_oracle(a: float, t: np.ndarray, c: float = 1.0) -> np.ndarray:
    return c * np.exp(a * t)


def riemann_liouville_mass(r: float, T: float) -> float:
    """``int_0^T x^(r-1)/Gamma(r) dx``."""
    return T ** r / math.gamma(r + 1.0)
