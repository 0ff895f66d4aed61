"""Exact-covariance fractional Gaussian noise by circulant embedding."""
from __future__ import annotations

from functools import lru_cache

import numpy as np

from .errors import ParameterError, SamplerError


def fgn_autocov(n: int, H: float) -> np.ndarray:
    """Autocovariance of unit-step fractional Gaussian noise at lags ``0..n``."""
    k = np.arange(n + 1, dtype=float)
    return 0.5 * (np.abs(k + 1) ** (2 * H) - 2 * k ** (2 * H) + np.abs(k - 1) ** (2 * H))


@lru_cache(maxsize=32)
def _sqrt_eigs(n: int, H: float) -> np.ndarray:
    c = fgn_autocov(n, H)
    row = np.concatenate([c, c[-2:0:-1]])
    lam = np.fft.fft(row).real
    if lam.min() < -1e-10 * lam.max():
        raise SamplerError(f"circulant embedding not positive for n={n}, H={H} (min eigenvalue {lam.min():.3e})")
    out = np.sqrt(np.clip(lam, 0.0, None) / len(row))
    out.setflags(write=False)
    return out


def sample_fgn(rng: np.random.Generator, n: int, H: float, dt: float, size: int = 1) -> np.ndarray:
    """``size`` independent fGn increment paths of length ``n`` with step ``dt``; shape ``(size, n)``."""
    if not 0 < H < 1:
        raise ParameterError(f"Hurst index must lie in (0, 1), got {H}")
    s = _sqrt_eigs(n, float(H))
    M = len(s)
    z = rng.standard_normal((size, M)) + 1j * rng.standard_normal((size, M))
    y = np.fft.fft(s[None, :] * z, axis=1)
    return dt ** H * y.real[:, :n]
