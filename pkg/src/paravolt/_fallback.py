"""Pure numpy/Python versions of the compiled kernels (same signatures)."""
from __future__ import annotations

import math

import numpy as np


def bony_blocks(F: np.ndarray, G: np.ndarray):
    B = F.shape[0]
    SF = np.cumsum(F, axis=0)
    SG = np.cumsum(G, axis=0)
    if B > 2:
        tfg = np.einsum("bnd,bnd->nd", SF[: B - 2], G[2:])
        tgf = np.einsum("bnd,bnd->nd", SG[: B - 2], F[2:])
    else:
        tfg = np.zeros(F.shape[1:])
        tgf = np.zeros(F.shape[1:])
    near = G.copy()
    near[1:] += G[:-1]
    near[:-1] += G[1:]
    pi = np.einsum("bnd,bnd->nd", F, near)
    return tfg, tgf, pi


_FIELDS = {
    0: lambda eps, x: 0.0 * x,
    1: lambda eps, x: eps * np.sin(x),
    2: lambda eps, x: eps * x / (1.0 + x * x),
    3: lambda eps, x: eps * np.tanh(x),
    4: lambda eps, x: eps * x,
}


def volterra_midpoint(g, kbar, dtheta, kinds, eps, n_steps, max_inner=100, inner_tol=1e-15):
    T = kbar.shape[0]
    fields = [(_FIELDS[int(kinds[t])], float(eps[t])) for t in range(T)]
    u = np.zeros(n_steps)
    f = np.zeros((T, n_steps))
    u[0] = g[0]
    worst = 0.0
    for i in range(1, n_steps):
        acc = g[i]
        if i >= 2:
            # lags i-k for k = 0..i-2 run from i down to 2
            acc += float(np.sum(kbar[:, i:1:-1] * f[:, : i - 1]))
        ui = u[i - 1]
        res = 0.0
        for _ in range(max_inner):
            mid = 0.5 * (u[i - 1] + ui)
            new = acc
            for t, (fn, e) in enumerate(fields):
                new += kbar[t, 1] * fn(e, mid) * dtheta[t, i - 1]
            res = abs(new - ui)
            ui = new
            if res <= inner_tol * (1.0 + abs(ui)):
                break
        worst = max(worst, res)
        u[i] = ui
        mid = 0.5 * (u[i - 1] + u[i])
        for t, (fn, e) in enumerate(fields):
            f[t, i - 1] = fn(e, mid) * dtheta[t, i - 1]
    return u, worst


def _jv_series(nu, x):
    half = 0.5 * x
    term = half ** nu / math.gamma(nu + 1.0)
    total = term
    q = -half * half
    for k in range(1, 200):
        term *= q / (k * (k + nu))
        total += term
        if abs(term) < 1e-17 * abs(total) and k > 5:
            break
    return total


def _jv_hankel(nu, x):
    mu = 4.0 * nu * nu
    chi = x - (0.5 * nu + 0.25) * math.pi
    p, q, term, prev = 1.0, 0.0, 1.0, 1e300
    for k in range(1, 60):
        term *= (mu - (2.0 * k - 1.0) ** 2) / (k * 8.0 * x)
        if abs(term) > prev:
            break
        prev = abs(term)
        r = k % 4
        if r == 1:
            q += term
        elif r == 2:
            p -= term
        elif r == 3:
            q -= term
        else:
            p += term
        if abs(term) < 1e-17:
            break
    return math.sqrt(2.0 / (math.pi * x)) * (p * math.cos(chi) - q * math.sin(chi))


def _jv(nu, x):
    return _jv_series(nu, x) if x <= 12.0 else _jv_hankel(nu, x)


def bessel_j(nu, x):
    arr = np.asarray(x, dtype=float)
    out = np.array([_jv(nu, float(v)) for v in arr.ravel()])
    return out.reshape(arr.shape) if arr.ndim else float(out[0])


def bessel_zeros(nu, count, tol=1e-10, max_iter=50):
    out = np.empty(count)
    mu = 4.0 * nu * nu
    for n in range(count):
        beta = (n + 1 + 0.5 * nu - 0.25) * math.pi
        x = beta - (mu - 1.0) / (8.0 * beta)
        for _ in range(max_iter):
            jv = _jv(nu, x)
            djv = _jv(nu - 1.0, x) - nu / x * jv
            step = jv / djv
            x -= step
            if abs(step) <= tol * (1.0 + abs(x)):
                break
        else:
            return out, n
        out[n] = x
    return out, -1
