# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops.

Same API as ``paravolt._fallback``; ``paravolt._core`` picks one at import.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sin, cos, tanh, fabs, sqrt, pow, tgamma, M_PI

cnp.import_array()


def bony_blocks(double[:, :, ::1] F, double[:, :, ::1] G):
    """Paraproducts ``T_f g``, ``T_g f`` and resonant ``pi(f, g)`` from block stacks.

    ``F[b]`` holds block ``j = b - 1``.  ``T_f g`` sums ``S_{j-1} f * Delta_j g`` for
    ``j >= 1`` where ``S_{j-1}`` collects blocks ``<= j - 2``.
    """
    cdef Py_ssize_t B = F.shape[0], N = F.shape[1], D = F.shape[2]
    cdef Py_ssize_t b, i, c
    cdef double[:, ::1] sf = np.zeros((N, D))
    cdef double[:, ::1] sg = np.zeros((N, D))
    tfg_arr = np.zeros((N, D))
    tgf_arr = np.zeros((N, D))
    pi_arr = np.zeros((N, D))
    cdef double[:, ::1] tfg = tfg_arr
    cdef double[:, ::1] tgf = tgf_arr
    cdef double[:, ::1] pi = pi_arr
    cdef double near
    for b in range(B):
        if b >= 2:
            for i in range(N):
                for c in range(D):
                    sf[i, c] += F[b - 2, i, c]
                    sg[i, c] += G[b - 2, i, c]
                    tfg[i, c] += sf[i, c] * G[b, i, c]
                    tgf[i, c] += sg[i, c] * F[b, i, c]
        for i in range(N):
            for c in range(D):
                near = G[b, i, c]
                if b > 0:
                    near += G[b - 1, i, c]
                if b + 1 < B:
                    near += G[b + 1, i, c]
                pi[i, c] += F[b, i, c] * near
    return tfg_arr, tgf_arr, pi_arr


cdef inline double _field(int kind, double eps, double x) nogil:
    if kind == 1:
        return eps * sin(x)
    elif kind == 2:
        return eps * x / (1.0 + x * x)
    elif kind == 3:
        return eps * tanh(x)
    elif kind == 4:
        return eps * x
    return 0.0


def volterra_midpoint(double[::1] g, double[:, ::1] kbar, double[:, ::1] dtheta,
                      int[::1] kinds, double[::1] eps, Py_ssize_t n_steps,
                      int max_inner=100, double inner_tol=1e-15):
    """Direct product-midpoint quadrature for ``u = g + sum_t K_t * (sigma_t(u) dtheta_t)``.

    ``kbar[t, m]`` is the average of kernel ``t`` over lag cell ``[(m-1)dx, m dx]``;
    ``dtheta[t, k]`` is the driver increment over ``[x_k, x_{k+1}]``.  The last
    cell uses the midpoint ``(u_{i-1} + u_i)/2`` and is solved by fixed-point
    iteration.  Returns ``(u, worst inner residual)``.
    """
    cdef Py_ssize_t T = kbar.shape[0]
    cdef Py_ssize_t i, k, t, it
    u_arr = np.zeros(n_steps)
    cdef double[::1] u = u_arr
    cdef double[:, ::1] f = np.zeros((T, n_steps))
    cdef double acc, ui, new, mid, worst = 0.0, res
    u[0] = g[0]
    with nogil:
        for i in range(1, n_steps):
            acc = g[i]
            for t in range(T):
                if kinds[t] == 0:
                    continue
                for k in range(i - 1):
                    acc += kbar[t, i - k] * f[t, k]
            ui = u[i - 1]
            res = 0.0
            for it in range(max_inner):
                mid = 0.5 * (u[i - 1] + ui)
                new = acc
                for t in range(T):
                    new += kbar[t, 1] * _field(kinds[t], eps[t], mid) * dtheta[t, i - 1]
                res = fabs(new - ui)
                ui = new
                if res <= inner_tol * (1.0 + fabs(ui)):
                    break
            if res > worst:
                worst = res
            u[i] = ui
            mid = 0.5 * (u[i - 1] + u[i])
            for t in range(T):
                f[t, i - 1] = _field(kinds[t], eps[t], mid) * dtheta[t, i - 1]
    return u_arr, worst


# ---------------------------------------------------------------------------
# Bessel functions of the first kind, real order, positive argument

cdef double _jv_series(double nu, double x) nogil:
    cdef double half = 0.5 * x
    cdef double term = pow(half, nu) / tgamma(nu + 1.0)
    cdef double total = term
    cdef double q = -half * half
    cdef int k
    for k in range(1, 200):
        term *= q / (k * (k + nu))
        total += term
        if fabs(term) < 1e-17 * fabs(total) and k > 5:
            break
    return total


cdef double _jv_hankel(double nu, double x) nogil:
    cdef double mu = 4.0 * nu * nu
    cdef double chi = x - (0.5 * nu + 0.25) * M_PI
    cdef double p = 1.0, q = 0.0, term = 1.0, prev = 1e300
    cdef int k
    for k in range(1, 60):
        term *= (mu - (2.0 * k - 1.0) * (2.0 * k - 1.0)) / (k * 8.0 * x)
        if fabs(term) > prev:
            break
        prev = fabs(term)
        if k % 4 == 1:
            q += term
        elif k % 4 == 2:
            p -= term
        elif k % 4 == 3:
            q -= term
        else:
            p += term
        if fabs(term) < 1e-17:
            break
    return sqrt(2.0 / (M_PI * x)) * (p * cos(chi) - q * sin(chi))


cdef double _jv(double nu, double x) nogil:
    if x <= 12.0:
        return _jv_series(nu, x)
    return _jv_hankel(nu, x)


def bessel_j(double nu, x):
    """``J_nu(x)`` for ``x > 0`` (series up to 12, Hankel asymptotics beyond)."""
    arr = np.asarray(x, dtype=float)
    flat = np.ascontiguousarray(arr.ravel())
    out = np.empty_like(flat)
    cdef double[::1] xv = flat
    cdef double[::1] ov = out
    cdef Py_ssize_t i
    for i in range(xv.shape[0]):
        ov[i] = _jv(nu, xv[i])
    return out.reshape(arr.shape) if arr.ndim else float(out[0])


def bessel_zeros(double nu, Py_ssize_t count, double tol=1e-10, int max_iter=50):
    """First ``count`` positive zeros of ``J_nu``: McMahon seeds polished by Newton.

    Returns ``(zeros, failed_index)`` with ``failed_index = -1`` on success.
    """
    out = np.empty(count)
    cdef double[::1] z = out
    cdef double mu = 4.0 * nu * nu
    cdef double beta, x, step, jv, djv
    cdef Py_ssize_t n
    cdef int it
    cdef bint ok
    for n in range(count):
        beta = (n + 1 + 0.5 * nu - 0.25) * M_PI
        x = beta - (mu - 1.0) / (8.0 * beta)
        ok = False
        for it in range(max_iter):
            jv = _jv(nu, x)
            djv = _jv(nu - 1.0, x) - nu / x * jv
            step = jv / djv
            x -= step
            if fabs(step) <= tol * (1.0 + fabs(x)):
                ok = True
                break
        if not ok:
            return out, n
        z[n] = x
    return out, -1
