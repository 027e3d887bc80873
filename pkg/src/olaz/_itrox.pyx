# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled OA-ITROX inner loop.

Same contract as :func:`olaz._itrox_py.itrox_loop`; the two are checked
against each other in the test suite.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs

cnp.import_array()

ctypedef double complex cplx


cdef inline double abs2(cplx z) noexcept nogil:
    return z.real * z.real + z.imag * z.imag


cdef inline cplx cconj(cplx z) noexcept nogil:
    return z.real - 1j * z.imag


cdef double _diag_sums(const cplx[::1] a, const cplx[::1] x, const cplx[::1] y,
                       const long[::1] lags, cplx[:, ::1] dcol, cplx[:, ::1] drow,
                       int N, int M, double f_delta) noexcept nogil:
    """Zone diagonal sums of the border blocks; returns the discretised ISL."""
    cdef int m, i, j, t, n_lag = lags.shape[0]
    cdef cplx acc
    cdef double isl = 0.0
    for m in range(M):
        for j in range(n_lag):
            t = lags[j]
            acc = 0
            for i in range(N - t):
                acc = acc + x[m * N + i] * cconj(a[i + t])
            for i in range(N - t, N):
                acc = acc + x[m * N + i] * cconj(a[i + t - N])
            dcol[m, j] = acc
            isl += abs2(acc)
    for m in range(1, M):
        for j in range(n_lag):
            t = lags[j]
            acc = 0
            for i in range(N - t):
                acc = acc + a[i] * cconj(y[m * N + i + t])
            for i in range(N - t, N):
                acc = acc + a[i] * cconj(y[m * N + i + t - N])
            drow[m, j] = acc
            isl += abs2(acc)
    return f_delta * isl


cdef void _apply_y(const cplx[::1] x, const cplx[::1] y, const cplx[:, ::1] ccol,
                   const cplx[:, ::1] crow, const long[::1] lags,
                   const cplx[::1] v, cplx[::1] out, cplx[::1] buf,
                   int N, int M) noexcept nogil:
    """out = Y v with Y = x y^H minus the zone corrections."""
    cdef int m, i, j, t, MN = M * N, n_lag = lags.shape[0]
    cdef cplx ip = 0, c
    for i in range(MN):
        ip = ip + cconj(y[i]) * v[i]
    for i in range(MN):
        out[i] = x[i] * ip
    # block (m, 0) acts on v block 0
    for i in range(N):
        buf[i] = v[i]
        buf[i + N] = v[i]
    for m in range(M):
        for j in range(n_lag):
            t = lags[j]
            c = ccol[m, j]
            for i in range(N):
                out[m * N + i] = out[m * N + i] - c * buf[i + t]
    # blocks (0, m) accumulate into output block 0
    for m in range(1, M):
        for i in range(N):
            buf[i] = v[m * N + i]
            buf[i + N] = v[m * N + i]
        for j in range(n_lag):
            t = lags[j]
            c = crow[m, j]
            for i in range(N):
                out[i] = out[i] - c * buf[i + t]


cdef void _apply_yh(const cplx[::1] x, const cplx[::1] y, const cplx[:, ::1] ccol,
                    const cplx[:, ::1] crow, const long[::1] lags,
                    const cplx[::1] u, cplx[::1] out, cplx[::1] buf,
                    int N, int M) noexcept nogil:
    """out = Y^H u."""
    cdef int m, i, j, t, MN = M * N, n_lag = lags.shape[0]
    cdef cplx ip = 0, c
    for i in range(MN):
        ip = ip + cconj(x[i]) * u[i]
    for i in range(MN):
        out[i] = y[i] * ip
    for m in range(M):
        for i in range(N):
            buf[i] = u[m * N + i]
            buf[i + N] = u[m * N + i]
        for j in range(n_lag):
            t = N - lags[j]
            c = cconj(ccol[m, j])
            for i in range(N):
                out[i] = out[i] - c * buf[i + t]
    for i in range(N):
        buf[i] = u[i]
        buf[i + N] = u[i]
    for m in range(1, M):
        for j in range(n_lag):
            t = N - lags[j]
            c = cconj(crow[m, j])
            for i in range(N):
                out[m * N + i] = out[m * N + i] - c * buf[i + t]


cdef double _norm(const cplx[::1] z) noexcept nogil:
    cdef int i
    cdef double s = 0.0
    for i in range(z.shape[0]):
        s += abs2(z[i])
    return sqrt(s)


def itrox_loop(cnp.ndarray a0, int Z, int M, double f_delta, long max_iters,
               double eps, int power_iters, double power_tol, long record_every):
    """Run OA-ITROX iterations from ``a0``.

    Returns ``(a, trace, trace_iters, iters_run, converged, initial_isl,
    power_failures, zero_ties)``.
    """
    cdef int N = a0.shape[0]
    cdef int MN = M * N
    cdef int m, i, j, p, n_lag
    cdef long it, n_rec = 0
    cdef double sigma, sigma_prev, nrm, diff, isl, root = sqrt(<double>MN)
    cdef double mag
    cdef bint converged = False, power_ok
    cdef long power_failures = 0, zero_ties = 0
    cdef cplx acc, fm

    lags_np = np.concatenate([np.arange(1, Z + 1), np.arange(N - Z, N)]).astype(np.int_)
    cdef long[::1] lags = lags_np
    n_lag = lags.shape[0]

    kk = np.arange(N)
    F_np = np.exp(2j * np.pi * np.outer(np.arange(M) * f_delta, kk) / N).ravel()
    cdef cplx[::1] F = F_np
    cdef cplx[::1] a = np.ascontiguousarray(a0, dtype=np.complex128).copy()
    cdef cplx[::1] x = np.empty(MN, dtype=np.complex128)
    cdef cplx[::1] y = np.empty(MN, dtype=np.complex128)
    cdef cplx[::1] s = np.empty(MN, dtype=np.complex128)
    cdef cplx[::1] v = np.empty(MN, dtype=np.complex128)
    cdef cplx[::1] buf = np.empty(2 * N, dtype=np.complex128)
    cdef cplx[::1] a_new = np.empty(N, dtype=np.complex128)
    cdef cplx[:, ::1] dcol = np.zeros((M, n_lag), dtype=np.complex128)
    cdef cplx[:, ::1] drow = np.zeros((M, n_lag), dtype=np.complex128)

    n_slots = max_iters // record_every + 2
    trace_np = np.empty(n_slots, dtype=np.float64)
    trace_it_np = np.empty(n_slots, dtype=np.int64)
    cdef double[::1] trace = trace_np
    cdef long long[::1] trace_it = trace_it_np

    # lift a^0
    for m in range(M):
        for i in range(N):
            fm = F[m * N + i]
            x[m * N + i] = a[i] * fm
            y[m * N + i] = a[i] * cconj(fm)
    isl = _diag_sums(a, x, y, lags, dcol, drow, N, M, f_delta)
    initial_isl = isl

    it = 0
    while it < max_iters:
        it += 1
        # Step 1: projection onto the zone set (corrections = DS / N)
        for m in range(M):
            for j in range(n_lag):
                dcol[m, j] = dcol[m, j] / N
                drow[m, j] = drow[m, j] / N
        for j in range(n_lag):
            drow[0, j] = 0
        # Step 2: top singular pair by power iteration, warm start at x_a
        nrm = _norm(x)
        for i in range(MN):
            s[i] = x[i] / nrm
        sigma_prev = 0.0
        power_ok = False
        with nogil:
            for p in range(power_iters):
                _apply_yh(x, y, dcol, drow, lags, s, v, buf, N, M)
                nrm = _norm(v)
                for i in range(MN):
                    v[i] = v[i] / nrm
                _apply_y(x, y, dcol, drow, lags, v, s, buf, N, M)
                sigma = _norm(s)
                for i in range(MN):
                    s[i] = s[i] / sigma
                if fabs(sigma - sigma_prev) <= power_tol * sigma:
                    power_ok = True
                    break
                sigma_prev = sigma
        if not power_ok:
            power_failures += 1
        # Step 3: closed-form unimodular recovery
        diff = 0.0
        for i in range(N):
            acc = 0
            for m in range(M):
                fm = F[m * N + i]
                acc = acc + s[m * N + i] * cconj(fm) + v[m * N + i] * fm
            acc = acc * (root / M)
            mag = sqrt(abs2(acc))
            if mag == 0.0:
                zero_ties += 1
                a_new[i] = 1.0
            else:
                a_new[i] = acc / mag
            diff += abs2(a_new[i] - a[i])
        for i in range(N):
            a[i] = a_new[i]
        for m in range(M):
            for i in range(N):
                fm = F[m * N + i]
                x[m * N + i] = a[i] * fm
                y[m * N + i] = a[i] * cconj(fm)
        isl = _diag_sums(a, x, y, lags, dcol, drow, N, M, f_delta)
        if it % record_every == 0:
            trace[n_rec] = isl
            trace_it[n_rec] = it
            n_rec += 1
        if diff <= eps:
            converged = True
            break

    if it % record_every != 0:
        trace[n_rec] = isl
        trace_it[n_rec] = it
        n_rec += 1

    return (np.asarray(a).copy(), trace_np[:n_rec].copy(), trace_it_np[:n_rec].copy(),
            int(it), bool(converged), float(initial_isl), int(power_failures),
            int(zero_ties))
