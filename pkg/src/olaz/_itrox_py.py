"""Pure-numpy OA-ITROX inner loop, used when the compiled extension is unavailable.

The lifted matrix ``Y = x y^H - C`` is never formed. ``C`` only has non-zero
blocks in block-column 0 and block-row 0, and each of those blocks is a
circulant built from the zone corrections, so products with ``Y`` and ``Y^H``
reduce to one inner product plus a few circular convolutions.
"""

import numpy as np


def _circulant_spectra(corr: np.ndarray, lags: np.ndarray, N: int) -> np.ndarray:
    """FFT of the kernels ``g`` with ``(C w)[i] = sum_t corr[t] w[i + lags[t]] = (g * w)[i]``."""
    g = np.zeros((corr.shape[0], N), dtype=np.complex128)
    g[:, (-lags) % N] = corr
    return np.fft.fft(g, axis=1)


def _diag_sums(a, x, y, lags, f_delta):
    A = np.fft.fft(a)
    # dcol[m, tau] = sum_i x_m[i] conj(a[i+tau]);  drow[m, tau] = sum_i a[i] conj(y_m[i+tau])
    dcol = np.conj(np.fft.ifft(A * np.conj(np.fft.fft(x, axis=1)), axis=1))[:, lags]
    drow = np.conj(np.fft.ifft(np.fft.fft(y, axis=1) * np.conj(A), axis=1))[:, lags]
    drow[0] = 0.0
    isl = f_delta * (np.sum(np.abs(dcol) ** 2) + np.sum(np.abs(drow) ** 2))
    return dcol, drow, float(isl)


def itrox_loop(a0, Z, M, f_delta, max_iters, eps, power_iters, power_tol, record_every):
    """Run OA-ITROX iterations from ``a0``.

    Returns ``(a, trace, trace_iters, iters_run, converged, initial_isl,
    power_failures, zero_ties)``, same as the compiled kernel.
    """
    a = np.array(a0, dtype=np.complex128)
    N = a.size
    MN = M * N
    lags = np.concatenate([np.arange(1, Z + 1), np.arange(N - Z, N)])
    F = np.exp(2j * np.pi * np.outer(np.arange(M) * f_delta, np.arange(N)) / N)
    root = np.sqrt(MN)

    x = a * F
    y = a * np.conj(F)
    dcol, drow, isl = _diag_sums(a, x, y, lags, f_delta)
    initial_isl = isl

    trace, trace_iters = [], []
    converged = False
    power_failures = zero_ties = 0
    it = 0
    while it < max_iters:
        it += 1
        Gcol = _circulant_spectra(dcol / N, lags, N)
        Grow = _circulant_spectra(drow / N, lags, N)

        def apply_y(v):
            out = x * np.vdot(y, v)
            out -= np.fft.ifft(Gcol * np.fft.fft(v[0]), axis=1)
            out[0] -= np.fft.ifft(np.sum(Grow * np.fft.fft(v, axis=1), axis=0))
            return out

        def apply_yh(u):
            out = y * np.vdot(x, u)
            U = np.fft.fft(u, axis=1)
            out[0] -= np.fft.ifft(np.sum(np.conj(Gcol) * U, axis=0))
            out -= np.fft.ifft(np.conj(Grow) * U[0], axis=1)
            return out

        s = x / np.linalg.norm(x)
        sigma_prev = 0.0
        ok = False
        for _ in range(power_iters):
            v = apply_yh(s)
            v /= np.linalg.norm(v)
            s = apply_y(v)
            sigma = np.linalg.norm(s)
            s /= sigma
            if abs(sigma - sigma_prev) <= power_tol * sigma:
                ok = True
                break
            sigma_prev = sigma
        if not ok:
            power_failures += 1

        acc = (root / M) * np.sum(s * np.conj(F) + v * F, axis=0)
        mag = np.abs(acc)
        ties = mag == 0.0
        zero_ties += int(np.count_nonzero(ties))
        a_new = np.where(ties, 1.0 + 0j, acc / np.where(ties, 1.0, mag))
        diff = float(np.sum(np.abs(a_new - a) ** 2))
        a = a_new
        x = a * F
        y = a * np.conj(F)
        dcol, drow, isl = _diag_sums(a, x, y, lags, f_delta)
        if it % record_every == 0:
            trace.append(isl)
            trace_iters.append(it)
        if diff <= eps:
            converged = True
            break

    if it % record_every != 0:
        trace.append(isl)
        trace_iters.append(it)

    return (a, np.array(trace, dtype=np.float64), np.array(trace_iters, dtype=np.int64),
            it, converged, initial_isl, power_failures, zero_ties)
