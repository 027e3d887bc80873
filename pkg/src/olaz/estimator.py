"""LS channel estimation from time-domain pilots, DPSS interpolation, equalization and metrics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal.windows import dpss

from .afcore import as_sequence
from .channel import FrameConfig, qpsk_demap
from .errors import ConditioningError, DimensionError, DomainError

COND_LIMIT = 1e10
TIKHONOV = 1e-6


def build_at(a, L: int) -> np.ndarray:
    """``N x L`` cyclic pilot matrix with entry ``(i, j) = a[(i - j) mod N]``."""
    a = as_sequence(a)
    N = a.size
    if not 1 <= L <= N:
        raise DomainError(f"need 1 <= L <= N={N}, got L={L}")
    idx = (np.arange(N)[:, None] - np.arange(L)[None, :]) % N
    return a[idx]


def _checked_inverse(G: np.ndarray, what: str) -> np.ndarray:
    cond = float(np.linalg.cond(G))
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise ConditioningError(f"{what} is ill-conditioned", cond)
    return np.linalg.inv(G)


class LsEstimator:
    """Precomputed ``(A^H A)^{-1} A^H`` for one pilot and tap count.

    Raises:
        ConditioningError: the Gram matrix condition number exceeds ``1e10``.
    """

    def __init__(self, a, L: int):
        self.A = build_at(a, L)
        self.gram = self.A.conj().T @ self.A
        self.pinv = _checked_inverse(self.gram, "pilot Gram matrix") @ self.A.conj().T

    @property
    def L(self) -> int:
        return self.A.shape[1]

    def __call__(self, y) -> np.ndarray:
        y = np.asarray(y)
        if y.shape[-1] != self.A.shape[0]:
            raise DimensionError(f"received block has length {y.shape[-1]}, expected {self.A.shape[0]}")
        return y @ self.pinv.T


def ls_estimate(y, A) -> np.ndarray:
    """``(A^H A)^{-1} A^H y`` for a cyclic pilot matrix ``A`` (see :func:`build_at`)."""
    A = np.asarray(A, dtype=np.complex128)
    y = np.asarray(y, dtype=np.complex128)
    if y.shape[-1] != A.shape[0]:
        raise DimensionError(f"received block has length {y.shape[-1]}, expected {A.shape[0]}")
    G = A.conj().T @ A
    return (_checked_inverse(G, "pilot Gram matrix") @ (A.conj().T @ y.T)).T


def cr1_deviation(a, L: int) -> float:
    """``||A^H A - N I_L||_F**2``; zero iff the periodic autocorrelation vanishes at lags ``1..L-1``."""
    A = build_at(a, L)
    G = A.conj().T @ A
    return float(np.sum(np.abs(G - A.shape[0] * np.eye(L)) ** 2))


def gamma_entries(omegas, N: int) -> np.ndarray:
    """``(1/N) sum_n zeta_N**(omega n)`` in closed form ``(zeta**(omega N) - 1) / (N (zeta**omega - 1))``."""
    w = np.asarray(omegas, dtype=float)
    z = np.exp(2j * np.pi * w / N)
    num = np.exp(2j * np.pi * w) - 1
    den = N * (z - 1)
    one = np.isclose(np.mod(w / N + 0.5, 1.0) - 0.5, 0.0, atol=1e-15)
    return np.where(one, 1.0 + 0j, num / np.where(one, 1.0, den))


def cr2_deviation(a, L: int, omegas) -> float:
    """``||(A^H A)^{-1} A^H (A * Omega) - diag(Gamma)||_F**2`` with ``Omega[n, l] = zeta_N**(omega_l n)``."""
    A = build_at(a, L)
    N = A.shape[0]
    w = np.asarray(omegas, dtype=float)
    if w.shape != (L,):
        raise DimensionError(f"expected {L} Doppler values, got shape {w.shape}")
    Omega = np.exp(2j * np.pi / N * np.outer(np.arange(N), w))
    G = A.conj().T @ A
    T = _checked_inverse(G, "pilot Gram matrix") @ A.conj().T @ (A * Omega)
    return float(np.sum(np.abs(T - np.diag(gamma_entries(w, N))) ** 2))


@dataclass
class DpssBasis:
    basis: np.ndarray  # (B, frame_len), rows orthonormal, most concentrated first
    NW: float

    @property
    def B(self) -> int:
        return self.basis.shape[0]


def dpss_basis(frame_len: int, B: int, NW: float) -> DpssBasis:
    """The ``B`` most band-concentrated Slepian sequences, unit-norm rows."""
    if not 1 <= B <= frame_len:
        raise DomainError(f"need 1 <= B <= frame_len={frame_len}, got B={B}")
    if not 0 < NW < frame_len / 2:
        raise DomainError(f"NW must lie in (0, frame_len/2), got {NW}")
    if frame_len == 1:
        return DpssBasis(np.ones((1, 1)), NW)
    v = dpss(frame_len, NW, Kmax=B, norm=2, sym=True)
    return DpssBasis(np.atleast_2d(v), NW)


@dataclass
class EstimateSet:
    h_hat: np.ndarray              # (P, L) one LS estimate per pilot symbol
    pilot_mid_indices: np.ndarray  # (P,) absolute frame sample index per pilot


def interpolate_frame(est: EstimateSet, basis: DpssBasis) -> np.ndarray:
    """Fit ``B`` DPSS coefficients per tap through the pilot estimates; returns ``(L, frame_len)``.

    Raises:
        ConditioningError: the basis sampled at the pilot midpoints is (near) singular.
    """
    h = np.asarray(est.h_hat)
    mids = np.asarray(est.pilot_mid_indices)
    if h.ndim != 2 or h.shape[0] != mids.size:
        raise DimensionError(f"need one estimate row per pilot, got {h.shape} for {mids.size} pilots")
    if mids.size != basis.B:
        raise DimensionError(f"square interpolation needs B = pilots, got B={basis.B}, pilots={mids.size}")
    V = basis.basis[:, mids].T
    coef = _checked_inverse(V, "DPSS sample matrix") @ h
    return coef.T @ basis.basis


def time_channel_matrices(h_frame, cfg: FrameConfig, symbols) -> np.ndarray:
    """``(S, N, N)`` post-prefix matrices with ``H[n, (n - l) mod N] = h[l, body_start + n]``."""
    h_frame = np.asarray(h_frame)
    L = h_frame.shape[0]
    if L > cfg.N_cp + 1:
        raise DomainError(f"{L} taps exceed what a prefix of {cfg.N_cp} samples keeps cyclic")
    N = cfg.N
    n = np.arange(N)
    H = np.zeros((len(symbols), N, N), dtype=np.complex128)
    for s, sym in enumerate(symbols):
        start = cfg.body_start(int(sym))
        for l in range(L):
            H[s, n, (n - l) % N] += h_frame[l, start + n]
    return H


def equalize(y_data, h_frame, cfg: FrameConfig, symbols=None, reg: float = TIKHONOV) -> np.ndarray:
    """Regularized zero-forcing over the full ``N x N`` effective channel of each data symbol.

    Solves ``(G^H G + reg I) X = G^H y`` with ``G = H F_N^H``; returns ``(S, N)``
    subcarrier estimates.
    """
    symbols = cfg.data_symbols if symbols is None else np.asarray(symbols)
    y = np.asarray(y_data).reshape(len(symbols), cfg.N)
    G = effective_channel(h_frame, cfg, symbols)
    GH = np.conj(np.swapaxes(G, -1, -2))
    R = GH @ G + reg * np.eye(cfg.N)
    # eigenvalues of R lie in [reg, ||G||_F**2 + reg]; only pay for an SVD when that bound is loose
    bound = float(np.max(np.sum(np.abs(G) ** 2, axis=(-2, -1)))) / reg + 1.0
    if not np.isfinite(bound) or bound > COND_LIMIT:
        cond = float(np.max(np.linalg.cond(R)))
        if not np.isfinite(cond) or cond > COND_LIMIT:
            raise ConditioningError("effective data channel is ill-conditioned", cond)
    return np.linalg.solve(R, (GH @ y[..., None]))[..., 0]


def effective_channel(h_frame, cfg: FrameConfig, symbols) -> np.ndarray:
    """``(S, N, N)`` matrices ``H F_N^H`` mapping subcarrier symbols to received body samples.

    Shifting a column of ``F_N^H`` by ``l`` multiplies it by ``zeta_N**(-l k)``,
    so ``(H F^H)[n, k] = (F^H)[n, k] * sum_l h[l, n] zeta_N**(-l k)``.
    """
    h_frame = np.asarray(h_frame)
    L = h_frame.shape[0]
    if L > cfg.N_cp + 1:
        raise DomainError(f"{L} taps exceed what a prefix of {cfg.N_cp} samples keeps cyclic")
    N = cfg.N
    starts = np.array([cfg.body_start(int(s)) for s in symbols])
    h = h_frame[:, starts[:, None] + np.arange(N)]          # (L, S, N)
    Hf = np.fft.fft(h, n=N, axis=0)                        # (k, S, n)
    FH = np.exp(2j * np.pi / N * np.outer(np.arange(N), np.arange(N))) / np.sqrt(N)
    return FH * np.transpose(Hf, (1, 2, 0))


def equalize_and_demap(y_data, h_frame, cfg: FrameConfig, symbols=None, reg: float = TIKHONOV) -> np.ndarray:
    return qpsk_demap(equalize(y_data, h_frame, cfg, symbols, reg))


def midpoint_offsets(N: int) -> tuple[int, int]:
    """Samples bracketing ``(N - 1)/2`` (equal for odd ``N``)."""
    return (N - 1) // 2, N // 2


def h_mid(taps_body) -> np.ndarray:
    """Midpoint response from ``(..., L, N)`` taps over one symbol body; even ``N`` averages the two centre samples."""
    t = np.asarray(taps_body)
    lo, hi = midpoint_offsets(t.shape[-1])
    return 0.5 * (t[..., lo] + t[..., hi])


def _sq_err(est, truth) -> np.ndarray:
    est = np.asarray(est)
    truth = np.asarray(truth)
    if est.shape != truth.shape:
        raise DimensionError(f"shape mismatch {est.shape} vs {truth.shape}")
    return np.abs(est - truth) ** 2


def mse_mid(est, truth) -> float:
    """Mean over trials of ``||h_mid - h_hat||**2`` (last axis = taps)."""
    e = _sq_err(est, truth)
    return float(np.mean(np.sum(e, axis=-1)))


def mse_frame(est_frame, truth_frame) -> float:
    """Per-sample tap error over the frame: ``sum |h - h_hat|**2 / frame_len``, averaged over trials.

    Arrays are ``(..., L, frame_len)``.
    """
    e = _sq_err(est_frame, truth_frame)
    return float(np.mean(np.sum(e, axis=(-2, -1)) / e.shape[-1]))


def crlb(n_cp: int, N: int, sigma2: float) -> float:
    """Time-invariant reference bound ``(N_cp / N) * sigma2``."""
    return n_cp / N * sigma2
