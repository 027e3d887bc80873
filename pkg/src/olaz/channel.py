"""Doubly selective channel: sum-of-sinusoids Jakes fading, EVA profile, OFDM framing.

Sample indices are absolute across a frame (cyclic prefixes included), so the
channel keeps evolving through every prefix.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .afcore import as_sequence
from .errors import DimensionError, DomainError

SPEED_OF_LIGHT = 299_792_458.0

# 3GPP Extended Vehicular A: excess delay (ns), relative power (dB)
EVA_DELAYS_NS = (0, 30, 150, 310, 370, 710, 1090, 1730, 2510)
EVA_POWERS_DB = (0.0, -1.5, -1.4, -3.6, -0.6, -9.1, -7.0, -12.0, -16.9)


def normalized_doppler(v_kmh: float, fc_hz: float, delta_f_hz: float) -> float:
    """Maximum Doppler ``v * fc / c`` in units of the subcarrier spacing."""
    return v_kmh / 3.6 * fc_hz / SPEED_OF_LIGHT / delta_f_hz


def eva_profile(N: int = 128, delta_f: float = 15e3) -> list[tuple[int, float]]:
    """EVA taps on the sample grid ``1/(N*delta_f)``.

    Delays are rounded to the nearest tick, taps landing on the same tick are
    merged by adding their powers, and the total power is normalized to 1.
    Returns ``(delay_samples, power)`` pairs sorted by delay.
    """
    ts = 1.0 / (N * delta_f)
    merged: dict[int, float] = {}
    for d_ns, p_db in zip(EVA_DELAYS_NS, EVA_POWERS_DB):
        tick = int(round(d_ns * 1e-9 / ts))
        merged[tick] = merged.get(tick, 0.0) + 10.0 ** (p_db / 10.0)
    total = sum(merged.values())
    return [(d, merged[d] / total) for d in sorted(merged)]


@dataclass(frozen=True)
class JakesParams:
    """Inputs of the sum-of-sinusoids generator.

    ``pdp`` holds ``(delay_samples, power)`` pairs; powers are rescaled to sum
    to 1. ``seed`` is used only when no generator is passed to :func:`jakes_realize`.
    """

    F_r: float
    pdp: tuple = field(default_factory=lambda: tuple(eva_profile()))
    Q: int = 16
    E0: float = 1.0
    N: int = 128
    seed: int | None = None

    def __post_init__(self):
        if self.Q < 2 or self.Q % 2:
            raise DomainError(f"Q must be even and >= 2, got {self.Q}")
        if self.F_r < 0:
            raise DomainError(f"F_r must be nonnegative, got {self.F_r}")
        delays = [int(d) for d, _ in self.pdp]
        if not delays:
            raise DomainError("power-delay profile is empty")
        if len(set(delays)) != len(delays) or min(delays) < 0:
            raise DomainError(f"delays must be distinct and nonnegative, got {delays}")
        powers = np.array([p for _, p in self.pdp], dtype=float)
        if np.any(powers < 0) or powers.sum() <= 0:
            raise DomainError("path powers must be nonnegative with a positive total")
        object.__setattr__(self, "pdp", tuple(
            (d, float(p)) for d, p in zip(delays, powers / powers.sum())))

    @property
    def delays(self) -> np.ndarray:
        return np.array([d for d, _ in self.pdp], dtype=np.int64)

    @property
    def powers(self) -> np.ndarray:
        return np.array([p for _, p in self.pdp])


@dataclass
class ChannelRealization:
    """One draw of the channel: ``h[l, n] = sum_q gains[l, q] * zeta_N**(omegas[l, q] * n)``."""

    delays: np.ndarray   # (L,) integer path delays
    gains: np.ndarray    # (L, Q) complex
    omegas: np.ndarray   # (L, Q) normalized Dopplers in [-F_r, F_r]
    N: int

    @property
    def max_delay(self) -> int:
        return int(self.delays.max())

    def _path(self, delay: int) -> int:
        hit = np.flatnonzero(self.delays == delay)
        if hit.size == 0:
            raise DomainError(f"no path with delay {delay}; have {self.delays.tolist()}")
        return int(hit[0])

    def response(self, delay: int, n) -> np.ndarray:
        """``h[delay, n]`` at absolute sample indices ``n``."""
        p = self._path(delay)
        n = np.asarray(n, dtype=float)
        ph = np.exp(2j * np.pi / self.N * np.multiply.outer(n, self.omegas[p]))
        return ph @ self.gains[p]

    def taps(self, n) -> np.ndarray:
        """``(L, len(n))`` array of all path responses, rows ordered as ``delays``."""
        n = np.asarray(n, dtype=float)
        ph = np.exp(2j * np.pi / self.N * self.omegas[:, :, None] * n)
        return np.einsum("lq,lqn->ln", self.gains, ph)

    def dense_taps(self, n, L: int) -> np.ndarray:
        """``(L, len(n))`` responses on the contiguous delay grid ``0..L-1`` (absent delays are zero)."""
        if self.max_delay >= L:
            raise DomainError(f"delay grid of {L} taps cannot hold delay {self.max_delay}")
        out = np.zeros((L, np.size(n)), dtype=np.complex128)
        out[self.delays] = self.taps(n)
        return out

    def to_csv(self, path, n=None) -> None:
        """Dump rays as ``delay,q,g_re,g_im,omega`` rows, then optionally ``h`` samples."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["delay", "q", "g_re", "g_im", "omega"])
            for i, d in enumerate(self.delays):
                for q in range(self.gains.shape[1]):
                    g = self.gains[i, q]
                    w.writerow([int(d), q, repr(g.real), repr(g.imag), repr(self.omegas[i, q])])
            if n is not None:
                w.writerow(["delay", "n", "h_re", "h_im"])
                h = self.taps(n)
                for i, d in enumerate(self.delays):
                    for j, nn in enumerate(np.asarray(n)):
                        w.writerow([int(d), int(nn), repr(h[i, j].real), repr(h[i, j].imag)])


def jakes_realize(params: JakesParams, rng: np.random.Generator | None = None) -> ChannelRealization:
    """Draw one realization of the improved Jakes simulator.

    Per path: ``psi_q``, ``theta`` and ``phi~_q`` uniform on ``[-pi, pi)``,
    ``alpha_q = (2 pi q - pi + theta) / Q``, ``omega_q = F_r cos(alpha_q)``,
    ``phi_q = phi_{q + Q/2} = phi~_q`` and ``A_l ~ CN(0, P_l)``.
    """
    rng = np.random.default_rng(params.seed) if rng is None else rng
    Q = params.Q
    L = len(params.pdp)
    q = np.arange(Q)
    psi = rng.uniform(-np.pi, np.pi, (L, Q))
    theta = rng.uniform(-np.pi, np.pi, (L, 1))
    phi_half = rng.uniform(-np.pi, np.pi, (L, Q // 2))
    A = np.sqrt(params.powers / 2) * (rng.standard_normal(L) + 1j * rng.standard_normal(L))
    alpha = (2 * np.pi * q - np.pi + theta) / Q
    omegas = params.F_r * np.cos(alpha)
    phi = np.concatenate([phi_half, phi_half], axis=1)
    gains = params.E0 * A[:, None] * np.exp(1j * psi) / np.sqrt(Q) * np.exp(1j * phi)
    return ChannelRealization(params.delays, gains, omegas, params.N)


# --- framing -----------------------------------------------------------------

def qpsk_map(bits) -> np.ndarray:
    """Gray QPSK: bit pair ``(b1, b0)`` -> ``((1 - 2 b1) + 1j (1 - 2 b0)) / sqrt(2)``."""
    b = np.asarray(bits, dtype=np.int8).reshape(-1, 2)
    return ((1 - 2 * b[:, 0]) + 1j * (1 - 2 * b[:, 1])) / np.sqrt(2)


def qpsk_demap(symbols) -> np.ndarray:
    s = np.asarray(symbols)
    return np.stack([s.real < 0, s.imag < 0], axis=-1).astype(np.int8).reshape(-1)


@dataclass(frozen=True)
class FrameConfig:
    """Pilot, ``M_D`` data symbols, pilot, ... with ``M_P`` pilots in total."""

    N: int = 128
    N_cp: int = 32
    M_P: int = 8
    M_D: int = 1

    def __post_init__(self):
        if self.N < 2 or self.N_cp < 0 or self.N_cp > self.N:
            raise DomainError(f"need N >= 2 and 0 <= N_cp <= N, got N={self.N}, N_cp={self.N_cp}")
        if self.M_P < 1 or self.M_D < 0:
            raise DomainError(f"need M_P >= 1 and M_D >= 0, got {self.M_P}, {self.M_D}")

    @property
    def M(self) -> int:
        return self.M_P + self.M_D * (self.M_P - 1)

    @property
    def symbol_len(self) -> int:
        return self.N + self.N_cp

    @property
    def frame_len(self) -> int:
        return self.M * self.symbol_len

    @property
    def pilot_symbols(self) -> np.ndarray:
        return np.arange(self.M_P) * (self.M_D + 1)

    @property
    def data_symbols(self) -> np.ndarray:
        return np.setdiff1d(np.arange(self.M), self.pilot_symbols)

    @property
    def n_bits(self) -> int:
        return 2 * self.N * self.M_D * (self.M_P - 1)

    def body_start(self, symbol: int) -> int:
        """Absolute index of the first sample after the prefix of ``symbol``."""
        return symbol * self.symbol_len + self.N_cp

    @property
    def pilot_mid_indices(self) -> np.ndarray:
        return self.pilot_symbols * self.symbol_len + self.N_cp + (self.N - 1) // 2


def add_cp(body: np.ndarray, n_cp: int) -> np.ndarray:
    return np.concatenate([body[..., body.shape[-1] - n_cp:], body], axis=-1) if n_cp else body


def ofdm_modulate(X) -> np.ndarray:
    """Time-domain symbol ``F_N^H X`` with the unitary Fourier matrix ``[F]_{ij} = zeta_N^{-ij}/sqrt(N)``."""
    X = np.asarray(X)
    return np.fft.ifft(X, axis=-1) * np.sqrt(X.shape[-1])


def ofdm_demodulate(x) -> np.ndarray:
    x = np.asarray(x)
    return np.fft.fft(x, axis=-1) / np.sqrt(x.shape[-1])


def build_frame(cfg: FrameConfig, pilot, data_bits) -> tuple[np.ndarray, FrameConfig]:
    """Serialize pilots (sent as-is in time) and QPSK data symbols, each with its prefix.

    Returns the frame samples and the layout (the config itself carries every
    symbol boundary and pilot position).
    """
    pilot = as_sequence(pilot)
    if pilot.size != cfg.N:
        raise DimensionError(f"pilot length {pilot.size} != N={cfg.N}")
    bits = np.asarray(data_bits).ravel()
    if bits.size != cfg.n_bits:
        raise DomainError(f"expected {cfg.n_bits} data bits, got {bits.size}")
    body = np.empty((cfg.M, cfg.N), dtype=np.complex128)
    body[cfg.pilot_symbols] = pilot
    if cfg.data_symbols.size:
        body[cfg.data_symbols] = ofdm_modulate(qpsk_map(bits).reshape(-1, cfg.N))
    return add_cp(body, cfg.N_cp).ravel(), cfg


def split_symbols(rx, cfg: FrameConfig) -> np.ndarray:
    """``(M, N)`` symbol bodies with prefixes removed."""
    return np.asarray(rx).reshape(cfg.M, cfg.symbol_len)[:, cfg.N_cp:]


def apply_channel(signal, cr: ChannelRealization, n0: int = 0) -> np.ndarray:
    """Time-varying tapped delay line ``y[n] = sum_l h[l, n0 + n] x[n - l]`` (zero before the start)."""
    x = np.asarray(signal, dtype=np.complex128)
    n = np.arange(x.size)
    h = cr.taps(n0 + n)
    y = np.zeros_like(x)
    for i, d in enumerate(cr.delays):
        d = int(d)
        y[d:] += h[i, d:] * x[: x.size - d]
    return y


def noise_variance(signal, snr_db: float) -> float:
    """``mean|x|**2 / 10**(snr_db/10)``; zero for ``snr_db = inf``."""
    if math.isinf(snr_db) and snr_db > 0:
        return 0.0
    return float(np.mean(np.abs(signal) ** 2)) / 10.0 ** (snr_db / 10.0)


def awgn(shape, sigma2: float, rng: np.random.Generator) -> np.ndarray:
    return np.sqrt(sigma2 / 2) * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def transmit(signal, cr: ChannelRealization, snr_db: float, rng: np.random.Generator | None = None,
             n_cp: int | None = None) -> np.ndarray:
    """Pass ``signal`` through ``cr`` and add complex white Gaussian noise.

    ``n_cp``, when given, is checked against the largest path delay.

    Raises:
        DomainError: the prefix is shorter than the channel's largest delay.
    """
    if n_cp is not None and n_cp < cr.max_delay:
        raise DomainError(f"cyclic prefix {n_cp} shorter than max delay {cr.max_delay}")
    x = np.asarray(signal, dtype=np.complex128)
    y = apply_channel(x, cr)
    sigma2 = noise_variance(x, snr_db)
    if sigma2 > 0:
        rng = np.random.default_rng() if rng is None else rng
        y = y + awgn(y.shape, sigma2, rng)
    return y
