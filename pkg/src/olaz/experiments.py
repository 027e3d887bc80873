"""Monte-Carlo link experiments: midpoint estimation MSE, frame MSE/BER, midpoint optimality.

Every trial draws its channel, noise and data from
``SeedSequence([master_seed, snr_index, trial_index])``, and all pilots in a
run share those draws, so pilot comparisons see identical conditions. Results
are reduced in trial order, which makes them independent of ``threads``.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import binomtest

from .channel import (FrameConfig, JakesParams, add_cp, apply_channel, awgn, build_frame,
                      jakes_realize, split_symbols)
from .estimator import (EstimateSet, LsEstimator, crlb, dpss_basis, equalize_and_demap, h_mid,
                        interpolate_frame)
from .errors import DomainError


def trial_rng(master_seed: int, snr_index: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([master_seed, snr_index, trial]))


def _map_trials(fn, trials: int, threads: int) -> list:
    if threads <= 1 or trials <= 1:
        return [fn(t) for t in range(trials)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(trials)))


def unit_noise_variance(snr_db: float) -> float:
    """Noise variance for unit-power transmissions (unimodular pilots, unitary OFDM)."""
    return 0.0 if np.isposinf(snr_db) else 10.0 ** (-snr_db / 10.0)


@dataclass
class LinkSetup:
    """Shared link parameters; ``L`` is the number of estimated taps."""

    jakes: JakesParams = field(default_factory=lambda: JakesParams(F_r=0.105))
    frame: FrameConfig = field(default_factory=FrameConfig)
    L: int = 32

    def __post_init__(self):
        if self.jakes.N != self.frame.N:
            raise DomainError(f"channel N={self.jakes.N} differs from frame N={self.frame.N}")
        if int(self.jakes.delays.max()) > self.frame.N_cp:
            raise DomainError("cyclic prefix shorter than the profile's largest delay")
        if not int(self.jakes.delays.max()) < self.L <= self.frame.N_cp + 1:
            raise DomainError(f"L={self.L} must cover every path and fit inside the prefix")


@dataclass
class MidRow:
    snr_db: float
    pilot: str
    mse_mid: float
    crlb: float


def mse_mid_experiment(pilots: dict, snr_grid, trials: int, master_seed: int,
                       setup: LinkSetup | None = None, threads: int = 1) -> list[MidRow]:
    """LS estimate from one pilot symbol against the body-midpoint response."""
    setup = LinkSetup() if setup is None else setup
    N, n_cp, L = setup.frame.N, setup.frame.N_cp, setup.L
    names = list(pilots)
    ests = [LsEstimator(pilots[k], L) for k in names]
    tx = [add_cp(np.asarray(pilots[k], dtype=np.complex128), n_cp) for k in names]
    body = np.arange(n_cp, n_cp + N)
    rows = []
    for si, snr in enumerate(snr_grid):
        sigma2 = unit_noise_variance(snr)

        def one(t):
            rng = trial_rng(master_seed, si, t)
            cr = jakes_realize(setup.jakes, rng)
            truth = h_mid(cr.dense_taps(body, L))
            w = awgn(N + n_cp, sigma2, rng)
            return [np.sum(np.abs(est(apply_channel(x, cr)[n_cp:] + w[n_cp:]) - truth) ** 2)
                    for est, x in zip(ests, tx)]

        err = np.array(_map_trials(one, trials, threads)).reshape(trials, len(names))
        for j, name in enumerate(names):
            mse = float(np.mean(err[:, j])) if trials else float("nan")
            rows.append(MidRow(float(snr), name, mse, crlb(n_cp, N, sigma2)))
    return rows


@dataclass
class FrameRow:
    snr_db: float
    pilot: str
    mse_frame: float
    crlb: float
    bit_errors: int
    bits: int
    bit_errors_perfect: int

    @property
    def ber(self) -> float:
        return self.bit_errors / self.bits if self.bits else float("nan")

    @property
    def ber_perfect_csi(self) -> float:
        return self.bit_errors_perfect / self.bits if self.bits else float("nan")

    def ber_ci(self, level: float = 0.95) -> tuple[float, float]:
        """Wilson interval for the bit error rate."""
        if not self.bits:
            return float("nan"), float("nan")
        ci = binomtest(self.bit_errors, self.bits).proportion_ci(level, method="wilson")
        return float(ci.low), float(ci.high)


def frame_experiment(pilots: dict, snr_grid, frames: int, master_seed: int,
                     setup: LinkSetup | None = None, B: int = 8, NW: float = 2.02,
                     threads: int = 1) -> list[FrameRow]:
    """Full frames: per-pilot LS, DPSS interpolation, full-matrix ZF, QPSK demapping.

    The perfect-CSI receiver equalizes with the true taps and does not depend
    on the pilot; its error count is repeated on every pilot's row.
    """
    setup = LinkSetup() if setup is None else setup
    cfg, L = setup.frame, setup.L
    names = list(pilots)
    ests = [LsEstimator(pilots[k], L) for k in names]
    basis = dpss_basis(cfg.frame_len, B, NW)
    n_all = np.arange(cfg.frame_len)
    mids = cfg.pilot_mid_indices
    rows = []
    for si, snr in enumerate(snr_grid):
        sigma2 = unit_noise_variance(snr)

        def one(t):
            rng = trial_rng(master_seed, si, t)
            cr = jakes_realize(setup.jakes, rng)
            bits = rng.integers(0, 2, cfg.n_bits, dtype=np.int8)
            w = awgn(cfg.frame_len, sigma2, rng)
            truth = cr.dense_taps(n_all, L)
            out = []
            perfect_err = None
            for k, est in zip(names, ests):
                signal, _ = build_frame(cfg, pilots[k], bits)
                sym = split_symbols(apply_channel(signal, cr) + w, cfg)
                h_hat = est(sym[cfg.pilot_symbols])
                h_frame = interpolate_frame(EstimateSet(h_hat, mids), basis)
                y_data = sym[cfg.data_symbols]
                errs = int(np.count_nonzero(equalize_and_demap(y_data, h_frame, cfg) != bits))
                if perfect_err is None:
                    perfect_err = int(np.count_nonzero(equalize_and_demap(y_data, truth, cfg) != bits))
                mse = float(np.sum(np.abs(h_frame - truth) ** 2) / cfg.frame_len)
                out.append((mse, errs, perfect_err))
            return out

        res = _map_trials(one, frames, threads)
        for j, name in enumerate(names):
            mse = float(np.mean([r[j][0] for r in res])) if frames else float("nan")
            errs = sum(r[j][1] for r in res)
            perf = sum(r[j][2] for r in res)
            rows.append(FrameRow(float(snr), name, mse, crlb(cfg.N_cp, cfg.N, sigma2),
                                 errs, frames * cfg.n_bits, perf))
    return rows


def midpoint_error_curve(pilot, realizations: int, master_seed: int,
                         setup: LinkSetup | None = None, threads: int = 1) -> np.ndarray:
    """Noiseless ``E||h_hat - h_n||**2`` for every sample ``n`` of the pilot body."""
    setup = LinkSetup() if setup is None else setup
    N, n_cp, L = setup.frame.N, setup.frame.N_cp, setup.L
    est = LsEstimator(pilot, L)
    x = add_cp(np.asarray(pilot, dtype=np.complex128), n_cp)
    body = np.arange(n_cp, n_cp + N)

    def one(t):
        cr = jakes_realize(setup.jakes, trial_rng(master_seed, 0, t))
        h_hat = est(apply_channel(x, cr)[n_cp:])
        return np.sum(np.abs(h_hat[:, None] - cr.dense_taps(body, L)) ** 2, axis=0)

    return np.mean(np.array(_map_trials(one, realizations, threads)), axis=0)
