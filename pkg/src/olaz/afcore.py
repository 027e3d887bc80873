"""Periodic correlation and (oversampled) ambiguity functions.

Conventions used everywhere in the package:

* ``zeta_N = exp(2j*pi/N)``; a Doppler shift ``f`` (in subcarrier spacings,
  any real number) modulates sample ``k`` by ``zeta_N**(f*k)``.
* Delays are integers and are always reduced modulo ``N``.
* Sequences are plain 1-D ``complex128`` numpy arrays.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DimensionError, DomainError

UNIMODULAR_TOL = 1e-12


def as_sequence(samples, *, unimodular: bool = False, tol: float = UNIMODULAR_TOL) -> np.ndarray:
    """Coerce ``samples`` to a complex sequence of length at least 2.

    Args:
        samples: Anything ``np.asarray`` accepts.
        unimodular: Also require ``|a[k]| == 1`` within ``tol``.
        tol: Magnitude tolerance for the unimodular check.

    Raises:
        DimensionError: Input is not one-dimensional or shorter than 2.
        DomainError: ``unimodular`` was requested and a sample violates it.
    """
    a = np.asarray(samples, dtype=np.complex128)
    if a.ndim != 1 or a.size < 2:
        raise DimensionError(f"sequence must be 1-D with N >= 2, got shape {a.shape}")
    if unimodular and not is_unimodular(a, tol):
        worst = float(np.max(np.abs(np.abs(a) - 1.0)))
        raise DomainError(f"sequence is not unimodular (max ||a[k]|-1| = {worst:.3e})")
    return a


def is_unimodular(a: np.ndarray, tol: float = UNIMODULAR_TOL) -> bool:
    return bool(np.all(np.abs(np.abs(a) - 1.0) <= tol))


def random_unimodular(N: int, rng: np.random.Generator) -> np.ndarray:
    """Unimodular sequence with i.i.d. phases uniform on [0, 2*pi)."""
    return np.exp(2j * np.pi * rng.random(N))


def doppler_vector(N: int, f: float) -> np.ndarray:
    """``[1, zeta_N**f, ..., zeta_N**(f*(N-1))]``."""
    # reduce f*k mod N first so large Dopplers keep full phase accuracy
    return np.exp(2j * np.pi * np.mod(f * np.arange(N), N) / N)


def _pair(a, b) -> tuple[np.ndarray, np.ndarray]:
    a = as_sequence(a)
    b = as_sequence(b)
    if a.shape != b.shape:
        raise DimensionError(f"length mismatch: {a.size} vs {b.size}")
    return a, b


@dataclass(frozen=True)
class AmbiguityZone:
    """Delay half-width ``Z`` by Doppler half-width ``F_r`` on a grid of step ``f_delta``.

    ``F_r`` must be an integer multiple of ``f_delta``; ``M = F_r/f_delta + 1`` is the
    number of non-negative Doppler grid points.
    """

    Z: int
    F_r: float
    f_delta: float = 0.2

    def __post_init__(self):
        if int(self.Z) != self.Z or self.Z < 0:
            raise DomainError(f"Z must be a non-negative integer, got {self.Z}")
        if self.F_r < 0:
            raise DomainError(f"F_r must be non-negative, got {self.F_r}")
        if not self.f_delta > 0:
            raise DomainError(f"f_delta must be positive, got {self.f_delta}")
        ratio = self.F_r / self.f_delta
        if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
            raise DomainError(f"F_r={self.F_r} is not a multiple of f_delta={self.f_delta}")
        object.__setattr__(self, "Z", int(self.Z))

    @property
    def M(self) -> int:
        return int(round(self.F_r / self.f_delta)) + 1

    def dopplers(self) -> np.ndarray:
        """Doppler grid ``{-F_r, ..., -f_delta, 0, f_delta, ..., F_r}`` in ascending order."""
        m = np.arange(-(self.M - 1), self.M)
        return m * self.f_delta

    def delays(self) -> np.ndarray:
        return np.arange(-self.Z, self.Z + 1)

    def check_length(self, N: int) -> None:
        if self.Z >= N:
            raise DomainError(f"zone half-width Z={self.Z} must be smaller than N={N}")


def pccf(a, b, tau: int) -> complex:
    """Periodic cross-correlation ``sum_k a[k] * conj(b[(k+tau) mod N])``."""
    a, b = _pair(a, b)
    return complex(np.sum(a * np.conj(np.roll(b, -(int(tau) % a.size)))))


def oaf(a, b, tau: int, f: float) -> complex:
    """Oversampled periodic cross-ambiguity function at delay ``tau`` and real Doppler ``f``."""
    a, b = _pair(a, b)
    N = a.size
    return complex(np.sum(a * np.conj(np.roll(b, -(int(tau) % N))) * doppler_vector(N, f)))


def pcaf(a, b, tau: int, f: int) -> complex:
    """Traditional periodic cross-ambiguity function; ``f`` must be an integer."""
    if int(f) != f:
        raise DomainError(f"traditional AF needs an integer Doppler, got {f}")
    a, b = _pair(a, b)
    N = a.size
    k = np.arange(N)
    # exact integer exponent keeps the twiddles on the N-th roots of unity
    twiddle = np.exp(2j * np.pi * ((int(f) * k) % N) / N)
    return complex(np.sum(a * np.conj(np.roll(b, -(int(tau) % N))) * twiddle))


def oaf_all_delays(a, f: float, b=None) -> np.ndarray:
    """``oaf(a, b, tau, f)`` for ``tau = 0..N-1`` via one FFT round trip."""
    a = as_sequence(a)
    b = a if b is None else _pair(a, b)[1]
    u = a * doppler_vector(a.size, f)
    return np.conj(np.fft.ifft(np.fft.fft(b) * np.conj(np.fft.fft(u))))


def zero_delay_magnitude(f: float, N: int) -> float:
    """``|sin(pi f) / sin(pi f / N)|``, with the limit ``N`` wherever ``f/N`` is an integer.

    For a unimodular sequence this equals ``|oaf(a, a, 0, f)|``. At an integer
    ``f`` that is not a multiple of ``N`` the value is exactly 0.
    """
    x = float(f)
    if abs(x / N - round(x / N)) < 1e-15:
        return float(N)
    return abs(math.sin(math.pi * x) / math.sin(math.pi * x / N))


def isl_corr(a, Z: int) -> float:
    """One-sided correlation ISL ``2 * sum_{tau=1..Z} |phi_a(tau)|**2``."""
    a = as_sequence(a)
    if not 1 <= Z < a.size:
        raise DomainError(f"need 1 <= Z < N, got Z={Z}, N={a.size}")
    phi = oaf_all_delays(a, 0.0)
    return float(2.0 * np.sum(np.abs(phi[1 : Z + 1]) ** 2))


def isl_af(a, zone: AmbiguityZone) -> float:
    """One-sided AF ISL ``2 * sum_{tau=1..Z} sum_{f=-F_r..F_r} |AF(tau, f)|**2`` (integer Doppler)."""
    a = as_sequence(a)
    if int(zone.F_r) != zone.F_r:
        raise DomainError(f"traditional AF ISL needs an integer F_r, got {zone.F_r}")
    if not 1 <= zone.Z < a.size:
        raise DomainError(f"need 1 <= Z < N, got Z={zone.Z}, N={a.size}")
    total = 0.0
    for f in range(-int(zone.F_r), int(zone.F_r) + 1):
        total += np.sum(np.abs(oaf_all_delays(a, f)[1 : zone.Z + 1]) ** 2)
    return float(2.0 * total)


def _zone_lags(N: int, Z: int) -> np.ndarray:
    return np.concatenate([np.arange(1, Z + 1), np.arange(N - Z, N)])


def isl_oaf(a, zone: AmbiguityZone) -> float:
    """Discretised O-AF ISL ``sum_{0<|tau|<=Z} f_delta * sum_{f in grid} |AF~(tau, f)|**2``.

    Riemann-sum surrogate of the integral over ``f in [-F_r, F_r]``; negative
    delays are taken modulo ``N``.
    """
    a = as_sequence(a)
    zone.check_length(a.size)
    lags = _zone_lags(a.size, zone.Z)
    total = 0.0
    for f in zone.dopplers():
        total += np.sum(np.abs(oaf_all_delays(a, f)[lags]) ** 2)
    return float(zone.f_delta * total)


@dataclass
class AmbiguitySurface:
    """O-AF on the zone grid; rows follow ``delays``, columns follow ``dopplers``."""

    delays: np.ndarray
    dopplers: np.ndarray
    values: np.ndarray
    levels_db: np.ndarray

    def sidelobe_levels(self) -> np.ndarray:
        """Levels at every grid point with non-zero delay, flattened."""
        return self.levels_db[self.delays != 0].ravel()

    def peak_sidelobe_db(self) -> float:
        return float(np.max(self.sidelobe_levels()))

    def to_csv(self, path) -> None:
        """Write ``tau,f,re,im,level_db`` rows, delay-major (delay outer, Doppler inner)."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["tau", "f", "re", "im", "level_db"])
            for i, tau in enumerate(self.delays):
                for j, f in enumerate(self.dopplers):
                    v = self.values[i, j]
                    w.writerow([int(tau), repr(float(f)), repr(v.real), repr(v.imag),
                                repr(float(self.levels_db[i, j]))])


def ambiguity_surface(a, zone: AmbiguityZone) -> AmbiguitySurface:
    """Evaluate the O-AF on ``{-Z..Z} x F`` with levels in dB relative to ``|AF~(0, 0)|``."""
    a = as_sequence(a)
    zone.check_length(a.size)
    delays = zone.delays()
    dopplers = zone.dopplers()
    values = np.empty((delays.size, dopplers.size), dtype=np.complex128)
    for j, f in enumerate(dopplers):
        values[:, j] = oaf_all_delays(a, f)[delays % a.size]
    ref = np.abs(values[zone.Z, zone.M - 1])
    with np.errstate(divide="ignore"):
        levels = 20.0 * np.log10(np.abs(values) / ref)
    return AmbiguitySurface(delays, dopplers, values, levels)


def periodic_diag(A, k: int) -> np.ndarray:
    """Elements ``A[i, (k+i) mod N]`` for ``i = 0..N-1``."""
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionError(f"periodic diagonal needs a square matrix, got {A.shape}")
    N = A.shape[0]
    if not 0 <= k < N:
        raise DomainError(f"diagonal index must satisfy 0 <= k < {N}, got {k}")
    i = np.arange(N)
    return A[i, (i + k) % N]


def ds(A, k: int) -> complex:
    """Sum of the ``k``-th periodic diagonal."""
    return complex(np.sum(periodic_diag(A, k)))


def save_sequence(path, a) -> None:
    """One ``re,im`` line per sample at full double precision."""
    a = as_sequence(a)
    lines = [f"{z.real!r},{z.imag!r}" for z in a.tolist()]
    Path(path).write_text("\n".join(lines) + "\n")


def load_sequence(path, *, check_unimodular: bool = True, tol: float = 1e-9) -> np.ndarray:
    samples = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            re_s, im_s = line.split(",")
            samples.append(complex(float(re_s), float(im_s)))
        except ValueError as exc:
            raise DomainError(f"{path}:{lineno}: expected 're,im', got {line!r}") from exc
    return as_sequence(samples, unimodular=check_unimodular, tol=tol)
