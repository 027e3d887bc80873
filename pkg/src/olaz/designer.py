"""OA-ITROX: alternating projections for oversampled low-ambiguity-zone sequences.

A unimodular sequence ``a`` is lifted to the rank-1 matrix ``X = x y^H`` whose
blocks are ``(a * f_m)(a / f_m)^H``. One iteration

1. projects ``X`` onto the set whose border blocks have zero periodic diagonal
   sums at all zone delays (subtract each zone diagonal's mean),
2. projects the result back onto rank-1 matrices through its top singular pair,
3. recovers the nearest unimodular sequence in closed form.

The dense helpers in this module (:func:`project_gamma`, :func:`top_singular_pair`
applied to an explicit matrix) exist for verification and small problems;
:func:`design` runs the matrix-free kernel from :mod:`olaz.kernel`.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import kernel
from .afcore import AmbiguityZone, as_sequence, doppler_vector, random_unimodular
from .errors import DegenerateError, DimensionError, DomainError


@dataclass
class LiftedPair:
    """Stacked modulated copies ``x`` (block ``m`` = ``a*f_m``) and ``y`` (block ``m`` = ``a/f_m``)."""

    x: np.ndarray
    y: np.ndarray
    N: int
    M: int

    def matrix(self) -> np.ndarray:
        return np.outer(self.x, np.conj(self.y))


def modulators(N: int, zone: AmbiguityZone) -> np.ndarray:
    """``M x N`` array whose row ``m`` is ``f_m = doppler_vector(N, m * f_delta)``."""
    return np.stack([doppler_vector(N, m * zone.f_delta) for m in range(zone.M)])


def lift(a, zone: AmbiguityZone, tol: float = 1e-9) -> LiftedPair:
    a = as_sequence(a, unimodular=True, tol=tol)
    F = modulators(a.size, zone)
    return LiftedPair((a * F).ravel(), (a / F).ravel(), a.size, zone.M)


def block(X: np.ndarray, m: int, n: int, N: int) -> np.ndarray:
    """View of the ``(m, n)`` ``N x N`` block of a block matrix."""
    return X[m * N : (m + 1) * N, n * N : (n + 1) * N]


def zone_lags(N: int, Z: int) -> np.ndarray:
    """Delays ``1..Z`` and ``N-Z..N-1`` (i.e. ``-Z..-1`` modulo ``N``)."""
    return np.concatenate([np.arange(1, Z + 1), np.arange(N - Z, N)])


def project_gamma(X, N: int, Z: int) -> np.ndarray:
    """Nearest point (Frobenius) of the zone-constrained set.

    Zone diagonals of every block ``(m, 0)`` and ``(0, m)`` are made zero-sum
    by subtracting their mean; everything else is copied.

    Raises:
        DimensionError: ``X`` is not square or its size is not a multiple of ``N``.
        DomainError: ``Z >= N/2``, where zone delays would overlap their mirrors.
    """
    X = np.asarray(X, dtype=np.complex128)
    if X.ndim != 2 or X.shape[0] != X.shape[1] or X.shape[0] % N:
        raise DimensionError(f"expected a square block matrix with {N}x{N} blocks, got {X.shape}")
    if Z < 0 or 2 * Z >= N:
        raise DomainError(f"need 0 <= Z < N/2, got Z={Z}, N={N}")
    M = X.shape[0] // N
    Y = X.copy()
    rows = np.arange(N)
    border = [(m, 0) for m in range(M)] + [(0, m) for m in range(1, M)]
    for m, n in border:
        B = block(Y, m, n, N)
        for tau in zone_lags(N, Z):
            cols = (rows + tau) % N
            B[rows, cols] -= B[rows, cols].sum() / N
    return Y


@dataclass
class SingularPair:
    s: np.ndarray
    sigma: float
    v: np.ndarray
    converged: bool = True
    iterations: int = 0


def top_singular_pair(Y, power_iters: int = 500, power_tol: float = 1e-10,
                      start: np.ndarray | None = None, rng: np.random.Generator | None = None
                      ) -> SingularPair:
    """Leading singular triplet of ``Y`` by alternating power iteration.

    ``Y`` may be a dense matrix or any object with ``matvec``/``rmatvec`` and a
    ``shape`` (e.g. a :class:`scipy.sparse.linalg.LinearOperator`). ``start``
    seeds the left vector; without it a random unit vector is used. Stops when
    the relative change of ``sigma`` drops to ``power_tol``; if that never
    happens the last iterate is returned with ``converged=False`` and a warning.

    Raises:
        DegenerateError: ``Y`` is the zero matrix.
    """
    if hasattr(Y, "matvec"):
        matvec, rmatvec, shape = Y.matvec, Y.rmatvec, Y.shape
    else:
        Y = np.asarray(Y, dtype=np.complex128)
        matvec, rmatvec, shape = Y.__matmul__, (lambda u: np.conj(Y.T) @ u), Y.shape
    if start is None:
        rng = np.random.default_rng(0) if rng is None else rng
        start = rng.standard_normal(shape[0]) + 1j * rng.standard_normal(shape[0])
    s = np.asarray(start, dtype=np.complex128)
    s = s / np.linalg.norm(s)
    sigma_prev = 0.0
    for it in range(1, power_iters + 1):
        v = rmatvec(s)
        nv = np.linalg.norm(v)
        if nv == 0.0:
            if it == 1 and not np.any(matvec(np.ones(shape[1], dtype=np.complex128))):
                raise DegenerateError("top singular pair of the zero matrix is undefined")
            raise DegenerateError("power iteration collapsed to zero; choose another start")
        v = v / nv
        s = matvec(v)
        sigma = float(np.linalg.norm(s))
        s = s / sigma
        if abs(sigma - sigma_prev) <= power_tol * sigma:
            return SingularPair(s, sigma, v, True, it)
        sigma_prev = sigma
    warnings.warn(f"power iteration did not reach tol={power_tol} in {power_iters} steps",
                  RuntimeWarning, stacklevel=2)
    return SingularPair(s, sigma, v, False, power_iters)


def synthesize(s, v, N: int, zone: AmbiguityZone) -> np.ndarray:
    """Closed-form unimodular sequence closest to the lifted pair ``(sqrt(MN) s, sqrt(MN) v)``.

    Block ``m`` of ``s`` is demodulated by ``f_m``, block ``m`` of ``v`` is
    remodulated by ``f_m``, the ``2M`` estimates are averaged and the phase kept.
    A sample whose average is exactly zero gets phase 0 (with a warning).
    """
    M = zone.M
    s = np.asarray(s, dtype=np.complex128)
    v = np.asarray(v, dtype=np.complex128)
    if s.shape != (M * N,) or v.shape != (M * N,):
        raise DimensionError(f"expected vectors of length M*N = {M * N}, got {s.shape}, {v.shape}")
    F = modulators(N, zone)
    acc = np.sqrt(M * N) / M * np.sum(s.reshape(M, N) * np.conj(F) + v.reshape(M, N) * F, axis=0)
    mag = np.abs(acc)
    if np.any(mag == 0.0):
        warnings.warn("zero average in sequence recovery; using phase 0", RuntimeWarning, stacklevel=2)
    return np.where(mag == 0.0, 1.0 + 0j, acc / np.where(mag == 0.0, 1.0, mag))


@dataclass
class DesignConfig:
    """Inputs of one OA-ITROX run.

    ``f_delta = 1`` in ``zone`` selects the traditional (integer-Doppler) AF.
    ``record_every`` defaults to 1 for ``N <= 256`` and 100 otherwise.
    """

    N: int
    zone: AmbiguityZone
    max_iters: int = 100_000
    eps: float = 1e-16
    seed: int = 0
    power_iters: int = 500
    power_tol: float = 1e-10
    record_every: int | None = None

    def __post_init__(self):
        if self.N < 2:
            raise DomainError(f"N must be at least 2, got {self.N}")
        if self.max_iters < 1:
            raise DomainError(f"max_iters must be >= 1, got {self.max_iters}")
        if not self.eps > 0:
            raise DomainError(f"eps must be positive, got {self.eps}")
        if not 0 < self.zone.f_delta <= 1:
            raise DomainError(f"f_delta must lie in (0, 1], got {self.zone.f_delta}")
        if 2 * self.zone.Z >= self.N:
            raise DomainError(f"need Z < N/2, got Z={self.zone.Z}, N={self.N}")
        if self.power_iters < 1 or not self.power_tol > 0:
            raise DomainError("power_iters must be >= 1 and power_tol positive")
        if self.record_every is None:
            self.record_every = 1 if self.N <= 256 else 100
        elif self.record_every < 1:
            raise DomainError(f"record_every must be >= 1, got {self.record_every}")


@dataclass
class DesignReport:
    sequence: np.ndarray
    isl_trace: np.ndarray
    trace_iters: np.ndarray
    iters_run: int
    converged: bool
    initial_sequence: np.ndarray
    initial_isl: float
    power_failures: int = 0
    backend: str = field(default="")

    @property
    def final_isl(self) -> float:
        return float(self.isl_trace[-1])

    def trace_rows(self):
        return zip(self.trace_iters.tolist(), self.isl_trace.tolist())


def initial_sequence(cfg: DesignConfig) -> np.ndarray:
    """Random-phase starting point drawn from ``numpy.random.default_rng(cfg.seed)`` (PCG64)."""
    return random_unimodular(cfg.N, np.random.default_rng(cfg.seed))


def design(cfg: DesignConfig, initial=None, backend: str | None = None) -> DesignReport:
    """Run OA-ITROX until ``||a_t - a_{t-1}||**2 <= eps`` or ``max_iters``.

    Args:
        cfg: Run parameters.
        initial: Optional unimodular starting sequence (e.g. the best Zadoff-Chu
            root); defaults to :func:`initial_sequence`.
        backend: ``"compiled"`` or ``"python"``; defaults to the import-time choice.
    """
    a0 = initial_sequence(cfg) if initial is None else as_sequence(initial, unimodular=True, tol=1e-9)
    if a0.size != cfg.N:
        raise DimensionError(f"initial sequence has length {a0.size}, config says N={cfg.N}")
    a0 = a0 / np.abs(a0)
    name, loop = kernel.get_loop(backend)
    a, trace, trace_it, iters, converged, isl0, pfail, ties = loop(
        a0, cfg.zone.Z, cfg.zone.M, float(cfg.zone.f_delta), int(cfg.max_iters), float(cfg.eps),
        int(cfg.power_iters), float(cfg.power_tol), int(cfg.record_every))
    if pfail:
        warnings.warn(f"power iteration hit its step limit in {pfail} of {iters} iterations",
                      RuntimeWarning, stacklevel=2)
    if ties:
        warnings.warn(f"{ties} zero averages during sequence recovery were set to phase 0",
                      RuntimeWarning, stacklevel=2)
    return DesignReport(np.asarray(a), np.asarray(trace), np.asarray(trace_it), int(iters),
                        bool(converged), a0, float(isl0), int(pfail), name)
