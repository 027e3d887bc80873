"""Oversampled low-ambiguity-zone pilot design and doubly selective channel estimation.

Modules:
    afcore: correlation / ambiguity functions, ISL objectives, periodic diagonals.
    designer: the OA-ITROX alternating-projection sequence designer.
    baselines: Zadoff-Chu and extended m-sequence pilots, family ranking.
    channel: Jakes fading, EVA profile, OFDM framing and transmission.
    estimator: LS estimation, DPSS interpolation, equalization, MSE/CRLB.
    experiments: Monte-Carlo link experiments.
    cli: config-driven batch runner.
"""

from .afcore import (AmbiguitySurface, AmbiguityZone, ambiguity_surface, ds, isl_af, isl_corr,
                     isl_oaf, load_sequence, oaf, pcaf, pccf, periodic_diag, save_sequence)
from .designer import DesignConfig, DesignReport, design
from .errors import ConditioningError, DegenerateError, DimensionError, DomainError
from .kernel import BACKEND

__all__ = [
    "AmbiguitySurface", "AmbiguityZone", "ambiguity_surface", "ds", "isl_af", "isl_corr",
    "isl_oaf", "load_sequence", "oaf", "pcaf", "pccf", "periodic_diag", "save_sequence",
    "DesignConfig", "DesignReport", "design",
    "ConditioningError", "DegenerateError", "DimensionError", "DomainError",
    "BACKEND",
]
