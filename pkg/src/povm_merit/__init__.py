"""Photodetector figures of merit computed from a POVM on a truncated Fock space."""

from . import classical, models, quantum
from .classical import resolutions, total_bandwidth
from .estimator import DetectorMerit
from .exceptions import PovmMeritError, ValidationFailed
from .hilbert import (
    FockBasis,
    FrequencyGrid,
    ModeBasis,
    ModeFunction,
    TimeWindow,
    enumerate_fock,
    inner_product,
    ladder_matrix,
    orthonormalize,
    temporal_density,
    time_translate,
)
from .io import load, save
from .povm import (
    Povm,
    PovmElement,
    QuantumState,
    born_probability,
    effective_dimension,
    purity,
    validate,
)
from .report import MeritReport, build_report

__version__ = "0.1.0"

__all__ = [
    "DetectorMerit",
    "FockBasis",
    "FrequencyGrid",
    "MeritReport",
    "ModeBasis",
    "ModeFunction",
    "Povm",
    "PovmElement",
    "PovmMeritError",
    "QuantumState",
    "TimeWindow",
    "ValidationFailed",
    "born_probability",
    "build_report",
    "classical",
    "effective_dimension",
    "enumerate_fock",
    "inner_product",
    "ladder_matrix",
    "load",
    "models",
    "orthonormalize",
    "purity",
    "quantum",
    "resolutions",
    "save",
    "temporal_density",
    "time_translate",
    "total_bandwidth",
    "validate",
]
