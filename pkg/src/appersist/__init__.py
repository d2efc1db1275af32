"""Persistence at 0 for almost periodic Nicholson-type delay systems."""

__version__ = "0.1.0"

from .integrator import InitialHistory, Trajectory, integrate
from .lyapunov import LyapunovEstimate, block_exponents, characteristic_root, top_exponent
from .model import DelaySystem, LinearDelaySystem, Nonlinearity, linearized, subsystem, validate
from .persistence import ClassifyOptions, PersistenceVerdict, classify, empirical_check, scalar_criterion
from .robustness import hull_demo, recurrence_scan
from .signals import QuasiPeriodicSignal, Term, conley_miller
from .structure import BlockStructure, ZeroPattern, condense, index_sets, zero_pattern

__all__ = [
    "BlockStructure", "ClassifyOptions", "DelaySystem", "InitialHistory", "LinearDelaySystem",
    "LyapunovEstimate", "Nonlinearity", "PersistenceVerdict", "QuasiPeriodicSignal", "Term",
    "Trajectory", "ZeroPattern", "block_exponents", "characteristic_root", "classify", "condense",
    "conley_miller", "empirical_check", "hull_demo", "index_sets", "integrate", "linearized",
    "recurrence_scan", "scalar_criterion", "subsystem", "top_exponent", "validate", "zero_pattern",
]
