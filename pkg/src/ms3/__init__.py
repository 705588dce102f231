"""Multi-rate sub-Nyquist cooperative wideband spectrum sensing."""

from .aliasing import ChannelPlan, compute_support_sets, fold_spectrum, select_primes, verify_no_collision
from .bounds import BoundSpec, Bounds, FadingSpec, theorem1_bounds, theorem2_bounds, theorem3_bounds
from .detection import decide, energy_vector, fuse, threshold_for_pfa
from .exceptions import ConditionViolated, DomainError, ToleranceNotReached
from .signal import ScenarioSpec, SubbandSpec
from .specfun import SeriesControl, SeriesResult, marcum_q

__version__ = "0.1.0"

__all__ = [
    "BoundSpec",
    "Bounds",
    "ChannelPlan",
    "ConditionViolated",
    "DomainError",
    "FadingSpec",
    "ScenarioSpec",
    "SeriesControl",
    "SeriesResult",
    "SubbandSpec",
    "ToleranceNotReached",
    "compute_support_sets",
    "decide",
    "energy_vector",
    "fold_spectrum",
    "fuse",
    "marcum_q",
    "select_primes",
    "theorem1_bounds",
    "theorem2_bounds",
    "theorem3_bounds",
    "threshold_for_pfa",
    "verify_no_collision",
]
