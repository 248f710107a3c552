"""One-step methods: Euler-Maruyama and table-interpreted SRK schemes."""

from .integrate import (
    RandomSource,
    integrate,
    save_trajectory_csv,
    source_for,
    strong_source,
    weak_source,
)
from .randoms import (
    THREE_POINT_PROBABILITIES,
    WeakRandomSet,
    sample_weak_randoms,
    weak_pair_matrix,
)
from .steppers import (
    EulerMaruyama,
    GeneratedStepper,
    ScalarStrongStepper,
    Stepper,
    VectorStrongStepper,
    VectorWeakStepper,
    em_step,
    make_stepper,
    scalar_strong_step,
    stepper_for_table,
    vector_strong_step,
    vector_weak_step,
)
from .system import SdeSystem

__all__ = [
    "SdeSystem",
    # Weak randomness
    "WeakRandomSet",
    "THREE_POINT_PROBABILITIES",
    "sample_weak_randoms",
    "weak_pair_matrix",
    # Steps
    "em_step",
    "scalar_strong_step",
    "vector_strong_step",
    "vector_weak_step",
    # Stepper objects
    "Stepper",
    "EulerMaruyama",
    "ScalarStrongStepper",
    "VectorStrongStepper",
    "VectorWeakStepper",
    "GeneratedStepper",
    "stepper_for_table",
    "make_stepper",
    # Integration
    "RandomSource",
    "strong_source",
    "weak_source",
    "source_for",
    "integrate",
    "save_trajectory_csv",
]
