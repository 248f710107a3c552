"""Monte Carlo ensembles with online statistics."""

from .montecarlo import (
    McAccumulator,
    McConfig,
    McResult,
    all_finite,
    merge,
    online_mean_update,
    partition_trials,
    run_trials,
    save_results,
    seed_worker,
)

__all__ = [
    "McConfig",
    "McAccumulator",
    "McResult",
    "all_finite",
    "online_mean_update",
    "merge",
    "seed_worker",
    "partition_trials",
    "run_trials",
    "save_results",
]
