"""Driving noise: Wiener paths and iterated Ito integrals."""

from .ito_integrals import (
    ItoIntegralSet,
    SeriesConfig,
    double_cross,
    double_same,
    double_time,
    draw_series_normals,
    levy_area_matrix,
    levy_area_scalar,
    mixed_time,
    sample_step_integrals,
    single_integrals,
    symmetric_double,
    triple_diag,
)
from .wiener import (
    TimeGrid,
    WienerEnsemble,
    WienerPath,
    cumulative,
    generate_path,
    generate_paths,
    load_path_csv,
    save_path_csv,
)

__all__ = [
    # Paths
    "TimeGrid",
    "WienerPath",
    "WienerEnsemble",
    "generate_path",
    "generate_paths",
    "cumulative",
    "save_path_csv",
    "load_path_csv",
    # Integrals
    "ItoIntegralSet",
    "SeriesConfig",
    "single_integrals",
    "double_same",
    "double_time",
    "mixed_time",
    "triple_diag",
    "draw_series_normals",
    "levy_area_scalar",
    "levy_area_matrix",
    "symmetric_double",
    "double_cross",
    "sample_step_integrals",
]
