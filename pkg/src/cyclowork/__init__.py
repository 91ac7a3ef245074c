"""Work statistics of a damped, driven charged particle in a magnetic field.

Closed-form and quadrature evaluation of the mean work, the bath-induced work
variance and the fluctuation-theorem slope alpha, cross-checked by a
classical Langevin simulation and a finite harmonic bath.
"""

__version__ = "0.1.0"

from .core_model import (  # noqa: E402
    ExpCosine,
    PhysicalParams,
    Sampled,
    ThermalState,
    drive_value,
    thermal_factor,
)
from .kernels import mean_work, mode_kernels, response_F, spectral_coefficient  # noqa: E402
from .work_stats import (  # noqa: E402
    WorkDistribution,
    WorkStatistics,
    characteristic_function,
    limit_long_time,
    limit_short_time,
    variance_full,
    variance_rwa,
    work_distribution,
)

__all__ = [
    "ExpCosine", "PhysicalParams", "Sampled", "ThermalState", "drive_value", "thermal_factor",
    "mean_work", "mode_kernels", "response_F", "spectral_coefficient",
    "WorkDistribution", "WorkStatistics", "characteristic_function", "limit_long_time",
    "limit_short_time", "variance_full", "variance_rwa", "work_distribution",
]
