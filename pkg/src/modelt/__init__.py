"""Model T money exchange on social graphs: simulation and equal-wealth
stability analysis."""

__version__ = "0.1.0"

from ._accel import BACKEND
from .dynamics import (
    Constant,
    Explicit,
    Params,
    RunResult,
    StepRecord,
    TrajectoryPolicy,
    WealthState,
    fermi_prob,
    run,
    stochastic_step,
    total_wealth,
)
from .graph import (
    Graph,
    SpectralReport,
    build_family,
    build_gnp_connected,
    from_edge_list,
    is_connected,
    laplacian,
    largest_eigenvalue,
    spectrum,
)
from .meanfield import (
    LimitKind,
    LimitResult,
    MeanFieldState,
    deviation_rate,
    equal_wealth_limit,
    meanfield_step,
)
from .stability import (
    AsymptoticClass,
    AsymptoticVerdict,
    StabilityClass,
    StabilityVerdict,
    asymptotic_classify,
    classify,
    jacobian,
    jacobian_spectrum_two_ways,
    phase_grid,
    star_limit_check,
)
