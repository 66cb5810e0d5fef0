"""Time-fractional Allen-Cahn solver with structure-preserving monitors.

The package is organized around six pieces: convolution-quadrature weight
families (`weights`), the periodic grid and its Fourier-diagonal solver
(`grid`), the three time discretizations (`stepper`), discrete energy and
maximum-principle monitors (`energy`), the experiment harness
(`experiments`), and the CLI front end (`cli`, `config`).
"""

from .energy import (
    Monitor,
    MonitorLog,
    compatible_energy,
    decay_residual,
    discrete_energy,
    max_principle_check,
    variational_slope,
)
from .grid import (
    Field,
    Grid2D,
    field_from_function,
    grad_norm_sq,
    inner,
    laplacian,
    norm_inf,
    norm_l2,
    read_snapshot,
    solve_helmholtz,
    write_snapshot,
)
from .stepper import (
    MeshKind,
    RunConfig,
    Scheme,
    StepError,
    TimeMesh,
    Trajectory,
    nonlinear_term,
    run,
    sftr_history,
    step_fbdf2,
    step_l21sigma,
    step_sftr,
    step_size_bounds,
)
from .weights import (
    WeightKind,
    WeightSequence,
    caputo_quadrature_error,
    convolve_prefix,
    fbdf2_weights,
    l21sigma_coefficients,
    l21sigma_offset,
    rl_quadrature_error,
    sftr_weights,
    theta_weights,
    validate,
    vartheta_weights,
)

__version__ = "0.1.0"
