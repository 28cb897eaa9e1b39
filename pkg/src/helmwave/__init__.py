"""helmwave: 1-D Helmholtz solver via hyperbolic relaxation.

The steady Helmholtz problem with impedance boundaries is solved by time
marching an equivalent first-order hyperbolic system with a well-balanced
upwind scheme in characteristic variables; discrete steady states are held
exactly, and with pairwise-equal speeds the march terminates in finite time.
"""

from .errors import (
    CflViolationError,
    HelmwaveError,
    InvalidParameterError,
    RepresentationError,
)
from .linalg import (
    ExpmCache,
    QuadratureRule,
    expm,
    expm_fast,
    gauss_legendre,
    propagate_backward,
    propagate_forward,
)
from .model import (
    DEFAULT_SPECTRAL,
    HelmholtzProblem,
    ModelMatrices,
    SpectralParams,
    StateVec,
    build_boundary_matrices,
    build_first_order_form,
    build_hyperbolic_matrices,
    build_model,
    build_riemann_system,
    from_riemann,
    to_riemann,
)
from .solver import (
    Mesh,
    RiemannField,
    RunDiagnostics,
    TimeGrid,
    check_cfl,
    initialize,
    residual,
    run,
    step,
)
from .verification import (
    CheckResult,
    ErrorReport,
    GroupNorms,
    ManufacturedCase,
    SweepEntry,
    error_report,
    exact_riemann_init,
    plane_wave_case,
    run_self_checks,
    solve_case,
    sweep_refinement,
    sweep_wavenumber,
    table_rows,
    write_table_csv,
)

__version__ = "0.1.0"

__all__ = [
    "CflViolationError",
    "HelmwaveError",
    "InvalidParameterError",
    "RepresentationError",
    "ExpmCache",
    "QuadratureRule",
    "expm",
    "expm_fast",
    "gauss_legendre",
    "propagate_backward",
    "propagate_forward",
    "DEFAULT_SPECTRAL",
    "HelmholtzProblem",
    "ModelMatrices",
    "SpectralParams",
    "StateVec",
    "build_boundary_matrices",
    "build_first_order_form",
    "build_hyperbolic_matrices",
    "build_model",
    "build_riemann_system",
    "from_riemann",
    "to_riemann",
    "Mesh",
    "RiemannField",
    "RunDiagnostics",
    "TimeGrid",
    "check_cfl",
    "initialize",
    "residual",
    "run",
    "step",
    "CheckResult",
    "ErrorReport",
    "GroupNorms",
    "ManufacturedCase",
    "SweepEntry",
    "error_report",
    "exact_riemann_init",
    "plane_wave_case",
    "run_self_checks",
    "solve_case",
    "sweep_refinement",
    "sweep_wavenumber",
    "table_rows",
    "write_table_csv",
    "__version__",
]
