"""Modal DG for 1D linear advection with a shifted (embedded) inflow boundary."""
from ._accel import USE_NUMBA
from .basis import BasisSpec, QuadratureRule, element_operators, eval_basis, gauss_rule
from .charpoly import CharPoly, char_poly_exact
from .eigen import EigenConvergenceError, eigvals
from .operators import (
    GlobalSystem,
    ManufacturedCase,
    SbBoundarySpec,
    assemble_periodic,
    assemble_shifted,
    sb_correction_matrix,
)
from .solver import (
    ConvergenceTable,
    RunConfig,
    SimState,
    convergence_study,
    l2_error,
    run_to_steady,
    step_explicit,
    step_implicit_euler,
)
from .spectral import (
    Spectrum,
    StabilityMap,
    eigenvalues,
    periodic_cfl_max,
    stability_map,
)

__version__ = "0.1.0"
