"""Analysis of singular discrete-time systems ``F y[k+1] = G y[k]``.

Weierstrass decomposition of the pencil ``sF - G``, detection and optimal
repair of non-consistent initial conditions, equilibrium sets and stability
of the optimal solution.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    DescriptorError,
    DimensionMismatch,
    IllConditionedStructure,
    MissingInitialCondition,
    ParseError,
    RankDeficient,
    ReconstructionFailure,
    ShapeError,
    SingularPencil,
)
from .numerics import (  # noqa: E402
    DEFAULT_TOLERANCES,
    JordanStructure,
    Tolerances,
    jordan_structure,
    least_squares_solve,
    numerical_rank,
    orthonormal_range_basis,
)
from .pencil import (  # noqa: E402
    RegularSystem,
    SpectralSummary,
    WeierstrassDecomposition,
    certify_regularity,
    finite_spectrum,
    verify_decomposition,
    weierstrass_decompose,
)
from .solution import (  # noqa: E402
    ConsistencyReport,
    TrajectoryRecord,
    audit_residuals,
    check_consistency,
    closed_form_solution,
    consistency_projector,
    optimal_trajectory,
)
from .stability import (  # noqa: E402
    Classification,
    EquilibriumSet,
    StabilityVerdict,
    classify_stability,
    empirical_decay_check,
    equilibrium_set,
    is_power_bounded,
)
