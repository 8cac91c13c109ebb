"""Two-population feedback-evolving games over a shared resource.

Replicator dynamics for two populations coupled through a common resource
level, closed-form fixed points and regime labels, the irresponsible
population's optimal consumption rate, and the sensitivity of the resulting
resource level to incentives offered to the responsible population.
"""

from ._backend import BACKEND
from .dynamics import (
    IntegratorSettings,
    OutcomeLabel,
    Trajectory,
    classify_trajectory,
    environment_drive,
    integrate,
    integrate_many,
    jacobian,
    payoff_difference,
    rhs,
    write_trajectory_csv,
)
from .equilibria import (
    FixedPointRecord,
    RegimeLabel1Pop,
    RegimeLabel2Pop,
    classify_single_population,
    classify_two_population,
    enumerate_fixed_points,
    n_star_derivative,
    sustained_fixed_point,
)
from .errors import (
    AssumptionViolation,
    BoundaryPolicy,
    DegenerateDenominator,
    EcoGameError,
    InvalidParameter,
    NonFiniteState,
    OutOfRegion,
)
from .exploit import (
    ExploitResult,
    brute_force_optimum,
    optimal_consumption,
    resource_function,
    support_of_utility,
    threshold_C,
    utility,
)
from .model import (
    GCoefficients,
    PayoffMatrixPair,
    PolicyDeltas,
    PopulationSpec,
    State,
    SystemConfig,
    deltas_from_matrices,
    g_coefficients,
    matrices_from_deltas,
    reference_config,
    validate,
)
from .sensitivity import (
    IncentivePerturbation,
    SensitivityReport,
    apply_incentive,
    fd_sensitivities,
    resource_sensitivities,
    sensitivity_ratio_map,
)

__version__ = "0.1.0"
