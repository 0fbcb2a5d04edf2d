"""Hitting times of discrete-time quantum Markov chains."""
from .channels import (
    Channel,
    CPMap,
    DensityMatrix,
    Explicit,
    Geometric,
    StepDistribution,
    TargetSubspace,
    classical_channel,
    compose,
    identity_channel,
    mix,
    projection_map,
    restricted_map,
    sigma_channel,
    unitary_channel,
)
from .errors import (
    AllCensored,
    DimensionError,
    NonConvergent,
    PreconditionViolated,
    QHittingError,
    SingularSystem,
    TrajectoryAborted,
    ValidationError,
)
from .hitting import (
    HittingResult,
    InterleavedSystem,
    classical_hitting_time,
    generalized_hitting_time,
    geometric_hitting_time,
    hitting_time,
    hitting_time_neumann,
)
from .trajectories import (
    HittingEstimate,
    ProtocolConfig,
    TrajectoryOutcome,
    estimate_hitting,
    measure_step,
    run_trajectory,
)
from .walks import classical_embed, coined_cycle, grover_full, grover_restricted

__version__ = "0.1.0"
