"""Swarm-based inertial minimization methods.

Seven single-agent schemes coupled to a mass-transfer swarm loop, with
energy-dissipation diagnostics and a seeded benchmark harness.
"""

from .diagnostics import (
    EnergyTrace,
    RateEstimate,
    delta_c,
    dissipation_check,
    energy_fd,
    rate_estimate,
    stop_and_success,
    swarm_energy,
)
from .errors import ConfigError, DimensionError, SbimError, SolverError, StateError
from .harness import (
    ExperimentConfig,
    converge_run,
    export,
    run_convergence,
    run_energy_trace,
    run_swarm_batch,
)
from .imexrb import ImexConfig, imexrb_step
from .integrators import (
    InertialState,
    Scheme,
    SchemeParams,
    SolverConfig,
    check_dissipation_conditions,
    fb_step,
    fd_step,
    gd_step,
    imexrb_inertial_step,
    initial_state,
    ipahd_step,
    nesterov_step,
    prox,
    rhs_first_order,
    semi_step,
)
from .objectives import OBJECTIVE_NAMES, ObjectiveSpec, fd_check, make_objective
from .swarm import (
    Agent,
    CommParams,
    RunOutcome,
    SBNesterovParams,
    StopCriteria,
    communicate,
    eta,
    merge,
    sb_nesterov_update,
    sbim_run,
)

__version__ = "0.1.0"
