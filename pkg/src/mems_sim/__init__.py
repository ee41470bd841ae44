"""Free-boundary MEMS simulator with finite-time singularity diagnostics."""

from ._backend import backend_name
from .dynamics import (
    Outcome,
    OutcomeKind,
    StepControls,
    Trajectory,
    heat_evolve,
    imex_step,
    run_simulation,
    sobolev_proxy,
    vanishing_aspect_rhs,
)
from .elliptic import (
    electrostatic_force,
    map_coefficients,
    solve_potential,
    trace_gradient,
)
from .grid import DeflectionState, Grid1D, MappedGrid, ModelParams, PotentialField
from .theory import (
    MU1,
    F_pdelta,
    ProofParams,
    check_dissipation,
    check_identity_p9,
    check_jensen_bound_p10,
    check_lower_bound_p8,
    choose_parameters,
    energy,
    lambda_star,
    lemma2_envelope,
    singularity_certificate,
)

__version__ = "0.1.0"
