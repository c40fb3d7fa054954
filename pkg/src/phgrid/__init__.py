"""Electromagnetic power-system simulation on port-Hamiltonian networks.

Simulates full-order (inductor/capacitor) multi-machine dynamics in
stationary alpha-beta coordinates, checks the structural assumptions behind
energy-convergence (skew network matrix, damping floor, convex-energy floor),
and classifies terminal behavior (synchronized limit cycle, low-frequency
oscillation, collapse).
"""

from .backend import NUMBA_ENABLED, backend_name
from .errors import (
    DegenerateDirection,
    DimensionMismatch,
    GridError,
    NonFiniteError,
    PhgridError,
    StepFailure,
    StructuralError,
)
from .netmodel import (
    GROUND,
    Admittance,
    ContractionCertificate,
    Edge,
    LineParams,
    NetworkMatrix,
    PowerNetwork,
    RlBranch,
    SgParams,
    ShuntParams,
    assemble_network_matrix,
    contraction_certificate,
    edges,
    reference_frequency,
    rl_admittance,
    validate_network,
)
from .dynamics import (
    EnergyBreakdown,
    conservative_field,
    electrical_torque,
    energy_balance_residual,
    gradient,
    hamiltonian,
    hessian_floor,
    rhs,
    state_dim,
    state_labels,
)
from .integrator import Forcing, IntegratorConfig, Trajectory, decimate, integrate
from .scenarios import (
    Scenario,
    SweepRow,
    SweepSpec,
    builtin_scenarios,
    case_variant,
    random_initial,
    run_scenario,
    run_sweep,
    scale_damping,
    scale_flux,
    scale_inertia,
    scale_torque,
    steady_guess,
    transient_time,
    two_machine_default,
    with_admittance_loads,
)

__version__ = "0.1.0"
