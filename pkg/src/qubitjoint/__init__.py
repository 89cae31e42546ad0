"""Joint measurements of noisy qubit observables and their optimal instruments."""

__version__ = "0.1.0"

from .bloch import Axis, HermitianOp, QubitState, sandwich, sqrt_op, trace_distance, trace_pair  # noqa: E402
from .errors import QubitJointError  # noqa: E402
from .instruments import (  # noqa: E402
    luders,
    luders_of_joint,
    luders_pair_jointly_measurable,
    marginal_operation,
    rank1_from_joint,
    von_neumann,
    worst_case_mixture,
)
from .integration import IntegrationScheme, ball_average, ball_estimate  # noqa: E402
from .metrics import AxisConfig, alpha, beta, distance_report, gamma_const  # noqa: E402
from .observables import (  # noqa: E402
    joint_measurable_pair,
    joint_observable_e,
    joint_observable_f,
    joint_observable_g,
    outcome_distribution,
    smeared_observable,
    witness_unique,
)
from .optimize import OptimizationProblem, OptimizerParams, certify, minimize  # noqa: E402

__all__ = [
    "Axis",
    "AxisConfig",
    "HermitianOp",
    "IntegrationScheme",
    "OptimizationProblem",
    "OptimizerParams",
    "QubitJointError",
    "QubitState",
    "alpha",
    "ball_average",
    "ball_estimate",
    "beta",
    "certify",
    "distance_report",
    "gamma_const",
    "joint_measurable_pair",
    "joint_observable_e",
    "joint_observable_f",
    "joint_observable_g",
    "luders",
    "luders_of_joint",
    "luders_pair_jointly_measurable",
    "marginal_operation",
    "minimize",
    "outcome_distribution",
    "rank1_from_joint",
    "sandwich",
    "smeared_observable",
    "sqrt_op",
    "trace_distance",
    "trace_pair",
    "von_neumann",
    "witness_unique",
    "worst_case_mixture",
]
