"""Homogenization of viscous Hamilton-Jacobi equations in random media."""

from ._core import (
    CorrectorProfile,
    Environment,
    Hamiltonian,
    HillWitness,
    HjlabError,
    InvariantViolation,
    PreconditionError,
    ThetaEstimate,
    command_names,
    corrector_profile,
    estimate_theta,
    find_hill,
    generate_env,
    homogenize_sweep,
    invert_theta,
    run_command,
)

__all__ = [
    "CorrectorProfile",
    "Environment",
    "Hamiltonian",
    "HillWitness",
    "HjlabError",
    "InvariantViolation",
    "PreconditionError",
    "ThetaEstimate",
    "command_names",
    "corrector_profile",
    "estimate_theta",
    "find_hill",
    "generate_env",
    "homogenize_sweep",
    "invert_theta",
    "run_command",
]
