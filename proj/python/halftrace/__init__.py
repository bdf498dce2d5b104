"""Skeleton retractions, extension energies and trace experiments on the half-space."""

from ._core import (
    chain_constant,
    condition_iii_scan,
    gamma_of_complex,
    grid_energy,
    project_to_sphere,
    retract_once,
    retract_to_skeleton,
    verify_suite,
    winding_number,
)

__all__ = [
    "chain_constant",
    "condition_iii_scan",
    "gamma_of_complex",
    "grid_energy",
    "project_to_sphere",
    "retract_once",
    "retract_to_skeleton",
    "verify_suite",
    "winding_number",
]
