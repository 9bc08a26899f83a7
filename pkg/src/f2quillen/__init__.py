"""Mod-2 cohomology of small 2-groups and the Quillen comparison map."""

from __future__ import annotations

__version__ = "0.1.0"

from .groups import Group, GroupSpec, Subgroup, build_group, elementary_abelian_subgroups, get_group, subgroups
from .limits import (
    coefficient_system,
    edge_map,
    family_category,
    higher_limits,
    limit0,
    nilpotence_check,
    power_in_image_check,
)
from .resolve import Resolution, lift_chain_map, minimal_resolution
from .ring import CohomClass, conjugation_map, cup, frobenius_power, restriction, ring_table

__all__ = [
    "CohomClass",
    "Group",
    "GroupSpec",
    "Resolution",
    "Subgroup",
    "__version__",
    "build_group",
    "coefficient_system",
    "conjugation_map",
    "cup",
    "edge_map",
    "elementary_abelian_subgroups",
    "family_category",
    "frobenius_power",
    "get_group",
    "higher_limits",
    "lift_chain_map",
    "limit0",
    "minimal_resolution",
    "nilpotence_check",
    "power_in_image_check",
    "restriction",
    "ring_table",
    "subgroups",
]
