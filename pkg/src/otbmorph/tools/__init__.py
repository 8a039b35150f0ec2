"""
Shared utilities: enumerations, seed derivation and digests.

Main exports:
- Scenario, ADKind, Decision, Behavior, TapPoint, AttackSpace, BorderPolicy
- SeedTree: per-component seed derivation from one master seed

For digests, import from the specific module::

    from otbmorph.tools.digest import array_digest
"""

from .seeds import SeedTree
from .types import (
    EER_POINT,
    OPERATING_POINTS,
    ADKind,
    AttackSpace,
    Behavior,
    BorderPolicy,
    Decision,
    Scenario,
    TapPoint,
    far_point,
)

__all__ = [
    "EER_POINT",
    "OPERATING_POINTS",
    "ADKind",
    "AttackSpace",
    "Behavior",
    "BorderPolicy",
    "Decision",
    "Scenario",
    "SeedTree",
    "TapPoint",
    "far_point",
]
