"""
Score-leakage adversary: oracle, template injection and hill climbing.

Main exports:
- LeakageOracle, leak_score, inject_template
- AttackPolicy, AttackTrace, hill_climb
- AttackSchedule, attack_scenario
"""

from .hill_climb import AttackPolicy, AttackTrace, TraceEntry, hill_climb
from .oracle import (
    AttackTarget,
    LeakageOracle,
    ProtocolTarget,
    ScenarioContext,
    StaticTarget,
    inject_template,
    leak_score,
)
from .scenario import AttackSchedule, attack_scenario

__all__ = [
    "AttackPolicy",
    "AttackSchedule",
    "AttackTarget",
    "AttackTrace",
    "LeakageOracle",
    "ProtocolTarget",
    "ScenarioContext",
    "StaticTarget",
    "TraceEntry",
    "attack_scenario",
    "hill_climb",
    "inject_template",
    "leak_score",
]
