"""
Workflow module: experiment orchestration behind the CLI.

Main exports:
- Experiment: Runs simulate, attack, evaluate, demo and issue
- RunResult: Artifacts, diagnostics and issues of one command
"""

from .experiment import Experiment, run_attack, world_config
from .result import RunResult

__all__ = [
    "Experiment",
    "RunResult",
    "run_attack",
    "world_config",
]
