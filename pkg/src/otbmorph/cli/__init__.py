"""
Command-line interface for otb-morph.

Provides the morph, simulate, attack, evaluate, demo and issue commands.
"""

from .main import app, main

__all__ = ["main", "app"]
