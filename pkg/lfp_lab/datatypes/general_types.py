"""
general_types.py - Model level types that are used across multiple subsystems
"""

from enum import Enum


class ZeroModePolicy(Enum):
    """Treatment of the k=0 (constant) lattice coefficient"""
    UNPENALIZED = 'unpenalized'  # Free to move, contributes nothing to the FP-norm
    EXCLUDED = 'excluded'  # Frozen at its initial value
    PENALIZED = 'penalized'  # Ordinary mode with a finite weight


class Part(Enum):
    """Which function of an activation a transform refers to"""
    VALUE = 'value'
    DERIVATIVE = 'derivative'
