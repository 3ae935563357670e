"""Two-mode multiphoton Jaynes-Cummings simulations: closed forms, unitary and
Lindblad dynamics, entanglement and coherence measures."""

from .errors import ConfigError, CutoffTooSmallError, MPJCError, SolverError
from .hilbert import SpaceDescriptor, fock_space, single_mode_space
from .model import BathParams, ModelParams
from .states import ModePrep, SpinPrep

__version__ = "0.1.0"

__all__ = [
    "BathParams", "ConfigError", "CutoffTooSmallError", "MPJCError", "ModePrep", "ModelParams",
    "SolverError", "SpaceDescriptor", "SpinPrep", "fock_space", "single_mode_space",
]
