"""Singularity invariants and Schwarz symmetrization of toric and S1-invariant
plurisubharmonic functions."""

from .catalog import builtin_catalog, get_entry
from .invariants import compute_invariants, lelong_origin, refined_lelong, verify_theorems
from .model import FunctionSpec, Symmetry, evaluate, load_spec
from .rearrangement import schwarz_symmetrize
from .volume import sublevel_volume, volume_profile

__all__ = ["builtin_catalog", "get_entry", "compute_invariants", "lelong_origin", "refined_lelong",
           "verify_theorems", "FunctionSpec", "Symmetry", "evaluate", "load_spec",
           "schwarz_symmetrize", "sublevel_volume", "volume_profile"]
__version__ = "0.1.0"
