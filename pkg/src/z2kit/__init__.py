"""Z2 invariants of time-reversal-symmetric band insulators.

Three independent routes to the Z2 index (Pfaffian/Kane-Mele, lattice
obstruction, Wannier flow), lattice Chern numbers, the WZW winding of
unitary maps, and the KQ-group tables that classify the answers.
"""
__version__ = "0.1.0"

from .brillouin import InvolutiveGrid, effective_bz, make_grid, trim_tree
from .errors import (AccidentalDegeneracy, AmbiguousKernel, FieldNotResolvable, GapClosing,
                     GridTooCoarse, KramersViolation, NotCoveredError, NotTRClosed, SchemaError,
                     TRSViolation, ValidationError, Z2KitError)
from .invariants import (Z2Report, chern_number, equivalence_report, kane_mele, sewing_field,
                         wannier_flow, z2_obstruction)
from .model import BlochModel, TimeReversalOp, diagonalize, validate_trs
from .pfaffian import pfaffian
from .winding import wzw_winding

__all__ = [
    "AccidentalDegeneracy", "AmbiguousKernel", "BlochModel", "FieldNotResolvable", "GapClosing",
    "GridTooCoarse", "InvolutiveGrid", "KramersViolation", "NotCoveredError", "NotTRClosed",
    "SchemaError", "TRSViolation", "TimeReversalOp", "ValidationError", "Z2KitError", "Z2Report",
    "chern_number", "diagonalize", "effective_bz", "equivalence_report", "kane_mele",
    "make_grid", "pfaffian", "sewing_field", "trim_tree", "validate_trs", "wannier_flow",
    "wzw_winding", "z2_obstruction",
]
