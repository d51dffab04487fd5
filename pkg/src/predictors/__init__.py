"""
Predictor structures: BTB, shadow branch buffers, RAS and direction
predictors, plus storage accounting.
"""

from .models import BtbBranchType, BtbEntry, SbbPrediction, SbbSource, btb_type_for_class
from .tagged_buffer import TaggedBuffer
from .btb import BranchTargetBuffer
from .sbb import ShadowBranchBuffer
from .ras import ReturnAddressStack
from .direction import (
    DirectionPredictor,
    GshareDirectionPredictor,
    OracleDirectionPredictor,
    make_direction_predictor,
)
from .audit import BitAudit, audit_bits, format_bit_audit, iso_storage_btb_entries

__all__ = [
    "BtbBranchType",
    "BtbEntry",
    "SbbPrediction",
    "SbbSource",
    "btb_type_for_class",
    "TaggedBuffer",
    "BranchTargetBuffer",
    "ShadowBranchBuffer",
    "ReturnAddressStack",
    "DirectionPredictor",
    "GshareDirectionPredictor",
    "OracleDirectionPredictor",
    "make_direction_predictor",
    "BitAudit",
    "audit_bits",
    "format_bit_audit",
    "iso_storage_btb_entries",
]
