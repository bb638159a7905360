"""Document-exchange sketches for edit distance and insdel codes built on them."""

from .bits import (
    BitString,
    EditOp,
    EditScript,
    adversarial_channel,
    apply_edits,
    edit_distance,
    lcs,
)
from .config import DEFAULTS, Constants, load_constants, save_constants
from .detproto import recover, sketch, sketch_size_bits

__all__ = [
    "BitString",
    "Constants",
    "DEFAULTS",
    "EditOp",
    "EditScript",
    "adversarial_channel",
    "apply_edits",
    "edit_distance",
    "lcs",
    "load_constants",
    "recover",
    "save_constants",
    "sketch",
    "sketch_size_bits",
]
