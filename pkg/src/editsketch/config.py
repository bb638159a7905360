"""Tunable protocol constants with JSON round-tripping.

Defaults are the tuned values the acceptance measurements settled on; every
knob can be overridden from a JSON file for experiments. Sizes serialized
into sketches never depend on this object at read time, so a receiver with
different constants still parses any sketch.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass

from .errors import ParameterError


@dataclass(frozen=True)
class Constants:
    # deterministic protocol
    c_q: int = 5          # hash bits beyond log2(blocks * padded length)
    c_L: int = 6          # stop splitting once block <= c_L * ceil(log2(n/k))
    b1_floor: int = 64    # first-level block size clamp, power of two
    b1_cap: int = 256
    c_m: int = 2          # independence budget coefficient
    eps_margin: int = 16  # extra bias exponent for the generator
    search_cap: int = 1 << 20
    degenerate_num: int = 1   # ship the string verbatim when k > n * num/den
    degenerate_den: int = 8
    pad_coeff: float = 12.0   # uniform size floor coefficient, 0 disables

    # randomized protocol
    mask_kappa_coeff: int = 2     # kappa = coeff * B for the mask generator
    mask_search_cap: int = 1 << 16
    sync_band: int = 2        # reject self-agreements within band * T of a block
    sync_span: int = 8        # reject monotone agreement pairs of combined span <= this
    sync_cell_cap: int = 64   # reject seeds with more surviving agreements than this
    zi_coeff: int = 5         # level value redundancy distance = coeff * k + 1
    zx_coeff: int = 10        # content redundancy distance = coeff * k + 1
    rand_pad_coeff: float = 95.0  # uniform size floor for the randomized sketch

    # codec
    inner_unit_bits: int = 32
    inner_book_size: int = 64
    buffer_zeros: int = 16   # half a unit; segmentation assumes this margin
    run_threshold: int = 8

    def validate(self) -> "Constants":
        if self.c_q < 1 or self.c_L < 1 or self.c_m < 1:
            raise ParameterError("coefficients must be positive")
        if self.b1_floor & (self.b1_floor - 1) or self.b1_cap & (self.b1_cap - 1):
            raise ParameterError("block clamps must be powers of two")
        if self.b1_floor > self.b1_cap:
            raise ParameterError("block floor exceeds cap")
        if not (0 < self.degenerate_num <= self.degenerate_den):
            raise ParameterError("degenerate threshold must be a fraction in (0, 1]")
        if self.pad_coeff < 0 or self.rand_pad_coeff < 0:
            raise ParameterError("pad coefficient must be non-negative")
        if self.zi_coeff < 1 or self.zx_coeff < 1:
            raise ParameterError("redundancy coefficients must be positive")
        if self.run_threshold > self.buffer_zeros:
            raise ParameterError("run threshold must not exceed the buffer")
        if self.run_threshold < 5:
            raise ParameterError("run threshold must clear in-word zero runs")
        return self


DEFAULTS = Constants()


def load_constants(path) -> Constants:
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    known = {f.name for f in dataclasses.fields(Constants)}
    extra = set(raw) - known
    if extra:
        raise ParameterError(f"unknown constant names: {sorted(extra)}")
    return Constants(**raw).validate()


def save_constants(consts: Constants, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(dataclasses.asdict(consts), fh, indent=2, sort_keys=True)
        fh.write("\n")
