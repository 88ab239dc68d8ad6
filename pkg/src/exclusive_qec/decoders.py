"""Uniform batch interface over the two exclusive decoders."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .code_model import Code
from .errors import InvalidParameter
from .matching import _weight_table, batch_decode_mwpm, species_graphs, tolerance_fraction
from .unionfind import _uf_table, batch_decode_uf

__all__ = ["ExclusiveDecoder", "DECODERS"]

DECODERS = ("mwpm", "uf")
_TABLE_MAX_CHECKS = 12


@dataclass(frozen=True, eq=False)
class ExclusiveDecoder:
    """An exclusive decoder of a given kind and tolerance bound to a code."""

    code: Code
    kind: str = "mwpm"
    c: float = 1.0

    def __post_init__(self):
        if self.kind not in DECODERS:
            raise InvalidParameter(f"unknown decoder {self.kind!r}; choose from {DECODERS}")
        tolerance_fraction(self.c)

    @property
    def fraction(self):
        return tolerance_fraction(self.c)

    def decode_batch(self, x: np.ndarray, z: np.ndarray) -> tuple:
        """``(aborted, residual_sector, margins)`` for a batch of errors."""
        if self.kind == "mwpm":
            return batch_decode_mwpm(self.code, x, z, self.c)
        return batch_decode_uf(self.code, x, z, self.c)

    def tabulated(self) -> bool:
        return all(g.num_checks <= _TABLE_MAX_CHECKS for g in species_graphs(self.code))

    def tables(self) -> tuple:
        """Per-species ``(margin, correction class)`` indexed by syndrome key."""
        if not self.tabulated():
            raise InvalidParameter("syndrome tables are only built for codes with at most 12 checks per type")
        out = []
        for idx in range(2):
            if self.kind == "mwpm":
                w = _weight_table(self.code, idx)
                out.append((np.abs(w[:, 1] - w[:, 0]), (w[:, 1] < w[:, 0]).astype(np.int64)))
            else:
                t = _uf_table(self.code, idx)
                out.append((t[:, 0].copy(), t[:, 1].copy()))
        return tuple(out)
