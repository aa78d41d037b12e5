"""Point representations.

A point is an integer id plus coordinates, either dense (float vector) or
sparse (sorted index/value pairs).  Dense vectors assert their
dimensionality; sparse vectors live in an unbounded index space with
implicit zeros.  Dense and sparse encodings of the same vector must behave
identically everywhere, which the metric layer guarantees.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["Point", "dense", "sparse"]


@dataclass(frozen=True)
class Point:
    id: int
    vec: np.ndarray | None = None
    idx: np.ndarray | None = None
    val: np.ndarray | None = field(default=None, repr=False)

    @property
    def is_dense(self) -> bool:
        return self.vec is not None

    def to_dense(self, dim: int) -> np.ndarray:
        if self.vec is not None:
            if len(self.vec) != dim:
                raise ValueError(f"point {self.id}: dimension {len(self.vec)} != {dim}")
            return self.vec
        out = np.zeros(dim)
        if self.idx is not None and len(self.idx):
            if self.idx[-1] >= dim:
                raise ValueError(f"point {self.id}: sparse index {self.idx[-1]} out of range for dim {dim}")
            out[self.idx] = self.val
        return out

    def max_index(self) -> int:
        """Highest coordinate index carried (dim-1 for dense)."""
        if self.vec is not None:
            return len(self.vec) - 1
        if self.idx is None or len(self.idx) == 0:
            return -1
        return int(self.idx[-1])


def dense(pid: int, coords) -> Point:
    v = np.asarray(coords, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError("dense point needs a flat coordinate vector")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"point {pid}: non-finite coordinate")
    return Point(id=pid, vec=v)


def sparse(pid: int, pairs) -> Point:
    """Build a sparse point from (index, value) pairs; indices sorted, unique."""
    if len(pairs) == 0:
        return Point(id=pid, idx=np.empty(0, dtype=np.int64), val=np.empty(0))
    idx = np.asarray([p[0] for p in pairs], dtype=np.int64)
    val = np.asarray([p[1] for p in pairs], dtype=np.float64)
    order = np.argsort(idx, kind="stable")
    idx, val = idx[order], val[order]
    if np.any(idx[1:] == idx[:-1]):
        raise ValueError(f"point {pid}: duplicate sparse index")
    if np.any(idx < 0):
        raise ValueError(f"point {pid}: negative sparse index")
    if not np.all(np.isfinite(val)):
        raise ValueError(f"point {pid}: non-finite coordinate")
    return Point(id=pid, idx=idx, val=val)
