"""Cost models: a base metric wrapped by a monotone distortion.

The base metric is Euclidean by default, or a precomputed symmetric lookup
table indexed by point id.  On top of the base distance sits a wrapper
``wrap`` with growth exponent ``r`` (wrap(a*t) <= a^r * wrap(t) for a >= 1),
which covers k-median (identity, r=1), k-means (square, r=2), powers, and
the bounded M-estimators.  The exponent controls two slack constants used
throughout:

* ``rho = max(2^(r-1), 1)``: relaxed triangle inequality
  D(x,z) <= rho * (D(x,y) + D(y,z)).
* ``psi(eps) = (r/eps)^r``: dissimilarity bound
  |D(x,z) - D(y,z)| <= psi(eps) * D(x,y) + eps * D(y,z).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np
from scipy.spatial.distance import cdist

from .points import Point

__all__ = [
    "CostModel", "Block", "kmedian", "kmeans", "lp", "huber", "cauchy",
    "tukey", "custom", "model_from_spec", "block", "cross", "distance",
    "dist_to_set", "psi",
]


@dataclass(frozen=True)
class CostModel:
    name: str
    r: float
    wrap: Callable[[np.ndarray], np.ndarray]
    base: str = "euclidean"              # "euclidean" | "table"
    table: np.ndarray | None = None
    centroid_exact: bool = False         # weighted mean minimizes per-cluster cost

    @property
    def rho(self) -> float:
        return max(2.0 ** (self.r - 1.0), 1.0)

    def with_table(self, table: np.ndarray) -> "CostModel":
        t = np.asarray(table, dtype=np.float64)
        if t.ndim != 2 or t.shape[0] != t.shape[1]:
            raise ValueError("distance table must be square")
        if not np.allclose(t, t.T, rtol=1e-9, atol=0.0):
            raise ValueError("distance table must be symmetric")
        if np.any(np.diag(t) != 0.0):
            raise ValueError("distance table must have zero diagonal")
        if np.any(t < 0.0) or not np.all(np.isfinite(t)):
            raise ValueError("distance table entries must be finite and nonnegative")
        return replace(self, base="table", table=t, centroid_exact=False)


def kmedian() -> CostModel:
    """Plain distance, r=1, rho=1."""
    return CostModel("kmedian", 1.0, lambda t: t)


def kmeans() -> CostModel:
    """Squared distance, r=2, rho=2.  Weighted centroids are exact minimizers."""
    return CostModel("kmeans", 2.0, np.square, centroid_exact=True)


def lp(p: float) -> CostModel:
    """Distance to the power p (p > 0)."""
    if p <= 0:
        raise ValueError("lp exponent must be positive")
    return CostModel(f"lp:{p:g}", float(p), lambda t: np.power(t, p))


def huber(c: float) -> CostModel:
    """Quadratic near zero, linear past the scale c.  Treated as r=2."""
    _check_scale(c)

    def w(t):
        t = np.asarray(t, dtype=np.float64)
        return np.where(t <= c, 0.5 * t * t, c * t - 0.5 * c * c)

    return CostModel(f"huber:{c:g}", 2.0, w)


def cauchy(c: float) -> CostModel:
    """Log-damped quadratic with scale c.  Treated as r=2."""
    _check_scale(c)

    def w(t):
        t = np.asarray(t, dtype=np.float64)
        return 0.5 * c * c * np.log1p((t / c) ** 2)

    return CostModel(f"cauchy:{c:g}", 2.0, w)


def tukey(c: float) -> CostModel:
    """Biweight loss, saturates at c^2/6 beyond the scale c.  Treated as r=2."""
    _check_scale(c)
    cap = c * c / 6.0

    def w(t):
        t = np.asarray(t, dtype=np.float64)
        inner = 1.0 - (np.minimum(t, c) / c) ** 2
        return np.where(t <= c, cap * (1.0 - inner ** 3), cap)

    return CostModel(f"tukey:{c:g}", 2.0, w)


def custom(name: str, wrap: Callable, r: float) -> CostModel:
    """User wrapper with a declared growth exponent; wrap(0) must be 0."""
    if r <= 0:
        raise ValueError("growth exponent must be positive")
    if float(np.asarray(wrap(np.zeros(1)))[0]) != 0.0:
        raise ValueError("wrapper must map 0 to 0")
    return CostModel(name, float(r), wrap)


def _check_scale(c: float) -> None:
    if not (c > 0) or not np.isfinite(c):
        raise ValueError("estimator scale must be a positive finite number")


_PLAIN = {"kmedian": kmedian, "kmeans": kmeans}
_SCALED = {"huber": huber, "cauchy": cauchy, "tukey": tukey, "lp": lp}


def model_from_spec(spec: str) -> CostModel:
    """Parse a model spec string: ``kmeans``, ``kmedian``, ``huber:1.5``, ``lp:3``."""
    name, _, arg = spec.partition(":")
    if name in _PLAIN:
        if arg:
            raise ValueError(f"{name} takes no scale argument")
        return _PLAIN[name]()
    if name in _SCALED:
        if not arg:
            raise ValueError(f"{name} needs a scale argument, e.g. {name}:1.0")
        return _SCALED[name](float(arg))
    raise ValueError(f"unknown cost model {spec!r}")


def psi(model: CostModel, eps: float) -> float:
    """Dissimilarity slack factor (r/eps)^r for 0 < eps < 1."""
    if not (0.0 < eps < 1.0):
        raise ValueError("eps must lie in (0, 1)")
    return (model.r / eps) ** model.r


# ---------------------------------------------------------------------------
# vectorized distance plumbing


@dataclass(frozen=True)
class Block:
    """A batch of points flattened for vectorized distance work."""

    ids: np.ndarray                 # (n,) int64
    X: np.ndarray                   # (n, d) float64; d may be 0
    hard_dim: bool                  # True when a dense point pinned the width

    def __len__(self) -> int:
        return len(self.ids)


def block(points: Sequence[Point]) -> Block:
    ids = np.asarray([p.id for p in points], dtype=np.int64)
    dense_dims = {len(p.vec) for p in points if p.vec is not None}
    if len(dense_dims) > 1:
        raise ValueError(f"mixed dense dimensions {sorted(dense_dims)}")
    hard = bool(dense_dims)
    want = max((p.max_index() for p in points), default=-1) + 1
    if hard:
        dim = dense_dims.pop()
        if want > dim:
            raise ValueError(f"sparse index {want - 1} out of range for dense dimension {dim}")
    else:
        dim = want
    X = np.zeros((len(points), dim))
    for i, p in enumerate(points):
        X[i] = p.to_dense(dim)
    return Block(ids=ids, X=X, hard_dim=hard)


def _widen(a: Block, b: Block) -> tuple[np.ndarray, np.ndarray]:
    da, db = a.X.shape[1], b.X.shape[1]
    if da == db:
        return a.X, b.X
    if a.hard_dim and b.hard_dim:
        raise ValueError(f"dimension mismatch: {da} vs {db}")
    d = max(da, db)
    pad = lambda X: np.pad(X, ((0, 0), (0, d - X.shape[1])))
    return pad(a.X), pad(b.X)


def base_cross(model: CostModel, a: Block, b: Block) -> np.ndarray:
    """Base-metric distances, (len(a), len(b))."""
    if model.base == "table":
        t = model.table
        for ids in (a.ids, b.ids):
            if len(ids) and (ids.min() < 0 or ids.max() >= t.shape[0]):
                raise ValueError("point id out of range for the distance table")
        return t[np.ix_(a.ids, b.ids)]
    Xa, Xb = _widen(a, b)
    if Xa.shape[1] == 0:
        return np.zeros((len(a), len(b)))
    return cdist(Xa, Xb)


def cross(model: CostModel, a: Block, b: Block) -> np.ndarray:
    """Wrapped distances, (len(a), len(b))."""
    return np.asarray(model.wrap(base_cross(model, a, b)), dtype=np.float64)


def distance(model: CostModel, x: Point, y: Point) -> float:
    return float(cross(model, block([x]), block([y]))[0, 0])


def dist_to_set(model: CostModel, x: Point, centers: Sequence[Point]) -> tuple[float, Point]:
    """Nearest-center distance; exact ties go to the smallest center id."""
    if len(centers) == 0:
        raise ValueError("center set is empty")
    row = cross(model, block([x]), block(list(centers)))[0]
    best = np.min(row)
    tied = np.flatnonzero(row == best)
    pick = tied[np.argmin(np.asarray([centers[i].id for i in tied]))]
    return float(best), centers[pick]


def nearest(model: CostModel, a: Block, c: Block) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise nearest center: (index into c, wrapped distance).

    Ties resolve to the smallest center id, matching dist_to_set.
    """
    if len(c) == 0:
        raise ValueError("center set is empty")
    M = cross(model, a, c)
    order = np.argsort(c.ids, kind="stable")
    Mo = M[:, order]
    j = np.argmin(Mo, axis=1)
    return order[j], Mo[np.arange(len(a)), j]
