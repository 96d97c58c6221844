"""Binary decision vectors, objective evaluation, and Pareto dominance machinery.

Solutions over n binary variables are identified with the integers
0 .. 2**n - 1 whose base-2 digits are the decision variables (bit 0 is the
first variable, i.e. least significant). Objective-point sets are (m, K)
float arrays and every dominance relation is componentwise minimization.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

MAX_ENUM_BITS = 24  # hard cap on 2**n exhaustive enumerations
ENUM_BLOCK = 1 << 16


class CapabilityError(RuntimeError):
    """The request exceeds a hard size cap (e.g. exhaustive enumeration)."""


@dataclass(frozen=True)
class Solution:
    """One assignment of n binary decision variables, stored as its integer index."""

    index: int
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be positive")
        if not 0 <= self.index < (1 << self.n):
            raise ValueError(f"index {self.index} out of range for n={self.n}")

    @property
    def bits(self) -> np.ndarray:
        """Decision vector (x_1, ..., x_n); bit i of index is x_{i+1}."""
        return (self.index >> np.arange(self.n)) & 1

    @classmethod
    def from_bits(cls, bits: Sequence[int]) -> "Solution":
        arr = np.asarray(bits, dtype=np.int64)
        if arr.ndim != 1 or np.any((arr != 0) & (arr != 1)):
            raise ValueError("bits must be a flat 0/1 sequence")
        index = int((arr << np.arange(arr.size)).sum())
        return cls(index=index, n=arr.size)


@dataclass(frozen=True, eq=False)
class ObjectiveSpec:
    """One scalar objective over binary vectors in coefficient form.

    kind "linear":    f(x) = c . x
    kind "quadratic": f(x) = x^T J x + h . x + c0 with J symmetric
    """

    kind: str
    c: np.ndarray | None = None
    J: np.ndarray | None = None
    h: np.ndarray | None = None
    c0: float = 0.0

    def __post_init__(self):
        if self.kind == "linear":
            if self.c is None or self.J is not None or self.h is not None:
                raise ValueError("linear objective takes only coefficient vector c")
            object.__setattr__(self, "c", np.asarray(self.c, dtype=float))
        elif self.kind == "quadratic":
            if self.J is None or self.c is not None:
                raise ValueError("quadratic objective takes J (and optionally h, c0)")
            J = np.asarray(self.J, dtype=float)
            if J.ndim != 2 or J.shape[0] != J.shape[1]:
                raise ValueError("J must be square")
            if not np.array_equal(J, J.T):
                raise ValueError("J must be symmetric")
            h = np.zeros(J.shape[0]) if self.h is None else np.asarray(self.h, dtype=float)
            if h.shape != (J.shape[0],):
                raise ValueError("h has wrong length")
            object.__setattr__(self, "J", J)
            object.__setattr__(self, "h", h)
            object.__setattr__(self, "c0", float(self.c0))
        else:
            raise ValueError(f"unknown objective kind {self.kind!r}")

    @property
    def n(self) -> int:
        return self.c.size if self.kind == "linear" else self.J.shape[0]

    def value(self, bits: np.ndarray) -> float:
        b = np.asarray(bits, dtype=float)
        if self.kind == "linear":
            return float(self.c @ b)
        return float(b @ self.J @ b + self.h @ b + self.c0)

    def value_batch(self, bits_matrix: np.ndarray) -> np.ndarray:
        """Objective values for a (m, n) matrix of decision vectors."""
        B = np.asarray(bits_matrix, dtype=float)
        if self.kind == "linear":
            return B @ self.c
        return np.einsum("ij,jk,ik->i", B, self.J, B) + B @ self.h + self.c0


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    """K objectives over a shared set of n binary decision variables."""

    n: int
    K: int
    objectives: tuple[ObjectiveSpec, ...]
    kind: str = "custom"
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "objectives", tuple(self.objectives))
        if self.K < 2:
            raise ValueError("need at least two objectives")
        if len(self.objectives) != self.K:
            raise ValueError("objective count does not match K")
        for spec in self.objectives:
            if spec.n != self.n:
                raise ValueError("objective dimension does not match n")


@dataclass(frozen=True, eq=False)
class ObjectivePoint:
    """A point in objective space, optionally tagged with its originating solution."""

    values: np.ndarray
    origin: int | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1:
            raise ValueError("values must be a flat vector")
        if not np.all(np.isfinite(v)):
            raise ValueError("objective values must be finite")
        object.__setattr__(self, "values", v)

    def __array__(self, dtype=None):
        return np.asarray(self.values, dtype=dtype)


@dataclass
class FrontPartition:
    """Partition of a point set into ranked nondominated fronts (rank 1 = best)."""

    fronts: list[np.ndarray]
    ranks: np.ndarray


def evaluate(instance: ProblemInstance, x: Solution) -> ObjectivePoint:
    """Evaluate all objectives of `instance` at solution `x`."""
    if x.n != instance.n:
        raise ValueError(f"solution has n={x.n}, instance has n={instance.n}")
    bits = x.bits
    values = np.array([spec.value(bits) for spec in instance.objectives])
    return ObjectivePoint(values=values, origin=x.index)


def iter_bit_blocks(n: int, block: int = ENUM_BLOCK) -> Iterator[tuple[int, np.ndarray]]:
    """Yield (start_index, bits_matrix) blocks covering all 2**n solutions."""
    if n > MAX_ENUM_BITS:
        raise CapabilityError(f"exhaustive enumeration capped at n={MAX_ENUM_BITS}, got {n}")
    total = 1 << n
    shifts = np.arange(n, dtype=np.int64)
    for start in range(0, total, block):
        idx = np.arange(start, min(start + block, total), dtype=np.int64)
        yield start, ((idx[:, None] >> shifts[None, :]) & 1).astype(float)


def objective_image(instance: ProblemInstance) -> np.ndarray:
    """The full image f(x) for every solution, as a (2**n, K) array."""
    out = np.empty((1 << instance.n, instance.K))
    for start, bits in iter_bit_blocks(instance.n):
        for k, spec in enumerate(instance.objectives):
            out[start:start + bits.shape[0], k] = spec.value_batch(bits)
    return out


def _as_points(Y) -> np.ndarray:
    arr = np.asarray(Y, dtype=float)
    if arr.size == 0:
        return arr.reshape(0, arr.shape[-1] if arr.ndim == 2 else 0)
    if arr.ndim != 2:
        raise ValueError("expected an (m, K) array of objective points")
    return arr


def weakly_dominates(a, b) -> bool:
    """True iff a_k <= b_k for every objective k (reflexive weak dominance)."""
    av = np.asarray(a, dtype=float)
    bv = np.asarray(b, dtype=float)
    if av.shape != bv.shape:
        raise ValueError(f"dimension mismatch: {av.shape} vs {bv.shape}")
    return bool(np.all(av <= bv))


def strictly_dominates(a, b) -> bool:
    """Weak dominance with at least one strict inequality."""
    av = np.asarray(a, dtype=float)
    bv = np.asarray(b, dtype=float)
    return weakly_dominates(av, bv) and bool(np.any(av != bv))


def nondominated_mask(Y) -> np.ndarray:
    """Boolean mask of the minimal elements of Y; equal-valued duplicates all kept."""
    pts = _as_points(Y)
    m = pts.shape[0]
    if m == 0:
        return np.zeros(0, dtype=bool)
    if pts.shape[1] == 2:
        return _mask_2d(pts)
    return _mask_nd(pts)


def _mask_2d(pts: np.ndarray) -> np.ndarray:
    # Sweep in (f1 asc, f2 asc) order: a point is minimal iff it attains its
    # f1-group's minimum f2 and that minimum undercuts every earlier group.
    m = pts.shape[0]
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    ys = pts[order]
    starts = np.empty(m, dtype=bool)
    starts[0] = True
    starts[1:] = ys[1:, 0] != ys[:-1, 0]
    gidx = np.cumsum(starts) - 1
    gmin2 = ys[starts, 1]  # groups are f2-ascending, so the first row is the min
    prev_best = np.empty(gmin2.size)
    prev_best[0] = np.inf
    if gmin2.size > 1:
        np.minimum.accumulate(gmin2[:-1], out=prev_best[1:])
    keep_group = gmin2 < prev_best
    row_keep = keep_group[gidx] & (ys[:, 1] == gmin2[gidx])
    mask = np.zeros(m, dtype=bool)
    mask[order[row_keep]] = True
    return mask


def _mask_nd(pts: np.ndarray, chunk: int = 256) -> np.ndarray:
    m = pts.shape[0]
    mask = np.ones(m, dtype=bool)
    for i0 in range(0, m, chunk):
        blk = pts[i0:i0 + chunk]
        leq = (pts[None, :, :] <= blk[:, None, :]).all(axis=-1)
        neq = (pts[None, :, :] != blk[:, None, :]).any(axis=-1)
        mask[i0:i0 + chunk] = ~(leq & neq).any(axis=1)
    return mask


def nondominated_filter(Y) -> np.ndarray:
    """The minimal elements of Y under weak dominance."""
    pts = _as_points(Y)
    return pts[nondominated_mask(pts)]


def nondominated_sort(Y) -> FrontPartition:
    """Peel Y into ranked fronts: front r+1 is the filter of Y minus fronts 1..r."""
    pts = _as_points(Y)
    m = pts.shape[0]
    ranks = np.zeros(m, dtype=np.int64)
    fronts: list[np.ndarray] = []
    remaining = np.arange(m)
    rank = 1
    while remaining.size:
        msk = nondominated_mask(pts[remaining])
        front = remaining[msk]
        fronts.append(front)
        ranks[front] = rank
        remaining = remaining[~msk]
        rank += 1
    return FrontPartition(fronts=fronts, ranks=ranks)


def crowding_distance(front) -> np.ndarray:
    """Per-point crowding distance within one front.

    Boundary points of every objective get +inf; interior points accumulate
    (next - prev) / (max - min) per objective, zero-range objectives
    contributing 0. Fronts of size <= 2 are all +inf. Ties in the
    per-objective sort are broken by stable input order.
    """
    pts = _as_points(front)
    m = pts.shape[0]
    if m == 0:
        return np.zeros(0)
    if m <= 2:
        return np.full(m, np.inf)
    dist = np.zeros(m)
    for k in range(pts.shape[1]):
        col = pts[:, k]
        order = np.argsort(col, kind="stable")
        dist[order[0]] = np.inf
        dist[order[-1]] = np.inf
        span = col[order[-1]] - col[order[0]]
        if span == 0:
            continue
        dist[order[1:-1]] += (col[order[2:]] - col[order[:-2]]) / span
    return dist
