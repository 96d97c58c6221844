"""Hypervolume, ideal/nadir machinery, and coverage indicators.

All indicators treat their input as a *set* of objective points: functions
whose value depends on point multiplicity (distribution metric, spacing,
evenness) first reduce the input to its distinct rows. Degenerate inputs
(too few points, zero ranges) yield +inf rather than raising, so an
optimizer can rank them as bad instead of crashing mid-run.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .core import (
    MAX_ENUM_BITS,
    CapabilityError,
    ProblemInstance,
    _as_points,
    iter_bit_blocks,
    nondominated_mask,
)

HV_RECURSION_POINT_CAP = 32  # K >= 3 hypervolume is exact but exponential


class Indicator(str, Enum):
    """Coverage indicators; `orientation` +1 means larger raw value = better coverage."""

    PS = "ps"  # range product relative to ideal-nadir box
    OD = "od"  # largest single-axis extent
    M = "m"    # root of summed per-axis extents
    DM = "dm"  # gap-variance distribution metric
    D = "d"    # nearest-neighbor spread ratio
    EV = "ev"  # max/min nearest-neighbor distance

    @property
    def orientation(self) -> int:
        return +1 if self in (Indicator.PS, Indicator.OD, Indicator.M) else -1


@dataclass(frozen=True, eq=False)
class ReferenceContext:
    """Single-objective optima and the ideal / approximate-nadir box they span."""

    ideal: np.ndarray
    nadir: np.ndarray
    optima: tuple[int, ...]
    optima_images: np.ndarray  # row k is the full image of the k-th optimum

    def __post_init__(self):
        if np.any(self.ideal > self.nadir):
            raise ValueError("ideal must weakly dominate the nadir approximation")


def reference_context(instance: ProblemInstance) -> ReferenceContext:
    """Solve the K single-objective problems and derive ideal and approximate nadir.

    Linear objectives are solved in closed form (set bit i iff its coefficient
    is negative); quadratic ones by exhaustive enumeration (n <= 24). Ties go
    to the smallest solution index. For K = 2 the approximation equals the
    true nadir.
    """
    optima: list[int] = []
    for spec in instance.objectives:
        if spec.kind == "linear":
            idx = int(np.sum((np.int64(1) << np.arange(instance.n))[spec.c < 0]))
        else:
            if instance.n > MAX_ENUM_BITS:
                raise CapabilityError(
                    f"quadratic argmin needs enumeration; capped at n={MAX_ENUM_BITS}"
                )
            best_val, idx = np.inf, 0
            for start, bits in iter_bit_blocks(instance.n):
                vals = spec.value_batch(bits)
                j = int(np.argmin(vals))
                if vals[j] < best_val:
                    best_val, idx = float(vals[j]), start + j
        optima.append(idx)
    shifts = np.arange(instance.n)
    images = np.empty((instance.K, instance.K))
    for row, idx in enumerate(optima):
        bits = (idx >> shifts) & 1
        for k, spec in enumerate(instance.objectives):
            images[row, k] = spec.value(bits)
    ideal = np.diag(images).copy()
    nadir = images.max(axis=0)
    return ReferenceContext(
        ideal=ideal, nadir=nadir, optima=tuple(optima), optima_images=images
    )


def hypervolume(Y, r) -> float:
    """Lebesgue measure of the region weakly dominated by Y and bounded by r.

    Points with any coordinate beyond r span an empty box and are discarded.
    K = 2 uses an exact strip sweep; K >= 3 uses recursive slicing, capped at
    32 points.
    """
    pts = _as_points(Y)
    ref = np.asarray(r, dtype=float)
    if ref.ndim != 1 or (pts.size and pts.shape[1] != ref.size):
        raise ValueError("reference point dimension mismatch")
    if ref.size < 2:
        raise ValueError("hypervolume needs at least two objectives")
    if ref.size > 2 and pts.shape[0] > HV_RECURSION_POINT_CAP:
        raise CapabilityError(
            f"K>=3 hypervolume capped at {HV_RECURSION_POINT_CAP} points"
        )
    if pts.shape[0] == 0:
        return 0.0
    pts = pts[(pts <= ref).all(axis=1)]
    if pts.shape[0] == 0:
        return 0.0
    pts = pts[nondominated_mask(pts)]
    if ref.size == 2:
        return _hv_2d(pts, ref)
    return _hv_slice(pts, ref)


def _hv_2d(pts: np.ndarray, ref: np.ndarray) -> float:
    u = np.unique(pts, axis=0)  # ascending first coordinate, descending second
    prev = np.concatenate(([ref[1]], u[:-1, 1]))
    return float(((ref[0] - u[:, 0]) * (prev - u[:, 1])).sum())


def _hv_slice(pts: np.ndarray, ref: np.ndarray) -> float:
    if ref.size == 2:
        return _hv_2d(pts, ref)
    order = np.argsort(pts[:, 0], kind="stable")
    u = pts[order]
    cuts = np.unique(u[:, 0])
    total = 0.0
    for i, lo in enumerate(cuts):
        hi = cuts[i + 1] if i + 1 < cuts.size else ref[0]
        width = hi - lo
        if width <= 0:
            continue
        proj = u[u[:, 0] <= lo][:, 1:]
        proj = proj[nondominated_mask(proj)]
        total += width * _hv_slice(proj, ref[1:])
    return total


def pareto_spread(Y, ctx: ReferenceContext) -> float:
    """Product over objectives of the covered range relative to the ideal-nadir range."""
    pts = _as_points(Y)
    if pts.shape[0] == 0:
        raise ValueError("needs at least one point")
    spans = pts.max(axis=0) - pts.min(axis=0)
    boxes = np.abs(ctx.ideal - ctx.nadir)
    out = 1.0
    for num, den in zip(spans, boxes):
        out *= 0.0 if den == 0 else num / den
    return float(out)


def outer_diameter(Y) -> float:
    """Largest pairwise coordinate difference over any single objective."""
    pts = _as_points(Y)
    if pts.shape[0] == 0:
        raise ValueError("needs at least one point")
    return float((pts.max(axis=0) - pts.min(axis=0)).max())


def m_indicator(Y) -> float:
    """Root of the summed per-objective extents; rewards covering the extremes."""
    pts = _as_points(Y)
    if pts.shape[0] == 0:
        raise ValueError("needs at least one point")
    return float(np.sqrt((pts.max(axis=0) - pts.min(axis=0)).sum()))


def distribution_metric(Y, ctx: ReferenceContext) -> float:
    """Gap-variance measure of how unevenly the points are spaced, per objective.

    +inf for fewer than three distinct points, zero mean gaps, or a zero
    coordinate range.
    """
    pts = np.unique(_as_points(Y), axis=0)
    m = pts.shape[0]
    if m < 3:
        return np.inf
    total = 0.0
    for k in range(pts.shape[1]):
        vals = np.sort(pts[:, k])
        gaps = np.diff(vals)
        mean_gap = gaps.sum() / (m - 1)
        var_gap = ((gaps - mean_gap) ** 2).sum() / (m - 2)
        span = vals[-1] - vals[0]
        if mean_gap == 0 or span == 0:
            return np.inf
        total += (var_gap / mean_gap) * (abs(ctx.ideal[k] - ctx.nadir[k]) / span)
    return float(total / m)


def _nearest_neighbor_distances(pts: np.ndarray) -> np.ndarray:
    diff = pts[:, None, :] - pts[None, :, :]
    d2 = (diff * diff).sum(axis=-1)
    np.fill_diagonal(d2, np.inf)
    return np.sqrt(d2.min(axis=1))


def d_indicator(Y, ctx: ReferenceContext) -> float:
    """Spread ratio combining extreme-point coverage and neighbor-gap uniformity.

    Uses the images of the single-objective optima as the extremes; +inf when
    fewer than two distinct points exist.
    """
    pts = np.unique(_as_points(Y), axis=0)
    m = pts.shape[0]
    if m < 2:
        return np.inf
    nn = _nearest_neighbor_distances(pts)
    mu = nn.mean()
    ext = 0.0
    for k in range(ctx.optima_images.shape[0]):
        d = np.linalg.norm(pts - ctx.optima_images[k], axis=1)
        d = d[d > 0]  # set-minus: drop rows equal to the extreme itself
        if d.size == 0:
            return np.inf
        ext += d.min()
    denom = ext + m * mu
    if denom == 0:
        return np.inf
    return float((ext + np.abs(mu - nn).sum()) / denom)


def evenness(Y) -> float:
    """Max over min nearest-neighbor distance; 1 means perfectly even spacing."""
    pts = np.unique(_as_points(Y), axis=0)
    if pts.shape[0] < 2:
        return np.inf
    nn = _nearest_neighbor_distances(pts)
    return float(nn.max() / nn.min())


def indicator_value(indicator: Indicator | str, Y, ctx: ReferenceContext) -> float:
    """Raw value of one coverage indicator."""
    ind = Indicator(indicator)
    if ind is Indicator.PS:
        return pareto_spread(Y, ctx)
    if ind is Indicator.OD:
        return outer_diameter(Y)
    if ind is Indicator.M:
        return m_indicator(Y)
    if ind is Indicator.DM:
        return distribution_metric(Y, ctx)
    if ind is Indicator.D:
        return d_indicator(Y, ctx)
    return evenness(Y)


def coverage_cost(indicator: Indicator | str, Y, ctx: ReferenceContext,
                  p: float, r) -> float:
    """Minimizable blend p * indicator + (1 - p) * (-hypervolume).

    Indicators where larger means better coverage enter negated, so lower
    cost is always better; degeneracies propagate as +inf.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    if p == 0.0:
        return -hypervolume(Y, r)
    ind = Indicator(indicator)
    raw = indicator_value(ind, Y, ctx)
    if np.isinf(raw):
        return np.inf
    adjusted = -raw if ind.orientation > 0 else raw
    if p == 1.0:
        return p * adjusted
    return p * adjusted + (1.0 - p) * (-hypervolume(Y, r))
