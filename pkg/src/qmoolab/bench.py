"""Seeded benchmark-instance generators and exhaustive ground-truth oracles.

Reproducibility contract: an instance is a pure function of (kind, n, seed).
Randomness comes from numpy PCG64 streams spawned from SeedSequence(seed),
one child stream per coefficient block, in this fixed order:

    UMOCO-1:  c1, d
    UMOCO-2:  c1, c2
    FM-AFM:   J1, J2, g1, g2
    AFM:      J1, v, J2, g2

Symmetric coupling matrices are drawn as a full n x n matrix whose upper
triangle (including the diagonal) is kept and mirrored. The serialized
instance file, not the RNG, is the cross-implementation contract.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import (
    MAX_ENUM_BITS,
    CapabilityError,
    ObjectiveSpec,
    ProblemInstance,
    nondominated_mask,
    objective_image,
)
from .indicators import hypervolume, reference_context

KINDS = ("UMOCO-1", "UMOCO-2", "AFM", "FM-AFM")

ANGLE_BOUNDS_DEG = (90.0, 150.0)
MAX_REJECTION_DRAWS = 10 ** 6


class GenerationError(RuntimeError):
    """Rejection sampling failed to produce an admissible instance."""


@dataclass(frozen=True)
class GeneratorConfig:
    """Parameters of one benchmark instance draw.

    fm_range bounds the ferromagnetic couplings (a < b < 0), afm_range the
    antiferromagnetic ones (0 < a < b).
    """

    kind: str
    n: int
    seed: int
    fm_range: tuple[float, float] = (-1.0, -0.5)
    afm_range: tuple[float, float] = (0.5, 1.0)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown benchmark kind {self.kind!r}; choose from {KINDS}")
        if self.n < 2:
            raise ValueError("n must be at least 2")
        a, b = self.fm_range
        if not a < b < 0:
            raise ValueError("fm_range must satisfy a < b < 0")
        a, b = self.afm_range
        if not 0 < a < b:
            raise ValueError("afm_range must satisfy 0 < a < b")


def _streams(seed: int, count: int) -> list[np.random.Generator]:
    children = np.random.SeedSequence(seed).spawn(count)
    return [np.random.Generator(np.random.PCG64(c)) for c in children]


def _symmetric(matrix: np.ndarray) -> np.ndarray:
    upper = np.triu(matrix)
    return upper + np.triu(matrix, 1).T


def _angle_degrees(u: np.ndarray, v: np.ndarray) -> float:
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    cosang = np.clip(u @ v / (nu * nv), -1.0, 1.0)
    return float(np.degrees(np.arccos(cosang)))


def generate(config: GeneratorConfig) -> ProblemInstance:
    """Draw one bicriteria benchmark instance, deterministic in (kind, n, seed)."""
    n, seed = config.n, config.seed
    if config.kind == "UMOCO-1":
        rng_c1, rng_d = _streams(seed, 2)
        c1 = rng_c1.uniform(-1.0, 1.0, n)
        d = rng_d.uniform(-1.0, 1.0, n)
        c2 = -0.5 * c1 + 0.5 * d
        objectives = (ObjectiveSpec("linear", c=c1), ObjectiveSpec("linear", c=c2))
    elif config.kind == "UMOCO-2":
        rng_c1, rng_c2 = _streams(seed, 2)
        bound = 10 * n
        lo_deg, hi_deg = ANGLE_BOUNDS_DEG
        for _ in range(MAX_REJECTION_DRAWS):
            c1 = rng_c1.integers(-bound, bound, endpoint=True, size=n)
            c2 = rng_c2.integers(-bound, bound, endpoint=True, size=n)
            if not c1.any() or not c2.any():
                continue
            if lo_deg <= _angle_degrees(c1.astype(float), c2.astype(float)) <= hi_deg:
                break
        else:
            raise GenerationError(
                f"no admissible coefficient pair within {MAX_REJECTION_DRAWS} draws"
            )
        scale = 1.0 / bound  # brings U{-10n,10n} integers to roughly [-1, 1]
        objectives = (
            ObjectiveSpec("linear", c=c1 * scale),
            ObjectiveSpec("linear", c=c2 * scale),
        )
    elif config.kind == "FM-AFM":
        rng_j1, rng_j2, rng_g1, rng_g2 = _streams(seed, 4)
        J1 = _symmetric(rng_j1.uniform(*config.fm_range, (n, n)))
        J2 = _symmetric(rng_j2.uniform(*config.afm_range, (n, n)))
        h1 = rng_g1.uniform(-1.0, 1.0, n) - 0.5 * J1.sum(axis=0)
        h2 = rng_g2.uniform(-1.0, 1.0, n) - 0.5 * J2.sum(axis=0)
        objectives = (
            ObjectiveSpec("quadratic", J=J1, h=h1, c0=0.0),
            ObjectiveSpec("quadratic", J=J2, h=h2, c0=0.0),
        )
    else:  # AFM
        rng_j1, rng_v, rng_j2, rng_g2 = _streams(seed, 4)
        J1 = np.diag(rng_j1.uniform(*config.afm_range, n))
        v = rng_v.uniform(0.0, 1.0, n)
        h1 = -2.0 * (v @ J1)
        J2 = _symmetric(rng_j2.uniform(*config.afm_range, (n, n)))
        h2 = rng_g2.uniform(-1.0, 1.0, n) - 0.5 * J2.sum(axis=0)
        objectives = (
            ObjectiveSpec("quadratic", J=J1, h=h1, c0=0.0),
            ObjectiveSpec("quadratic", J=J2, h=h2, c0=0.0),
        )
    return ProblemInstance(n=n, K=2, objectives=objectives, kind=config.kind, seed=seed)


@dataclass(frozen=True, eq=False)
class OracleResult:
    """Exhaustive ground truth: efficient solutions, their image, and its hypervolume."""

    efficient: np.ndarray  # solution indices
    front: np.ndarray      # distinct nondominated image points, lexicographically sorted
    ideal: np.ndarray
    nadir: np.ndarray
    hv: float


def brute_force_pareto(instance: ProblemInstance) -> OracleResult:
    """Enumerate all 2**n solutions and return the exact Pareto front (n <= 24)."""
    if instance.n > MAX_ENUM_BITS:
        raise CapabilityError(f"brute force capped at n={MAX_ENUM_BITS}, got {instance.n}")
    image = objective_image(instance)
    mask = nondominated_mask(image)
    efficient = np.flatnonzero(mask)
    front = np.unique(image[mask], axis=0)
    ctx = reference_context(instance)
    hv = hypervolume(front, ctx.nadir)
    return OracleResult(
        efficient=efficient, front=front, ideal=ctx.ideal, nadir=ctx.nadir, hv=hv
    )


def instance_to_dict(instance: ProblemInstance) -> dict:
    objectives = []
    for spec in instance.objectives:
        if spec.kind == "linear":
            objectives.append({"kind": "linear", "c": spec.c.tolist()})
        else:
            objectives.append({
                "kind": "quadratic",
                "J": spec.J.tolist(),
                "h": spec.h.tolist(),
                "c0": spec.c0,
            })
    return {
        "kind": instance.kind,
        "n": instance.n,
        "K": instance.K,
        "seed": instance.seed,
        "objectives": objectives,
    }


def instance_from_dict(data: dict) -> ProblemInstance:
    objectives = []
    for spec in data["objectives"]:
        if spec["kind"] == "linear":
            objectives.append(ObjectiveSpec("linear", c=np.asarray(spec["c"])))
        else:
            objectives.append(ObjectiveSpec(
                "quadratic",
                J=np.asarray(spec["J"]),
                h=np.asarray(spec["h"]),
                c0=float(spec.get("c0", 0.0)),
            ))
    return ProblemInstance(
        n=int(data["n"]),
        K=int(data["K"]),
        objectives=tuple(objectives),
        kind=data.get("kind", "custom"),
        seed=int(data.get("seed", 0)),
    )


def save_instance(instance: ProblemInstance, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(instance_to_dict(instance), sort_keys=True) + "\n", encoding="utf-8"
    )


def load_instance(path: str | Path) -> ProblemInstance:
    return instance_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
