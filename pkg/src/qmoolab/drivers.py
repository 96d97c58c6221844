"""The three hybrid optimization loops and the set-level dominance layer.

qmoo   minimizes -hypervolume of the decoded candidate set with a scalar
       derivative-free optimizer;
qmooc  minimizes the coverage-weighted blend p * indicator + (1-p) * (-HV);
qmoom  evolves a population of parameter vectors with union-ranked
       elitist selection.

All three return the best candidate set seen anywhere in the trajectory
(the incumbent), not the optimizer's final iterate.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .bench import OracleResult, brute_force_pareto
from .core import ProblemInstance, Solution, evaluate, weakly_dominates
from .indicators import (
    Indicator,
    ReferenceContext,
    coverage_cost,
    hypervolume,
    indicator_value,
    reference_context,
)
from .moea import GAConfig, Individual, evolve
from .optimizers import BudgetTooSmall, ScalarObjective, minimize
from .qsim import AnsatzParams, apply_ansatz, build_phase_tables, top_p_solutions

ALGORITHMS = ("qmoo", "qmooc", "qmoom")
DEFAULT_LAYERS = 5
DEFAULT_BUDGET = 4000
TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class RunConfig:
    """One algorithm execution: everything needed to reproduce it from a seed."""

    algorithm: str = "qmoo"
    layers: int = DEFAULT_LAYERS
    pareto_points: int | None = None  # defaults to n + K
    solver: str = "nelder-mead"
    budget: int = DEFAULT_BUDGET
    indicator: str | None = None
    p: float = 0.0
    ga: GAConfig | None = None
    seed: int = 0

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"algorithm must be one of {ALGORITHMS}")
        if self.layers < 1 or self.budget < 1:
            raise ValueError("layers and budget must be positive")
        if self.pareto_points is not None and self.pareto_points < 1:
            raise ValueError("pareto_points must be positive")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("p must lie in [0, 1]")
        if self.algorithm == "qmooc" and self.indicator is None:
            raise ValueError("qmooc needs an indicator")


@dataclass(eq=False)
class Workspace:
    """Per-instance caches shared by every run: tables, reference box, oracle."""

    instance: ProblemInstance
    tables: np.ndarray
    ref: ReferenceContext
    oracle: OracleResult


def prepare(instance: ProblemInstance) -> Workspace:
    return Workspace(
        instance=instance,
        tables=build_phase_tables(instance),
        ref=reference_context(instance),
        oracle=brute_force_pareto(instance),
    )


@dataclass(eq=False)
class RunRecord:
    """Outcome of one run, with enough echo to key result tables."""

    algorithm: str
    solver: str
    indicator: str | None
    p: float | None
    layers: int
    pareto_points: int
    budget: int
    seed: int
    solutions: np.ndarray
    values: np.ndarray
    hv: float
    oracle_hv: float
    relative_hv: float
    indicators: dict[str, float]
    evaluations: int
    wall_ms: float
    trace: list[float]
    termination: str
    ga: GAConfig | None = None


def decode(ws: Workspace, theta: np.ndarray, P: int,
           layers: int = DEFAULT_LAYERS) -> tuple[np.ndarray, np.ndarray]:
    """Run the ansatz and extract the P most probable solutions and their images."""
    params = AnsatzParams(layers=layers, K=ws.instance.K, theta=theta)
    state = apply_ansatz(ws.tables, params)
    solutions = top_p_solutions(state, P)
    return solutions, ws.tables[:, solutions].T.copy()


def _pareto_points(ws: Workspace, config: RunConfig) -> int:
    return (config.pareto_points if config.pareto_points is not None
            else ws.instance.n + ws.instance.K)


def _record(ws: Workspace, config: RunConfig, P: int, solutions, values,
            evaluations: int, trace: list[float], termination: str,
            started: float) -> RunRecord:
    hv = hypervolume(values, ws.ref.nadir)
    oracle_hv = ws.oracle.hv
    rel = hv / oracle_hv if oracle_hv > 0 else 1.0
    raw = {ind.value: indicator_value(ind, values, ws.ref) for ind in Indicator}
    return RunRecord(
        algorithm=config.algorithm,
        solver=config.solver if config.algorithm != "qmoom" else "nsga2",
        indicator=config.indicator if config.algorithm == "qmooc" else None,
        p=config.p if config.algorithm == "qmooc" else None,
        layers=config.layers,
        pareto_points=P,
        budget=config.budget,
        seed=config.seed,
        solutions=np.asarray(solutions, dtype=np.int64),
        values=np.asarray(values, dtype=float),
        hv=hv,
        oracle_hv=oracle_hv,
        relative_hv=rel,
        indicators=raw,
        evaluations=evaluations,
        wall_ms=(time.perf_counter() - started) * 1e3,
        trace=trace,
        termination=termination,
        ga=config.ga if config.algorithm == "qmoom" else None,
    )


def _initial_theta(config: RunConfig, K: int,
                   rng: np.random.Generator) -> np.ndarray:
    return rng.uniform(0.0, TWO_PI, 2 * K * config.layers)


def _run_scalar(ws: Workspace, config: RunConfig) -> RunRecord:
    started = time.perf_counter()
    P = _pareto_points(ws, config)
    nadir = ws.ref.nadir

    if config.algorithm == "qmooc" and config.p > 0.0:
        indicator = Indicator(config.indicator)

        def cost(theta: np.ndarray) -> float:
            _, values = decode(ws, theta, P, config.layers)
            return coverage_cost(indicator, values, ws.ref, config.p, nadir)
    else:
        def cost(theta: np.ndarray) -> float:
            _, values = decode(ws, theta, P, config.layers)
            return -hypervolume(values, nadir)

    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(config.seed)))
    theta0 = _initial_theta(config, ws.instance.K, rng)
    objective = ScalarObjective(cost, theta0.size)
    try:
        result = minimize(config.solver, objective, theta0, config.budget)
        best_theta = result.theta
        evaluations, reason = result.evaluations, result.reason
    except BudgetTooSmall:
        # below the solver's startup cost: record the starting point alone
        objective.budget = config.budget
        objective(theta0)
        best_theta = theta0
        evaluations, reason = objective.evaluations, "budget"
    solutions, values = decode(ws, best_theta, P, config.layers)
    return _record(ws, config, P, solutions, values, evaluations,
                   objective.trace, reason, started)


def run_qmoo(ws: Workspace, config: RunConfig) -> RunRecord:
    """Scalar hypervolume-cost loop."""
    if config.algorithm != "qmoo":
        raise ValueError("config.algorithm must be 'qmoo'")
    return _run_scalar(ws, config)


def run_qmooc(ws: Workspace, config: RunConfig) -> RunRecord:
    """Coverage-weighted scalar loop; p = 0 reproduces run_qmoo exactly."""
    if config.algorithm != "qmooc":
        raise ValueError("config.algorithm must be 'qmooc'")
    return _run_scalar(ws, config)


def run_qmoom(ws: Workspace, config: RunConfig) -> RunRecord:
    """Union-ranked evolutionary loop; the result is the pooled archive front."""
    if config.algorithm != "qmoom":
        raise ValueError("config.algorithm must be 'qmoom'")
    started = time.perf_counter()
    P = _pareto_points(ws, config)
    ga = config.ga if config.ga is not None else GAConfig(seed=config.seed,
                                                          max_evaluations=config.budget)
    nadir = ws.ref.nadir

    def decoder(theta: np.ndarray) -> Individual:
        solutions, values = decode(ws, theta, P, config.layers)
        return Individual(theta=theta, solutions=solutions, image=values)

    dimension = 2 * ws.instance.K * config.layers
    outcome = evolve(decoder, dimension, ga,
                     front_hv=lambda pts: hypervolume(pts, nadir))
    trace = [-hv for hv in outcome.archive_trace]
    record = _record(ws, config, P, outcome.archive_solutions, outcome.archive_image,
                     outcome.evaluations, trace, outcome.reason, started)
    record.ga = ga
    return record


def run(ws: Workspace, config: RunConfig) -> RunRecord:
    """Dispatch on config.algorithm."""
    if config.algorithm == "qmoo":
        return run_qmoo(ws, config)
    if config.algorithm == "qmooc":
        return run_qmooc(ws, config)
    return run_qmoom(ws, config)


def _solution_images(X, instance: ProblemInstance) -> np.ndarray:
    rows = []
    for x in X:
        idx = x.index if isinstance(x, Solution) else int(x)
        rows.append(evaluate(instance, Solution(idx, instance.n)).values)
    return np.asarray(rows)


def set_dominates(X1, X2, instance: ProblemInstance) -> bool:
    """True iff some bijection pairs every element of X1 under one of X2.

    Decided as perfect-matching existence on the bipartite dominance graph
    via augmenting paths.
    """
    if len(X1) != len(X2):
        raise ValueError("candidate sets must have equal cardinality")
    P = len(X1)
    img1 = _solution_images(X1, instance)
    img2 = _solution_images(X2, instance)
    adj = [[weakly_dominates(img1[i], img2[j]) for j in range(P)] for i in range(P)]
    matched_to = [-1] * P

    def augment(i: int, seen: list[bool]) -> bool:
        for j in range(P):
            if adj[i][j] and not seen[j]:
                seen[j] = True
                if matched_to[j] < 0 or augment(matched_to[j], seen):
                    matched_to[j] = i
                    return True
        return False

    return all(augment(i, [False] * P) for i in range(P))


def vectorize(X, instance: ProblemInstance) -> np.ndarray:
    """Flatten the images of a frequency-ordered candidate set into one vector.

    X must already be ordered most probable first (as produced by decode);
    the output concatenates (f_1 .. f_K) per solution in that order.
    """
    return _solution_images(X, instance).reshape(-1)
