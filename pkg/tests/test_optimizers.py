import numpy as np
import pytest

from qmoolab.optimizers import (
    INITIAL_SIMPLEX_STEP,
    OptimizerResult,
    ScalarObjective,
    available_optimizers,
    minimize,
    nelder_mead,
    powell,
    register_optimizer,
)


def sphere(theta):
    return float(np.sum(theta ** 2))


class TestScalarObjective:
    def test_counts_every_evaluation(self):
        obj = ScalarObjective(sphere, 2)
        for _ in range(5):
            obj(np.zeros(2))
        assert obj.evaluations == 5

    def test_tracks_incumbent(self):
        obj = ScalarObjective(sphere, 1)
        obj(np.array([3.0]))
        obj(np.array([1.0]))
        obj(np.array([2.0]))
        assert obj.best_cost == 1.0
        assert obj.best_theta.tolist() == [1.0]
        assert obj.trace == [9.0, 1.0, 4.0]

    def test_non_finite_becomes_inf(self):
        obj = ScalarObjective(lambda t: np.nan, 1)
        assert obj(np.zeros(1)) == np.inf
        obj2 = ScalarObjective(lambda t: -np.inf, 1)
        assert obj2(np.zeros(1)) == np.inf


class TestNelderMead:
    def test_1d_quadratic(self):
        obj = ScalarObjective(lambda t: (t[0] - 1.0) ** 2, 1)
        result = nelder_mead(obj, np.zeros(1), budget=200)
        assert abs(result.theta[0] - 1.0) < 1e-4
        assert result.evaluations <= 200

    def test_4d_sphere(self):
        rng = np.random.default_rng(0)
        obj = ScalarObjective(sphere, 4)
        result = nelder_mead(obj, rng.uniform(-1, 1, 4), budget=2000)
        assert result.cost < 1e-6

    def test_budget_equals_initial_simplex(self):
        obj = ScalarObjective(sphere, 3)
        result = nelder_mead(obj, np.full(3, 2.0), budget=4)
        assert result.evaluations == 4
        assert result.reason == "budget"
        # incumbent is the best vertex of the initial simplex
        start = np.full(3, 2.0)
        vertices = [start] + [start + INITIAL_SIMPLEX_STEP * np.eye(3)[i] for i in range(3)]
        assert result.cost == min(sphere(v) for v in vertices)

    def test_budget_too_small_rejected(self):
        obj = ScalarObjective(sphere, 3)
        with pytest.raises(ValueError):
            nelder_mead(obj, np.zeros(3), budget=3)

    def test_budget_never_exceeded(self):
        for budget in (5, 17, 60):
            obj = ScalarObjective(sphere, 4)
            result = nelder_mead(obj, np.full(4, 1.0), budget=budget)
            assert obj.evaluations <= budget
            assert result.evaluations == obj.evaluations

    def test_monotone_incumbent(self):
        obj = ScalarObjective(sphere, 3)
        nelder_mead(obj, np.full(3, 1.5), budget=300)
        incumbents = np.minimum.accumulate(obj.trace)
        assert np.all(np.diff(incumbents) <= 0)

    def test_deterministic(self):
        results = []
        for _ in range(2):
            obj = ScalarObjective(sphere, 3)
            results.append(nelder_mead(obj, np.full(3, 1.0), budget=120))
        assert np.array_equal(results[0].theta, results[1].theta)
        assert results[0].cost == results[1].cost
        assert results[0].evaluations == results[1].evaluations

    def test_best_cost_is_min_of_trace(self):
        obj = ScalarObjective(lambda t: np.sin(3 * t[0]) + t[0] ** 2, 1)
        result = nelder_mead(obj, np.array([2.0]), budget=150)
        assert result.cost == min(obj.trace)


class TestPowell:
    def test_quadratic_bowl(self):
        center = np.array([0.3, -1.2, 0.7])
        obj = ScalarObjective(lambda t: float(np.sum((t - center) ** 2)), 3)
        result = powell(obj, np.zeros(3), budget=2000)
        assert result.cost < 1e-8

    def test_rosenbrock(self):
        def rosen(t):
            return float(100.0 * (t[1] - t[0] ** 2) ** 2 + (1.0 - t[0]) ** 2)
        obj = ScalarObjective(rosen, 2)
        result = powell(obj, np.array([-1.2, 1.0]), budget=2000)
        assert result.cost < 1e-3  # optimum sits at (1, 1)

    def test_minimal_budget_returns_start(self):
        # starting at the optimum: every probe is worse, incumbent stays put
        obj = ScalarObjective(sphere, 2)
        result = powell(obj, np.zeros(2), budget=4)
        assert result.reason == "budget"
        assert result.theta.tolist() == [0.0, 0.0]
        assert obj.evaluations <= 4

    def test_budget_too_small_rejected(self):
        obj = ScalarObjective(sphere, 3)
        with pytest.raises(ValueError):
            powell(obj, np.zeros(3), budget=5)

    def test_budget_never_exceeded(self):
        for budget in (8, 33, 120):
            obj = ScalarObjective(sphere, 4)
            result = powell(obj, np.full(4, 1.0), budget=budget)
            assert obj.evaluations <= budget
            assert result.evaluations == obj.evaluations

    def test_deterministic(self):
        results = []
        for _ in range(2):
            obj = ScalarObjective(sphere, 3)
            results.append(powell(obj, np.full(3, 1.0), budget=400))
        assert np.array_equal(results[0].theta, results[1].theta)
        assert results[0].evaluations == results[1].evaluations


class TestDispatch:
    def test_dispatch_matches_direct_call(self):
        direct = nelder_mead(ScalarObjective(sphere, 2), np.full(2, 1.0), budget=100)
        routed = minimize("nelder-mead", ScalarObjective(sphere, 2),
                          np.full(2, 1.0), budget=100)
        assert np.array_equal(direct.theta, routed.theta)
        assert direct.cost == routed.cost
        assert direct.evaluations == routed.evaluations

    def test_unknown_name(self):
        with pytest.raises(ValueError):
            minimize("bfgs", ScalarObjective(sphere, 2), np.zeros(2), budget=10)

    def test_plugin_registry(self):
        def fake(obj, theta0, budget, **kw):
            value = obj(theta0)
            return OptimizerResult(theta=np.asarray(theta0, float), cost=value,
                                   evaluations=obj.evaluations, reason="tolerance")
        register_optimizer("cobyla", fake)
        try:
            assert "cobyla" in available_optimizers()
            result = minimize("cobyla", ScalarObjective(sphere, 2),
                              np.array([1.0, 1.0]), budget=10)
            assert result.cost == 2.0
        finally:
            from qmoolab.optimizers import _REGISTRY
            _REGISTRY.pop("cobyla", None)
