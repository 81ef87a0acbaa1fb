"""Convergence detection on synthetic indicator streams."""

import numpy as np
import pytest

from trumpbench.ocd import (
    Decision,
    OCDParams,
    OCDState,
    RunIndicatorTracker,
    StagnationState,
    ocd_update,
    so_convergence,
)


def feed(params, streams):
    """Run ocd_update over parallel value streams; return the stop generation or None."""
    state = OCDState(params)
    names = params.indicators
    length = len(next(iter(streams.values())))
    for t in range(length):
        decision = ocd_update(state, {n: streams[n][t] for n in names})
        if decision is Decision.CONVERGED:
            return t + 1
    return None


class TestOcdUpdate:
    def test_constant_stream_converges_at_window_plus_one(self):
        params = OCDParams(window=10, indicators=("hv",))
        stop = feed(params, {"hv": [0.5] * 30})
        assert stop == 11

    def test_never_before_window_plus_one(self):
        for window in (3, 5, 10):
            params = OCDParams(window=window, indicators=("hv",))
            stop = feed(params, {"hv": [0.0] * (window + 5)})
            assert stop == window + 1

    def test_linear_trend_never_converges(self):
        params = OCDParams(window=10, indicators=("hv",))
        stop = feed(params, {"hv": list(np.arange(100, dtype=float))})
        assert stop is None

    def test_small_noise_converges_quickly(self):
        rng = np.random.default_rng(8)
        params = OCDParams(window=10, var_limit=1e-4, indicators=("hv",))
        noise = 1.0 + rng.normal(0, np.sqrt(1e-6), size=30)
        stop = feed(params, {"hv": list(noise)})
        assert stop is not None
        assert stop <= 30

    def test_all_indicators_must_agree(self):
        params = OCDParams(window=5, indicators=("hv", "eps"))
        streams = {"hv": [1.0] * 40, "eps": list(np.arange(40, dtype=float))}
        assert feed(params, streams) is None

    def test_forgetting_distant_history_is_irrelevant(self):
        # Two steep, hit-free decays of different length and scale feed into
        # the same settling tail; the stop must come the same number of
        # steps after each prefix ends.
        params = OCDParams(window=6, indicators=("hv",))
        common = list(5000.0 * 0.55 ** np.arange(9)) + [2.0] * 20
        prefix_a = list(400000.0 * 0.55 ** np.arange(8))
        prefix_b = list(2.0e7 * 0.5 ** np.arange(13))
        stop_a = feed(params, {"hv": prefix_a + common})
        stop_b = feed(params, {"hv": prefix_b + common})
        assert stop_a is not None and stop_b is not None
        assert stop_a - len(prefix_a) == stop_b - len(prefix_b)

    def test_decision_reconstructable_from_windows_alone(self):
        # The stop time equals the first index where two consecutive
        # windows each pass one of the two tests.
        from trumpbench.ocd import slope_is_zero, variance_below_limit

        rng = np.random.default_rng(61)
        params = OCDParams(window=5, indicators=("hv",))
        stream = list(np.cumsum(rng.uniform(0.5, 1.5, size=12))[::-1]) + list(
            1.0 + rng.normal(0, 1e-4, size=25)
        )
        hits = {}
        for t in range(params.window - 1, len(stream)):
            w = np.array(stream[t - params.window + 1 : t + 1])
            hits[t] = variance_below_limit(w, params.var_limit, params.alpha) or slope_is_zero(
                w, params.alpha
            )
        expected = next(
            (t + 1 for t in range(params.window, len(stream)) if hits[t] and hits[t - 1]),
            None,
        )
        assert feed(params, {"hv": stream}) == expected

    def test_rejects_missing_indicator(self):
        state = OCDState(OCDParams(indicators=("hv", "eps")))
        with pytest.raises(ValueError):
            ocd_update(state, {"hv": 1.0})

    def test_rejects_non_finite(self):
        state = OCDState(OCDParams(indicators=("hv",)))
        with pytest.raises(ValueError):
            ocd_update(state, {"hv": float("nan")})


class TestParams:
    def test_window_floor(self):
        with pytest.raises(ValueError):
            OCDParams(window=2)

    def test_alpha_range(self):
        with pytest.raises(ValueError):
            OCDParams(alpha=1.0)

    def test_var_limit_positive(self):
        with pytest.raises(ValueError):
            OCDParams(var_limit=0.0)


class TestStagnation:
    def test_constant_series_converge(self):
        state = StagnationState(window=5)
        decisions = [so_convergence(state, (-31.0, -31.0, -30.0)) for _ in range(5)]
        assert decisions[-1] is Decision.CONVERGED
        assert all(d is Decision.CONTINUE for d in decisions[:-1])

    def test_improving_series_continue(self):
        state = StagnationState(window=5)
        for t in range(20):
            decision = so_convergence(state, (-30.0 - 1e-3 * t, -29.0, -28.0))
        assert decision is Decision.CONTINUE

    def test_spread_below_tol_in_every_series_required(self):
        state = StagnationState(window=3)
        so_convergence(state, (0.0, 0.0, 0.0))
        so_convergence(state, (0.0, 0.0, 0.5))
        assert so_convergence(state, (0.0, 0.0, 0.0)) is Decision.CONTINUE


class TestRunIndicatorTracker:
    def test_archive_keeps_nondominated_union(self):
        tracker = RunIndicatorTracker(2)
        tracker.observe(np.array([1.0, 2.0]))
        tracker.observe(np.array([2.0, 1.0]))
        tracker.observe(np.array([3.0, 3.0]))  # dominated, ignored
        assert tracker.archive.shape == (2, 2)

    def test_stable_population_yields_constant_values(self):
        tracker = RunIndicatorTracker(2)
        pts = np.array([[1.0, 2.0], [2.0, 1.0]])
        for p in pts:
            tracker.observe(p)
        first = tracker.generation_values(pts)
        second = tracker.generation_values(pts)
        assert first == second
        assert first["hv"] == pytest.approx(0.0)
        assert first["eps"] == pytest.approx(0.0)
        assert all(np.isfinite(v) for v in first.values())
