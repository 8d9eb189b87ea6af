import random

import pytest

from ..exceptions import ConfigurationError, InputDomainError
from ..models.stability_model import StabilityParams
from ..services.stability import (
    RecordedTicks,
    TickHistory,
    consistency_value,
    historical_status,
    iteration_consistence,
    line_stability,
    line_status,
    oracle_recompute,
    pipe_stability,
    step,
)
from .test_helpers import create_mock_params


def recorded(ticks: list[list[int]], n: int = 1, m: int = 2, k: int = 2, z: int = 2):
    params = StabilityParams(n=n, m=m, k=k, z=z)
    return RecordedTicks(ticks, params), params


def run_steps(ticks: list[list[int]], params: StabilityParams):
    history = TickHistory(params)
    return [step(history, vector, params) for vector in ticks]


class TestLineStatus:
    def test_zero_tick_is_down(self):
        assert line_status(0, 10) == 0

    def test_positive_tick_is_up(self):
        assert line_status(5, 10) == 1
        assert line_status(10, 10) == 1

    @pytest.mark.parametrize("tick", [-1, 11])
    def test_out_of_range_tick_raises(self, tick):
        with pytest.raises(InputDomainError):
            line_status(tick, 10)


class TestHistoricalStatus:
    def test_min_over_window_including_current_tick(self):
        # newest first: 2, 1, 2
        ticks, _ = recorded([[2], [1], [2]])
        assert historical_status(ticks, 1, 3, 2) == 1

    def test_constant_history_is_m(self):
        ticks, _ = recorded([[10]] * 12, m=10)
        for k in (1, 5, 10):
            assert historical_status(ticks, 1, 12, k) == 10

    def test_pre_history_counts_as_m(self):
        ticks, _ = recorded([[1]])
        assert historical_status(ticks, 1, 1, 2) == 1

    def test_pre_history_does_not_lower_min(self):
        ticks, _ = recorded([[2]], m=2)
        assert historical_status(ticks, 1, 1, 5) == 2


class TestIterationConsistence:
    def test_no_change_on_any_line(self):
        ticks, _ = recorded([[10, 7], [10, 7]], n=2, m=10)
        assert iteration_consistence(ticks, 2) == 1

    def test_one_line_changed(self):
        ticks, _ = recorded([[10, 8], [10, 7]], n=2, m=10)
        assert iteration_consistence(ticks, 2) == 0

    def test_first_iteration_against_pre_history(self):
        ticks, _ = recorded([[10, 10, 10]], n=3, m=10)
        assert iteration_consistence(ticks, 1) == 1


class TestConsistencyValue:
    def test_constant_lines_give_z(self):
        ticks, _ = recorded([[4, 4]] * 20, n=2, m=4, z=7)
        assert consistency_value(ticks, 20, 7) == 7

    def test_two_changes_in_window(self):
        ticks, _ = recorded([[2], [1], [2]])
        assert consistency_value(ticks, 3, 2) == 0

    def test_window_reaches_pre_history(self):
        ticks, _ = recorded([[2], [1]])
        assert consistency_value(ticks, 2, 2) == 1

    def test_window_has_exactly_z_terms(self):
        # a change at iteration 1 is outside the window of iteration 3 for z=2
        ticks, _ = recorded([[1], [1], [1]])
        assert consistency_value(ticks, 3, 2) == 2

    def test_iteration_zero_raises(self):
        ticks, _ = recorded([[2]])
        with pytest.raises(InputDomainError):
            consistency_value(ticks, 0, 2)


class TestLineAndPipeStability:
    def test_saturated_line_is_exactly_one(self):
        ticks, params = recorded([[10]] * 15, m=10, k=10, z=10)
        assert line_stability(ticks, 1, 15, params) == 1.0
        assert pipe_stability(ticks, 15, params) == 1.0

    def test_dead_line_is_zero(self):
        ticks, params = recorded([[10], [0]], m=10)
        assert line_stability(ticks, 1, 2, params) == 0.0

    def test_all_lines_dead_pipe_is_zero(self):
        ticks, params = recorded([[0, 0, 0]], n=3, m=10)
        assert pipe_stability(ticks, 1, params) == 0.0

    def test_hand_computed_second_iteration(self):
        # S = (1/8) * 1 * 2 * 1 * 1 and IS = (1/4) * 1 * 1 * 1
        ticks, params = recorded([[2], [1]])
        assert line_stability(ticks, 1, 2, params) == 0.25
        assert pipe_stability(ticks, 2, params) == 0.25


class TestStep:
    def test_saturation_from_first_iteration(self):
        params = create_mock_params(n=3, m=10, k=10, z=10)
        snapshots = run_steps([[10, 10, 10]] * 25, params)

        assert len(snapshots) == 25
        for snapshot in snapshots:
            assert snapshot.stabilities == (1.0, 1.0, 1.0)
            assert snapshot.pipe_stability == 1.0
            assert snapshot.consistency == 10

    def test_hand_computed_trace(self):
        params = StabilityParams(n=1, m=2, k=2, z=2)
        snapshots = run_steps([[2], [1], [2]], params)

        assert [s.line(1).stability for s in snapshots] == [1.0, 0.25, 0.0]
        assert [s.pipe_stability for s in snapshots] == [1.0, 0.25, 0.0]
        assert [s.line(1).historical for s in snapshots] == [2, 1, 1]
        assert [s.consistency for s in snapshots] == [2, 1, 0]

    def test_dead_line_masks_stability(self):
        params = create_mock_params(n=2, m=10)
        snapshot = run_steps([[10, 10], [10, 0]], params)[-1]

        assert snapshot.line(2).status == 0
        assert snapshot.line(2).stability == 0.0
        assert snapshot.line(1).stability > 0.0

    def test_iteration_numbers_advance(self):
        params = create_mock_params(n=1)
        snapshots = run_steps([[10], [9], [8]], params)
        assert [s.iteration for s in snapshots] == [1, 2, 3]

    @pytest.mark.parametrize("vector", [[10, 10], [10, 10, 10, 10], [10, 11, 10], [10, -1, 10]])
    def test_bad_vector_leaves_history_untouched(self, vector):
        params = create_mock_params(n=3)
        history = TickHistory(params)
        step(history, [10, 9, 8], params)

        with pytest.raises(InputDomainError):
            step(history, vector, params)

        assert history.iteration == 1
        assert history.window(2, 2) == [9, 10]
        assert history.consistency == 9

    def test_foreign_params_are_rejected(self):
        history = TickHistory(create_mock_params(n=1, k=10))
        with pytest.raises(ConfigurationError):
            step(history, [10], create_mock_params(n=1, k=3))

    def test_evicted_iterations_are_not_addressable(self):
        params = create_mock_params(n=1, k=3, z=2)
        history = TickHistory.from_ticks([[10]] * 20, params)

        assert history.tick(1, 20 - params.retention + 1) == 10
        with pytest.raises(InputDomainError):
            history.tick(1, 20 - params.retention)

    def test_from_ticks_matches_stepping(self):
        params = create_mock_params(n=2, m=5, k=3, z=4)
        ticks = [[5, 5], [4, 5], [4, 5], [0, 2], [5, 2]]
        history = TickHistory.from_ticks(ticks, params)
        stepped = TickHistory(params)
        for vector in ticks:
            step(stepped, vector, params)

        assert history.iteration == stepped.iteration == 5
        assert history.consistency == stepped.consistency
        assert history.window(1, params.retention) == stepped.window(1, params.retention)


def random_history(rng: random.Random):
    n = rng.randint(1, 4)
    m = rng.randint(1, 10)
    params = StabilityParams(n=n, m=m, k=rng.randint(1, 10), z=rng.randint(1, 10))
    length = rng.randint(1, 50)
    ticks = []
    vector = [m] * n
    for _ in range(length):
        # hold the vector often enough for C to take every value
        if rng.random() < 0.6:
            vector = list(vector)
            for i in range(n):
                if rng.random() < 0.5:
                    vector[i] = rng.randint(0, m)
        ticks.append(vector)
    return params, ticks


class TestOracleEquivalence:
    def test_randomized_histories(self):
        rng = random.Random(20111)
        for _ in range(1000):
            params, ticks = random_history(rng)
            for j, snapshot in enumerate(run_steps(ticks, params), start=1):
                assert snapshot == oracle_recompute(ticks, j, params), (params, ticks, j)

    def test_single_iteration_uses_pre_history(self):
        params = StabilityParams(n=2, m=4, k=3, z=3)
        snapshot = oracle_recompute([[4, 2]], 1, params)

        # R_1 = 0 because line 2 moved away from the virtual tick 4
        assert snapshot.consistency == 2
        assert snapshot.line(1).historical == 4
        assert snapshot.line(2).historical == 2
        assert snapshot == run_steps([[4, 2]], params)[0]

    def test_line_dies_and_revives(self):
        params = StabilityParams(n=1, m=10, k=2, z=4)
        ticks = [[10], [10], [0], [10], [10], [10], [10], [10]]
        snapshots = [oracle_recompute(ticks, j, params) for j in range(1, len(ticks) + 1)]
        values = [s.line(1).stability for s in snapshots]

        assert values[:2] == [1.0, 1.0]
        # T[j-1] = 0 at iteration 4 and H covers the dead tick through iteration 5
        assert values[2:5] == [0.0, 0.0, 0.0]
        # the changes at iterations 3 and 4 leave the C window one by one
        assert values[5:] == [0.5, 0.75, 1.0]
        assert snapshots == run_steps(ticks, params)

    def test_iteration_outside_record_raises(self):
        params = StabilityParams(n=1, m=2, k=2, z=2)
        with pytest.raises(InputDomainError):
            oracle_recompute([[2]], 2, params)


class TestProperties:
    def test_ranges_and_bounds(self):
        rng = random.Random(7)
        for _ in range(200):
            params, ticks = random_history(rng)
            for j, snapshot in enumerate(run_steps(ticks, params), start=1):
                assert 0 <= snapshot.consistency <= params.z
                assert 0.0 <= snapshot.pipe_stability <= 1.0
                for state in snapshot.lines:
                    assert 0.0 <= state.stability <= 1.0
                    assert 0 <= state.historical <= params.m
                    assert state.historical <= state.tick
                    previous = ticks[j - 2][state.line - 1] if j > 1 else params.m
                    assert state.historical <= previous
                    if state.tick == 0:
                        assert state.stability == 0.0

    def test_consistency_counts_change_iterations(self):
        rng = random.Random(11)
        for _ in range(100):
            params, ticks = random_history(rng)
            padded = [[params.m] * params.n] + ticks
            changed = [padded[r] != padded[r - 1] for r in range(1, len(padded))]
            for j, snapshot in enumerate(run_steps(ticks, params), start=1):
                window = changed[max(0, j - params.z) : j]
                assert snapshot.consistency == params.z - sum(window)

    def test_saturation_after_disturbance(self):
        params = StabilityParams(n=2, m=10, k=4, z=6)
        ticks = [[3, 10], [0, 7]] + [[10, 10]] * (max(params.k, params.z) + 1)
        last = run_steps(ticks, params)[-1]

        assert last.stabilities == (1.0, 1.0)
        assert last.pipe_stability == 1.0
