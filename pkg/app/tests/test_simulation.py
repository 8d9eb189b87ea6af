import pytest
from pydantic import ValidationError

from ..exceptions import ConfigurationError, ReplayError
from ..models.policy_model import EventKind
from ..models.scenario_model import LinkModel, Phase, Scenario
from ..services.simulation import (
    load_scenario,
    replay,
    simulate,
    target_succeeds,
    tick_log,
    verify_records,
)
from .test_helpers import SCENARIO_DIR


def create_scenario(phases_by_line: list[list[dict]], length: int, seed: int = 0, **kwargs) -> Scenario:
    return Scenario.model_validate(
        {
            "params": {"m": 10, "k": 10, "z": 10},
            "models": [
                {"line": i, "phases": phases}
                for i, phases in enumerate(phases_by_line, start=1)
            ],
            "length": length,
            "seed": seed,
            **kwargs,
        }
    )


class TestScenarioModel:
    def test_phase_at_walks_durations_and_repeats_last(self):
        model = LinkModel(
            line=1,
            phases=[Phase(duration=2, tick=10), Phase(duration=3, tick=0)],
        )
        assert [model.phase_at(j).tick for j in range(1, 9)] == [10, 10, 0, 0, 0, 0, 0, 0]

    def test_phase_needs_exactly_one_kind(self):
        with pytest.raises(ValidationError):
            Phase(duration=1)
        with pytest.raises(ValidationError):
            Phase(duration=1, tick=3, probability=0.5)

    def test_n_follows_the_models(self):
        scenario = create_scenario([[{"duration": 1, "tick": 10}]] * 4, length=1)
        assert scenario.params.n == 4
        assert scenario.line_names == ["line1", "line2", "line3", "line4"]
        assert len(scenario.targets) == 10

    def test_fixed_tick_above_m_is_rejected(self):
        with pytest.raises(ValidationError):
            create_scenario([[{"duration": 1, "tick": 11}]], length=1)

    def test_models_must_cover_every_line(self):
        with pytest.raises(ValidationError):
            Scenario.model_validate(
                {
                    "params": {"m": 10},
                    "models": [{"line": 2, "phases": [{"duration": 1, "tick": 1}]}],
                    "length": 1,
                }
            )

    def test_load_scenario_errors(self, tmp_path):
        with pytest.raises(ConfigurationError):
            load_scenario(tmp_path / "missing.json")

        broken = tmp_path / "broken.json"
        broken.write_text('{"params": {"m": 10}, "models": []}')
        with pytest.raises(ConfigurationError):
            load_scenario(broken)


class TestSyntheticProbes:
    def test_fixed_tick_is_exact(self):
        scenario = create_scenario([[{"duration": 1, "tick": 7}], [{"duration": 1, "tick": 0}]], length=5)
        result = simulate(scenario)
        assert result.ticks == [[7, 0]] * 5

    def test_probability_draw_is_order_independent(self):
        scenario = create_scenario([[{"duration": 1, "probability": 0.5}]], length=1, seed=99)
        draws = [target_succeeds(scenario, 3, 1, t) for t in range(1, 11)]
        assert [target_succeeds(scenario, 3, 1, t) for t in reversed(range(1, 11))] == draws[::-1]

    def test_certain_probabilities(self):
        scenario = create_scenario(
            [[{"duration": 1, "probability": 1.0}], [{"duration": 1, "probability": 0.0}]],
            length=20,
            seed=5,
        )
        assert simulate(scenario).ticks == [[10, 0]] * 20

    def test_outcomes_are_recorded_on_request(self):
        scenario = create_scenario([[{"duration": 1, "tick": 4}]], length=2)

        assert simulate(scenario).records[0].outcomes is None
        outcomes = simulate(scenario, with_outcomes=True).records[0].outcomes
        assert len(outcomes) == 10
        assert [o.success for o in outcomes] == [True] * 4 + [False] * 6


class TestSimulate:
    def test_saturation_scenario(self):
        result = simulate(load_scenario(SCENARIO_DIR / "saturation.json"))

        assert len(result.snapshots) == 30
        for snapshot, table in zip(result.snapshots, result.tables):
            assert snapshot.stabilities == (1.0, 1.0, 1.0)
            assert snapshot.pipe_stability == 1.0
            assert table.weights == (4, 4, 4)
        assert [e.kind for e in result.events] == [EventKind.admission_granted]

    def test_dead_line_stays_out_of_service(self):
        scenario = create_scenario(
            [[{"duration": 1, "tick": 10}], [{"duration": 1, "tick": 0}]], length=15
        )
        result = simulate(scenario)

        for snapshot, table in zip(result.snapshots, result.tables):
            assert snapshot.line(2).stability == 0.0
            assert table.line(2).rw == 0
            assert table.line(2).in_service is False

    def test_same_seed_same_result(self):
        scenario = load_scenario(SCENARIO_DIR / "failover.json")
        assert simulate(scenario).records == simulate(scenario).records

    def test_different_seed_different_ticks(self):
        scenario = load_scenario(SCENARIO_DIR / "failover.json")
        reseeded = scenario.model_copy(update={"seed": scenario.seed + 1})
        assert simulate(scenario).ticks[75:] != simulate(reseeded).ticks[75:]

    def test_timestamps_follow_the_interval(self):
        scenario = create_scenario([[{"duration": 1, "tick": 10}]], length=3)
        result = simulate(scenario)

        assert result.header.created_at == scenario.start_time
        deltas = [(r.timestamp - scenario.start_time).total_seconds() for r in result.records]
        assert deltas == [60.0, 120.0, 180.0]

    def test_line_envelope(self):
        result = simulate(load_scenario(SCENARIO_DIR / "line_envelope.json"))
        s1 = [s.line(1).stability for s in result.snapshots]

        assert len(s1) == 500
        assert sum(v >= 0.95 for v in s1) / len(s1) == pytest.approx(0.92)
        for snapshot in result.snapshots:
            assert snapshot.pipe_stability <= snapshot.line(1).stability
            if 101 <= snapshot.iteration <= 160 or 301 <= snapshot.iteration <= 360:
                assert snapshot.line(2).stability <= 0.63
                assert snapshot.line(3).stability <= 0.63

        # 🧪 Check the steady line leads on average
        mean_s1, mean_s2, mean_s3 = (
            sum(s.line(line).stability for s in result.snapshots) / 500 for line in (1, 2, 3)
        )
        assert mean_s1 > mean_s2
        assert mean_s1 > mean_s3

    def test_single_line_change_lowers_every_line(self):
        result = simulate(load_scenario(SCENARIO_DIR / "single_line_change.json"))
        changes = {11, 31}

        assert [r.ticks[1] for r in result.records[9:12]] == [10, 6, 6]
        for snapshot in result.snapshots:
            j = snapshot.iteration
            in_window = sum(1 for r in changes if j - 10 < r <= j)
            assert snapshot.consistency == 10 - in_window
            # lines 1 and 3 never move, yet share the lowered C
            assert snapshot.line(1).stability == snapshot.consistency / 10
            assert snapshot.line(3).stability == snapshot.line(1).stability
            if 11 <= j <= 40:
                assert snapshot.line(2).stability < snapshot.line(1).stability
            else:
                assert snapshot.line(2).stability == snapshot.line(1).stability

        assert [s.consistency for s in result.snapshots[10:20]] == [9] * 10
        assert result.snapshots[10].line(2).stability == 0.54

    def test_shared_consistency(self):
        result = simulate(load_scenario(SCENARIO_DIR / "line_envelope.json"))
        changes = {101, 151, 301, 351}

        for snapshot in result.snapshots:
            j = snapshot.iteration
            in_window = sum(1 for r in changes if j - 10 < r <= j)
            assert snapshot.consistency == 10 - in_window
            # line 1 never moves, so only C can lower its S
            assert snapshot.line(1).stability == snapshot.consistency / 10

    def test_failover_and_restore(self):
        result = simulate(load_scenario(SCENARIO_DIR / "failover.json"))
        early = [e for e in result.events if e.iteration <= 75 and e.line == 2]

        assert result.header.bandwidth_factors == [9, 2]
        assert [(e.kind, e.iteration) for e in early if e.kind != EventKind.tier_changed] == [
            (EventKind.line_removed, 21),
            (EventKind.line_restored, 46),
        ]
        assert result.snapshots[45].line(2).stability == 1.0
        assert result.tables[45].line(2).rw == 2
        for table in result.tables[20:45]:
            assert table.line(2).rw == 0
            assert table.line(1).rw >= 1


class TestReplay:
    def test_replay_reproduces_snapshots(self):
        result = simulate(load_scenario(SCENARIO_DIR / "failover.json"))
        params = result.header.params
        assert replay(tick_log(result.records), params) == result.snapshots

    def test_empty_log_replays_to_nothing(self):
        params = load_scenario(SCENARIO_DIR / "saturation.json").params
        assert replay([], params) == []

    def test_gap_raises(self):
        params = load_scenario(SCENARIO_DIR / "saturation.json").params
        with pytest.raises(ReplayError) as exc_info:
            replay([(1, [10, 10, 10]), (3, [10, 10, 10])], params)
        assert exc_info.value.iteration == 2

    def test_bad_tick_raises(self):
        params = load_scenario(SCENARIO_DIR / "saturation.json").params
        with pytest.raises(ReplayError) as exc_info:
            replay([(1, [10, 10, 10]), (2, [10, 12, 10])], params)
        assert exc_info.value.iteration == 2

    def test_untampered_records_verify(self):
        result = simulate(load_scenario(SCENARIO_DIR / "failover.json"))
        assert verify_records(result.header, result.records) is None

    def test_tampered_stability_is_found(self):
        result = simulate(load_scenario(SCENARIO_DIR / "saturation.json"))
        records = list(result.records)
        target = records[4]
        lines = [target.lines[0].model_copy(update={"stability": 0.5}), *target.lines[1:]]
        records[4] = target.model_copy(update={"lines": lines})

        mismatch = verify_records(result.header, records)
        assert mismatch.iteration == 5
        assert mismatch.field == "S[1]"
        assert mismatch.logged == 0.5
        assert mismatch.recomputed == 1.0

    def test_tampered_weight_is_found(self):
        result = simulate(load_scenario(SCENARIO_DIR / "saturation.json"))
        records = list(result.records)
        target = records[9]
        lines = [*target.lines[:2], target.lines[2].model_copy(update={"rw": 1})]
        records[9] = target.model_copy(update={"lines": lines})

        mismatch = verify_records(result.header, records)
        assert (mismatch.iteration, mismatch.field) == (10, "Rw[3]")

    def test_wrong_line_count_raises(self):
        result = simulate(load_scenario(SCENARIO_DIR / "saturation.json"))
        records = list(result.records)
        records[2] = records[2].model_copy(update={"lines": records[2].lines[:2]})

        with pytest.raises(ReplayError):
            verify_records(result.header, records)
