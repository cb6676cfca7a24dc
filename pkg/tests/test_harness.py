import configparser

import numpy as np
import pytest

from fleetdeg.cycles import ExponentialStress, RationalStress
from fleetdeg.errors import ValidationError
from fleetdeg.harness import (
    AgentSpec,
    compare_policies,
    degradation_from_trajectory,
    emit_histogram_csv,
    load_config,
    parse_config,
    read_trajectory_csv,
    run_experiment,
    write_report_csv,
    write_trajectory_csv,
)
from fleetdeg.harness.config import ExperimentConfig
from fleetdeg.signal import MarkovSignalModel, TraceSignal

BASE = """
[fleet]
capacity = 4, 6
max_charge = 2, 3

[signal]
alphabet = -4, -1, 1, 5

[agent]
kind = elm
d = 8
batch_size = 16
buffer_capacity = 64

[run]
horizon = 400

[seeds]
signal = 1
eval_signal = 2
elm = 3
exploration = 4
naive = 5
"""


def config_from(text, base=None):
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    cp.read_string(text)
    return parse_config(cp, base) if base else parse_config(cp)


@pytest.fixture
def cfg():
    return config_from(BASE)


class TestConfig:
    def test_parses(self, cfg):
        assert cfg.fleet.capacities == (4, 6)
        assert cfg.fleet.units[1].max_discharge == 3
        assert isinstance(cfg.signal, MarkovSignalModel)
        assert cfg.agent == AgentSpec("elm", d=8, batch_size=16, buffer_capacity=64)
        assert cfg.horizon == cfg.training_steps == 400
        assert isinstance(cfg.stress, RationalStress)
        assert len(cfg.bin_edges) == 11

    def test_seeds_mandatory(self):
        with pytest.raises(ValidationError):
            config_from(BASE.split("[seeds]")[0])

    def test_missing_seed_field(self):
        with pytest.raises(ValidationError, match="naive"):
            config_from(BASE.replace("naive = 5\n", ""))

    def test_unknown_agent_option(self):
        with pytest.raises(ValidationError):
            config_from(BASE.replace("d = 8", "depth = 8"))

    def test_unknown_agent_kind(self):
        with pytest.raises(ValidationError):
            config_from(BASE.replace("kind = elm", "kind = ppo"))

    def test_bad_bool(self):
        with pytest.raises(ValidationError):
            config_from(BASE + "\n[reward]\nnormalize_deviation = maybe\n")

    def test_exponential_evaluation(self):
        cfg = config_from(BASE + "\n[evaluation]\nstress = exponential\nbins = 4\n")
        assert isinstance(cfg.stress, ExponentialStress) and len(cfg.bin_edges) == 5

    def test_bin_edges_must_cover(self):
        with pytest.raises(ValidationError):
            config_from(BASE + "\n[evaluation]\nbin_edges = 0.2, 0.6\n")

    def test_trace_replay_and_fit(self, tmp_path):
        (tmp_path / "trace.csv").write_text(
            "timestamp,regd_normalized\n" + "".join(f"{i},{v}\n" for i, v in enumerate([0.1, -0.3, 0.4, 0.1]))
        )
        text = BASE.replace("alphabet = -4, -1, 1, 5", "source = trace\ntrace = trace.csv\nregulation_capacity = 10")
        cfg = config_from(text, tmp_path)
        assert isinstance(cfg.signal, TraceSignal) and cfg.signal.samples == (1, -3, 4, 1)
        cp_text = text.replace("regulation_capacity = 10", "regulation_capacity = 10\nmode = fit")
        fitted = config_from(cp_text, tmp_path)
        assert isinstance(fitted.signal, MarkovSignalModel)
        assert fitted.signal.alphabet.values == (-3, 1, 4)

    def test_missing_trace_file(self, tmp_path):
        text = BASE.replace("alphabet = -4, -1, 1, 5", "source = trace\ntrace = nope.csv")
        with pytest.raises(ValidationError):
            config_from(text, tmp_path)

    def test_load_from_file(self, tmp_path):
        p = tmp_path / "c.ini"
        p.write_text(BASE)
        assert load_config(p).seeds.naive == 5
        with pytest.raises(ValidationError):
            load_config(tmp_path / "missing.ini")

    def test_agent_spec_parse(self):
        spec = AgentSpec.parse("elm:d=10,activation=relu")
        assert spec.kind == "elm" and spec.d == 10 and spec.activation == "relu"
        assert spec.label == "elm10"
        with pytest.raises(ValidationError):
            AgentSpec.parse("elm:d=ten")

    def test_shipped_config_loads(self):
        from pathlib import Path

        cfg = load_config(Path(__file__).parent.parent / "configs" / "toy.ini")
        assert cfg.fleet.capacities == (25, 25) and cfg.normalize_deviation

    def test_shipped_beta_matches_evaluation_stress(self):
        from pathlib import Path

        cfg = load_config(Path(__file__).parent.parent / "configs" / "toy.ini")
        depths = np.linspace(1 / 25, 1.0, 500)
        slope = np.polyfit(depths, np.log([cfg.stress(d) for d in depths]), 1)[0]
        assert abs(slope - cfg.beta) < 0.15


class TestRuns:
    def test_report_fields(self, cfg):
        rep = run_experiment(cfg, AgentSpec("naive"))
        assert rep.steps == 400 and rep.agent == "naive"
        assert len(rep.per_battery_degradation) == 2
        assert rep.soc_trajectory.shape == (401, 2)
        assert all(h.sum() == pytest.approx(w) for h, w in zip(rep.dod_histogram, rep.weighted_cycle_counts))
        assert rep.train_log is None

    def test_learning_agent_trains(self, cfg):
        rep = run_experiment(cfg)
        assert rep.train_log["steps"] == 400 and rep.agent == "elm8"

    def test_multi_episode_training(self):
        cfg = config_from(BASE.replace("[run]", "[run]\nepisodes = 4"))
        rep = run_experiment(cfg)
        assert rep.train_log["episodes"] == 4 and rep.train_log["steps"] == 400

    def test_episode_count_validated(self):
        with pytest.raises(ValidationError):
            config_from(BASE.replace("[run]", "[run]\nepisodes = 0"))

    def test_degradation_recomputed_from_trajectory(self, cfg):
        rep = run_experiment(cfg, AgentSpec("greedy"))
        assert degradation_from_trajectory(rep.soc_trajectory, cfg) == rep.per_battery_degradation

    def test_compare_shares_realization_and_is_order_free(self, cfg):
        specs = [AgentSpec("naive"), AgentSpec("greedy"), AgentSpec("tabular")]
        a = compare_policies(cfg, specs)
        b = compare_policies(cfg, specs[::-1])
        assert len({r.regulation_checksum for r in a}) == 1
        by_name = {r.agent: r for r in b}
        for r in a:
            assert r.accumulated_reward == by_name[r.agent].accumulated_reward

    def test_compare_needs_two(self, cfg):
        with pytest.raises(ValidationError):
            compare_policies(cfg, [AgentSpec("naive")])

    def test_same_realization_flag(self):
        base = config_from(BASE)
        same = config_from(BASE.replace("[run]", "[run]\nsame_realization = true"))
        assert run_experiment(base, AgentSpec("naive")).regulation_checksum != run_experiment(
            same, AgentSpec("naive")).regulation_checksum

    def test_trace_replay_truncates(self, tmp_path):
        (tmp_path / "trace.csv").write_text(
            "timestamp,regd_normalized\n" + "".join(f"{i},{0.1 * (-1) ** i}\n" for i in range(50))
        )
        text = BASE.replace("alphabet = -4, -1, 1, 5", "source = trace\ntrace = trace.csv\nregulation_capacity = 10")
        rep = run_experiment(config_from(text, tmp_path), AgentSpec("greedy"))
        assert rep.steps == 50 and rep.truncated


class TestCsv:
    def test_report_csv_deterministic(self, cfg, tmp_path):
        for name in ("a.csv", "b.csv"):
            reps = compare_policies(cfg, [AgentSpec("naive"), AgentSpec("greedy")])
            write_report_csv(reps, tmp_path / name)
        a, b = (tmp_path / "a.csv").read_bytes(), (tmp_path / "b.csv").read_bytes()
        assert a == b
        header = a.decode().splitlines()[0]
        assert header == "agent,reward,D_1,D_2,cycle_count,cycles_1,cycles_2,clipping_events,steps,truncated,checksum"

    def test_histogram_csv(self, cfg, tmp_path):
        rep = run_experiment(cfg, AgentSpec("naive"))
        emit_histogram_csv(rep, tmp_path / "h.csv")
        lines = (tmp_path / "h.csv").read_text().splitlines()
        assert lines[0] == "battery,bin_lo,bin_hi,count" and len(lines) == 1 + 2 * 10

    def test_trajectory_round_trip(self, cfg, tmp_path):
        rep = run_experiment(cfg, AgentSpec("naive"))
        write_trajectory_csv(rep, tmp_path / "t.csv")
        assert np.array_equal(read_trajectory_csv(tmp_path / "t.csv"), rep.soc_trajectory)
