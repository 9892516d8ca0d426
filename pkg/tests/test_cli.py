"""End-to-end command surface tests."""

import json
import math
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner

from uavcov.cli import main
from uavcov.mdn import MdnWeights, save_mdn_weights
from uavcov.mobility import URLLC
from uavcov.scenario import (
    AreaConfig,
    EpisodeConfig,
    ScenarioConfig,
    UavFleet,
    UserPopulation,
    load_config,
    save_config,
)
from uavcov.scenarios import make_wall_scenario


@pytest.fixture
def runner():
    return CliRunner()


def write_cfg(path: Path, cfg: ScenarioConfig) -> str:
    save_config(cfg, path)
    return str(path)


def small_sim_cfg() -> ScenarioConfig:
    return ScenarioConfig(
        seed=7,
        area=AreaConfig(side_m=600.0, obstacles=((250.0, 250.0, 310.0, 310.0, 45.0),)),
        users=UserPopulation(n_urllc=4, n_embb=6, v_max_mps=10.0),
        uavs=UavFleet(count=2),
        episode=EpisodeConfig(n_steps=4, policy="greedy_coverage"),
    )


def wall_cfg(p_f: float) -> ScenarioConfig:
    scn = make_wall_scenario(p_f)
    ob = scn.env.obstacles[0]
    return ScenarioConfig(
        seed=3,
        area=AreaConfig(side_m=scn.env.side,
                        obstacles=((ob.x_min, ob.y_min, ob.x_max, ob.y_max, ob.height),)),
        users=UserPopulation(placements=((*scn.user.position, *scn.user.velocity, URLLC),),
                             v_max_mps=scn.user.v_max),
        uavs=UavFleet(count=1, placements=(scn.uav_pos,)),
    )


class TestSimulate:
    def test_missing_config_errors(self, runner):
        res = runner.invoke(main, ["simulate", "--config", "no-such-file.yaml"])
        assert res.exit_code != 0
        assert "not found" in res.output

    def test_outputs_and_summary_schema(self, runner, tmp_path):
        cfg_path = write_cfg(tmp_path / "cfg.yaml", small_sim_cfg())
        out = tmp_path / "out"
        res = runner.invoke(main, ["simulate", "--config", cfg_path, "--out", str(out)])
        assert res.exit_code == 0, res.output
        assert (out / "episode.csv").exists()
        assert (out / "verification.jsonl").exists()
        for fig in ("rewards.png", "metrics.png", "world.png"):
            assert (out / fig).exists()
        summary = json.loads(res.output)
        assert set(summary["reward_components"]) == {"phi_thr", "phi_cov", "phi_bal",
                                                     "phi_energy", "phi_coll"}
        assert set(summary["metrics"]) == {"sum_throughput_mbps", "urllc_coverage_rate",
                                           "embb_coverage_rate", "energy_kj", "jain_index"}
        header = (out / "episode.csv").read_text().splitlines()[0]
        assert header.split(",")[:7] == ["t", "phi_thr", "phi_cov", "phi_bal",
                                         "phi_energy", "phi_coll", "reward_total"]

    def test_byte_identical_across_runs(self, runner, tmp_path):
        cfg_path = write_cfg(tmp_path / "cfg.yaml", small_sim_cfg())
        outs = []
        for name in ("a", "b"):
            out = tmp_path / name
            res = runner.invoke(main, ["simulate", "--config", cfg_path, "--out", str(out)])
            assert res.exit_code == 0, res.output
            outs.append(out)
        for fname in ("episode.csv", "verification.jsonl", "rewards.png",
                      "metrics.png", "world.png"):
            assert (outs[0] / fname).read_bytes() == (outs[1] / fname).read_bytes(), fname

    def test_seed_override_changes_results(self, runner, tmp_path):
        cfg_path = write_cfg(tmp_path / "cfg.yaml", small_sim_cfg())
        out1, out2 = tmp_path / "s1", tmp_path / "s2"
        runner.invoke(main, ["simulate", "--config", cfg_path, "--out", str(out1),
                             "--no-plots"])
        runner.invoke(main, ["simulate", "--config", cfg_path, "--out", str(out2),
                             "--no-plots", "--seed", "99"])
        assert (out1 / "episode.csv").read_text() != (out2 / "episode.csv").read_text()

    def test_timings_flag_adds_elapsed(self, runner, tmp_path):
        cfg_path = write_cfg(tmp_path / "cfg.yaml", small_sim_cfg())
        out = tmp_path / "t"
        res = runner.invoke(main, ["simulate", "--config", cfg_path, "--out", str(out),
                                   "--no-plots", "--timings"])
        assert res.exit_code == 0
        lines = (out / "verification.jsonl").read_text().splitlines()
        assert lines and all("elapsed_us" in json.loads(l) for l in lines)

    def test_records_schema(self, runner, tmp_path):
        cfg_path = write_cfg(tmp_path / "cfg.yaml", small_sim_cfg())
        out = tmp_path / "r"
        runner.invoke(main, ["simulate", "--config", cfg_path, "--out", str(out), "--no-plots"])
        recs = [json.loads(l) for l in (out / "verification.jsonl").read_text().splitlines()]
        assert recs
        for rec in recs:
            assert set(rec) == {"step", "user_id", "uav_id", "p_hat", "var_hat",
                                "n", "max_w", "q_u"}


class TestVerify:
    def test_obstacle_free(self, runner, tmp_path):
        cfg = replace(small_sim_cfg(), area=AreaConfig(side_m=600.0, obstacles=()))
        cfg_path = write_cfg(tmp_path / "cfg.yaml", cfg)
        res = runner.invoke(main, ["verify", "--config", cfg_path])
        assert res.exit_code == 0, res.output
        rec = json.loads(res.output)
        assert rec["p_hat"] == 0.0
        assert rec["q_u"] == 1

    def test_full_shadow_uniform_exact_one(self, runner, tmp_path):
        cfg = ScenarioConfig(
            seed=3,
            area=AreaConfig(side_m=1000.0, obstacles=((150.0, 200.0, 160.0, 600.0, 60.0),)),
            users=UserPopulation(placements=((400.0, 400.0, -5.0, 0.0, URLLC),)),
            uavs=UavFleet(count=1, placements=((50.0, 400.0, 30.0),)),
        )
        cfg_path = write_cfg(tmp_path / "cfg.yaml", cfg)
        res = runner.invoke(main, ["verify", "--config", cfg_path, "--mode", "uniform"])
        rec = json.loads(res.output)
        assert rec["p_hat"] == 1.0
        assert rec["q_u"] == 0

    def test_half_shadow_uniform_within_3se(self, runner, tmp_path):
        cfg_path = write_cfg(tmp_path / "cfg.yaml", wall_cfg(0.5))
        res = runner.invoke(main, ["verify", "--config", cfg_path, "--mode", "uniform",
                                   "--samples", "10000"])
        rec = json.loads(res.output)
        assert abs(rec["p_hat"] - 0.5) <= 3 * math.sqrt(0.25 / 10000)

    def test_deterministic_modulo_timing(self, runner, tmp_path):
        cfg_path = write_cfg(tmp_path / "cfg.yaml", wall_cfg(0.3))
        recs = []
        for _ in range(2):
            res = runner.invoke(main, ["verify", "--config", cfg_path, "--alpha", "0.6"])
            rec = json.loads(res.output)
            rec.pop("elapsed_us")
            recs.append(rec)
        assert recs[0] == recs[1]

    def test_flag_overrides_reflected(self, runner, tmp_path):
        cfg_path = write_cfg(tmp_path / "cfg.yaml", wall_cfg(0.3))
        res = runner.invoke(main, ["verify", "--config", cfg_path,
                                   "--alpha", "0.25", "--samples", "64"])
        rec = json.loads(res.output)
        assert rec["alpha"] == 0.25
        assert rec["n"] == 64


class TestBench:
    def test_grid_rows_and_csv(self, runner, tmp_path):
        cfg_path = write_cfg(tmp_path / "cfg.yaml", small_sim_cfg())
        out = tmp_path / "bench"
        res = runner.invoke(main, ["bench", "--config", cfg_path, "--out", str(out),
                                   "--replicates", "20", "--no-plots"])
        assert res.exit_code == 0, res.output
        lines = (out / "bench.csv").read_text().splitlines()
        assert len(lines) == 6  # header + 4 grid cells + diagnostic row
        labels = [l.split(",")[0] for l in lines[1:]]
        assert labels == ["pis_a0.6_n100", "pis_a0.9_n100_mismatch", "pis_a0.3_n100",
                          "uniform_n1000", "uniform_n100"]


class TestExportTrajectories:
    def test_row_count_and_speed_bound(self, runner, tmp_path):
        cfg_path = write_cfg(tmp_path / "cfg.yaml", small_sim_cfg())
        out = tmp_path / "traj.jsonl"
        res = runner.invoke(main, ["export-trajectories", "--config", cfg_path,
                                   "--users", "5", "--steps", "20", "--out", str(out)])
        assert res.exit_code == 0, res.output
        rows = [json.loads(l) for l in out.read_text().splitlines()]
        assert len(rows) == 100
        v_max = small_sim_cfg().users.v_max_mps
        for r in rows:
            assert math.hypot(r["vx"], r["vy"]) <= v_max + 1e-9
            assert set(r) == {"user_id", "t", "vx", "vy", "x", "y"}

    def test_warns_when_too_short_for_windows(self, runner, tmp_path):
        cfg_path = write_cfg(tmp_path / "cfg.yaml", small_sim_cfg())
        out = tmp_path / "traj.jsonl"
        res = runner.invoke(main, ["export-trajectories", "--config", cfg_path,
                                   "--users", "2", "--steps", "5", "--out", str(out)])
        assert res.exit_code == 0
        assert "no training windows" in res.output

    def test_deterministic(self, runner, tmp_path):
        cfg_path = write_cfg(tmp_path / "cfg.yaml", small_sim_cfg())
        outs = []
        for name in ("x.jsonl", "y.jsonl"):
            out = tmp_path / name
            runner.invoke(main, ["export-trajectories", "--config", cfg_path,
                                 "--users", "3", "--steps", "12", "--out", str(out)])
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]


class TestEvalProposal:
    def test_zero_weights_uniform_mixture(self, runner, tmp_path):
        wpath = tmp_path / "zero.pismdn"
        save_mdn_weights(MdnWeights.zeros(history_len=4, k=3, hidden=8), wpath)
        hpath = tmp_path / "hist.json"
        hpath.write_text(json.dumps({"history": [[1.0, 0.0]] * 4, "anchor": [5.0, 6.0]}))
        res = runner.invoke(main, ["eval-proposal", "--weights", str(wpath),
                                   "--history", str(hpath)])
        assert res.exit_code == 0, res.output
        gmm = json.loads(res.output)
        assert gmm["weights"] == pytest.approx([1 / 3] * 3)
        assert gmm["means"] == [[5.0, 6.0]] * 3
        assert gmm["sigmas"] == [[1.0, 1.0]] * 3

    def test_bad_weight_file_errors(self, runner, tmp_path):
        wpath = tmp_path / "junk.pismdn"
        wpath.write_bytes(b"garbage")
        hpath = tmp_path / "hist.json"
        hpath.write_text(json.dumps({"history": [[0, 0]] * 4}))
        res = runner.invoke(main, ["eval-proposal", "--weights", str(wpath),
                                   "--history", str(hpath)])
        assert res.exit_code != 0


class TestConfigRoundTrip:
    def test_parse_serialize_parse_identity(self, tmp_path):
        cfg = small_sim_cfg()
        p1 = tmp_path / "one.yaml"
        save_config(cfg, p1)
        loaded = load_config(p1)
        assert loaded == cfg
        p2 = tmp_path / "two.yaml"
        save_config(loaded, p2)
        assert load_config(p2) == loaded
        assert p1.read_text() == p2.read_text()

    def test_canonical_round_trip(self, tmp_path):
        cfg = load_config(Path(__file__).resolve().parent.parent / "configs" / "canonical.yaml")
        p = tmp_path / "c.yaml"
        save_config(cfg, p)
        assert load_config(p) == cfg

    def test_unknown_key_names_section(self, tmp_path):
        p = tmp_path / "bad.yaml"
        p.write_text("channel:\n  bandwith_hz: 1.0\n")
        with pytest.raises(Exception, match="bandwith_hz"):
            load_config(p)

    def test_constraint_violation_names_field(self, tmp_path):
        p = tmp_path / "bad.yaml"
        p.write_text("verification:\n  alpha: 1.5\n")
        with pytest.raises(Exception, match="alpha"):
            load_config(p)
