"""Command-line surface: simulate, verify, bench, export-trajectories,
eval-proposal."""

from __future__ import annotations

import csv
import json
import math
import sys
from dataclasses import replace
from pathlib import Path

import click
import numpy as np

from uavcov.bench import run_bench
from uavcov.errors import ConfigError, DegenerateProposalError
from uavcov.estimator import estimate_pis, estimate_uniform
from uavcov.mdn import load_mdn_weights, mdn_infer
from uavcov.mobility import mobility_circle, step_user
from uavcov.rng import STREAM_EXPORT, STREAM_SAMPLING, substream
from uavcov.scenario import ScenarioConfig, build_world, load_config, save_config
from uavcov.simulation import _build_mixture, initial_state, make_policy, run_episode

EPISODE_CSV_FIELDS = ["t", "phi_thr", "phi_cov", "phi_bal", "phi_energy", "phi_coll",
                      "reward_total", "sum_throughput_bps", "urllc_cr", "embb_cr",
                      "energy_kj_cum"]
BENCH_CSV_FIELDS = ["label", "alpha", "n_samples", "mismatch", "replicates",
                    "oracle_pf", "mean_p_hat", "var_p_hat", "mean_latency_ms"]


def _load(config_path: str, seed: int | None) -> ScenarioConfig:
    try:
        return load_config(config_path).with_seed(seed)
    except ConfigError as exc:
        raise click.ClickException(str(exc)) from exc


def _write_csv(path: Path, rows: list[dict], fields: list[str]) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: row[k] for k in fields})


def _write_jsonl(path: Path, records: list[dict]) -> None:
    with path.open("w") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


@click.group()
def main() -> None:
    """Coverage verification and multi-UAV trajectory simulation."""


@main.command()
@click.option("--config", "config_path", required=True, type=str)
@click.option("--seed", type=int, default=None, help="override the config seed")
@click.option("--out", "out_dir", type=str, default="out")
@click.option("--plots/--no-plots", default=True, show_default=True)
@click.option("--timings", is_flag=True,
              help="include wall-clock fields in the verification records "
                   "(makes output files run-dependent)")
def simulate(config_path: str, seed: int | None, out_dir: str, plots: bool, timings: bool) -> None:
    """Run one episode; write episode.csv, verification.jsonl and figures."""
    cfg = _load(config_path, seed)
    result = run_episode(cfg, collect_timings=timings)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "episode.csv", result.step_rows, EPISODE_CSV_FIELDS)
    _write_jsonl(out / "verification.jsonl", result.verification_records)
    if plots:
        from uavcov.report import render_episode_figures
        from uavcov.scenario import build_environment
        render_episode_figures(result.step_rows, build_environment(cfg),
                               result.uav_tracks, result.final_state.users, out)
    m = result.metrics
    b_means = {k: float(np.mean([r[k] for r in result.step_rows]))
               for k in ("phi_thr", "phi_cov", "phi_bal", "phi_energy", "phi_coll")}
    summary = {
        "reward_components": b_means,
        "mean_reward_total": float(np.mean([r["reward_total"] for r in result.step_rows])),
        "metrics": {
            "sum_throughput_mbps": m.sum_throughput_bps / 1e6,
            "urllc_coverage_rate": m.urllc_cr,
            "embb_coverage_rate": m.embb_cr,
            "energy_kj": m.energy_kj,
            "jain_index": m.jain,
        },
        "flags": {"urllc_empty": m.urllc_empty, "embb_empty": m.embb_empty},
        "outputs": str(out),
    }
    click.echo(json.dumps(summary, sort_keys=True, indent=2))


@main.command()
@click.option("--config", "config_path", required=True, type=str)
@click.option("--seed", type=int, default=None)
@click.option("--user", "user_idx", type=int, default=0, show_default=True,
              help="index of the user to verify")
@click.option("--uav", "uav_idx", type=int, default=None,
              help="serving UAV index (default: nearest)")
@click.option("--alpha", type=float, default=None, help="override mixture weight")
@click.option("--samples", type=int, default=None, help="override sample budget")
@click.option("--mode", type=click.Choice(["uniform", "kinematic", "mdn"]), default=None,
              help="override proposal mode")
def verify(config_path: str, seed: int | None, user_idx: int, uav_idx: int | None,
           alpha: float | None, samples: int | None, mode: str | None) -> None:
    """Run one coverage verification and print the estimate as JSON."""
    cfg = _load(config_path, seed)
    ver = cfg.verification
    if alpha is not None:
        ver = replace(ver, alpha=alpha)
    if samples is not None:
        ver = replace(ver, n_samples=samples)
    if mode is not None:
        ver = replace(ver, proposal_mode=mode)
    cfg = replace(cfg, verification=ver)

    env, users, uavs = build_world(cfg)
    if not (0 <= user_idx < len(users)):
        raise click.ClickException(f"--user {user_idx} out of range (have {len(users)} users)")
    if not uavs:
        raise click.ClickException("scenario has no UAVs")
    user = users[user_idx]
    if uav_idx is None:
        ux, uy = user.position
        uav_idx = min(range(len(uavs)),
                      key=lambda i: (uavs[i].position[0] - ux) ** 2
                      + (uavs[i].position[1] - uy) ** 2 + uavs[i].position[2] ** 2)
    if not (0 <= uav_idx < len(uavs)):
        raise click.ClickException(f"--uav {uav_idx} out of range (have {len(uavs)} UAVs)")
    uav = uavs[uav_idx]

    circle = mobility_circle(user, cfg.episode.dt_s)
    rng = substream(cfg.seed, STREAM_SAMPLING, 0, user_idx)
    weights = None
    if ver.proposal_mode == "mdn":
        if ver.mdn_weights_path is None:
            raise click.ClickException("proposal mode 'mdn' needs verification.mdn_weights_path")
        weights = load_mdn_weights(ver.mdn_weights_path)
    try:
        if ver.proposal_mode == "uniform" or circle.radius == 0.0:
            est = estimate_uniform(circle, uav.position, env, ver.n_samples, rng, ver.epsilon)
        else:
            mixture = _build_mixture(user, cfg, weights)
            est = estimate_pis(circle, uav.position, env, mixture, ver, rng)
    except DegenerateProposalError as exc:
        click.echo(json.dumps({"error": str(exc)}), err=True)
        sys.exit(2)
    click.echo(json.dumps({
        "user_id": user_idx, "uav_id": uav_idx,
        "p_hat": est.p_hat, "var_hat": est.variance_hat, "n": est.n_samples,
        "max_w": est.max_weight_seen, "n_failures": est.n_failures_hit,
        "q_u": est.quality, "elapsed_us": est.elapsed * 1e6,
        "alpha": ver.alpha, "mode": ver.proposal_mode,
        "circle": {"center": list(circle.center), "radius": circle.radius},
    }, sort_keys=True))


@main.command()
@click.option("--config", "config_path", required=True, type=str)
@click.option("--seed", type=int, default=None)
@click.option("--replicates", type=int, default=300, show_default=True)
@click.option("--out", "out_dir", type=str, default="out")
@click.option("--plots/--no-plots", default=True, show_default=True)
def bench(config_path: str, seed: int | None, replicates: int, out_dir: str, plots: bool) -> None:
    """Sweep mixture weight and sample budget on the canonical shadow scenario."""
    cfg = _load(config_path, seed)
    rows = run_bench(cfg, replicates)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "bench.csv", rows, BENCH_CSV_FIELDS)
    if plots:
        from uavcov.report import render_bench_figure
        render_bench_figure(rows, out)
    header = f"{'cell':26s} {'mean p_hat':>11s} {'variance':>12s} {'latency ms':>11s}"
    click.echo(header)
    click.echo(f"{'oracle':26s} {rows[0]['oracle_pf']:>11.5f}")
    for r in rows:
        click.echo(f"{r['label']:26s} {r['mean_p_hat']:>11.5f} "
                   f"{r['var_p_hat']:>12.3e} {r['mean_latency_ms']:>11.3f}")


@main.command("export-trajectories")
@click.option("--config", "config_path", required=True, type=str)
@click.option("--seed", type=int, default=None)
@click.option("--users", "n_users", type=int, required=True)
@click.option("--steps", "n_steps", type=int, required=True)
@click.option("--out", "out_path", type=str, required=True)
def export_trajectories(config_path: str, seed: int | None, n_users: int,
                        n_steps: int, out_path: str) -> None:
    """Simulate user mobility only and dump JSONL rows
    {user_id, t, vx, vy, x, y} for predictor training."""
    cfg = _load(config_path, seed)
    if n_steps < cfg.users.history_len + 1:
        click.echo(f"warning: {n_steps} steps with history length "
                   f"{cfg.users.history_len} yields no training windows", err=True)
    cfg = replace(cfg, users=replace(cfg.users, n_urllc=n_users, n_embb=0, placements=()),
                  uavs=replace(cfg.uavs, count=0, placements=()))
    env, users, _ = build_world(cfg)
    sigma = math.radians(cfg.users.heading_sigma_deg)
    dt = cfg.episode.dt_s
    path = Path(out_path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as fh:
        for step in range(1, n_steps + 1):
            rng = substream(cfg.seed, STREAM_EXPORT, step)
            users = [step_user(u, dt, cfg.area.side_m, rng, sigma) for u in users]
            for uid, u in enumerate(users):
                vx, vy = u.history[-1]
                fh.write(json.dumps({"user_id": uid, "t": step,
                                     "vx": vx, "vy": vy,
                                     "x": u.position[0], "y": u.position[1]},
                                    sort_keys=True) + "\n")
    click.echo(f"wrote {n_users * n_steps} rows to {path}")


@main.command("eval-proposal")
@click.option("--weights", "weights_path", required=True, type=str)
@click.option("--history", "history_path", required=True, type=str,
              help="JSON file {'history': [[vx, vy], ...], 'anchor': [x, y]}")
def eval_proposal(weights_path: str, history_path: str) -> None:
    """Load a predictor weight file, run inference on one history and print
    the mixture; used for cross-implementation golden checks."""
    try:
        w = load_mdn_weights(weights_path)
    except ConfigError as exc:
        raise click.ClickException(str(exc)) from exc
    spec = json.loads(Path(history_path).read_text())
    history = np.asarray(spec["history"], dtype=float)
    anchor = tuple(spec.get("anchor", (0.0, 0.0)))
    try:
        gmm = mdn_infer(history, w, anchor)
    except ConfigError as exc:
        raise click.ClickException(str(exc)) from exc
    click.echo(json.dumps({
        "weights": [float(x) for x in gmm.weights],
        "means": [[float(a), float(b)] for a, b in gmm.means],
        "sigmas": [[float(math.sqrt(a)), float(math.sqrt(b))] for a, b in gmm.variances],
    }, sort_keys=True))


def _cfg_template() -> None:  # pragma: no cover - convenience hook
    save_config(ScenarioConfig(), "scenario.yaml")


if __name__ == "__main__":
    main()
