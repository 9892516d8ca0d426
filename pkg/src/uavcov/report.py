"""Figure rendering for simulate and bench reports.

Figures land next to the delimited outputs. PNG metadata is stripped so a
fixed seed reproduces byte-identical files.
"""

from __future__ import annotations

from pathlib import Path

_SAVE_KW = {"dpi": 110, "metadata": {"Software": None}}


def _plt():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def render_episode_figures(rows: list[dict], env, uav_tracks: list[list[tuple]],
                           users, out_dir: str | Path) -> list[Path]:
    plt = _plt()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    ts = [r["t"] for r in rows]
    fig, ax = plt.subplots(figsize=(7, 4))
    for key, label in (("phi_thr", "throughput"), ("phi_cov", "coverage"),
                       ("phi_bal", "balance"), ("phi_energy", "energy"),
                       ("phi_coll", "spacing")):
        ax.plot(ts, [r[key] for r in rows], label=label, linewidth=1.2)
    ax.plot(ts, [r["reward_total"] for r in rows], label="total", color="black", linewidth=2)
    ax.set_xlabel("step")
    ax.set_ylabel("normalized component")
    ax.set_ylim(-0.05, 1.05)
    ax.legend(ncol=3, fontsize=8)
    ax.set_title("reward components")
    fig.tight_layout()
    path = out / "rewards.png"
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
    written.append(path)

    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    ax1.plot(ts, [r["sum_throughput_bps"] / 1e6 for r in rows], color="tab:blue")
    ax1.set_xlabel("step")
    ax1.set_ylabel("sum throughput (Mbit/s)")
    ax2.plot(ts, [r["urllc_cr"] for r in rows], label="URLLC")
    ax2.plot(ts, [r["embb_cr"] for r in rows], label="eMBB")
    ax2.set_xlabel("step")
    ax2.set_ylabel("coverage rate")
    ax2.set_ylim(-0.05, 1.05)
    ax2.legend(fontsize=8)
    fig.tight_layout()
    path = out / "metrics.png"
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
    written.append(path)

    fig, ax = plt.subplots(figsize=(6, 6))
    for ob in env.obstacles:
        ax.add_patch(plt.Rectangle((ob.x_min, ob.y_min), ob.x_max - ob.x_min,
                                   ob.y_max - ob.y_min, color="0.6"))
    for track in uav_tracks:
        xs = [p[0] for p in track]
        ys = [p[1] for p in track]
        ax.plot(xs, ys, "-", linewidth=1)
        ax.plot(xs[-1], ys[-1], "^", markersize=7)
    urllc = [(u.position[0], u.position[1]) for u in users if u.traffic_class == "urllc"]
    embb = [(u.position[0], u.position[1]) for u in users if u.traffic_class != "urllc"]
    if embb:
        ax.plot(*zip(*embb), ".", markersize=2, color="tab:gray", label="eMBB")
    if urllc:
        ax.plot(*zip(*urllc), "o", markersize=4, color="tab:red", label="URLLC")
    ax.set_xlim(0, env.side)
    ax.set_ylim(0, env.side)
    ax.set_aspect("equal")
    ax.legend(fontsize=8, loc="upper right")
    ax.set_title("UAV tracks and final user positions")
    fig.tight_layout()
    path = out / "world.png"
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
    written.append(path)
    return written


def render_bench_figure(rows: list[dict], out_dir: str | Path) -> Path:
    plt = _plt()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    labels = [r["label"] for r in rows]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(11, 4))
    ax1.bar(labels, [r["var_p_hat"] for r in rows], color="tab:blue")
    ax1.set_yscale("log")
    ax1.set_ylabel("replicate variance of the estimate")
    ax1.tick_params(axis="x", rotation=20, labelsize=8)
    ax2.bar(labels, [r["mean_latency_ms"] for r in rows], color="tab:orange")
    ax2.set_ylabel("mean latency per call (ms)")
    ax2.tick_params(axis="x", rotation=20, labelsize=8)
    fig.tight_layout()
    path = out / "bench.png"
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
    return path
