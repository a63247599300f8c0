"""Diagnostic report: matplotlib figures rendered to files alongside a
delimited stats summary (report.csv)."""

from __future__ import annotations

import csv
import math
import time
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .cloud_io import load_cloud  # noqa: E402
from .deformer import PoseContext, twist_profile  # noqa: E402
from .encoder import encode_cloud  # noqa: E402
from .pipeline import SkinningJob, sample_baselines, skin  # noqa: E402
from .skeleton import Pose, identity_pose, load_skeleton  # noqa: E402
from .synthetic import nearest_bone_registration  # noqa: E402


def _scatter_xy(ax, pts, color, label, s=0.5):
    ax.scatter(pts[:, 0], pts[:, 1], s=s, c=color, label=label, linewidths=0)


def fig_cloud(before: np.ndarray, after: np.ndarray, path):
    fig, axes = plt.subplots(1, 2, figsize=(10, 5), sharex=True, sharey=True)
    _scatter_xy(axes[0], before, "tab:gray", "input")
    _scatter_xy(axes[1], after, "tab:blue", "deformed")
    for ax, title in zip(axes, ("input", "deformed")):
        ax.set_aspect("equal")
        ax.set_title(title)
        ax.set_xlabel("x")
    axes[0].set_ylabel("y")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def fig_baselines(baselines: list[dict], path):
    fig, ax = plt.subplots(figsize=(7, 6))
    cmap = plt.get_cmap("tab10")
    for bl in baselines:
        pts = np.asarray(bl["points"])
        bone = np.asarray(bl["bone_ids"])
        for bid in np.unique(bone):
            seg = pts[bone == bid]
            ax.plot(seg[:, 0], seg[:, 1], lw=0.8, color=cmap(int(bid) % 10))
    ax.set_aspect("equal")
    ax.set_title("baseline bundle (xy projection)")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def fig_twist_profile(path):
    d = np.linspace(0, 1, 200)
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.plot(d, [twist_profile(x, 1.0) for x in d], label="cubic")
    ax.plot(d, d, "--", label="linear")
    ax.set_xlabel("normalized distance d")
    ax.set_ylabel("angle / tau_max")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def fig_surface_distance(sk_posed, pts: np.ndarray, path):
    d = np.min(np.stack([sk_posed.geom(b).signed_surface_distance(pts)
                         for b in sorted(sk_posed.bone_by_id)]), axis=0)
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.hist(d, bins=80, color="tab:blue")
    ax.set_xlabel("signed distance to posed sphere-mesh")
    ax.set_ylabel("points")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def write_report(skeleton_path, points_path, pose: Pose, out_dir,
                 baseline_count: int = 16):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    sk, reg = load_skeleton(skeleton_path)
    cloud = load_cloud(points_path)
    if reg is None:
        reg = nearest_bone_registration(sk, cloud.positions)

    stats: list[tuple[str, str, float]] = []
    t0 = time.perf_counter()
    es = encode_cloud(sk, reg, cloud.positions)
    t_enc = time.perf_counter() - t0
    stats.append(("encode", "seconds", t_enc))
    stats.append(("encode", "points", float(len(es))))
    stats.append(("encode", "flagged",
                  float(np.count_nonzero(es.records["flags"] & np.uint32(0xFFFFFFFE)))))

    t0 = time.perf_counter()
    res = skin(SkinningJob(skeleton=sk, encoded=es, pose=pose))
    t_skin = time.perf_counter() - t0
    stats.append(("skin", "seconds", t_skin))
    stats.append(("skin", "collapsed_sections", float(res.collapsed.sum())))
    stats.append(("skin", "smoothed_points", float(res.smoothed.sum())))

    ident = skin(SkinningJob(skeleton=sk, encoded=es, pose=identity_pose()))
    rt = np.abs(ident.positions - cloud.positions).max() / max(1.0, sk.scene_diagonal)
    stats.append(("roundtrip", "max_rel_error", float(rt)))

    baselines = sample_baselines(sk, baseline_count, pose)
    fig_cloud(cloud.positions, res.positions, out / "cloud.png")
    fig_baselines(baselines, out / "baselines.png")
    fig_twist_profile(out / "twist_profile.png")
    pc = PoseContext.build(sk, pose)
    fig_surface_distance(pc.sk_posed, res.positions, out / "surface_distance.png")

    with open(out / "report.csv", "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["stage", "metric", "value"])
        for row in stats:
            w.writerow(row)
    print(f"report written to {out}")
    return stats
