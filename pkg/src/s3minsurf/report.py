"""Report rendering: delimited summaries and matplotlib figures.

The report path takes the JSON artifacts a build writes and produces a flat
``report.csv``, a ``convergence.csv``, and PNG figures (convergence history,
a stereographic 3D view of the mesh, and the residual spectrum).
"""

from __future__ import annotations

import csv
import os

import numpy as np

from .io import stereographic


def _flatten(d, prefix=""):
    rows = []
    for key in sorted(d):
        val = d[key]
        name = f"{prefix}{key}"
        if isinstance(val, dict):
            rows.extend(_flatten(val, name + "."))
        elif isinstance(val, (list, tuple)):
            rows.append((name, ";".join(str(v) for v in val)))
        else:
            rows.append((name, val))
    return rows


def write_report_csv(report: dict, path: str) -> str:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["key", "value"])
        for key, val in _flatten(report):
            w.writerow([key, val])
    return path


def write_convergence_csv(convergence: dict, path: str) -> str:
    hist = convergence.get("history", [])
    cols = ["stage", "iteration", "area", "energy", "grad_norm", "min_quality"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for h in hist:
            w.writerow([h.get(c, "") for c in cols])
    return path


def _use_agg():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def render_convergence_figure(convergence: dict, path: str) -> str:
    plt = _use_agg()
    hist = convergence.get("history", [])
    it = [h["iteration"] for h in hist]
    area = [h["area"] for h in hist]
    grad = [h["grad_norm"] for h in hist]
    fig, axes = plt.subplots(2, 1, figsize=(6, 6), sharex=True)
    axes[0].plot(it, area, "-", lw=1.2)
    axes[0].set_ylabel("area")
    axes[1].semilogy(it, np.maximum(grad, 1e-300), "-", lw=1.2, color="#a33")
    axes[1].set_ylabel("projected gradient (inf norm)")
    axes[1].set_xlabel("iteration")
    for ax in axes:
        ax.grid(True, alpha=0.3)
    fig.suptitle("area minimization")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_mesh_figure(V: np.ndarray, F: np.ndarray, path: str,
                       max_edges: int = 12000) -> str:
    """Stereographic 3D wireframe of the mesh."""
    plt = _use_agg()
    from mpl_toolkits.mplot3d.art3d import Line3DCollection

    P = stereographic(V)
    e = np.concatenate([F[:, [0, 1]], F[:, [1, 2]], F[:, [2, 0]]])
    e.sort(axis=1)
    e = np.unique(e, axis=0)
    if e.shape[0] > max_edges:
        step = int(np.ceil(e.shape[0] / max_edges))
        e = e[::step]
    segs = np.stack([P[e[:, 0]], P[e[:, 1]]], axis=1)
    fig = plt.figure(figsize=(7, 7))
    ax = fig.add_subplot(111, projection="3d")
    ax.add_collection3d(Line3DCollection(segs, colors="#26547c", linewidths=0.3, alpha=0.5))
    lim = np.percentile(np.abs(P), 98)
    ax.set_xlim(-lim, lim)
    ax.set_ylim(-lim, lim)
    ax.set_zlim(-lim, lim)
    ax.set_box_aspect((1, 1, 1))
    ax.set_title("stereographic projection")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_residual_figure(report: dict, path: str) -> str:
    plt = _use_agg()
    sym = report.get("symmetry", {}).get("residuals", {})
    refl = report.get("reflection", {}).get("residuals", {})
    names = list(sym) + list(refl)
    vals = [max(v, 1e-18) for v in list(sym.values()) + list(refl.values())]
    colors = ["#2a9d8f"] * len(sym) + ["#e76f51"] * len(refl)
    fig, ax = plt.subplots(figsize=(max(6, 0.3 * len(names)), 4))
    ax.bar(range(len(names)), vals, color=colors)
    ax.set_yscale("log")
    thr = report.get("symmetry", {}).get("threshold")
    if thr:
        ax.axhline(thr, color="k", ls="--", lw=1, label="symmetry threshold")
        ax.legend()
    ax.set_xticks(range(len(names)))
    ax.set_xticklabels(names, rotation=90, fontsize=6)
    ax.set_ylabel("residual (radians)")
    ax.set_title("symmetry (green) and reflection (orange) residuals")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_report(outdir: str, report: dict | None = None, convergence: dict | None = None,
                  mesh=None) -> list:
    """Render every artifact available in ``outdir``; returns written paths."""
    written = []
    if report is not None:
        written.append(write_report_csv(report, os.path.join(outdir, "report.csv")))
        written.append(render_residual_figure(report, os.path.join(outdir, "residuals.png")))
    if convergence is not None:
        written.append(
            write_convergence_csv(convergence, os.path.join(outdir, "convergence.csv"))
        )
        written.append(
            render_convergence_figure(convergence, os.path.join(outdir, "convergence.png"))
        )
    if mesh is not None:
        V, F = mesh
        written.append(render_mesh_figure(V, F, os.path.join(outdir, "projection.png")))
    return written
