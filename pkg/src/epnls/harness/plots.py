"""Figure rendering: each run_* driver saves a PNG next to its CSV."""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def _fig_path(csv_path: str) -> str:
    root, _ = os.path.splitext(csv_path)
    return root + ".png"


def _floor(a, tiny=1e-18):
    import numpy as np

    a = np.asarray(a, dtype=float)
    return np.maximum(np.abs(a), tiny)


def plot_solve(csv_path: str, columns, rows) -> str:
    import numpy as np

    data = np.asarray([[float(v) for v in r] for r in rows])
    col = {c: i for i, c in enumerate(columns)}
    t = data[:, col["t"]]
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.semilogy(t, _floor(data[:, col["H_rel_err"]]), label="energy rel. err")
    ax.semilogy(t, _floor(data[:, col["m_rel_err"]]), label="density rel. err")
    ax.semilogy(t, _floor(data[:, col["K_err"]]), label="momentum err")
    ax.set_xlabel("t")
    ax.set_ylabel("conserved-quantity error")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    path = _fig_path(csv_path)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def plot_converge(csv_path: str, result) -> str:
    fig, axes = plt.subplots(1, 2, figsize=(10, 4.5), sharex=True)
    keys = sorted({(p.scheme, p.eps) for p in result.points})
    for scheme, eps in keys:
        pts = [p for p in result.points
               if p.scheme == scheme and p.eps == eps and not p.failed]
        if not pts:
            continue
        pts.sort(key=lambda p: p.h)
        hs = [p.h for p in pts]
        lbl = f"{scheme}, eps={eps:g}"
        axes[0].loglog(hs, [p.err_l2 for p in pts], "o-", label=lbl)
        axes[1].loglog(hs, [p.err_h1 for p in pts], "o-", label=lbl)
    for ax, name in zip(axes, ["L2 error", "H1 error"]):
        ax.set_xlabel("h")
        ax.set_ylabel(name)
        ax.grid(True, which="both", alpha=0.3)
    axes[0].legend(fontsize=8)
    path = _fig_path(csv_path)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def plot_conserve(csv_path: str, series_list) -> str:
    fig, axes = plt.subplots(1, 3, figsize=(13, 4.2))
    for s in series_list:
        lbl = f"{s.scheme}/{s.quad}"
        axes[0].semilogy(s.t, _floor(s.m_rel), label=lbl, lw=0.8)
        axes[1].semilogy(s.t, _floor(s.k_err), label=lbl, lw=0.8)
        axes[2].semilogy(s.t, _floor(s.action_dev), label=lbl, lw=0.8)
    for ax, name in zip(axes, ["density rel. err", "momentum err", "action deviation"]):
        ax.set_xlabel("t")
        ax.set_ylabel(name)
        ax.grid(True, which="both", alpha=0.3)
    axes[0].legend(fontsize=8)
    path = _fig_path(csv_path)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def plot_epcheck(csv_path: str, residuals, defects, quads) -> str:
    import numpy as np

    schemes = list(residuals)
    fig, axes = plt.subplots(1, 2, figsize=(10, 4.2))
    x = np.arange(len(schemes))
    width = 0.25
    for i, lbl in enumerate(["|r1|", "|r2|", "|r3|"]):
        vals = [max(residuals[s][i], 1e-18) for s in schemes]
        axes[0].bar(x + (i - 1) * width, vals, width, label=lbl)
    axes[0].set_yscale("log")
    axes[0].set_xticks(x, schemes)
    axes[0].set_ylabel("max condition residual")
    axes[0].legend()
    for s in schemes:
        axes[1].semilogy(range(len(quads)), [max(defects[(s, q)], 1e-18) for q in quads],
                         "o-", label=s)
    axes[1].set_xticks(range(len(quads)), quads, rotation=45)
    axes[1].set_ylabel("one-step energy defect")
    axes[1].legend(fontsize=8)
    for ax in axes:
        ax.grid(True, which="both", alpha=0.3)
    path = _fig_path(csv_path)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path
