"""Figure rendering for the CLI report paths.

Every renderer writes PNG files next to the delimited report output and
returns the paths it wrote.  The Agg backend is forced so runs work
headless; PNG metadata is pinned so identical runs produce identical
bytes.
"""
from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_META = {"Software": "junctionflow"}


def _save(fig, path):
    fig.savefig(path, dpi=150, metadata=_META)
    plt.close(fig)
    return path


def render_simulation(diag_rows: list[dict], state, outdir: str) -> list[str]:
    """Network snapshot plus diagnostic time series."""
    written = []

    fig, ax = plt.subplots(figsize=(5, 4))
    for k in range(state.q):
        x = state.x_nodes(k)
        ax.plot(x, state.sheets[k][:, 0], lw=1.2,
                label=f"sheet {k + 1}")
    ax.plot([state.gamma], [state.value[0]], "ko", ms=4, label="junction")
    ax.set_xlabel("x")
    ax.set_ylabel("u")
    ax.legend(fontsize=8)
    ax.set_title("final network")
    fig.tight_layout()
    written.append(_save(fig, os.path.join(outdir, "network.png")))

    t = np.array([r["t"] for r in diag_rows])
    fig, axes = plt.subplots(3, 1, figsize=(5, 7), sharex=True)
    axes[0].plot(t, [r["total_area"] for r in diag_rows], lw=1.2)
    axes[0].set_ylabel("total area")
    axes[1].semilogy(t, np.maximum([r["balance_norm"] for r in diag_rows], 1e-17), lw=1.2)
    axes[1].set_ylabel("balance norm")
    axes[2].plot(t, [r["gamma"] for r in diag_rows], lw=1.2)
    axes[2].set_ylabel("junction position")
    axes[2].set_xlabel("t")
    fig.tight_layout()
    written.append(_save(fig, os.path.join(outdir, "diagnostics.png")))
    return written


def render_hodograph(report: dict, outdir: str) -> list[str]:
    """Refinement of the roundtrip and chain-rule errors, log-log in h."""
    h = np.array(report["h_values"], dtype=float)
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.loglog(h, report["roundtrip_errors"], "o-", label="roundtrip")
    ax.loglog(h, report["chain_rule_errors"], "s-", label="chain rule")
    ref = report["chain_rule_errors"][0] * (h / h[0]) ** 2
    ax.loglog(h, ref, "k--", lw=0.8, label="order 2")
    ax.set_xlabel("h")
    ax.set_ylabel("max error")
    ax.legend(fontsize=8)
    ax.set_title("transform refinement")
    fig.tight_layout()
    return [_save(fig, os.path.join(outdir, "convergence.png"))]


def render_check(report: dict, outdir: str) -> list[str]:
    """Per-sample minimum singular values against the decision threshold."""
    fig, ax = plt.subplots(figsize=(5, 4))
    for mode in ("elliptic", "parabolic"):
        block = report["modes"].get(mode)
        if block is None:
            continue
        sv = np.maximum(block["per_sample_min_singular_value"], 1e-17)
        ax.plot(range(len(sv)), sv, "o-", label=mode)
    ax.set_yscale("log")
    ax.set_xlabel("sample index")
    ax.set_ylabel("min singular value")
    ax.axhline(report["sv_rtol"], color="k", ls="--", lw=0.8, label="rel. threshold")
    ax.legend(fontsize=8)
    ax.set_title(f"boundary system, D = {report['D']:.4g}")
    fig.tight_layout()
    return [_save(fig, os.path.join(outdir, "singular_values.png"))]


def render_combinatorics(report: dict, outdir: str) -> list[str]:
    """Tightness of the weighted bound: lhs/rhs ratio per case."""
    cases = report["combo_bound"].get("ratios", [])
    fig, ax = plt.subplots(figsize=(5, 4))
    if cases:
        ax.plot([c["weight"] for c in cases], [c["ratio"] for c in cases],
                ".", ms=4)
    ax.axhline(1.0, color="k", ls="--", lw=0.8)
    ax.set_xlabel("2bm + n")
    ax.set_ylabel("lhs / bound")
    ax.set_title("weighted bound tightness")
    fig.tight_layout()
    return [_save(fig, os.path.join(outdir, "bound_tightness.png"))]
