"""Figure rendering for case and sweep reports (PNG files next to the CSVs)."""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .harness import CaseResult, SweepResult


def render_case_figures(case: CaseResult, outdir: str) -> list[str]:
    """Entropy/bulk time series and extracted-vs-reference radius."""
    os.makedirs(outdir, exist_ok=True)
    t = case.column("t")
    paths = []

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(t, case.column("E_total_vs_m"), "o-", label="relative entropy (vs modified)")
    ax.plot(t, case.column("E_bulk_vs_m"), "s-", label="bulk error (vs modified)")
    ax.plot(t, case.column("E_total_vs_limit"), "o--", label="relative entropy (vs limit)")
    ax.plot(t, case.column("E_bulk_vs_limit"), "s--", label="bulk error (vs limit)")
    ax.set_xlabel("t")
    ax.set_ylabel("functional value")
    ax.set_title(f"eps={case.eps:g}, m={case.m:.4g}")
    ax.legend(fontsize=8)
    fig.tight_layout()
    p = os.path.join(outdir, f"entropy_eps{case.eps:.6g}.png")
    fig.savefig(p, dpi=150)
    plt.close(fig)
    paths.append(p)

    r_ext = case.column("radius_extracted")
    if not np.all(np.isnan(r_ext)):
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.plot(t, r_ext, "o", label="extracted zero level")
        ax.plot(t, case.column("radius_ref_m"), "-", label="modified sharp interface")
        ax.plot(t, case.column("radius_ref_limit"), "--", label="limit interface")
        ax.set_xlabel("t")
        ax.set_ylabel("radius")
        ax.set_title(f"eps={case.eps:g}")
        ax.legend(fontsize=8)
        fig.tight_layout()
        p = os.path.join(outdir, f"radius_eps{case.eps:.6g}.png")
        fig.savefig(p, dpi=150)
        plt.close(fig)
        paths.append(p)
    return paths


def render_rate_figure(result: SweepResult, outdir: str,
                       filename: str = "rates.png") -> str:
    """Log-log errors against eps with the fitted slopes."""
    os.makedirs(outdir, exist_ok=True)
    fig, ax = plt.subplots(figsize=(6, 4.5))
    for col, pairs in result.aggregates.items():
        eps = np.array([e for e, _ in pairs])
        err = np.array([v for _, v in pairs])
        ok = np.isfinite(err) & (err > 0)
        if not np.any(ok):
            continue
        label = col
        if col in result.fits:
            label += f" (slope {result.fits[col].exponent:.2f})"
        ax.loglog(eps[ok], err[ok], "o-", label=label)
    ax.set_xlabel("eps")
    ax.set_ylabel("sup-in-time error")
    ax.set_title(f"beta={result.config.beta:g}, m0={result.config.m0:g}")
    ax.legend(fontsize=7)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    p = os.path.join(outdir, filename)
    fig.savefig(p, dpi=150)
    plt.close(fig)
    return p
