"""Figure rendering for experiment reports and certificates.

Every function takes a report (or certificate dict) and a target path and
writes a PNG next to the delimited output.  The Agg backend is forced at
import time so rendering works headless.
"""
from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .harness import ExperimentReport

_DPI = 150


def _finite_points(xs, ys):
    pairs = [(x, y) for x, y in zip(xs, ys) if y is not None and math.isfinite(y)]
    if not pairs:
        return [], []
    return zip(*pairs)


def plot_bound_curve(report: ExperimentReport, path) -> Path:
    """Certified bound versus corrupted-sample percentage."""
    path = Path(path)
    pct = [p.outlier_pct for p in report.points]
    bounds = [p.bound for p in report.points]
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    bx, by = _finite_points(pct, bounds)
    ax.plot(bx, by, "o-", color="tab:blue", label="certified bound")
    if report.points:
        t = report.points[0].threshold
        n = report.config["generator"]["N"]
        ax.axvline(100.0 * t / n, color="tab:red", linestyle="--", label="stability threshold")
    ax.set_xlabel("corrupted samples (%)")
    ax.set_ylabel("coefficient error bound")
    ax.set_yscale("log")
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def plot_recovery(report: ExperimentReport, path) -> Path:
    """Exact-recovery rate versus corrupted-sample percentage."""
    path = Path(path)
    pct = [p.outlier_pct for p in report.points]
    rates = [p.recovery_rate for p in report.points]
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(pct, rates, "s-", color="tab:green", label="recovery rate")
    if report.points:
        t = report.points[0].threshold
        n = report.config["generator"]["N"]
        ax.axvline(100.0 * t / n, color="tab:red", linestyle="--", label="stability threshold")
    ax.set_xlabel("corrupted samples (%)")
    ax.set_ylabel("fraction of trials exactly recovered")
    ax.set_ylim(-0.05, 1.05)
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def plot_stability(report: ExperimentReport, path) -> Path:
    """Observed errors against the certified bound, per sweep point."""
    path = Path(path)
    pct = [p.outlier_pct for p in report.points]
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    mx, my = _finite_points(pct, [p.max_err for p in report.points])
    ex, ey = _finite_points(pct, [p.mean_err for p in report.points])
    ax.plot(mx, my, "^-", color="tab:orange", label="max error")
    ax.plot(ex, ey, "o-", color="tab:blue", label="mean error")
    ax.set_xlabel("corrupted samples (%)")
    ax.set_ylabel("coefficient error")
    ax.set_yscale("log")
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def plot_certificate(cert_dict: dict, path) -> Path:
    """Bound curve stored inside a certificate JSON dict."""
    path = Path(path)
    rs = [pt["r"] for pt in cert_dict["bound_curve"]]
    bs = [pt["B"] for pt in cert_dict["bound_curve"]]
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    bx, by = _finite_points(rs, bs)
    ax.plot(bx, by, "o-", color="tab:blue", label="bound")
    unstable = [r for r, b in zip(rs, bs) if b is None]
    if unstable:
        ax.axvspan(min(unstable) - 0.5, max(unstable) + 0.5, color="tab:red", alpha=0.15,
                   label="unstable")
    ax.set_xlabel("clean samples r")
    ax.set_ylabel("coefficient error bound")
    ax.set_yscale("log")
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def plot_residuals(residual_norms: np.ndarray, eps0: float, path) -> Path:
    """Stem plot of per-sample residual norms with the dead-zone level."""
    path = Path(path)
    norms = np.asarray(residual_norms, dtype=float)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.stem(np.arange(1, norms.size + 1), norms)
    if eps0 > 0:
        ax.axhline(eps0, color="tab:red", linestyle="--", label="dead zone")
        ax.legend()
    ax.set_xlabel("sample index")
    ax.set_ylabel("residual norm")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def render_report_figures(report: ExperimentReport, out_dir) -> list[Path]:
    """Render the figures appropriate for a report kind into a directory."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    if report.kind == "bound-curve":
        written.append(plot_bound_curve(report, out_dir / "bound_curve.png"))
    elif report.kind == "recovery":
        written.append(plot_recovery(report, out_dir / "recovery.png"))
    elif report.kind == "stability":
        written.append(plot_stability(report, out_dir / "stability.png"))
        written.append(plot_bound_curve(report, out_dir / "stability_bounds.png"))
    return written
