"""Experiment harness: certified bound curves, recovery and stability sweeps.

Each experiment draws one regressor block from its generator spec, column
normalizes it, certifies it once, then walks the noise sweep.  Per-trial
seeds are derived as ``noise.seed XOR trial_index``, so trial results do not
depend on execution order and any single trial can be reproduced in
isolation.  Reports embed the full configuration echo and library versions;
running the same config twice yields identical reports.

Reports serialize to JSON (complete, including per-point extras) or to a
fixed-column CSV with header ``outlier_pct,bound,mean_err,max_err,
recovery_rate,xi,T,sigma_lb``.  Infinite bounds are written as null values
tagged "unstable" in JSON and as ``inf`` in CSV.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .certificates import error_bound, recovery_threshold, sigma_lower_bound, xi_amplitude
from .data_model import Dataset, unit_columns
from .errors import ConfigError, DataError
from .estimator import SolverOpts, solve_regression
from .generators import GeneratorSpec, NoiseSpec, gen_regressors, ground_truth_matrix, inject_noise
from .losses import LossSpec, eval_phi

CSV_HEADER = "outlier_pct,bound,mean_err,max_err,recovery_rate,xi,T,sigma_lb"
RECOVERY_TOL = 1e-6
BOUND_SLACK = 1e-8


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment: a generator, a noise sweep, a loss and a solver."""

    generator: GeneratorSpec
    sweep: tuple[NoiseSpec, ...]
    loss: LossSpec = LossSpec()
    solver: SolverOpts = SolverOpts()
    trials: int = 10
    m_outputs: int = 1
    normalize: bool = True
    outputs: str | None = None

    def __post_init__(self) -> None:
        if not self.sweep:
            raise ConfigError("noise sweep must not be empty")
        object.__setattr__(self, "sweep", tuple(self.sweep))
        if self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        if self.m_outputs < 1:
            raise ConfigError(f"m_outputs must be >= 1, got {self.m_outputs}")

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "generator": self.generator.to_json_dict(),
            "sweep": [t.to_json_dict() for t in self.sweep],
            "loss": self.loss.to_json_dict(),
            "solver": self.solver.to_json_dict(),
            "trials": self.trials,
            "m": self.m_outputs,
            "normalize": self.normalize,
            "outputs": self.outputs,
        }

    @classmethod
    def from_json_dict(cls, d: dict[str, Any]) -> "ExperimentConfig":
        if not isinstance(d, dict):
            raise ConfigError("experiment config must be an object")
        known = {"generator", "sweep", "loss", "solver", "trials", "m", "normalize", "outputs"}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown experiment field(s): {sorted(unknown)}")
        if "generator" not in d:
            raise ConfigError('experiment config is missing "generator"')
        sweep_raw = d.get("sweep", [{}])
        if not isinstance(sweep_raw, list):
            raise ConfigError('"sweep" must be a list of noise specs')
        return cls(
            generator=GeneratorSpec.from_json_dict(d["generator"]),
            sweep=tuple(NoiseSpec.from_json_dict(t) for t in sweep_raw),
            loss=LossSpec.from_json_dict(d.get("loss", {})),
            solver=SolverOpts.from_json_dict(d.get("solver", {})),
            trials=int(d.get("trials", 10)),
            m_outputs=int(d.get("m", 1)),
            normalize=bool(d.get("normalize", True)),
            outputs=d.get("outputs"),
        )


@dataclass(frozen=True)
class PointRecord:
    """One sweep point; NaN marks fields a given experiment does not fill."""

    outlier_pct: float
    bound: float
    mean_err: float
    max_err: float
    recovery_rate: float
    xi: float
    threshold: float
    sigma_lb: float
    extra: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class ExperimentReport:
    """Sweep results plus everything needed to regenerate them."""

    kind: str
    points: tuple[PointRecord, ...]
    config: dict[str, Any]
    versions: dict[str, str]
    violations: int = 0


def _versions() -> dict[str, str]:
    return {"robfit": __version__, "numpy": np.__version__}


def _certified_regressors(cfg: ExperimentConfig) -> tuple[np.ndarray, float, float, float]:
    x = gen_regressors(cfg.generator)
    if cfg.normalize:
        x = unit_columns(x)
    xi = xi_amplitude(x).xi
    threshold = recovery_threshold(xi)
    sigma = sigma_lower_bound(x)
    return x, xi, threshold, sigma


def run_bound_curve(cfg: ExperimentConfig) -> ExperimentReport:
    """Certified error-bound curve over every corrupted count in the regime.

    Pure certificate computation: no noise is injected and no fits run, so
    the sweep and trial counts in ``cfg`` only land in the config echo.
    """
    x, xi, threshold, sigma = _certified_regressors(cfg)
    n_samples = x.shape[1]
    d_max = min(int(math.ceil(threshold - 1e-12)) - 1, n_samples)
    points = []
    for d in range(d_max + 1):
        bound = error_bound(n_samples - d, x, LossSpec(p=2.0, eps0=0.0), sigma, xi=xi)
        points.append(
            PointRecord(
                outlier_pct=100.0 * d / n_samples,
                bound=bound,
                mean_err=math.nan,
                max_err=math.nan,
                recovery_rate=math.nan,
                xi=xi,
                threshold=threshold,
                sigma_lb=sigma,
                extra={"d": d, "r": n_samples - d},
            )
        )
    return ExperimentReport(
        kind="bound-curve",
        points=tuple(points),
        config=cfg.to_json_dict(),
        versions=_versions(),
    )


def _coefficient_error(a_hat: np.ndarray, a0: np.ndarray) -> float:
    return float(np.linalg.norm(a_hat - a0, 2))


def _sweep_point(
    cfg: ExperimentConfig,
    x: np.ndarray,
    a0: np.ndarray,
    noise: NoiseSpec,
    xi: float,
    threshold: float,
    sigma: float,
    with_bound_check: bool,
) -> PointRecord:
    n_samples = x.shape[1]
    d = int(noise.outlier_fraction * n_samples)
    bound = error_bound(
        n_samples - d, x, LossSpec(p=2.0, eps0=0.0), sigma, xi=xi
    )
    errs = []
    slacks = []
    violations = 0
    for trial in range(cfg.trials):
        trial_noise = NoiseSpec(
            outlier_fraction=noise.outlier_fraction,
            outlier_amplitude=noise.outlier_amplitude,
            dense_bound=noise.dense_bound,
            seed=noise.seed ^ trial,
        )
        data = inject_noise(x, a0, trial_noise)
        result = solve_regression(Dataset(y=data.y, x=x), cfg.loss, cfg.solver)
        err = _coefficient_error(result.a_star, a0)
        errs.append(err)
        if with_bound_check and math.isfinite(bound):
            clean = data.s0.to_mask()
            rhs = bound * eval_phi(cfg.loss, data.e[:, clean]) + BOUND_SLACK
            slacks.append(rhs - err)
            if err > rhs:
                violations += 1
    errs_arr = np.asarray(errs)
    record = PointRecord(
        outlier_pct=100.0 * d / n_samples,
        bound=bound,
        mean_err=float(errs_arr.mean()),
        max_err=float(errs_arr.max()),
        recovery_rate=float((errs_arr < RECOVERY_TOL).mean()),
        xi=xi,
        threshold=threshold,
        sigma_lb=sigma,
        extra={
            "d": d,
            "trials": cfg.trials,
            "violations": violations,
            "min_bound_slack": float(min(slacks)) if slacks else math.nan,
        },
    )
    return record


def run_recovery_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    """Exact-recovery rate per sweep point (dense noise must be zero)."""
    for noise in cfg.sweep:
        if noise.dense_bound != 0.0:
            raise ConfigError(
                "recovery experiments require dense_bound = 0 at every sweep point"
            )
    x, xi, threshold, sigma = _certified_regressors(cfg)
    a0 = ground_truth_matrix(cfg.m_outputs, x.shape[0], seed=cfg.generator.seed)
    points = tuple(
        _sweep_point(cfg, x, a0, noise, xi, threshold, sigma, with_bound_check=False)
        for noise in cfg.sweep
    )
    return ExperimentReport(
        kind="recovery",
        points=points,
        config=cfg.to_json_dict(),
        versions=_versions(),
    )


def run_stability_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    """Error-versus-bound sweep under mixed noise; counts bound violations.

    Every trial inside the stability regime asserts the certified inequality
    ``error <= bound * dense-noise-mass + slack``; violations are counted in
    the report (the expected count is zero).
    """
    x, xi, threshold, sigma = _certified_regressors(cfg)
    a0 = ground_truth_matrix(cfg.m_outputs, x.shape[0], seed=cfg.generator.seed)
    points = tuple(
        _sweep_point(cfg, x, a0, noise, xi, threshold, sigma, with_bound_check=True)
        for noise in cfg.sweep
    )
    violations = sum(p.extra["violations"] for p in points)
    return ExperimentReport(
        kind="stability",
        points=points,
        config=cfg.to_json_dict(),
        versions=_versions(),
        violations=violations,
    )


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def _point_json(p: PointRecord) -> dict[str, Any]:
    stable = math.isfinite(p.bound)
    def clean(v: float) -> float | None:
        return None if isinstance(v, float) and math.isnan(v) else v
    return {
        "outlier_pct": p.outlier_pct,
        "bound": p.bound if stable else None,
        "regime": "stable" if stable else "unstable",
        "mean_err": clean(p.mean_err),
        "max_err": clean(p.max_err),
        "recovery_rate": clean(p.recovery_rate),
        "xi": p.xi,
        "T": p.threshold,
        "sigma_lb": p.sigma_lb,
        "extra": {k: clean(v) if isinstance(v, float) else v for k, v in p.extra.items()},
    }


def report_to_json_dict(report: ExperimentReport) -> dict[str, Any]:
    return {
        "kind": report.kind,
        "points": [_point_json(p) for p in report.points],
        "violations": report.violations,
        "config": report.config,
        "versions": report.versions,
    }


def emit_report(report: ExperimentReport, path, format: str = "json") -> Path:
    """Write a report as JSON or fixed-column CSV.

    Raises
    ------
    DataError
        On an unknown format name.
    """
    path = Path(path)
    if format == "json":
        path.write_text(json.dumps(report_to_json_dict(report), indent=2) + "\n")
        return path
    if format == "csv":
        lines = [CSV_HEADER]
        for p in report.points:
            lines.append(
                ",".join(
                    repr(float(v))
                    for v in (
                        p.outlier_pct,
                        p.bound,
                        p.mean_err,
                        p.max_err,
                        p.recovery_rate,
                        p.xi,
                        p.threshold,
                        p.sigma_lb,
                    )
                )
            )
        path.write_text("\n".join(lines) + "\n")
        return path
    raise DataError(f"unknown report format {format!r} (use json or csv)")
