"""Command-line front end.

Subcommands
-----------
generate
    Draw regressors, plant a ground truth, inject noise, write CSV matrices
    plus a JSON sidecar echoing the full configuration.
estimate
    Fit the regression on a dataset file and write the fitted coefficients,
    residual diagnostics and a residual figure.
certify
    Compute the data certificate (xi, threshold, sigma bound, bound curve)
    for a regressor matrix.
bound
    Evaluate the certified error bound at one clean-sample count.
experiment {bound-curve,recovery,stability}
    Run a full sweep and write the report, delimited output and figures.

Exit codes: 0 success, 2 invalid config or data, 3 numerical failure,
4 certified bound violated.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .certificates import build_certificate, certificate_to_json_dict, error_bound, recovery_threshold
from .data_model import Dataset, load_dataset, load_matrix_csv, save_matrix_csv, unit_columns
from .errors import BoundViolationError, ConfigError, DataError, NumericalError, RobfitError
from .estimator import SolverOpts, solve_regression
from .generators import GeneratorSpec, NoiseSpec, gen_regressors, ground_truth_matrix, inject_noise
from .harness import (
    ExperimentConfig,
    emit_report,
    run_bound_curve,
    run_recovery_experiment,
    run_stability_experiment,
)
from .losses import LossSpec, column_norms_p

_EXIT_CONFIG = 2
_EXIT_NUMERICAL = 3
_EXIT_VIOLATION = 4


def _load_config(path: str | None) -> dict[str, Any]:
    if path is None:
        return {}
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"no such config file: {p}")
    try:
        cfg = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{p}: invalid JSON: {exc}")
    if not isinstance(cfg, dict):
        raise ConfigError(f"{p}: config root must be a JSON object")
    return cfg


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, payload: dict[str, Any]) -> None:
    path.write_text(json.dumps(payload, indent=2) + "\n")


def _regressors_from_config(cfg: dict[str, Any], seed: int | None) -> tuple[np.ndarray, dict[str, Any]]:
    """Resolve the regressor matrix named by a config.

    Accepts exactly one of "x" (CSV path), "data" (dataset path, regressor
    block used) or "generator" (spec object); defaults to a gaussian draw.
    """
    sources = [k for k in ("x", "data", "generator") if k in cfg]
    if len(sources) > 1:
        raise ConfigError(f'config names multiple regressor sources: {sources}')
    if "x" in cfg:
        x = load_matrix_csv(cfg["x"])
        echo: dict[str, Any] = {"x": cfg["x"]}
    elif "data" in cfg:
        x = load_dataset(cfg["data"]).x
        echo = {"data": cfg["data"]}
    else:
        gen_cfg = dict(cfg.get("generator", {"kind": "gaussian_static", "n": 2, "N": 200}))
        if seed is not None:
            gen_cfg["seed"] = seed
        gen = GeneratorSpec.from_json_dict(gen_cfg)
        x = gen_regressors(gen)
        echo = {"generator": gen.to_json_dict()}
    if cfg.get("normalize", False):
        x = unit_columns(x)
        echo["normalize"] = True
    return x, echo


# ---------------------------------------------------------------------------
# Subcommand handlers
# ---------------------------------------------------------------------------


def _cmd_generate(args) -> int:
    cfg = _load_config(args.config)
    known = {"generator", "noise", "m", "normalize"}
    unknown = set(cfg) - known
    if unknown:
        raise ConfigError(f"unknown generate field(s): {sorted(unknown)}")
    gen_cfg = dict(cfg.get("generator", {"kind": "gaussian_static", "n": 2, "N": 200}))
    noise_cfg = dict(cfg.get("noise", {}))
    if args.seed is not None:
        gen_cfg["seed"] = args.seed
        noise_cfg["seed"] = args.seed
    gen = GeneratorSpec.from_json_dict(gen_cfg)
    noise = NoiseSpec.from_json_dict(noise_cfg)
    m = int(cfg.get("m", 1))

    x = gen_regressors(gen)
    if cfg.get("normalize", False):
        x = unit_columns(x)
    a0 = ground_truth_matrix(m, gen.n, seed=gen.seed)
    data = inject_noise(x, a0, noise)

    out = _out_dir(args)
    save_matrix_csv(x, out / "x.csv", comments=[f"regressors {x.shape[0]}x{x.shape[1]}"])
    save_matrix_csv(data.y, out / "y.csv", comments=[f"outputs {m}x{x.shape[1]}"])
    save_matrix_csv(a0, out / "a0.csv", comments=["planted coefficients"])
    save_matrix_csv(data.e, out / "e.csv", comments=["dense noise"])
    save_matrix_csv(data.f, out / "f.csv", comments=["sparse gross errors"])
    _write_json(
        out / "dataset.json",
        {"y": "y.csv", "x": "x.csv"},
    )
    if args.format == "csv":
        from .data_model import save_dataset

        save_dataset(Dataset(y=data.y, x=x), out / "dataset.csv")
    _write_json(
        out / "meta.json",
        {
            "generator": gen.to_json_dict(),
            "noise": noise.to_json_dict(),
            "m": m,
            "normalize": bool(cfg.get("normalize", False)),
            "outlier_support": list(data.sc.one_based),
            "versions": {"robfit": __version__, "numpy": np.__version__},
        },
    )
    print(f"wrote dataset ({x.shape[0]}x{x.shape[1]}, {len(data.sc)} outliers) to {out}")
    return 0


def _cmd_estimate(args) -> int:
    cfg = _load_config(args.config)
    known = {"data", "loss", "solver", "normalize"}
    unknown = set(cfg) - known
    if unknown:
        raise ConfigError(f"unknown estimate field(s): {sorted(unknown)}")
    if "data" not in cfg:
        raise ConfigError('estimate config must provide a "data" path')
    d = load_dataset(cfg["data"])
    if cfg.get("normalize", False):
        from .data_model import normalize_columns

        d = normalize_columns(d)
    spec = LossSpec.from_json_dict(cfg.get("loss", {}))
    opts = SolverOpts.from_json_dict(cfg.get("solver", {}))
    if args.seed is not None:
        opts = SolverOpts.from_json_dict({**opts.to_json_dict(), "seed": args.seed})

    result = solve_regression(d, spec, opts)
    norms = column_norms_p(spec, result.residuals)

    out = _out_dir(args)
    payload = {
        "a_star": result.a_star.tolist(),
        "objective": result.objective,
        "converged": result.converged,
        "iterations": result.iterations,
        "outliers": list(result.outlier_estimate.one_based),
        "residual_norms": norms.tolist(),
        "loss": spec.to_json_dict(),
        "solver": opts.to_json_dict(),
        "versions": {"robfit": __version__, "numpy": np.__version__},
    }
    _write_json(out / "estimate.json", payload)
    if args.format == "csv":
        save_matrix_csv(result.a_star, out / "a_star.csv", comments=["fitted coefficients"])
        save_matrix_csv(
            norms.reshape(1, -1), out / "residual_norms.csv", comments=["residual column norms"]
        )
    from .plots import plot_residuals

    plot_residuals(norms, spec.eps0, out / "residuals.png")
    print(
        f"objective {result.objective:.6g}, {len(result.outlier_estimate)} suspected "
        f"outliers, converged={result.converged}; wrote {out / 'estimate.json'}"
    )
    return 0


def _cmd_certify(args) -> int:
    cfg = _load_config(args.config)
    known = {"x", "data", "generator", "normalize", "loss"}
    unknown = set(cfg) - known
    if unknown:
        raise ConfigError(f"unknown certify field(s): {sorted(unknown)}")
    x, echo = _regressors_from_config(cfg, args.seed)
    spec = LossSpec.from_json_dict(cfg.get("loss", {}))
    cert = build_certificate(x, spec)
    payload = certificate_to_json_dict(cert)
    payload["source"] = echo

    out = _out_dir(args)
    _write_json(out / "certificate.json", payload)
    if args.format == "csv":
        lines = ["r,B"]
        for pt in cert.bound_curve:
            lines.append(f"{pt.r},{repr(pt.value) if pt.stable else 'inf'}")
        (out / "certificate.csv").write_text("\n".join(lines) + "\n")
    from .plots import plot_certificate

    plot_certificate(payload, out / "certificate.png")
    print(
        f"xi={cert.xi:.6g} T={cert.threshold:.6g} sigma_lb={cert.sigma_lb:.6g}; "
        f"wrote {out / 'certificate.json'}"
    )
    return 0


def _cmd_bound(args) -> int:
    cfg = _load_config(args.config)
    known = {"x", "data", "generator", "normalize", "loss", "r", "d"}
    unknown = set(cfg) - known
    if unknown:
        raise ConfigError(f"unknown bound field(s): {sorted(unknown)}")
    x, echo = _regressors_from_config(cfg, args.seed)
    spec = LossSpec.from_json_dict(cfg.get("loss", {}))
    n_samples = x.shape[1]
    if "r" in cfg and "d" in cfg:
        raise ConfigError('give either "r" (clean count) or "d" (corrupted count), not both')
    if "d" in cfg:
        r = n_samples - int(cfg["d"])
    else:
        r = int(cfg.get("r", n_samples))
    if not 0 <= r <= n_samples:
        raise ConfigError(f"clean count r={r} outside 0..{n_samples}")

    from .certificates import sigma_lower_bound, xi_amplitude

    xi = xi_amplitude(x).xi
    sigma = sigma_lower_bound(x)
    value = error_bound(r, x, spec, sigma, xi=xi)
    stable = math.isfinite(value)
    payload = {
        "r": r,
        "d": n_samples - r,
        "B": value if stable else None,
        "regime": "stable" if stable else "unstable",
        "xi": xi,
        "T": recovery_threshold(xi),
        "sigma_lb": sigma,
        "N": n_samples,
        "source": echo,
    }
    out = _out_dir(args)
    _write_json(out / "bound.json", payload)
    if args.format == "csv":
        (out / "bound.csv").write_text(
            "r,d,B,xi,T,sigma_lb\n"
            + f"{r},{n_samples - r},{repr(value) if stable else 'inf'},"
            + f"{xi!r},{recovery_threshold(xi)!r},{sigma!r}\n"
        )
    print(
        f"r={r} d={n_samples - r}: "
        + (f"B={value:.6g}" if stable else "unstable (no finite bound)")
    )
    return 0


_EXPERIMENT_RUNNERS = {
    "bound-curve": run_bound_curve,
    "recovery": run_recovery_experiment,
    "stability": run_stability_experiment,
}


def _default_experiment_config(mode: str) -> dict[str, Any]:
    sweep = [
        {"outlier_fraction": f, "outlier_amplitude": 100.0,
         "dense_bound": 0.01 if mode == "stability" else 0.0, "seed": 7}
        for f in (0.0, 0.05, 0.10, 0.15, 0.20)
    ]
    return {
        "generator": {"kind": "gaussian_static", "n": 2, "N": 100, "seed": 0},
        "sweep": sweep,
        "trials": 5,
    }


def _cmd_experiment(args) -> int:
    cfg_dict = _load_config(args.config)
    if not cfg_dict:
        cfg_dict = _default_experiment_config(args.mode)
    if args.seed is not None:
        gen = dict(cfg_dict.get("generator", {}))
        gen["seed"] = args.seed
        cfg_dict["generator"] = gen
    cfg = ExperimentConfig.from_json_dict(cfg_dict)
    report = _EXPERIMENT_RUNNERS[args.mode](cfg)

    out = _out_dir(args)
    emit_report(report, out / "report.json", format="json")
    if args.format == "csv":
        emit_report(report, out / "report.csv", format="csv")
    from .plots import render_report_figures

    figures = render_report_figures(report, out)
    wrote = [str(out / "report.json")]
    if args.format == "csv":
        wrote.append(str(out / "report.csv"))
    wrote += [str(f) for f in figures]
    print(f"{args.mode}: {len(report.points)} sweep points; wrote " + ", ".join(wrote))
    if report.violations:
        raise BoundViolationError(
            f"{report.violations} trial(s) exceeded the certified error bound "
            f"(see {out / 'report.json'})"
        )
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="robfit",
        description="Robust regression with certified outlier tolerance.",
    )
    parser.add_argument("--version", action="version", version=f"robfit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--out", default=".", help="output directory (default: cwd)")
        p.add_argument("--seed", type=int, default=None, help="override generator seed")
        p.add_argument(
            "--format", choices=("json", "csv"), default="json",
            help="delimited output format (JSON reports are always written)",
        )

    common(sub.add_parser("generate", help="draw a synthetic dataset"))
    common(sub.add_parser("estimate", help="fit the regression on a dataset"))
    common(sub.add_parser("certify", help="compute the data certificate"))
    common(sub.add_parser("bound", help="evaluate the error bound at one point"))
    exp = sub.add_parser("experiment", help="run a sweep experiment")
    exp.add_argument("mode", choices=sorted(_EXPERIMENT_RUNNERS))
    common(exp)
    return parser


_HANDLERS = {
    "generate": _cmd_generate,
    "estimate": _cmd_estimate,
    "certify": _cmd_certify,
    "bound": _cmd_bound,
    "experiment": _cmd_experiment,
}


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except (ConfigError, DataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_CONFIG
    except BoundViolationError as exc:
        print(f"bound violation: {exc}", file=sys.stderr)
        return _EXIT_VIOLATION
    except (NumericalError, RobfitError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return _EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
