"""Command-line front end.

Subcommands: train, sweep, rate, counterexample, interpolate, verify,
basis, report.  Configuration comes from a flat key-value text file
(optional [section] headers are organizational only) plus key=value
overrides on the command line; unknown keys are rejected by name.  Every
invocation echoes its fully resolved configuration into the output
directory, and all artifacts are byte-deterministic.

Exit codes: 0 success, 2 configuration errors, 3 data or experiment
preconditions, 4 numerical failures (divergence, kinks, no convergence,
no interpolation), 5 a deterministic certificate failed.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .certificates import verify_bounds
from .errors import (
    ConfigError,
    DataError,
    Diverged,
    EmptyInterval,
    InsufficientData,
    InvalidValue,
    MissingFile,
    MissingGroundTruth,
    MissingSigma,
    NoConvergence,
    NoInterval,
    NotEquispaced,
    NotInterpolating,
    NotTwiceDifferentiable,
    SplineGdError,
    UnknownKey,
)
from .experiments import (
    ExperimentConfig,
    checkpoint_slacks,
    counterexample_study,
    eta_sweep,
    export_basis,
    rate_experiment,
    sample_first_layer,
    sparsity_metrics,
    write_basis_csv,
    write_counterexample_artifacts,
    write_rate_artifacts,
    write_sweep_artifacts,
)
from .funcspace import export_weight_csv, weight_g
from .landscape import Dataset
from .relu_net import NetParams, forward
from .serialize import write_json
from .svgplot import line_plot
from .trainer import min_norm_interpolant, train, write_run_artifacts

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4
EXIT_CERT = 5

_NUMERIC_ERRORS = (Diverged, NoConvergence, NotTwiceDifferentiable, NotInterpolating)
_DATA_ERRORS = (
    DataError,
    EmptyInterval,
    NotEquispaced,
    NoInterval,
    InsufficientData,
    MissingGroundTruth,
    MissingSigma,
)


def _float_list(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(",") if v.strip())


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.split(",") if v.strip())


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("true", "1", "yes"):
        return True
    if low in ("false", "0", "no"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _opt(parser):
    def parse(text: str):
        if text.strip().lower() in ("", "none"):
            return None
        return parser(text)

    return parse


# key -> (parser, default).  One flat namespace; [section] headers in the
# file are allowed but carry no meaning.
CONFIG_SCHEMA: dict[str, tuple] = {
    "design": (str, "hat"),
    "n": (int, 30),
    "sigma": (float, 0.5),
    "x_max": (float, 0.5),
    "k": (int, 100),
    "eta": (float, 0.4),
    "eta_grid": (_float_list, ()),
    "n_grid": (_int_list, ()),
    "reps": (int, 5),
    "delta": (float, 0.05),
    "seed": (int, 0),
    "max_steps": (int, 200_000),
    "log_every": (int, 100),
    "init_scheme": (str, "uniform_fanin"),
    "stop_grad_norm": (float, 0.0),
    "diff_tol": (float, 1e-8),
    "steady_window": (int, 5),
    "steady_rel_tol": (float, 1e-2),
    "beos_eps": (float, 0.25),
    "interval_lo": (_opt(float), None),
    "interval_hi": (_opt(float), None),
    "interval_c": (_opt(float), None),
    "grid_step": (_opt(float), None),
    "k_factor": (float, 2.0),
    "m_test": (int, 100_000),
    "workers": (_opt(int), None),
    "dataset_file": (_opt(str), None),
    "params_file": (_opt(str), None),
    "grid_lo": (_opt(float), None),
    "grid_hi": (_opt(float), None),
    "grid_points": (int, 201),
    "test_seed": (int, 0),
}


@dataclass
class CliConfig:
    command: str
    config_path: str | None
    outdir: Path
    overrides: list[str] = field(default_factory=list)
    plot: bool = False


def _read_pairs(path: str) -> list[tuple[str, str]]:
    p = Path(path)
    if not p.is_file():
        raise MissingFile(f"config file not found: {path}")
    pairs = []
    for lineno, raw in enumerate(p.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            continue
        for sep in ("=", ":"):
            if sep in line:
                key, value = line.split(sep, 1)
                pairs.append((key.strip(), value.strip()))
                break
        else:
            raise InvalidValue(f"line {lineno} is not 'key = value': {raw!r}")
    return pairs


def parse_config(
    config_path: str | None, overrides: list[str] | None = None
) -> dict:
    """Resolve the flat config: file pairs, then overrides, then defaults."""
    raw: dict[str, str] = {}
    if config_path is not None:
        for key, value in _read_pairs(config_path):
            if key not in CONFIG_SCHEMA:
                raise UnknownKey(key)
            raw[key] = value
    for item in overrides or []:
        if "=" not in item:
            raise InvalidValue(f"override must be key=value, got {item!r}")
        key, value = item.split("=", 1)
        key = key.strip()
        if key not in CONFIG_SCHEMA:
            raise UnknownKey(key)
        raw[key] = value.strip()

    resolved = {}
    for key, (parser, default) in CONFIG_SCHEMA.items():
        if key in raw:
            try:
                resolved[key] = parser(raw[key])
            except (ValueError, TypeError) as exc:
                raise InvalidValue(f"bad value for {key!r}: {raw[key]!r} ({exc})")
        else:
            resolved[key] = default
    return resolved


def experiment_config(cfg: dict) -> ExperimentConfig:
    return ExperimentConfig(
        design=cfg["design"],
        n=cfg["n"],
        sigma=cfg["sigma"],
        x_max=cfg["x_max"],
        k=cfg["k"],
        eta=cfg["eta"],
        eta_grid=cfg["eta_grid"],
        n_grid=cfg["n_grid"],
        reps=cfg["reps"],
        delta=cfg["delta"],
        seed=cfg["seed"],
        max_steps=cfg["max_steps"],
        log_every=cfg["log_every"],
        init_scheme=cfg["init_scheme"],
        stop_grad_norm=cfg["stop_grad_norm"],
        diff_tol=cfg["diff_tol"],
        steady_window=cfg["steady_window"],
        steady_rel_tol=cfg["steady_rel_tol"],
        beos_eps=cfg["beos_eps"],
        interval_lo=cfg["interval_lo"],
        interval_hi=cfg["interval_hi"],
        interval_c=cfg["interval_c"],
        grid_step=cfg["grid_step"],
        k_factor=cfg["k_factor"],
        m_test=cfg["m_test"],
        workers=cfg["workers"],
    )


def load_custom_dataset(path: str) -> Dataset:
    """Two-column x,y CSV (header required); x_max is max |x|."""
    p = Path(path)
    if not p.is_file():
        raise MissingFile(f"dataset file not found: {path}")
    lines = p.read_text().strip().splitlines()
    if not lines or lines[0].strip().lower().replace(" ", "") != "x,y":
        raise InvalidValue(f"dataset file {path} must start with an 'x,y' header")
    xs, ys = [], []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            sx, sy = line.split(",")
            xs.append(float(sx))
            ys.append(float(sy))
        except ValueError as exc:
            raise InvalidValue(f"bad dataset row at line {lineno}: {line!r} ({exc})")
    xs = np.asarray(xs)
    ys = np.asarray(ys)
    order = np.argsort(xs, kind="stable")
    xs, ys = xs[order], ys[order]
    return Dataset(xs=xs, ys=ys, x_max=float(np.max(np.abs(xs))))


def _make_dataset(cfg: dict) -> Dataset:
    if cfg["dataset_file"]:
        return load_custom_dataset(cfg["dataset_file"])
    return experiment_config(cfg).make_dataset(cfg["seed"])


def _load_params(cfg: dict) -> NetParams:
    path = cfg["params_file"]
    if not path:
        raise InvalidValue("this command needs params_file=<path to params.json>")
    p = Path(path)
    if not p.is_file():
        raise MissingFile(f"params file not found: {path}")
    return NetParams.from_json_dict(json.loads(p.read_text()))


def _plot_fit(outdir: Path, params: NetParams, data: Dataset) -> None:
    grid = np.linspace(data.xs[0], data.xs[-1], 400)
    series = [
        {"label": "data", "x": data.xs, "y": data.ys, "points": True,
         "color": "#7f7f7f"},
        {"label": "network", "x": grid, "y": forward(params, grid),
         "color": "#d62728"},
    ]
    if data.ground_truth is not None:
        series.insert(
            1,
            {"label": "ground truth", "x": grid, "y": data.ground_truth(grid),
             "color": "#1f77b4"},
        )
    line_plot(outdir / "fit.svg", series, title="fitted function", xlabel="x",
              ylabel="f(x)")


def _plot_curves(outdir: Path, records, eta: float) -> None:
    steps = [r.step for r in records]
    line_plot(
        outdir / "loss.svg",
        [{"label": "loss", "x": steps, "y": [r.loss for r in records]}],
        title="training loss",
        xlabel="step",
        ylabel="loss",
        logy=True,
    )
    lam_steps = [r.step for r in records if r.lambda_max_full is not None]
    lam = [r.lambda_max_full for r in records if r.lambda_max_full is not None]
    if lam:
        line_plot(
            outdir / "curvature.svg",
            [
                {"label": "lambda_max", "x": lam_steps, "y": lam},
                {"label": "2/eta", "x": [lam_steps[0], lam_steps[-1]],
                 "y": [2.0 / eta, 2.0 / eta], "color": "#7f7f7f"},
            ],
            title="top curvature",
            xlabel="step",
            ylabel="lambda_max",
        )


def cmd_train(cfg: dict, outdir: Path, plot: bool) -> int:
    exp = experiment_config(cfg)
    data = _make_dataset(cfg)
    result = train(exp.train_config(), data)
    write_run_artifacts(outdir, result)
    tv_slack, gn_slack, checked = checkpoint_slacks(result.records, data.x_max)
    certs = {
        "final": result.summary.certificates,
        "min_tv_budget_slack": tv_slack,
        "min_gn_lower_slack": gn_slack,
        "checked_checkpoints": checked,
    }
    hard = True
    if result.summary.certificates is not None:
        fin = result.summary.certificates
        hard = fin["tv_budget_pass"] and fin["gn_lower_pass"] and fin["quad_pass"]
    for slack in (tv_slack, gn_slack):
        if slack is not None and slack < -1e-8:
            hard = False
    certs["hard_pass"] = hard
    write_json(outdir / "certificates.json", certs)
    write_json(outdir / "sparsity.json", sparsity_metrics(result.params, data))
    export_weight_csv(
        weight_g(data),
        np.linspace(data.xs[0], data.xs[-1], 401),
        outdir / "weight_profile.csv",
    )
    if plot:
        _plot_fit(outdir, result.params, data)
        _plot_curves(outdir, result.records, exp.eta)
    return EXIT_OK if hard else EXIT_CERT


def cmd_sweep(cfg: dict, outdir: Path, plot: bool) -> int:
    result = eta_sweep(experiment_config(cfg))
    write_sweep_artifacts(outdir, result)
    if plot:
        med = result.medians()
        etas = [m["eta"] for m in med if m.get("median_mse_interval") is not None]
        line_plot(
            outdir / "sweep_mse.svg",
            [
                {
                    "label": "median interval MSE",
                    "x": etas,
                    "y": [m["median_mse_interval"] for m in med
                          if m.get("median_mse_interval") is not None],
                    "points": True,
                }
            ],
            title="interval MSE across step sizes",
            xlabel="eta",
            ylabel="MSE",
            logx=True,
            logy=True,
        )
        line_plot(
            outdir / "sweep_tv.svg",
            [
                {
                    "label": "median weighted TV",
                    "x": [m["eta"] for m in med
                          if m.get("median_weighted_tv") is not None],
                    "y": [m["median_weighted_tv"] for m in med
                          if m.get("median_weighted_tv") is not None],
                    "points": True,
                }
            ],
            title="weighted TV across step sizes",
            xlabel="eta",
            ylabel="weighted TV",
            logx=True,
        )
    return EXIT_OK if result.hard_pass() else EXIT_CERT


def cmd_rate(cfg: dict, outdir: Path, plot: bool) -> int:
    result = rate_experiment(experiment_config(cfg))
    write_rate_artifacts(outdir, result)
    if plot:
        series = [
            {"label": "median interval MSE", "x": result.n_intervals,
             "y": result.medians, "points": True},
        ]
        if result.slope is not None:
            fit_y = [
                float(np.exp(result.intercept + result.slope * np.log(ni)))
                for ni in result.n_intervals
            ]
            series.append(
                {"label": f"fit slope {result.slope:.3f}",
                 "x": result.n_intervals, "y": fit_y}
            )
        line_plot(
            outdir / "rate.svg",
            series,
            title="interval MSE against sample size",
            xlabel="points in interval",
            ylabel="MSE",
            logx=True,
            logy=True,
        )
    return EXIT_OK


def cmd_counterexample(cfg: dict, outdir: Path, plot: bool) -> int:
    rows = counterexample_study(experiment_config(cfg))
    write_counterexample_artifacts(outdir, rows)
    if plot:
        sizes = sorted({r.n for r in rows})
        med = [
            float(np.median([r.weighted_tv for r in rows if r.n == n]))
            for n in sizes
        ]
        line_plot(
            outdir / "counterexample_tv.svg",
            [{"label": "median weighted TV", "x": sizes, "y": med,
              "points": True}],
            title="interpolant weighted TV against sample size",
            xlabel="n",
            ylabel="weighted TV",
            logx=True,
            logy=True,
        )
    return EXIT_OK if all(r.hard_pass() for r in rows) else EXIT_CERT


def cmd_interpolate(cfg: dict, outdir: Path, plot: bool) -> int:
    data = _make_dataset(cfg)
    w1, b1 = sample_first_layer(cfg["k"], data.xs, cfg["seed"])
    params, rms = min_norm_interpolant(w1, b1, data, strict=True)
    write_json(outdir / "params.json", params.to_json_dict())
    cert = verify_bounds(
        params, data, cfg["eta"], delta=cfg["delta"], interp_rms=rms
    )
    write_json(
        outdir / "certificates.json",
        {"residual_rms": rms, "checkpoint": cert.to_json_dict(),
         "hard_pass": cert.hard_pass()},
    )
    if plot:
        _plot_fit(outdir, params, data)
    return EXIT_OK if cert.hard_pass() else EXIT_CERT


def cmd_verify(cfg: dict, outdir: Path, plot: bool) -> int:
    data = _make_dataset(cfg)
    params = _load_params(cfg)
    cert = verify_bounds(params, data, cfg["eta"], delta=cfg["delta"])
    write_json(
        outdir / "certificates.json",
        {"checkpoint": cert.to_json_dict(), "hard_pass": cert.hard_pass()},
    )
    if plot:
        _plot_fit(outdir, params, data)
    return EXIT_OK if cert.hard_pass() else EXIT_CERT


def cmd_basis(cfg: dict, outdir: Path, plot: bool) -> int:
    params = _load_params(cfg)
    data = _make_dataset(cfg)
    lo = cfg["grid_lo"] if cfg["grid_lo"] is not None else float(data.xs[0])
    hi = cfg["grid_hi"] if cfg["grid_hi"] is not None else float(data.xs[-1])
    grid, basis = export_basis(params, lo, hi, cfg["grid_points"])
    recon = basis.sum(axis=0) + params.b2
    drift = float(np.max(np.abs(recon - forward(params, grid))))
    if drift > 1e-10:
        raise SplineGdError(f"basis decomposition drifts from forward: {drift:.3e}")
    write_basis_csv(outdir / "basis.csv", grid, basis)
    if plot:
        series = [
            {"x": grid, "y": basis[j], "color": "#bbbbbb"}
            for j in range(basis.shape[0])
        ]
        series.append(
            {"label": "network", "x": grid, "y": recon, "color": "#d62728"}
        )
        line_plot(outdir / "basis.svg", series, title="per-unit basis",
                  xlabel="x", ylabel="contribution")
    return EXIT_OK


def cmd_report(cfg: dict, outdir: Path, plot: bool) -> int:
    found = False
    failed = False
    for name in ("summary.json", "certificates.json", "rate_summary.json"):
        path = outdir / name
        if not path.is_file():
            continue
        found = True
        obj = json.loads(path.read_text())
        print(f"== {name}")
        if name == "summary.json":
            rec = obj["final_record"]
            print(f"  final step {rec['step']}: loss {rec['loss']:.6g}, "
                  f"weighted TV {rec['weighted_tv']:.6g}, "
                  f"knots {rec['knot_count']}")
            print(f"  stable: {obj['stable']}  optimized: {obj['optimized']}  "
                  f"beos_step: {obj['beos_step']}")
        if "hard_pass" in obj:
            verdict = "PASS" if obj["hard_pass"] else "FAIL"
            print(f"  deterministic certificates: {verdict}")
            failed = failed or not obj["hard_pass"]
        if "slope" in obj:
            print(f"  rate slope: {obj['slope']:.4f}")
    if not found:
        raise MissingFile(f"no run artifacts found under {outdir}")
    return EXIT_CERT if failed else EXIT_OK


COMMANDS = {
    "train": cmd_train,
    "sweep": cmd_sweep,
    "rate": cmd_rate,
    "counterexample": cmd_counterexample,
    "interpolate": cmd_interpolate,
    "verify": cmd_verify,
    "basis": cmd_basis,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="splinegd",
        description="train univariate ReLU networks and check stability "
        "and total-variation certificates",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", default=None, help="flat key=value file")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--plot", action="store_true", help="emit SVG plots")
        p.add_argument(
            "overrides",
            nargs="*",
            help="key=value pairs overriding the config file",
        )
    return parser


def run(cli: CliConfig) -> int:
    cfg = parse_config(cli.config_path, cli.overrides)
    cli.outdir.mkdir(parents=True, exist_ok=True)
    if cli.command != "report":
        write_json(
            cli.outdir / "resolved_config.json",
            {"command": cli.command, "config": cfg},
        )
    return COMMANDS[cli.command](cfg, cli.outdir, cli.plot)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    outdir = Path(args.out) if args.out else Path("runs") / args.command
    cli = CliConfig(
        command=args.command,
        config_path=args.config,
        outdir=outdir,
        overrides=list(args.overrides),
        plot=args.plot,
    )
    try:
        return run(cli)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _DATA_ERRORS as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except _NUMERIC_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except SplineGdError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
