"""Seeded experiment drivers.

Two fixed designs are generated here: the "hat" regression problem
(equispaced inputs, a tent-shaped ground truth, Gaussian label noise) and
the pure-noise counterexample design on an equispaced grid.  On top of the
single-run trainer this module sweeps the step size, measures interval
MSE against sample size, studies minimum-norm interpolants, and exports
the per-unit basis decomposition of a trained network.

Sweep cells are independent (dataset seed and initialization seed are
derived from the cell's replicate index), so they can run under a bounded
process pool; results are assembled in job order, which keeps every
output deterministic regardless of scheduling.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import rngs
from .errors import (
    DataError,
    Diverged,
    EmptyInterval,
    InsufficientData,
    InvalidConfig,
    MissingGroundTruth,
    MissingSigma,
)
from .funcspace import (
    interpolant_tv_lower_bound,
    interval_mse_mask,
    middle_window,
    select_interval,
    stability_tv_bound,
    tv_on_interval,
    weight_g,
    weighted_tv,
)
from .landscape import Dataset, gn_top_pair, loss_hessian
from .relu_net import NetParams, extract_knots, forward
from .serialize import write_csv, write_json
from .trainer import (
    TrainConfig,
    TrainRecord,
    min_norm_interpolant,
    train,
)

SLACK_TOL = 1e-8


def hat_truth(x):
    """Tent function: 2x+1 left of zero, -2x+1 right of it, peak f(0)=1."""
    x = np.asarray(x, dtype=float)
    return np.where(x <= 0.0, 2.0 * x + 1.0, -2.0 * x + 1.0)


def zero_truth(x):
    x = np.asarray(x, dtype=float)
    return np.zeros_like(x)


def gen_hat_dataset(
    n: int = 30, sigma: float = 0.5, seed: int = 0, x_max: float = 0.5
) -> Dataset:
    """n equispaced points on [-x_max, x_max], tent ground truth, Gaussian
    noise of scale sigma from the portable inverse-CDF stream."""
    xs = np.linspace(-x_max, x_max, n)
    noises = rngs.gaussians(rngs.generator(seed, rngs.DOMAIN_NOISE), sigma, n)
    clean = hat_truth(xs)
    return Dataset(
        xs=xs,
        ys=clean + noises,
        x_max=x_max,
        ground_truth=hat_truth,
        sigma=sigma,
        noises=noises,
    )


def gen_counterexample(
    n: int, sigma: float, seed: int = 0, x_max: float = 1.0
) -> Dataset:
    """Equispaced grid spanning [-x_max, x_max] with zero ground truth:
    the labels are pure noise, so any interpolant must oscillate."""
    xs = np.linspace(-x_max, x_max, n)
    noises = rngs.gaussians(rngs.generator(seed, rngs.DOMAIN_NOISE), sigma, n)
    return Dataset(
        xs=xs,
        ys=noises.copy(),
        x_max=x_max,
        ground_truth=zero_truth,
        sigma=sigma,
        noises=noises,
    )


def mse(
    params: NetParams, data: Dataset, interval: Optional[tuple[float, float]] = None
) -> float:
    """Mean squared error against the ground truth on the design points,
    optionally restricted to a closed interval."""
    if data.ground_truth is None:
        raise MissingGroundTruth("MSE needs a ground-truth function")
    if interval is None:
        mask = np.ones(data.n, dtype=bool)
    else:
        mask = interval_mse_mask(data, interval[0], interval[1])
    diff = forward(params, data.xs[mask]) - data.ground_truth(data.xs[mask])
    return float(np.mean(diff * diff))


def generalization_gap(
    params: NetParams,
    data: Dataset,
    interval: tuple[float, float],
    test_seed: int = 0,
    m: int = 100_000,
) -> float:
    """|test squared error - empirical squared error| on an interval.

    Test points are uniform on the interval with fresh label noise; both
    errors are plain squared errors (no 1/2 factor).
    """
    if data.ground_truth is None:
        raise MissingGroundTruth("generalization gap needs a ground truth")
    if data.sigma is None:
        raise MissingSigma("generalization gap needs the noise level")
    if m < 1:
        raise InvalidConfig(f"need at least one test point, got {m}")
    lo, hi = interval
    mask = interval_mse_mask(data, lo, hi)
    rng = rngs.generator(test_seed, rngs.DOMAIN_TEST)
    x_test = rngs.uniform_range(rng, lo, hi, m)
    y_test = np.asarray(data.ground_truth(x_test)) + rngs.gaussians(
        rng, data.sigma, m
    )
    test_err = float(np.mean((forward(params, x_test) - y_test) ** 2))
    emp = forward(params, data.xs[mask]) - data.ys[mask]
    emp_err = float(np.mean(emp * emp))
    return abs(test_err - emp_err)


@dataclass(frozen=True)
class ExperimentConfig:
    design: str = "hat"
    n: int = 30
    sigma: float = 0.5
    x_max: float = 0.5
    k: int = 100
    eta: float = 0.4
    eta_grid: tuple[float, ...] = ()
    n_grid: tuple[int, ...] = ()
    reps: int = 5
    delta: float = 0.05
    seed: int = 0
    max_steps: int = 200_000
    log_every: int = 100
    init_scheme: str = "uniform_fanin"
    stop_grad_norm: float = 0.0
    diff_tol: float = 1e-8
    steady_window: int = 5
    steady_rel_tol: float = 1e-2
    beos_eps: float = 0.25
    interval_lo: Optional[float] = None
    interval_hi: Optional[float] = None
    interval_c: Optional[float] = None
    grid_step: Optional[float] = None
    k_factor: float = 2.0
    m_test: int = 100_000
    workers: Optional[int] = None

    def __post_init__(self):
        if not 0.0 < self.delta < 1.0:
            raise InvalidConfig(f"delta must lie in (0, 1), got {self.delta}")
        if self.reps < 1:
            raise InvalidConfig(f"reps must be positive, got {self.reps}")
        if self.sigma < 0:
            raise InvalidConfig(f"sigma must be nonnegative, got {self.sigma}")

    def train_config(self, eta: Optional[float] = None, seed: Optional[int] = None) -> TrainConfig:
        return TrainConfig(
            k=self.k,
            eta=self.eta if eta is None else eta,
            seed=self.seed if seed is None else seed,
            init_scheme=self.init_scheme,
            max_steps=self.max_steps,
            log_every=self.log_every,
            stop_grad_norm=self.stop_grad_norm,
            diff_tol=self.diff_tol,
            steady_window=self.steady_window,
            steady_rel_tol=self.steady_rel_tol,
            beos_eps=self.beos_eps,
            delta=self.delta,
        )

    def make_dataset(self, seed: int, n: Optional[int] = None) -> Dataset:
        n = self.n if n is None else n
        if self.design == "hat":
            return gen_hat_dataset(n, self.sigma, seed, self.x_max)
        if self.design == "counterexample":
            return gen_counterexample(n, self.sigma, seed, self.x_max)
        raise InvalidConfig(f"unknown design {self.design!r}")

    def resolve_interval(self, data: Dataset) -> tuple[float, float]:
        """Evaluation interval: explicit endpoints win; otherwise a weight
        threshold c selects the widest qualifying interval; otherwise the
        middle two thirds of the data range."""
        if self.interval_lo is not None and self.interval_hi is not None:
            return self.interval_lo, self.interval_hi
        if self.interval_c is not None:
            report = select_interval(weight_g(data), self.interval_c, self.grid_step)
            return report.lo, report.hi
        return -2.0 * data.x_max / 3.0, 2.0 * data.x_max / 3.0


def _worker_count(config: ExperimentConfig) -> int:
    if config.workers is not None:
        return max(1, config.workers)
    env = os.environ.get("SPLINEGD_WORKERS")
    if env:
        return max(1, int(env))
    return max(1, min(4, os.cpu_count() or 1))


def _pool_map(fn, jobs, workers: int):
    if workers <= 1 or len(jobs) <= 1:
        return [fn(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs, chunksize=1))


# ---------------------------------------------------------------------------
# Step-size sweep


@dataclass
class SweepCell:
    eta: float
    rep: int
    seed: int
    diverged: bool
    steps: Optional[int] = None
    final: Optional[TrainRecord] = None
    mse_interval: Optional[float] = None
    param_inf_norm: Optional[float] = None
    stable: Optional[bool] = None
    beos_step: Optional[int] = None
    steady_step: Optional[int] = None
    optimized: Optional[bool] = None
    optimized_vs_sigma: Optional[bool] = None
    min_tv_budget_slack: Optional[float] = None
    min_gn_lower_slack: Optional[float] = None
    checked_checkpoints: int = 0
    final_certs: Optional[dict] = None
    final_params: Optional[NetParams] = None
    records: Optional[list[TrainRecord]] = None


def checkpoint_slacks(
    records: list[TrainRecord], x_max: float
) -> tuple[Optional[float], Optional[float], int]:
    """Min slack over logged checkpoints of the two hard per-checkpoint
    certificates (TV budget at lam = lambda_max_full, and the Gauss-Newton
    lower bound), computed from record fields alone."""
    tv_slacks, gn_slacks = [], []
    for r in records:
        if r.lambda_max_full is None or r.lambda_max_gn is None:
            continue
        rhs = stability_tv_bound(r.loss, x_max, lam=r.lambda_max_full)
        tv_slacks.append(rhs - r.weighted_tv)
        gn_slacks.append(r.lambda_max_gn - (1.0 + 2.0 * r.weighted_tv))
    if not tv_slacks:
        return None, None, 0
    return min(tv_slacks), min(gn_slacks), len(tv_slacks)


def _sweep_cell(job) -> SweepCell:
    config, eta, rep, keep_records = job
    seed = config.seed + rep
    data = config.make_dataset(seed)
    cell = SweepCell(eta=eta, rep=rep, seed=seed, diverged=False)
    try:
        result = train(config.train_config(eta=eta, seed=seed), data)
    except Diverged:
        cell.diverged = True
        return cell
    summary = result.summary
    cell.steps = result.records[-1].step
    cell.final = result.records[-1]
    try:
        cell.mse_interval = mse(result.params, data, config.resolve_interval(data))
    except EmptyInterval:
        cell.mse_interval = None
    cell.param_inf_norm = summary.param_inf_norm
    cell.stable = summary.stable
    cell.beos_step = summary.beos_step
    cell.steady_step = summary.steady_step
    cell.optimized = summary.optimized
    cell.optimized_vs_sigma = summary.optimized_vs_sigma
    tv_slack, gn_slack, checked = checkpoint_slacks(result.records, data.x_max)
    cell.min_tv_budget_slack = tv_slack
    cell.min_gn_lower_slack = gn_slack
    cell.checked_checkpoints = checked
    cell.final_certs = summary.certificates
    cell.final_params = result.params
    if keep_records:
        cell.records = result.records
    return cell


@dataclass
class SweepResult:
    config: ExperimentConfig
    cells: list[SweepCell]

    def cells_for(self, eta: float) -> list[SweepCell]:
        return [c for c in self.cells if c.eta == eta and not c.diverged]

    def medians(self) -> list[dict]:
        rows = []
        for eta in self.config.eta_grid:
            cells = self.cells_for(eta)
            if not cells:
                rows.append({"eta": eta, "cells": 0})
                continue

            def med(getter):
                vals = [getter(c) for c in cells]
                vals = [v for v in vals if v is not None]
                return float(np.median(vals)) if vals else None

            rows.append(
                {
                    "eta": eta,
                    "cells": len(cells),
                    "median_final_loss": med(lambda c: c.final.loss),
                    "median_final_mse": med(lambda c: c.final.mse),
                    "median_mse_interval": med(lambda c: c.mse_interval),
                    "median_weighted_tv": med(lambda c: c.final.weighted_tv),
                    "median_tv_plain": med(lambda c: c.final.tv_plain),
                    "median_knot_count": med(lambda c: c.final.knot_count),
                    "median_lambda_max_full": med(lambda c: c.final.lambda_max_full),
                }
            )
        return rows

    def hard_pass(self) -> bool:
        for cell in self.cells:
            if cell.diverged:
                continue
            for slack in (cell.min_tv_budget_slack, cell.min_gn_lower_slack):
                if slack is not None and slack < -SLACK_TOL:
                    return False
        return True


SWEEP_CSV_HEADER = [
    "eta",
    "rep",
    "seed",
    "steps",
    "final_loss",
    "final_mse",
    "mse_interval",
    "weighted_tv",
    "tv_plain",
    "knot_count",
    "lambda_max_full",
    "lambda_max_gn",
    "diff_margin",
    "param_inf_norm",
    "stable",
    "beos_step",
    "steady_step",
    "optimized",
    "optimized_vs_sigma",
    "min_tv_budget_slack",
    "min_gn_lower_slack",
    "checked_checkpoints",
    "diverged",
]


def eta_sweep(config: ExperimentConfig, keep_records: bool = False) -> SweepResult:
    """Train reps runs per step size; cell (eta, rep) uses dataset seed and
    init seed (config.seed + rep), so a replicate shares its data across
    the whole eta grid."""
    if not config.eta_grid:
        raise InvalidConfig("eta_sweep needs a nonempty eta_grid")
    jobs = [
        (config, eta, rep, keep_records)
        for eta in config.eta_grid
        for rep in range(config.reps)
    ]
    cells = _pool_map(_sweep_cell, jobs, _worker_count(config))
    return SweepResult(config=config, cells=cells)


def sweep_csv_rows(result: SweepResult) -> list[list]:
    rows = []
    for c in result.cells:
        f = c.final
        rows.append(
            [
                c.eta,
                c.rep,
                c.seed,
                c.steps,
                f.loss if f else None,
                f.mse if f else None,
                c.mse_interval,
                f.weighted_tv if f else None,
                f.tv_plain if f else None,
                f.knot_count if f else None,
                f.lambda_max_full if f else None,
                f.lambda_max_gn if f else None,
                f.diff_margin if f else None,
                c.param_inf_norm,
                c.stable,
                c.beos_step,
                c.steady_step,
                c.optimized,
                c.optimized_vs_sigma,
                c.min_tv_budget_slack,
                c.min_gn_lower_slack,
                c.checked_checkpoints,
                c.diverged,
            ]
        )
    return rows


def write_sweep_artifacts(outdir: str | Path, result: SweepResult) -> None:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    write_csv(outdir / "sweep.csv", SWEEP_CSV_HEADER, sweep_csv_rows(result))

    median_rows = result.medians()
    header = [
        "eta",
        "cells",
        "median_final_loss",
        "median_final_mse",
        "median_mse_interval",
        "median_weighted_tv",
        "median_tv_plain",
        "median_knot_count",
        "median_lambda_max_full",
    ]
    write_csv(
        outdir / "medians.csv",
        header,
        ([row.get(col) for col in header] for row in median_rows),
    )

    certs = {
        "hard_pass": result.hard_pass(),
        "cells": [
            {
                "eta": c.eta,
                "rep": c.rep,
                "diverged": c.diverged,
                "min_tv_budget_slack": c.min_tv_budget_slack,
                "min_gn_lower_slack": c.min_gn_lower_slack,
                "checked_checkpoints": c.checked_checkpoints,
                "final": c.final_certs,
            }
            for c in result.cells
        ],
    }
    write_json(outdir / "certificates.json", certs)


# ---------------------------------------------------------------------------
# Interval MSE against sample size


@dataclass
class RateRow:
    n: int
    rep: int
    seed: int
    n_interval: int
    mse_interval: Optional[float]
    final_loss: Optional[float]
    optimized: Optional[bool]
    diverged: bool
    included: bool


@dataclass
class RateResult:
    config: ExperimentConfig
    rows: list[RateRow]
    sizes: list[int]
    medians: list[float]
    n_intervals: list[int]
    slope: Optional[float]
    intercept: Optional[float]
    noiseless_control: bool = False


def _rate_cell(job) -> RateRow:
    config, n, rep = job
    seed = config.seed + rep
    data = config.make_dataset(seed, n=n)
    interval = config.resolve_interval(data)
    n_int = int(np.sum((data.xs >= interval[0]) & (data.xs <= interval[1])))
    row = RateRow(
        n=n,
        rep=rep,
        seed=seed,
        n_interval=n_int,
        mse_interval=None,
        final_loss=None,
        optimized=None,
        diverged=False,
        included=False,
    )
    try:
        result = train(config.train_config(seed=seed), data)
    except Diverged:
        row.diverged = True
        return row
    row.final_loss = result.records[-1].loss
    row.optimized = result.summary.optimized
    try:
        row.mse_interval = mse(result.params, data, interval)
    except EmptyInterval:
        return row
    return row


def rate_experiment(config: ExperimentConfig) -> RateResult:
    """Median interval MSE against sample size, with a log-log slope fit.

    Cells that fail the optimized check (final loss above the ground-truth
    floor) are kept in the table but excluded from the fit.  Needs at
    least four sizes with a valid median.  A sigma=0 run is a noiseless
    control: the optimized floor is exactly zero there, so the exclusion
    rule is suspended, the slope fit is skipped, and the result carries a
    noiseless_control flag instead.
    """
    if len(config.n_grid) < 4:
        raise InsufficientData(
            f"need at least 4 sizes in n_grid, got {len(config.n_grid)}"
        )
    noiseless = config.sigma == 0.0
    jobs = [(config, n, rep) for n in config.n_grid for rep in range(config.reps)]
    rows = _pool_map(_rate_cell, jobs, _worker_count(config))
    for row in rows:
        has_mse = row.mse_interval is not None
        row.included = has_mse and (noiseless or bool(row.optimized))

    sizes, medians, n_ints = [], [], []
    for n in config.n_grid:
        vals = [r.mse_interval for r in rows if r.n == n and r.included]
        if not vals:
            continue
        sizes.append(n)
        medians.append(float(np.median(vals)))
        n_ints.append(next(r.n_interval for r in rows if r.n == n))
    if noiseless:
        return RateResult(
            config=config,
            rows=rows,
            sizes=sizes,
            medians=medians,
            n_intervals=n_ints,
            slope=None,
            intercept=None,
            noiseless_control=True,
        )
    if len(sizes) < 4:
        raise InsufficientData(
            f"only {len(sizes)} sizes have optimized cells, need at least 4"
        )
    slope, intercept = np.polyfit(np.log(n_ints), np.log(medians), 1)
    return RateResult(
        config=config,
        rows=rows,
        sizes=sizes,
        medians=medians,
        n_intervals=n_ints,
        slope=float(slope),
        intercept=float(intercept),
    )


RATE_CSV_HEADER = [
    "n",
    "rep",
    "seed",
    "n_interval",
    "mse_interval",
    "final_loss",
    "optimized",
    "diverged",
    "included",
]


def write_rate_artifacts(outdir: str | Path, result: RateResult) -> None:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    write_csv(
        outdir / "rate.csv",
        RATE_CSV_HEADER,
        (
            [r.n, r.rep, r.seed, r.n_interval, r.mse_interval, r.final_loss,
             r.optimized, r.diverged, r.included]
            for r in result.rows
        ),
    )
    write_json(
        outdir / "rate_summary.json",
        {
            "slope": result.slope,
            "intercept": result.intercept,
            "sizes": result.sizes,
            "n_intervals": result.n_intervals,
            "median_mse": result.medians,
            "noiseless_control": result.noiseless_control,
        },
    )


# ---------------------------------------------------------------------------
# Minimum-norm interpolants on the pure-noise design


def sample_first_layer(
    k: int, xs: np.ndarray, seed: int = 0
) -> tuple[np.ndarray, np.ndarray]:
    """Frozen first layer with unit slopes and one random kink per
    inter-datum gap, cycling through the gaps: w1 = +-1, b1 = -w1 * t.

    On the sample grid a hinge only contributes through the gap its kink
    lands in, so i.i.d. kink positions leave gaps empty and the feature
    matrix rank deficient even at k = n.  Covering every gap (k >= n - 1)
    plus the constant column makes the restricted feature map full rank,
    so the second-layer least squares interpolates any labels.  Kinks stay
    one percent of the gap away from the data points, which keeps the
    interpolants twice differentiable.
    """
    xs = np.asarray(xs, dtype=float)
    if xs.ndim != 1 or xs.size < 2:
        raise DataError("need at least two sample points to place kinks")
    rng = rngs.generator(seed, rngs.DOMAIN_INIT)
    signs = np.where(rngs.uniforms(rng, k) < 0.5, -1.0, 1.0)
    gaps = np.arange(k) % (xs.size - 1)
    lo = xs[gaps]
    width = xs[gaps + 1] - lo
    u = rngs.uniforms(rng, k)
    knots = lo + width * (0.01 + 0.98 * u)
    return signs, -signs * knots


@dataclass
class CounterRow:
    n: int
    rep: int
    seed: int
    k: int
    residual_rms: float
    weighted_tv: float
    middle_tv: float
    lower_plain: float
    lower_weighted: float
    lambda_max_full: float
    lambda_max_gn: float
    gn_lower_slack: float
    middle_slack: float

    def hard_pass(self) -> bool:
        return self.gn_lower_slack >= -SLACK_TOL and self.middle_slack >= -SLACK_TOL


def _counter_cell(job) -> CounterRow:
    config, n, rep = job
    seed = config.seed + rep
    data = gen_counterexample(n, config.sigma, seed, config.x_max)
    k = int(round(config.k_factor * n))
    w1, b1 = sample_first_layer(k, data.xs, seed)
    params, rms = min_norm_interpolant(w1, b1, data, strict=True)

    weight = weight_g(data)
    knots = extract_knots(params)
    wtv = weighted_tv(knots, weight)
    lo, hi = middle_window(n)
    mid_tv = tv_on_interval(knots, float(data.xs[lo]), float(data.xs[hi]))
    lower_plain = interpolant_tv_lower_bound(data, mode="plain")
    lower_weighted = interpolant_tv_lower_bound(data, mode="weighted")

    full, _, _ = loss_hessian(params, data, config.diff_tol)
    lam_full = float(np.linalg.eigvalsh(full)[-1])
    lam_gn = gn_top_pair(params, data)[0]
    return CounterRow(
        n=n,
        rep=rep,
        seed=seed,
        k=k,
        residual_rms=rms,
        weighted_tv=wtv,
        middle_tv=mid_tv,
        lower_plain=lower_plain,
        lower_weighted=lower_weighted,
        lambda_max_full=lam_full,
        lambda_max_gn=lam_gn,
        gn_lower_slack=lam_full - (1.0 + 2.0 * wtv),
        middle_slack=mid_tv - lower_plain,
    )


def counterexample_study(config: ExperimentConfig) -> list[CounterRow]:
    """Minimum-norm interpolants of pure noise at several sample sizes.

    Each cell freezes a random first layer with k = k_factor * n units,
    solves the second layer exactly, and records how the weighted TV and
    the top curvature blow up with n.
    """
    if not config.n_grid:
        raise InvalidConfig("counterexample_study needs a nonempty n_grid")
    jobs = [(config, n, rep) for n in config.n_grid for rep in range(config.reps)]
    return _pool_map(_counter_cell, jobs, _worker_count(config))


COUNTER_CSV_HEADER = [
    "n",
    "rep",
    "seed",
    "k",
    "residual_rms",
    "weighted_tv",
    "middle_tv",
    "lower_plain",
    "lower_weighted",
    "lambda_max_full",
    "lambda_max_gn",
    "gn_lower_slack",
    "middle_slack",
]


def write_counterexample_artifacts(
    outdir: str | Path, rows: list[CounterRow]
) -> None:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    write_csv(
        outdir / "counterexample.csv",
        COUNTER_CSV_HEADER,
        (
            [r.n, r.rep, r.seed, r.k, r.residual_rms, r.weighted_tv, r.middle_tv,
             r.lower_plain, r.lower_weighted, r.lambda_max_full, r.lambda_max_gn,
             r.gn_lower_slack, r.middle_slack]
            for r in rows
        ),
    )
    write_json(
        outdir / "certificates.json",
        {
            "hard_pass": all(r.hard_pass() for r in rows),
            "cells": [
                {
                    "n": r.n,
                    "rep": r.rep,
                    "gn_lower_slack": r.gn_lower_slack,
                    "middle_slack": r.middle_slack,
                }
                for r in rows
            ],
        },
    )


# ---------------------------------------------------------------------------
# Diagnostics on a single network


def sparsity_metrics(
    params: NetParams, data: Dataset, dslope_tol: float = 1e-12
) -> dict:
    """Knot statistics of the trained function inside the data range:
    effective count, total |dslope| mass, location quantiles, and the
    closest approach of a knot to a design point."""
    knots = extract_knots(params, dslope_zero_tol=dslope_tol)
    lo, hi = float(data.xs[0]), float(data.xs[-1])
    inside = (knots.ts >= lo) & (knots.ts <= hi) & (np.abs(knots.dslopes) > dslope_tol)
    ts = knots.ts[inside]
    out = {
        "knot_count": int(np.sum(inside)),
        "dslope_l1": float(np.sum(np.abs(knots.dslopes[inside]))),
        "min_knot_to_datum": None,
        "q10": None,
        "q25": None,
        "q50": None,
        "q75": None,
        "q90": None,
    }
    if ts.size:
        dists = np.min(np.abs(ts[:, None] - data.xs[None, :]), axis=1)
        out["min_knot_to_datum"] = float(np.min(dists))
        q = np.quantile(ts, [0.10, 0.25, 0.50, 0.75, 0.90])
        out.update(q10=float(q[0]), q25=float(q[1]), q50=float(q[2]),
                   q75=float(q[3]), q90=float(q[4]))
    return out


def export_basis(
    params: NetParams, grid_lo: float, grid_hi: float, m_points: int
) -> tuple[np.ndarray, np.ndarray]:
    """Per-unit contributions w2[j]*relu(w1[j]*x + b1[j]) on a uniform
    grid, shape (k, m).  Column sums plus b2 reproduce the forward pass."""
    if m_points < 2:
        raise InvalidConfig(f"need at least two grid points, got {m_points}")
    grid = np.linspace(grid_lo, grid_hi, m_points)
    pre = params.w1[:, None] * grid[None, :] + params.b1[:, None]
    basis = params.w2[:, None] * np.maximum(pre, 0.0)
    return grid, basis


def write_basis_csv(path: str | Path, grid: np.ndarray, basis: np.ndarray) -> None:
    header = ["unit"] + [f"x{i}" for i in range(grid.size)]
    rows = [["x"] + list(grid)]
    for j in range(basis.shape[0]):
        rows.append([j] + list(basis[j]))
    write_csv(path, header, rows)
