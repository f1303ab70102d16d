"""Full-batch gradient descent with curvature logging.

train() runs plain GD on the half-MSE loss, logging a TrainRecord every
log_every steps and at the final step.  Each logged checkpoint carries the
loss, the top curvatures of the full and Gauss-Newton Hessians, the
weighted and plain total variation of the current network function, and
the differentiability margin; checkpoints that sit on a ReLU kink skip the
spectral fields instead of aborting the run.  Runs are deterministic
functions of (config, data).
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .certificates import verify_bounds
from .errors import (
    Diverged,
    InvalidConfig,
    MissingGroundTruth,
    MissingSigma,
    NotInterpolating,
    NotTwiceDifferentiable,
)
from .funcspace import EmpiricalWeight, tv_on_interval, weight_g, weighted_tv
from .landscape import (
    Dataset,
    beos_first_index,
    gn_top_pair,
    is_stable,
    loss,
    loss_gradient,
    loss_hessian,
)
from .relu_net import (
    DEFAULT_DIFF_TOL,
    NetParams,
    differentiability_margin,
    extract_knots,
    forward,
    init_params,
)
from .serialize import write_csv, write_json

RECORDS_CSV_HEADER = [
    "step",
    "loss",
    "mse",
    "grad_norm",
    "lambda_max_full",
    "lambda_max_gn",
    "weighted_tv",
    "tv_plain",
    "knot_count",
    "diff_margin",
]


@dataclass(frozen=True)
class TrainConfig:
    k: int
    eta: float
    seed: int = 0
    init_scheme: str = "uniform_fanin"
    max_steps: int = 200_000
    log_every: int = 100
    stop_grad_norm: float = 0.0
    diff_tol: float = DEFAULT_DIFF_TOL
    steady_window: int = 5
    steady_rel_tol: float = 1e-2
    beos_eps: float = 0.25
    delta: float = 0.05

    def __post_init__(self):
        if self.k < 1:
            raise InvalidConfig(f"k must be positive, got {self.k}")
        if self.eta <= 0:
            raise InvalidConfig(f"eta must be positive, got {self.eta}")
        if self.max_steps < 0:
            raise InvalidConfig(f"max_steps must be nonnegative, got {self.max_steps}")
        if self.log_every < 1:
            raise InvalidConfig(f"log_every must be positive, got {self.log_every}")
        if self.stop_grad_norm < 0:
            raise InvalidConfig("stop_grad_norm must be nonnegative")
        if self.steady_window < 2:
            raise InvalidConfig("steady_window must be at least 2")
        if self.steady_rel_tol <= 0:
            raise InvalidConfig("steady_rel_tol must be positive")


@dataclass(frozen=True)
class TrainRecord:
    step: int
    loss: float
    mse: Optional[float]
    grad_norm: float
    lambda_max_full: Optional[float]
    lambda_max_gn: Optional[float]
    weighted_tv: float
    tv_plain: float
    knot_count: int
    diff_margin: float

    def csv_row(self) -> list:
        return [
            self.step,
            self.loss,
            self.mse,
            self.grad_norm,
            self.lambda_max_full,
            self.lambda_max_gn,
            self.weighted_tv,
            self.tv_plain,
            self.knot_count,
            self.diff_margin,
        ]

    def to_json_dict(self) -> dict:
        return {name: getattr(self, name) for name in RECORDS_CSV_HEADER}


@dataclass(frozen=True)
class RunSummary:
    config: dict
    final_params: dict
    final_record: TrainRecord
    param_inf_norm: float
    stable: Optional[bool]
    beos_index: Optional[int]
    beos_step: Optional[int]
    steady_step: Optional[int]
    optimized: Optional[bool]
    optimized_vs_sigma: Optional[bool]
    certificates: Optional[dict]

    def to_json_dict(self) -> dict:
        return {
            "config": self.config,
            "final_params": self.final_params,
            "final_record": self.final_record.to_json_dict(),
            "param_inf_norm": self.param_inf_norm,
            "stable": self.stable,
            "beos_index": self.beos_index,
            "beos_step": self.beos_step,
            "steady_step": self.steady_step,
            "optimized": self.optimized,
            "optimized_vs_sigma": self.optimized_vs_sigma,
            "certificates": self.certificates,
        }


@dataclass
class TrainResult:
    params: NetParams
    records: list[TrainRecord] = field(default_factory=list)
    summary: Optional[RunSummary] = None


def gd_step(params: NetParams, data: Dataset, eta: float) -> NetParams:
    """One full-batch step theta <- theta - eta * grad L(theta)."""
    theta = params.to_vector() - eta * loss_gradient(params, data)
    if not np.all(np.isfinite(theta)):
        raise Diverged("non-finite parameter after gradient step")
    return NetParams.from_vector(theta, params.k)


def _mse_vs_truth(params: NetParams, data: Dataset) -> Optional[float]:
    if data.ground_truth is None:
        return None
    diff = forward(params, data.xs) - data.ground_truth(data.xs)
    return float(np.mean(diff * diff))


def make_record(
    step: int,
    params: NetParams,
    data: Dataset,
    weight: EmpiricalWeight,
    diff_tol: float = DEFAULT_DIFF_TOL,
) -> TrainRecord:
    loss_value = loss(params, data)
    if not np.isfinite(loss_value):
        raise Diverged(f"non-finite loss at step {step}")
    grad_norm = float(np.linalg.norm(loss_gradient(params, data)))
    margin = differentiability_margin(params, data.xs)
    knots = extract_knots(params)
    wtv = weighted_tv(knots, weight)
    tv_plain = tv_on_interval(knots, float(data.xs[0]), float(data.xs[-1]))
    in_range = int(
        np.sum((knots.ts >= data.xs[0]) & (knots.ts <= data.xs[-1]))
    )
    lam_full = lam_gn = None
    if margin > diff_tol:
        full, _, _ = loss_hessian(params, data, diff_tol)
        lam_full = float(np.linalg.eigvalsh(full)[-1])
        lam_gn = gn_top_pair(params, data)[0]
    return TrainRecord(
        step=step,
        loss=loss_value,
        mse=_mse_vs_truth(params, data),
        grad_norm=grad_norm,
        lambda_max_full=lam_full,
        lambda_max_gn=lam_gn,
        weighted_tv=wtv,
        tv_plain=tv_plain,
        knot_count=in_range,
        diff_margin=margin,
    )


def detect_steady_state(
    records: list[TrainRecord], window: int, rel_tol: float
) -> Optional[int]:
    """Earliest logged step after which loss and lambda_max_gn stop moving.

    Per-checkpoint changes are normalized by the largest absolute value
    each metric attains over the run (so a trace decaying geometrically to
    zero eventually counts as steady).  A checkpoint is steady when every
    normalized change in its trailing window of `window` checkpoints is at
    most rel_tol; the earliest checkpoint from which all later checkpoints
    stay steady is returned, None if there is none.
    """
    if window < 2:
        raise InvalidConfig(f"window must be at least 2, got {window}")
    usable = [r for r in records if r.lambda_max_gn is not None]
    if len(usable) < 2:
        return None
    series = [
        np.array([r.loss for r in usable]),
        np.array([r.lambda_max_gn for r in usable]),
    ]
    changes = np.zeros(len(usable))
    for vals in series:
        scale = float(np.max(np.abs(vals)))
        if scale == 0.0:
            continue
        changes[1:] = np.maximum(changes[1:], np.abs(np.diff(vals)) / scale)
    violations = np.nonzero(changes > rel_tol)[0]
    idx = 0 if violations.size == 0 else int(violations[-1]) + window
    return usable[idx].step if idx < len(usable) else None


def train(config: TrainConfig, data: Dataset) -> TrainResult:
    params = init_params(config.k, config.init_scheme, config.seed)
    weight = weight_g(data)
    records: list[TrainRecord] = []
    step = 0
    try:
        while True:
            due = step % config.log_every == 0 or step == config.max_steps
            if due:
                records.append(make_record(step, params, data, weight, config.diff_tol))
            if step == config.max_steps:
                break
            if config.stop_grad_norm > 0.0:
                gnorm = float(np.linalg.norm(loss_gradient(params, data)))
                if gnorm <= config.stop_grad_norm:
                    if not due:
                        records.append(
                            make_record(step, params, data, weight, config.diff_tol)
                        )
                    break
            params = gd_step(params, data, config.eta)
            step += 1
    except Diverged as exc:
        exc.records = records
        raise

    summary = summarize_run(config, data, params, records)
    return TrainResult(params=params, records=records, summary=summary)


def summarize_run(
    config: TrainConfig,
    data: Dataset,
    params: NetParams,
    records: list[TrainRecord],
) -> RunSummary:
    final = records[-1]
    lam_trace = [r.lambda_max_full for r in records if r.lambda_max_full is not None]
    steps_with_lam = [r.step for r in records if r.lambda_max_full is not None]
    beos_idx = beos_first_index(lam_trace, config.eta, config.beos_eps)
    stable = (
        is_stable(final.lambda_max_full, config.eta)
        if final.lambda_max_full is not None
        else None
    )
    optimized = optimized_sigma = None
    if data.ground_truth is not None:
        optimized = check_optimized(params, data, "vs_ground_truth")
    if data.sigma is not None:
        optimized_sigma = check_optimized(params, data, "vs_sigma")
    try:
        certs = verify_bounds(
            params,
            data,
            config.eta,
            delta=config.delta,
            step=final.step,
            diff_tol=config.diff_tol,
        ).to_json_dict()
    except NotTwiceDifferentiable:
        certs = None
    return RunSummary(
        config=asdict(config),
        final_params=params.to_json_dict(),
        final_record=final,
        param_inf_norm=float(np.max(np.abs(params.to_vector()))),
        stable=stable,
        beos_index=beos_idx,
        beos_step=steps_with_lam[beos_idx] if beos_idx is not None else None,
        steady_step=detect_steady_state(
            records, config.steady_window, config.steady_rel_tol
        ),
        optimized=optimized,
        optimized_vs_sigma=optimized_sigma,
        certificates=certs,
    )


def min_norm_interpolant(
    w1: np.ndarray,
    b1: np.ndarray,
    data: Dataset,
    strict: bool = True,
    interp_tol: float = 1e-8,
) -> tuple[NetParams, float]:
    """Fit only the second layer: minimum-norm least squares on the frozen
    ReLU features plus a constant column.

    Returns the parameters and the residual RMS.  The SVD-backed solver
    returns the minimum-Euclidean-norm solution among all least-squares
    solutions; in strict mode a residual RMS above interp_tol raises
    NotInterpolating.
    """
    w1 = np.asarray(w1, dtype=float)
    b1 = np.asarray(b1, dtype=float)
    feats = np.maximum(data.xs[:, None] * w1 + b1, 0.0)
    design = np.hstack([feats, np.ones((data.n, 1))])
    sol, _, _, _ = np.linalg.lstsq(design, data.ys, rcond=None)
    resid = design @ sol - data.ys
    rms = float(np.sqrt(np.mean(resid * resid)))
    if strict and rms > interp_tol:
        raise NotInterpolating(residual_rms=rms, tol=interp_tol)
    params = NetParams(w1=w1, b1=b1, w2=sol[:-1], b2=float(sol[-1]))
    return params, rms


def check_optimized(params: NetParams, data: Dataset, mode: str) -> bool:
    """Did training reach the noise floor?

    vs_ground_truth: loss(theta) <= loss of the ground-truth function
    (half the mean squared noise on this sample).  vs_sigma: loss(theta)
    <= sigma^2 / 2, the population value of that floor.
    """
    loss_value = loss(params, data)
    if mode == "vs_ground_truth":
        if data.ground_truth is None:
            raise MissingGroundTruth("dataset has no ground-truth function")
        resid = data.ground_truth(data.xs) - data.ys
        return loss_value <= float(np.dot(resid, resid) / (2 * data.n))
    if mode == "vs_sigma":
        if data.sigma is None:
            raise MissingSigma("dataset has no noise level")
        return loss_value <= data.sigma**2 / 2.0
    raise InvalidConfig(f"unknown optimized mode {mode!r}")


def write_run_artifacts(outdir: str | Path, result: TrainResult) -> None:
    """records.csv, summary.json, params.json in outdir (deterministic)."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    write_csv(
        outdir / "records.csv",
        RECORDS_CSV_HEADER,
        (r.csv_row() for r in result.records),
    )
    write_json(outdir / "summary.json", result.summary.to_json_dict())
    write_json(outdir / "params.json", result.params.to_json_dict())
