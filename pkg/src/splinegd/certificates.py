"""Numerical certificates evaluated at checkpoints.

Each checkpoint gets left- and right-hand sides, a signed slack
(rhs - lhs), and a pass flag with the convention slack >= -1e-8.  Four of
the checks are deterministic theorems about any twice-differentiable
parameter point and must never fail on a correct implementation:

  * tv_budget:     weighted TV <= lam/2 - 1/2 + max(x_max,1)*sqrt(2*loss),
                   instantiated at lam = lambda_max of the loss Hessian;
  * gn_lower:      lambda_max(GN) >= 1 + 2 * weighted TV;
  * quad_bound:    sampled |v^T hess f(x) v| <= 2 * max(x_max, 1);
  * interp_lower:  middle-window TV of an interpolant >= the data-only
                   second-difference bound (only when applicable).

The noisy budget (noisy_pass) is a high-probability statement, reported
but never treated as a hard failure.  Stability and the optimized flags
are verdicts about the run, not certificates.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import rngs
from .errors import NotEquispaced
from .funcspace import (
    interpolant_tv_lower_bound,
    middle_window,
    noisy_tv_bound,
    stability_tv_bound,
    tv_on_interval,
    weight_g,
    weighted_tv,
)
from .landscape import Dataset, gn_top_pair, is_stable, lambda_max, loss, loss_hessian
from .relu_net import DEFAULT_DIFF_TOL, NetParams, extract_knots, forward

SLACK_TOL = 1e-8


@dataclass(frozen=True)
class CheckpointCertificates:
    step: Optional[int]
    loss: float
    mse: Optional[float]
    lambda_max_full: float
    lambda_max_gn: float
    weighted_tv: float
    tv_budget_rhs: float
    tv_budget_slack: float
    tv_budget_pass: bool
    noisy_rhs: Optional[float]
    noisy_slack: Optional[float]
    noisy_pass: Optional[bool]
    gn_lower_rhs: float
    gn_lower_slack: float
    gn_lower_pass: bool
    quad_max: float
    quad_bound: float
    quad_slack: float
    quad_pass: bool
    stable: bool
    interp_lower: Optional[float]
    interp_middle_tv: Optional[float]
    interp_slack: Optional[float]
    interp_pass: Optional[bool]

    def hard_pass(self) -> bool:
        ok = self.tv_budget_pass and self.gn_lower_pass and self.quad_pass
        if self.interp_pass is not None:
            ok = ok and self.interp_pass
        return ok

    def to_json_dict(self) -> dict:
        return {
            "step": self.step,
            "loss": self.loss,
            "mse": self.mse,
            "lambda_max_full": self.lambda_max_full,
            "lambda_max_gn": self.lambda_max_gn,
            "weighted_tv": self.weighted_tv,
            "tv_budget_rhs": self.tv_budget_rhs,
            "tv_budget_slack": self.tv_budget_slack,
            "tv_budget_pass": self.tv_budget_pass,
            "noisy_rhs": self.noisy_rhs,
            "noisy_slack": self.noisy_slack,
            "noisy_pass": self.noisy_pass,
            "gn_lower_rhs": self.gn_lower_rhs,
            "gn_lower_slack": self.gn_lower_slack,
            "gn_lower_pass": self.gn_lower_pass,
            "quad_max": self.quad_max,
            "quad_bound": self.quad_bound,
            "quad_slack": self.quad_slack,
            "quad_pass": self.quad_pass,
            "stable": self.stable,
            "interp_lower": self.interp_lower,
            "interp_middle_tv": self.interp_middle_tv,
            "interp_slack": self.interp_slack,
            "interp_pass": self.interp_pass,
        }


@dataclass(frozen=True)
class CertificateReport:
    checkpoints: list[CheckpointCertificates]
    beos_index: Optional[int] = None
    beos_step: Optional[int] = None

    def hard_pass(self) -> bool:
        return all(c.hard_pass() for c in self.checkpoints)

    def to_json_dict(self) -> dict:
        return {
            "checkpoints": [c.to_json_dict() for c in self.checkpoints],
            "beos_index": self.beos_index,
            "beos_step": self.beos_step,
            "hard_pass": self.hard_pass(),
        }


def sampled_quad_max(
    params: NetParams,
    data: Dataset,
    n_probe: int = 1000,
    seed: int = 0,
    diff_tol: float = DEFAULT_DIFF_TOL,
) -> float:
    """max over probe directions v and data points x of |v^T hess f(x) v|.

    Uses the two-nonzeros-per-unit structure of the network Hessian:
    v^T H v = 2 * sum_j 1(pre_j > 0) * v_w2[j] * (x * v_w1[j] + v_b1[j]).
    """
    k = params.k
    rng = rngs.generator(seed, rngs.DOMAIN_PROBE)
    v = rngs.gaussians(rng, 1.0, (n_probe, params.dim))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    v_w1, v_b1, v_w2 = v[:, :k], v[:, k : 2 * k], v[:, 2 * k : 3 * k]
    worst = 0.0
    for x in data.xs:
        act = (params.w1 * x + params.b1) > 0.0
        quad = 2.0 * np.abs((v_w2 * (x * v_w1 + v_b1)) @ act)
        worst = max(worst, float(np.max(quad)))
    return worst


def _interval_mse(params: NetParams, data: Dataset) -> Optional[float]:
    if data.ground_truth is None:
        return None
    diff = forward(params, data.xs) - data.ground_truth(data.xs)
    return float(np.mean(diff * diff))


def verify_bounds(
    params: NetParams,
    data: Dataset,
    eta: float,
    delta: float = 0.05,
    step: Optional[int] = None,
    n_probe: int = 1000,
    probe_seed: int = 0,
    diff_tol: float = DEFAULT_DIFF_TOL,
    interp_rms: Optional[float] = None,
    interp_tol: float = 1e-8,
) -> CheckpointCertificates:
    """Evaluate every certificate at one parameter point.

    Raises NotTwiceDifferentiable if a pre-activation sits on a kink.  Pass
    interp_rms (the least-squares residual RMS) to additionally compare the
    middle-window TV against the data-only interpolant lower bound; that
    comparison is skipped unless the point interpolates and the design is
    equispaced.
    """
    full, _, _ = loss_hessian(params, data, diff_tol)
    lam_full, _ = lambda_max(full, method="dense")
    lam_gn, _ = gn_top_pair(params, data)
    loss_value = loss(params, data)
    weight = weight_g(data)
    knots = extract_knots(params)
    wtv = weighted_tv(knots, weight)
    mse_value = _interval_mse(params, data)

    tv_rhs = stability_tv_bound(loss_value, data.x_max, lam=lam_full)
    tv_slack = tv_rhs - wtv

    noisy_rhs = noisy_slack = noisy_ok = None
    if data.sigma is not None and mse_value is not None:
        noisy_rhs = noisy_tv_bound(
            mse_value, data.sigma, data.x_max, params.k, data.n, delta, lam=lam_full
        )
        noisy_slack = noisy_rhs - wtv
        noisy_ok = noisy_slack >= -SLACK_TOL

    gn_rhs = 1.0 + 2.0 * wtv
    gn_slack = lam_gn - gn_rhs

    quad = sampled_quad_max(params, data, n_probe, probe_seed, diff_tol)
    quad_bound = 2.0 * max(data.x_max, 1.0)
    quad_slack = quad_bound - quad

    interp_lower = interp_tv = interp_slack = interp_ok = None
    if interp_rms is not None and interp_rms <= interp_tol:
        try:
            interp_lower = interpolant_tv_lower_bound(data, mode="plain")
        except NotEquispaced:
            interp_lower = None
        if interp_lower is not None:
            lo, hi = middle_window(data.n)
            interp_tv = tv_on_interval(knots, float(data.xs[lo]), float(data.xs[hi]))
            interp_slack = interp_tv - interp_lower
            interp_ok = interp_slack >= -SLACK_TOL

    return CheckpointCertificates(
        step=step,
        loss=loss_value,
        mse=mse_value,
        lambda_max_full=lam_full,
        lambda_max_gn=lam_gn,
        weighted_tv=wtv,
        tv_budget_rhs=tv_rhs,
        tv_budget_slack=tv_slack,
        tv_budget_pass=tv_slack >= -SLACK_TOL,
        noisy_rhs=noisy_rhs,
        noisy_slack=noisy_slack,
        noisy_pass=noisy_ok,
        gn_lower_rhs=gn_rhs,
        gn_lower_slack=gn_slack,
        gn_lower_pass=gn_slack >= -SLACK_TOL,
        quad_max=quad,
        quad_bound=quad_bound,
        quad_slack=quad_slack,
        quad_pass=quad_slack >= -SLACK_TOL,
        stable=is_stable(lam_full, eta),
        interp_lower=interp_lower,
        interp_middle_tv=interp_tv,
        interp_slack=interp_slack,
        interp_pass=interp_ok,
    )
