"""Loss landscape of the half-MSE objective.

For a dataset (x_i, y_i)_{i<n} the training objective is

    L(theta) = 1/(2n) * sum_i (f(x_i) - y_i)^2.

Its Hessian splits into a positive semidefinite Gauss-Newton part and a
residual part,

    hess L = 1/n sum_i grad f_i grad f_i^T  +  1/n sum_i r_i hess f_i,

with r_i = f(x_i) - y_i.  This module computes the split exactly, exposes
dense and power-iteration top-eigenvalue solvers, and provides the linear
stability predicate (top curvature at most 2/eta) together with the
linearized gradient-descent recurrence used to probe it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import rngs
from .errors import DataError, InvalidConfig, NoConvergence, NotTwiceDifferentiable
from .relu_net import DEFAULT_DIFF_TOL, NetParams, forward, param_jacobian

DENSE_DIM_LIMIT = 2000


@dataclass(frozen=True)
class Dataset:
    """Fixed design sample.  xs must be sorted ascending and distinct.

    When a ground-truth function and stored noises are both present the
    labels must satisfy ys = ground_truth(xs) + noises exactly; dataset
    generators construct them that way, which lets downstream checks
    recover the clean targets without re-sampling.
    """

    xs: np.ndarray
    ys: np.ndarray
    x_max: float
    ground_truth: Optional[Callable[[np.ndarray], np.ndarray]] = None
    sigma: Optional[float] = None
    noises: Optional[np.ndarray] = None

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float)
        ys = np.asarray(self.ys, dtype=float)
        if xs.ndim != 1 or xs.shape != ys.shape:
            raise DataError("xs and ys must be 1-d arrays of equal length")
        if xs.size < 1:
            raise DataError("need at least one data point")
        if np.any(np.diff(xs) <= 0):
            raise DataError("xs must be sorted ascending with distinct values")
        if np.max(np.abs(xs)) > self.x_max:
            raise DataError("data exceeds the stated |x| bound x_max")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)
        object.__setattr__(self, "x_max", float(self.x_max))
        if self.noises is not None:
            noises = np.asarray(self.noises, dtype=float)
            if noises.shape != xs.shape:
                raise DataError("noises must match xs in shape")
            object.__setattr__(self, "noises", noises)
            if self.ground_truth is not None:
                clean = np.asarray(self.ground_truth(xs), dtype=float)
                if not np.array_equal(clean + noises, ys):
                    raise DataError("ys must equal ground_truth(xs) + noises exactly")

    @property
    def n(self) -> int:
        return self.xs.size


def loss(params: NetParams, data: Dataset) -> float:
    r = forward(params, data.xs) - data.ys
    return float(np.dot(r, r) / (2 * data.n))


def loss_gradient(params: NetParams, data: Dataset) -> np.ndarray:
    r = forward(params, data.xs) - data.ys
    return param_jacobian(params, data.xs).T @ r / data.n


def _require_margin(params: NetParams, data: Dataset, diff_tol: float) -> None:
    pre = data.xs[:, None] * params.w1 + params.b1
    mags = np.abs(pre)
    i, j = np.unravel_index(np.argmin(mags), mags.shape)
    if mags[i, j] <= diff_tol:
        raise NotTwiceDifferentiable(
            neuron=int(j), x=float(data.xs[i]), margin=float(mags[i, j])
        )


def loss_hessian(
    params: NetParams, data: Dataset, diff_tol: float = DEFAULT_DIFF_TOL
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(full, gauss_newton, residual) Hessian matrices, each (3k+1, 3k+1).

    The residual part inherits the sparsity of the network Hessian: its
    only nonzero entries couple (w1[j], w2[j]) and (b1[j], w2[j]).
    """
    _require_margin(params, data, diff_tol)
    n, k = data.n, params.k
    jac = param_jacobian(params, data.xs)
    gn = jac.T @ jac / n

    r = forward(params, data.xs) - data.ys
    act = (data.xs[:, None] * params.w1 + params.b1) > 0.0
    c_w1 = (r * data.xs) @ act / n
    c_b1 = r @ act / n
    residual = np.zeros((params.dim, params.dim))
    idx = np.arange(k)
    residual[idx, 2 * k + idx] = c_w1
    residual[2 * k + idx, idx] = c_w1
    residual[k + idx, 2 * k + idx] = c_b1
    residual[2 * k + idx, k + idx] = c_b1
    return gn + residual, gn, residual


def lambda_max(
    operator,
    dim: int | None = None,
    method: str = "dense",
    tol: float = 1e-10,
    max_iters: int = 200_000,
    seed: int = 0,
    norm_bound: float | None = None,
) -> tuple[float, np.ndarray]:
    """Top eigenvalue and eigenvector of a symmetric operator.

    operator is a square ndarray or a matvec callable (callables require
    dim and norm_bound).  The dense method symmetrizes and calls LAPACK.
    The power method iterates on the shifted operator A + mu*I with
    mu = 1 + norm_bound, which is positive definite, so the dominant
    eigenvalue of the shifted operator is lambda_max(A) + mu; the default
    norm_bound for matrices is the trace-based Frobenius norm
    sqrt(trace(A^T A)).
    """
    if callable(operator):
        if method == "dense":
            raise InvalidConfig("dense method needs an explicit matrix")
        if dim is None or norm_bound is None:
            raise InvalidConfig("matvec operators require dim and norm_bound")
        matvec = operator
    else:
        mat = np.asarray(operator, dtype=float)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise InvalidConfig(f"operator has shape {mat.shape}, expected square")
        mat = (mat + mat.T) / 2
        dim = mat.shape[0]
        if method == "dense":
            vals, vecs = np.linalg.eigh(mat)
            return float(vals[-1]), vecs[:, -1]
        if norm_bound is None:
            norm_bound = float(np.sqrt(np.sum(mat * mat)))
        matvec = lambda v: mat @ v

    if method != "power":
        raise InvalidConfig(f"unknown eigensolver method {method!r}")

    mu = 1.0 + float(norm_bound)
    v = rngs.unit_vector(rngs.generator(seed, rngs.DOMAIN_PROBE), dim)
    rho = 0.0
    residual = np.inf
    for it in range(max_iters):
        bv = matvec(v) + mu * v
        rho = float(v @ bv)
        residual = float(np.linalg.norm(bv - rho * v))
        # For symmetric operators |rho - lambda_1(B)| <= residual.
        if residual <= tol * max(rho, 1.0):
            return rho - mu, v
        nrm = float(np.linalg.norm(bv))
        if nrm == 0.0:
            return -mu, v
        v = bv / nrm
    raise NoConvergence(iters=max_iters, estimate=rho - mu, residual=residual)


def gn_top_pair(params: NetParams, data: Dataset) -> tuple[float, np.ndarray]:
    """Top eigenpair of the Gauss-Newton matrix via SVD of the Jacobian.

    GN = J^T J / n, so its eigenvalues are the squared singular values of
    J / sqrt(n); this costs O(n^2 dim) instead of a dim^3 eigensolve.
    """
    jac = param_jacobian(params, data.xs) / np.sqrt(data.n)
    _, svals, vt = np.linalg.svd(jac, full_matrices=False)
    return float(svals[0] ** 2), vt[0]


@dataclass(frozen=True)
class SpectrumReport:
    lambda_max_full: float
    lambda_max_gn: float
    top_eigvec: np.ndarray
    residual_quadform: float
    method: str

    def to_json_dict(self) -> dict:
        return {
            "lambda_max_full": self.lambda_max_full,
            "lambda_max_gn": self.lambda_max_gn,
            "residual_quadform": self.residual_quadform,
            "method": self.method,
        }


def hessian_norm_bound(params: NetParams, data: Dataset, gn: np.ndarray) -> float:
    """Trace-based upper bound on the operator norm of the full Hessian.

    trace(GN) bounds the PSD part; each per-point network Hessian has
    operator norm at most 2*max(|x_i|, 1), which bounds the residual part
    through the triangle inequality.
    """
    r = forward(params, data.xs) - data.ys
    res_bound = float(np.mean(np.abs(r) * 2 * np.maximum(np.abs(data.xs), 1.0)))
    return float(np.trace(gn)) + res_bound


def spectrum_report(
    params: NetParams,
    data: Dataset,
    method: str = "dense",
    diff_tol: float = DEFAULT_DIFF_TOL,
) -> SpectrumReport:
    """Top curvatures of the loss plus the Gauss-Newton sandwich data.

    top_eigvec is the Gauss-Newton top eigenvector v, and
    residual_quadform = v^T R v, so that

        lambda_max_full >= lambda_max_gn + residual_quadform

    holds by the Rayleigh-quotient characterization.
    """
    full, gn, residual = loss_hessian(params, data, diff_tol)
    if method == "dense":
        lam_full, _ = lambda_max(full, method="dense")
        lam_gn, v = gn_top_pair(params, data)
    elif method == "power":
        bound = hessian_norm_bound(params, data, gn)
        lam_full, _ = lambda_max(
            full, method="power", norm_bound=bound
        )
        lam_gn, v = lambda_max(gn, method="power", norm_bound=float(np.trace(gn)))
    else:
        raise InvalidConfig(f"unknown eigensolver method {method!r}")
    quad = float(v @ residual @ v)
    return SpectrumReport(
        lambda_max_full=lam_full,
        lambda_max_gn=lam_gn,
        top_eigvec=v,
        residual_quadform=quad,
        method=method,
    )


def is_stable(lambda_max_value: float, eta: float) -> bool:
    """Linear stability of gradient descent: top curvature <= 2/eta."""
    if eta <= 0:
        raise InvalidConfig(f"eta must be positive, got {eta}")
    return lambda_max_value <= 2.0 / eta


def beos_first_index(trace, eta: float, eps: float) -> Optional[int]:
    """First index from which the curvature trace stays at or below
    2*exp(eps)/eta; None if the trace ends above the threshold."""
    if eta <= 0:
        raise InvalidConfig(f"eta must be positive, got {eta}")
    if eps < 0:
        raise InvalidConfig(f"eps must be nonnegative, got {eps}")
    thr = 2.0 * np.exp(eps) / eta
    trace = list(trace)
    last_above = -1
    for i, lam in enumerate(trace):
        if lam > thr:
            last_above = i
    idx = last_above + 1
    return idx if idx < len(trace) else None


def linear_recurrence(
    grad: np.ndarray, hess: np.ndarray, eta: float, delta0: np.ndarray, steps: int
) -> np.ndarray:
    """Norms of delta_t under delta <- delta - eta*(grad + hess @ delta)."""
    delta = np.asarray(delta0, dtype=float).copy()
    norms = np.empty(steps + 1)
    norms[0] = np.linalg.norm(delta)
    for t in range(steps):
        delta = delta - eta * (grad + hess @ delta)
        norms[t + 1] = np.linalg.norm(delta)
        if not np.isfinite(norms[t + 1]):
            norms[t + 2 :] = np.inf
            break
    return norms


def linearized_dynamics(
    params_star: NetParams,
    data: Dataset,
    eta: float,
    delta0: np.ndarray,
    steps: int,
    diff_tol: float = DEFAULT_DIFF_TOL,
) -> np.ndarray:
    """Linearized gradient descent around params_star.

    Simulates theta_{t+1} = theta_t - eta*(grad L(theta*) +
    hess L(theta*) (theta_t - theta*)) and returns the distance-to-center
    norms for t = 0..steps.  The gradient term is kept even though it
    vanishes at exact minima, so near-minima behave as they would in the
    full dynamics.
    """
    grad = loss_gradient(params_star, data)
    full, _, _ = loss_hessian(params_star, data, diff_tol)
    return linear_recurrence(grad, full, eta, np.asarray(delta0, float), steps)
