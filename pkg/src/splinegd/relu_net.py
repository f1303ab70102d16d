"""Two-layer univariate ReLU networks and their exact derivatives.

The model is

    f(x) = sum_j w2[j] * relu(w1[j] * x + b1[j]) + b2,

with parameter vector theta = (w1[0..k-1], b1[0..k-1], w2[0..k-1], b2) of
dimension 3k + 1.  Because the network is univariate and piecewise linear,
its parameter gradient and parameter Hessian have closed forms built from
the activation indicators 1(w1[j]*x + b1[j] > 0); no autodiff is involved.
The ReLU derivative at exactly zero is taken to be 0, and second-order
quantities are only defined when every pre-activation clears the kink by
more than diff_tol.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import rngs
from .errors import InvalidConfig, NotTwiceDifferentiable

DEFAULT_DIFF_TOL = 1e-8
KNOT_MERGE_TOL = 1e-9
DSLOPE_ZERO_TOL = 1e-12


@dataclass(frozen=True)
class NetParams:
    """Weights of one network.  Arrays have shape (k,); b2 is a scalar."""

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: float

    def __post_init__(self):
        w1 = np.asarray(self.w1, dtype=float)
        b1 = np.asarray(self.b1, dtype=float)
        w2 = np.asarray(self.w2, dtype=float)
        if w1.ndim != 1 or w1.shape != b1.shape or w1.shape != w2.shape:
            raise InvalidConfig("w1, b1, w2 must be 1-d arrays of equal length")
        if w1.size < 1:
            raise InvalidConfig("network needs at least one hidden unit")
        object.__setattr__(self, "w1", w1)
        object.__setattr__(self, "b1", b1)
        object.__setattr__(self, "w2", w2)
        object.__setattr__(self, "b2", float(self.b2))

    @property
    def k(self) -> int:
        return self.w1.size

    @property
    def dim(self) -> int:
        return 3 * self.k + 1

    def to_vector(self) -> np.ndarray:
        """Flatten to (3k+1,) in the order w1, b1, w2, b2."""
        return np.concatenate([self.w1, self.b1, self.w2, [self.b2]])

    @staticmethod
    def from_vector(theta: np.ndarray, k: int) -> "NetParams":
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (3 * k + 1,):
            raise InvalidConfig(
                f"parameter vector has shape {theta.shape}, expected ({3 * k + 1},)"
            )
        return NetParams(
            w1=theta[:k].copy(),
            b1=theta[k : 2 * k].copy(),
            w2=theta[2 * k : 3 * k].copy(),
            b2=float(theta[3 * k]),
        )

    def to_json_dict(self) -> dict:
        return {"k": self.k, "theta": [float(t) for t in self.to_vector()]}

    @staticmethod
    def from_json_dict(obj: dict) -> "NetParams":
        try:
            k = int(obj["k"])
            theta = np.asarray(obj["theta"], dtype=float)
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidConfig(f"malformed params JSON: {exc}") from exc
        return NetParams.from_vector(theta, k)


@dataclass(frozen=True)
class PiecewiseLinear:
    """Canonical continuous piecewise-linear function.

    Represented by a reference point left of every knot (value and slope
    there) plus sorted knot positions ts with slope jumps dslopes:

        h(x) = base_value + base_slope * (x - base_point)
               + sum_{j: ts[j] < x} dslopes[j] * (x - ts[j]).
    """

    base_point: float
    base_value: float
    base_slope: float
    ts: np.ndarray
    dslopes: np.ndarray

    def __post_init__(self):
        ts = np.asarray(self.ts, dtype=float)
        ds = np.asarray(self.dslopes, dtype=float)
        if ts.shape != ds.shape or ts.ndim != 1:
            raise InvalidConfig("ts and dslopes must be 1-d arrays of equal length")
        if ts.size and np.any(np.diff(ts) < 0):
            raise InvalidConfig("knots must be sorted ascending")
        object.__setattr__(self, "ts", ts)
        object.__setattr__(self, "dslopes", ds)

    def evaluate(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = self.base_value + self.base_slope * (x - self.base_point)
        if self.ts.size:
            hinge = np.maximum(x[..., None] - self.ts, 0.0)
            out = out + hinge @ self.dslopes
        return out


def forward(params: NetParams, x) -> np.ndarray:
    """Network output f(x); x may be a scalar or an array."""
    x = np.asarray(x, dtype=float)
    pre = x[..., None] * params.w1 + params.b1
    return np.maximum(pre, 0.0) @ params.w2 + params.b2


def _activations(params: NetParams, x: np.ndarray) -> np.ndarray:
    """Strict activation indicators 1(w1*x + b1 > 0), shape (..., k)."""
    return (x[..., None] * params.w1 + params.b1) > 0.0


def param_gradient(params: NetParams, x: float) -> np.ndarray:
    """Gradient of f(x) in theta, shape (3k+1,).

    d f / d w1[j] = x * w2[j] * 1(pre_j > 0)
    d f / d b1[j] =     w2[j] * 1(pre_j > 0)
    d f / d w2[j] = relu(pre_j)
    d f / d b2    = 1
    """
    x = float(x)
    pre = params.w1 * x + params.b1
    act = pre > 0.0
    g = np.empty(params.dim)
    k = params.k
    g[:k] = x * params.w2 * act
    g[k : 2 * k] = params.w2 * act
    g[2 * k : 3 * k] = np.maximum(pre, 0.0)
    g[3 * k] = 1.0
    return g


def param_jacobian(params: NetParams, xs: np.ndarray) -> np.ndarray:
    """Stacked gradients for a batch of inputs, shape (n, 3k+1)."""
    xs = np.asarray(xs, dtype=float)
    pre = xs[:, None] * params.w1 + params.b1
    act = pre > 0.0
    n, k = xs.size, params.k
    jac = np.empty((n, 3 * k + 1))
    jac[:, :k] = xs[:, None] * params.w2 * act
    jac[:, k : 2 * k] = params.w2 * act
    jac[:, 2 * k : 3 * k] = np.maximum(pre, 0.0)
    jac[:, 3 * k] = 1.0
    return jac


def _check_margin(params: NetParams, x: float, diff_tol: float) -> np.ndarray:
    pre = params.w1 * x + params.b1
    mags = np.abs(pre)
    j = int(np.argmin(mags))
    if mags[j] <= diff_tol:
        raise NotTwiceDifferentiable(neuron=j, x=x, margin=float(mags[j]))
    return pre > 0.0


def param_hessian(
    params: NetParams, x: float, diff_tol: float = DEFAULT_DIFF_TOL
) -> np.ndarray:
    """Hessian of f(x) in theta, shape (3k+1, 3k+1).

    Away from the kinks the only second derivatives that survive are the
    mixed first-layer/second-layer terms of each unit:

        d^2 f / d w1[j] d w2[j] = x * 1(pre_j > 0)
        d^2 f / d b1[j] d w2[j] =     1(pre_j > 0)

    Requires |pre_j| > diff_tol for every unit.
    """
    x = float(x)
    act = _check_margin(params, x, diff_tol)
    k = params.k
    h = np.zeros((params.dim, params.dim))
    idx = np.arange(k)
    h[idx, 2 * k + idx] = x * act
    h[2 * k + idx, idx] = x * act
    h[k + idx, 2 * k + idx] = act
    h[2 * k + idx, k + idx] = act
    return h


def hessian_vector_product(
    params: NetParams, x: float, v: np.ndarray, diff_tol: float = DEFAULT_DIFF_TOL
) -> np.ndarray:
    """Matrix-free product param_hessian(params, x) @ v in O(k) time."""
    x = float(x)
    act = _check_margin(params, x, diff_tol)
    v = np.asarray(v, dtype=float)
    if v.shape != (params.dim,):
        raise InvalidConfig(f"v has shape {v.shape}, expected ({params.dim},)")
    k = params.k
    out = np.zeros_like(v)
    v_w1, v_b1, v_w2 = v[:k], v[k : 2 * k], v[2 * k : 3 * k]
    out[:k] = x * act * v_w2
    out[k : 2 * k] = act * v_w2
    out[2 * k : 3 * k] = act * (x * v_w1 + v_b1)
    return out


def differentiability_margin(params: NetParams, xs) -> float:
    """min over data points and units of |w1[j] * x_i + b1[j]|."""
    xs = np.asarray(xs, dtype=float)
    pre = xs[:, None] * params.w1 + params.b1
    return float(np.min(np.abs(pre)))


def extract_knots(
    params: NetParams,
    knot_merge_tol: float = KNOT_MERGE_TOL,
    dslope_zero_tol: float = DSLOPE_ZERO_TOL,
) -> PiecewiseLinear:
    """Canonical piecewise-linear form of the network function.

    Unit j with w1[j] != 0 contributes a knot at t_j = -b1[j] / w1[j] with
    slope jump w2[j] * |w1[j]|; units with w1[j] = 0 are affine and only
    shift the base value.  Knots closer than knot_merge_tol are merged
    (position averaged, jumps summed) and merged jumps of magnitude at most
    dslope_zero_tol are dropped.
    """
    active = params.w1 != 0.0
    ts = -params.b1[active] / params.w1[active]
    ds = params.w2[active] * np.abs(params.w1[active])

    if ts.size:
        order = np.argsort(ts, kind="stable")
        ts, ds = ts[order], ds[order]
        merged_t, merged_d = [], []
        group_start = 0
        for i in range(1, ts.size + 1):
            if i == ts.size or ts[i] - ts[i - 1] > knot_merge_tol:
                merged_t.append(float(np.mean(ts[group_start:i])))
                merged_d.append(float(np.sum(ds[group_start:i])))
                group_start = i
        ts = np.array(merged_t)
        ds = np.array(merged_d)
        keep = np.abs(ds) > dslope_zero_tol
        ts, ds = ts[keep], ds[keep]

    base_point = float(ts[0] - 1.0) if ts.size else 0.0
    base_value = float(forward(params, base_point))
    # Left of every knot only units with w1 < 0 are active (plus constant
    # units with w1 = 0, b1 > 0, which carry no slope).
    neg = params.w1 < 0.0
    base_slope = float(np.sum(params.w2[neg] * params.w1[neg]))
    return PiecewiseLinear(
        base_point=base_point,
        base_value=base_value,
        base_slope=base_slope,
        ts=ts,
        dslopes=ds,
    )


def init_params(
    k: int,
    scheme: str = "uniform_fanin",
    seed: int = 0,
    a_w1: float = 1.0,
    a_b1: float = 1.0,
    a_w2: float | None = None,
) -> NetParams:
    """Random initialization.

    uniform_fanin: w1, b1 ~ U(-1, 1); w2, b2 ~ U(-1/sqrt(k), 1/sqrt(k)).
    uniform_custom: U(-a_w1, a_w1), U(-a_b1, a_b1) for the first layer and
    U(-a_w2, a_w2) for both w2 and b2.
    """
    if k < 1:
        raise InvalidConfig(f"k must be positive, got {k}")
    rng = rngs.generator(seed, rngs.DOMAIN_INIT)
    if scheme == "uniform_fanin":
        r2 = 1.0 / np.sqrt(k)
        w1 = rngs.uniform_range(rng, -1.0, 1.0, k)
        b1 = rngs.uniform_range(rng, -1.0, 1.0, k)
        w2 = rngs.uniform_range(rng, -r2, r2, k)
        b2 = float(rngs.uniform_range(rng, -r2, r2, 1)[0])
    elif scheme == "uniform_custom":
        if a_w2 is None:
            a_w2 = 1.0 / np.sqrt(k)
        if min(a_w1, a_b1, a_w2) <= 0:
            raise InvalidConfig("uniform_custom ranges must be positive")
        w1 = rngs.uniform_range(rng, -a_w1, a_w1, k)
        b1 = rngs.uniform_range(rng, -a_b1, a_b1, k)
        w2 = rngs.uniform_range(rng, -a_w2, a_w2, k)
        b2 = float(rngs.uniform_range(rng, -a_w2, a_w2, 1)[0])
    else:
        raise InvalidConfig(f"unknown init scheme {scheme!r}")
    return NetParams(w1=w1, b1=b1, w2=w2, b2=b2)
