"""Weighted total variation and data-dependent bounds.

The central object is the empirical weight function

    g(x) = min(g_minus(x), g_plus(x)),
    g_minus(x) = P(X < x)^2 * E[x - X | X < x] * sqrt(1 + E[X | X < x]^2),

with X drawn from the empirical distribution of the training inputs and
strict inequalities on both sides (g_plus mirrors g_minus above x).  g
vanishes at and outside the extreme data points.  Total variation of a
piecewise-linear function weighted by g is what gradient-descent-stable
networks keep small, and the bound constructors here give the matching
right-hand sides.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    EmptyInterval,
    InvalidConfig,
    NoInterval,
    NotEquispaced,
)
from .landscape import Dataset
from .relu_net import PiecewiseLinear
from .serialize import write_csv

EQUISPACED_REL_TOL = 1e-9


class EmpiricalWeight:
    """g evaluated through prefix sums over the sorted inputs.

    For a query x, counting and summing the inputs strictly below x gives
    P(X < x) and the two conditional means in O(log n); the formula above
    does the rest.  Evaluation is vectorized over query arrays.
    """

    def __init__(self, xs: np.ndarray, x_max: float | None = None):
        xs = np.asarray(xs, dtype=float)
        if xs.ndim != 1 or xs.size < 1:
            raise InvalidConfig("weight needs a 1-d nonempty sample")
        if np.any(np.diff(xs) < 0):
            raise InvalidConfig("xs must be sorted ascending")
        self.xs = xs
        self.n = xs.size
        self.x_max = float(x_max) if x_max is not None else float(np.max(np.abs(xs)))
        self._prefix = np.concatenate([[0.0], np.cumsum(xs)])

    def _one_sided(self, x: np.ndarray, below: bool) -> np.ndarray:
        if below:
            count = np.searchsorted(self.xs, x, side="left")
            total = self._prefix[count]
        else:
            right = np.searchsorted(self.xs, x, side="right")
            count = self.n - right
            total = self._prefix[self.n] - self._prefix[right]
        out = np.zeros_like(x, dtype=float)
        mask = count > 0
        if np.any(mask):
            mean = total[mask] / count[mask]
            dist = (x[mask] - mean) if below else (mean - x[mask])
            prob = count[mask] / self.n
            out[mask] = prob * prob * dist * np.sqrt(1.0 + mean * mean)
        return out

    def eval(self, x) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return np.minimum(self._one_sided(x, True), self._one_sided(x, False))

    def __call__(self, x):
        out = self.eval(x)
        return float(out[0]) if np.isscalar(x) or np.ndim(x) == 0 else out


def weight_g(data: Dataset) -> EmpiricalWeight:
    return EmpiricalWeight(data.xs, data.x_max)


def weighted_tv(pwl: PiecewiseLinear, weight: EmpiricalWeight) -> float:
    """sum over knots strictly inside the data range of |dslope| * g(t).

    g is zero at and beyond the extreme data points, so restricting to the
    open data range loses nothing.
    """
    if pwl.ts.size == 0:
        return 0.0
    lo, hi = weight.xs[0], weight.xs[-1]
    inside = (pwl.ts > lo) & (pwl.ts < hi)
    if not np.any(inside):
        return 0.0
    return float(np.abs(pwl.dslopes[inside]) @ weight.eval(pwl.ts[inside]))


def tv_on_interval(pwl: PiecewiseLinear, lo: float, hi: float) -> float:
    """Plain total variation of the derivative over [lo, hi]: the sum of
    |dslope| at knots inside the closed interval."""
    if pwl.ts.size == 0:
        return 0.0
    inside = (pwl.ts >= lo) & (pwl.ts <= hi)
    return float(np.sum(np.abs(pwl.dslopes[inside])))


def _lambda_eff(lam: float | None, eta: float | None) -> float:
    if (lam is None) == (eta is None):
        raise InvalidConfig("pass exactly one of lam or eta")
    if lam is not None:
        return float(lam)
    if eta <= 0:
        raise InvalidConfig(f"eta must be positive, got {eta}")
    return 2.0 / eta


def stability_tv_bound(
    loss_value: float, x_max: float, lam: float | None = None, eta: float | None = None
) -> float:
    """Weighted-TV budget of a point with curvature at most lam:

        lam/2 - 1/2 + max(x_max, 1) * sqrt(2 * loss).

    With eta given instead, lam = 2/eta (the stability threshold).
    """
    lam_eff = _lambda_eff(lam, eta)
    return lam_eff / 2.0 - 0.5 + max(x_max, 1.0) * np.sqrt(2.0 * max(loss_value, 0.0))


def noisy_tv_bound(
    mse_value: float,
    sigma: float,
    x_max: float,
    k: int,
    n: int,
    delta: float,
    lam: float | None = None,
    eta: float | None = None,
) -> float:
    """High-probability weighted-TV budget under label noise:

        lam/2 - 1/2
        + sigma * max(x_max, 1) * min(4*sqrt(log(4n/delta)),
                                      14*sqrt(k*log(13n/delta)/n))
        + 2 * max(x_max, 1) * sqrt(mse).

    The min picks whichever concentration route (sub-Gaussian max or
    width-based uniform) is tighter for the given k and n.
    """
    if not 0.0 < delta < 1.0:
        raise InvalidConfig(f"delta must lie in (0, 1), got {delta}")
    lam_eff = _lambda_eff(lam, eta)
    xb = max(x_max, 1.0)
    noise = sigma * xb * min(
        4.0 * np.sqrt(np.log(4.0 * n / delta)),
        14.0 * np.sqrt(k * np.log(13.0 * n / delta) / n),
    )
    return lam_eff / 2.0 - 0.5 + noise + 2.0 * xb * np.sqrt(max(mse_value, 0.0))


@dataclass(frozen=True)
class IntervalReport:
    lo: float
    hi: float
    c_inf: float
    n_in: int
    grid_step: float

    def to_json_dict(self) -> dict:
        return {
            "lo": self.lo,
            "hi": self.hi,
            "c_inf": self.c_inf,
            "n_in": self.n_in,
            "grid_step": self.grid_step,
        }


def _grid(lo: float, hi: float, step: float) -> np.ndarray:
    count = max(int(np.floor((hi - lo) / step + 1e-12)), 0)
    pts = lo + step * np.arange(count + 1)
    if pts[-1] < hi - 1e-15 * max(1.0, abs(hi)):
        pts = np.append(pts, hi)
    else:
        pts[-1] = min(pts[-1], hi)
    return pts


def infimum_on(
    weight: EmpiricalWeight, lo: float, hi: float, grid_step: float | None = None
) -> float:
    """min of g over a uniform grid on [lo, hi] (endpoints included)."""
    if hi < lo:
        raise InvalidConfig("interval must satisfy lo <= hi")
    if grid_step is None:
        grid_step = weight.x_max / 2000.0
    return float(np.min(weight.eval(_grid(lo, hi, grid_step))))


def select_interval(
    weight: EmpiricalWeight, c: float, grid_step: float | None = None
) -> IntervalReport:
    """Longest contiguous grid run with g >= c inside the data range.

    Ties go to the run containing the data median; if no tied run contains
    it, the run whose midpoint is closest to the median wins.
    """
    if grid_step is None:
        grid_step = weight.x_max / 2000.0
    grid = _grid(weight.xs[0], weight.xs[-1], grid_step)
    ok = weight.eval(grid) >= c
    if not np.any(ok):
        raise NoInterval(f"no grid point reaches weight {c!r}")

    runs = []  # (start, end) inclusive grid indices
    start = None
    for i, flag in enumerate(ok):
        if flag and start is None:
            start = i
        elif not flag and start is not None:
            runs.append((start, i - 1))
            start = None
    if start is not None:
        runs.append((start, len(ok) - 1))

    best_len = max(e - s for s, e in runs)
    longest = [(s, e) for s, e in runs if e - s == best_len]
    median = float(np.median(weight.xs))

    def run_key(run):
        lo, hi = grid[run[0]], grid[run[1]]
        contains = lo <= median <= hi
        return (0 if contains else 1, abs((lo + hi) / 2 - median))

    s, e = min(longest, key=run_key)
    lo, hi = float(grid[s]), float(grid[e])
    c_inf = float(np.min(weight.eval(grid[s : e + 1])))
    n_in = int(np.sum((weight.xs >= lo) & (weight.xs <= hi)))
    return IntervalReport(lo=lo, hi=hi, c_inf=c_inf, n_in=n_in, grid_step=grid_step)


def check_equispaced(xs: np.ndarray) -> float:
    """Common spacing of an equispaced design, or NotEquispaced."""
    diffs = np.diff(xs)
    h = float(np.mean(diffs))
    if h <= 0 or np.max(np.abs(diffs - h)) > EQUISPACED_REL_TOL * abs(h):
        raise NotEquispaced("design points are not an equispaced grid")
    return h


def middle_window(n: int) -> tuple[int, int]:
    """0-based inclusive index window covering the middle half of an
    n-point design (positions n/4 through 3n/4, 1-based).  When the window
    is too short to contain one triple of consecutive points it widens to
    the full range, which keeps tiny designs usable."""
    lo = int(np.ceil(n / 4.0)) - 1
    hi = int(np.floor(3.0 * n / 4.0)) - 1
    if hi - lo + 1 < 3:
        return 0, n - 1
    return lo, hi


def interpolant_tv_lower_bound(
    data: Dataset, mode: str = "plain", grid_step: float | None = None
) -> float:
    """Data-only lower bound on the TV over the middle window that any
    interpolant of the labels must pay.

    Each triple of consecutive points forces, via the mean value theorem,
    at least (n-1)/(2*x_max) * |y_{j+2} - 2*y_{j+1} + y_j| of derivative
    variation on [x_j, x_{j+2}].  Summing over index-disjoint triples
    (stride 3, starting at the left edge of the middle window) lower-bounds
    the plain TV there; the weighted mode multiplies by the infimum of g
    over the window.
    """
    if data.n < 3:
        raise InvalidConfig("need at least three points for a triple")
    check_equispaced(data.xs)
    lo, hi = middle_window(data.n)
    total = 0.0
    j = lo
    while j + 2 <= hi:
        total += abs(data.ys[j + 2] - 2.0 * data.ys[j + 1] + data.ys[j])
        j += 3
    bound = (data.n - 1) / (2.0 * data.x_max) * total
    if mode == "plain":
        return float(bound)
    if mode == "weighted":
        weight = weight_g(data)
        return float(bound) * infimum_on(
            weight, float(data.xs[lo]), float(data.xs[hi]), grid_step
        )
    raise InvalidConfig(f"unknown mode {mode!r}")


def interval_mse_mask(data: Dataset, lo: float, hi: float) -> np.ndarray:
    mask = (data.xs >= lo) & (data.xs <= hi)
    if not np.any(mask):
        raise EmptyInterval(f"no data in [{lo!r}, {hi!r}]")
    return mask


def export_weight_csv(
    weight: EmpiricalWeight, grid: np.ndarray, path: str | Path
) -> None:
    """Profile of g on a grid as a two-column x,g CSV."""
    grid = np.asarray(grid, dtype=float)
    vals = weight.eval(grid)
    write_csv(path, ["x", "g"], zip(grid, vals))
