"""Empirical weight function, TV functionals, bound constructors, interval
selection, and the interpolant lower bound."""

import numpy as np
import pytest

from splinegd import rngs
from splinegd.errors import (
    EmptyInterval,
    InvalidConfig,
    NoInterval,
    NotEquispaced,
)
from splinegd.funcspace import (
    EmpiricalWeight,
    IntervalReport,
    check_equispaced,
    export_weight_csv,
    infimum_on,
    interpolant_tv_lower_bound,
    interval_mse_mask,
    middle_window,
    noisy_tv_bound,
    select_interval,
    stability_tv_bound,
    tv_on_interval,
    weight_g,
    weighted_tv,
)
from splinegd.landscape import Dataset
from splinegd.relu_net import PiecewiseLinear


def brute_g(xs, x):
    """Direct evaluation of the weight definition, used as the oracle."""
    xs = np.asarray(xs, dtype=float)

    def side(vals, below):
        if vals.size == 0:
            return 0.0
        p = vals.size / xs.size
        m = float(np.mean(vals))
        dist = (x - m) if below else (m - x)
        return p * p * dist * np.sqrt(1.0 + m * m)

    return min(side(xs[xs < x], True), side(xs[xs > x], False))


def pwl(ts, dslopes, base_slope=0.0):
    return PiecewiseLinear(
        base_point=(min(ts) - 1.0 if len(ts) else 0.0),
        base_value=0.0,
        base_slope=base_slope,
        ts=np.asarray(ts, dtype=float),
        dslopes=np.asarray(dslopes, dtype=float),
    )


def test_weight_two_point_closed_forms():
    w = EmpiricalWeight(np.array([-1.0, 1.0]))
    assert abs(w(0.0) - np.sqrt(2.0) / 4.0) <= 1e-15
    for a in (0.5, 1.0, 2.0):
        w = EmpiricalWeight(np.array([-a, a]))
        assert abs(w(0.0) - 0.25 * a * np.sqrt(1.0 + a * a)) <= 1e-15


def test_weight_vanishes_at_and_beyond_extremes():
    w = EmpiricalWeight(np.linspace(-1.0, 1.0, 17))
    assert w(-1.0) == 0.0 and w(1.0) == 0.0
    assert w(-1.5) == 0.0 and w(2.0) == 0.0


def test_weight_equispaced_center_value():
    xs = np.linspace(-1.0, 1.0, 1000)
    w = EmpiricalWeight(xs)
    target = np.sqrt(5.0) / 16.0
    assert abs(w(0.0) - brute_g(xs, 0.0)) <= 1e-12
    assert abs(w(0.0) - target) / target <= 0.01


def test_weight_matches_brute_force():
    rng = np.random.default_rng(5)
    for seed in range(10):
        xs = np.sort(rng.uniform(-2.0, 2.0, size=rng.integers(2, 40)))
        w = EmpiricalWeight(xs)
        for x in rng.uniform(-2.5, 2.5, size=20):
            assert abs(w(float(x)) - brute_g(xs, float(x))) <= 1e-12


def test_weight_symmetry():
    xs = np.concatenate([-np.linspace(0.1, 1.0, 10)[::-1], np.linspace(0.1, 1.0, 10)])
    w = EmpiricalWeight(xs)
    grid = np.linspace(-1.0, 1.0, 101)
    assert np.max(np.abs(w.eval(grid) - w.eval(-grid))) <= 1e-12


def test_weight_evaluates_at_data_points_with_strict_counts():
    xs = np.array([-1.0, 0.0, 1.0])
    w = EmpiricalWeight(xs)
    # at x = 0 only the single point on each strict side counts
    assert abs(w(0.0) - brute_g(xs, 0.0)) <= 1e-15
    assert w(0.0) == pytest.approx((1.0 / 9.0) * 1.0 * np.sqrt(2.0), rel=1e-12)


def test_weighted_tv_examples():
    xs = np.linspace(-0.5, 0.5, 1000)
    w = EmpiricalWeight(xs)
    hat = pwl([0.0], [-4.0], base_slope=2.0)
    expect = 4.0 * brute_g(xs, 0.0)
    assert abs(weighted_tv(hat, w) - expect) <= 1e-12

    assert weighted_tv(pwl([], []), w) == 0.0
    outside = pwl([-0.7, 0.9], [1.0, 2.0])
    assert weighted_tv(outside, w) == 0.0


def test_weighted_tv_monotone_under_added_knots():
    rng = np.random.default_rng(9)
    xs = np.sort(rng.uniform(-1.0, 1.0, size=25))
    w = EmpiricalWeight(xs)
    ts = list(rng.uniform(-0.9, 0.9, size=4))
    ds = list(rng.normal(size=4))
    base = weighted_tv(pwl(sorted(ts), [d for _, d in sorted(zip(ts, ds))]), w)
    for _ in range(10):
        t_new = float(rng.uniform(xs[0] + 1e-6, xs[-1] - 1e-6))
        ts2 = ts + [t_new]
        ds2 = ds + [float(rng.normal())]
        order = np.argsort(ts2)
        bigger = weighted_tv(
            pwl(np.asarray(ts2)[order], np.asarray(ds2)[order]), w
        )
        assert bigger >= base - 1e-15


def test_tv_on_interval_examples():
    hat = pwl([0.0], [-4.0], base_slope=2.0)
    assert tv_on_interval(hat, -0.2, 0.3) == 4.0
    assert tv_on_interval(hat, 0.1, 0.5) == 0.0
    two = pwl([-0.5, 0.5], [1.0, -3.0])
    assert tv_on_interval(two, -1.0, 1.0) == 4.0


def test_stability_tv_bound_examples():
    val = stability_tv_bound(0.12, 1.0, eta=0.4)
    assert np.isclose(val, 2.0 + np.sqrt(0.24), rtol=1e-12)
    assert np.isclose(val, 2.4899, atol=5e-5)
    assert stability_tv_bound(0.0, 1.0, lam=4.0) == 1.5
    assert stability_tv_bound(0.0, 1.0, lam=1.0) == 0.0
    # x_max below 1 falls back to the max(x_max, 1) convention
    assert stability_tv_bound(0.5, 0.5, lam=3.0) == stability_tv_bound(
        0.5, 1.0, lam=3.0
    )
    with pytest.raises(InvalidConfig):
        stability_tv_bound(0.1, 1.0)
    with pytest.raises(InvalidConfig):
        stability_tv_bound(0.1, 1.0, lam=1.0, eta=0.4)


def test_noisy_tv_bound_examples():
    base = noisy_tv_bound(0.0, 0.0, 1.0, k=10, n=30, delta=0.05, lam=4.0)
    assert base == 1.5

    val = noisy_tv_bound(0.0, 0.5, 1.0, k=30, n=30, delta=0.05, lam=4.0)
    noise = val - 1.5
    assert np.isclose(noise, 2.0 * np.sqrt(np.log(2400.0)), rtol=1e-12)
    assert np.isclose(noise, 5.5796, atol=5e-5)

    # with k = 1 and huge n the width-based branch is smaller
    lam = 4.0
    val = noisy_tv_bound(0.0, 0.5, 1.0, k=1, n=10**6, delta=0.05, lam=lam)
    width_branch = 14.0 * np.sqrt(np.log(13.0 * 10**6 / 0.05) / 10**6)
    other = 4.0 * np.sqrt(np.log(4.0 * 10**6 / 0.05))
    assert width_branch < other
    assert np.isclose(val, lam / 2 - 0.5 + 0.5 * width_branch, rtol=1e-12)

    with pytest.raises(InvalidConfig):
        noisy_tv_bound(0.0, 0.5, 1.0, k=1, n=10, delta=1.5, lam=4.0)


def test_select_interval_two_point():
    w = EmpiricalWeight(np.array([-1.0, 1.0]))
    report = select_interval(w, c=0.3)
    assert report.lo <= 0.0 <= report.hi
    assert report.c_inf >= 0.3
    assert report.n_in == 0  # data points themselves sit where g = 0
    with pytest.raises(NoInterval):
        select_interval(w, c=10.0)


def test_select_interval_uniform_sample_contains_central_two_thirds():
    rng = rngs.generator(123, rngs.DOMAIN_TEST)
    xs = np.sort(rngs.uniform_range(rng, -1.0, 1.0, 10_000))
    w = EmpiricalWeight(xs, x_max=1.0)
    report = select_interval(w, c=1.0 / 4320.0)
    assert report.lo <= -2.0 / 3.0 and report.hi >= 2.0 / 3.0
    assert report.n_in >= 8000


def test_infimum_on_matches_direct_grid_min():
    xs = np.linspace(-1.0, 1.0, 51)
    w = EmpiricalWeight(xs)
    val = infimum_on(w, -0.5, 0.5, grid_step=0.01)
    grid = -0.5 + 0.01 * np.arange(101)
    assert np.isclose(val, float(np.min(w.eval(grid))), rtol=1e-12)
    with pytest.raises(InvalidConfig):
        infimum_on(w, 0.5, -0.5)


def test_middle_window_examples():
    assert middle_window(8) == (1, 5)
    assert middle_window(6) == (1, 3)
    assert middle_window(30) == (7, 21)
    assert middle_window(4) == (0, 2)
    # too short to hold a triple: widened to the full range
    assert middle_window(3) == (0, 2)
    assert middle_window(5) == (0, 4)


def test_interpolant_lower_bound_examples():
    xs = np.linspace(-1.0, 1.0, 9)
    linear = Dataset(xs=xs, ys=3.0 * xs + 0.5, x_max=1.0)
    assert interpolant_tv_lower_bound(linear, mode="plain") == 0.0

    toy = Dataset(
        xs=np.array([-1.0, 0.0, 1.0]), ys=np.array([0.0, 1.0, 0.0]), x_max=1.0
    )
    assert interpolant_tv_lower_bound(toy, mode="plain") == 2.0
    w = weight_g(toy)
    expect = 2.0 * infimum_on(w, -1.0, 1.0)
    assert np.isclose(
        interpolant_tv_lower_bound(toy, mode="weighted"), expect, rtol=1e-12
    )

    with pytest.raises(NotEquispaced):
        interpolant_tv_lower_bound(
            Dataset(
                xs=np.array([-1.0, -0.2, 1.0]),
                ys=np.zeros(3),
                x_max=1.0,
            )
        )
    with pytest.raises(InvalidConfig):
        interpolant_tv_lower_bound(
            Dataset(xs=np.array([-1.0, 1.0]), ys=np.zeros(2), x_max=1.0)
        )
    with pytest.raises(InvalidConfig):
        interpolant_tv_lower_bound(toy, mode="nonsense")


def test_interpolant_lower_bound_disjoint_triples():
    # 9 points, middle window is indices 2..5, one triple (2,3,4)
    xs = np.linspace(-1.0, 1.0, 9)
    ys = np.zeros(9)
    ys[3] = 1.0
    data = Dataset(xs=xs, ys=ys, x_max=1.0)
    # second difference of the triple (2,3,4): |0 - 2 + 0| = 2
    assert interpolant_tv_lower_bound(data, mode="plain") == (9 - 1) / 2.0 * 2.0


def test_check_equispaced():
    h = check_equispaced(np.linspace(0.0, 1.0, 11))
    assert np.isclose(h, 0.1, rtol=1e-12)
    with pytest.raises(NotEquispaced):
        check_equispaced(np.array([0.0, 0.1, 0.25]))


def test_interval_mse_mask():
    data = Dataset(xs=np.linspace(-1, 1, 5), ys=np.zeros(5), x_max=1.0)
    assert np.sum(interval_mse_mask(data, -0.6, 0.6)) == 3
    with pytest.raises(EmptyInterval):
        interval_mse_mask(data, 2.0, 3.0)


def test_export_weight_csv(tmp_path):
    xs = np.array([-1.0, 0.0, 1.0])
    w = EmpiricalWeight(xs)
    path = tmp_path / "g.csv"
    grid = np.array([-0.5, 0.0, 0.5])
    export_weight_csv(w, grid, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "x,g"
    assert len(lines) == 4
    got = [float(line.split(",")[1]) for line in lines[1:]]
    assert np.allclose(got, w.eval(grid), rtol=1e-15)


def test_interval_report_json():
    rep = IntervalReport(lo=-0.5, hi=0.5, c_inf=0.01, n_in=7, grid_step=0.001)
    assert rep.to_json_dict() == {
        "lo": -0.5,
        "hi": 0.5,
        "c_inf": 0.01,
        "n_in": 7,
        "grid_step": 0.001,
    }
