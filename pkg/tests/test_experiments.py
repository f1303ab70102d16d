"""Tests for dataset generators, evaluation metrics, and experiment sweeps."""

import numpy as np
import pytest

from splinegd.errors import (
    DataError,
    EmptyInterval,
    InsufficientData,
    InvalidConfig,
    MissingGroundTruth,
    MissingSigma,
)
from splinegd.experiments import (
    COUNTER_CSV_HEADER,
    SWEEP_CSV_HEADER,
    ExperimentConfig,
    checkpoint_slacks,
    counterexample_study,
    eta_sweep,
    export_basis,
    gen_counterexample,
    gen_hat_dataset,
    generalization_gap,
    hat_truth,
    mse,
    rate_experiment,
    sample_first_layer,
    sparsity_metrics,
    sweep_csv_rows,
    write_basis_csv,
    zero_truth,
)
from splinegd.funcspace import interval_mse_mask, interpolant_tv_lower_bound, tv_on_interval
from splinegd.landscape import Dataset
from splinegd.relu_net import NetParams, extract_knots, forward
from splinegd.trainer import min_norm_interpolant


def hat_params():
    # 2*relu(x + 0.5) - 4*relu(x) equals the tent 2x+1 / -2x+1 on [-0.5, 0.5]
    return NetParams(
        w1=np.array([1.0, 1.0]),
        b1=np.array([0.5, 0.0]),
        w2=np.array([2.0, -4.0]),
        b2=0.0,
    )


def zero_net():
    return NetParams(
        w1=np.array([1.0]), b1=np.array([0.0]), w2=np.array([0.0]), b2=0.0
    )


def test_hat_truth_values():
    assert hat_truth(0.0) == 1.0
    assert hat_truth(-0.5) == 0.0
    assert hat_truth(0.5) == 0.0
    assert np.allclose(hat_truth(np.array([-0.25, 0.25])), [0.5, 0.5])


def test_gen_hat_dataset_shape_and_labels():
    data = gen_hat_dataset(n=30, sigma=0.5, seed=4)
    assert data.n == 30
    assert data.xs[0] == -0.5 and data.xs[-1] == 0.5
    spacing = np.diff(data.xs)
    assert np.max(np.abs(spacing - spacing[0])) <= 1e-12 * spacing[0]
    assert np.array_equal(data.ys, hat_truth(data.xs) + data.noises)
    assert data.sigma == 0.5

    clean = gen_hat_dataset(n=10, sigma=0.0, seed=4)
    assert np.array_equal(clean.ys, hat_truth(clean.xs))


def test_gen_hat_dataset_deterministic():
    a = gen_hat_dataset(seed=7)
    b = gen_hat_dataset(seed=7)
    c = gen_hat_dataset(seed=8)
    assert np.array_equal(a.ys, b.ys)
    assert not np.array_equal(a.ys, c.ys)


def test_gen_counterexample_grid():
    data = gen_counterexample(21, 0.5, seed=2, x_max=1.0)
    assert data.xs[0] == -1.0 and data.xs[-1] == 1.0
    spacing = np.diff(data.xs)
    assert np.max(np.abs(spacing - spacing[0])) <= 1e-12 * spacing[0]
    assert np.array_equal(data.ys, data.noises)
    assert np.array_equal(zero_truth(data.xs), np.zeros(21))

    silent = gen_counterexample(5, 0.0, seed=2)
    assert np.array_equal(silent.ys, np.zeros(5))


def test_mse_exact_fit_and_zero_network():
    data = gen_hat_dataset(seed=3)
    assert mse(hat_params(), data) == 0.0
    oracle = float(np.mean(hat_truth(data.xs) ** 2))
    assert mse(zero_net(), data) == oracle


def test_mse_interval_restriction():
    data = gen_hat_dataset(n=20, sigma=0.5, seed=5)
    lo, hi = -0.2, 0.2
    got = mse(zero_net(), data, (lo, hi))
    mask = (data.xs >= lo) & (data.xs <= hi)
    assert got == pytest.approx(float(np.mean(hat_truth(data.xs[mask]) ** 2)))
    with pytest.raises(EmptyInterval):
        mse(zero_net(), data, (10.0, 11.0))


def test_mse_requires_ground_truth():
    bare = Dataset(xs=np.array([-0.5, 0.5]), ys=np.array([0.0, 1.0]), x_max=0.5)
    with pytest.raises(MissingGroundTruth):
        mse(zero_net(), bare)


def test_generalization_gap_silent_case():
    data = gen_counterexample(9, 0.0, seed=0)
    assert generalization_gap(zero_net(), data, (-0.5, 0.5), m=1000) == 0.0


def test_generalization_gap_matches_noise_decomposition():
    # with f = f0 both error terms are pure noise: the test side concentrates
    # at sigma^2 over 10^6 draws while the empirical side is the mean squared
    # stored noise on the interval
    data = gen_hat_dataset(seed=0)
    sigma2 = data.sigma**2
    gap = generalization_gap(
        hat_params(), data, (-1.0 / 3.0, 1.0 / 3.0), test_seed=0, m=1_000_000
    )
    mask = interval_mse_mask(data, -1.0 / 3.0, 1.0 / 3.0)
    emp = float(np.mean(data.noises[mask] ** 2))
    assert abs(gap - abs(sigma2 - emp)) <= 0.01 * sigma2


def test_generalization_gap_validation():
    data = gen_hat_dataset(seed=0)
    with pytest.raises(InvalidConfig):
        generalization_gap(hat_params(), data, (-0.3, 0.3), m=0)
    with pytest.raises(EmptyInterval):
        generalization_gap(hat_params(), data, (2.0, 3.0))
    no_sigma = Dataset(
        xs=data.xs, ys=data.ys, x_max=data.x_max, ground_truth=hat_truth
    )
    with pytest.raises(MissingSigma):
        generalization_gap(hat_params(), no_sigma, (-0.3, 0.3))


def test_experiment_config_validation():
    with pytest.raises(InvalidConfig):
        ExperimentConfig(delta=0.0)
    with pytest.raises(InvalidConfig):
        ExperimentConfig(reps=0)
    with pytest.raises(InvalidConfig):
        ExperimentConfig(sigma=-0.1)
    with pytest.raises(InvalidConfig):
        ExperimentConfig(design="cubic").make_dataset(0)


def test_resolve_interval_priorities():
    data = gen_hat_dataset(n=20, sigma=0.5, seed=0)
    explicit = ExperimentConfig(interval_lo=-0.2, interval_hi=0.3)
    assert explicit.resolve_interval(data) == (-0.2, 0.3)
    default = ExperimentConfig()
    lo, hi = default.resolve_interval(data)
    assert lo == pytest.approx(-1.0 / 3.0) and hi == pytest.approx(1.0 / 3.0)
    by_weight = ExperimentConfig(interval_c=0.01)
    wlo, whi = by_weight.resolve_interval(data)
    assert -0.5 < wlo < whi < 0.5


def tiny_sweep_config(**over):
    base = dict(
        design="hat", n=8, sigma=0.3, k=8, eta_grid=(0.4,), reps=1,
        max_steps=300, log_every=100, workers=1, seed=0,
    )
    base.update(over)
    return ExperimentConfig(**base)


def test_eta_sweep_single_cell():
    result = eta_sweep(tiny_sweep_config())
    assert len(result.cells) == 1
    cell = result.cells[0]
    assert not cell.diverged
    assert cell.steps == 300
    assert cell.final is not None and np.isfinite(cell.final.loss)
    assert cell.final_params is not None
    assert cell.checked_checkpoints >= 1
    assert cell.min_tv_budget_slack is not None
    rows = result.medians()
    assert len(rows) == 1 and rows[0]["cells"] == 1
    assert len(SWEEP_CSV_HEADER) == len(sweep_csv_rows(result)[0])


def test_eta_sweep_requires_grid():
    with pytest.raises(InvalidConfig):
        eta_sweep(tiny_sweep_config(eta_grid=()))


def test_eta_sweep_deterministic():
    a = eta_sweep(tiny_sweep_config(eta_grid=(0.4, 0.1), reps=2))
    b = eta_sweep(tiny_sweep_config(eta_grid=(0.4, 0.1), reps=2))
    assert sweep_csv_rows(a) == sweep_csv_rows(b)


def test_eta_sweep_shares_data_across_grid():
    result = eta_sweep(tiny_sweep_config(eta_grid=(0.4, 0.1)))
    seeds = {cell.seed for cell in result.cells}
    assert seeds == {0}
    finals = [cell.final.loss for cell in result.cells]
    assert finals[0] != finals[1]


def test_eta_sweep_records_divergence():
    config = tiny_sweep_config(eta_grid=(1e9,), max_steps=200, log_every=50)
    with np.errstate(over="ignore", invalid="ignore"):
        result = eta_sweep(config)
    assert result.cells[0].diverged
    assert result.medians()[0] == {"eta": 1e9, "cells": 0}
    assert result.hard_pass()


def test_sweep_hard_pass_flags_negative_slack():
    result = eta_sweep(tiny_sweep_config())
    assert result.hard_pass()
    result.cells[0].min_gn_lower_slack = -1.0
    assert not result.hard_pass()


def test_checkpoint_slacks_skip_missing_spectra():
    result = eta_sweep(tiny_sweep_config(), keep_records=True)
    records = result.cells[0].records
    tv_slack, gn_slack, count = checkpoint_slacks(records, 0.5)
    usable = [r for r in records if r.lambda_max_full is not None]
    assert count == len(usable)
    assert tv_slack is not None
    assert checkpoint_slacks([], 0.5) == (None, None, 0)


def test_rate_experiment_noiseless_control():
    config = ExperimentConfig(
        design="hat", sigma=0.0, k=16, eta=0.4, n_grid=(8, 10, 12, 14),
        reps=2, max_steps=20_000, log_every=2000, workers=1, seed=0,
    )
    result = rate_experiment(config)
    assert result.noiseless_control
    assert result.slope is None and result.intercept is None
    assert all(row.included for row in result.rows)
    assert len(result.medians) == 4
    # with no label noise the interval MSE is driven to numerical zero
    assert max(result.medians) < 1e-6


def test_rate_experiment_noisy_fit_deterministic():
    config = ExperimentConfig(
        design="hat", sigma=0.3, k=16, eta=0.4, n_grid=(8, 10, 12, 14),
        reps=2, max_steps=5000, log_every=500, workers=1, seed=0,
    )
    result = rate_experiment(config)
    again = rate_experiment(config)
    assert not result.noiseless_control
    assert result.slope == again.slope
    assert result.slope < 0.0
    assert result.n_intervals == again.n_intervals


def test_rate_experiment_needs_four_sizes():
    config = ExperimentConfig(
        design="hat", sigma=0.3, k=8, n_grid=(8, 10, 12), reps=1, workers=1
    )
    with pytest.raises(InsufficientData):
        rate_experiment(config)


def test_sample_first_layer_covers_every_gap():
    xs = np.linspace(-0.5, 0.5, 12)
    w1, b1 = sample_first_layer(24, xs, seed=9)
    assert np.all(np.abs(w1) == 1.0)
    knots = -b1 / w1
    for lo, hi in zip(xs[:-1], xs[1:]):
        assert np.any((knots > lo) & (knots < hi))
    # kinks never sit on a sample point
    assert np.min(np.abs(knots[:, None] - xs[None, :])) > 0.0
    with pytest.raises(DataError):
        sample_first_layer(4, np.array([0.0]), seed=0)


def test_interpolant_tv_matches_lower_bound_on_toy():
    # relu(x+2) - 2 relu(x) - 1 interpolates (-1,0), (0,1), (1,0) with its
    # only in-range slope change of -2 at zero, exactly the data
    # second-difference bound
    data = Dataset(
        xs=np.array([-1.0, 0.0, 1.0]),
        ys=np.array([0.0, 1.0, 0.0]),
        x_max=1.0,
    )
    params = NetParams(
        w1=np.array([1.0, 1.0]),
        b1=np.array([2.0, 0.0]),
        w2=np.array([1.0, -2.0]),
        b2=-1.0,
    )
    assert np.allclose(forward(params, data.xs), data.ys)
    tv = tv_on_interval(extract_knots(params), -1.0, 1.0)
    lower = interpolant_tv_lower_bound(data, mode="plain")
    assert tv == pytest.approx(2.0)
    assert lower == pytest.approx(2.0)
    assert tv >= lower - 1e-12


def test_counterexample_study_small_sizes():
    config = ExperimentConfig(
        design="counterexample", sigma=0.5, x_max=1.0, n_grid=(3, 6, 12),
        reps=2, seed=0, workers=1,
    )
    rows = counterexample_study(config)
    assert len(rows) == 6
    for row in rows:
        assert row.residual_rms <= 1e-8
        assert row.k == 2 * row.n
        assert row.hard_pass()
        assert row.middle_tv >= row.lower_plain - 1e-8
        assert row.weighted_tv >= row.lower_weighted - 1e-8
    assert len(COUNTER_CSV_HEADER) == 13


def test_counterexample_sharpness_grows_with_n():
    config = ExperimentConfig(
        design="counterexample", sigma=0.5, x_max=1.0, n_grid=(6, 12),
        reps=3, seed=1, workers=1,
    )
    rows = counterexample_study(config)

    def med_lam(n):
        return float(np.median([r.lambda_max_full for r in rows if r.n == n]))

    # the implied step-size ceiling 2 / lambda_max shrinks as n grows
    assert 2.0 / med_lam(12) < 2.0 / med_lam(6)


def test_counterexample_needs_grid():
    with pytest.raises(InvalidConfig):
        counterexample_study(ExperimentConfig(design="counterexample", n_grid=()))


def test_sparsity_metrics_single_neuron():
    data = Dataset(
        xs=np.array([-0.5, 0.0, 0.5]), ys=np.zeros(3), x_max=0.5
    )
    params = NetParams(
        w1=np.array([1.0]), b1=np.array([0.0]), w2=np.array([1.0]), b2=0.0
    )
    out = sparsity_metrics(params, data)
    assert out["knot_count"] == 1
    assert out["dslope_l1"] == 1.0
    assert out["min_knot_to_datum"] == 0.0
    assert out["q50"] == 0.0


def test_sparsity_metrics_out_of_range_and_tiny_slopes():
    data = Dataset(xs=np.array([-0.5, 0.5]), ys=np.zeros(2), x_max=0.5)
    far = NetParams(
        w1=np.array([1.0]), b1=np.array([5.0]), w2=np.array([1.0]), b2=0.0
    )
    out = sparsity_metrics(far, data)
    assert out["knot_count"] == 0
    assert out["q50"] is None

    faint = NetParams(
        w1=np.array([1.0]), b1=np.array([0.0]), w2=np.array([1e-15]), b2=0.0
    )
    assert sparsity_metrics(faint, data)["knot_count"] == 0


def test_export_basis_identity_neuron():
    params = NetParams(
        w1=np.array([1.0]), b1=np.array([0.0]), w2=np.array([1.0]), b2=0.0
    )
    grid, basis = export_basis(params, 0.0, 1.0, 3)
    assert np.allclose(grid, [0.0, 0.5, 1.0])
    assert np.allclose(basis, [[0.0, 0.5, 1.0]])


def test_export_basis_sums_to_forward():
    rng = np.random.default_rng(0)
    params = NetParams(
        w1=rng.normal(size=6),
        b1=rng.normal(size=6),
        w2=rng.normal(size=6),
        b2=0.7,
    )
    grid, basis = export_basis(params, -1.0, 1.0, 33)
    recon = basis.sum(axis=0) + params.b2
    assert np.max(np.abs(recon - forward(params, grid))) <= 1e-10


def test_export_basis_inactive_unit_is_zero():
    params = NetParams(
        w1=np.array([1.0]), b1=np.array([-10.0]), w2=np.array([3.0]), b2=0.0
    )
    _, basis = export_basis(params, 0.0, 1.0, 5)
    assert np.array_equal(basis, np.zeros((1, 5)))
    with pytest.raises(InvalidConfig):
        export_basis(params, 0.0, 1.0, 1)


def test_write_basis_csv_layout(tmp_path):
    params = NetParams(
        w1=np.array([1.0, -1.0]),
        b1=np.array([0.0, 0.5]),
        w2=np.array([1.0, 2.0]),
        b2=0.0,
    )
    grid, basis = export_basis(params, -0.5, 0.5, 4)
    path = tmp_path / "basis.csv"
    write_basis_csv(path, grid, basis)
    lines = path.read_text().splitlines()
    assert lines[0].split(",")[:2] == ["unit", "x0"]
    assert lines[1].split(",")[0] == "x"
    assert len(lines) == 2 + basis.shape[0]
