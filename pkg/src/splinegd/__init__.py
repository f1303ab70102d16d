"""Training and certification of univariate two-layer ReLU networks.

The package trains f(x) = sum_j w2[j]*relu(w1[j]*x + b1[j]) + b2 with
full-batch gradient descent and numerically certifies how the step size
controls curvature, weighted total variation, and interval MSE of the
solutions it can retain.
"""

from .certificates import CertificateReport, CheckpointCertificates, verify_bounds
from .errors import SplineGdError
from .experiments import (
    ExperimentConfig,
    counterexample_study,
    eta_sweep,
    export_basis,
    gen_counterexample,
    gen_hat_dataset,
    generalization_gap,
    mse,
    rate_experiment,
    sparsity_metrics,
)
from .funcspace import (
    EmpiricalWeight,
    IntervalReport,
    infimum_on,
    interpolant_tv_lower_bound,
    noisy_tv_bound,
    select_interval,
    stability_tv_bound,
    tv_on_interval,
    weight_g,
    weighted_tv,
)
from .landscape import (
    Dataset,
    SpectrumReport,
    beos_first_index,
    is_stable,
    lambda_max,
    linearized_dynamics,
    loss,
    loss_gradient,
    loss_hessian,
    spectrum_report,
)
from .relu_net import (
    NetParams,
    PiecewiseLinear,
    differentiability_margin,
    extract_knots,
    forward,
    hessian_vector_product,
    init_params,
    param_gradient,
    param_hessian,
)
from .trainer import (
    RunSummary,
    TrainConfig,
    TrainRecord,
    check_optimized,
    detect_steady_state,
    gd_step,
    min_norm_interpolant,
    train,
)

__version__ = "0.1.0"
