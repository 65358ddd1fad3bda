"""Gaussian-process surrogate for unbalanced multiphase distribution
power flow, benchmarked against a from-scratch neural network and a
linearized branch-flow model, with an in-repo nonlinear solver as the
ground-truth oracle."""

from .errors import ConvergenceError, FeederParseError, FeederValidationError
from .feeder import Bus, DerUnit, Feeder, LineSegment, LoadPoint, flatten_index
from .feeder_io import emit_feeder, load_feeder, parse_feeder, save_feeder
from .gp import (
    GpConfig,
    GpModel,
    GpPrediction,
    KernelParams,
    fit,
    kernel_eval,
    load_gp,
    log_marginal_likelihood,
    predict,
    save_gp,
)
from .ldf import LdfSolution, ldf_residual, ldf_voltage_mag, solve_ldf
from .metrics import ErrorReport, compute_errors
from .mlp import (
    MlpConfig,
    MlpModel,
    default_widths,
    load_mlp,
    predict_mlp,
    save_mlp,
    train_mlp,
)
from .pf import PfSolution, mismatch, solve_nonlinear
from .scenario import (
    Dataset,
    IrradianceProfile,
    Loadshape,
    generate_dataset,
    load_dataset,
    save_dataset,
    split_cases,
)
from .synthetic import build_feeder_123, generate_synthetic_feeder
from .bench import CaseReport, emit_plot_data, run_case, run_generalization

__version__ = "0.1.0"
