"""Prediction error metrics over flattened voltage matrices."""

from dataclasses import dataclass

import numpy as np


@dataclass
class ErrorReport:
    """Scalar metrics over all entries plus per-output and per-sample MAE
    marginals; errors are in per-unit voltage space."""

    mse: float
    mae: float
    max_abs_error: float
    min_abs_error: float
    per_output_mae: np.ndarray
    per_sample_mae: np.ndarray
    unit: str = "pu"

    def to_row(self) -> dict:
        return {
            "mse": self.mse,
            "mae": self.mae,
            "max_abs_error": self.max_abs_error,
            "min_abs_error": self.min_abs_error,
            "unit": self.unit,
        }


def compute_errors(pred: np.ndarray, truth: np.ndarray) -> ErrorReport:
    """Elementwise error metrics; inputs are m x D (a single row is fine)."""
    p = np.atleast_2d(np.asarray(pred, dtype=float))
    t = np.atleast_2d(np.asarray(truth, dtype=float))
    if p.shape != t.shape:
        raise ValueError(f"shape mismatch: pred {p.shape} vs truth {t.shape}")
    if p.size == 0:
        raise ValueError("empty input")
    err = np.abs(p - t)
    return ErrorReport(
        mse=float(np.mean(err**2)),
        mae=float(np.mean(err)),
        max_abs_error=float(err.max()),
        min_abs_error=float(err.min()),
        per_output_mae=err.mean(axis=0),
        per_sample_mae=err.mean(axis=1),
    )
