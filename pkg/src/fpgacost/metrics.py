"""Evaluation statistics for the prediction models.

Conventions that matter for reproducibility:
  - sMAPE terms with |y| + |yhat| == 0 are defined as 0.
  - Quartiles use linear interpolation between order statistics.
  - Box-plot outliers follow the 1.5 * IQR whisker rule.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def _pair(y, yhat) -> tuple[np.ndarray, np.ndarray]:
    y = np.asarray(y, dtype=np.float64)
    yhat = np.asarray(yhat, dtype=np.float64)
    if y.shape != yhat.shape or y.ndim != 1:
        raise ValueError("metric inputs must be 1D vectors of equal length")
    if y.size == 0:
        raise ValueError("metric inputs must be non-empty")
    return y, yhat


def r2(y, yhat) -> float:
    """Coefficient of determination: 1 - SSres / SStot."""
    y, yhat = _pair(y, yhat)
    if y.size < 2:
        raise ValueError("r2 needs at least 2 samples")
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        raise ValueError("r2 is undefined for a constant target vector")
    ss_res = float(np.sum((y - yhat) ** 2))
    return 1.0 - ss_res / ss_tot


def smape(y, yhat) -> float:
    """Symmetric mean absolute percentage error, 0..200, with 0/0 terms as 0."""
    y, yhat = _pair(y, yhat)
    num = 2.0 * np.abs(y - yhat)
    den = np.abs(y) + np.abs(yhat)
    terms = np.divide(num, den, out=np.zeros_like(num), where=den != 0.0)
    return float(100.0 * terms.mean())


def mae(y, yhat) -> float:
    y, yhat = _pair(y, yhat)
    return float(np.mean(np.abs(y - yhat)))


@dataclass(frozen=True)
class ErrorDistribution:
    median: float
    mean: float
    q1: float
    q3: float
    iqr: float
    outliers: tuple[float, ...]
    max_error: float  # largest magnitude in the input

    def as_dict(self) -> dict:
        return {
            "median": self.median,
            "mean": self.mean,
            "q1": self.q1,
            "q3": self.q3,
            "iqr": self.iqr,
            "outliers": list(self.outliers),
            "max_error": self.max_error,
        }


def error_distribution(errors) -> ErrorDistribution:
    """Box-plot summary of an error vector."""
    e = np.asarray(errors, dtype=np.float64)
    if e.ndim != 1 or e.size == 0:
        raise ValueError("error_distribution needs a non-empty 1D vector")
    q1, med, q3 = (float(v) for v in np.percentile(e, [25.0, 50.0, 75.0], method="linear"))
    iqr = q3 - q1
    lo, hi = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    outliers = tuple(float(v) for v in e[(e < lo) | (e > hi)])
    return ErrorDistribution(
        median=med,
        mean=float(e.mean()),
        q1=q1,
        q3=q3,
        iqr=iqr,
        outliers=outliers,
        max_error=float(np.max(np.abs(e))),
    )


def within_threshold_fraction(errors, threshold: float) -> float:
    """Fraction of errors with magnitude strictly below the threshold."""
    e = np.asarray(errors, dtype=np.float64)
    if e.size == 0:
        raise ValueError("within_threshold_fraction needs a non-empty vector")
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    return float(np.mean(np.abs(e) < threshold))


def regression_report(y, yhat, threshold: float) -> dict:
    """Bundle of every statistic reported per target."""
    errors = np.asarray(yhat, dtype=np.float64) - np.asarray(y, dtype=np.float64)
    return {
        "r2": r2(y, yhat),
        "smape": smape(y, yhat),
        "mae": mae(y, yhat),
        "error_distribution": error_distribution(errors).as_dict(),
        "within_threshold_fraction": within_threshold_fraction(errors, threshold),
        "threshold": threshold,
        "n": int(np.asarray(y).size),
    }
