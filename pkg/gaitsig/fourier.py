"""Fourier-series model of a gait signature.

The series is fitted by least squares on the normalized grid:

    G[l] = sum_{k=0}^{K-1} a_k cos(2 pi tau_l k) + b_k sin(2 pi tau_l k)

The sin(0) column is identically zero, so b_0 is pinned to 0 and a model of
order K has P = 2K - 1 free parameters. Orders are compared with AIC or BIC
using the concentrated Gaussian likelihood L * ln(RSS / L).
"""

from __future__ import annotations

import logging
from typing import Any, NamedTuple

import numpy as np
import pandas as pd
from scipy import linalg, stats

from gaitsig.errors import NumericalError, ValidationError
from gaitsig.models import FourierModel, NormalizedGrid, OptTrace, Segmentation, Signature

logger = logging.getLogger(__name__)

# relative size of the smallest R diagonal below which H is rank deficient
_RANK_TOL = 1e-10
# RSS floor relative to the signature scale; exact fits tie at this value
_RSS_FLOOR = 1e-12


class OrderSelection(NamedTuple):
    order: int
    criterion: str
    scores: pd.DataFrame


class ResidualBand(NamedTuple):
    residuals: np.ndarray
    lower: float
    upper: float


def _evaluate(tau: np.ndarray, order: int) -> np.ndarray:
    k = np.arange(order)
    phase = 2.0 * np.pi * np.outer(tau, k)
    return np.hstack([np.cos(phase), np.sin(phase[:, 1:])])


def design_matrix(grid: NormalizedGrid, order: int) -> np.ndarray:
    """L x (2K-1) matrix with columns cos(2 pi tau k), k<K, then sin(2 pi tau k), 1<=k<K."""
    if order < 1:
        raise ValidationError(f"model order must be >= 1, got {order}")
    return _evaluate(grid.points, order)


def fit_fourier(sig: Signature, order: int) -> FourierModel:
    n = sig.grid_size
    if order < 1:
        raise ValidationError(f"model order must be >= 1, got {order}")
    if 2 * order - 1 > n:
        raise ValidationError(f"order {order} is underdetermined on {n} grid points (2K-1 > L)")

    h = design_matrix(NormalizedGrid(n), order)
    q, r = linalg.qr(h, mode="economic")
    diag = np.abs(np.diag(r))
    if diag.min() <= _RANK_TOL * diag.max():
        raise NumericalError(f"design matrix of order {order} is rank deficient")
    theta = linalg.solve_triangular(r, q.T @ sig.mean)
    residual = sig.mean - h @ theta
    rss = float(residual @ residual)

    a = theta[:order]
    b = np.concatenate([[0.0], theta[order:]])
    return FourierModel(order, a, b, rss, n)


def evaluate(model: FourierModel, tau: Any) -> np.ndarray:
    """Series value at arbitrary normalized phases."""
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    return _evaluate(tau, model.order) @ model.theta


def reconstruct(model: FourierModel, grid: NormalizedGrid) -> np.ndarray:
    return evaluate(model, grid.points)


def information_criterion(rss: float, n: int, order: int, criterion: str = "bic",
                          penalty_count: str = "params") -> float:
    count = 2 * order - 1 if penalty_count == "params" else order
    fit = n * np.log(rss / n)
    if criterion == "aic":
        return float(fit + 2.0 * count)
    if criterion == "bic":
        return float(fit + count * np.log(n))
    raise ValidationError(f"unknown criterion {criterion!r}")


def select_order(sig: Signature, k_range: tuple[int, int] = (1, 25), criterion: str = "bic",
                 penalty_count: str = "params") -> OrderSelection:
    """Pick the order minimizing AIC or BIC; ties go to the lower order."""
    k_min, k_max = k_range
    n = sig.grid_size
    if not 1 <= k_min <= k_max or 2 * k_max - 1 > n:
        raise ValidationError(f"invalid order range {k_min}:{k_max} for {n} grid points")
    if criterion not in ("aic", "bic"):
        raise ValidationError(f"unknown criterion {criterion!r}")

    floor = max(n * (_RSS_FLOOR * float(np.max(np.abs(sig.mean)))) ** 2, np.finfo(float).tiny)
    rows = []
    for order in range(k_min, k_max + 1):
        rss = max(fit_fourier(sig, order).rss, floor)
        rows.append({
            "K": order,
            "RSS": rss,
            "AIC": information_criterion(rss, n, order, "aic", penalty_count),
            "BIC": information_criterion(rss, n, order, "bic", penalty_count),
        })
    scores = pd.DataFrame(rows)
    column = scores[criterion.upper()].to_numpy()
    best = int(scores["K"].iloc[int(np.argmin(column))])
    logger.info("selected order K=%d by %s over %d:%d", best, criterion.upper(), k_min, k_max)
    return OrderSelection(best, criterion, scores)


def approximation_residuals(model: FourierModel, sig: Signature, level: float = 0.95) -> ResidualBand:
    """Reconstruction minus signature mean, with a band on the residual spread."""
    residuals = reconstruct(model, NormalizedGrid(sig.grid_size)) - sig.mean
    z = float(stats.norm.ppf(0.5 + level / 2))
    centre = float(residuals.mean())
    half = z * float(residuals.std(ddof=1)) if residuals.size > 1 else 0.0
    return ResidualBand(residuals, centre - half, centre + half)


def gait_features(model: FourierModel, trace: OptTrace | None, seg: Segmentation) -> dict[str, float]:
    """Coefficients plus fit cost, segmentation cost and step-time statistics."""
    features: dict[str, float] = {}
    for k, value in enumerate(model.a):
        features[f"a{k}"] = float(value)
    for k, value in enumerate(model.b[1:], start=1):
        features[f"b{k}"] = float(value)
    features["rss"] = model.rss
    if trace is not None:
        features["final_cost"] = trace.final_cost
    durations = seg.durations
    features["step_time_mean"] = float(durations.mean())
    features["step_time_std"] = float(durations.std(ddof=1)) if durations.size > 1 else 0.0
    return features
