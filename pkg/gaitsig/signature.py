"""Cycle resampling on the normalized grid, signature averaging and the
cross-cycle variance cost."""

from __future__ import annotations

import logging
from typing import Sequence

import numpy as np
from scipy import stats

from gaitsig.errors import SpanError, ValidationError
from gaitsig.models import GaitCycle, NormalizedGrid, ScalarSignal, Segmentation, Signature

logger = logging.getLogger(__name__)

# float slack when comparing interval ends against the sample span
_SPAN_SLACK = 1e-9


def as_boundaries(seg: Segmentation | Sequence[float] | np.ndarray) -> np.ndarray:
    if isinstance(seg, Segmentation):
        return seg.boundaries
    return np.asarray(seg, dtype=float)


def _check_intervals(signal: ScalarSignal, starts: np.ndarray, ends: np.ndarray) -> None:
    lo, hi = signal.span
    if np.any(ends <= starts):
        raise SpanError("cycle intervals must have t_end > t_start")
    if starts.min() < lo - _SPAN_SLACK or ends.max() > hi + _SPAN_SLACK:
        raise SpanError(f"interval [{starts.min()}, {ends.max()}] leaves the signal span [{lo}, {hi}]")
    for gap_start, gap_end in signal.gaps:
        hit = (starts < gap_end) & (ends > gap_start)
        if np.any(hit):
            raise SpanError(f"interval crosses a sampling gap [{gap_start}, {gap_end}]")


def extract_cycles(seg: Segmentation | Sequence[float] | np.ndarray, signal: ScalarSignal,
                   grid: NormalizedGrid) -> np.ndarray:
    """Every cycle of ``seg`` resampled on ``grid``, shape (M, L)."""
    b = as_boundaries(seg)
    starts, ends = b[:-1], b[1:]
    _check_intervals(signal, starts, ends)
    query = starts[:, None] + (ends - starts)[:, None] * grid.points[None, :]
    return np.interp(query.ravel(), signal.times, signal.values).reshape(query.shape)


def extract_cycle(signal: ScalarSignal, t_start: float, t_end: float, grid: NormalizedGrid) -> GaitCycle:
    values = extract_cycles(np.array([t_start, t_end], dtype=float), signal, grid)[0]
    return GaitCycle(values, float(t_start), float(t_end))


def _signature(cycles: np.ndarray) -> Signature:
    m = cycles.shape[0]
    mean = cycles.mean(axis=0)
    std = cycles.std(axis=0, ddof=1) if m > 1 else np.zeros_like(mean)
    return Signature(mean, std, m)


def average_signature(cycles: Sequence[GaitCycle]) -> Signature:
    if not cycles:
        raise ValidationError("cannot average an empty list of cycles")
    sizes = {c.grid_size for c in cycles}
    if len(sizes) != 1:
        raise ValidationError(f"cycles were resampled on different grids: {sorted(sizes)}")
    return _signature(np.stack([c.values for c in cycles]))


def signature_from_segmentation(seg: Segmentation | np.ndarray, signal: ScalarSignal,
                                grid: NormalizedGrid) -> Signature:
    return _signature(extract_cycles(seg, signal, grid))


def variance_cost(cycles: np.ndarray) -> float:
    """Mean squared deviation of the cycles from their own mean."""
    return float(np.mean((cycles - cycles.mean(axis=0)) ** 2))


def cost_V(seg: Segmentation | Sequence[float] | np.ndarray, signal: ScalarSignal, grid: NormalizedGrid) -> float:
    return variance_cost(extract_cycles(seg, signal, grid))


def _z(level: float) -> float:
    if not 0 < level < 1:
        raise ValidationError(f"confidence level must lie in (0, 1), got {level}")
    return float(stats.norm.ppf(0.5 + level / 2))


def confidence_band(sig: Signature, level: float = 0.95) -> tuple[np.ndarray, np.ndarray]:
    """Band of the mean: mean -/+ z * std / sqrt(M)."""
    if sig.num_cycles < 2:
        raise ValidationError("a confidence band needs at least 2 cycles")
    half = _z(level) * sig.std / np.sqrt(sig.num_cycles)
    return sig.mean - half, sig.mean + half


def population_band(sig: Signature, level: float = 0.95) -> tuple[np.ndarray, np.ndarray]:
    """Band of a single cycle: mean -/+ z * std."""
    if sig.num_cycles < 2:
        raise ValidationError("a confidence band needs at least 2 cycles")
    half = _z(level) * sig.std
    return sig.mean - half, sig.mean + half
