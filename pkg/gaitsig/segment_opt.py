"""Boundary refinement by a sequence of constrained scalar sub-problems.

Each outer sweep visits t_1 .. t_M in order. For boundary m the signature is
frozen and the cost is minimized over t_m alone, inside the window that keeps
both adjacent cycle durations within (eps_lo, eps_up). The signature is then
refreshed; an update that raises the full cost after the refresh is undone,
so the recorded sweep costs never increase. t_0 stays fixed.

A sweep ends with a search over a common offset of t_1 .. t_M against the
full cost, the one direction the single-boundary updates barely move along.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy import optimize

from gaitsig.errors import SpanError, ValidationError
from gaitsig.models import NormalizedGrid, OptTrace, ScalarSignal, Segmentation, Signature
from gaitsig.signature import as_boundaries, extract_cycles, signature_from_segmentation, variance_cost

logger = logging.getLogger(__name__)

# keeps the scalar search strictly inside the open feasible window
_EDGE = 1e-9

# nodes of the bracketing scan over the feasible window
_SCAN_POINTS = 33

# xatol of the polishing pass, relative to line_search_tol
_POLISH = 1e-4

# relative cost drop a common shift must reach to be taken
_MIN_GAIN = 1e-12


@dataclass(frozen=True)
class OptConfig:
    eps_lo: float = 0.5
    eps_up: float = 1.4
    gamma: float = 1e-4
    max_outer_iters: int = 20
    line_search_tol: float = 0.01

    def __post_init__(self) -> None:
        if not 0 < self.eps_lo < self.eps_up:
            raise ValidationError(f"bounds need 0 < eps_lo < eps_up, got {self.eps_lo}, {self.eps_up}")
        if not self.gamma > 0:
            raise ValidationError(f"gamma must be positive, got {self.gamma}")
        if self.max_outer_iters < 1:
            raise ValidationError(f"max_outer_iters must be >= 1, got {self.max_outer_iters}")
        if not self.line_search_tol > 0:
            raise ValidationError(f"line_search_tol must be positive, got {self.line_search_tol}")


class BoundaryStep(NamedTuple):
    time: float
    feasible: bool


class VarianceReport(NamedTuple):
    before: np.ndarray
    after: np.ndarray


def feasible_interval(boundaries: np.ndarray, m: int, cfg: OptConfig,
                      span_end: float) -> tuple[float, float] | None:
    """Open window for t_m with both neighbours fixed, or None if empty."""
    b = boundaries
    lo = b[m - 1] + cfg.eps_lo
    hi = min(b[m - 1] + cfg.eps_up, span_end)
    if m < b.size - 1:
        lo = max(lo, b[m + 1] - cfg.eps_up)
        hi = min(hi, b[m + 1] - cfg.eps_lo)
    if hi - lo <= 2 * _EDGE:
        return None
    return float(lo), float(hi)


def boundary_cost(t: float, m: int, seg: Segmentation | np.ndarray, signal: ScalarSignal,
                  grid: NormalizedGrid, frozen_mean: np.ndarray) -> float:
    """Cost of all cycles against a frozen signature with t_m moved to ``t``."""
    b = np.array(as_boundaries(seg), dtype=float)
    b[m] = t
    cycles = extract_cycles(b, signal, grid)
    return float(np.mean((cycles - frozen_mean) ** 2))


def _local_objective(b: np.ndarray, m: int, signal: ScalarSignal, grid: NormalizedGrid,
                     frozen_mean: np.ndarray, cycles: np.ndarray) -> Callable[[float], float]:
    # only cycles m and m+1 depend on t_m; the rest is a constant
    local = [m - 1] + ([m] if m < b.size - 1 else [])
    others = np.delete(cycles, local, axis=0)
    rest = float(np.sum((others - frozen_mean) ** 2))
    scale = 1.0 / cycles.size
    left = b[m - 1]
    right = b[m + 1] if m < b.size - 1 else None
    tau = grid.points

    def objective(t: float) -> float:
        total = rest
        q = left + (t - left) * tau
        total += np.sum((np.interp(q, signal.times, signal.values) - frozen_mean) ** 2)
        if right is not None:
            q = t + (right - t) * tau
            total += np.sum((np.interp(q, signal.times, signal.values) - frozen_mean) ** 2)
        return scale * total

    return objective


def _line_search(objective: Callable[[float], float], lo: float, hi: float, tol: float) -> float:
    """Scan [lo, hi] for the basin, Brent to ``tol``, then polish the cost."""
    nodes = np.linspace(lo, hi, _SCAN_POINTS)
    values = [objective(t) for t in nodes]
    k = int(np.argmin(values))
    lo_k, hi_k = nodes[max(k - 1, 0)], nodes[min(k + 1, nodes.size - 1)]
    coarse = optimize.minimize_scalar(objective, bounds=(lo_k, hi_k), method="bounded", options={"xatol": tol})
    # tol bounds the location only; a narrow second pass settles the cost
    a, z = max(lo, coarse.x - 2 * tol), min(hi, coarse.x + 2 * tol)
    fine = optimize.minimize_scalar(objective, bounds=(a, z), method="bounded", options={"xatol": tol * _POLISH})
    candidates = [(values[k], float(nodes[k])), (coarse.fun, float(coarse.x)), (fine.fun, float(fine.x))]
    return min(candidates)[1]


def optimize_boundary(seg: Segmentation | np.ndarray, m: int, signal: ScalarSignal, grid: NormalizedGrid,
                      cfg: OptConfig, frozen_mean: np.ndarray | None = None,
                      cycles: np.ndarray | None = None) -> BoundaryStep:
    """Minimize the frozen-signature cost over t_m alone.

    A coarse scan of the feasible window selects the basin, then a bounded
    Brent search (parabolic interpolation with golden-section fallback)
    refines it to ``cfg.line_search_tol`` and a second, much tighter pass
    around that point settles the cost. An empty feasible window leaves the
    boundary unchanged and reports ``feasible=False``.
    """
    b = np.asarray(as_boundaries(seg), dtype=float)
    if not 1 <= m <= b.size - 1:
        raise ValidationError(f"boundary index {m} outside 1..{b.size - 1}")
    window = feasible_interval(b, m, cfg, signal.span[1])
    if window is None:
        return BoundaryStep(float(b[m]), False)
    if cycles is None:
        cycles = extract_cycles(b, signal, grid)
    if frozen_mean is None:
        frozen_mean = cycles.mean(axis=0)

    objective = _local_objective(b, m, signal, grid, frozen_mean, cycles)
    lo, hi = window[0] + _EDGE, window[1] - _EDGE
    best = _line_search(objective, lo, hi, cfg.line_search_tol)
    if lo < b[m] < hi and objective(b[m]) <= objective(best):
        best = float(b[m])
    return BoundaryStep(best, True)


def _shift_window(b: np.ndarray, cfg: OptConfig, span_end: float) -> tuple[float, float] | None:
    # moving t_1..t_M together only changes the first duration
    first = b[1] - b[0]
    lo = cfg.eps_lo - first + _EDGE
    hi = min(cfg.eps_up - first, span_end - b[-1]) - _EDGE
    if hi - lo <= 2 * _EDGE:
        return None
    return float(lo), float(hi)


def shift_boundaries(seg: Segmentation | np.ndarray, signal: ScalarSignal, grid: NormalizedGrid,
                     cfg: OptConfig) -> float:
    """Best common offset of t_1 .. t_M under the full cost, t_0 held.

    The signature absorbs a common offset of every later boundary, so only
    the first cycle's dilation opposes it and single-boundary updates move
    along it very slowly. Returns 0.0 when no offset lowers the cost.
    """
    b = np.asarray(as_boundaries(seg), dtype=float)
    if b.size < 3:
        return 0.0
    window = _shift_window(b, cfg, signal.span[1])
    if window is None:
        return 0.0

    def objective(delta: float) -> float:
        trial = b.copy()
        trial[1:] += delta
        try:
            return variance_cost(extract_cycles(trial, signal, grid))
        except SpanError:
            return np.inf

    current = objective(0.0)
    delta = _line_search(objective, window[0], window[1], cfg.line_search_tol)
    if objective(delta) < current * (1 - _MIN_GAIN):
        return delta
    return 0.0


def _initially_feasible(b: np.ndarray, cfg: OptConfig) -> bool:
    d = np.diff(b)
    return bool(np.any((d > cfg.eps_lo) & (d < cfg.eps_up)))


def optimize_segmentation(initial: Segmentation, signal: ScalarSignal, grid: NormalizedGrid,
                          cfg: OptConfig) -> tuple[Segmentation, Signature, OptTrace]:
    b = np.array(initial.boundaries, dtype=float)
    n_cycles = b.size - 1
    if not _initially_feasible(b, cfg):
        raise ValidationError(
            f"initial segmentation is infeasible everywhere for bounds ({cfg.eps_lo}, {cfg.eps_up}) s"
        )

    cycles = extract_cycles(b, signal, grid)
    cost = variance_cost(cycles)
    initial_cost = cost
    costs: list[float] = []
    infeasible = [False] * (n_cycles + 1)
    rejected = 0
    logger.info("refining %d boundaries, initial V=%.6g", n_cycles, cost)

    for sweep in range(1, cfg.max_outer_iters + 1):
        previous = cost
        for m in range(1, n_cycles + 1):
            step = optimize_boundary(b, m, signal, grid, cfg, cycles.mean(axis=0), cycles)
            if not step.feasible:
                infeasible[m] = True
                logger.debug("sweep %d: boundary %d has an empty feasible window", sweep, m)
                continue
            if step.time == b[m]:
                continue
            trial = b.copy()
            trial[m] = step.time
            try:
                local = extract_cycles(trial[m - 1:m + 2], signal, grid)
            except SpanError as err:
                rejected += 1
                logger.debug("sweep %d: boundary %d rejected: %s", sweep, m, err)
                continue
            trial_cycles = cycles.copy()
            trial_cycles[m - 1:m - 1 + local.shape[0]] = local
            trial_cost = variance_cost(trial_cycles)
            if trial_cost > cost:
                rejected += 1
                logger.debug("sweep %d: boundary %d rejected, V %.6g -> %.6g", sweep, m, cost, trial_cost)
                continue
            b, cycles, cost = trial, trial_cycles, trial_cost

        delta = shift_boundaries(b, signal, grid, cfg)
        if delta:
            trial = b.copy()
            trial[1:] += delta
            trial_cycles = extract_cycles(trial, signal, grid)
            trial_cost = variance_cost(trial_cycles)
            if trial_cost < cost:
                logger.debug("sweep %d: common shift %+.4f s, V %.6g -> %.6g", sweep, delta, cost, trial_cost)
                b, cycles, cost = trial, trial_cycles, trial_cost

        costs.append(cost)
        logger.info("sweep %d: V=%.6g", sweep, cost)
        if previous - cost < cfg.gamma:
            break
    else:
        logger.warning("refinement stopped at max_outer_iters=%d without converging", cfg.max_outer_iters)

    refined = initial.with_boundaries(b)
    signature = signature_from_segmentation(refined, signal, grid)
    trace = OptTrace(initial_cost, tuple(costs), tuple(infeasible[1:]), rejected)
    return refined, signature, trace


def variance_report(before: Segmentation, after: Segmentation, signal: ScalarSignal,
                    grid: NormalizedGrid) -> VarianceReport:
    """Per-cycle mean squared deviation from each segmentation's own signature."""

    def per_cycle(seg: Segmentation) -> np.ndarray:
        cycles = extract_cycles(seg, signal, grid)
        return np.mean((cycles - cycles.mean(axis=0)) ** 2, axis=1)

    return VarianceReport(per_cycle(before), per_cycle(after))


def variance_quantiles(values: Sequence[float] | np.ndarray,
                       q: Sequence[float] = (5, 25, 50, 75, 95)) -> dict[float, float]:
    """Box-plot levels of a per-cycle variance list."""
    levels = np.percentile(np.asarray(values, dtype=float), q)
    return {float(k): float(v) for k, v in zip(q, levels)}
