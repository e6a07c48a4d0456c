"""Two-threshold gait cycle detection and duration filtering.

A cycle is taken once the signal has made one excursion above the peak
threshold and one below the valley threshold, in alternation. Each
excursion crosses its threshold twice (entry and exit), so the peak and
valley counters both reach two when the cycle closes. The boundary is the
sample that completes the second excursion.
"""

from __future__ import annotations

import logging

import numpy as np

from gaitsig.errors import EmptySegmentationError
from gaitsig.models import ScalarSignal, Segmentation, Thresholds

logger = logging.getLogger(__name__)

_PEAK, _VALLEY = 0, 1


def _crossings(signal: ScalarSignal, thresholds: Thresholds) -> list[tuple[int, int, bool]]:
    """Threshold crossings as (sample, kind, entering) in sample order."""
    above = signal.values >= thresholds.eps_p
    below = signal.values <= thresholds.eps_v
    events = []
    for kind, inside in ((_PEAK, above), (_VALLEY, below)):
        for k in np.flatnonzero(inside[1:] != inside[:-1]) + 1:
            events.append((int(k), kind, bool(inside[k])))
    # a jump across both thresholds in one sample: leave before entering
    events.sort(key=lambda e: (e[0], e[2]))
    return events


def _closing_samples(signal: ScalarSignal, thresholds: Thresholds) -> list[int]:
    counts = [0, 0]
    hit = [False, False]
    inside = [False, False]
    # a recording that opens inside an excursion has already entered it
    first = signal.values[0]
    opening = _PEAK if first >= thresholds.eps_p else _VALLEY if first <= thresholds.eps_v else None
    if opening is not None:
        counts[opening] = 1
        hit[opening] = inside[opening] = True
    closes = []
    for k, kind, entering in _crossings(signal, thresholds):
        if entering:
            if hit[kind]:
                # same kind twice in a row: wait for the other threshold
                continue
            counts[kind] += 1
            hit[kind], hit[1 - kind] = True, False
            inside[kind] = True
        elif inside[kind]:
            counts[kind] += 1
            inside[kind] = False

        if counts[_PEAK] >= 2 and counts[_VALLEY] >= 2:
            closes.append(k)
            counts = [0, 0]
    return closes


def detect_cycles(signal: ScalarSignal, thresholds: Thresholds) -> Segmentation:
    closes = _closing_samples(signal, thresholds)
    if len(closes) < 2:
        raise EmptySegmentationError(
            f"no complete gait cycle found with eps_p={thresholds.eps_p}, eps_v={thresholds.eps_v}"
        )
    seg = Segmentation(signal.times[closes], signal.span)
    logger.info("detected %d gait cycles", seg.num_cycles)
    return seg


def check_cycles(seg: Segmentation, signal: ScalarSignal, thresholds: Thresholds) -> list[bool]:
    """Whether each cycle crosses eps_p at least twice and eps_v at least twice."""
    above = signal.values >= thresholds.eps_p
    below = signal.values <= thresholds.eps_v
    idx = np.searchsorted(signal.times, seg.boundaries)
    ok = []
    for i0, i1 in zip(idx[:-1], idx[1:]):
        window = slice(i0, i1 + 1)
        up = np.count_nonzero(np.diff(above[window].astype(np.int8)))
        lo = np.count_nonzero(np.diff(below[window].astype(np.int8)))
        ok.append(bool(up >= 2 and lo >= 2))
    return ok


def filter_segments(seg: Segmentation, eps_lo: float, eps_up: float) -> Segmentation:
    """Keep cycles whose duration lies in [eps_lo, eps_up].

    Left-to-right sweep: a too-short cycle is merged with the following one by
    dropping its closing boundary; a too-long cycle (raw or merged) drops its
    opening boundary and restarts the chain at its closing boundary. The
    longest resulting chain is returned, the earliest one on ties.
    """
    runs: list[list[float]] = []
    current = [float(seg.boundaries[0])]
    for b in seg.boundaries[1:]:
        duration = b - current[-1]
        if duration < eps_lo:
            continue
        if duration > eps_up:
            runs.append(current)
            current = [float(b)]
            continue
        current.append(float(b))
    runs.append(current)

    best = max(runs, key=len)
    if len(best) < 2:
        raise EmptySegmentationError(f"all segments rejected by bounds [{eps_lo}, {eps_up}] s")
    dropped = seg.num_cycles - (len(best) - 1)
    if dropped:
        logger.warning("duration filter kept %d of %d cycles", len(best) - 1, seg.num_cycles)
    return seg.with_boundaries(best)


def duration_histogram(seg: Segmentation, bin_width: float = 0.05) -> tuple[np.ndarray, np.ndarray]:
    durations = seg.durations
    start = np.floor(durations.min() / bin_width) * bin_width
    stop = np.ceil(durations.max() / bin_width) * bin_width
    n_bins = max(int(round((stop - start) / bin_width)), 1)
    edges = start + bin_width * np.arange(n_bins + 1)
    counts, edges = np.histogram(durations, bins=edges)
    return edges, counts


def suggest_bounds(seg: Segmentation, bin_width: float = 0.05, spread: float = 0.45) -> tuple[float, float]:
    """Duration bounds around the most frequent cycle duration."""
    edges, counts = duration_histogram(seg, bin_width)
    mode = int(np.argmax(counts))
    centre = 0.5 * (edges[mode] + edges[mode + 1])
    lo = max(centre * (1.0 - spread), bin_width)
    up = centre * (1.0 + spread)
    logger.info("modal cycle duration %.3f s, suggested bounds [%.3f, %.3f] s", centre, lo, up)
    return float(lo), float(up)
