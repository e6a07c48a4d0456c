import numpy as np
import pytest

from gaitsig.detect import check_cycles, detect_cycles, duration_histogram, filter_segments, suggest_bounds
from gaitsig.errors import EmptySegmentationError
from gaitsig.models import WALKING, ScalarSignal, Segmentation, Thresholds


def test_sine_cycles_last_one_period(make_sine):
    seg = detect_cycles(make_sine(duration=5.0), Thresholds(2.0, -2.0))
    assert seg.num_cycles >= 3
    np.testing.assert_allclose(seg.durations, 1.0, atol=0.01)


@pytest.mark.parametrize("phase", [0.0, np.pi / 2, np.pi, 3 * np.pi / 2])
def test_cycle_count_does_not_depend_on_starting_phase(make_sine, phase):
    seg = detect_cycles(make_sine(duration=5.0, phase=phase), Thresholds(2.0, -2.0))
    assert seg.num_cycles == 4
    np.testing.assert_allclose(seg.durations, 1.0, atol=0.01)


def test_signal_opening_above_the_peak_threshold(make_sine):
    # 3 cos(2 pi t): the first valley is left at t = 0.64
    seg = detect_cycles(make_sine(duration=5.0, phase=np.pi / 2), Thresholds(2.0, -2.0))
    assert seg.boundaries[0] == pytest.approx(0.64)
    assert seg.boundaries.tolist() == pytest.approx([0.64, 1.64, 2.64, 3.64, 4.64])


def test_detection_follows_a_time_shift(make_sine):
    signal = make_sine(duration=8.0, phase=0.4)
    base = detect_cycles(signal, WALKING)
    moved = detect_cycles(signal.shifted(12.5), WALKING)
    np.testing.assert_allclose(moved.boundaries, base.boundaries + 12.5, rtol=0, atol=1e-12)


@pytest.mark.parametrize("factor", [1.5, 4.0])
def test_detection_ignores_scaling_of_signal_and_thresholds(walk_signal, factor):
    base = detect_cycles(walk_signal, WALKING)
    scaled = detect_cycles(walk_signal.scaled(factor), WALKING.scaled(factor))
    np.testing.assert_array_equal(scaled.boundaries, base.boundaries)
    assert WALKING.scaled(factor) == Thresholds(2.0 * factor, -2.0 * factor)


def test_constant_signal_has_no_cycles():
    signal = ScalarSignal(np.arange(500) / 100.0, np.zeros(500), 100.0)
    with pytest.raises(EmptySegmentationError):
        detect_cycles(signal, WALKING)


def test_repeated_peak_is_ignored():
    pattern = [0.0, 3.0, 0.0, 3.0, 0.0, -3.0, 0.0]
    values = np.tile(pattern, 4)
    signal = ScalarSignal(np.arange(values.size) * 0.1, values, 10.0)
    seg = detect_cycles(signal, WALKING)
    assert seg.num_cycles == 3
    np.testing.assert_allclose(seg.durations, 0.7)


def test_boundaries_are_closing_samples(make_sine):
    signal = make_sine(duration=5.0)
    seg = detect_cycles(signal, WALKING)
    assert set(seg.boundaries) <= set(signal.times)
    assert seg.source_span == signal.span


def test_detected_cycles_cross_both_thresholds(make_sine):
    signal = make_sine(duration=8.0, phase=0.3)
    seg = detect_cycles(signal, WALKING)
    assert all(check_cycles(seg, signal, WALKING))


def test_walk_cycle_count_matches_truth(walk, walk_signal):
    seg = detect_cycles(walk_signal, WALKING)
    assert abs(seg.num_cycles - walk.truth.num_cycles) <= 1


def test_filtered_walk_cycles_cross_both_thresholds(walk_signal):
    seg = filter_segments(detect_cycles(walk_signal, WALKING), 0.5, 1.4)
    assert all(check_cycles(seg, walk_signal, WALKING))


@pytest.mark.parametrize(
    "boundaries, expected",
    [
        ([0.0, 1.0, 2.0], [0.0, 1.0, 2.0]),
        ([0.0, 0.2, 1.2], [0.0, 1.2]),
        ([0.0, 1.0, 2.0, 5.0, 6.0, 7.0, 8.0], [5.0, 6.0, 7.0, 8.0]),
        ([0.0, 1.0, 2.0, 5.0, 6.0, 7.0], [0.0, 1.0, 2.0]),
    ],
)
def test_filter_segments(boundaries, expected):
    assert filter_segments(Segmentation(boundaries), 0.5, 1.4).boundaries.tolist() == expected


def test_filter_segments_rejecting_everything():
    with pytest.raises(EmptySegmentationError, match="all segments rejected"):
        filter_segments(Segmentation([0.0, 3.0]), 0.5, 1.4)


def test_duration_histogram_counts_every_cycle():
    seg = Segmentation([0.0, 1.0, 1.98, 3.0, 4.1])
    edges, counts = duration_histogram(seg, bin_width=0.05)
    assert counts.sum() == 4
    assert edges.size == counts.size + 1
    assert edges[0] <= seg.durations.min()
    assert edges[-1] >= seg.durations.max()


def test_suggest_bounds_bracket_the_modal_duration():
    seg = Segmentation(np.cumsum([0.0, 1.01, 1.02, 1.01, 1.03, 0.6]))
    lo, up = suggest_bounds(seg)
    assert lo < 1.01 < up
    assert up / lo == pytest.approx(1.45 / 0.55)
