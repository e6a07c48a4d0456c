"""Acceleration norm and zero-phase Butterworth band-pass filtering."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Any

import numpy as np
from scipy import signal as sps

from gaitsig.errors import ConfigError, NumericalError, ValidationError
from gaitsig.models import ImuRecording, ScalarSignal

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class BandpassDesign:
    """Butterworth band-pass as a cascade of second-order sections.

    ``order`` is the order of the analog low-pass prototype, so each pass of
    the cascade has 2*order poles. The filter is applied forward and backward.
    """

    order: int
    low_cut: float
    high_cut: float
    sample_rate: float
    sos: np.ndarray
    passes: int = 2
    convention: str = "prototype"

    @property
    def state_dim(self) -> int:
        return 2 * int(self.sos.shape[0])

    @property
    def settle_samples(self) -> int:
        """One period of the low cut-off, in samples."""
        return int(math.ceil(self.sample_rate / self.low_cut))

    @property
    def min_length(self) -> int:
        return 3 * self.state_dim + 1

    def metadata(self) -> dict[str, Any]:
        return {
            "filter": "butterworth-bandpass",
            "order": self.order,
            "order_convention": self.convention,
            "poles_per_pass": 2 * self.order,
            "passes": self.passes,
            "low_cut": self.low_cut,
            "high_cut": self.high_cut,
            "sample_rate": self.sample_rate,
        }


def accel_norm(recording: ImuRecording) -> ScalarSignal:
    return ScalarSignal(recording.times, np.linalg.norm(recording.accel, axis=1), recording.nominal_rate)


def design_bandpass(order: int, low_cut: float, high_cut: float, sample_rate: float) -> BandpassDesign:
    if order < 1:
        raise ConfigError(f"filter order must be >= 1, got {order}")
    if low_cut >= high_cut:
        raise ConfigError(f"low_cut ≥ high_cut ({low_cut} >= {high_cut})")
    if low_cut <= 0:
        raise ConfigError(f"low_cut must be positive, got {low_cut}")
    if high_cut >= sample_rate / 2:
        raise ConfigError(f"high_cut={high_cut} Hz must stay below Nyquist ({sample_rate / 2} Hz)")

    sos = sps.butter(order, [low_cut, high_cut], btype="bandpass", output="sos", fs=sample_rate)
    _, poles, _ = sps.sos2zpk(sos)
    if not np.all(np.abs(poles) < 1.0):
        raise NumericalError(f"unstable band-pass design: max pole radius {np.abs(poles).max():.12f}")
    sos.setflags(write=False)
    return BandpassDesign(int(order), float(low_cut), float(high_cut), float(sample_rate), sos)


def frequency_response(design: BandpassDesign, freqs: Any) -> np.ndarray:
    """Complex response of one causal pass at ``freqs`` (Hz)."""
    freqs = np.atleast_1d(np.asarray(freqs, dtype=float))
    _, h = sps.sosfreqz(np.array(design.sos), worN=freqs, fs=design.sample_rate)
    return h


def zero_phase_gain(design: BandpassDesign, freqs: Any) -> np.ndarray:
    """Magnitude of the forward-backward operator, |H|^2."""
    return np.abs(frequency_response(design, freqs)) ** 2


def filter_zero_phase(signal: ScalarSignal, design: BandpassDesign) -> ScalarSignal:
    n = len(signal)
    if n < design.min_length:
        raise ValidationError(f"signal too short for filtering: {n} samples, need at least {design.min_length}")
    if abs(signal.nominal_rate - design.sample_rate) > 0.01 * design.sample_rate:
        logger.warning(
            "signal rate %.3f Hz differs from design rate %.3f Hz", signal.nominal_rate, design.sample_rate
        )

    padlen = min(3 * design.settle_samples, n - 1)
    # sosfiltfilt rejects read-only coefficient arrays
    out = sps.sosfiltfilt(np.array(design.sos), signal.values, padtype="even", padlen=padlen)
    if not np.all(np.isfinite(out)):
        raise NumericalError("band-pass filter produced non-finite output")
    return ScalarSignal(signal.times, out, signal.nominal_rate)


def preprocess_recording(recording: ImuRecording, band: tuple[float, float], order: int = 4) -> ScalarSignal:
    """Norm of the acceleration, band-pass filtered with zero net phase."""
    design = design_bandpass(order, band[0], band[1], recording.nominal_rate)
    filtered = filter_zero_phase(accel_norm(recording), design)
    logger.info(
        "filtered %d samples, band %.3g-%.3g Hz, order %d x %d passes",
        len(filtered), band[0], band[1], order, design.passes,
    )
    return filtered
