"""Synthetic gait recordings with known cycle boundaries.

Cycle durations are drawn from a truncated normal distribution, each cycle
plays the template at normalized phase, and white Gaussian noise plus a
gravity offset are added to the acceleration norm. The norm is spread over
the three axes along a fixed unit vector, so ``accel_norm`` returns it
exactly.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import stats

from gaitsig.errors import ValidationError
from gaitsig.fourier import evaluate, reconstruct
from gaitsig.models import FourierModel, ImuRecording, NormalizedGrid, Segmentation, Signature

logger = logging.getLogger(__name__)

GRAVITY = 9.81


def walking_template() -> FourierModel:
    return FourierModel(4, [0.0, 3.5, 0.5, 0.2], [0.0, 1.0, -0.4, 0.1])


def running_template() -> FourierModel:
    return FourierModel(4, [0.0, 7.0, 1.2, 0.4], [0.0, 2.0, -0.8, 0.2])


TEMPLATES = {"walking": walking_template, "running": running_template}


def noise_std_for_snr(template: FourierModel, snr_db: float) -> float:
    """Noise std giving ``snr_db`` against the template's AC power."""
    power = 0.5 * float(np.sum(template.a[1:] ** 2 + template.b[1:] ** 2))
    return math.sqrt(power / 10.0 ** (snr_db / 10.0))


@dataclass(frozen=True)
class SynthSpec:
    template: FourierModel = field(default_factory=walking_template)
    mean_period: float = 1.0
    period_jitter_std: float = 0.05
    noise_std: float = 0.0
    gravity_offset: float = GRAVITY
    duration: float = 60.0
    rate: float = 100.0
    seed: int = 0
    eps_lo: float = 0.5
    eps_up: float = 1.4
    grid_size: int = 100
    orientation: tuple[float, float, float] = (0.0, 0.0, 1.0)

    def validate(self) -> None:
        if not self.mean_period - 3.0 * self.period_jitter_std > 0:
            raise ValidationError("mean_period - 3*period_jitter_std must be positive")
        if self.period_jitter_std < 0 or self.noise_std < 0:
            raise ValidationError("jitter and noise std must be nonnegative")
        highest = self.template.order - 1
        if not self.rate > 2.0 * highest / self.mean_period:
            raise ValidationError(
                f"rate {self.rate} Hz cannot carry harmonic {highest} at period {self.mean_period} s"
            )
        if self.duration <= 0 or self.rate <= 0:
            raise ValidationError("duration and rate must be positive")
        if not 0 < self.eps_lo < self.mean_period < self.eps_up:
            raise ValidationError("mean_period must lie inside (eps_lo, eps_up)")
        if not np.isclose(np.linalg.norm(self.orientation), 1.0):
            raise ValidationError(f"orientation must be a unit vector, got {self.orientation}")


class SynthResult(NamedTuple):
    recording: ImuRecording
    truth: Segmentation
    signature: Signature


def _durations(spec: SynthSpec, rng: np.random.Generator) -> np.ndarray:
    count = int(math.ceil(spec.duration / min(spec.eps_lo, spec.mean_period))) + 2
    if spec.period_jitter_std == 0:
        return np.full(count, spec.mean_period)
    lo = (spec.eps_lo - spec.mean_period) / spec.period_jitter_std
    hi = (spec.eps_up - spec.mean_period) / spec.period_jitter_std
    return stats.truncnorm.rvs(
        lo, hi, loc=spec.mean_period, scale=spec.period_jitter_std, size=count, random_state=rng
    )


def generate(spec: SynthSpec) -> SynthResult:
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    n = int(round(spec.duration * spec.rate))
    times = np.arange(n) / spec.rate

    edges = np.concatenate([[0.0], np.cumsum(_durations(spec, rng))])
    cycle = np.searchsorted(edges, times, side="right") - 1
    phase = (times - edges[cycle]) / (edges[cycle + 1] - edges[cycle])
    norm = spec.gravity_offset + evaluate(spec.template, phase)
    if spec.noise_std > 0:
        norm = norm + rng.normal(0.0, spec.noise_std, n)
    if np.any(norm <= 0):
        logger.warning("gravity offset does not keep the synthetic norm positive")
    accel = norm[:, None] * np.asarray(spec.orientation, dtype=float)[None, :]

    recording = ImuRecording(times, accel, spec.rate)
    truth = Segmentation(edges[edges <= times[-1]], recording.span)
    grid = NormalizedGrid(spec.grid_size)
    mean = reconstruct(spec.template, grid)
    signature = Signature(mean, np.zeros_like(mean), truth.num_cycles)
    logger.info("generated %d samples with %d complete cycles (seed %d)", n, truth.num_cycles, spec.seed)
    return SynthResult(recording, truth, signature)
