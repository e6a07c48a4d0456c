"""Domain types passed between the pipeline stages.

Every type is immutable: arrays are copied on construction and marked
read-only, so instances can be shared freely between workers.
Artifact types carry a ``kind`` used by :mod:`gaitsig.imu_io` to serialize
them as ``{"schema": "gaitsig/v1", "kind": ..., ...}`` JSON documents.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, ClassVar, Iterator, NamedTuple, Sequence

import numpy as np

from gaitsig.errors import EmptySegmentationError, IngestError, ValidationError

# Largest tolerated hole between samples, in nominal sampling periods.
MAX_GAP_PERIODS = 3.0


def _frozen(values: Any, dtype: type = float) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


def infer_rate(times: np.ndarray) -> float:
    """Median of the instantaneous sampling rates 1/dt."""
    dt = np.diff(np.asarray(times, dtype=float))
    return float(np.median(1.0 / dt))


class ImuSample(NamedTuple):
    time: float
    accel: tuple[float, float, float]


@dataclass(frozen=True, eq=False)
class ImuRecording:
    """Timestamped tri-axial accelerometer samples (seconds, m/s^2)."""

    times: np.ndarray
    accel: np.ndarray
    nominal_rate: float

    def __post_init__(self) -> None:
        times = _frozen(self.times)
        accel = _frozen(self.accel)
        if times.ndim != 1:
            raise IngestError("sample times must be one-dimensional")
        if accel.shape != (times.size, 3):
            raise IngestError(f"accel must have shape ({times.size}, 3), got {accel.shape}")
        if times.size < 2:
            raise IngestError(f"a recording needs at least 2 samples, got {times.size}")
        if not (np.all(np.isfinite(times)) and np.all(np.isfinite(accel))):
            raise IngestError("recording contains non-finite values")
        bad = np.flatnonzero(np.diff(times) <= 0)
        if bad.size:
            raise IngestError(f"non-monotone time at sample {bad[0] + 1}")
        if not self.nominal_rate > 0:
            raise IngestError(f"nominal rate must be positive, got {self.nominal_rate}")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "accel", accel)
        object.__setattr__(self, "nominal_rate", float(self.nominal_rate))

    @classmethod
    def from_arrays(cls, times: Any, accel: Any, nominal_rate: float | None = None) -> "ImuRecording":
        times = np.asarray(times, dtype=float)
        if nominal_rate is None and times.size >= 2 and np.all(np.diff(times) > 0):
            nominal_rate = infer_rate(times)
        return cls(times, accel, nominal_rate if nominal_rate is not None else float("nan"))

    @property
    def n_samples(self) -> int:
        return int(self.times.size)

    @property
    def span(self) -> tuple[float, float]:
        return float(self.times[0]), float(self.times[-1])

    @property
    def samples(self) -> Iterator[ImuSample]:
        for t, (ax, ay, az) in zip(self.times, self.accel):
            yield ImuSample(float(t), (float(ax), float(ay), float(az)))


@dataclass(frozen=True, eq=False)
class ScalarSignal:
    """A scalar time series, usually the band-pass-filtered acceleration norm."""

    times: np.ndarray
    values: np.ndarray
    nominal_rate: float

    def __post_init__(self) -> None:
        times = _frozen(self.times)
        values = _frozen(self.values)
        if times.shape != values.shape or times.ndim != 1:
            raise ValidationError(f"times and values differ in shape: {times.shape} vs {values.shape}")
        if times.size < 2:
            raise ValidationError("a signal needs at least 2 samples")
        if not np.all(np.isfinite(values)):
            raise ValidationError("signal contains non-finite values")
        if not self.nominal_rate > 0:
            raise ValidationError(f"nominal rate must be positive, got {self.nominal_rate}")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "nominal_rate", float(self.nominal_rate))

    def __len__(self) -> int:
        return int(self.times.size)

    @property
    def span(self) -> tuple[float, float]:
        return float(self.times[0]), float(self.times[-1])

    @cached_property
    def gaps(self) -> np.ndarray:
        """(start, end) times of every hole longer than the tolerated gap."""
        dt = np.diff(self.times)
        idx = np.flatnonzero(dt > MAX_GAP_PERIODS / self.nominal_rate)
        return np.column_stack([self.times[idx], self.times[idx + 1]])

    def shifted(self, offset: float) -> "ScalarSignal":
        return ScalarSignal(self.times + offset, self.values, self.nominal_rate)

    def scaled(self, factor: float) -> "ScalarSignal":
        return ScalarSignal(self.times, self.values * factor, self.nominal_rate)


@dataclass(frozen=True)
class Thresholds:
    """Peak and valley thresholds of the cycle detector (m/s^2)."""

    eps_p: float
    eps_v: float

    def __post_init__(self) -> None:
        if not self.eps_v < 0 < self.eps_p:
            raise ValidationError(f"thresholds need eps_v < 0 < eps_p, got eps_v={self.eps_v}, eps_p={self.eps_p}")

    def scaled(self, factor: float) -> "Thresholds":
        return Thresholds(self.eps_p * factor, self.eps_v * factor)


WALKING = Thresholds(eps_p=2.0, eps_v=-2.0)
RUNNING = Thresholds(eps_p=4.0, eps_v=-5.0)
PRESETS = {"walking": WALKING, "running": RUNNING}


@dataclass(frozen=True, eq=False)
class Segmentation:
    """Boundary times t_0 < ... < t_M delimiting M gait cycles."""

    kind: ClassVar[str] = "segmentation"

    boundaries: np.ndarray
    source_span: tuple[float, float] | None = None

    def __post_init__(self) -> None:
        b = _frozen(self.boundaries)
        if b.ndim != 1 or b.size < 2:
            raise EmptySegmentationError("a segmentation needs at least one cycle (two boundaries)")
        if not np.all(np.isfinite(b)):
            raise ValidationError("segmentation contains non-finite boundaries")
        if np.any(np.diff(b) <= 0):
            raise ValidationError("segmentation boundaries must be strictly increasing")
        if self.source_span is not None:
            lo, hi = (float(v) for v in self.source_span)
            if b[0] < lo or b[-1] > hi:
                raise ValidationError(f"boundaries [{b[0]}, {b[-1]}] leave the source span [{lo}, {hi}]")
            object.__setattr__(self, "source_span", (lo, hi))
        object.__setattr__(self, "boundaries", b)

    @property
    def num_cycles(self) -> int:
        return int(self.boundaries.size - 1)

    @property
    def durations(self) -> np.ndarray:
        return np.diff(self.boundaries)

    def with_boundaries(self, boundaries: Sequence[float]) -> "Segmentation":
        return Segmentation(np.asarray(boundaries, dtype=float), self.source_span)

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"boundaries": self.boundaries.tolist()}
        if self.source_span is not None:
            out["source_span"] = list(self.source_span)
        return out

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Segmentation":
        span = data.get("source_span")
        return cls(np.asarray(data["boundaries"], dtype=float), tuple(span) if span else None)


@dataclass(frozen=True)
class NormalizedGrid:
    """L uniformly spaced phase points tau_l = (l-1)/L on [0, 1)."""

    size: int

    def __post_init__(self) -> None:
        if int(self.size) != self.size or self.size < 2:
            raise ValidationError(f"grid size must be an integer >= 2, got {self.size}")

    @cached_property
    def points(self) -> np.ndarray:
        return _frozen(np.arange(self.size) / self.size)


@dataclass(frozen=True, eq=False)
class GaitCycle:
    values: np.ndarray
    t_start: float
    t_end: float

    def __post_init__(self) -> None:
        values = _frozen(self.values)
        if values.ndim != 1 or not np.all(np.isfinite(values)):
            raise ValidationError("gait cycle values must be a finite vector")
        object.__setattr__(self, "values", values)

    @property
    def grid_size(self) -> int:
        return int(self.values.size)


@dataclass(frozen=True, eq=False)
class Signature:
    """Per-grid mean of the resampled cycles with the per-grid sample std."""

    kind: ClassVar[str] = "signature"

    mean: np.ndarray
    std: np.ndarray
    num_cycles: int

    def __post_init__(self) -> None:
        mean = _frozen(self.mean)
        std = _frozen(self.std)
        if mean.ndim != 1 or mean.shape != std.shape:
            raise ValidationError(f"signature mean and std differ in shape: {mean.shape} vs {std.shape}")
        if np.any(std < 0):
            raise ValidationError("signature std must be nonnegative")
        if self.num_cycles < 1:
            raise ValidationError("a signature needs at least one cycle")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "std", std)
        object.__setattr__(self, "num_cycles", int(self.num_cycles))

    @property
    def grid_size(self) -> int:
        return int(self.mean.size)

    def to_dict(self) -> dict[str, Any]:
        return {
            "grid_size": self.grid_size,
            "num_cycles": self.num_cycles,
            "mean": self.mean.tolist(),
            "std": self.std.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Signature":
        sig = cls(np.asarray(data["mean"], dtype=float), np.asarray(data["std"], dtype=float), data["num_cycles"])
        if "grid_size" in data and data["grid_size"] != sig.grid_size:
            raise ValidationError(f"grid_size {data['grid_size']} does not match {sig.grid_size} mean values")
        return sig


@dataclass(frozen=True, eq=False)
class FourierModel:
    """Truncated Fourier series of order K; b[0] is pinned to zero."""

    kind: ClassVar[str] = "fourier"

    order: int
    a: np.ndarray
    b: np.ndarray
    rss: float = 0.0
    grid_size: int | None = None

    def __post_init__(self) -> None:
        a = _frozen(self.a)
        b = _frozen(self.b)
        if self.order < 1 or a.shape != (self.order,) or b.shape != (self.order,):
            raise ValidationError(f"order {self.order} needs a and b of length {self.order}")
        if b[0] != 0.0:
            raise ValidationError("b[0] must be 0")
        if not self.rss >= 0:
            raise ValidationError(f"rss must be nonnegative, got {self.rss}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "order", int(self.order))
        object.__setattr__(self, "rss", float(self.rss))

    @property
    def n_params(self) -> int:
        return 2 * self.order - 1

    @property
    def theta(self) -> np.ndarray:
        """Identifiable coefficients [a_0..a_{K-1}, b_1..b_{K-1}]."""
        return np.concatenate([self.a, self.b[1:]])

    def to_dict(self) -> dict[str, Any]:
        return {
            "K": self.order,
            "a": self.a.tolist(),
            "b": self.b.tolist(),
            "rss": self.rss,
            "grid_size": self.grid_size,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "FourierModel":
        return cls(int(data["K"]), data["a"], data["b"], float(data.get("rss", 0.0)), data.get("grid_size"))


@dataclass(frozen=True, eq=False)
class OptTrace:
    """Cost per outer sweep of the boundary refinement."""

    kind: ClassVar[str] = "optimization"

    initial_cost: float
    costs: tuple[float, ...]
    infeasible: tuple[bool, ...]
    rejected: int = 0

    def __post_init__(self) -> None:
        costs = tuple(float(c) for c in self.costs)
        if not np.all(np.isfinite(costs)) or not np.isfinite(self.initial_cost):
            raise ValidationError("optimization costs must be finite")
        object.__setattr__(self, "costs", costs)
        object.__setattr__(self, "infeasible", tuple(bool(f) for f in self.infeasible))

    @property
    def iterations(self) -> int:
        return len(self.costs)

    @property
    def final_cost(self) -> float:
        return self.costs[-1] if self.costs else self.initial_cost

    def to_dict(self) -> dict[str, Any]:
        return {
            "initial_cost": self.initial_cost,
            "costs": list(self.costs),
            "iterations": self.iterations,
            "infeasible": list(self.infeasible),
            "rejected": self.rejected,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "OptTrace":
        return cls(data["initial_cost"], tuple(data["costs"]), tuple(data["infeasible"]), data.get("rejected", 0))


@dataclass(frozen=True, eq=False)
class SignatureLibrary:
    """Labeled signatures sharing one grid."""

    kind: ClassVar[str] = "library"

    entries: tuple[tuple[str, Signature], ...]

    def __post_init__(self) -> None:
        entries = tuple((str(label), sig) for label, sig in self.entries)
        labels = [label for label, _ in entries]
        if len(set(labels)) != len(labels):
            raise ValidationError(f"library labels must be unique: {labels}")
        if len({sig.grid_size for _, sig in entries}) > 1:
            raise ValidationError("library signatures must share one grid size")
        object.__setattr__(self, "entries", entries)

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def labels(self) -> list[str]:
        return [label for label, _ in self.entries]

    def to_dict(self) -> dict[str, Any]:
        return {"entries": [{"label": label, "signature": sig.to_dict()} for label, sig in self.entries]}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "SignatureLibrary":
        return cls(tuple((e["label"], Signature.from_dict(e["signature"])) for e in data["entries"]))


@dataclass(frozen=True)
class ClassificationResult:
    """Highest-correlation label plus the score of every library entry."""

    kind: ClassVar[str] = "classification"

    label: str
    score: float
    scores: tuple[tuple[str, float], ...] = field(default_factory=tuple)

    @property
    def ranked(self) -> list[tuple[str, float]]:
        return sorted(self.scores, key=lambda item: -item[1])

    def to_dict(self) -> dict[str, Any]:
        return {
            "label": self.label,
            "score": self.score,
            "ranked": [{"label": label, "score": score} for label, score in self.ranked],
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ClassificationResult":
        scores = tuple((e["label"], float(e["score"])) for e in data["ranked"])
        return cls(data["label"], float(data["score"]), scores)
