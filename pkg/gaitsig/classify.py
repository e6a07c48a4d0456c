"""Signature correlation and highest-correlation classification."""

from __future__ import annotations

import logging
from typing import Iterable, Sequence

import numpy as np
import pandas as pd

from gaitsig.errors import ValidationError
from gaitsig.models import ClassificationResult, Signature, SignatureLibrary

logger = logging.getLogger(__name__)

GAIT_MODES = {"W": "walking", "R": "running"}
DEVICE_MODES = {1: "fixed hand", 2: "swinging hand", 3: "pocket", 4: "backpack"}


def describe_label(label: str) -> str | None:
    """'W2' -> 'walking, swinging hand'; None for labels outside the scheme."""
    if len(label) != 2 or label[0] not in GAIT_MODES or not label[1].isdigit():
        return None
    device = DEVICE_MODES.get(int(label[1]))
    if device is None:
        return None
    return f"{GAIT_MODES[label[0]]}, {device}"


def correlate(a: Signature, b: Signature, similarity: str = "pearson") -> float:
    if a.grid_size != b.grid_size:
        raise ValidationError(f"signatures differ in grid size: {a.grid_size} vs {b.grid_size}")
    x, y = a.mean, b.mean
    if similarity == "pearson":
        x, y = x - x.mean(), y - y.mean()
    elif similarity != "cosine":
        raise ValidationError(f"unknown similarity {similarity!r}")
    nx, ny = np.linalg.norm(x), np.linalg.norm(y)
    scale = max(np.max(np.abs(a.mean)), np.max(np.abs(b.mean)), 1.0)
    if nx <= 1e-12 * scale or ny <= 1e-12 * scale:
        raise ValidationError("cannot correlate a zero-variance signature")
    return float(np.clip(np.dot(x, y) / (nx * ny), -1.0, 1.0))


def build_library(entries: Iterable[tuple[str, Signature]]) -> SignatureLibrary:
    return SignatureLibrary(tuple(entries))


def correlation_matrix(lib: SignatureLibrary, similarity: str = "pearson") -> pd.DataFrame:
    if len(lib) < 2:
        raise ValidationError("a correlation matrix needs at least 2 library entries")
    n = len(lib)
    matrix = np.eye(n)
    for i in range(n):
        for j in range(i + 1, n):
            matrix[i, j] = matrix[j, i] = correlate(lib.entries[i][1], lib.entries[j][1], similarity)
    return pd.DataFrame(matrix, index=lib.labels, columns=lib.labels)


def classify_nearest(query: Signature, lib: SignatureLibrary, similarity: str = "pearson") -> ClassificationResult:
    if len(lib) == 0:
        raise ValidationError("cannot classify against an empty library")
    scores = tuple((label, correlate(query, sig, similarity)) for label, sig in lib.entries)
    # argmax returns the first maximum, so ties keep library order
    best = int(np.argmax([score for _, score in scores]))
    label, score = scores[best]
    logger.info("classified as %s (score %.4f)", label, score)
    return ClassificationResult(label, score, scores)


def accuracy(true_labels: Sequence[str], predicted: Sequence[str]) -> float:
    if len(true_labels) != len(predicted) or not true_labels:
        raise ValidationError("accuracy needs two equally long, non-empty label lists")
    return float(np.mean([t == p for t, p in zip(true_labels, predicted)]))
