"""Reading recordings and reading/writing pipeline artifacts.

Recordings are CSV files with header ``t,ax,ay,az`` (optional trailing
``gx,gy,gz`` columns are accepted and ignored). Artifacts are JSON documents
tagged with the schema identifier and a ``kind``.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from gaitsig import SCHEMA
from gaitsig.errors import ArtifactError, IngestError
from gaitsig.models import (
    ClassificationResult,
    FourierModel,
    ImuRecording,
    OptTrace,
    Segmentation,
    Signature,
    SignatureLibrary,
)

logger = logging.getLogger(__name__)

ACCEL_COLUMNS = ["t", "ax", "ay", "az"]
GYRO_COLUMNS = ["gx", "gy", "gz"]

ARTIFACT_TYPES = {
    cls.kind: cls
    for cls in (Segmentation, Signature, FourierModel, OptTrace, SignatureLibrary, ClassificationResult)
}


def read_recording(path: str | Path) -> ImuRecording:
    path = Path(path)
    if not path.is_file():
        raise IngestError(f"recording not found: {path}")
    try:
        frame = pd.read_csv(path, dtype=str, skipinitialspace=True, encoding="utf-8")
    except pd.errors.EmptyDataError:
        raise IngestError(f"empty recording file: {path}") from None
    except pd.errors.ParserError as err:
        raise IngestError(f"malformed recording {path}: {err}") from None
    except UnicodeDecodeError as err:
        raise IngestError(f"recording {path} is not UTF-8 text: {err.reason} at byte {err.start}") from None

    header = [str(c).strip() for c in frame.columns]
    if header[:4] != ACCEL_COLUMNS or any(c not in GYRO_COLUMNS for c in header[4:]):
        raise IngestError(f"expected header t,ax,ay,az[,gx,gy,gz], got {','.join(header)}", line=1)
    frame.columns = header

    data = frame[ACCEL_COLUMNS].apply(pd.to_numeric, errors="coerce").to_numpy(dtype=float)
    bad = np.flatnonzero(~np.all(np.isfinite(data), axis=1))
    if bad.size:
        # data rows start on line 2, after the header
        raise IngestError("malformed row", line=int(bad[0]) + 2)
    if data.shape[0] < 2:
        raise IngestError(f"a recording needs at least 2 samples, got {data.shape[0]}")

    times = data[:, 0]
    backwards = np.flatnonzero(np.diff(times) <= 0)
    if backwards.size:
        raise IngestError("non-monotone time", line=int(backwards[0]) + 3)

    recording = ImuRecording.from_arrays(times, data[:, 1:4])
    logger.info("read %d samples at %.2f Hz from %s", recording.n_samples, recording.nominal_rate, path)
    return recording


def write_recording(recording: ImuRecording, path: str | Path) -> None:
    frame = pd.DataFrame(
        {
            "t": recording.times,
            "ax": recording.accel[:, 0],
            "ay": recording.accel[:, 1],
            "az": recording.accel[:, 2],
        }
    )
    write_table(frame, path)


def write_table(frame: pd.DataFrame, path: str | Path) -> Path:
    """Write plot-ready data as CSV."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(path, index=False)
    except OSError as err:
        raise ArtifactError(f"cannot write {path}: {err}") from None
    logger.debug("wrote %d rows to %s", len(frame), path)
    return path


def write_artifact(obj: Any, path: str | Path) -> Path:
    """Serialize an artifact to ``{"schema": ..., "kind": ..., ...}`` JSON."""
    kind = getattr(obj, "kind", None)
    if kind not in ARTIFACT_TYPES and not isinstance(obj, dict):
        raise ArtifactError(f"cannot serialize {type(obj).__name__}")
    body = obj if isinstance(obj, dict) else obj.to_dict()
    document = {"schema": SCHEMA, "kind": kind if kind else body.get("kind"), **{k: v for k, v in body.items() if k != "kind"}}
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(document, indent=2) + "\n", encoding="utf-8")
    except OSError as err:
        raise ArtifactError(f"cannot write {path}: {err}") from None
    logger.debug("wrote %s artifact to %s", document["kind"], path)
    return path


def read_artifact(path: str | Path) -> Any:
    path = Path(path)
    try:
        document = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ArtifactError(f"artifact not found: {path}") from None
    except (OSError, json.JSONDecodeError) as err:
        raise ArtifactError(f"cannot read {path}: {err}") from None

    if isinstance(document, list):
        # a bare array of {label, signature} entries is accepted as a library
        return SignatureLibrary.from_dict({"entries": document})
    if document.get("schema") != SCHEMA:
        raise ArtifactError(f"{path}: unsupported schema {document.get('schema')!r}, expected {SCHEMA}")
    kind = document.get("kind")
    cls = ARTIFACT_TYPES.get(kind)
    if cls is None:
        raise ArtifactError(f"{path}: unknown artifact kind {kind!r}")
    try:
        return cls.from_dict(document)
    except (KeyError, TypeError, ValueError) as err:
        raise ArtifactError(f"{path}: malformed {kind} artifact: {err}") from None
