"""End-to-end batch pipeline: ingest, filter, detect, refine, model, classify.

Every intermediate artifact is written to the output directory together with
plot-ready CSV tables. Artifacts written before a failing stage are kept.
"""

from __future__ import annotations

import logging
from contextlib import contextmanager
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Iterator

import numpy as np
import pandas as pd

from gaitsig.classify import classify_nearest
from gaitsig.config import PipelineConfig, load_config
from gaitsig.detect import detect_cycles, duration_histogram, filter_segments, suggest_bounds
from gaitsig.errors import GaitSigError, StageError, ValidationError
from gaitsig.fourier import approximation_residuals, fit_fourier, gait_features, select_order
from gaitsig.imu_io import read_artifact, read_recording, write_artifact, write_table
from gaitsig.models import NormalizedGrid, ScalarSignal, Segmentation, Signature, SignatureLibrary
from gaitsig.preprocess import BandpassDesign, accel_norm, design_bandpass, filter_zero_phase, frequency_response
from gaitsig.segment_opt import OptConfig, optimize_segmentation, variance_quantiles, variance_report
from gaitsig.signature import confidence_band, extract_cycles, population_band

logger = logging.getLogger(__name__)


@contextmanager
def stage(name: str) -> Iterator[None]:
    try:
        yield
    except StageError:
        raise
    except GaitSigError as err:
        raise StageError(name, err) from err


@dataclass
class PipelineReport:
    kind = "report"

    artifacts: dict[str, str] = field(default_factory=dict)
    config: dict[str, Any] = field(default_factory=dict)
    summary: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind, "artifacts": self.artifacts, "config": self.config, "summary": self.summary}


def cycles_table(seg: Segmentation, signal: ScalarSignal, grid: NormalizedGrid) -> pd.DataFrame:
    cycles = extract_cycles(seg, signal, grid)
    m, l = cycles.shape
    return pd.DataFrame({
        "m": np.repeat(np.arange(1, m + 1), l),
        "tau": np.tile(grid.points, m),
        "value": cycles.ravel(),
    })


def signature_table(sig: Signature, grid: NormalizedGrid) -> pd.DataFrame:
    frame = pd.DataFrame({"tau": grid.points, "mean": sig.mean, "std": sig.std})
    if sig.num_cycles >= 2:
        frame["mean_lo"], frame["mean_hi"] = confidence_band(sig)
        frame["pop_lo"], frame["pop_hi"] = population_band(sig)
    return frame


def response_table(design: BandpassDesign, n_points: int = 200) -> pd.DataFrame:
    """Gain of one pass and of the forward-backward operator, log-spaced up to Nyquist."""
    nyquist = design.sample_rate / 2
    freqs = np.geomspace(design.low_cut / 10, nyquist, n_points, endpoint=False)
    gain = np.abs(frequency_response(design, freqs))
    return pd.DataFrame({
        "f": freqs,
        "gain_db": 20 * np.log10(gain),
        "zero_phase_gain": gain ** 2,
    })


def durations_table(initial: Segmentation, refined: Segmentation) -> pd.DataFrame:
    frames = []
    for name, seg in (("initial", initial), ("refined", refined)):
        edges, counts = duration_histogram(seg)
        frames.append(pd.DataFrame({
            "segmentation": name, "bin_lo": edges[:-1], "bin_hi": edges[1:], "count": counts,
        }))
    return pd.concat(frames, ignore_index=True)


def run_pipeline(recording_path: str | Path, config: PipelineConfig | str | Path | None,
                 output_dir: str | Path, library_path: str | Path | None = None) -> PipelineReport:
    out = Path(output_dir)
    report = PipelineReport()

    def emit(name: str, path: Path) -> None:
        report.artifacts[name] = str(path)

    with stage("config"):
        cfg = config if isinstance(config, PipelineConfig) else load_config(config)
        cfg.validate()
        report.config = cfg.as_dict()

    with stage("ingest"):
        recording = read_recording(recording_path)
        cfg.validate(recording.nominal_rate)

    with stage("preprocess"):
        design = design_bandpass(cfg.filter_order, cfg.band_lo, cfg.band_hi, recording.nominal_rate)
        signal = filter_zero_phase(accel_norm(recording), design)
        emit("filtered", write_table(pd.DataFrame({"t": signal.times, "value": signal.values}),
                                     out / "filtered.csv"))
        report.summary["filter"] = design.metadata()
        emit("filter_response", write_table(response_table(design), out / "filter_response.csv"))

    with stage("detect"):
        detected = detect_cycles(signal, cfg.thresholds)
        emit("segmentation_detected", write_artifact(detected, out / "segmentation_detected.json"))

    with stage("filter"):
        if cfg.auto_bounds:
            eps_lo, eps_up = suggest_bounds(detected)
            cfg = replace(cfg, eps_lo=eps_lo, eps_up=eps_up)
            report.summary["suggested_bounds"] = [eps_lo, eps_up]
        initial = filter_segments(detected, cfg.eps_lo, cfg.eps_up)
        emit("segmentation_initial", write_artifact(initial, out / "segmentation_initial.json"))

    grid = NormalizedGrid(cfg.grid_size)
    with stage("refine"):
        opt_cfg = OptConfig(cfg.eps_lo, cfg.eps_up, cfg.gamma, cfg.max_outer_iters, cfg.line_search_tol)
        refined, signature, trace = optimize_segmentation(initial, signal, grid, opt_cfg)
        emit("segmentation_refined", write_artifact(refined, out / "segmentation_refined.json"))
        emit("optimization", write_artifact(trace, out / "optimization.json"))
        trace_frame = pd.DataFrame({"iter": range(trace.iterations + 1), "V": (trace.initial_cost, *trace.costs)})
        emit("cost_trace", write_table(trace_frame, out / "cost_trace.csv"))

    with stage("signature"):
        emit("signature", write_artifact(signature, out / "signature.json"))
        emit("signature_table", write_table(signature_table(signature, grid), out / "signature.csv"))
        emit("cycles_initial", write_table(cycles_table(initial, signal, grid), out / "cycles_initial.csv"))
        emit("cycles_refined", write_table(cycles_table(refined, signal, grid), out / "cycles_refined.csv"))
        emit("durations", write_table(durations_table(initial, refined), out / "durations.csv"))
        variances = variance_report(initial, refined, signal, grid)
        variance_frame = pd.concat([
            pd.DataFrame({"segmentation": "initial", "m": np.arange(1, variances.before.size + 1),
                          "value": variances.before}),
            pd.DataFrame({"segmentation": "refined", "m": np.arange(1, variances.after.size + 1),
                          "value": variances.after}),
        ], ignore_index=True)
        emit("variance", write_table(variance_frame, out / "variance.csv"))
        report.summary["variance_quantiles"] = {
            "initial": variance_quantiles(variances.before),
            "refined": variance_quantiles(variances.after),
        }

    with stage("fourier"):
        selection = select_order(signature, (cfg.k_min, cfg.k_max), cfg.criterion, cfg.penalty_count)
        model = fit_fourier(signature, selection.order)
        emit("fourier", write_artifact(model, out / "fourier.json"))
        emit("order_scores", write_table(selection.scores, out / "order_scores.csv"))
        band = approximation_residuals(model, signature)
        emit("residuals", write_table(pd.DataFrame({
            "tau": grid.points, "residual": band.residuals, "band_lo": band.lower, "band_hi": band.upper,
        }), out / "residuals.csv"))
        features = gait_features(model, trace, refined)
        emit("features", write_table(pd.DataFrame([features]), out / "features.csv"))

    classification = None
    if library_path is not None:
        with stage("classify"):
            library = read_artifact(library_path)
            if not isinstance(library, SignatureLibrary):
                raise ValidationError(f"{library_path} is not a signature library")
            classification = classify_nearest(signature, library, cfg.similarity)
            emit("classification", write_artifact(classification, out / "classification.json"))

    report.summary.update({
        "num_cycles_detected": detected.num_cycles,
        "num_cycles": refined.num_cycles,
        "initial_cost": trace.initial_cost,
        "final_cost": trace.final_cost,
        "iterations": trace.iterations,
        "selected_order": selection.order,
        "criterion": selection.criterion,
        "classification": None if classification is None else classification.to_dict(),
    })
    with stage("export"):
        report_path = out / "report.json"
        report.artifacts["report"] = str(report_path)
        write_artifact(report.to_dict(), report_path)
    logger.info("pipeline finished: %d cycles, V %.6g -> %.6g, K=%d", refined.num_cycles,
                trace.initial_cost, trace.final_cost, selection.order)
    return report


def run_one(task: tuple[str, Any, str, str | None]) -> tuple[str, dict[str, Any] | None, str | None, int]:
    """Worker entry for batch runs; returns (recording, report, error, exit code)."""
    recording_path, config, output_dir, library_path = task
    try:
        report = run_pipeline(recording_path, config, output_dir, library_path)
    except GaitSigError as err:
        logger.error("%s: %s", recording_path, err)
        return recording_path, None, str(err), err.exit_code
    return recording_path, report.to_dict(), None, 0


__all__ = ["PipelineReport", "run_pipeline", "run_one", "stage"]
