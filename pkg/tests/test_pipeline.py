import json
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from gaitsig import SCHEMA, __version__
from gaitsig.classify import build_library
from gaitsig.cli import main
from gaitsig.config import PipelineConfig
from gaitsig.errors import StageError
from gaitsig.fourier import reconstruct
from gaitsig.imu_io import read_artifact, write_artifact
from gaitsig.models import NormalizedGrid, Segmentation, Signature
from gaitsig.pipeline import run_pipeline
from gaitsig.synth import walking_template


@pytest.fixture
def library_path(tmp_path):
    grid = NormalizedGrid(100)
    walking = reconstruct(walking_template(), grid)
    other = np.sin(6 * np.pi * grid.points)
    library = build_library([
        ("W1", Signature(walking, np.zeros(100), 1)),
        ("R3", Signature(other, np.zeros(100), 1)),
    ])
    return write_artifact(library, tmp_path / "library.json")


def test_pipeline_on_synthetic_walk(tmp_path, noisy_walk, noisy_walk_csv):
    report = run_pipeline(noisy_walk_csv, None, tmp_path / "out")
    summary = report.summary
    assert abs(summary["num_cycles"] - noisy_walk.truth.num_cycles) <= 1
    assert summary["final_cost"] < summary["initial_cost"]
    assert summary["selected_order"] in (4, 5)
    for path in report.artifacts.values():
        assert Path(path).is_file()

    document = json.loads((tmp_path / "out" / "report.json").read_text())
    assert document["schema"] == SCHEMA
    assert document["kind"] == "report"
    assert document["config"]["eps_p"] == 2.0

    cycles = pd.read_csv(tmp_path / "out" / "cycles_refined.csv")
    assert list(cycles.columns) == ["m", "tau", "value"]
    assert cycles["m"].max() == summary["num_cycles"]
    scores = pd.read_csv(tmp_path / "out" / "order_scores.csv")
    assert scores["K"].tolist() == list(range(1, 26))
    trace = pd.read_csv(tmp_path / "out" / "cost_trace.csv")
    assert trace["V"].is_monotonic_decreasing
    refined = read_artifact(tmp_path / "out" / "segmentation_refined.json")
    assert isinstance(refined, Segmentation)

    response = pd.read_csv(tmp_path / "out" / "filter_response.csv")
    assert list(response.columns) == ["f", "gain_db", "zero_phase_gain"]
    assert response["f"].is_monotonic_increasing
    assert response["f"].iloc[-1] < 50.0
    passband = response[(response["f"] > 0.5) & (response["f"] < 5.0)]
    assert passband["gain_db"].abs().max() < 1.0
    assert response["zero_phase_gain"].iloc[0] < 1e-6
    np.testing.assert_allclose(10 ** (response["gain_db"] / 10), response["zero_phase_gain"], rtol=1e-9)


def test_pipeline_classifies_against_a_library(tmp_path, noisy_walk_csv):
    first = run_pipeline(noisy_walk_csv, None, tmp_path / "first")
    own = read_artifact(first.artifacts["signature"])
    other = np.sin(6 * np.pi * NormalizedGrid(100).points)
    library = write_artifact(
        build_library([("R3", Signature(other, np.zeros(100), 1)), ("W1", own)]), tmp_path / "lib.json"
    )
    report = run_pipeline(noisy_walk_csv, None, tmp_path / "second", library)
    result = report.summary["classification"]
    assert result["label"] == "W1"
    assert result["score"] == pytest.approx(1.0)
    assert [entry["label"] for entry in result["ranked"]] == ["W1", "R3"]
    assert read_artifact(report.artifacts["classification"]).label == "W1"


def test_empty_recording_fails_at_ingest(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text("")
    with pytest.raises(StageError, match="^ingest: empty recording file") as info:
        run_pipeline(path, None, tmp_path / "out")
    assert info.value.stage == "ingest"
    assert info.value.exit_code == 1


def test_bad_bounds_fail_before_any_output(tmp_path, noisy_walk_csv):
    out = tmp_path / "out"
    with pytest.raises(StageError) as info:
        run_pipeline(noisy_walk_csv, PipelineConfig(eps_lo=1.5, eps_up=1.0), out)
    assert info.value.stage == "config"
    assert not out.exists()


def test_schema_and_version(capsys):
    assert main(["--schema"]) == 0
    assert capsys.readouterr().out.strip() == SCHEMA
    with pytest.raises(SystemExit) as info:
        main(["--version"])
    assert info.value.code == 0
    assert __version__ in capsys.readouterr().out


def test_stage_by_stage_commands(tmp_path):
    rec, truth = tmp_path / "walk.csv", tmp_path / "truth.json"
    assert main(["synth", "--duration", "30", "--seed", "7", "--snr", "20", "--out", str(rec),
                 "--truth", str(truth)]) == 0
    assert read_artifact(truth).num_cycles >= 28

    seg, refined, sig, model = (tmp_path / name for name in ("seg.json", "refined.json", "sig.json", "model.json"))
    assert main(["detect", str(rec), "--mode", "walking", "--out", str(seg)]) == 0
    assert main(["refine", str(rec), str(seg), "--out", str(refined), "--trace", str(tmp_path / "trace.csv")]) == 0
    assert main(["signature", str(rec), str(refined), "--out", str(sig), "--table", str(tmp_path / "sig.csv")]) == 0
    assert main(["fourier", str(sig), "--select", "1:10", "--criterion", "aic", "--out", str(model),
                 "--scores", str(tmp_path / "scores.csv")]) == 0
    assert read_artifact(model).order >= 4
    assert main(["fourier", str(sig), "--k", "8", "--out", str(model)]) == 0
    assert read_artifact(model).order == 8

    table = pd.read_csv(tmp_path / "sig.csv")
    assert {"tau", "mean", "std", "mean_lo", "mean_hi"} <= set(table.columns)
    assert len(table) == 100


def test_classify_command(tmp_path, library_path, capsys):
    query = tmp_path / "query.json"
    write_artifact(read_artifact(library_path).entries[1][1], query)
    out = tmp_path / "result.json"
    assert main(["classify", str(query), "--library", str(library_path), "--out", str(out),
                 "--matrix", str(tmp_path / "matrix.csv")]) == 0
    assert read_artifact(out).label == "R3"
    assert capsys.readouterr().out.splitlines()[0].startswith("R3\t1.0000")
    matrix = pd.read_csv(tmp_path / "matrix.csv")
    assert matrix["label"].tolist() == ["W1", "R3"]


def test_config_file_errors_exit_with_one(tmp_path, noisy_walk_csv):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("colour=blue\n")
    assert main(["--config", str(cfg), "pipeline", str(noisy_walk_csv), "--out-dir", str(tmp_path / "out")]) == 1
    assert not (tmp_path / "out").exists()


def test_numerical_exit_code(tmp_path, monkeypatch, noisy_walk_csv):
    from gaitsig import pipeline
    from gaitsig.errors import NumericalError

    def unstable(*args, **kwargs):
        raise NumericalError("unstable band-pass design")

    monkeypatch.setattr(pipeline, "design_bandpass", unstable)
    assert main(["pipeline", str(noisy_walk_csv), "--out-dir", str(tmp_path / "out")]) == 2


def test_batch_pipeline_with_workers(tmp_path, noisy_walk_csv):
    second = tmp_path / "second.csv"
    main(["synth", "--duration", "20", "--seed", "2", "--snr", "20", "--out", str(second)])
    missing = tmp_path / "missing.csv"
    out = tmp_path / "batch"
    status = main(["pipeline", str(noisy_walk_csv), str(second), str(missing), "--out-dir", str(out), "--jobs", "2"])
    assert status == 1
    assert (out / "walk" / "report.json").is_file()
    assert (out / "second" / "report.json").is_file()
    assert not (out / "missing" / "report.json").exists()
