"""Command-line front end.

Each subcommand runs one stage and writes its artifact, so stages can be
chained through files; ``pipeline`` runs them all on one or more recordings.
"""

from __future__ import annotations

import argparse
import logging
from multiprocessing import Pool
from pathlib import Path
from typing import Any, Sequence

import pandas as pd

from gaitsig import SCHEMA, __version__
from gaitsig.classify import classify_nearest, correlation_matrix, describe_label
from gaitsig.config import CRITERIA, PENALTY_COUNTS, SIMILARITIES, PipelineConfig, load_config
from gaitsig.detect import detect_cycles, filter_segments, suggest_bounds
from gaitsig.errors import ConfigError, GaitSigError, ValidationError
from gaitsig.fourier import fit_fourier, select_order
from gaitsig.imu_io import read_artifact, read_recording, write_artifact, write_recording, write_table
from gaitsig.models import FourierModel, NormalizedGrid, ScalarSignal, Segmentation, Signature, SignatureLibrary
from gaitsig.pipeline import run_one, signature_table, stage
from gaitsig.preprocess import accel_norm, preprocess_recording
from gaitsig.segment_opt import OptConfig, optimize_segmentation
from gaitsig.signature import signature_from_segmentation
from gaitsig.synth import TEMPLATES, SynthSpec, generate, noise_std_for_snr

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s - %(levelname)s - %(message)s"

# default cycle period per template, seconds
_TEMPLATE_PERIODS = {"walking": 1.0, "running": 0.7}


def configure_logging(verbose: bool = False, log_file: str | None = None) -> None:
    logging.basicConfig(
        filename=log_file,
        filemode="w" if log_file else "a",
        level=logging.DEBUG if verbose else logging.INFO,
        format=LOG_FORMAT,
        force=True,
    )


def _range(text: str) -> tuple[float, float]:
    """Parse ``lo:hi``."""
    try:
        lo, hi = text.split(":")
        return float(lo), float(hi)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected lo:hi, got {text!r}") from None


def _int_range(text: str) -> tuple[int, int]:
    lo, hi = _range(text)
    if lo != int(lo) or hi != int(hi):
        raise argparse.ArgumentTypeError(f"expected integer range lo:hi, got {text!r}")
    return int(lo), int(hi)


def _config(args: argparse.Namespace) -> PipelineConfig:
    overrides: dict[str, Any] = {}
    band = getattr(args, "band", None)
    if band is not None:
        overrides["band_lo"], overrides["band_hi"] = band
    select = getattr(args, "select", None)
    if select is not None:
        overrides["k_min"], overrides["k_max"] = select
    for name in ("filter_order", "mode", "eps_p", "eps_v", "eps_lo", "eps_up", "auto_bounds", "gamma",
                 "max_outer_iters", "line_search_tol", "grid_size", "criterion", "penalty_count",
                 "similarity"):
        overrides[name] = getattr(args, name, None)
    return load_config(args.config, overrides)


def _filtered(path: str, cfg: PipelineConfig) -> ScalarSignal:
    recording = read_recording(path)
    cfg.validate(recording.nominal_rate)
    return preprocess_recording(recording, (cfg.band_lo, cfg.band_hi), cfg.filter_order)


def _read(path: str, expected: type) -> Any:
    obj = read_artifact(path)
    if not isinstance(obj, expected):
        raise ValidationError(f"{path} holds a {obj.kind} artifact, expected {expected.kind}")
    return obj


def _bounds(cfg: PipelineConfig, detected: Segmentation) -> tuple[float, float]:
    if cfg.auto_bounds:
        return suggest_bounds(detected)
    return cfg.eps_lo, cfg.eps_up


def cmd_ingest(args: argparse.Namespace) -> int:
    recording = read_recording(args.recording)
    start, end = recording.span
    print(f"{recording.n_samples} samples at {recording.nominal_rate:.3f} Hz, t = {start:.3f} .. {end:.3f} s")
    if args.out:
        norm = accel_norm(recording)
        write_table(pd.DataFrame({"t": norm.times, "value": norm.values}), args.out)
    return 0


def cmd_preprocess(args: argparse.Namespace) -> int:
    cfg = _config(args)
    signal = _filtered(args.recording, cfg)
    write_table(pd.DataFrame({"t": signal.times, "value": signal.values}), args.out)
    return 0


def cmd_detect(args: argparse.Namespace) -> int:
    cfg = _config(args)
    signal = _filtered(args.recording, cfg)
    seg = detect_cycles(signal, cfg.thresholds)
    if not args.no_filter:
        eps_lo, eps_up = _bounds(cfg, seg)
        seg = filter_segments(seg, eps_lo, eps_up)
    write_artifact(seg, args.out)
    print(f"{seg.num_cycles} cycles")
    return 0


def cmd_refine(args: argparse.Namespace) -> int:
    cfg = _config(args)
    signal = _filtered(args.recording, cfg)
    initial = _read(args.segmentation, Segmentation)
    eps_lo, eps_up = _bounds(cfg, initial)
    opt_cfg = OptConfig(eps_lo, eps_up, cfg.gamma, cfg.max_outer_iters, cfg.line_search_tol)
    refined, signature, trace = optimize_segmentation(initial, signal, NormalizedGrid(cfg.grid_size), opt_cfg)
    write_artifact(refined, args.out)
    if args.trace:
        write_table(pd.DataFrame({"iter": range(trace.iterations + 1), "V": (trace.initial_cost, *trace.costs)}),
                    args.trace)
    if args.signature:
        write_artifact(signature, args.signature)
    print(f"V {trace.initial_cost:.6g} -> {trace.final_cost:.6g} in {trace.iterations} sweeps")
    return 0


def cmd_signature(args: argparse.Namespace) -> int:
    cfg = _config(args)
    signal = _filtered(args.recording, cfg)
    seg = _read(args.segmentation, Segmentation)
    grid = NormalizedGrid(cfg.grid_size)
    sig = signature_from_segmentation(seg, signal, grid)
    write_artifact(sig, args.out)
    if args.table:
        write_table(signature_table(sig, grid), args.table)
    return 0


def cmd_fourier(args: argparse.Namespace) -> int:
    cfg = _config(args)
    sig = _read(args.signature, Signature)
    if args.k is not None:
        model = fit_fourier(sig, args.k)
    else:
        selection = select_order(sig, (cfg.k_min, cfg.k_max), cfg.criterion, cfg.penalty_count)
        model = fit_fourier(sig, selection.order)
        if args.scores:
            write_table(selection.scores, args.scores)
    write_artifact(model, args.out)
    print(f"K={model.order}, RSS={model.rss:.6g}")
    return 0


def cmd_classify(args: argparse.Namespace) -> int:
    cfg = _config(args)
    library = _read(args.library, SignatureLibrary)
    if args.matrix:
        write_table(correlation_matrix(library, cfg.similarity).reset_index(names="label"), args.matrix)
    if args.query is None:
        if not args.matrix:
            raise ValidationError("classify needs a query signature or --matrix")
        return 0
    result = classify_nearest(_read(args.query, Signature), library, cfg.similarity)
    if args.out:
        write_artifact(result, args.out)
    for label, score in result.ranked:
        description = describe_label(label)
        print(f"{label}\t{score:.4f}" + (f"\t{description}" if description else ""))
    return 0


def cmd_synth(args: argparse.Namespace) -> int:
    if args.model:
        template = _read(args.model, FourierModel)
        period = args.period or 1.0
    else:
        template = TEMPLATES[args.template]()
        period = args.period or _TEMPLATE_PERIODS[args.template]
    noise_std = args.noise_std
    if args.snr is not None:
        noise_std = noise_std_for_snr(template, args.snr)
    spec = SynthSpec(
        template=template,
        mean_period=period,
        period_jitter_std=args.jitter,
        noise_std=noise_std,
        duration=args.duration,
        rate=args.rate,
        seed=args.seed,
    )
    result = generate(spec)
    write_recording(result.recording, args.out)
    if args.truth:
        write_artifact(result.truth, args.truth)
    if args.signature:
        write_artifact(result.signature, args.signature)
    return 0


def cmd_pipeline(args: argparse.Namespace) -> int:
    with stage("config"):
        cfg = _config(args)
    out_dir = Path(args.out_dir)
    recordings = [str(p) for p in args.recordings]
    if len(recordings) == 1:
        targets = [out_dir]
    else:
        stems = [Path(p).stem for p in recordings]
        if len(set(stems)) != len(stems):
            raise ConfigError("recordings must have distinct file names for per-recording output directories")
        targets = [out_dir / stem for stem in stems]
    tasks = [(rec, cfg, str(target), args.library) for rec, target in zip(recordings, targets)]

    if args.jobs > 1 and len(tasks) > 1:
        logger.info("running %d recordings on %d workers", len(tasks), args.jobs)
        with Pool(processes=args.jobs) as pool:
            results = pool.map(run_one, tasks)
    else:
        results = [run_one(task) for task in tasks]

    status = 0
    for recording, report, error, code in results:
        if error is not None:
            print(f"{recording}: FAILED ({error})")
            status = max(status, code)
            continue
        summary = report["summary"]
        line = f"{recording}: {summary['num_cycles']} cycles, V {summary['final_cost']:.6g}, K={summary['selected_order']}"
        if summary["classification"] is not None:
            line += f", class {summary['classification']['label']}"
        print(line)
    return status


def _common(parser: argparse.ArgumentParser, top: bool) -> None:
    # on subcommands the defaults are suppressed so top-level values survive
    kwargs: dict[str, Any] = {} if top else {"default": argparse.SUPPRESS}
    parser.add_argument("--config", help="key=value configuration file", **kwargs)
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging", **kwargs)
    parser.add_argument("--log-file", help="write the log to this file instead of stderr", **kwargs)


def _filter_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--band", type=_range, help="pass band lo:hi in Hz (default 0.1:10)")
    parser.add_argument("--filter-order", type=int, help="Butterworth prototype order (default 4)")


def _detect_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--mode", choices=["walking", "running"], help="threshold preset")
    parser.add_argument("--eps-p", type=float, help="peak threshold")
    parser.add_argument("--eps-v", type=float, help="valley threshold")


def _bound_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--eps-lo", type=float, help="shortest cycle duration, s")
    parser.add_argument("--eps-up", type=float, help="longest cycle duration, s")
    parser.add_argument("--auto-bounds", action="store_const", const=True, default=None,
                        help="derive duration bounds from the modal detected duration")


def _refine_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--gamma", type=float, help="stop when a sweep lowers V by less than this")
    parser.add_argument("--max-iters", dest="max_outer_iters", type=int, help="maximum outer sweeps")
    parser.add_argument("--tol", dest="line_search_tol", type=float, help="line search tolerance, s")
    parser.add_argument("--grid", dest="grid_size", type=int, help="normalized grid size L")


def _fourier_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--select", type=_int_range, help="order range kmin:kmax to search")
    parser.add_argument("--criterion", choices=CRITERIA)
    parser.add_argument("--penalty-count", choices=PENALTY_COUNTS)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gaitsig", description="IMU gait cycle segmentation and signatures.")
    parser.add_argument("--version", action="version", version=f"gaitsig {__version__} ({SCHEMA})")
    parser.add_argument("--schema", action="store_true", help="print the artifact schema identifier")
    _common(parser, top=True)
    sub = parser.add_subparsers(dest="command")

    def command(name: str, handler: Any, help: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help)
        _common(p, top=False)
        p.set_defaults(handler=handler)
        return p

    p = command("ingest", cmd_ingest, "validate a recording")
    p.add_argument("recording")
    p.add_argument("--out", help="write the acceleration norm as CSV t,value")

    p = command("preprocess", cmd_preprocess, "band-pass filter the acceleration norm")
    p.add_argument("recording")
    _filter_options(p)
    p.add_argument("--out", required=True, help="filtered signal CSV")

    p = command("detect", cmd_detect, "threshold cycle detection")
    p.add_argument("recording")
    _filter_options(p)
    _detect_options(p)
    _bound_options(p)
    p.add_argument("--no-filter", action="store_true", help="skip the duration filter")
    p.add_argument("--out", required=True, help="segmentation JSON")

    p = command("refine", cmd_refine, "optimize cycle boundaries")
    p.add_argument("recording")
    p.add_argument("segmentation")
    _filter_options(p)
    _bound_options(p)
    _refine_options(p)
    p.add_argument("--out", required=True, help="refined segmentation JSON")
    p.add_argument("--trace", help="cost per sweep CSV iter,V")
    p.add_argument("--signature", help="signature JSON of the refined segmentation")

    p = command("signature", cmd_signature, "average the cycles of a segmentation")
    p.add_argument("recording")
    p.add_argument("segmentation")
    _filter_options(p)
    p.add_argument("--grid", dest="grid_size", type=int, help="normalized grid size L")
    p.add_argument("--out", required=True, help="signature JSON")
    p.add_argument("--table", help="CSV tau,mean,std with bands")

    p = command("fourier", cmd_fourier, "fit a Fourier series to a signature")
    p.add_argument("signature")
    p.add_argument("--k", type=int, help="fixed order K")
    _fourier_options(p)
    p.add_argument("--out", required=True, help="Fourier model JSON")
    p.add_argument("--scores", help="per-order criterion CSV")

    p = command("classify", cmd_classify, "highest-correlation classification")
    p.add_argument("query", nargs="?", help="query signature JSON")
    p.add_argument("--library", required=True, help="signature library JSON")
    p.add_argument("--similarity", choices=SIMILARITIES)
    p.add_argument("--out", help="classification JSON")
    p.add_argument("--matrix", help="write the library correlation matrix CSV")

    p = command("synth", cmd_synth, "generate a synthetic recording")
    source = p.add_mutually_exclusive_group()
    source.add_argument("--template", choices=sorted(TEMPLATES), default="walking")
    source.add_argument("--model", help="Fourier model JSON used as template")
    p.add_argument("--duration", type=float, default=60.0, help="seconds")
    p.add_argument("--rate", type=float, default=100.0, help="Hz")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--period", type=float, help="mean cycle period, s")
    p.add_argument("--jitter", type=float, default=0.05, help="period std, s")
    noise = p.add_mutually_exclusive_group()
    noise.add_argument("--snr", type=float, help="signal-to-noise ratio, dB")
    noise.add_argument("--noise-std", type=float, default=0.0)
    p.add_argument("--out", required=True, help="recording CSV")
    p.add_argument("--truth", help="true segmentation JSON")
    p.add_argument("--signature", help="noise-free signature JSON")

    p = command("pipeline", cmd_pipeline, "run every stage on one or more recordings")
    p.add_argument("recordings", nargs="+")
    _filter_options(p)
    _detect_options(p)
    _bound_options(p)
    _refine_options(p)
    _fourier_options(p)
    p.add_argument("--similarity", choices=SIMILARITIES)
    p.add_argument("--library", help="signature library JSON for classification")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--jobs", type=int, default=1, help="worker processes across recordings")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.schema:
        print(SCHEMA)
        return 0
    if args.command is None:
        parser.print_help()
        return 1
    configure_logging(args.verbose, args.log_file)

    try:
        if args.command == "pipeline":
            return args.handler(args)
        with stage(args.command):
            return args.handler(args)
    except GaitSigError as err:
        logger.error("%s", err)
        return err.exit_code
