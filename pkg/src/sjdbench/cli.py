"""Command-line entry point.

Subcommands: run, bench, stats, convert, score, metrics, stream send|recv,
report, songs. Exit codes: 0 success, 1 validation error, 2 I/O error,
3 degenerate statistics.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .bench import BenchConfig, BenchReport, run_bench, run_validation_study
from .errors import DegenerateInputError, ValidationError
from .filters import DynConfig, SmoFilterConfig, dyn_preprocess, smo_filter_sequence
from .metrics import FrameMode, TrialMetrics, detect_fall, mpjpe, pa_mpjpe, smoothness
from .motion import read_motion_file, write_motion_file
from .pipeline import InterpolatorConfig, paced_file_source, run_pipeline
from .report import render_report
from .scoring import ScoreModel, load_beat_grid, score_trial
from .songs import write_demo_songs
from .stats import TrialMatrix, cv, icc_2_1, kendall_w, pearson
from .streamio import DEFAULT_PORT, FrameReceiver, FrameSender

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_IO = 2
EXIT_DEGENERATE = 3


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file of default argument values")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="bench-out", help="output directory")
    p.add_argument("--paced", choices=["on", "off"], default="off",
                   help="pace streaming against the wall clock")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sjdbench",
                                 description="dance-motion benchmark harness")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="full study: benchmark table + validation stats")
    _add_common(p)
    p.add_argument("--songs", required=True)
    p.add_argument("--cohort")
    p.add_argument("--settings", default="smo,dyn")
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--offset", type=float, default=0.0)

    p = sub.add_parser("bench", help="benchmark table only")
    _add_common(p)
    p.add_argument("--songs", required=True)
    p.add_argument("--cohort")
    p.add_argument("--settings", default="smo,dyn")
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--offset", type=float, default=0.0)

    p = sub.add_parser("stats", help="reliability statistics over a CSV matrix")
    _add_common(p)
    p.add_argument("--matrix", required=True,
                   help="CSV: header of repeat labels, one row per subject")
    p.add_argument("--analysis", required=True,
                   choices=["icc", "cv", "kcc", "pearson"])
    p.add_argument("--icc-variant", default="2,1", choices=["2,1"],
                   help="ICC variant (two-way random, absolute, single)")

    p = sub.add_parser("convert", help="apply the smo or dyn preprocessing path")
    _add_common(p)
    p.add_argument("--mode", required=True, choices=["smo", "dyn"])
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out-file", required=True)
    p.add_argument("--cutoff-hz", type=float, default=3.0)
    p.add_argument("--outlier-window", type=int, default=7)
    p.add_argument("--outlier-k", type=float, default=5.0)
    p.add_argument("--v-max", type=float, default=3.0)
    p.add_argument("--angle-v-max", type=float, default=12.0)
    p.add_argument("--target-rate", type=float, default=30.0)
    p.add_argument("--halfwidth", type=int, default=2)

    p = sub.add_parser("score", help="score an execution against a reference")
    _add_common(p)
    p.add_argument("--exec", dest="exec_file", required=True)
    p.add_argument("--ref", required=True)
    p.add_argument("--beats", help="beat grid file, one timestamp per line")
    p.add_argument("--model", help="ScoreModel JSON file")

    p = sub.add_parser("metrics", help="tracking metrics for an execution")
    _add_common(p)
    p.add_argument("--exec", dest="exec_file", required=True)
    p.add_argument("--ref", required=True)

    p = sub.add_parser("stream", help="UDP send/receive of a motion file")
    stream_sub = p.add_subparsers(dest="stream_command", required=True)
    ps = stream_sub.add_parser("send")
    _add_common(ps)
    ps.add_argument("--in", dest="infile", required=True)
    ps.add_argument("--host", default="127.0.0.1")
    ps.add_argument("--port", type=int, default=DEFAULT_PORT)
    ps.add_argument("--n", type=int, default=2, help="intermediate frames per span")
    pr = stream_sub.add_parser("recv")
    _add_common(pr)
    pr.add_argument("--out-file", required=True)
    pr.add_argument("--host", default="127.0.0.1")
    pr.add_argument("--port", type=int, default=DEFAULT_PORT)
    pr.add_argument("--timeout", type=float, default=5.0)
    pr.add_argument("--rate", type=float, default=15.0)

    p = sub.add_parser("report", help="render a saved report JSON")
    _add_common(p)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--formats", default="csv,json,svg,text")

    p = sub.add_parser("songs", help="write the built-in demo choreographies")
    _add_common(p)
    p.add_argument("--rate", type=float, default=30.0)
    return ap


def _apply_config_file(args: argparse.Namespace) -> None:
    if getattr(args, "config", None):
        defaults = json.loads(Path(args.config).read_text())
        for key, val in defaults.items():
            attr = key.replace("-", "_")
            if hasattr(args, attr):
                setattr(args, attr, val)


def _bench_config(args) -> BenchConfig:
    return BenchConfig(
        songs=args.songs,
        cohort=args.cohort,
        settings=tuple(s for s in args.settings.split(",") if s),
        repeats=args.repeats,
        seed=args.seed,
        output_dir=args.out,
        offset=args.offset,
    )


def _cmd_bench(args, with_validation: bool) -> int:
    cfg = _bench_config(args)
    report = run_bench(cfg)
    out = Path(args.out)
    paths = render_report(report, out)
    for p in paths:
        print(p)
    code = EXIT_OK
    if with_validation:
        try:
            validation, _ = run_validation_study(cfg)
        except ValidationError as exc:
            print(f"validation study skipped: {exc}", file=sys.stderr)
            return EXIT_OK
        vp = out / "validation.json"
        vp.write_text(validation.to_json())
        print(vp)
        if validation.degenerate:
            print("validation statistics degenerate", file=sys.stderr)
            code = EXIT_DEGENERATE
    return code


def _load_matrix_csv(path) -> tuple[TrialMatrix, list[str]]:
    import csv as _csv

    with open(path, newline="") as fh:
        rows = list(_csv.reader(fh))
    if len(rows) < 3:
        raise ValidationError(f"{path}: need a header and >= 2 subject rows")
    header = rows[0]
    label_col = not _is_float(rows[1][0])
    cond = header[1:] if label_col else header
    subjects, values = [], []
    for i, row in enumerate(rows[1:]):
        if label_col:
            subjects.append(row[0])
            row = row[1:]
        else:
            subjects.append(f"s{i}")
        values.append([float(c) for c in row])
    return TrialMatrix(np.asarray(values), subjects, list(cond)), subjects


def _is_float(s: str) -> bool:
    try:
        float(s)
        return True
    except ValueError:
        return False


def _cmd_stats(args) -> int:
    matrix, _ = _load_matrix_csv(args.matrix)
    if args.analysis == "icc":
        result = {"icc_2_1": icc_2_1(matrix)}
    elif args.analysis == "cv":
        result = {"cv_percent_per_subject":
                  {sid: cv(matrix.values[i])
                   for i, sid in enumerate(matrix.subject_ids)}}
    elif args.analysis == "kcc":
        result = {"kendall_w": kendall_w(matrix.values)}
    else:
        if matrix.values.shape[1] < 2:
            raise ValidationError("pearson needs two columns")
        r, p = pearson(matrix.values[:, 0], matrix.values[:, 1])
        result = {"pearson_r": r, "pearson_p": p}
    print(json.dumps(result, sort_keys=True, indent=2))
    return EXIT_OK


def _cmd_convert(args) -> int:
    seq = read_motion_file(args.infile)
    if args.mode == "smo":
        cfg = SmoFilterConfig(cutoff_hz=args.cutoff_hz,
                              outlier_window=args.outlier_window,
                              outlier_k=args.outlier_k, v_max=args.v_max,
                              angle_v_max=args.angle_v_max)
        out = smo_filter_sequence(seq, cfg)
    else:
        out = dyn_preprocess(seq, DynConfig(target_rate=args.target_rate,
                                            smoothing_halfwidth=args.halfwidth))
    write_motion_file(out, args.out_file)
    print(args.out_file)
    return EXIT_OK


def _cmd_score(args) -> int:
    execution = read_motion_file(args.exec_file)
    reference = read_motion_file(args.ref)
    model = ScoreModel.from_dict(json.loads(Path(args.model).read_text())) \
        if args.model else ScoreModel()
    if args.beats:
        model.beat_grid = load_beat_grid(args.beats)
    breakdown = score_trial(execution, reference, model)
    print(json.dumps({
        "total": breakdown.total,
        "windows": [
            {"t_start": w.t_start, "score": w.window_score, "pos": w.pos_term,
             "acc": w.acc_term, "beat": w.beat_term}
            for w in breakdown.per_window
        ],
    }, sort_keys=True, indent=2))
    return EXIT_OK


def _cmd_metrics(args) -> int:
    execution = read_motion_file(args.exec_file)
    reference = read_motion_file(args.ref)
    fall = detect_fall(execution)
    all_mm = mpjpe(execution, reference)
    active_mm = mpjpe(execution, reference, FrameMode.ACTIVE, fall) \
        if fall.fell else all_mm
    jerk, acc = smoothness(execution)
    tm = TrialMetrics(mpjpe_active_mm=active_mm, mpjpe_all_mm=all_mm,
                      success=not fall.fell, jerk=jerk, acceleration=acc)
    out = tm.as_dict()
    out["pa_mpjpe_mm"] = pa_mpjpe(execution, reference)
    out["fall_time"] = fall.fall_time
    print(json.dumps(out, sort_keys=True, indent=2))
    return EXIT_OK


def _cmd_stream_send(args) -> int:
    seq = read_motion_file(args.infile)
    cfg = InterpolatorConfig(n_intermediate=args.n,
                             input_rate_hint=seq.nominal_rate)
    sent = 0
    pending = None  # one-frame buffer so the final frame carries the EOS flag
    with FrameSender(args.host, args.port) as sender:
        def sink(frame):
            nonlocal sent, pending
            if pending is not None:
                sender.send(pending)
                sent += 1
            pending = frame

        source = paced_file_source(seq.frames) if args.paced == "on" \
            else iter(seq.frames)
        stats = run_pipeline(source, sink, cfg, paced=args.paced == "on")
        if pending is not None:
            sender.send(pending, end_of_stream=True)
            sent += 1
    print(json.dumps({"frames_in": stats.frames_in, "frames_sent": sent,
                      "drops": stats.drops}, sort_keys=True))
    return EXIT_OK


def _cmd_stream_recv(args) -> int:
    from .motion import Difficulty, MotionSequence, PoseFrame, Skeleton

    with FrameReceiver(args.host, args.port, timeout=args.timeout) as receiver:
        frames = [pkt.frame for pkt in receiver.frames()]
        stats = receiver.stats
    if len(frames) < 2:
        print("received fewer than 2 frames", file=sys.stderr)
        return EXIT_VALIDATION
    skeleton = Skeleton.default(frames[0].joint_count, tracked_effector=0)
    seq = MotionSequence(skeleton=skeleton, frames=frames,
                         nominal_rate=args.rate, difficulty=Difficulty.EASY,
                         song_id="stream")
    write_motion_file(seq, args.out_file)
    print(json.dumps({"delivered": stats.delivered,
                      "dropped_stale": stats.dropped_stale,
                      "gaps": stats.gaps}, sort_keys=True))
    return EXIT_OK


def _cmd_report(args) -> int:
    report = BenchReport.from_json(Path(args.infile).read_text())
    paths = render_report(report, args.out,
                          formats=args.formats.split(","))
    for p in paths:
        print(p)
    return EXIT_OK


def _cmd_songs(args) -> int:
    for p in write_demo_songs(args.out, rate=args.rate):
        print(p)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        _apply_config_file(args)
        if args.command == "run":
            return _cmd_bench(args, with_validation=True)
        if args.command == "bench":
            return _cmd_bench(args, with_validation=False)
        if args.command == "stats":
            return _cmd_stats(args)
        if args.command == "convert":
            return _cmd_convert(args)
        if args.command == "score":
            return _cmd_score(args)
        if args.command == "metrics":
            return _cmd_metrics(args)
        if args.command == "stream":
            if args.stream_command == "send":
                return _cmd_stream_send(args)
            return _cmd_stream_recv(args)
        if args.command == "report":
            return _cmd_report(args)
        if args.command == "songs":
            return _cmd_songs(args)
        raise ValidationError(f"unknown command {args.command!r}")
    except DegenerateInputError as exc:
        print(f"degenerate statistics: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
