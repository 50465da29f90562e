"""Command-line pipeline: train, generate, evaluate, rank, export.

Every command writes a manifest echoing its configuration, derived
per-piece seeds (seed_i = master_seed + i) and output paths, so a run
can be reproduced bit-for-bit from the manifest alone.  The default
output root comes from the SSCOMPOSE_OUTPUT_ROOT environment variable
when --out is not given.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import metrics as metrics_mod
from . import persist, registry
from .midi_codec import MidiCsvError, PitchSequence, emit_midi_csv, parse_midi_csv

OUTPUT_ROOT_ENV = "SSCOMPOSE_OUTPUT_ROOT"
CRITERIA = ("entropy-rmse", "musicality-avg", "temporal-avg")
DEFAULT_TOP = 3


def _resolve_out(out):
    if out:
        return out
    return os.environ.get(OUTPUT_ROOT_ENV, ".")


def _read_piece(path):
    with open(path) as fh:
        text = fh.read()
    return parse_midi_csv(text, source_name=os.path.basename(path))


def _write_manifest(out_dir, command, config, artifacts, started):
    manifest = {
        "command": command,
        "config": config,
        "artifacts": artifacts,
        "wall_clock_seconds": time.time() - started,
    }
    path = os.path.join(out_dir, f"{command}_manifest.json")
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    return path


def cmd_train(args):
    started = time.time()
    out_dir = _resolve_out(args.out)
    os.makedirs(out_dir, exist_ok=True)
    seq = _read_piece(args.input)
    if args.restarts < 1:
        raise ValueError("--restarts must be >= 1")
    model, loglik = None, -np.inf
    for r in range(args.restarts):
        candidate = registry.train_model(
            args.model, seq, seed=args.seed + r, tol=args.tol,
            max_iter=args.max_iter, states=args.states, order=args.order,
            layers=args.layers, d_max=args.dmax)
        ll = registry.model_log_likelihood(candidate)
        if model is None or ll > loglik:
            model, loglik = candidate, ll
    model_path = os.path.join(out_dir, f"{args.model}_model.json")
    persist.save_model(model, model_path)
    report_path = os.path.join(out_dir, f"{args.model}_fit_report.json")
    report = {"model": args.model, "final_log_likelihood": loglik}
    if model.report is not None:
        report.update(iterations=model.report.iterations,
                      converged=model.report.converged,
                      log_likelihood_trace=list(model.report.log_likelihood_trace))
    if "grid_audit" in model.extra:
        report["grid_audit"] = model.extra["grid_audit"]
    if "sampler" in model.extra:
        report["sampler"] = {k: v for k, v in model.extra["sampler"].items()
                             if np.isscalar(v)}
    with open(report_path, "w") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")
    config = {"input": args.input, "model": args.model, "seed": args.seed,
              "restarts": args.restarts, "tol": args.tol,
              "max_iter": args.max_iter, "states": args.states,
              "order": args.order, "layers": args.layers, "dmax": args.dmax}
    _write_manifest(out_dir, "train", config,
                    {"model_file": model_path, "fit_report": report_path}, started)
    print(f"{args.model}: final log-likelihood {loglik:.6f}")
    return 0


def cmd_generate(args):
    started = time.time()
    out_dir = _resolve_out(args.out)
    pieces_dir = os.path.join(out_dir, "pieces")
    os.makedirs(pieces_dir, exist_ok=True)
    model = persist.load_model(args.model)
    length = args.length if args.length else len(model.training_symbols)
    seeds = [args.seed + i for i in range(args.n)]
    piece_paths = []
    for i, seed_i in enumerate(seeds):
        seq = registry.sample_sequence(model, length, seed_i, name=f"piece_{i:04d}")
        path = os.path.join(pieces_dir, f"piece_{i:04d}.txt")
        with open(path, "w") as fh:
            fh.write("\n".join(str(int(p)) for p in seq.pitches) + "\n")
        piece_paths.append(os.path.relpath(path, out_dir))
        if args.midi:
            midi_path = os.path.join(pieces_dir, f"piece_{i:04d}.csv")
            with open(midi_path, "w") as fh:
                fh.write(emit_midi_csv(seq))
    batch = {"model": model.spec.name, "model_file": args.model,
             "master_seed": args.seed, "n": args.n, "length": length,
             "ticks_per_quarter": 480, "seeds": seeds, "pieces": piece_paths}
    batch_path = os.path.join(out_dir, "batch.json")
    with open(batch_path, "w") as fh:
        json.dump(batch, fh, indent=2)
        fh.write("\n")
    config = {"model_file": args.model, "n": args.n, "seed": args.seed,
              "length": length, "midi": args.midi}
    _write_manifest(out_dir, "generate", config, {"batch": batch_path}, started)
    print(f"generated {args.n} pieces of length {length} into {pieces_dir}")
    return 0


def _load_batch(batch_dir):
    batch_path = os.path.join(batch_dir, "batch.json")
    if not os.path.exists(batch_path):
        raise FileNotFoundError(f"no batch.json in {batch_dir}")
    with open(batch_path) as fh:
        batch = json.load(fh)
    tpq = batch.get("ticks_per_quarter", 480)
    step = tpq // 2
    pieces, problems = [], []
    for rel in batch["pieces"]:
        path = os.path.join(batch_dir, rel)
        try:
            with open(path) as fh:
                pitches = np.array([int(line) for line in fh if line.strip()],
                                   dtype=np.int64)
            if len(pitches) == 0:
                raise ValueError("empty piece file")
            times = np.arange(len(pitches), dtype=np.int64) * step
            pieces.append(PitchSequence(pitches, times, tpq, os.path.basename(path)))
        except (OSError, ValueError) as exc:
            problems.append(f"{rel}: {exc}")
    return batch, pieces, problems


def _write_report_files(out_dir, report, model_name):
    rows = [
        ("entropy_rmse", report.entropy_rmse),
        ("mutual_information_mean", report.mutual_information_mean),
        ("edit_distance_mean", report.edit_distance_mean),
        ("dissonance_rmse", report.dissonance_rmse),
        ("large_interval_rmse", report.large_interval_rmse),
        ("note_count_rmse", report.note_count_rmse),
        ("acf_rmse", report.acf_rmse),
        ("pacf_rmse", report.pacf_rmse),
        ("musicality_average", report.musicality_average),
        ("temporal_average", report.temporal_average),
    ]
    table_path = os.path.join(out_dir, "metrics.csv")
    with open(table_path, "w") as fh:
        fh.write("metric,value\n")
        for name, value in rows:
            fh.write(f"{name},{value!r}\n")

    per_piece_path = os.path.join(out_dir, "per_piece.csv")
    scores = metrics_mod.piece_scores(report)
    with open(per_piece_path, "w") as fh:
        fh.write("piece,metric,value\n")
        for row in scores:
            for key in ("entropy-rmse", "musicality-avg", "temporal-avg",
                        "mutual_information", "edit_distance"):
                fh.write(f"{row['piece']},{key},{row[key]!r}\n")

    curves_path = os.path.join(out_dir, "acf_pacf.csv")
    ref = report.training_metrics
    valid = [mv for mv, _ in report.per_piece if mv.acf is not None]
    mean_acf = np.mean([mv.acf for mv in valid], axis=0) if valid else None
    mean_pacf = np.mean([mv.pacf for mv in valid], axis=0) if valid else None
    with open(curves_path, "w") as fh:
        fh.write("lag,train_acf,train_pacf,batch_mean_acf,batch_mean_pacf\n")
        for lag in range(len(ref.acf)):
            ma = mean_acf[lag] if mean_acf is not None else float("nan")
            mp = mean_pacf[lag] if mean_pacf is not None else float("nan")
            fh.write(f"{lag + 1},{ref.acf[lag]!r},{ref.pacf[lag]!r},{ma!r},{mp!r}\n")

    report_path = os.path.join(out_dir, "report.json")
    payload = {"model": model_name}
    payload.update({name: value for name, value in rows})
    payload["skipped"] = report.skipped
    with open(report_path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
    return table_path, per_piece_path, curves_path, report_path


def cmd_evaluate(args):
    started = time.time()
    out_dir = _resolve_out(args.out)
    os.makedirs(out_dir, exist_ok=True)
    train_seq = _read_piece(args.input)
    batch, pieces, problems = _load_batch(args.batch)
    for problem in problems:
        print(f"skipping piece: {problem}", file=sys.stderr)
    if not pieces:
        raise ValueError("no readable pieces in the batch")
    report = metrics_mod.evaluate_batch(train_seq, pieces)
    for idx, reason in report.skipped:
        print(f"piece {idx} excluded from ACF/PACF pooling: {reason}", file=sys.stderr)
    paths = _write_report_files(out_dir, report, batch.get("model", "?"))
    config = {"input": args.input, "batch": args.batch}
    _write_manifest(out_dir, "evaluate", config,
                    {"metrics": paths[0], "per_piece": paths[1],
                     "curves": paths[2], "report": paths[3]}, started)
    print(f"entropy RMSE {report.entropy_rmse:.6f}, "
          f"musicality avg {report.musicality_average:.6f}, "
          f"temporal avg {report.temporal_average:.6f}")
    return 0


def cmd_rank(args):
    if args.criterion not in CRITERIA:
        raise ValueError(f"unknown criterion {args.criterion!r}; valid: {list(CRITERIA)}")
    key_field = {"entropy-rmse": "entropy_rmse",
                 "musicality-avg": "musicality_average",
                 "temporal-avg": "temporal_average"}[args.criterion]
    entries = []
    for path in args.reports:
        with open(path) as fh:
            payload = json.load(fh)
        if key_field not in payload:
            raise ValueError(f"{path}: report missing field {key_field!r}")
        entries.append((payload[key_field], payload.get("model", "?"), path))
    entries.sort(key=lambda e: (e[0], e[1]))
    print(f"rank,model,{key_field},report")
    for place, (value, model, path) in enumerate(entries, start=1):
        print(f"{place},{model},{value!r},{path}")
    return 0


def cmd_export(args):
    started = time.time()
    out_dir = _resolve_out(args.out)
    os.makedirs(out_dir, exist_ok=True)
    train_seq = _read_piece(args.input)
    batch, pieces, problems = _load_batch(args.batch)
    for problem in problems:
        print(f"skipping piece: {problem}", file=sys.stderr)
    if not pieces:
        raise ValueError("no readable pieces in the batch")
    report = metrics_mod.evaluate_batch(train_seq, pieces)
    scores = metrics_mod.piece_scores(report)
    chosen = []  # (criterion, piece index); a piece appears at most once
    taken = set()
    for criterion in CRITERIA:
        ordered = sorted(scores, key=lambda r: (r[criterion], r["piece"]))
        picked = 0
        for row in ordered:
            if picked == args.top:
                break
            if row["piece"] in taken:
                continue
            taken.add(row["piece"])
            chosen.append((criterion, row["piece"]))
            picked += 1
    exports = []
    for criterion, idx in chosen:
        seq = pieces[idx]
        path = os.path.join(out_dir, f"top_{criterion}_{idx:04d}.csv")
        with open(path, "w") as fh:
            fh.write(emit_midi_csv(seq))
        exports.append({"criterion": criterion, "piece": idx, "path": path})
        print(f"{criterion}: piece {idx} -> {path}")
    config = {"input": args.input, "batch": args.batch, "top": args.top}
    _write_manifest(out_dir, "export", config, {"exports": exports}, started)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="sscompose",
        description="Train state-space models on symbolic piano pieces, sample "
                    "new pieces, score them and rank by RMSE.")
    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train", help="fit a model to a MIDI-CSV piece")
    train.add_argument("--input", required=True, help="training piece (MIDI-CSV)")
    train.add_argument("--model", required=True, choices=sorted(registry.REGISTRY),
                       help="model id")
    train.add_argument("--states", type=int, help="hidden state count override")
    train.add_argument("--order", type=int, help="Markov order override")
    train.add_argument("--layers", type=int, help="layer count override")
    train.add_argument("--dmax", type=int, help="maximum dwell length override")
    train.add_argument("--seed", type=int, default=0)
    train.add_argument("--restarts", type=int, default=1,
                       help="independent restarts, keeping the best likelihood")
    train.add_argument("--tol", type=float, default=1e-6)
    train.add_argument("--max-iter", type=int, default=500)
    train.add_argument("--out", help="output directory")
    train.set_defaults(func=cmd_train)

    gen = sub.add_parser("generate", help="sample a batch from a trained model")
    gen.add_argument("--model", required=True, help="model file from train")
    gen.add_argument("--n", type=int, default=1000, help="batch size")
    gen.add_argument("--seed", type=int, default=0, help="master seed")
    gen.add_argument("--length", type=int, help="piece length (default: training length)")
    gen.add_argument("--midi", action="store_true", help="also write MIDI-CSV per piece")
    gen.add_argument("--out", help="output directory")
    gen.set_defaults(func=cmd_generate)

    ev = sub.add_parser("evaluate", help="score a generated batch against its training piece")
    ev.add_argument("--input", required=True, help="training piece (MIDI-CSV)")
    ev.add_argument("--batch", required=True, help="batch directory from generate")
    ev.add_argument("--out", help="output directory")
    ev.set_defaults(func=cmd_evaluate)

    rank = sub.add_parser("rank", help="order evaluation reports by a criterion")
    rank.add_argument("--criterion", default="entropy-rmse",
                      help="one of entropy-rmse, musicality-avg, temporal-avg")
    rank.add_argument("--reports", nargs="+", required=True, help="report.json files")
    rank.set_defaults(func=cmd_rank)

    exp = sub.add_parser("export", help="export top pieces per criterion as MIDI-CSV")
    exp.add_argument("--input", required=True, help="training piece (MIDI-CSV)")
    exp.add_argument("--batch", required=True, help="batch directory from generate")
    exp.add_argument("--top", type=int, default=DEFAULT_TOP, help="pieces per criterion")
    exp.add_argument("--out", help="output directory")
    exp.set_defaults(func=cmd_export)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (MidiCsvError, ValueError, OSError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
