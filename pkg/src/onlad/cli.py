"""Command-line front end.

Subcommands::

    onlad offline  --dataset letter.csv --hidden 8 --activation sigmoid --trials 5
    onlad online   --dataset mnist.csv --hidden 64 --ff 0.99
    onlad stream   --init init.csv --stream rows.csv --theta 0.05
    onlad cost     --n 512 --hidden 64
    onlad trace    --model model.npz --stream rows.csv --out trace.hex --expected out.hex
    onlad replay   --trace trace.hex --n 16 --hidden 4 --out out.hex
    onlad bench    --n 512 --hidden 64

Exit status: 0 on success, 1 on a runtime failure, 2 on invalid arguments.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import bench
from .core import CoreState, cost_report, read_trace, run, write_trace
from .core.machine import PREDICT_PACKET, TRAIN_PACKET, ff_packet, input_packets, model_packets
from .data import load_csv, load_features_csv, minmax_normalize, split
from .detector import OnladDetector
from .errors import OnladError
from .oselm import DEFAULT_EPSILON, OselmModel

log = logging.getLogger("onlad")

# Reference hyperparameters per dataset and testbed:
# (activation, hidden nodes, forgetting factor).
PRESETS = {
    "offline": {
        "fashion-mnist": ("identity", 64, 1.0),
        "mnist": ("identity", 64, 1.0),
        "har": ("identity", 128, 1.0),
        "drive": ("sigmoid", 16, 1.0),
        "letter": ("sigmoid", 8, 1.0),
    },
    "online": {
        "fashion-mnist": ("sigmoid", 64, 0.99),
        "mnist": ("sigmoid", 64, 0.99),
        "har": ("identity", 16, 0.97),
        "drive": ("sigmoid", 16, 0.99),
        "letter": ("identity", 8, 0.95),
    },
}


class UsageError(Exception):
    pass


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _unit_interval(text: str) -> float:
    v = float(text)
    if not 0.0 < v <= 1.0:
        raise argparse.ArgumentTypeError(f"must lie in (0, 1], got {v}")
    return v


def _positive_float(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {v}")
    return v


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("ONLAD_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"ONLAD_SEED is not an integer: {env!r}") from None


def _add_detector_args(p: argparse.ArgumentParser, with_ff: bool = True) -> None:
    p.add_argument("--hidden", type=_positive_int, help="hidden nodes")
    p.add_argument("--activation", choices=["identity", "sigmoid"])
    if with_ff:
        p.add_argument("--ff", type=_unit_interval, help="forgetting factor in (0, 1]")
    p.add_argument("--epsilon", type=_positive_float, default=DEFAULT_EPSILON,
                   help="stability guard threshold (default %(default)g)")
    p.add_argument("--init-range", type=float, nargs=2, metavar=("LOW", "HIGH"), default=(-1.0, 1.0),
                   help="uniform range for random input weights and biases")
    p.add_argument("--seed", type=int, help="base seed (falls back to $ONLAD_SEED, then 0)")


def _add_testbed_args(p: argparse.ArgumentParser, name: str) -> None:
    p.add_argument("--dataset", required=True, help="CSV file with one label column")
    p.add_argument("--label-col", default="-1", help="label column name or index (default: last)")
    p.add_argument("--preset", choices=sorted(PRESETS[name]),
                   help="take activation/hidden/ff from the reference settings for this dataset")
    p.add_argument("--model", choices=["onlad", "fpelm"], default="onlad")
    p.add_argument("--lam", type=float, default=0.02, help="FP-ELM L2 regularization")
    p.add_argument("--trials", type=_positive_int, default=5)
    p.add_argument("--jobs", type=_positive_int, default=1, help="parallel trials")
    p.add_argument("--classes", type=_positive_int, help="keep only the first N classes")
    p.add_argument("--subsample", type=_unit_interval, help="stratified fraction of the dataset to keep")
    p.add_argument("--out", help="results file (JSON lines)")
    _add_detector_args(p)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="onlad", description="OS-ELM sequential anomaly detection toolkit")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    _add_testbed_args(sub.add_parser("offline", help="offline testbed (per-class AUC)"), "offline")
    _add_testbed_args(sub.add_parser("online", help="online concept-drift testbed"), "online")

    p = sub.add_parser("stream", help="score-then-train over a CSV stream")
    p.add_argument("--init", help="CSV of initial samples (k0 rows, features only)")
    p.add_argument("--stream", required=True, help="CSV of streamed samples (features only)")
    p.add_argument("--theta", type=float, default=math.inf, help="anomaly threshold")
    p.add_argument("--theta-percentile", type=float,
                   help="set theta to this percentile of the init-chunk scores")
    p.add_argument("--model-in", help="start from a saved model instead of --init")
    p.add_argument("--model-out", help="save the final model here")
    p.add_argument("--out", help="per-row CSV output (default: stdout)")
    _add_detector_args(p)

    p = sub.add_parser("cost", help="storage and iteration counts")
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--hidden", type=_positive_int, required=True)
    p.add_argument("--m", type=_positive_int, help="output nodes (default: n)")
    p.add_argument("--k", type=_positive_int, default=1, help="batch size for the chunk-update count")
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("trace", help="record a packet trace and its expected outputs")
    p.add_argument("--model", required=True, help="saved Identity-activation autoencoder (.npz)")
    p.add_argument("--stream", required=True, help="CSV of samples to predict and train on")
    p.add_argument("--ff", type=_unit_interval, default=1.0)
    p.add_argument("--out", required=True, help="input trace (16 hex digits per line)")
    p.add_argument("--expected", help="output trace produced by the emulator")

    p = sub.add_parser("replay", help="feed a packet trace through the core emulator")
    p.add_argument("--trace", required=True)
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--hidden", type=_positive_int, required=True)
    p.add_argument("--out", help="output trace (default: stdout)")
    p.add_argument("--expect", help="compare outputs against this trace; exit 1 on mismatch")

    p = sub.add_parser("bench", help="train/predict step latency")
    p.add_argument("--n", type=_positive_int, nargs="+", default=[512])
    p.add_argument("--hidden", type=_positive_int, nargs="+", default=[64])
    p.add_argument("--activation", choices=["identity", "sigmoid"], default="identity")
    p.add_argument("--ff", type=_unit_interval, default=0.99)
    p.add_argument("--trials", type=_positive_int, default=2000)
    p.add_argument("--warmup", type=int, default=100)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="results file (JSON lines)")
    return ap


# -- testbeds ----------------------------------------------------------------

def _load_dataset(args):
    if not Path(args.dataset).exists():
        raise UsageError(f"dataset not found: {args.dataset}")
    label = int(args.label_col) if args.label_col.lstrip("-").isdigit() else args.label_col
    ds, _ = minmax_normalize(load_csv(args.dataset, label))
    if args.classes is not None:
        if args.classes > ds.class_count:
            raise UsageError(f"--classes {args.classes} exceeds {ds.class_count} classes")
        ds = ds.select_classes(range(args.classes))
    if args.subsample is not None and args.subsample < 1.0:
        ds = split(ds, (args.subsample,), _seed(args), stratified=True)[0]
    return ds


def _detector_spec(args, testbed: str) -> bench.DetectorSpec:
    activation, hidden, ff = "sigmoid", 8, (1.0 if testbed == "offline" else 0.99)
    if args.preset:
        activation, hidden, ff = PRESETS[testbed][args.preset]
    activation = args.activation or activation
    hidden = args.hidden or hidden
    ff = args.ff if args.ff is not None else ff
    return bench.DetectorSpec(kind=args.model, activation=activation, n_hidden=hidden, ff=ff,
                              epsilon=args.epsilon, lam=args.lam, init_range=tuple(args.init_range))


def cmd_testbed(args) -> int:
    testbed = args.command
    spec = _detector_spec(args, testbed)
    seed = _seed(args)
    try:
        if testbed == "offline":
            cfg = bench.OfflineConfig(detector=spec, trials=args.trials, seed=seed)
        else:
            cfg = bench.OnlineConfig(detector=spec, trials=args.trials, seed=seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    ds = _load_dataset(args)
    results = bench.run_trials(ds, cfg, jobs=args.jobs)
    if args.out:
        bench.write_results(args.out, results)
    print(bench.summarize(results))
    return 0


cmd_offline = cmd_online = cmd_testbed


# -- streaming ---------------------------------------------------------------

def cmd_stream(args) -> int:
    stream = load_features_csv(args.stream)
    if args.model_in:
        model = OselmModel.load(args.model_in)
        if model.m != model.n:
            raise UsageError("--model-in must be an autoencoder (m == n)")
        det = OnladDetector(model, epsilon=args.epsilon, default_ff=args.ff or 1.0)
    else:
        if not args.init:
            raise UsageError("either --init or --model-in is required")
        x0 = load_features_csv(args.init)
        hidden = args.hidden or 8
        if x0.shape[0] < hidden:
            raise UsageError(f"init has {x0.shape[0]} rows, fewer than --hidden {hidden}")
        det = OnladDetector.create(x0.shape[1], hidden, args.activation or "sigmoid", seed=_seed(args),
                                   init_range=tuple(args.init_range), epsilon=args.epsilon,
                                   default_ff=args.ff or 1.0)
        det.init(x0)
        if args.theta_percentile is not None:
            det.calibrate_theta(x0, args.theta_percentile)
    if args.theta_percentile is None:
        det.theta = args.theta
    if stream.shape[1] != det.n:
        raise UsageError(f"stream has {stream.shape[1]} columns, model expects {det.n}")

    out = open(args.out, "w", newline="", encoding="utf-8") if args.out else sys.stdout
    try:
        w = csv.writer(out)
        w.writerow(["index", "score", "is_anomaly", "trained"])
        for i, row in enumerate(stream):
            r = det.train_step(row)
            w.writerow([i, "" if r.score is None else repr(r.score), int(r.is_anomaly), r.trained.value])
    finally:
        if out is not sys.stdout:
            out.close()
    if args.model_out:
        det.model.save(args.model_out)
    return 0


# -- core emulator -----------------------------------------------------------

def cmd_cost(args) -> int:
    report = cost_report(args.n, args.hidden, args.m, args.k)
    d = report.as_dict()
    if args.json:
        print(json.dumps(d, sort_keys=True))
    else:
        width = max(map(len, d))
        for key, value in d.items():
            print(f"{key:<{width}}  {value:,}")
    return 0


def record_trace(model: OselmModel, rows, ff: float = 1.0) -> list[int]:
    """Input words that load ``model``, then predict-then-train on every row."""
    words = model_packets(model) + [ff_packet(ff)]
    for row in rows:
        words += input_packets(row)
        words += [PREDICT_PACKET, TRAIN_PACKET]
    return words


def cmd_trace(args) -> int:
    model = OselmModel.load(args.model)
    rows = load_features_csv(args.stream)
    words = record_trace(model, rows, args.ff)
    write_trace(args.out, words, 16)
    if args.expected:
        write_trace(args.expected, run(CoreState(model.n, model.n_hidden), words), 8)
    return 0


def cmd_replay(args) -> int:
    words = read_trace(args.trace, 16)
    state = CoreState(args.n, args.hidden)
    outputs = run(state, words)
    if args.out:
        write_trace(args.out, outputs, 8)
    else:
        sys.stdout.writelines(f"{w:08X}\n" for w in outputs)
    if state.rejected:
        print(f"warning: {state.rejected} packet(s) rejected", file=sys.stderr)
    if args.expect:
        expected = read_trace(args.expect, 8)
        if expected != outputs:
            mismatch = next((i for i, (a, b) in enumerate(zip(expected, outputs)) if a != b),
                            min(len(expected), len(outputs)))
            print(f"output mismatch at word {mismatch}", file=sys.stderr)
            return 1
    return 0


# -- latency -----------------------------------------------------------------

def measure_latency(n: int, hidden: int, activation: str = "identity", ff: float = 0.99,
                    trials: int = 2000, warmup: int = 100, seed: int = 0) -> dict:
    """Mean and p99 wall-clock of single-sample train and predict steps.

    Data generation and initialization are excluded; ``warmup`` steps run
    before timing starts.
    """
    rng = np.random.default_rng(seed)
    det = OnladDetector.create(n, hidden, activation, seed=rng, default_ff=ff)
    det.init(rng.uniform(0, 1, (4 * hidden, n)))
    xs = rng.uniform(0, 1, (warmup + trials, 1, n))
    for x in xs[:warmup]:
        det.score(x)
        det.train_step(x)
    train, predict = [], []
    clock = time.perf_counter
    for x in xs[warmup:]:
        t0 = clock()
        det.score(x)
        t1 = clock()
        det.train_step(x)
        t2 = clock()
        predict.append(t1 - t0)
        train.append(t2 - t1)
    train_a, predict_a = np.array(train), np.array(predict)
    return {
        "n": n, "hidden": hidden, "activation": activation, "trials": trials,
        "train_mean_s": float(train_a.mean()), "train_p99_s": float(np.percentile(train_a, 99)),
        "predict_mean_s": float(predict_a.mean()), "predict_p99_s": float(np.percentile(predict_a, 99)),
    }


def cmd_bench(args) -> int:
    seed = _seed(args)
    rows = [measure_latency(n, h, args.activation, args.ff, args.trials, args.warmup, seed)
            for n in args.n for h in args.hidden]
    print(f"{'n':>6} {'hidden':>6} {'train mean':>12} {'train p99':>12} {'predict mean':>13} {'predict p99':>12}")
    for r in rows:
        print(f"{r['n']:>6} {r['hidden']:>6} {r['train_mean_s'] * 1e6:>10.1f}us {r['train_p99_s'] * 1e6:>10.1f}us "
              f"{r['predict_mean_s'] * 1e6:>11.1f}us {r['predict_p99_s'] * 1e6:>10.1f}us")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            for r in rows:
                fh.write(json.dumps(r, sort_keys=True) + "\n")
    return 0


COMMANDS = {
    "offline": cmd_offline,
    "online": cmd_online,
    "stream": cmd_stream,
    "cost": cmd_cost,
    "trace": cmd_trace,
    "replay": cmd_replay,
    "bench": cmd_bench,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"onlad {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (OnladError, OSError, ValueError) as exc:
        print(f"onlad {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
