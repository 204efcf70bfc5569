"""Command-line surface: dataset generation, extraction, features,
enrollment, verification, evaluation, side-channel reports and plot data.

Every error exits nonzero with a single `error: <reason>` line on stderr.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import experiment as exp
from .auth import Template, TremorClassifier, train_classifier, verify_tremor
from .errors import VirtimuError
from .features import SCHEMA_V1, extract_features
from .sidechan import Thresholds, synthetic_suite
from .sigcore import MotionTrace, max_lag_corr, resample
from .simulate import VideoClip


def _load_config(args) -> exp.ExperimentConfig:
    if args.config:
        with open(args.config) as f:
            cfg = exp.parse_config(f.read())
    else:
        cfg = exp.default_config()
    if args.seed is not None:
        cfg.seed = args.seed
    return cfg


def cmd_simulate(args) -> int:
    cfg = _load_config(args)
    if args.print_config:
        sys.stdout.write(exp.format_config(cfg))
        return 0
    progress = (lambda msg: print(msg, file=sys.stderr)) if args.verbose else None
    exp.generate_dataset(cfg, args.out, force=args.force, progress=progress)
    print(f"dataset written to {args.out}")
    return 0


def cmd_extract(args) -> int:
    progress = (lambda msg: print(msg, file=sys.stderr)) if args.verbose else None
    if os.path.isfile(os.path.join(args.video_dir, "index.csv")):
        exp.extract_dataset(args.video_dir, args.method, progress=progress)
        print(f"traces written under {args.video_dir}/traces/{args.method}")
        return 0
    # single video directory
    video = VideoClip.load(args.video_dir)
    from .sidechan import virtual_sensor

    trace = virtual_sensor(args.method, video)
    out = args.out or os.path.join(args.video_dir, f"trace_{args.method}.csv")
    trace.save_csv(out)
    print(f"trace written to {out}")
    return 0


def cmd_features(args) -> int:
    rows = []
    for path in args.traces:
        trace = MotionTrace.load_csv(path)
        fv = extract_features(trace, SCHEMA_V1, source=args.method)
        vid = os.path.splitext(os.path.basename(path))[0]
        rows.append((vid, fv.values))
    header = "video_id," + ",".join(SCHEMA_V1.names())
    lines = [header] + [
        f"{vid}," + ",".join(repr(float(v)) for v in vals) for vid, vals in rows
    ]
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_enroll(args) -> int:
    set_dir = args.dataset
    traces = exp.load_traces(set_dir, args.method)
    with open(os.path.join(set_dir, os.pardir, "config.txt")) as f:
        cfg = exp.parse_config(f.read())
    specs = exp.enumerate_videos(cfg)
    train, _ = exp._split_train_test(cfg, specs)
    feats = {}
    for sp in train:
        v = extract_features(traces[sp.video_id], source=args.method).values
        feats.setdefault(sp.claimed, []).append(v)
    templates = train_classifier({s: np.vstack(v) for s, v in feats.items()},
                                 kernel=args.kernel, folds=cfg.folds)
    clf = next(iter(templates.values())).classifier
    clf.save(args.out)
    print(f"template written to {args.out} (cv accuracy {clf.cv_accuracy:.3f})")
    return 0


def cmd_verify(args) -> int:
    clf = TremorClassifier.load(args.template)
    if args.subject not in clf.subjects:
        raise VirtimuError(f"subject {args.subject!r} not enrolled (have {clf.subjects})")
    template = Template(subject_id=args.subject, classifier=clf, schema_id=clf.schema_id)
    if os.path.isdir(args.input):
        source = VideoClip.load(args.input)
    else:
        source = MotionTrace.load_csv(args.input)
    decision = verify_tremor(source, template, method=args.method)
    verdict = "accept" if decision.accept else "reject"
    flags = f" [{' '.join(decision.flags)}]" if decision.flags else ""
    print(f"{verdict} score={decision.score:.4f}{flags}")
    return 0 if decision.accept else 3


def cmd_evaluate(args) -> int:
    cfg = _load_config(args)
    dataset = args.dataset
    if dataset and os.path.isfile(os.path.join(dataset, "config.txt")):
        with open(os.path.join(dataset, "config.txt")) as f:
            cfg = exp.parse_config(f.read())
    progress = (lambda msg: print(msg, file=sys.stderr)) if args.verbose else None
    results = exp.evaluate(cfg, dataset_dir=dataset, progress=progress)
    csv_text = exp.results_csv(results)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "evaluation.csv"), "w") as f:
            f.write(csv_text)
        with open(os.path.join(args.out, "summary.txt"), "w") as f:
            f.write(exp.results_summary(results))
    sys.stdout.write(exp.results_summary(results))
    return 0


def cmd_sidechan(args) -> int:
    th = Thresholds(alpha=args.alpha, beta=args.beta, delta=args.delta)
    verdicts = synthetic_suite(th, seed=args.seed or 0)
    for name, verdict in verdicts.items():
        print(f"--- {name} ---")
        sys.stdout.write(verdict.report())
    return 0


def cmd_plot(args) -> int:
    """Aligned, amplitude-normalized trace columns ready for plotting."""
    traces = [MotionTrace.load_csv(p) for p in args.traces]
    names = [os.path.splitext(os.path.basename(p))[0] for p in args.traces]
    rate = min(t.sample_rate for t in traces)
    axis0 = args.axis
    sigs = []
    for t in traces:
        t = resample(t, rate)
        ax = axis0 if axis0 in t.axes else t.axes[0]
        sigs.append(t.axis(ax))
    n = min(len(s) for s in sigs)
    sigs = [s[:n] for s in sigs]
    ref = sigs[0]
    cols = []
    for s in sigs:
        max_lag = max(1, min(n // 2 - 1, int(0.2 * rate)))
        lag, _ = max_lag_corr(ref, s, max_lag)
        s = np.roll(s, -lag)
        peak = np.max(np.abs(s - s.mean()))
        cols.append((s - s.mean()) / peak if peak > 0 else s - s.mean())
    lines = ["time_s," + ",".join(names)]
    for i in range(n):
        lines.append(f"{i / rate!r}," + ",".join(repr(float(c[i])) for c in cols))
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="virtimu", description=__doc__)
    p.add_argument("--seed", type=int, default=None, help="override experiment seed")
    p.add_argument("--config", help="experiment config file")
    p.add_argument("--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="render the synthetic dataset")
    s.add_argument("--out", required=False, default="dataset")
    s.add_argument("--force", action="store_true")
    s.add_argument("--print-config", action="store_true", help="dump effective config and exit")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("extract", help="run a virtual sensor over videos")
    s.add_argument("video_dir", help="dataset set dir (with index.csv) or one video dir")
    s.add_argument("--method", choices=exp.METHODS, required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_extract)

    s = sub.add_parser("features", help="feature vectors from trace CSVs")
    s.add_argument("traces", nargs="+")
    s.add_argument("--method", choices=exp.METHODS, default="physical")
    s.add_argument("--out")
    s.set_defaults(func=cmd_features)

    s = sub.add_parser("enroll", help="train and save a tremor template")
    s.add_argument("dataset", help="stabilization set dir with extracted traces")
    s.add_argument("--method", choices=exp.METHODS, required=True)
    s.add_argument("--kernel", choices=("linear", "quadratic"), default="quadratic")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_enroll)

    s = sub.add_parser("verify", help="verify a video or trace against a template")
    s.add_argument("input", help="video directory or trace CSV")
    s.add_argument("--template", required=True)
    s.add_argument("--subject", required=True)
    s.add_argument("--method", choices=exp.METHODS, default="rse")
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("evaluate", help="full method x stabilization evaluation grid")
    s.add_argument("--dataset", help="dataset dir with extracted traces (else in-memory)")
    s.add_argument("--out", help="directory for evaluation.csv + summary.txt")
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("sidechan", help="synthetic side-channel classification suite")
    s.add_argument("--alpha", type=float, default=0.3)
    s.add_argument("--beta", type=float, default=0.3)
    s.add_argument("--delta", type=float, default=0.1)
    s.set_defaults(func=cmd_sidechan)

    s = sub.add_parser("plot", help="aligned normalized trace columns (CSV)")
    s.add_argument("traces", nargs="+")
    s.add_argument("--axis", default="tx")
    s.add_argument("--out")
    s.set_defaults(func=cmd_plot)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (VirtimuError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
