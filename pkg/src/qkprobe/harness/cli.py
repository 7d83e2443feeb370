"""Command-line entry point: ``qkprobe <subcommand> ...``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from qkprobe.errors import QKProbeError

log = logging.getLogger("qkprobe")


def _range(text: str) -> tuple[int, int]:
    lo, _, hi = text.partition("-")
    return int(lo), int(hi or lo)


def _heads(text: str) -> list[list[int]]:
    out = []
    for part in text.split(";"):
        if part.strip():
            l, h = part.split(",")
            out.append([int(l), int(h)])
    return out


def cmd_gen(args) -> int:
    from qkprobe.datagen import GenConfig, generate, write_split

    cfg = GenConfig(
        family=args.family,
        rule_mode=args.rule_mode or ("scheme" if args.family == "mle" else "mp_only"),
        hops=(args.min_hops, args.max_hops),
        distractors=_range(args.distractors),
        n_calibration=args.n_cal,
        n_evaluation=args.n_eval,
        seed=args.seed,
        schemes=tuple(args.schemes.split(",")) if args.schemes else (),
        name=args.name or "",
    )
    split = generate(cfg)
    data, man = write_split(split, args.out)
    print(f"wrote {len(split.calibration)} calibration + {len(split.evaluation)} evaluation samples to {data}")
    return 0


def cmd_plant(args) -> int:
    from qkprobe.harness.planted import build_planted_model
    from qkprobe.runtime.prompts import default_vocab
    from qkprobe.runtime.spec import ModelSpec

    vocab = default_vocab()
    spec = ModelSpec(
        n_layers=args.layers, n_heads=args.heads, head_dim=args.head_dim, vocab_size=len(vocab),
        n_kv_heads=args.kv_heads, norm=args.norm, ffn=args.ffn,
        positional="none" if args.no_rope else "rope",
    )
    model = build_planted_model(spec, (args.layer, args.head), args.seed, vocab,
                                output_prior=not args.random_readout)
    model.save(args.out)
    print(f"planted head ({args.layer}, {args.head}) in {args.out}")
    return 0


def cmd_capture(args) -> int:
    from qkprobe.datagen import read_split
    from qkprobe.harness.experiment import capture_split
    from qkprobe.runtime import load_model, write_capture

    model = load_model(args.model)
    split = read_split(args.data)
    caps = capture_split(model, split, marker=args.marker, template_id=args.template)
    write_capture(caps, args.out, model.spec)
    print(f"captured {len(caps)} samples to {args.out}")
    return 0


def _config_from_args(args):
    from qkprobe.harness.experiment import ExperimentConfig

    if args.config:
        cfg = ExperimentConfig.load(args.config)
    else:
        if not args.data:
            raise QKProbeError("give --config or at least one --data path")
        setups = [{"name": Path(p).stem, "path": p} for p in args.data]
        cfg = ExperimentConfig(setups=setups, model_path=args.model, capture_dir=args.captures)
    if args.out:
        cfg.output_dir = args.out
    if args.variant:
        cfg.variant = {"pre": "pre_positional", "post": "post_positional"}[args.variant]
    if args.heads_list:
        cfg.heads = _heads(args.heads_list)
    if args.marker:
        cfg.marker = True
    return cfg


def cmd_run(args) -> int:
    from qkprobe.harness.experiment import run_experiment
    from qkprobe.harness.report import emit_report, to_markdown

    cfg = _config_from_args(args)
    report = run_experiment(cfg)
    if cfg.output_dir:
        emit_report(report, args.formats.split(","), cfg.output_dir)
    print(to_markdown(report))
    return 0


def _table_from(args):
    from qkprobe.datagen import read_split
    from qkprobe.harness.experiment import ingest_external_capture
    from qkprobe.probe import score_table

    split = read_split(args.data)
    caps, spec = ingest_external_capture(args.captures, split)
    gold = {s.id: s.gold for s in split.samples}
    variant = {"pre": "pre_positional", "post": "post_positional"}[args.variant]
    table = score_table(caps, gold, variant)
    return split, table


def cmd_calibrate(args) -> int:
    from qkprobe.calibration import calibrate

    split, table = _table_from(args)
    report = calibrate(table.subset([s.id for s in split.calibration]), {"name": Path(args.data).stem}, args.top_k)
    if args.out:
        report.export(args.out)
    print(json.dumps(report.summary(), sort_keys=True, indent=1))
    return 0


def cmd_eval(args) -> int:
    from qkprobe.calibration import CalibrationReport
    from qkprobe.harness.experiment import evaluate_baseline, evaluate_head
    from qkprobe.probe import HeadId, Orientation

    split, table = _table_from(args)
    ev = table.subset([s.id for s in split.evaluation])
    if args.heads_list:
        heads = [HeadId(*h) for h in _heads(args.heads_list)]
    elif args.calibration:
        heads = [CalibrationReport.from_json(Path(args.calibration).read_text()).best_head]
    else:
        raise QKProbeError("give --heads or --calibration")
    orient = Orientation.REVERSED if args.reversed else Orientation.DIRECT
    rows = {f"QK ({h.layer}, {h.head})": evaluate_head(ev, h, orient).to_dict() for h in heads}
    rows["Baseline"] = evaluate_baseline(ev).to_dict()
    print(json.dumps(rows, sort_keys=True, indent=1))
    return 0


def cmd_report(args) -> int:
    from qkprobe.harness.experiment import EvalReport
    from qkprobe.harness.report import emit_report

    report = EvalReport.load(args.report)
    for p in emit_report(report, args.formats.split(","), args.out):
        print(p)
    return 0


def cmd_ingest(args) -> int:
    from qkprobe.harness.experiment import ExperimentConfig, run_experiment
    from qkprobe.harness.report import emit_report, to_markdown

    cfg = ExperimentConfig(
        setups=[{"name": Path(args.data).stem, "path": args.data, "capture": args.captures}],
        variant=args.variant, output_dir=args.out, save_captures=False,
    )
    report = run_experiment(cfg)
    if args.out:
        emit_report(report, args.formats.split(","), args.out)
    print(to_markdown(report))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qkprobe", description="QK-score probing of attention heads on logic tasks")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a dataset split")
    g.add_argument("--family", choices=["pronto", "pararule", "mle"], required=True)
    g.add_argument("--rule-mode", choices=["mp_only", "composed", "scheme"])
    g.add_argument("--min-hops", type=int, default=1)
    g.add_argument("--max-hops", type=int, default=None)
    g.add_argument("--distractors", default="0", help="count or range LO-HI")
    g.add_argument("--n-cal", type=int, default=600)
    g.add_argument("--n-eval", type=int, default=1000)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--schemes", help="comma-separated rule chains such as MP_MP,MT_DS (mle)")
    g.add_argument("--name")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen)

    pl = sub.add_parser("plant", help="build the planted-head verification model")
    pl.add_argument("--layers", type=int, default=2)
    pl.add_argument("--heads", type=int, default=4)
    pl.add_argument("--head-dim", type=int, default=8)
    pl.add_argument("--kv-heads", type=int, default=None)
    pl.add_argument("--norm", choices=["layernorm", "rmsnorm"], default="layernorm")
    pl.add_argument("--ffn", choices=["gelu", "gated"], default="gelu")
    pl.add_argument("--no-rope", action="store_true")
    pl.add_argument("--layer", type=int, required=True)
    pl.add_argument("--head", type=int, required=True)
    pl.add_argument("--seed", type=int, default=0)
    pl.add_argument("--random-readout", action="store_true", help="keep random output rows for the option words")
    pl.add_argument("--out", required=True)
    pl.set_defaults(func=cmd_plant)

    c = sub.add_parser("capture", help="run a model over a dataset and write a capture file")
    c.add_argument("--model", required=True)
    c.add_argument("--data", required=True)
    c.add_argument("--marker", action="store_true", help="gold marker at the statement end (planted models)")
    c.add_argument("--template")
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_capture)

    r = sub.add_parser("run", help="run an experiment")
    r.add_argument("--config")
    r.add_argument("--model")
    r.add_argument("--captures", help="directory of <setup>.qkcap files")
    r.add_argument("--data", action="append")
    r.add_argument("--variant", choices=["pre", "post"])
    r.add_argument("--heads", dest="heads_list", help="explicit heads 'l,h;l,h'")
    r.add_argument("--marker", action="store_true")
    r.add_argument("--formats", default="csv,markdown,svg-heatmap")
    r.add_argument("--out")
    r.set_defaults(func=cmd_run)

    for name, func, help_ in (("calibrate", cmd_calibrate, "rank heads on the calibration split"),
                              ("eval", cmd_eval, "evaluate heads on the evaluation split")):
        e = sub.add_parser(name, help=help_)
        e.add_argument("--captures", required=True)
        e.add_argument("--data", required=True)
        e.add_argument("--variant", choices=["pre", "post"], default="pre")
        if name == "calibrate":
            e.add_argument("--top-k", type=int, default=10)
            e.add_argument("--out", help="output prefix for .csv/.json")
        else:
            e.add_argument("--heads", dest="heads_list")
            e.add_argument("--calibration", help="calibration .json whose best head to use")
            e.add_argument("--reversed", action="store_true")
        e.set_defaults(func=func)

    rp = sub.add_parser("report", help="render a report.json")
    rp.add_argument("--report", required=True)
    rp.add_argument("--formats", default="csv,markdown,svg-heatmap")
    rp.add_argument("--out", required=True)
    rp.set_defaults(func=cmd_report)

    i = sub.add_parser("ingest", help="score an externally produced capture file")
    i.add_argument("--captures", required=True)
    i.add_argument("--data", required=True)
    i.add_argument("--variant", choices=["pre", "post"], default="pre")
    i.add_argument("--formats", default="csv,markdown,svg-heatmap")
    i.add_argument("--out")
    i.set_defaults(func=cmd_ingest)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if getattr(args, "max_hops", 0) is None:
        args.max_hops = args.min_hops
    try:
        return args.func(args)
    except (QKProbeError, ValueError, KeyError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
