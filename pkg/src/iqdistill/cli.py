"""Command-line surface.

Subcommands: datagen, score, finetune-teacher, distill, evaluate, ablate.
Every report path writes delimited structured text plus rendered PNG
figures into the output directory. Exit codes: 0 success, 1 usage or
configuration error, 2 data/format error, 3 numeric abort.
"""

from __future__ import annotations

import argparse
import dataclasses
import statistics
import sys
from pathlib import Path

from . import figures, formats, reports
from .config import EngineConfig, load_config
from .data import Dataset, generate, split
from .errors import DataError, EngineError, NumericError, UndefinedCorrelationError, UsageError
from .metrics import correlation_report
from .nets import forward_batch, init_params
from .pipeline import (
    ArchConfig,
    MedianReport,
    TrainConfig,
    distill_student,
    extract_knowledge,
    finetune_teacher,
    knowledge_from_features,
    run_ablation,
    stage_seeds,
)
from .scoring import score_batch, synthetic_bank


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load(args) -> EngineConfig:
    cfg = load_config(getattr(args, "config", None))
    overrides = {}
    for name in ("epochs", "seed", "repeat_count"):
        value = getattr(args, name, None)
        if value is not None:
            overrides[name] = value
    if overrides:
        cfg = dataclasses.replace(cfg, train=dataclasses.replace(cfg.train, **overrides))
    return cfg


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="run config file (default: $IQDISTILL_CONFIG or built-in defaults)")
    p.add_argument("--epochs", type=int, help="override epoch count")
    p.add_argument("--seed", type=int, help="override seed")
    p.add_argument("--repeat-count", dest="repeat_count", type=int, help="override repeat count")


def cmd_datagen(args) -> None:
    ds = generate(n=args.n, obs_dim=args.obs_dim, seed=args.seed)
    out = _out_dir(args)
    formats.write_dataset(out, ds)
    print(f"wrote {len(ds)} samples (obs_dim={ds.obs_dim}, seed={ds.seed}) to {out}")


def cmd_score(args) -> None:
    bank = formats.read_bank(args.bank)
    embeddings = formats.read_embeddings(args.embeddings)
    records = formats.read_sidecar(Path(args.embeddings).with_suffix(".jsonl"))
    if len(records) != len(embeddings):
        raise DataError(
            f"{args.embeddings}: {len(embeddings)} embeddings but {len(records)} sidecar records"
        )
    scores = score_batch(embeddings, bank)
    out = _out_dir(args)
    meta = [("bank", args.bank), ("embeddings", args.embeddings)]
    mos = [r.mos for r in records]
    try:
        rep = correlation_report(scores, mos)
        meta += reports.correlation_meta("test", rep)
    except (UndefinedCorrelationError, DataError):
        rep = None
        meta.append(("correlation", "undefined"))
    text = reports.render_scores_report([r.id for r in records], scores, extra=meta)
    (out / "scores.txt").write_text(text)
    figures.save_scatter_figure(scores, mos, out / "scatter.png", rep)
    print(f"scored {len(scores)} embeddings; report in {out}")


def _prepare(args) -> tuple[EngineConfig, Dataset]:
    cfg = _load(args)
    ds = formats.read_dataset(args.data)
    return cfg, ds


def cmd_finetune_teacher(args) -> None:
    cfg, ds = _prepare(args)
    train, test = split(ds, train_fraction=0.8, seed=cfg.train.seed)
    seeds = stage_seeds(cfg.train.seed)
    if args.bank:
        bank = formats.read_bank(args.bank)
    else:
        bank = synthetic_bank(cfg.arch.embed_dim, temperature=cfg.arch.tau, seed=seeds.bank)
    teacher0 = init_params(
        cfg.arch.teacher_sizes(ds.obs_dim), seed=seeds.teacher, activation=cfg.arch.activation
    )
    teacher, report = finetune_teacher(cfg.train, bank, teacher0, train, test)
    out = _out_dir(args)
    formats.write_bank(out / "bank.iqeb", bank)
    formats.write_checkpoint(out / "teacher.iqpw", teacher)
    extra = [("data", str(args.data)), ("train_size", len(train)), ("test_size", len(test))]
    (out / "report.txt").write_text(reports.render_run_report(report, cfg.arch, extra=extra))
    figures.save_loss_figure(report, out / "loss.png")
    line = f"teacher fine-tuned for {cfg.train.epochs} epochs"
    if report.test is not None:
        line += f"; test PLCC {report.test.plcc:.4f}, SRCC {report.test.srcc:.4f}"
    print(line + f"; artifacts in {out}")


def cmd_distill(args) -> None:
    if not args.teacher and not args.features:
        raise UsageError("distill needs --teacher or --features")
    cfg, ds = _prepare(args)
    train, test = split(ds, train_fraction=0.8, seed=cfg.train.seed)
    bank = formats.read_bank(args.bank)
    if args.features:
        knowledge = knowledge_from_features(bank, formats.read_embeddings(args.features), train)
    else:
        teacher = formats.read_checkpoint(args.teacher)
        knowledge = extract_knowledge(bank, teacher, train)
    seeds = stage_seeds(cfg.train.seed)
    student0 = init_params(
        cfg.arch.student_sizes(ds.obs_dim), seed=seeds.student, activation=cfg.arch.activation
    )
    student, report = distill_student(cfg.train, knowledge, student0, train, test)
    out = _out_dir(args)
    formats.write_checkpoint(out / "student.iqpw", student)
    extra = [("data", str(args.data)), ("train_size", len(train)), ("test_size", len(test))]
    (out / "report.txt").write_text(reports.render_run_report(report, cfg.arch, extra=extra))
    figures.save_loss_figure(report, out / "loss.png")
    line = f"student distilled for {cfg.train.epochs} epochs"
    if report.test is not None:
        line += f"; test PLCC {report.test.plcc:.4f}, SRCC {report.test.srcc:.4f}"
    print(line + f"; artifacts in {out}")


def cmd_evaluate(args) -> None:
    ds = formats.read_dataset(args.data)
    if args.split != "all":
        train, test = split(ds, train_fraction=0.8, seed=args.seed)
        ds = train if args.split == "train" else test
    bank = formats.read_bank(args.bank)
    params = formats.read_checkpoint(args.student)
    emb, _ = forward_batch(params, ds.obs_matrix())
    scores = score_batch(list(emb), bank)
    rep = correlation_report(scores, ds.mos_array())
    out = _out_dir(args)
    extra = [
        ("data", str(args.data)),
        ("split", args.split),
        ("seed", args.seed),
        ("student", args.student),
        ("bank", args.bank),
    ]
    (out / "evaluation.txt").write_text(reports.render_correlation_report("evaluation", rep, extra))
    figures.save_scatter_figure(scores, ds.mos_array(), out / "scatter.png", rep)
    print(f"evaluated {len(ds)} samples: PLCC {rep.plcc:.4f}, SRCC {rep.srcc:.4f}; report in {out}")


def cmd_ablate(args) -> None:
    cfg, ds = _prepare(args)
    labels = ("teacher", "regression_head", "hard_only", "soft_only", "annealed_blend")
    runs: dict[str, list] = {label: [] for label in labels}
    for k in range(cfg.train.repeat_count):
        run_cfg = dataclasses.replace(cfg.train, seed=cfg.train.seed + k)
        rep = run_ablation(run_cfg, ds, cfg.arch)
        runs["teacher"].append(rep.teacher)
        for label, corr in rep.variants():
            runs[label].append(corr)
    medians = {
        label: MedianReport(
            plcc=statistics.median(r.plcc for r in rs),
            srcc=statistics.median(r.srcc for r in rs),
            runs=tuple(rs),
        )
        for label, rs in runs.items()
    }
    out = _out_dir(args)
    for label in labels[1:]:
        text = reports.render_variant_report(label, medians[label], cfg.train, cfg.arch)
        (out / f"{label}.txt").write_text(text)
    (out / "teacher.txt").write_text(
        reports.render_variant_report("teacher", medians["teacher"], cfg.train, cfg.arch)
    )
    summary = reports.render_ablation_summary(medians, cfg.train, cfg.arch, extra=[("data", str(args.data))])
    (out / "summary.txt").write_text(summary)
    figures.save_variant_figure(medians, out / "variants.png")
    lines = [f"  {label:16s} PLCC {m.plcc:.4f}  SRCC {m.srcc:.4f}" for label, m in medians.items()]
    print("\n".join([f"ablation over {cfg.train.repeat_count} seeds:"] + lines + [f"reports in {out}"]))


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="iqdistill", description="Desk-scale quality-score distillation engine.")
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True

    p = sub.add_parser("datagen", help="generate a synthetic benchmark dataset")
    p.add_argument("--n", type=int, required=True, help="sample count (>= 10)")
    p.add_argument("--obs-dim", dest="obs_dim", type=int, required=True, help="observation width (>= 4)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output dataset directory")
    p.set_defaults(func=cmd_datagen)

    p = sub.add_parser("score", help="score an embedding file through a prompt bank")
    p.add_argument("--bank", required=True, help="prompt bank (.iqeb plus .jsonl)")
    p.add_argument("--embeddings", required=True, help="embedding file with a .jsonl sidecar")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("finetune-teacher", help="fine-tune the teacher encoder on a dataset")
    p.add_argument("--data", required=True, help="dataset directory")
    p.add_argument("--bank", help="imported prompt bank (default: synthetic from seed)")
    p.add_argument("--out", required=True)
    _add_config_flags(p)
    p.set_defaults(func=cmd_finetune_teacher)

    p = sub.add_parser("distill", help="distill teacher knowledge into a student")
    p.add_argument("--data", required=True)
    p.add_argument("--bank", required=True)
    p.add_argument("--teacher", help="teacher checkpoint (.iqpw)")
    p.add_argument("--features", help="precomputed teacher image features (.iqeb), alternative to --teacher")
    p.add_argument("--out", required=True)
    _add_config_flags(p)
    p.set_defaults(func=cmd_distill)

    p = sub.add_parser("evaluate", help="score a checkpoint against a dataset's subjective scores")
    p.add_argument("--data", required=True)
    p.add_argument("--student", required=True, help="checkpoint to evaluate (.iqpw)")
    p.add_argument("--bank", required=True)
    p.add_argument("--split", choices=("all", "train", "test"), default="all")
    p.add_argument("--seed", type=int, default=0, help="split seed (for --split train/test)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("ablate", help="run the four-variant strategy comparison")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    _add_config_flags(p)
    p.set_defaults(func=cmd_ablate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        args.func(args)
    except NumericError as exc:
        print(f"numeric abort: {exc}", file=sys.stderr)
        return exc.exit_code
    except EngineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
