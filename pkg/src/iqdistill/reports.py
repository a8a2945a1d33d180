"""Structured-text reports.

A report is a block of `key = value` lines followed by named tables:

    kind = distill
    epochs = 100
    ...

    [epochs]
    epoch<TAB>soft<TAB>hard<TAB>lambda<TAB>lr
    0<TAB>0.41...<TAB>nan<TAB>1.0<TAB>0.0001

Floats are written with repr(), so parsing a cell with float() recovers
the exact binary value; identical runs therefore produce byte-identical
reports. Lines starting with '#' and blank lines are ignored by the
parser.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import FormatError
from .metrics import CorrelationReport
from .pipeline import ArchConfig, MedianReport, RunReport, TrainConfig


def format_value(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (tuple, list)):
        return ",".join(format_value(x) for x in v)
    return str(v)


def build_report(meta, tables=()) -> str:
    """meta: iterable of (key, value); tables: iterable of
    (name, columns, rows) with rows as value tuples."""
    lines = [f"{k} = {format_value(v)}" for k, v in meta]
    for name, columns, rows in tables:
        lines.append("")
        lines.append(f"[{name}]")
        lines.append("\t".join(columns))
        for row in rows:
            lines.append("\t".join(format_value(v) for v in row))
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class ReportDoc:
    meta: dict[str, str]
    tables: dict[str, tuple[tuple[str, ...], list[tuple[str, ...]]]]

    def table_floats(self, name: str) -> list[dict[str, float]]:
        columns, rows = self.tables[name]
        return [{c: float(v) for c, v in zip(columns, row)} for row in rows]


def parse_report(text: str) -> ReportDoc:
    meta: dict[str, str] = {}
    tables: dict[str, tuple[tuple[str, ...], list[tuple[str, ...]]]] = {}
    current: str | None = None
    columns: tuple[str, ...] | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip("\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1]
            columns = None
            tables[current] = ((), [])
            continue
        if current is None:
            if "=" not in line:
                raise FormatError(f"line {lineno}: expected 'key = value', got {line!r}")
            key, _, value = line.partition("=")
            meta[key.strip()] = value.strip()
        elif columns is None:
            columns = tuple(line.split("\t"))
            tables[current] = (columns, [])
        else:
            cells = tuple(line.split("\t"))
            if len(cells) != len(columns):
                raise FormatError(f"line {lineno}: {len(cells)} cells under {len(columns)} columns")
            tables[current][1].append(cells)
    return ReportDoc(meta=meta, tables=tables)


def _lr_overrides(cfg: TrainConfig) -> str:
    defaults = TrainConfig()
    flagged = [
        name
        for name, value, default in (
            ("teacher", cfg.lr0_teacher, defaults.lr0_teacher),
            ("student", cfg.lr0_student, defaults.lr0_student),
        )
        if value != default
    ]
    return ",".join(flagged) if flagged else "none"


def config_meta(cfg: TrainConfig, arch: ArchConfig | None = None) -> list[tuple[str, object]]:
    meta = [
        ("epochs", cfg.epochs),
        ("batch_size", cfg.batch_size),
        ("lr0_teacher", cfg.lr0_teacher),
        ("lr0_student", cfg.lr0_student),
        ("lr0_overridden", _lr_overrides(cfg)),
        ("schedule", cfg.schedule),
        ("lambda_fixed", cfg.lambda_fixed),
        ("granularity", cfg.granularity),
        ("seed", cfg.seed),
        ("repeat_count", cfg.repeat_count),
    ]
    if arch is not None:
        meta += [
            ("arch_embed_dim", arch.embed_dim),
            ("arch_teacher_hidden", arch.teacher_hidden),
            ("arch_student_hidden", arch.student_hidden),
            ("arch_activation", arch.activation),
            ("arch_tau", arch.tau),
        ]
    return meta


def correlation_meta(prefix: str, rep: CorrelationReport | None) -> list[tuple[str, object]]:
    if rep is None:
        return []
    return [
        (f"{prefix}_plcc", rep.plcc),
        (f"{prefix}_srcc", rep.srcc),
        (f"{prefix}_n", rep.n),
    ]


def render_run_report(report: RunReport, arch: ArchConfig | None = None, extra=()) -> str:
    meta = [("kind", report.kind)]
    meta += list(extra)
    meta += config_meta(report.cfg, arch)
    meta += [
        ("hard_evals", report.hard_evals),
        ("soft_evals", report.soft_evals),
        ("knowledge_fingerprint", report.knowledge_fingerprint),
    ]
    meta += correlation_meta("test", report.test)
    rows = [(r.epoch, r.soft, r.hard, r.lam, r.lr) for r in report.rows]
    return build_report(meta, [("epochs", ("epoch", "soft", "hard", "lambda", "lr"), rows)])


def render_correlation_report(kind: str, rep: CorrelationReport, extra=()) -> str:
    return build_report([("kind", kind), *extra, *correlation_meta("test", rep)])


def render_scores_report(ids, scores, extra=()) -> str:
    rows = list(zip(ids, scores))
    return build_report(
        [("kind", "scores"), ("count", len(rows)), *extra],
        [("scores", ("id", "score"), rows)],
    )


def render_variant_report(label: str, median: MedianReport, cfg: TrainConfig, arch: ArchConfig) -> str:
    meta = [
        ("kind", "ablation_variant"),
        ("variant", label),
        *config_meta(cfg, arch),
        ("median_plcc", median.plcc),
        ("median_srcc", median.srcc),
    ]
    rows = [(cfg.seed + k, r.plcc, r.srcc, r.n) for k, r in enumerate(median.runs)]
    return build_report(meta, [("runs", ("seed", "plcc", "srcc", "n"), rows)])


def render_ablation_summary(medians: dict[str, MedianReport], cfg: TrainConfig, arch: ArchConfig, extra=()) -> str:
    meta = [("kind", "ablation_summary"), *extra, *config_meta(cfg, arch)]
    rows = [(label, m.plcc, m.srcc) for label, m in medians.items()]
    return build_report(meta, [("variants", ("variant", "plcc", "srcc"), rows)])
