"""Strict entity-level evaluation.

A predicted mention counts as correct only when document id, start
offset, end offset and label all match a gold mention exactly. Scores
are micro-averaged percentages with the 0-when-undefined convention, so
empty prediction sets still produce defined output.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal

from .errors import DuplicateMention


@dataclass(frozen=True, order=True)
class EntityMention:
    doc_id: str
    start: int
    end: int
    label: str

    def __post_init__(self):
        if self.start >= self.end:
            raise ValueError(f"mention span must be non-empty: ({self.start}, {self.end})")


@dataclass
class LabelScore:
    tp: int
    fp: int
    fn: int
    precision: float
    recall: float
    f1: float


@dataclass
class EvalReport:
    tp: int
    fp: int
    fn: int
    precision: float
    recall: float
    f1: float
    per_label: dict[str, LabelScore] = field(default_factory=dict)


def prf(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    """Percentage precision/recall/F1 with zero-denominator convention."""
    p = 100.0 * tp / (tp + fp) if tp + fp else 0.0
    r = 100.0 * tp / (tp + fn) if tp + fn else 0.0
    f = 2.0 * p * r / (p + r) if p + r else 0.0
    return p, r, f


def _as_set(mentions, which: str) -> set[EntityMention]:
    out = set()
    for m in mentions:
        if m in out:
            raise DuplicateMention(f"duplicate {which} mention: {m}")
        out.add(m)
    return out


def evaluate(gold, pred) -> EvalReport:
    """Score predicted mentions against gold under exact-tuple matching."""
    gold = _as_set(gold, "gold")
    pred = _as_set(pred, "predicted")
    per_label = {}
    for label in sorted({m.label for m in gold} | {m.label for m in pred}):
        g = {m for m in gold if m.label == label}
        p = {m for m in pred if m.label == label}
        tp, fp, fn = len(g & p), len(p - g), len(g - p)
        per_label[label] = LabelScore(tp, fp, fn, *prf(tp, fp, fn))
    tp = len(gold & pred)
    fp = len(pred - gold)
    fn = len(gold - pred)
    return EvalReport(tp, fp, fn, *prf(tp, fp, fn), per_label=per_label)


def evaluate_relaxed(gold, pred) -> EvalReport:
    """Overlap-based matching (same label, any span overlap within a
    document). Exposed for error analysis only; never the primary metric."""
    gold = _as_set(gold, "gold")
    pred = _as_set(pred, "predicted")

    def overlaps(a: EntityMention, b: EntityMention) -> bool:
        return (a.doc_id == b.doc_id and a.label == b.label
                and a.start < b.end and b.start < a.end)

    matched_gold: set[EntityMention] = set()
    tp = 0
    for p in sorted(pred):
        hit = next((g for g in sorted(gold - matched_gold) if overlaps(p, g)), None)
        if hit is not None:
            matched_gold.add(hit)
            tp += 1
    fp = len(pred) - tp
    fn = len(gold) - tp
    return EvalReport(tp, fp, fn, *prf(tp, fp, fn))


def fmt_pct(x: float) -> str:
    """Two decimals, half-up, as the official-style tables print them."""
    return str(Decimal(repr(x)).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


def format_prf(report: EvalReport) -> str:
    """One-line "F1 / Precision / Recall" rendering."""
    return f"{fmt_pct(report.f1)} / {fmt_pct(report.precision)} / {fmt_pct(report.recall)}"


def report_table(named_reports: list[tuple[str, EvalReport]]) -> str:
    """Aligned comparison table, one row per named report."""
    if not named_reports:
        raise ValueError("need at least one report")
    rows = [("model", "F1", "Precision", "Recall")]
    for name, rep in named_reports:
        rows.append((name, fmt_pct(rep.f1), fmt_pct(rep.precision), fmt_pct(rep.recall)))
    widths = [max(len(r[i]) for r in rows) for i in range(4)]
    lines = []
    for r in rows:
        cells = [r[0].ljust(widths[0])] + [r[i].rjust(widths[i]) for i in range(1, 4)]
        lines.append("  ".join(cells).rstrip())
    return "\n".join(lines) + "\n"


def summary_lines(report: EvalReport) -> str:
    """Machine-readable key=value rendering of a report."""
    lines = [
        f"tp={report.tp}",
        f"fp={report.fp}",
        f"fn={report.fn}",
        f"precision={fmt_pct(report.precision)}",
        f"recall={fmt_pct(report.recall)}",
        f"f1={fmt_pct(report.f1)}",
    ]
    for label, s in sorted(report.per_label.items()):
        lines.append(f"label.{label}.tp={s.tp}")
        lines.append(f"label.{label}.fp={s.fp}")
        lines.append(f"label.{label}.fn={s.fn}")
        lines.append(f"label.{label}.precision={fmt_pct(s.precision)}")
        lines.append(f"label.{label}.recall={fmt_pct(s.recall)}")
        lines.append(f"label.{label}.f1={fmt_pct(s.f1)}")
    return "\n".join(lines) + "\n"
