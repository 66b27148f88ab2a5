"""Grading of submitted answers and session score reports.

Respond rate is responded non-definition queries over total non-definition
queries; accuracy is correct over responded. Definition queries are tallied
separately as detections and join only the predicate-count breakdown.
Skipped queries stay out of every denominator.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Optional

from shapely.geometry import Polygon as ShapelyPolygon

from .ontology import Ontology
from .query_model import (
    Answer,
    BoolAnswer,
    IntervalAnswer,
    LabelAnswer,
    PolygonAnswer,
    UnableAnswer,
)

VERDICT_CORRECT = "correct"
VERDICT_INCORRECT = "incorrect"
VERDICT_NOT_GRADED = "not_graded"

PRED_COUNT_BINS = ("1", "2", "3", "4", "5+")


@dataclass(frozen=True)
class GradingConfig:
    when_iou: float = 0.5
    where_iou: float = 0.5
    lenient_labels: bool = False


DEFAULT_GRADING = GradingConfig()


def interval_iou(a: tuple[float, float], b: tuple[float, float]) -> float:
    inter = min(a[1], b[1]) - max(a[0], b[0])
    if inter < 0:
        return 0.0
    union = max(a[1], b[1]) - min(a[0], b[0])
    if union <= 0:
        # Both intervals are the same instant.
        return 1.0 if a == b else 0.0
    return inter / union


def polygon_iou(
    a: Iterable[tuple[float, float]], b: Iterable[tuple[float, float]]
) -> float:
    pa = ShapelyPolygon(list(a)).buffer(0)
    pb = ShapelyPolygon(list(b)).buffer(0)
    if pa.is_empty or pb.is_empty:
        return 0.0
    inter = pa.intersection(pb).area
    union = pa.union(pb).area
    if union <= 0:
        return 0.0
    return inter / union


def grade_answer(
    truth: Answer,
    submitted: Answer,
    ont: Ontology,
    gcfg: GradingConfig = DEFAULT_GRADING,
) -> str:
    """Verdict for one submission. Unable is never graded."""
    if isinstance(submitted, UnableAnswer):
        return VERDICT_NOT_GRADED
    if isinstance(truth, BoolAnswer):
        ok = isinstance(submitted, BoolAnswer) and submitted.value == truth.value
        return VERDICT_CORRECT if ok else VERDICT_INCORRECT
    if isinstance(truth, LabelAnswer):
        if not isinstance(submitted, LabelAnswer):
            return VERDICT_INCORRECT
        want = truth.label.casefold()
        got = submitted.label.casefold()
        if got == want:
            return VERDICT_CORRECT
        if gcfg.lenient_labels and ont.subtype_of(truth.label, submitted.label):
            return VERDICT_CORRECT
        return VERDICT_INCORRECT
    if isinstance(truth, IntervalAnswer):
        if not isinstance(submitted, IntervalAnswer):
            return VERDICT_INCORRECT
        iou = interval_iou((truth.start, truth.end), (submitted.start, submitted.end))
        return VERDICT_CORRECT if iou >= gcfg.when_iou else VERDICT_INCORRECT
    if isinstance(truth, PolygonAnswer):
        if not isinstance(submitted, PolygonAnswer):
            return VERDICT_INCORRECT
        iou = polygon_iou(truth.points, submitted.points)
        return VERDICT_CORRECT if iou >= gcfg.where_iou else VERDICT_INCORRECT
    raise TypeError(f"ungradable ground truth {truth!r}")


@dataclass(frozen=True)
class AnswerRecord:
    """One graded submission as the scorer sees it."""

    query_id: str
    is_definition: bool
    truth_is_true: Optional[bool]  # definitions only
    responded: bool  # False when the submission was "unable"
    verdict: str
    pred_count: int
    categories: frozenset[str]


@dataclass(frozen=True)
class BreakdownCell:
    count: int
    accuracy: float


@dataclass(frozen=True)
class ScoreReport:
    definitions_total: int
    definitions_detected: int
    detection_rate: float
    nondef_total: int
    nondef_responded: int
    nondef_correct: int
    respond_rate: float
    accuracy: float
    breakdown_by_predicate_count: dict[str, BreakdownCell]
    breakdown_by_category: dict[str, BreakdownCell]

    def to_jsonable(self) -> dict:
        return {
            "definitions_total": self.definitions_total,
            "definitions_detected": self.definitions_detected,
            "detection_rate": self.detection_rate,
            "nondef_total": self.nondef_total,
            "nondef_responded": self.nondef_responded,
            "nondef_correct": self.nondef_correct,
            "respond_rate": self.respond_rate,
            "accuracy": self.accuracy,
            "breakdown_by_predicate_count": {
                k: {"count": v.count, "accuracy": v.accuracy}
                for k, v in self.breakdown_by_predicate_count.items()
            },
            "breakdown_by_category": {
                k: {"count": v.count, "accuracy": v.accuracy}
                for k, v in self.breakdown_by_category.items()
            },
        }

    def to_canonical_json(self) -> str:
        return json.dumps(self.to_jsonable(), sort_keys=True, separators=(",", ":"))


def _ratio(num: int, den: int) -> float:
    return num / den if den else 0.0


def pred_count_bin(n: int) -> str:
    return PRED_COUNT_BINS[min(n, 5) - 1] if n >= 1 else PRED_COUNT_BINS[0]


def compute_report(records: Iterable[AnswerRecord]) -> ScoreReport:
    records = list(records)
    defs = [r for r in records if r.is_definition]
    nondef = [r for r in records if not r.is_definition]

    # Detection opportunities are definitions whose ground truth is true;
    # deliberately-false definitions are graded but are not opportunities.
    def_opportunities = [r for r in defs if r.truth_is_true]
    detected = sum(
        1 for r in def_opportunities if r.responded and r.verdict == VERDICT_CORRECT
    )
    nondef_responded = [r for r in nondef if r.responded]
    nondef_correct = sum(1 for r in nondef_responded if r.verdict == VERDICT_CORRECT)

    by_count: dict[str, list[AnswerRecord]] = {k: [] for k in PRED_COUNT_BINS}
    for r in records:
        if r.responded:
            by_count[pred_count_bin(r.pred_count)].append(r)
    count_cells = {}
    for key, rows in by_count.items():
        correct = sum(1 for r in rows if r.verdict == VERDICT_CORRECT)
        count_cells[key] = BreakdownCell(len(rows), _ratio(correct, len(rows)))

    by_cat: dict[str, list[AnswerRecord]] = {}
    for r in nondef_responded:
        for cat in sorted(r.categories):
            by_cat.setdefault(cat, []).append(r)
    cat_cells = {}
    for key in sorted(by_cat):
        rows = by_cat[key]
        correct = sum(1 for r in rows if r.verdict == VERDICT_CORRECT)
        cat_cells[key] = BreakdownCell(len(rows), _ratio(correct, len(rows)))

    return ScoreReport(
        definitions_total=len(def_opportunities),
        definitions_detected=detected,
        detection_rate=_ratio(detected, len(def_opportunities)),
        nondef_total=len(nondef),
        nondef_responded=len(nondef_responded),
        nondef_correct=nondef_correct,
        respond_rate=_ratio(len(nondef_responded), len(nondef)),
        accuracy=_ratio(nondef_correct, len(nondef_responded)),
        breakdown_by_predicate_count=count_cells,
        breakdown_by_category=cat_cells,
    )


def report_from_jsonable(obj: dict) -> ScoreReport:
    def cells(d: dict) -> dict[str, BreakdownCell]:
        return {
            k: BreakdownCell(int(v["count"]), float(v["accuracy"]))
            for k, v in d.items()
        }

    return ScoreReport(
        definitions_total=int(obj["definitions_total"]),
        definitions_detected=int(obj["definitions_detected"]),
        detection_rate=float(obj["detection_rate"]),
        nondef_total=int(obj["nondef_total"]),
        nondef_responded=int(obj["nondef_responded"]),
        nondef_correct=int(obj["nondef_correct"]),
        respond_rate=float(obj["respond_rate"]),
        accuracy=float(obj["accuracy"]),
        breakdown_by_predicate_count=cells(obj["breakdown_by_predicate_count"]),
        breakdown_by_category=cells(obj["breakdown_by_category"]),
    )


def render_report_tsv(report: ScoreReport) -> str:
    """Aligned TSV rendering with 4-decimal rates."""
    lines = [
        "section\tmetric\tvalue",
        f"overall\tdefinitions_total\t{report.definitions_total}",
        f"overall\tdefinitions_detected\t{report.definitions_detected}",
        f"overall\tdetection_rate\t{report.detection_rate:.4f}",
        f"overall\tnondef_total\t{report.nondef_total}",
        f"overall\tnondef_responded\t{report.nondef_responded}",
        f"overall\tnondef_correct\t{report.nondef_correct}",
        f"overall\trespond_rate\t{report.respond_rate:.4f}",
        f"overall\taccuracy\t{report.accuracy:.4f}",
    ]
    for key in PRED_COUNT_BINS:
        cell = report.breakdown_by_predicate_count.get(key)
        if cell is None:
            continue
        lines.append(f"by_predicate_count\t{key}\t{cell.count}\t{cell.accuracy:.4f}")
    for key in sorted(report.breakdown_by_category):
        cell = report.breakdown_by_category[key]
        lines.append(f"by_category\t{key}\t{cell.count}\t{cell.accuracy:.4f}")
    return "\n".join(lines) + "\n"
