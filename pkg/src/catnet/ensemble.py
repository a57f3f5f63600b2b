"""Parallel per-category detector: each attack category has a member model
that raises that category's flag when it predicts the category."""

from __future__ import annotations

import io
import json
import struct
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, TextIO

import numpy as np

from .classifiers import (
    TrainedModel,
    dumps_model,
    loads_model,
    predict_category,
    predict_indices,
    train,
)
from .errors import ModelFormatError, ParseError, SchemaMismatchError
from .kdd_data import ATTACK_CATEGORIES, KDD_SCHEMA, Category, Connection, Dataset, FeatureSchema, parse_record
from .metrics import (
    CategoryMetrics,
    ConfusionMatrix,
    average_accuracy,
    confusion_from_codes,
    format_pct,
)
from .selection import Assignment

DEFAULT_PRIORITY = (Category.U2R, Category.R2L, Category.PROBE, Category.DOS)
MALFORMED = "malformed"


@dataclass(frozen=True, eq=False)
class EnsembleModel:
    members: Mapping[Category, TrainedModel]
    priority: tuple[Category, ...] = DEFAULT_PRIORITY
    assignment: Assignment | None = None

    def __post_init__(self):
        if set(self.members) != set(ATTACK_CATEGORIES):
            raise ValueError("ensemble members must cover exactly the four attack categories")
        if sorted(self.priority) != sorted(ATTACK_CATEGORIES):
            raise ValueError("priority must be a permutation of the attack categories")
        schemas = {tuple(m.encoder.schema.names) for m in self.members.values()}
        if len(schemas) != 1:
            raise SchemaMismatchError("ensemble members were trained on different schemas")
        object.__setattr__(self, "members", {c: self.members[c] for c in ATTACK_CATEGORIES})
        object.__setattr__(self, "priority", tuple(self.priority))

    def distinct(self) -> dict[int, TrainedModel]:
        """Member models keyed by identity, each listed once."""
        return {id(m): m for m in self.members.values()}


@dataclass(frozen=True)
class DetectionResult:
    flags: frozenset
    resolved: Category
    per_member_prediction: Mapping[Category, Category] = field(compare=False, default_factory=dict)

    def line(self, index: int) -> str:
        flags = "|".join(c.display for c in ATTACK_CATEGORIES if c in self.flags)
        return f"{index},{self.resolved.display},{flags}"


def resolve(flags: Iterable[Category], priority: tuple[Category, ...] = DEFAULT_PRIORITY) -> Category:
    """Highest-priority raised flag, or Normal."""
    flags = set(flags)
    for c in priority:
        if c in flags:
            return c
    return Category.NORMAL


def build_ensemble(assignment: Assignment, train_set: Dataset,
                   priority: tuple[Category, ...] = DEFAULT_PRIORITY,
                   trainer: Callable = train) -> EnsembleModel:
    """Train every distinct assigned spec once on the full training set."""
    trained: dict[str, TrainedModel] = {}
    members = {}
    for c, spec in assignment.members.items():
        if spec.ident not in trained:
            try:
                trained[spec.ident] = trainer(spec, train_set)
            except Exception as exc:
                exc.category = c  # owning category, for callers that report it
                raise
        members[c] = trained[spec.ident]
    return EnsembleModel(members, priority, assignment)


def _merge(preds: Mapping[Category, Category], priority) -> DetectionResult:
    flags = frozenset(c for c, p in preds.items() if p == c)
    return DetectionResult(flags, resolve(flags, priority), dict(preds))


def detect(ensemble: EnsembleModel, record: Connection, pool: ThreadPoolExecutor | None = None) -> DetectionResult:
    """Run each distinct member on the record and merge the flags. With a
    thread pool the members run concurrently; the merge waits for all."""
    models = ensemble.distinct()
    if pool is None:
        out = {k: predict_category(m, record) for k, m in models.items()}
    else:
        futures = {k: pool.submit(predict_category, m, record) for k, m in models.items()}
        out = {k: f.result() for k, f in futures.items()}
    return _merge({c: out[id(m)] for c, m in ensemble.members.items()}, ensemble.priority)


def member_predictions(ensemble: EnsembleModel, records: Dataset) -> dict[Category, np.ndarray]:
    """Category codes predicted by each member, computed once per distinct model."""
    cache = {k: predict_indices(m, records) for k, m in ensemble.distinct().items()}
    return {c: cache[id(m)] for c, m in ensemble.members.items()}


def detect_batch(ensemble: EnsembleModel, records: Dataset) -> list[DetectionResult]:
    preds = member_predictions(ensemble, records)
    out = []
    for i in range(len(records)):
        out.append(_merge({c: Category(int(preds[c][i])) for c in ATTACK_CATEGORIES}, ensemble.priority))
    return out


def flag_matrix(ensemble: EnsembleModel, records: Dataset) -> dict[Category, np.ndarray]:
    return {c: p == int(c) for c, p in member_predictions(ensemble, records).items()}


@dataclass(frozen=True)
class EnsembleReport:
    """Per-category TP/FP of the one-vs-rest flags, plus the confusion
    matrix and accuracy of the resolved single labels."""

    per_category: Mapping[Category, CategoryMetrics]
    resolved_confusion: ConfusionMatrix
    aa: float

    def to_json(self) -> dict:
        return {
            "per_category": {c.display: {"tp": m.tp_rate, "fp": m.fp_rate} for c, m in self.per_category.items()},
            "resolved_confusion": self.resolved_confusion.to_list(),
            "aa": self.aa,
        }

    def render(self, name: str = "ensemble") -> str:
        tp = " / ".join(format_pct(self.per_category[c].tp_rate) for c in ATTACK_CATEGORIES)
        fp = " / ".join(format_pct(self.per_category[c].fp_rate) for c in ATTACK_CATEGORIES)
        cats = " / ".join(c.display for c in ATTACK_CATEGORIES)
        return f"{name} ({cats})\n  TP {tp}\n  FP {fp}\n  resolved AA {format_pct(self.aa)}\n"


def _flag_rates(flag: np.ndarray, is_c: np.ndarray) -> CategoryMetrics:
    pos, neg = int(is_c.sum()), int((~is_c).sum())
    tp = int((flag & is_c).sum()) / pos if pos else None
    fp = int((flag & ~is_c).sum()) / neg if neg else None
    return CategoryMetrics(tp, fp)


def evaluate_ensemble(ensemble: EnsembleModel, test_set: Dataset) -> EnsembleReport:
    truth = test_set.categories().astype(np.int64)
    preds = member_predictions(ensemble, test_set)
    per = {c: _flag_rates(preds[c] == int(c), truth == int(c)) for c in ATTACK_CATEGORIES}
    resolved = np.full(len(truth), int(Category.NORMAL), dtype=np.int64)
    for c in reversed(ensemble.priority):  # highest priority written last
        resolved[preds[c] == int(c)] = int(c)
    cm = confusion_from_codes(resolved, truth)
    return EnsembleReport(per, cm, average_accuracy(cm))


# -- streaming --------------------------------------------------------------------------

@dataclass(frozen=True)
class StreamSummary:
    records: int
    malformed: int
    elapsed_s: float
    records_per_s: float
    member_latency_s: Mapping[Category, float]
    flag_counts: Mapping[Category, int]
    resolved_counts: Mapping[Category, int]

    def to_json(self) -> dict:
        return {
            "records": self.records,
            "malformed": self.malformed,
            "elapsed_s": self.elapsed_s,
            "records_per_s": self.records_per_s,
            "member_latency_s": {c.display: v for c, v in self.member_latency_s.items()},
            "flag_counts": {c.display: v for c, v in self.flag_counts.items()},
            "resolved_counts": {c.display: v for c, v in self.resolved_counts.items()},
        }


def stream_detect(ensemble: EnsembleModel, source: Iterable[str], sink: TextIO,
                  schema: FeatureSchema = KDD_SCHEMA, parallel: bool = False) -> StreamSummary:
    """Detect record by record in arrival order, writing one result line per
    non-blank input line. Malformed lines produce a ``malformed`` result and
    are counted, not fatal."""
    models = ensemble.distinct()
    spent = {k: 0.0 for k in models}
    flag_counts = {c: 0 for c in ATTACK_CATEGORIES}
    resolved_counts: dict[Category, int] = {c: 0 for c in Category}
    good = bad = 0
    pool = ThreadPoolExecutor(max_workers=len(models)) if parallel else None

    def timed(model, record):
        t0 = time.perf_counter()
        out = predict_category(model, record)
        return out, time.perf_counter() - t0

    start = time.perf_counter()
    try:
        index = 0
        for line in source:
            if not line.strip():
                continue
            try:
                record = parse_record(line, schema, index + 1)
                if pool is None:
                    out = {k: timed(m, record) for k, m in models.items()}
                else:
                    futures = {k: pool.submit(timed, m, record) for k, m in models.items()}
                    out = {k: f.result() for k, f in futures.items()}
            except (ParseError, SchemaMismatchError, ValueError):
                sink.write(f"{index},{MALFORMED},\n")
                bad += 1
                index += 1
                continue
            for k, (_, dt) in out.items():
                spent[k] += dt
            result = _merge({c: out[id(m)][0] for c, m in ensemble.members.items()}, ensemble.priority)
            sink.write(result.line(index) + "\n")
            for c in result.flags:
                flag_counts[c] += 1
            resolved_counts[result.resolved] += 1
            good += 1
            index += 1
    finally:
        if pool is not None:
            pool.shutdown()
    elapsed = time.perf_counter() - start
    latency = {c: (spent[id(m)] / good if good else 0.0) for c, m in ensemble.members.items()}
    rate = good / elapsed if good and elapsed > 0 else 0.0
    return StreamSummary(good, bad, elapsed, rate, latency, flag_counts, resolved_counts)


def batch_lines(ensemble: EnsembleModel, source: Iterable[str],
                schema: FeatureSchema = KDD_SCHEMA) -> tuple[list[str], int, int]:
    """Batch counterpart of :func:`stream_detect`: same result lines, but
    every member scores all well-formed records at once.
    Returns (lines, good, malformed)."""
    parsed: list[Connection | None] = []
    for line in source:
        if not line.strip():
            continue
        try:
            parsed.append(parse_record(line, schema, len(parsed) + 1))
        except (ParseError, ValueError):
            parsed.append(None)
    good = [r for r in parsed if r is not None]
    results = iter(detect_batch(ensemble, Dataset.from_connections(good, schema)) if good else [])
    lines = []
    for i, rec in enumerate(parsed):
        lines.append(f"{i},{MALFORMED}," if rec is None else next(results).line(i))
    return lines, len(good), len(parsed) - len(good)


# -- serialization -----------------------------------------------------------------------

ENSEMBLE_MAGIC = b"CATNETE1"


def dumps_ensemble(ensemble: EnsembleModel) -> bytes:
    """Assignment JSON plus one model container per distinct member."""
    models = list(ensemble.distinct().values())
    header = json.dumps({
        "assignment": ensemble.assignment.to_json() if ensemble.assignment else None,
        "priority": [c.display for c in ensemble.priority],
        "members": {c.display: models.index(m) for c, m in ensemble.members.items()},
    }, sort_keys=True).encode()
    buf = io.BytesIO()
    buf.write(ENSEMBLE_MAGIC + struct.pack(">I", len(header)) + header)
    for m in models:
        blob = dumps_model(m)
        buf.write(struct.pack(">Q", len(blob)) + blob)
    return buf.getvalue()


def loads_ensemble(blob: bytes) -> EnsembleModel:
    if blob[:8] != ENSEMBLE_MAGIC:
        raise ModelFormatError("not a catnet ensemble (bad magic)")
    (hlen,) = struct.unpack(">I", blob[8:12])
    header = json.loads(blob[12:12 + hlen])
    pos = 12 + hlen
    models = []
    while pos < len(blob):
        (n,) = struct.unpack(">Q", blob[pos:pos + 8])
        models.append(loads_model(blob[pos + 8:pos + 8 + n]))
        pos += 8 + n
    members = {Category.parse(k): models[v] for k, v in header["members"].items()}
    assignment = Assignment.from_json(header["assignment"]) if header["assignment"] else None
    priority = tuple(Category.parse(c) for c in header["priority"])
    return EnsembleModel(members, priority, assignment)
