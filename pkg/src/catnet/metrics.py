"""Per-category detection rates, average accuracy, training time and the
performance tables built from them."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .classifiers import ClassifierSpec, predict_indices, spec_from_ident, spec_from_json, train
from .errors import EmptyError, LengthMismatchError, UndefinedRate
from .kdd_data import ALL_CATEGORIES, ATTACK_CATEGORIES, Category, Dataset

UNDEFINED = "—"  # rendered in place of a rate that has no denominator
CSV_HEADER = ("classifier", "category", "tp", "fp", "aa", "tt_s")


@dataclass(frozen=True, eq=False)
class ConfusionMatrix:
    """Counts indexed (true category, predicted category), both in the
    order Normal, DoS, Probe, U2R, R2L."""

    counts: np.ndarray

    def __post_init__(self):
        counts = np.array(self.counts, dtype=np.int64)
        if counts.shape != (len(ALL_CATEGORIES),) * 2:
            raise ValueError(f"confusion matrix must be 5x5, got {counts.shape}")
        if (counts < 0).any():
            raise ValueError("confusion counts must be >= 0")
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)

    def __eq__(self, other):
        return isinstance(other, ConfusionMatrix) and np.array_equal(self.counts, other.counts)

    def __hash__(self):
        return hash(self.counts.tobytes())

    def count(self, true: Category, pred: Category) -> int:
        return int(self.counts[int(true), int(pred)])

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def row_sums(self) -> dict[Category, int]:
        return {c: int(s) for c, s in zip(ALL_CATEGORIES, self.counts.sum(axis=1))}

    def to_list(self) -> list[list[int]]:
        return self.counts.tolist()


def confusion_from_codes(pred: np.ndarray, true: np.ndarray) -> ConfusionMatrix:
    pred = np.asarray(pred, dtype=np.int64)
    true = np.asarray(true, dtype=np.int64)
    if len(pred) != len(true):
        raise LengthMismatchError(f"{len(pred)} predictions for {len(true)} truths")
    if len(pred) == 0:
        raise EmptyError("no predictions to tally")
    k = len(ALL_CATEGORIES)
    return ConfusionMatrix(np.bincount(true * k + pred, minlength=k * k).reshape(k, k))


def confusion(predictions: Sequence[Category], truths: Sequence[Category]) -> ConfusionMatrix:
    if len(predictions) != len(truths):
        raise LengthMismatchError(f"{len(predictions)} predictions for {len(truths)} truths")
    return confusion_from_codes(np.fromiter((int(c) for c in predictions), np.int64, len(predictions)),
                                np.fromiter((int(c) for c in truths), np.int64, len(truths)))


def tp_rate(cm: ConfusionMatrix, c: Category) -> float:
    """One-vs-rest recall of category ``c``."""
    row = cm.counts[int(c)]
    n = int(row.sum())
    if n == 0:
        raise UndefinedRate(f"no test instances of {Category(c).display}")
    return int(row[int(c)]) / n


def fp_rate(cm: ConfusionMatrix, c: Category) -> float:
    """Fraction of instances not of ``c`` that were predicted as ``c``."""
    others = np.arange(len(ALL_CATEGORIES)) != int(c)
    n = int(cm.counts[others].sum())
    if n == 0:
        raise UndefinedRate(f"every test instance is {Category(c).display}")
    return int(cm.counts[others, int(c)].sum()) / n


def average_accuracy(cm: ConfusionMatrix) -> float:
    total = cm.total
    if total == 0:
        raise EmptyError("empty confusion matrix")
    return int(np.trace(cm.counts)) / total


def _or_none(fn, *args):
    try:
        return fn(*args)
    except UndefinedRate:
        return None


def format_pct(x: float | None, digits: int = 2) -> str:
    return UNDEFINED if x is None else f"{100 * x:.{digits}f}"


@dataclass(frozen=True)
class CategoryMetrics:
    """TP and FP rates as fractions; ``None`` marks an undefined rate."""

    tp_rate: float | None
    fp_rate: float | None

    def __post_init__(self):
        for v in (self.tp_rate, self.fp_rate):
            if v is not None and not 0.0 <= v <= 1.0:
                raise ValueError(f"rate {v} outside [0, 1]")

    @classmethod
    def from_confusion(cls, cm: ConfusionMatrix, c: Category) -> "CategoryMetrics":
        return cls(_or_none(tp_rate, cm, c), _or_none(fp_rate, cm, c))


@dataclass(frozen=True)
class EvalRow:
    spec: ClassifierSpec
    per_category: Mapping[Category, CategoryMetrics]
    aa: float | None
    tt_s: float | None
    error: str | None = None
    confusion: ConfusionMatrix | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.aa is not None and not 0.0 <= self.aa <= 1.0:
            raise ValueError("aa must lie in [0, 1]")
        if self.tt_s is not None and self.tt_s < 0:
            raise ValueError("tt_s must be >= 0")

    @property
    def ident(self) -> str:
        return self.spec.ident

    @property
    def ok(self) -> bool:
        return self.error is None

    @classmethod
    def failed(cls, spec: ClassifierSpec, error: str) -> "EvalRow":
        return cls(spec, {}, None, None, error)

    @classmethod
    def from_confusion(cls, spec, cm: ConfusionMatrix, tt_s: float) -> "EvalRow":
        per = {c: CategoryMetrics.from_confusion(cm, c) for c in ATTACK_CATEGORIES}
        return cls(spec, per, average_accuracy(cm), tt_s, None, cm)

    def to_json(self) -> dict:
        out = {
            "classifier": self.ident,
            "spec": self.spec.to_json(),
            "per_category": {c.display: {"tp": m.tp_rate, "fp": m.fp_rate}
                             for c, m in self.per_category.items()},
            "aa": self.aa,
            "tt_s": self.tt_s,
            "error": self.error,
        }
        if self.confusion is not None:
            out["confusion"] = self.confusion.to_list()
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "EvalRow":
        spec = spec_from_json(obj["spec"]) if "spec" in obj else spec_from_ident(obj["classifier"])
        per = {Category.parse(k): CategoryMetrics(v.get("tp"), v.get("fp"))
               for k, v in obj.get("per_category", {}).items()}
        cm = ConfusionMatrix(obj["confusion"]) if obj.get("confusion") is not None else None
        return cls(spec, per, obj.get("aa"), obj.get("tt_s"), obj.get("error"), cm)


@dataclass(frozen=True)
class PerformanceTable:
    rows: tuple[EvalRow, ...]
    metadata: Mapping = field(default_factory=dict, compare=False)

    def __post_init__(self):
        rows = tuple(self.rows)
        idents = [r.ident for r in rows]
        if len(set(idents)) != len(idents):
            raise ValueError("classifier identifiers must be unique within a table")
        object.__setattr__(self, "rows", rows)

    def __len__(self):
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    def row(self, ident: str) -> EvalRow:
        for r in self.rows:
            if r.ident == ident:
                return r
        raise KeyError(ident)

    def fingerprint(self) -> str:
        """SHA-256 over the rows' canonical JSON (metadata excluded)."""
        doc = json.dumps([_strip_confusion(r.to_json()) for r in self.rows], sort_keys=True)
        return hashlib.sha256(doc.encode()).hexdigest()

    # -- serialization ----------------------------------------------------------------

    def to_json(self) -> str:
        doc = {"metadata": dict(self.metadata), "rows": [r.to_json() for r in self.rows]}
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "PerformanceTable":
        doc = json.loads(text)
        return cls(tuple(EvalRow.from_json(r) for r in doc["rows"]), doc.get("metadata", {}))

    def to_csv(self) -> str:
        """Long form, one line per (classifier, attack category). A failed
        classifier gets a single line with category ``error`` and the
        message in the ``tp`` column."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in self.rows:
            if not r.ok:
                w.writerow([r.ident, "error", r.error, "", "", ""])
                continue
            for c, m in r.per_category.items():
                w.writerow([r.ident, c.display, _num(m.tp_rate), _num(m.fp_rate), _num(r.aa), _num(r.tt_s)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "PerformanceTable":
        reader = csv.reader(io.StringIO(text))
        header = tuple(next(reader, ()))
        if header != CSV_HEADER:
            raise ValueError(f"unexpected CSV header {header!r}")
        order: list[str] = []
        parts: dict[str, dict] = {}
        for rec in reader:
            if not rec:
                continue
            ident, cat, tp, fp, aa, tt = rec
            if ident not in parts:
                order.append(ident)
                parts[ident] = {"per": {}, "aa": None, "tt": None, "error": None}
            entry = parts[ident]
            if cat == "error":
                entry["error"] = tp
                continue
            entry["per"][Category.parse(cat)] = CategoryMetrics(_parse_num(tp), _parse_num(fp))
            entry["aa"], entry["tt"] = _parse_num(aa), _parse_num(tt)
        rows = []
        for ident in order:
            e = parts[ident]
            rows.append(EvalRow(spec_from_ident(ident), e["per"], e["aa"], e["tt"], e["error"]))
        return cls(tuple(rows))

    def render(self) -> str:
        """Fixed-width text in the layout of the benchmark table: TP and FP
        per attack category in %, AA in %, TT in seconds."""
        head = ["Classifier"] + [f"{c.display} {k}" for c in ATTACK_CATEGORIES for k in ("TP", "FP")] + ["AA", "TT"]
        body = []
        for r in self.rows:
            if not r.ok:
                body.append([r.ident, f"error: {r.error}"])
                continue
            cells = [r.ident]
            for c in ATTACK_CATEGORIES:
                m = r.per_category.get(c, CategoryMetrics(None, None))
                cells += [format_pct(m.tp_rate), format_pct(m.fp_rate)]
            cells += [format_pct(r.aa), UNDEFINED if r.tt_s is None else f"{r.tt_s:.2f}"]
            body.append(cells)
        widths = [max(len(row[i]) for row in [head] + [b for b in body if len(b) == len(head)])
                  for i in range(len(head))]
        lines = ["  ".join(h.ljust(w) for h, w in zip(head, widths))]
        for b in body:
            lines.append("  ".join(x.ljust(w) for x, w in zip(b, widths)) if len(b) == len(head) else "  ".join(b))
        return "\n".join(lines) + "\n"


def _strip_confusion(d: dict) -> dict:
    d = dict(d)
    d.pop("confusion", None)
    return d


def _num(x) -> str:
    return UNDEFINED if x is None else repr(float(x))


def _parse_num(text: str):
    if text in (UNDEFINED, ""):
        return None
    v = float(text)
    if not math.isfinite(v):
        raise ValueError(f"non-finite value {text!r}")
    return v


# -- evaluation -----------------------------------------------------------------------

def evaluate(spec: ClassifierSpec, train_set: Dataset, test_set: Dataset) -> EvalRow:
    """Train on ``train_set``, predict ``test_set`` and reduce to a row."""
    if len(test_set) == 0:
        raise EmptyError("test set is empty")
    if not test_set.labeled:
        raise ValueError("every test record needs a label")
    model = train(spec, train_set)
    pred = predict_indices(model, test_set)
    cm = confusion_from_codes(pred, test_set.categories())
    return EvalRow.from_confusion(spec, cm, model.training_time_s)


def benchmark(specs: Iterable[ClassifierSpec], train_set: Dataset, test_set: Dataset,
              workers: int = 1, metadata: Mapping | None = None) -> PerformanceTable:
    """One row per spec. A spec that fails yields an error row."""
    specs = list(specs)
    if not specs:
        raise ValueError("no classifier specs to benchmark")

    def run(spec):
        try:
            return evaluate(spec, train_set, test_set)
        except Exception as exc:  # recorded in-row, never fatal for the table
            return EvalRow.failed(spec, f"{type(exc).__name__}: {exc}")

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(run, specs))
    else:
        rows = [run(s) for s in specs]
    meta = {
        "train_records": len(train_set),
        "test_records": len(test_set),
        "train_provenance": _plain(train_set.provenance),
        "test_provenance": _plain(test_set.provenance),
        "recipes": {s.ident: s.recipe for s in specs},
    }
    meta.update(metadata or {})
    return PerformanceTable(tuple(rows), meta)


def _plain(d: Mapping) -> dict:
    """JSON-safe subset of a provenance mapping."""
    out = {}
    for k, v in d.items():
        if isinstance(v, (str, int, float, bool)) or v is None:
            out[k] = v
        elif isinstance(v, Mapping):
            out[k] = _plain(v)
        elif isinstance(v, (list, tuple)) and all(isinstance(x, (str, int, float)) for x in v):
            out[k] = list(v)
    return out
