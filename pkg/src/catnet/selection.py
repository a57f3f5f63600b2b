"""Choose one classifier per attack category from a performance table."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Mapping

from .classifiers import ClassifierSpec, spec_from_json
from .errors import NoQualifiedClassifierError
from .kdd_data import ATTACK_CATEGORIES, Category
from .metrics import EvalRow, PerformanceTable

TIE_BREAK = ("tp", "fp", "tt", "name")
_DESCRIPTION = {"tp": "max TP", "fp": "min FP", "tt": "min TT", "name": "name"}


@dataclass(frozen=True)
class SelectionPolicy:
    aa_min: float = 0.85
    tt_budget_s: float | None = None
    tie_break: tuple[str, ...] = TIE_BREAK

    def __post_init__(self):
        if not 0.0 <= self.aa_min <= 1.0:
            raise ValueError("aa_min must lie in [0, 1]")
        if self.tt_budget_s is not None and not self.tt_budget_s > 0:
            raise ValueError("tt_budget_s must be > 0")
        tb = tuple(self.tie_break)
        if not tb or any(k not in _DESCRIPTION for k in tb) or len(set(tb)) != len(tb):
            raise ValueError(f"tie_break must be distinct criteria from {TIE_BREAK}")
        if "name" not in tb:
            tb += ("name",)  # keeps the order total
        object.__setattr__(self, "tie_break", tb)

    def to_json(self) -> dict:
        return {"aa_min": self.aa_min, "tt_budget_s": self.tt_budget_s, "tie_break": list(self.tie_break)}

    @classmethod
    def from_json(cls, obj: Mapping) -> "SelectionPolicy":
        return cls(obj.get("aa_min", 0.85), obj.get("tt_budget_s"), tuple(obj.get("tie_break", TIE_BREAK)))


@dataclass(frozen=True)
class Assignment:
    members: Mapping[Category, ClassifierSpec]
    policy: SelectionPolicy | None = None
    table_fingerprint: str | None = None

    def __post_init__(self):
        members = {Category.parse(k) if not isinstance(k, Category) else k: v
                   for k, v in self.members.items()}
        missing = [c.display for c in ATTACK_CATEGORIES if c not in members]
        if missing or set(members) - set(ATTACK_CATEGORIES):
            raise ValueError(f"assignment must cover exactly the attack categories (missing {missing})")
        object.__setattr__(self, "members", {c: members[c] for c in ATTACK_CATEGORIES})

    def idents(self) -> dict[Category, str]:
        return {c: s.ident for c, s in self.members.items()}

    def distinct_specs(self) -> list[ClassifierSpec]:
        seen: dict[str, ClassifierSpec] = {}
        for s in self.members.values():
            seen.setdefault(s.ident, s)
        return list(seen.values())

    def to_json(self) -> str:
        doc = {
            "members": {c.display: {"classifier": s.ident, **s.to_json()} for c, s in self.members.items()},
            "policy": self.policy.to_json() if self.policy else None,
            "table_fingerprint": self.table_fingerprint,
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "Assignment":
        doc = json.loads(text)
        members = {Category.parse(k): spec_from_json(v) for k, v in doc["members"].items()}
        policy = SelectionPolicy.from_json(doc["policy"]) if doc.get("policy") else None
        return cls(members, policy, doc.get("table_fingerprint"))


@dataclass(frozen=True)
class CategoryTrace:
    category: Category
    disqualified: tuple[tuple[str, str], ...]  # (classifier, reason)
    candidates: tuple[str, ...]
    steps: tuple[tuple[str, tuple[str, ...]], ...]  # (criterion, survivors after it)
    winner: str

    @property
    def decided_by(self) -> str | None:
        return self.steps[-1][0] if self.steps else None


@dataclass(frozen=True)
class SelectionTrace:
    policy: SelectionPolicy
    categories: tuple[CategoryTrace, ...] = field(default=())

    def winners(self) -> dict[Category, str]:
        return {t.category: t.winner for t in self.categories}

    def render(self) -> str:
        p = self.policy
        budget = "none" if p.tt_budget_s is None else f"{p.tt_budget_s:g} s"
        lines = [f"policy: aa_min {_pct(p.aa_min)}, tt budget {budget}, "
                 f"tie-break {' > '.join(_DESCRIPTION[k] for k in p.tie_break)}"]
        for t in self.categories:
            lines.append(f"[{t.category.display}]")
            for ident, reason in t.disqualified:
                lines.append(f"  disqualified {ident}: {reason}")
            lines.append(f"  candidates: {', '.join(t.candidates)}")
            for crit, survivors in t.steps:
                lines.append(f"  {_DESCRIPTION[crit]} -> {', '.join(survivors)}")
            lines.append(f"  selected: {t.winner}")
        return "\n".join(lines) + "\n"


def _pct(x: float) -> str:
    return f"{100 * x:.2f}".rstrip("0").rstrip(".") + "%"


def _key(row: EvalRow, c: Category, crit: str):
    """Smaller is better. Undefined rates rank last."""
    m = row.per_category.get(c)
    if crit == "tp":
        return -m.tp_rate if m and m.tp_rate is not None else math.inf
    if crit == "fp":
        return m.fp_rate if m and m.fp_rate is not None else math.inf
    if crit == "tt":
        return row.tt_s if row.tt_s is not None else math.inf
    return row.ident


def _qualify(table: PerformanceTable, policy: SelectionPolicy):
    kept, dropped = [], []
    for r in table.rows:
        if not r.ok:
            dropped.append((r.ident, f"failed: {r.error}"))
        elif r.aa is None or r.aa < policy.aa_min:
            dropped.append((r.ident, f"aa {_pct(r.aa or 0.0)} < {_pct(policy.aa_min)}"))
        elif policy.tt_budget_s is not None and (r.tt_s is None or r.tt_s > policy.tt_budget_s):
            dropped.append((r.ident, f"tt {r.tt_s:.2f} s > {policy.tt_budget_s:g} s"))
        else:
            kept.append(r)
    return kept, dropped


def explain(table: PerformanceTable, policy: SelectionPolicy = SelectionPolicy()) -> SelectionTrace:
    """Per attack category: who was disqualified and why, the surviving
    candidates, and how the tie-break chain narrowed them down."""
    if len(table) == 0:
        raise ValueError("performance table is empty")
    kept, dropped = _qualify(table, policy)
    traces = []
    for c in ATTACK_CATEGORIES:
        if not kept:
            raise NoQualifiedClassifierError(c, policy)
        pool = sorted(kept, key=lambda r: r.ident)
        steps = []
        if len(pool) > 1:
            for crit in policy.tie_break:
                best = min(_key(r, c, crit) for r in pool)
                pool = [r for r in pool if _key(r, c, crit) == best]
                steps.append((crit, tuple(r.ident for r in pool)))
                if len(pool) == 1:
                    break
        traces.append(CategoryTrace(c, tuple(dropped), tuple(sorted(r.ident for r in kept)),
                                    tuple(steps), pool[0].ident))
    return SelectionTrace(policy, tuple(traces))


def select(table: PerformanceTable, policy: SelectionPolicy = SelectionPolicy()) -> Assignment:
    trace = explain(table, policy)
    specs = {r.ident: r.spec for r in table.rows}
    members = {t.category: specs[t.winner] for t in trace.categories}
    return Assignment(members, policy, table.fingerprint())
