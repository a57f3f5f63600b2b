"""Reference implementations used as test oracles.

Everything here works from raw records (feature tuples and category codes)
and shares no code with the package's learners.
"""

from __future__ import annotations

import math
import re
from collections import Counter

import numpy as np


def raw_rows(ds):
    """(features, class code) pairs straight from the records."""
    cats = ds.categories().tolist()
    return [(ds.record(i).features, int(cats[i])) for i in range(len(ds))]


def class_index(rows):
    present = sorted({c for _, c in rows})
    return present, {c: k for k, c in enumerate(present)}


# -- OneR -------------------------------------------------------------------------------

def _majority(counter: Counter, order) -> int:
    best = max(counter[c] for c in order)
    return next(c for c in order if counter[c] == best)


def one_r_numeric_rule(values, labels, order, min_bucket):
    """Holte's bucketing, transcribed directly: grow a bucket until its
    majority reaches ``min_bucket``, never split a run of equal values, keep
    absorbing instances of the majority class, then merge equal neighbours."""
    pairs = sorted(zip(values, labels), key=lambda p: p[0])
    buckets = []
    i, n = 0, len(pairs)
    while i < n:
        seen = Counter()
        lo = pairs[i][0]
        while i < n and max(seen.values(), default=0) < min_bucket:
            seen[pairs[i][1]] += 1
            i += 1
        major = _majority(seen, order)
        while i < n and (pairs[i][0] == pairs[i - 1][0] or pairs[i][1] == major):
            seen[pairs[i][1]] += 1
            i += 1
        buckets.append((lo, pairs[i - 1][0], major))
    merged = []
    for lo, hi, c in buckets:
        if merged and merged[-1][2] == c:
            merged[-1] = (merged[-1][0], hi, c)
        else:
            merged.append((lo, hi, c))
    cuts = [(merged[k][1] + merged[k + 1][0]) / 2 for k in range(len(merged) - 1)]
    classes = [m[2] for m in merged]

    def apply(v):
        k = 0
        while k < len(cuts) and v >= cuts[k]:
            k += 1
        return classes[k]

    return apply


def one_r(train_rows, schema, min_bucket=6):
    """Exhaustive search over single attributes. Returns (feature index,
    training errors, predict function)."""
    _, index = class_index(train_rows)
    order = sorted(index)
    default = _majority(Counter(c for _, c in train_rows), order)
    labels = [c for _, c in train_rows]
    best = None
    for f, desc in enumerate(schema):
        col = [feats[f] for feats, _ in train_rows]
        if desc.is_continuous:
            rule = one_r_numeric_rule(col, labels, order, min_bucket)
        else:
            by_value: dict = {}
            for v, c in zip(col, labels):
                by_value.setdefault(v, Counter())[c] += 1
            table = {v: _majority(cnt, order) for v, cnt in by_value.items()}
            rule = (lambda t: lambda v: t.get(v, default))(table)
        errors = sum(rule(v) != c for v, c in zip(col, labels))
        if best is None or errors < best[1]:
            best = (f, errors, rule)
    f, errors, rule = best
    return f, errors, lambda feats: rule(feats[f])


def symbolic_error_floor(train_rows, f):
    """Fewest training errors any rule on symbolic attribute ``f`` can make."""
    by_value: dict = {}
    for feats, c in train_rows:
        by_value.setdefault(feats[f], Counter())[c] += 1
    return len(train_rows) - sum(max(cnt.values()) for cnt in by_value.values())


# -- nearest neighbour ------------------------------------------------------------------

def nearest_neighbour(train_rows, test_feats, schema):
    """1-NN by brute force: min-max scaled numeric gaps squared plus one per
    mismatching symbolic value. Ties vote; equal votes go to the lowest code."""
    cont = [i for i, d in enumerate(schema) if d.is_continuous]
    sym = [i for i, d in enumerate(schema) if not d.is_continuous]
    T = np.array([[feats[i] for i in cont] for feats, _ in train_rows], dtype=float)
    lo, hi = T.min(axis=0), T.max(axis=0)
    span = np.where(hi > lo, hi - lo, 1.0)
    live = hi > lo
    Ts = np.where(live, (T - lo) / span, 0.0)
    S = np.array([[feats[i] for i in sym] for feats, _ in train_rows], dtype=object)
    labels = np.array([c for _, c in train_rows])
    out = []
    for feats in test_feats:
        x = np.where(live, (np.array([feats[i] for i in cont], dtype=float) - lo) / span, 0.0)
        s = np.array([feats[i] for i in sym], dtype=object)
        d = ((Ts - x) ** 2).sum(axis=1) + (S != s).sum(axis=1)
        near = labels[d <= d.min() * (1 + 1e-9) + 1e-12]
        votes = Counter(near.tolist())
        top = max(votes.values())
        out.append(min(c for c, v in votes.items() if v == top))
    return out


# -- naive Bayes --------------------------------------------------------------------------

def naive_bayes_posterior(train_rows, feats, schema):
    """Closed-form posterior: add-one class prior, one Gaussian per class and
    numeric attribute (population sd floored at a sixth of the attribute's
    mean distinct-value gap), add-one frequencies with an unseen slot."""
    present, _ = class_index(train_rows)
    n, K = len(train_rows), len(present)
    logs = []
    for c in present:
        rows = [r for r, k in train_rows if k == c]
        nc = len(rows)
        lp = math.log((nc + 1) / (n + K))
        for f, desc in enumerate(schema):
            if desc.is_continuous:
                distinct = sorted({r[f] for r, _ in train_rows})
                precision = (distinct[-1] - distinct[0]) / (len(distinct) - 1) if len(distinct) > 1 else 1.0
                vals = [r[f] for r in rows]
                mean = math.fsum(vals) / nc
                sd = math.sqrt(math.fsum((v - mean) ** 2 for v in vals) / nc)
                sd = max(sd, precision / 6)
                z = (feats[f] - mean) / sd
                lp += -0.5 * z * z - math.log(sd) - 0.5 * math.log(2 * math.pi)
            else:
                vocab = {r[f] for r, _ in train_rows}
                hits = sum(1 for r in rows if r[f] == feats[f])
                lp += math.log((hits + 1) / (nc + len(vocab) + 1))
        logs.append(lp)
    top = max(logs)
    w = [math.exp(v - top) for v in logs]
    total = math.fsum(w)
    return {c: x / total for c, x in zip(present, w)}


# -- rule lists ----------------------------------------------------------------------------

_COND = re.compile(r"\((\S+) (<=|>=|=) ([^()]+)\)")
_RULE = re.compile(r"^(.*) => (\S+) \((\d+)/(\d+)\)$")


def parse_rule_list(text):
    """Rules from a dump as (conditions, class name, coverage, errors) plus
    the default class name."""
    rules, default = [], None
    for line in text.splitlines():
        if line.startswith(" => ") and line.endswith("(default)"):
            default = line.split()[1]
            continue
        m = _RULE.match(line)
        if m and _COND.search(m.group(1)):
            conds = _COND.findall(m.group(1))
            rules.append((conds, m.group(2), int(m.group(3)), int(m.group(4))))
    return rules, default


def rule_fires(conds, feats, schema):
    for name, op, value in conds:
        v = feats[schema.index_of(name)]
        if op == "=" and v != value:
            return False
        if op == "<=" and not v <= float(value):
            return False
        if op == ">=" and not v >= float(value):
            return False
    return True


# -- tree dumps ------------------------------------------------------------------------

_J48_LEAF = re.compile(r": \S+ \((\d+(?:\.\d+)?)(?:/\d+(?:\.\d+)?)?\)$")
_NB_LEAF = re.compile(r"NB leaf \d+ \((\d+) instances\)$")


def leaf_sizes(text):
    sizes = [float(m.group(1)) for m in map(_J48_LEAF.search, text.splitlines()) if m]
    sizes += [float(m.group(1)) for m in map(_NB_LEAF.search, text.splitlines()) if m]
    return sizes


# -- MLP gradient ---------------------------------------------------------------------------

def central_differences(loss, params, h=3e-3):
    """Five-point central stencil; truncation error is O(h^4), so h can be
    large enough to keep round-off far below the gradients being checked."""
    grads = {}
    for key, arr in params.items():
        g = np.zeros_like(arr)
        for idx in np.ndindex(arr.shape):
            keep = arr[idx]
            vals = []
            for step in (2, 1, -1, -2):
                arr[idx] = keep + step * h
                vals.append(loss(params))
            arr[idx] = keep
            g[idx] = (-vals[0] + 8 * vals[1] - 8 * vals[2] + vals[3]) / (12 * h)
        grads[key] = g
    return grads


def relative_error(a, b):
    """max |a - b| / max(|a|, |b|) elementwise, ignoring entries where both
    are below 1e-8 in magnitude (difference noise dominates there)."""
    scale = np.maximum(np.abs(a), np.abs(b))
    big = scale > 1e-8
    if not big.any():
        return float(np.max(np.abs(a - b)))
    return float(np.max(np.abs(a - b)[big] / scale[big]))


# -- SVM optimality -------------------------------------------------------------------------

def kkt_residuals(K, alpha, y, rho, C):
    """Largest KKT violation of a soft-margin dual solution with decision
    function sum_j alpha_j y_j K(x_j, x) - rho."""
    margin = y * (K @ (alpha * y) - rho)
    at0 = alpha <= 0
    atC = alpha >= C
    free = ~at0 & ~atC
    r = np.zeros_like(alpha)
    r[at0] = np.maximum(0.0, 1.0 - margin[at0])
    r[atC] = np.maximum(0.0, margin[atC] - 1.0)
    r[free] = np.abs(margin[free] - 1.0)
    return r


# -- walking a dumped decision tree -----------------------------------------------------

_TREE_LEAF = re.compile(r"^(.*?): (\S+) \(\d+(?:\.\d+)?(?:/\d+(?:\.\d+)?)?\)$")


def parse_tree_dump(text):
    """Nested dicts {cond, leaf, children} from a J48-style dump."""
    body = text.split("-" * 15, 1)[1].split("\nNumber of Leaves", 1)[0]
    root = {"cond": None, "leaf": None, "children": []}
    stack = [(-1, root)]
    for line in body.splitlines():
        if not line.strip() or set(line.strip()) == {"-"}:
            continue
        depth = 0
        while line.startswith("|   ", 4 * depth):
            depth += 1
        text_ = line[4 * depth:]
        m = _TREE_LEAF.match(text_)
        node = {"cond": m.group(1) if m else text_, "leaf": m.group(2) if m else None, "children": []}
        if m and not m.group(1):
            return {"cond": None, "leaf": m.group(2), "children": []}
        while stack[-1][0] >= depth:
            stack.pop()
        stack[-1][1]["children"].append(node)
        if node["leaf"] is None:
            stack.append((depth, node))
    return root


def _holds(cond, feats, schema):
    for op in (" <= ", " > ", " = "):
        if op in cond:
            name, value = cond.split(op, 1)
            v = feats[schema.index_of(name)]
            if op == " = ":
                return v == value
            return v <= float(value) if op == " <= " else v > float(value)
    raise ValueError(cond)


def walk_tree(node, feats, schema):
    """Class name at the leaf reached by ``feats``; None when no branch
    matches (a value the tree never saw)."""
    while node["leaf"] is None:
        for child in node["children"]:
            if _holds(child["cond"], feats, schema):
                node = child
                break
        else:
            return None
    return node["leaf"]


def toy_records(column, rows, base):
    """KDD-shaped records equal to ``base`` except in ``column``."""
    from catnet.kdd_data import Connection
    out = []
    for value, label in rows:
        feats = list(base)
        feats[column] = value
        out.append(Connection(tuple(feats), label))
    return out
