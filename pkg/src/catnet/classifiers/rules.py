"""Rule learners: OneR, a best-first decision table, and RIPPER (JRip)."""

from __future__ import annotations

import heapq
import math

import numpy as np

from .encoding import Encoded


def _fmt(v: float) -> str:
    return repr(float(v))


# -- OneR ---------------------------------------------------------------------------

class OneRule:
    """One-attribute rule set. Numeric attributes are bucketed greedily: a
    bucket closes once its majority class has ``min_bucket_size`` members and
    the next instance has a different value and class; adjacent buckets with
    the same class are merged."""

    def __init__(self, spec):
        self.min_bucket = spec.min_bucket_size

    def fit(self, X: Encoded, y: np.ndarray, n_classes: int):
        K = n_classes
        self.n_classes = K
        self.default = int(np.argmax(np.bincount(y, minlength=K)))
        best = None
        for f, kind, pos in X.columns():
            if kind == "sym":
                rule = self._symbolic(X.sym[:, pos], y, K, X.sym_sizes[pos])
            else:
                rule = self._numeric(X.cont[:, pos], y, K)
            errors = int(np.sum(self._apply(rule, X.cont[:, pos] if kind == "cont" else X.sym[:, pos]) != y))
            if best is None or errors < best[0]:
                best = (errors, f, kind, pos, rule)
        self.errors, self.feature, self.kind, self.pos, self.rule = best
        self.n_train = len(y)
        return self

    @staticmethod
    def _symbolic(codes, y, K, size):
        counts = np.zeros((size, K))
        np.add.at(counts, (codes, y), 1)
        return ("sym", counts.argmax(axis=1), counts)

    def _numeric(self, values, y, K):
        order = np.argsort(values, kind="stable")
        vs, ys = values[order].tolist(), y[order].tolist()
        n = len(vs)
        buckets = []  # (first value, last value, counts)
        i = 0
        while i < n:
            counts = [0] * K
            first = vs[i]
            while i < n and max(counts) < self.min_bucket:
                counts[ys[i]] += 1
                i += 1
            major = counts.index(max(counts))
            while i < n and (vs[i] == vs[i - 1] or ys[i] == major):
                counts[ys[i]] += 1
                i += 1
            buckets.append([first, vs[i - 1], counts])
        merged = []
        for b in buckets:
            cls = b[2].index(max(b[2]))
            if merged and merged[-1][3] == cls:
                merged[-1][1] = b[1]
                merged[-1][2] = [a + c for a, c in zip(merged[-1][2], b[2])]
            else:
                merged.append([b[0], b[1], list(b[2]), cls])
        thresholds = [(merged[k][1] + merged[k + 1][0]) / 2.0 for k in range(len(merged) - 1)]
        classes = [m[3] for m in merged]
        return ("cont", np.array(thresholds), np.array(classes, dtype=np.int64))

    def _apply(self, rule, col):
        if rule[0] == "sym":
            table = rule[1]
            out = np.full(len(col), self.default, dtype=np.int64)
            seen = col >= 0
            out[seen] = table[col[seen]]
            return out
        thresholds, classes = rule[1], rule[2]
        return classes[np.searchsorted(thresholds, col, side="right")]

    def predict(self, X: Encoded):
        col = X.sym[:, self.pos] if self.kind == "sym" else X.cont[:, self.pos]
        return self._apply(self.rule, col), None

    def describe(self, names, classes, values=None) -> str:
        lines = [f"{names[self.feature]}:"]
        if self.kind == "sym":
            vals = values[self.pos] if values else [f"#{k}" for k in range(len(self.rule[1]))]
            lines.extend(f"\t{v}\t-> {classes[c]}" for v, c in zip(vals, self.rule[1]))
            lines.append(f"\t(unseen)\t-> {classes[self.default]}")
        else:
            thresholds, cls = self.rule[1], self.rule[2]
            if len(thresholds) == 0:
                lines.append(f"\t(any)\t-> {classes[cls[0]]}")
            for k, c in enumerate(cls):
                lo = "" if k == 0 else f">= {_fmt(thresholds[k - 1])}"
                hi = "" if k == len(thresholds) else f"< {_fmt(thresholds[k])}"
                if lo or hi:
                    lines.append(f"\t{' and '.join(x for x in (lo, hi) if x)}\t-> {classes[c]}")
        lines.append(f"({self.n_train - self.errors}/{self.n_train} instances correct)")
        return "\n".join(lines) + "\n"


# -- decision table ---------------------------------------------------------------------

def _compress(keys: np.ndarray) -> tuple[np.ndarray, int]:
    uniq, inverse = np.unique(keys, return_inverse=True)
    return inverse.astype(np.int64), len(uniq)


class DecisionTableLearner:
    """Majority table over a feature subset chosen by best-first forward
    search, scored by leave-one-out accuracy. Continuous features are
    binned equal-width; unmatched lookups fall back to the global majority."""

    def __init__(self, spec):
        self.bins = spec.bins
        self.stale_limit = spec.stale_limit

    def _table_codes(self, X: Encoded) -> np.ndarray:
        cols = []
        for f, kind, pos in X.columns():
            if kind == "sym":
                cols.append(X.sym[:, pos])
            else:
                lo, hi = self.lows[pos], self.highs[pos]
                width = (hi - lo) / self.bins if hi > lo else 1.0
                b = np.floor((X.cont[:, pos] - lo) / width) if hi > lo else np.zeros(len(X))
                cols.append(np.clip(b, 0, self.bins - 1).astype(np.int64))
        return np.stack(cols, axis=1) if cols else np.zeros((len(X), 0), dtype=np.int64)

    def fit(self, X: Encoded, y: np.ndarray, n_classes: int):
        K = n_classes
        self.n_classes = K
        self.columns = X.columns()
        self.lows = X.cont.min(axis=0) if len(X) else np.zeros(X.cont.shape[1])
        self.highs = X.cont.max(axis=0) if len(X) else np.ones(X.cont.shape[1])
        F = self._table_codes(X)
        n, m = F.shape
        onehot = np.eye(K)[y]
        global_counts = onehot.sum(axis=0)
        self.global_dist = global_counts / global_counts.sum()
        self.default = int(np.argmax(global_counts))

        def loo_accuracy(groups, n_groups):
            counts = np.bincount(groups * K + y, minlength=n_groups * K).reshape(n_groups, K)
            own = counts[groups] - onehot
            empty = own.sum(axis=1) == 0
            own[empty] = global_counts - onehot[empty]
            return float(np.mean(own.argmax(axis=1) == y))

        def group_of(subset):
            g = np.zeros(n, dtype=np.int64)
            for j in subset:
                g, _ = _compress(g * (F[:, j].max() + 1) + F[:, j])
            return g

        start = loo_accuracy(np.zeros(n, dtype=np.int64), 1)
        best_subset, best_merit = (), start
        visited = {()}
        counter = 0
        heap = [(-start, 0, ())]
        stale = 0
        while heap and stale < self.stale_limit:
            _, _, subset = heapq.heappop(heap)
            parent = group_of(subset)
            improved = False
            for j in range(m):
                if j in subset:
                    continue
                child = tuple(sorted(subset + (j,)))
                if child in visited:
                    continue
                visited.add(child)
                g, ng = _compress(parent * (F[:, j].max() + 1) + F[:, j])
                merit = loo_accuracy(g, ng)
                counter += 1
                heapq.heappush(heap, (-merit, counter, child))
                if merit > best_merit + 1e-5:
                    best_subset, best_merit = child, merit
                    improved = True
            stale = 0 if improved else stale + 1
        self.subset = best_subset
        self.merit = best_merit
        keys = F[:, list(best_subset)]
        self.table = {}
        if best_subset:
            uniq, inverse = np.unique(keys, axis=0, return_inverse=True)
            counts = np.zeros((len(uniq), K))
            np.add.at(counts, (inverse.ravel(), y), 1.0)
            for row, c in zip(uniq, counts):
                self.table[tuple(row.tolist())] = c
        return self

    def predict(self, X: Encoded):
        F = self._table_codes(X)[:, list(self.subset)]
        n = len(X)
        scores = np.tile(self.global_dist, (n, 1))
        if self.subset:
            for i, row in enumerate(F.tolist()):
                c = self.table.get(tuple(row))
                if c is not None:
                    scores[i] = c / c.sum()
        return scores.argmax(axis=1), scores

    def describe(self, names, classes, values=None) -> str:
        feats = [self.columns[j][0] for j in self.subset]
        lines = ["Decision table (best-first forward selection, leave-one-out)",
                 f"selected: {', '.join(names[f] for f in feats) or '(none)'}",
                 f"leave-one-out accuracy: {self.merit:.4f}",
                 f"rules: {len(self.table)}"]
        for key in sorted(self.table):
            c = self.table[key]
            cond = " and ".join(f"{names[f]}#{v}" for f, v in zip(feats, key))
            lines.append(f"{cond} => {classes[int(np.argmax(c))]} ({int(c.sum())})")
        lines.append(f"otherwise => {classes[self.default]}")
        return "\n".join(lines) + "\n"


# -- RIPPER --------------------------------------------------------------------------------

MAX_DL_SURPLUS = 64.0


def _log2(x):
    return math.log2(x) if x > 0 else 0.0


def subset_dl(t: float, k: float, p: float) -> float:
    """Bits to identify ``k`` elements of a set of ``t`` given rate ``p``."""
    bits = 0.0
    if k > 0:
        bits -= k * math.log2(p) if p > 0 else 1e9
    if t - k > 0:
        bits -= (t - k) * math.log2(1 - p) if p < 1 else 1e9
    return bits


def theory_dl(n_conditions: int, n_all: int) -> float:
    k = n_conditions
    if k == 0:
        return 0.0
    bits = _log2(k)
    if k > 1:
        bits += 2 * _log2(bits)
    bits += subset_dl(n_all, k, k / n_all)
    return 0.5 * bits


def data_dl(exp_fp_over_err: float, cover: float, uncover: float, fp: float, fn: float) -> float:
    total = _log2(cover + uncover + 1)
    if cover > uncover:
        exp_err = exp_fp_over_err * (fp + fn)
        cover_bits = subset_dl(cover, fp, exp_err / cover)
        uncover_bits = subset_dl(uncover, fn, fn / uncover) if uncover > 0 else 0.0
    else:
        exp_err = (1 - exp_fp_over_err) * (fp + fn)
        cover_bits = subset_dl(cover, fp, fp / cover) if cover > 0 else 0.0
        uncover_bits = subset_dl(uncover, fn, exp_err / uncover) if uncover > 0 else 0.0
    return total + cover_bits + uncover_bits


class Ripper:
    """Repeated incremental pruning to produce error reduction.

    Classes are learned in increasing frequency; each class's rules are grown
    by FOIL information gain on two thirds of the remaining data, pruned on
    the rest, and added until the description length grows more than 64 bits
    over its minimum. The rule set is then optimized ``optimizations`` times
    (replacement and revision variants, chosen by description length).
    Conditions are ``attr = v`` for symbolic and ``attr <= t``/``attr >= t``
    for numeric attributes.
    """

    def __init__(self, spec):
        self.folds = spec.folds
        self.min_no = spec.min_no
        self.optimizations = spec.optimizations
        self.seed = spec.seed
        self.use_pruning = spec.use_pruning

    # -- conditions --------------------------------------------------------------

    def _mask(self, cond, rows):
        kind, pos, op, value = cond[1:]
        if kind == "sym":
            return self.X.sym[rows, pos] == value
        col = self.X.cont[rows, pos]
        return col <= value if op == "<=" else col >= value

    def _covers(self, rule, rows):
        m = np.ones(len(rows), dtype=bool)
        for cond in rule:
            if not m.any():
                break
            m &= self._mask(cond, rows)
        return m

    def _covers_any(self, rules, rows):
        m = np.zeros(len(rows), dtype=bool)
        for rule in rules:
            m |= self._covers(rule, rows)
        return m

    # -- growing and pruning ----------------------------------------------------------

    def _grow(self, pos_rows, neg_rows, rule=()):
        rule = list(rule)
        rows = np.concatenate([pos_rows, neg_rows])
        is_pos = np.concatenate([np.ones(len(pos_rows), bool), np.zeros(len(neg_rows), bool)])
        keep = self._covers(rule, rows)
        rows, is_pos = rows[keep], is_pos[keep]
        while len(rows):
            p0 = int(is_pos.sum())
            n0 = len(rows) - p0
            if n0 == 0 or p0 == 0:
                break
            base = math.log2((p0 + 1.0) / (p0 + n0 + 1.0))
            best, best_gain = None, 0.0
            for f, kind, pos in self.columns:
                if kind == "sym":
                    cand = self._best_symbolic(f, pos, rows, is_pos, base)
                else:
                    cand = self._best_numeric(f, pos, rows, is_pos, base)
                if cand is not None and cand[0] > best_gain + 1e-12:
                    best_gain, best = cand
            if best is None:
                break
            rule.append(best)
            m = self._mask(best, rows)
            rows, is_pos = rows[m], is_pos[m]
        return tuple(rule)

    def _best_symbolic(self, f, pos, rows, is_pos, base):
        codes = self.X.sym[rows, pos]
        size = self.X.sym_sizes[pos]
        p = np.bincount(codes[is_pos], minlength=size).astype(float)
        t = np.bincount(codes, minlength=size).astype(float)
        ok = p >= self.min_no
        if not ok.any():
            return None
        with np.errstate(divide="ignore", invalid="ignore"):
            gain = np.where(ok, p * (np.log2((p + 1.0) / (t + 1.0)) - base), -np.inf)
        v = int(np.argmax(gain))
        if not np.isfinite(gain[v]) or gain[v] <= 0:
            return None
        return float(gain[v]), (f, "sym", pos, "==", v)

    def _best_numeric(self, f, pos, rows, is_pos, base):
        vals = self.X.cont[rows, pos]
        order = np.argsort(vals, kind="stable")
        vs = vals[order]
        cp = np.cumsum(is_pos[order])
        n = len(vs)
        cut = np.flatnonzero(vs[:-1] < vs[1:])
        if len(cut) == 0:
            return None
        P = cp[-1]
        # "<= t" covers [0..i], ">= t" covers [i+1..n-1]
        p_le = cp[cut].astype(float)
        t_le = (cut + 1).astype(float)
        p_ge = P - p_le
        t_ge = n - t_le
        thresholds = (vs[cut] + vs[cut + 1]) / 2.0
        best = None
        for op, p, t in (("<=", p_le, t_le), (">=", p_ge, t_ge)):
            ok = p >= self.min_no
            if not ok.any():
                continue
            gain = np.where(ok, p * (np.log2((p + 1.0) / (t + 1.0)) - base), -np.inf)
            k = int(np.argmax(gain))
            if gain[k] > 0 and (best is None or gain[k] > best[0] + 1e-12):
                best = (float(gain[k]), (f, "cont", pos, op, float(thresholds[k])))
        return best

    def _prune(self, rule, pos_rows, neg_rows):
        """Keep the prefix maximizing (p + 1) / (p + n + 2) on the pruning
        data; the shortest prefix wins ties."""
        if len(rule) <= 1 or (len(pos_rows) + len(neg_rows)) == 0:
            return rule
        best_len, best_worth = len(rule), -1.0
        mp = np.ones(len(pos_rows), bool)
        mn = np.ones(len(neg_rows), bool)
        for L in range(1, len(rule) + 1):
            cond = rule[L - 1]
            mp &= self._mask(cond, pos_rows)
            mn &= self._mask(cond, neg_rows)
            worth = (mp.sum() + 1.0) / (mp.sum() + mn.sum() + 2.0)
            if worth > best_worth + 1e-12:
                best_len, best_worth = L, worth
        return rule[:best_len]

    def _prune_in_context(self, rule, others, pos_rows, neg_rows):
        """Prune a rule to maximize the accuracy of the whole rule set
        (``others`` plus the rule) on the pruning data."""
        if len(rule) <= 1 or (len(pos_rows) + len(neg_rows)) == 0:
            return rule
        op = self._covers_any(others, pos_rows)
        on = self._covers_any(others, neg_rows)
        best_len, best_acc = len(rule), -1.0
        mp = np.ones(len(pos_rows), bool)
        mn = np.ones(len(neg_rows), bool)
        for L in range(1, len(rule) + 1):
            cond = rule[L - 1]
            mp &= self._mask(cond, pos_rows)
            mn &= self._mask(cond, neg_rows)
            acc = (np.sum(mp | op) + np.sum(~(mn | on))) / (len(pos_rows) + len(neg_rows))
            if acc > best_acc + 1e-12:
                best_len, best_acc = L, acc
        return rule[:best_len]

    def _split(self, pos_rows, neg_rows):
        """Stratified grow/prune split; the pruning part is one fold."""
        if not self.use_pruning:
            return pos_rows, neg_rows, pos_rows[:0], neg_rows[:0]
        out = []
        for rows in (pos_rows, neg_rows):
            shuffled = rows[self.rng.permutation(len(rows))]
            n_prune = len(rows) // self.folds
            out.append((shuffled[n_prune:], shuffled[:n_prune]))
        (gp, pp), (gn, pn) = out
        return gp, gn, pp, pn

    # -- description length --------------------------------------------------------------

    def _ruleset_dl(self, rules, pos_rows, neg_rows, exp_fp):
        theory = sum(theory_dl(len(r), self.n_all_conditions) for r in rules)
        cp = self._covers_any(rules, pos_rows)
        cn = self._covers_any(rules, neg_rows)
        cover = float(cp.sum() + cn.sum())
        uncover = float(len(pos_rows) + len(neg_rows)) - cover
        return theory + data_dl(exp_fp, cover, uncover, float(cn.sum()), float((~cp).sum()))

    # -- one class -------------------------------------------------------------------------

    def _cover_class(self, rules, pos_rows, neg_rows, all_pos, all_neg, exp_fp):
        """Add rules until positives run out or the description length stops
        paying off. ``pos_rows``/``neg_rows`` are the still-uncovered data."""
        rules = list(rules)
        min_dl = self._ruleset_dl(rules, all_pos, all_neg, exp_fp)
        while len(pos_rows):
            gp, gn, pp, pn = self._split(pos_rows, neg_rows)
            if len(gp) == 0:
                gp, gn = pos_rows, neg_rows
            rule = self._grow(gp, gn)
            if self.use_pruning:
                rule = self._prune(rule, pp, pn)
            if not rule:
                break
            covered_pos = self._covers(rule, pos_rows)
            if not covered_pos.any():
                break
            if self.use_pruning and len(pp) + len(pn):
                p = self._covers(rule, pp).sum()
                n = self._covers(rule, pn).sum()
                if p + n > 0 and n / (p + n) >= 0.5:
                    break
            rules.append(rule)
            dl = self._ruleset_dl(rules, all_pos, all_neg, exp_fp)
            min_dl = min(min_dl, dl)
            if dl > min_dl + MAX_DL_SURPLUS:
                break
            pos_rows = pos_rows[~covered_pos]
            neg_rows = neg_rows[~self._covers(rule, neg_rows)]
        return rules

    def _optimize(self, rules, all_pos, all_neg, exp_fp):
        for _ in range(self.optimizations):
            new_rules = []
            for i, rule in enumerate(rules):
                later = rules[i + 1:]
                pos_rows = all_pos[~self._covers_any(new_rules, all_pos)]
                neg_rows = all_neg[~self._covers_any(new_rules, all_neg)]
                if len(pos_rows) == 0:
                    continue
                gp, gn, pp, pn = self._split(pos_rows, neg_rows)
                if len(gp) == 0:
                    gp, gn = pos_rows, neg_rows
                candidates = [rule]
                replacement = self._grow(gp, gn)
                revision = self._grow(gp, gn, rule)
                for cand in (replacement, revision):
                    if self.use_pruning:
                        cand = self._prune_in_context(cand, new_rules + later, pp, pn)
                    if cand and cand not in candidates:
                        candidates.append(cand)
                scored = [(self._ruleset_dl(new_rules + [c] + later, all_pos, all_neg, exp_fp), k, c)
                          for k, c in enumerate(candidates)]
                new_rules.append(min(scored)[2])
            rules = new_rules
            pos_rows = all_pos[~self._covers_any(rules, all_pos)]
            neg_rows = all_neg[~self._covers_any(rules, all_neg)]
            if len(pos_rows):
                rules = self._cover_class(rules, pos_rows, neg_rows, all_pos, all_neg, exp_fp)
        return rules

    def _reduce(self, rules, all_pos, all_neg, exp_fp):
        """Delete rules whose removal lowers the description length."""
        rules = list(rules)
        for i in range(len(rules) - 1, -1, -1):
            trial = rules[:i] + rules[i + 1:]
            if self._ruleset_dl(trial, all_pos, all_neg, exp_fp) < self._ruleset_dl(rules, all_pos, all_neg, exp_fp):
                rules = trial
        return rules

    # -- fit / predict ----------------------------------------------------------------------

    def fit(self, X: Encoded, y: np.ndarray, n_classes: int):
        K = n_classes
        self.X = X
        self.columns = X.columns()
        self.n_classes = K
        self.rng = np.random.default_rng(self.seed)
        self.n_all_conditions = int(sum(X.sym_sizes) + sum(
            2 * len(np.unique(X.cont[:, j])) for j in range(X.cont.shape[1])))
        counts = np.bincount(y, minlength=K)
        order = sorted((c for c in range(K) if counts[c] > 0), key=lambda c: (counts[c], c))
        remaining = np.arange(len(y))
        self.rules = []  # (class, conditions)
        for c in order[:-1]:
            pos = remaining[y[remaining] == c]
            neg = remaining[y[remaining] != c]
            if len(pos) == 0:
                continue
            exp_fp = len(pos) / len(remaining)
            rules = self._cover_class([], pos, neg, pos, neg, exp_fp)
            if rules and self.optimizations:
                rules = self._optimize(rules, pos, neg, exp_fp)
            if rules:
                rules = self._reduce(rules, pos, neg, exp_fp)
            self.rules.extend((c, r) for r in rules)
            if rules:
                remaining = remaining[~self._covers_any(rules, remaining)]
        every = np.arange(len(y))
        self.rules = [(c, r) for c, r in self.rules if self._covers(r, every).sum() >= self.min_no]
        self.default = self._default_class(y)
        self.stats = [self._rule_stats(k, y) for k in range(len(self.rules))]
        del self.X, self.rng
        return self

    def _assign(self, X: Encoded, rows=None):
        saved = getattr(self, "X", None)
        self.X = X
        rows = np.arange(len(X)) if rows is None else rows
        out = np.full(len(rows), -1, dtype=np.int64)
        fired = np.full(len(rows), -1, dtype=np.int64)
        for k, (c, rule) in enumerate(self.rules):
            free = out < 0
            if not free.any():
                break
            m = self._covers(rule, rows[free])
            idx = np.flatnonzero(free)[m]
            out[idx] = c
            fired[idx] = k
        if saved is None:
            del self.X
        else:
            self.X = saved
        return out, fired

    def _default_class(self, y):
        out, _ = self._assign(self.X)
        rest = y[out < 0]
        counts = np.bincount(rest if len(rest) else y, minlength=self.n_classes)
        return int(np.argmax(counts))

    def _rule_stats(self, k, y):
        _, fired = self._assign(self.X)
        hit = fired == k
        return int(hit.sum()), int((y[hit] != self.rules[k][0]).sum())

    def predict(self, X: Encoded):
        out, _ = self._assign(X)
        out[out < 0] = self.default
        return out, None

    def describe(self, names, classes, values=None) -> str:
        lines = ["JRip rules:", "==========="]
        for (c, rule), (cov, err) in zip(self.rules, self.stats):
            conds = " and ".join(self._cond_text(cond, names, values) for cond in rule)
            lines.append(f"{conds} => {classes[c]} ({cov}/{err})")
        lines.append(f" => {classes[self.default]} (default)")
        lines.append(f"Number of Rules : {len(self.rules) + 1}")
        return "\n".join(lines) + "\n"

    @staticmethod
    def _cond_text(cond, names, values):
        f, kind, pos, op, value = cond
        if kind == "sym":
            return f"({names[f]} = {values[pos][value] if values else f'#{value}'})"
        return f"({names[f]} {op} {_fmt(value)})"
