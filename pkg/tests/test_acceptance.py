"""Acceptance checks, one test per criterion. Each records a PASS/FAIL line
that is repeated in the terminal summary."""

import csv
import hashlib
import io
import json
import os
import re
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from catnet import synth
from catnet.classifiers import default_specs
from catnet.cli import DATA_DIR_ENV, TEN_PERCENT_NAME, main
from catnet.ensemble import build_ensemble, evaluate_ensemble
from catnet.kdd_data import (
    ATTACK_CATEGORIES,
    TABLE1_COUNTS,
    TABLE2_COUNTS,
    Category,
    SampleSpec,
    largest_remainder,
    map_category,
    read_dataset,
    split_holdout,
    stratified_sample,
)
from catnet.metrics import CategoryMetrics, average_accuracy, confusion_from_codes, evaluate
from catnet.resources import fixture_path, load_table4
from catnet.selection import Assignment, SelectionPolicy, select

TESTS = Path(__file__).parent

# pinned limits
C1_SECONDS = 60.0
C5_SECONDS = 300.0
C6_SECONDS = 900.0
C6_AA_FLOOR = 0.75
C7_MATRICES = 1000
C4_ASSIGNMENTS = 6
C9_MIN_RATE = 1000.0

TREE_RULE = ("J48", "NBTree", "JRip", "OneR", "DecisionTable")
MODEL_1A = {"DoS": "JRip", "Probe": "JRip", "U2R": "DecisionTable", "R2L": "OneR"}
MODEL_1B = {"DoS": "J48", "Probe": "BayesNet", "U2R": "BayesNet", "R2L": "OneR"}


def sha(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


@pytest.fixture(scope="module")
def ten_percent(tmp_path_factory):
    """Official file when available, else the synthetic stand-in with the same counts."""
    env = os.environ.get(DATA_DIR_ENV)
    if env and (Path(env) / TEN_PERCENT_NAME).is_file():
        return Path(env) / TEN_PERCENT_NAME
    path = tmp_path_factory.mktemp("data") / TEN_PERCENT_NAME
    synth.ten_percent_like(0).write(path)
    return path


def _count_both_ways(source):
    t0 = time.perf_counter()
    parsed = read_dataset(source).category_counts()
    # second, line-level count straight through map_category
    by_label = {c: 0 for c in Category}
    with open(source, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                by_label[map_category(line.rstrip().rsplit(",", 1)[1])] += 1
    return parsed, by_label, time.perf_counter() - t0


def test_criterion_1_category_counts(verdict, ten_percent):
    env = os.environ.get(DATA_DIR_ENV)
    official = Path(env) / TEN_PERCENT_NAME if env else None
    if official is not None and official.is_file():
        source, expected = official, dict(TABLE1_COUNTS)
    else:
        source = fixture_path("kdd_mini_2000.txt")
        doc = json.loads(fixture_path("kdd_mini_2000.json").read_text())
        expected = {Category.parse(k): v for k, v in doc["counts"].items()}
    parsed, by_label, elapsed = _count_both_ways(source)
    ok = parsed == expected == by_label and elapsed <= C1_SECONDS
    detail = f"{source.name}: {[parsed[c] for c in Category]} in {elapsed:.1f}s (limit {C1_SECONDS:.0f}s)"
    if source != ten_percent:
        # full-size timing on the synthetic stand-in
        big, big_lines, big_s = _count_both_ways(ten_percent)
        ok = ok and big == big_lines == TABLE1_COUNTS and big_s <= C1_SECONDS
        detail += f"; synthetic full size {[big[c] for c in Category]} in {big_s:.1f}s"
    verdict(1, ok, detail)
    assert ok


def test_criterion_2_sampling(verdict, ten_percent, tmp_path):
    runs = []
    for k in range(2):
        out = tmp_path / f"run{k}"
        assert main(["sample", "--source", str(ten_percent), "--counts", "table2", "--seed", "1",
                     "--out", str(out)]) == 0
        runs.append(out)
    counts = read_dataset(runs[0] / "train.txt").category_counts()
    n = sum(counts.values())
    same = all(sha(runs[0] / f) == sha(runs[1] / f) for f in ("train.txt", "sample.json"))
    ok = n == 49_596 and counts == TABLE2_COUNTS and same
    verdict(2, ok, f"{n} records {[counts[c] for c in Category]}, reruns byte-identical={same}")
    assert ok


def test_criterion_3_selection(verdict):
    table = load_table4()
    a = {c.display: s for c, s in select(table, SelectionPolicy(aa_min=0.85)).idents().items()}
    b = {c.display: s for c, s in select(table, SelectionPolicy(aa_min=0.85, tt_budget_s=20)).idents().items()}
    ok = a == MODEL_1A and b == MODEL_1B
    verdict(3, ok, f"1(a)={a} 1(b)={b}")
    assert ok


def test_criterion_4_flag_metric_identity(verdict, split):
    train_set, test_set = split
    pool = [s for s in default_specs() if s.name not in ("MLP", "SMO")]
    rng = np.random.default_rng(4)
    cache, mismatches = {}, []
    for k in range(C4_ASSIGNMENTS):
        assignment = Assignment({c: pool[rng.integers(len(pool))] for c in ATTACK_CATEGORIES})
        for s in assignment.members.values():
            if s.ident not in cache:
                cache[s.ident] = evaluate(s, train_set, test_set)
        report = evaluate_ensemble(build_ensemble(assignment, train_set), test_set)
        for c, s in assignment.members.items():
            if report.per_category[c] != cache[s.ident].per_category[c]:
                mismatches.append((k, c.display, s.ident))
    ok = not mismatches
    verdict(4, ok, f"{C4_ASSIGNMENTS} random assignments, mismatches={mismatches}")
    assert ok


ORACLES = " or ".join([
    "one_r_matches_exhaustive_oracle", "lbk_agrees_with_brute_force", "naive_bayes_posterior_closed_form",
    "bayes_posteriors_sum_to_one", "mlp_gradients_match_central_differences", "smo_kkt_conditions",
    "jrip_rules_cover_at_least_two_instances", "tree_leaf_counts_sum_to_training_size",
    "bayesnet_graph_is_acyclic",
])


def test_criterion_5_oracle_suites(verdict):
    t0 = time.perf_counter()
    proc = subprocess.run([sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider",
                           str(TESTS / "test_classifiers.py"), "-k", ORACLES],
                          capture_output=True, text=True, cwd=TESTS.parent, check=False)
    elapsed = time.perf_counter() - t0
    tail = proc.stdout.strip().splitlines()[-1] if proc.stdout.strip() else proc.stderr[-200:]
    passed = re.search(r"(\d+) passed", tail)
    ok = proc.returncode == 0 and passed is not None and int(passed.group(1)) >= 11 and elapsed <= C5_SECONDS
    verdict(5, ok, f"{tail} ({elapsed:.0f}s, limit {C5_SECONDS:.0f}s)")
    assert ok, proc.stdout[-3000:]


def test_criterion_6_directional_sanity(verdict, ten_percent):
    data = read_dataset(ten_percent)
    spec = SampleSpec(largest_remainder(20_000, TABLE2_COUNTS), seed=6)
    sample = stratified_sample(data, spec)
    train_set, test_set = split_holdout(sample, 5_000, seed=6)
    small = stratified_sample(train_set, SampleSpec(largest_remainder(5_000, train_set.category_counts()), seed=6))
    aa, t0 = {}, time.perf_counter()
    for s in default_specs():
        if s.name in ("MLP", "SMO"):
            continue
        aa[s.name] = evaluate(s, train_set, test_set).aa
    elapsed = time.perf_counter() - t0
    for s in default_specs():
        if s.name in ("MLP", "SMO"):
            aa[s.name] = evaluate(s, small, test_set).aa
    nb = aa["NaiveBayes"]
    beats = all(aa[n] > nb for n in TREE_RULE)
    floor = all(v >= C6_AA_FLOOR for v in aa.values())
    ok = beats and floor and elapsed <= C6_SECONDS
    cells = ", ".join(f"{n} {v:.4f}" for n, v in aa.items())
    verdict(6, ok, f"tree/rule > NB={beats}, all >= {C6_AA_FLOOR}={floor}, {elapsed:.0f}s; {cells}")
    assert ok


def test_criterion_7_metric_oracle(verdict):
    rng = np.random.default_rng(7)
    bad = 0
    for _ in range(C7_MATRICES):
        n = int(rng.integers(1, 300))
        true = rng.integers(0, 5, n)
        pred = np.where(rng.random(n) < 0.6, true, rng.integers(0, 5, n))
        cm = confusion_from_codes(pred, true)
        for c in Category:
            pos, neg = true == c, true != c
            tp = (pred[pos] == c).sum() / pos.sum() if pos.any() else None
            fp = (pred[neg] == c).sum() / neg.sum() if neg.any() else None
            bad += CategoryMetrics.from_confusion(cm, c) != CategoryMetrics(tp, fp)
        bad += average_accuracy(cm) != (pred == true).sum() / n
    ok = bad == 0
    verdict(7, ok, f"{C7_MATRICES} random matrices, disagreements={bad}")
    assert ok


def _pipeline(source, out: Path, timing: bool):
    counts = "Normal=800,DoS=1200,Probe=300,U2R=40,R2L=160"
    steps = [
        ["sample", "--source", str(source), "--counts", counts, "--test-total", "1000", "--seed", "8",
         "--out", str(out / "sample")],
        ["bench", "--train", str(out / "sample/train.txt"), "--test", str(out / "sample/test.txt"),
         "--specs", "all", "--out", str(out / "bench")] + ([] if timing else ["--no-timing"]),
        ["select", "--table", str(out / "bench/table.json"), "--aa-min", "0.85", "--out", str(out / "select")],
        ["detect", "--assignment", str(out / "select/assignment.json"), "--train", str(out / "sample/train.txt"),
         "--input", str(out / "sample/test.txt"), "--out", str(out / "detect")],
        ["detect", "--assignment", str(out / "select/assignment.json"), "--train", str(out / "sample/train.txt"),
         "--input", str(out / "sample/test.txt"), "--stream", "--out", str(out / "stream")],
    ]
    for argv in steps[: 2 if timing else None]:
        assert main(argv) == 0, argv


def _mask_tt(path: Path) -> str:
    text = path.read_text()
    if path.suffix == ".json":
        doc = json.loads(text)
        for r in doc["rows"]:
            r["tt_s"] = None
        return json.dumps(doc, sort_keys=True)
    if path.suffix == ".csv":
        rows = list(csv.reader(io.StringIO(text)))
        return "\n".join(",".join(r[:-1]) for r in rows)
    return "\n".join(line.rsplit("  ", 1)[0] for line in text.splitlines())


def _stream_summary(path: Path) -> str:
    doc = json.loads(path.read_text())
    doc.pop("timing")
    return json.dumps(doc, sort_keys=True)


def test_criterion_8_pipeline_reproducibility(verdict, ten_percent, tmp_path):
    strict, timed = [], []
    for k in range(2):
        _pipeline(ten_percent, tmp_path / f"strict{k}", timing=False)
        _pipeline(ten_percent, tmp_path / f"timed{k}", timing=True)
        strict.append(tmp_path / f"strict{k}")
        timed.append(tmp_path / f"timed{k}")
    files = sorted(p.relative_to(strict[0]) for p in strict[0].rglob("*") if p.is_file())
    differ = []
    for f in files:
        a, b = strict[0] / f, strict[1] / f
        same = (_stream_summary(a) == _stream_summary(b)) if f == Path("stream/summary.json") \
            else a.read_bytes() == b.read_bytes()
        if not same:
            differ.append(str(f))
    timed_same = all(_mask_tt(timed[0] / "bench" / n) == _mask_tt(timed[1] / "bench" / n)
                     for n in ("table.csv", "table.json", "table.txt"))
    ok = len(files) == 12 and not differ and timed_same
    verdict(8, ok, f"{len(files)} report files, differing={differ}; timed tables equal with TT masked={timed_same}")
    assert ok


def test_criterion_9_stream_batch(verdict, tmp_path, mini_path):
    table = tmp_path / "sel"
    assert main(["select", "--table", str(fixture_path("table4.json")), "--aa-min", "0.85",
                 "--tt-budget", "20", "--out", str(table)]) == 0
    assignment = json.loads((table / "assignment.json").read_text())
    base = ["detect", "--assignment", str(table / "assignment.json"), "--train", str(mini_path),
            "--input", str(mini_path)]
    assert main(base + ["--out", str(tmp_path / "batch")]) == 0
    assert main(base + ["--stream", "--out", str(tmp_path / "stream")]) == 0
    same = (tmp_path / "batch/results.txt").read_bytes() == (tmp_path / "stream/results.txt").read_bytes()
    timing = json.loads((tmp_path / "stream/summary.json").read_text())["timing"]
    rate = timing["records_per_s"]
    members = {k: v["classifier"] for k, v in assignment["members"].items()}
    ok = same and rate > C9_MIN_RATE
    verdict(9, ok, f"batch == stream: {same}; {rate:.0f} rec/s (floor {C9_MIN_RATE:.0f}); members {members}")
    assert ok
