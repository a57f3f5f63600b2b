"""Command-line entry point: ``catnet sample | bench | select | detect | fetch-data``.

Exit codes: 0 success, 1 usage, 2 data error, 3 selection error, 4 internal error.
"""

from __future__ import annotations

import argparse
import gzip
import hashlib
import json
import os
import shutil
import sys
import urllib.request
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import synth
from .classifiers import default_specs, spec_from_ident
from .ensemble import DEFAULT_PRIORITY, batch_lines, build_ensemble, stream_detect
from .errors import CatnetError, NoQualifiedClassifierError
from .kdd_data import (
    TABLE1_COUNTS,
    TABLE2_COUNTS,
    Category,
    SampleSpec,
    read_dataset,
    split_holdout,
    stratified_sample,
)
from .metrics import PerformanceTable, benchmark
from .selection import Assignment, SelectionPolicy, explain, select

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_SELECTION, EXIT_INTERNAL = 0, 1, 2, 3, 4
DATA_DIR_ENV = "CATNET_DATA_DIR"
TEN_PERCENT_NAME = "kddcup.data_10_percent"
TEN_PERCENT_URL = "http://kdd.ics.uci.edu/databases/kddcup99/kddcup.data_10_percent.gz"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def data_dir() -> Path:
    return Path(os.environ.get(DATA_DIR_ENV) or Path.home() / ".cache" / "catnet")


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _write_json(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _file_info(path) -> dict:
    return {"file": Path(path).name, "sha256": sha256_file(path)}


def parse_counts(text: str) -> dict[Category, int]:
    """``table2``, ``table1`` or ``Normal=10,DoS=20,...`` (missing categories are 0)."""
    key = text.strip().lower()
    if key == "table2":
        return dict(TABLE2_COUNTS)
    if key == "table1":
        return dict(TABLE1_COUNTS)
    out = {}
    for part in filter(None, (p.strip() for p in text.split(","))):
        name, _, value = part.partition("=")
        try:
            out[Category.parse(name)] = int(value)
        except ValueError:
            raise UsageError(f"bad count {part!r}; expected Category=N") from None
    return out


def _default_source() -> Path | None:
    for name in (TEN_PERCENT_NAME, TEN_PERCENT_NAME + ".gz"):
        p = data_dir() / name
        if p.exists():
            return p
    return None


# -- commands --------------------------------------------------------------------------

def cmd_sample(args) -> int:
    source = Path(args.source) if args.source else _default_source()
    if source is None:
        raise UsageError(f"no --source given and no {TEN_PERCENT_NAME} under ${DATA_DIR_ENV}")
    counts = parse_counts(args.counts)
    ds = read_dataset(source)
    spec = SampleSpec(counts, seed=args.seed)
    train_set = stratified_sample(ds, spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    train_set.write(out / "train.txt")
    doc = {
        "seed": args.seed,
        "counts": {c.display: n for c, n in spec.per_category_counts.items()},
        "total": spec.total,
        "source": _file_info(source),
        "train": _file_info(out / "train.txt"),
    }
    if args.test_total:
        rest = ds.take(np.flatnonzero(~np.isin(ds.ids, train_set.ids)))
        _, test_set = split_holdout(rest, args.test_total, seed=args.seed)
        test_set.write(out / "test.txt")
        doc["test_total"] = args.test_total
        doc["test"] = _file_info(out / "test.txt")
        doc["test_counts"] = {c.display: n for c, n in test_set.category_counts().items()}
    _write_json(out / "sample.json", doc)
    print(f"wrote {len(train_set)} training records to {out / 'train.txt'}")
    return EXIT_OK


def _parse_specs(text: str):
    if text.strip().lower() in ("all", "default", "defaults"):
        return default_specs()
    return [spec_from_ident(s) for s in _split_idents(text)]


def _split_idents(text: str) -> list[str]:
    """Split on commas outside braces (identifiers may carry JSON)."""
    out, depth, cur = [], 0, ""
    for ch in text:
        if ch == "," and depth == 0:
            out.append(cur.strip())
            cur = ""
            continue
        depth += ch == "{"
        depth -= ch == "}"
        cur += ch
    if cur.strip():
        out.append(cur.strip())
    return out


def cmd_bench(args) -> int:
    specs = _parse_specs(args.specs)
    train_set = read_dataset(args.train)
    test_set = read_dataset(args.test)
    meta = {
        "train_provenance": _file_info(args.train),
        "test_provenance": _file_info(args.test),
        "seeds": {s.ident: getattr(s, "seed", getattr(s, "random_seed", None)) for s in specs},
    }
    table = benchmark(specs, train_set, test_set, workers=args.workers, metadata=meta)
    if args.no_timing:
        # wall-clock TT is the only non-deterministic column
        table = PerformanceTable(tuple(replace(r, tt_s=None) for r in table.rows), table.metadata)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "table.csv").write_text(table.to_csv(), encoding="utf-8")
    (out / "table.json").write_text(table.to_json(), encoding="utf-8")
    (out / "table.txt").write_text(table.render(), encoding="utf-8")
    print(table.render(), end="")
    if all(not r.ok for r in table.rows):
        print("every classifier failed", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


def load_table(path) -> PerformanceTable:
    text = Path(path).read_text(encoding="utf-8")
    if text.lstrip().startswith("{"):
        return PerformanceTable.from_json(text)
    return PerformanceTable.from_csv(text)


def cmd_select(args) -> int:
    table = load_table(args.table)
    policy = SelectionPolicy(aa_min=args.aa_min, tt_budget_s=args.tt_budget)
    trace = explain(table, policy)
    assignment = select(table, policy)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "assignment.json").write_text(assignment.to_json(), encoding="utf-8")
    (out / "trace.txt").write_text(trace.render(), encoding="utf-8")
    print(trace.render(), end="")
    return EXIT_OK


def _priority(text: str | None):
    if not text:
        return DEFAULT_PRIORITY
    return tuple(Category.parse(p) for p in text.split(","))


def cmd_detect(args) -> int:
    assignment_path = Path(args.assignment)
    assignment = Assignment.from_json(assignment_path.read_text(encoding="utf-8"))
    train_set = read_dataset(args.train)
    ensemble = build_ensemble(assignment, train_set, _priority(args.priority))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.input in (None, "-"):
        source = sys.stdin
        input_info = {"file": "-"}
    else:
        source = open(args.input, encoding="utf-8")
        input_info = _file_info(args.input)
    summary = {
        "assignment": _file_info(assignment_path),
        "train": _file_info(args.train),
        "input": input_info,
        "priority": [c.display for c in ensemble.priority],
        "mode": "stream" if args.stream else "batch",
    }
    try:
        with open(out / "results.txt", "w", encoding="utf-8") as sink:
            if args.stream:
                s = stream_detect(ensemble, source, sink, parallel=args.parallel)
                stats = s.to_json()
                summary.update({k: stats[k] for k in ("records", "malformed", "flag_counts", "resolved_counts")})
                summary["timing"] = {k: stats[k] for k in ("elapsed_s", "records_per_s", "member_latency_s")}
            else:
                lines, good, bad = batch_lines(ensemble, source)
                sink.writelines(line + "\n" for line in lines)
                summary.update(_line_counts(lines, good, bad))
    finally:
        if source is not sys.stdin:
            source.close()
    _write_json(out / "summary.json", summary)
    print(json.dumps(summary, indent=2, sort_keys=True))
    return EXIT_OK


def _line_counts(lines, good, bad) -> dict:
    flags = {c.display: 0 for c in DEFAULT_PRIORITY[::-1]}
    resolved = {c.display: 0 for c in Category}
    for line in lines:
        _, label, raised = line.split(",", 2)
        if label == "malformed":
            continue
        resolved[label] += 1
        for f in filter(None, raised.split("|")):
            flags[f] += 1
    return {"records": good, "malformed": bad, "flag_counts": flags, "resolved_counts": resolved}


def cmd_fetch_data(args) -> int:
    dest = Path(args.dest) if args.dest else data_dir()
    dest.mkdir(parents=True, exist_ok=True)
    target = dest / TEN_PERCENT_NAME
    if args.synthetic:
        synth.ten_percent_like(args.seed).write(target)
        origin = f"synthetic(seed={args.seed})"
    else:
        gz = dest / (TEN_PERCENT_NAME + ".gz")
        try:
            with urllib.request.urlopen(args.url, timeout=60) as resp, open(gz, "wb") as fh:
                shutil.copyfileobj(resp, fh)
        except OSError as exc:
            print(f"download failed: {exc}", file=sys.stderr)
            return EXIT_DATA
        if args.sha256 and sha256_file(gz) != args.sha256.lower():
            print("checksum mismatch for the downloaded archive", file=sys.stderr)
            return EXIT_DATA
        with gzip.open(gz, "rb") as src, open(target, "wb") as dst:
            shutil.copyfileobj(src, dst)
        origin = args.url
    counts = read_dataset(target).category_counts()
    ok = all(counts[c] == TABLE1_COUNTS[c] for c in Category)
    manifest = {"origin": origin, **_file_info(target),
                "counts": {c.display: n for c, n in counts.items()}, "matches_table1": ok}
    _write_json(dest / "manifest.json", manifest)
    print(json.dumps(manifest, indent=2, sort_keys=True))
    if not ok:
        print("category counts differ from the expected 10% file counts", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


# -- parser --------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="catnet", description="Per-category intrusion detection benchmark and ensemble.")
    p.add_argument("--config", help="JSON file with option defaults (flags override it)")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("sample", help="draw a stratified training sample (and optional holdout)")
    s.add_argument("--source", help=f"KDD-format file (default: ${DATA_DIR_ENV}/{TEN_PERCENT_NAME})")
    s.add_argument("--counts", default="table2", help="table2, table1 or Normal=N,DoS=N,...")
    s.add_argument("--test-total", type=int, default=0, help="holdout size drawn from the remaining records")
    s.add_argument("--seed", type=int, default=1)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_sample)

    b = sub.add_parser("bench", help="train and evaluate classifiers")
    b.add_argument("--train", required=True)
    b.add_argument("--test", required=True)
    b.add_argument("--specs", default="all", help="'all' or comma-separated classifier identifiers")
    b.add_argument("--workers", type=int, default=1)
    b.add_argument("--no-timing", action="store_true",
                   help="leave TT undefined so reruns are byte-identical")
    b.add_argument("--out", required=True)
    b.set_defaults(func=cmd_bench)

    c = sub.add_parser("select", help="pick one classifier per attack category")
    c.add_argument("--table", required=True, help="table.json or table.csv from bench")
    c.add_argument("--aa-min", type=float, default=0.85)
    c.add_argument("--tt-budget", type=float, default=None, help="seconds; omit for no budget")
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_select)

    d = sub.add_parser("detect", help="build the ensemble and label connections")
    d.add_argument("--assignment", required=True)
    d.add_argument("--train", required=True)
    d.add_argument("--input", default="-", help="KDD-format file, '-' for standard input")
    d.add_argument("--stream", action="store_true", help="record-at-a-time detection")
    d.add_argument("--parallel", action="store_true", help="run members on a thread pool per record")
    d.add_argument("--priority", help="conflict order, e.g. U2R,R2L,Probe,DoS")
    d.add_argument("--out", required=True)
    d.set_defaults(func=cmd_detect)

    f = sub.add_parser("fetch-data", help="download (or synthesize) the 10%% KDD file and check its counts")
    f.add_argument("--dest", help=f"directory (default: ${DATA_DIR_ENV} or ~/.cache/catnet)")
    f.add_argument("--url", default=TEN_PERCENT_URL)
    f.add_argument("--sha256", help="expected SHA-256 of the downloaded archive")
    f.add_argument("--synthetic", action="store_true", help="write a synthetic stand-in instead of downloading")
    f.add_argument("--seed", type=int, default=0)
    f.set_defaults(func=cmd_fetch_data)
    return p


def _apply_config(parser: argparse.ArgumentParser, argv) -> None:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    try:
        cfg = json.loads(Path(known.config).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {known.config}: {exc}") from None
    subparsers = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    for name, sp in subparsers.choices.items():
        section = dict(cfg.get(name.replace("-", "_"), {}) or cfg.get(name, {}))
        section.update({k: v for k, v in cfg.items() if not isinstance(v, dict)})
        dests = {a.dest for a in sp._actions}
        defaults = {k.replace("-", "_"): v for k, v in section.items() if k.replace("-", "_") in dests}
        for a in sp._actions:
            if a.dest in defaults:
                a.required = False
        sp.set_defaults(**defaults)


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit as exc:
        return int(exc.code or 0)
    except UsageError as exc:
        print(f"catnet: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NoQualifiedClassifierError as exc:
        print(f"catnet: {exc}", file=sys.stderr)
        return EXIT_SELECTION
    except (CatnetError, OSError, ValueError, KeyError) as exc:
        print(f"catnet: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # pragma: no cover - last resort
        print(f"catnet: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
