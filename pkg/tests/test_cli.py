import json
from collections import Counter
import shutil
import subprocess
import sys

import pytest

from catnet import cli
from catnet.cli import EXIT_DATA, EXIT_OK, EXIT_SELECTION, EXIT_USAGE, main
from catnet.kdd_data import Category, read_dataset
from catnet.metrics import PerformanceTable
from catnet.resources import MINI_COUNTS, fixture_path
from catnet.selection import Assignment

TABLE4 = str(fixture_path("table4.json"))


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def sampled(tmp_path_factory, mini_path):
    out = tmp_path_factory.mktemp("sample")
    assert run("sample", "--source", mini_path, "--counts", "Normal=350,DoS=450,Probe=125,U2R=20,R2L=55",
               "--test-total", 500, "--seed", 3, "--out", out) == EXIT_OK
    return out


def test_sample_writes_files_and_provenance(sampled):
    doc = json.loads((sampled / "sample.json").read_text())
    assert doc["seed"] == 3 and doc["total"] == 1000
    assert doc["counts"] == {"Normal": 350, "DoS": 450, "Probe": 125, "U2R": 20, "R2L": 55}
    assert len((sampled / "train.txt").read_text().splitlines()) == 1000
    assert len((sampled / "test.txt").read_text().splitlines()) == 500
    assert doc["source"]["sha256"] == cli.sha256_file(fixture_path("kdd_mini_2000.txt"))
    # disjoint by record: together they never use a line more often than the source has it
    used = Counter((sampled / "train.txt").read_text().splitlines() + (sampled / "test.txt").read_text().splitlines())
    assert not used - Counter(fixture_path("kdd_mini_2000.txt").read_text().splitlines())


def test_sample_is_byte_reproducible(tmp_path, mini_path, sampled):
    out = tmp_path / "again"
    run("sample", "--source", mini_path, "--counts", "Normal=350,DoS=450,Probe=125,U2R=20,R2L=55",
        "--test-total", 500, "--seed", 3, "--out", out)
    for name in ("train.txt", "test.txt", "sample.json"):
        assert (out / name).read_bytes() == (sampled / name).read_bytes()


def test_sample_zero_counts(tmp_path, mini_path):
    assert run("sample", "--source", mini_path, "--counts", "Normal=0", "--out", tmp_path) == EXIT_OK
    assert (tmp_path / "train.txt").read_text() == ""


def test_sample_errors(tmp_path, mini_path):
    assert run("sample", "--source", mini_path, "--counts", "U2R=41", "--out", tmp_path) == EXIT_DATA
    assert run("sample", "--source", tmp_path / "missing.txt", "--out", tmp_path) == EXIT_DATA
    assert run("sample", "--source", mini_path, "--counts", "DoS=abc", "--out", tmp_path) == EXIT_USAGE


def test_sample_uses_data_dir_env(tmp_path, monkeypatch, mini_path):
    shutil.copy(mini_path, tmp_path / cli.TEN_PERCENT_NAME)
    monkeypatch.setenv(cli.DATA_DIR_ENV, str(tmp_path))
    out = tmp_path / "out"
    assert run("sample", "--counts", "DoS=10", "--out", out) == EXIT_OK
    assert len(read_dataset(out / "train.txt")) == 10
    monkeypatch.setenv(cli.DATA_DIR_ENV, str(tmp_path / "empty"))
    assert run("sample", "--counts", "DoS=10", "--out", out) == EXIT_USAGE


def test_usage_errors(tmp_path):
    assert run() == EXIT_USAGE
    assert run("no-such-command") == EXIT_USAGE
    assert run("select", "--table", TABLE4) == EXIT_USAGE  # --out missing
    assert run("--config", tmp_path / "nope.json", "select", "--table", TABLE4, "--out", tmp_path) == EXIT_USAGE


def test_help_exits_zero(capsys):
    assert run("--help") == EXIT_OK
    assert "sample" in capsys.readouterr().out


# -- bench ----------------------------------------------------------------------------------

def test_bench_one_spec(sampled, tmp_path):
    assert run("bench", "--train", sampled / "train.txt", "--test", sampled / "test.txt",
               "--specs", "OneR", "--out", tmp_path) == EXIT_OK
    table = PerformanceTable.from_json((tmp_path / "table.json").read_text())
    assert [r.ident for r in table.rows] == ["OneR"]
    assert table.metadata["train_provenance"]["sha256"] == cli.sha256_file(sampled / "train.txt")


@pytest.fixture(scope="module")
def bench_all(sampled, tmp_path_factory):
    out = tmp_path_factory.mktemp("bench")
    assert run("bench", "--train", sampled / "train.txt", "--test", sampled / "test.txt",
               "--specs", "all", "--workers", 2, "--out", out) == EXIT_OK
    return out


def test_bench_all_ten_round_trips(bench_all):
    table = PerformanceTable.from_json((bench_all / "table.json").read_text())
    assert len(table) == 10 and all(r.ok for r in table.rows)
    from_csv = PerformanceTable.from_csv((bench_all / "table.csv").read_text())
    assert from_csv == table
    assert (bench_all / "table.txt").read_text() == table.render()


def test_bench_no_timing_is_byte_stable(sampled, tmp_path):
    for k in range(2):
        assert run("bench", "--train", sampled / "train.txt", "--test", sampled / "test.txt",
                   "--specs", "OneR,NaiveBayes", "--no-timing", "--out", tmp_path / str(k)) == EXIT_OK
    for name in ("table.csv", "table.json", "table.txt"):
        assert (tmp_path / "0" / name).read_bytes() == (tmp_path / "1" / name).read_bytes()
    table = PerformanceTable.from_json((tmp_path / "0" / "table.json").read_text())
    assert all(r.tt_s is None for r in table.rows)


def test_bench_all_rows_failing(tmp_path, mini_path):
    smurf = [line for line in fixture_path("kdd_mini_2000.txt").read_text().splitlines() if line.endswith("smurf.")]
    one = tmp_path / "one.txt"
    one.write_text("\n".join(smurf[:50]) + "\n")
    assert run("bench", "--train", one, "--test", mini_path, "--specs", "SMO", "--out", tmp_path) == EXIT_DATA


def test_bench_unknown_spec(sampled, tmp_path):
    assert run("bench", "--train", sampled / "train.txt", "--test", sampled / "test.txt",
               "--specs", "Bogus", "--out", tmp_path) == EXIT_DATA


# -- select --------------------------------------------------------------------------------

@pytest.mark.parametrize("flags, expected", [
    ((), {"DoS": "JRip", "Probe": "JRip", "U2R": "DecisionTable", "R2L": "OneR"}),
    (("--tt-budget", 20), {"DoS": "J48", "Probe": "BayesNet", "U2R": "BayesNet", "R2L": "OneR"}),
])
def test_select_reproduces_models(tmp_path, flags, expected):
    assert run("select", "--table", TABLE4, "--aa-min", 0.85, *flags, "--out", tmp_path) == EXIT_OK
    a = Assignment.from_json((tmp_path / "assignment.json").read_text())
    assert {c.display: s for c, s in a.idents().items()} == expected
    assert "selected:" in (tmp_path / "trace.txt").read_text()


def test_select_impossible_threshold(tmp_path):
    assert run("select", "--table", TABLE4, "--aa-min", 0.999, "--out", tmp_path) == EXIT_SELECTION
    assert run("select", "--table", TABLE4, "--aa-min", 1.01, "--out", tmp_path) == EXIT_DATA


def test_select_reads_bench_csv(bench_all, tmp_path):
    assert run("select", "--table", bench_all / "table.csv", "--aa-min", 0.5, "--out", tmp_path) == EXIT_OK


def test_config_file_and_flag_override(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"select": {"table": TABLE4, "aa_min": 0.85, "tt_budget": 20,
                                          "out": str(tmp_path / "a")}}))
    assert run("--config", cfg, "select") == EXIT_OK
    a = Assignment.from_json((tmp_path / "a" / "assignment.json").read_text())
    assert a.idents()[Category.DOS] == "J48"
    assert run("--config", cfg, "select", "--tt-budget", 1000, "--out", tmp_path / "b") == EXIT_OK
    b = Assignment.from_json((tmp_path / "b" / "assignment.json").read_text())
    assert b.idents() != a.idents()


# -- detect --------------------------------------------------------------------------------

@pytest.fixture(scope="module")
def assignment_b(tmp_path_factory):
    out = tmp_path_factory.mktemp("sel")
    run("select", "--table", TABLE4, "--aa-min", 0.85, "--tt-budget", 20, "--out", out)
    return out / "assignment.json"


def test_detect_batch_and_stream_identical(tmp_path, assignment_b, sampled, mini_path):
    outs = {}
    for mode in ((), ("--stream",), ("--stream", "--parallel")):
        out = tmp_path / ("_".join(mode) or "batch")
        assert run("detect", "--assignment", assignment_b, "--train", sampled / "train.txt",
                   "--input", mini_path, *mode, "--out", out) == EXIT_OK
        outs[mode] = out
    texts = {m: (o / "results.txt").read_bytes() for m, o in outs.items()}
    assert len(set(texts.values())) == 1
    batch = json.loads((outs[()] / "summary.json").read_text())
    stream = json.loads((outs[("--stream",)] / "summary.json").read_text())
    stream.pop("timing")
    assert batch.pop("mode") == "batch" and stream.pop("mode") == "stream"
    assert batch == stream
    assert batch["records"] == 2000 and batch["malformed"] == 0


def test_detect_counts_malformed(tmp_path, assignment_b, sampled, mini_path):
    lines = fixture_path("kdd_mini_2000.txt").read_text().splitlines()[:20]
    lines[4] = "not,a,record"
    lines[9] = "0,tcp,http,SF," + ",".join(["x"] * 37) + ",normal."
    src = tmp_path / "in.txt"
    src.write_text("\n".join(lines) + "\n")
    assert run("detect", "--assignment", assignment_b, "--train", sampled / "train.txt",
               "--input", src, "--out", tmp_path) == EXIT_OK
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["malformed"] == 2
    assert summary["records"] == len(lines) - 2
    out = (tmp_path / "results.txt").read_text().splitlines()
    assert out[4] == "4,malformed," and out[9] == "9,malformed,"


def test_detect_perfect_members_flag_every_attack(tmp_path, sampled):
    assignment = tmp_path / "lbk.json"
    from catnet.classifiers import LBk
    from catnet.kdd_data import ATTACK_CATEGORIES
    assignment.write_text(Assignment({c: LBk() for c in ATTACK_CATEGORIES}).to_json())
    train = sampled / "train.txt"
    assert run("detect", "--assignment", assignment, "--train", train, "--input", train,
               "--out", tmp_path) == EXIT_OK
    truth = read_dataset(train).category_counts()
    summary = json.loads((tmp_path / "summary.json").read_text())
    for c, n in truth.items():
        assert summary["resolved_counts"][c.display] == n


def test_detect_reads_stdin(tmp_path, assignment_b, sampled, mini_path):
    proc = subprocess.run(
        [sys.executable, "-m", "catnet.cli", "detect", "--assignment", str(assignment_b),
         "--train", str(sampled / "train.txt"), "--stream", "--out", str(tmp_path)],
        input="\n".join(fixture_path("kdd_mini_2000.txt").read_text().splitlines()[:25]) + "\n",
        capture_output=True, text=True, check=False)
    assert proc.returncode == EXIT_OK, proc.stderr
    assert len((tmp_path / "results.txt").read_text().splitlines()) == 25
    assert json.loads((tmp_path / "summary.json").read_text())["input"] == {"file": "-"}


def test_detect_bad_priority(tmp_path, assignment_b, sampled, mini_path):
    assert run("detect", "--assignment", assignment_b, "--train", sampled / "train.txt",
               "--input", mini_path, "--priority", "DoS,DoS,U2R,R2L", "--out", tmp_path) == EXIT_DATA


# -- fetch-data ----------------------------------------------------------------------------

def test_fetch_synthetic_matches_table1(tmp_path):
    assert run("fetch-data", "--synthetic", "--dest", tmp_path) == EXIT_OK
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["matches_table1"] is True
    assert manifest["counts"]["U2R"] == 52


def test_fetch_download_failure(tmp_path):
    assert run("fetch-data", "--dest", tmp_path, "--url", "file:///nonexistent/kdd.gz") == EXIT_DATA


def test_fetch_checksum_mismatch(tmp_path):
    import gzip
    src = tmp_path / "src.gz"
    with gzip.open(src, "wb") as fh:
        fh.write(fixture_path("kdd_mini_2000.txt").read_bytes())
    dest = tmp_path / "d"
    assert run("fetch-data", "--dest", dest, "--url", src.as_uri(), "--sha256", "0" * 64) == EXIT_DATA
    # correct checksum, but the counts are the fixture's, not the 10% file's
    assert run("fetch-data", "--dest", dest, "--url", src.as_uri(),
               "--sha256", cli.sha256_file(src)) == EXIT_DATA
    manifest = json.loads((dest / "manifest.json").read_text())
    assert manifest["matches_table1"] is False
    assert manifest["counts"] == {c.display: n for c, n in MINI_COUNTS.items()}
