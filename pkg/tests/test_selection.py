import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from catnet.classifiers import default_specs
from catnet.errors import NoQualifiedClassifierError
from catnet.kdd_data import ATTACK_CATEGORIES, Category
from catnet.metrics import CategoryMetrics, EvalRow, PerformanceTable
from catnet.resources import load_table4
from catnet.selection import Assignment, SelectionPolicy, explain, select

DOS, PROBE, U2R, R2L = Category.DOS, Category.PROBE, Category.U2R, Category.R2L
SPECS = default_specs()

MODEL_1A = {DOS: "JRip", PROBE: "JRip", U2R: "DecisionTable", R2L: "OneR"}
MODEL_1B = {DOS: "J48", PROBE: "BayesNet", U2R: "BayesNet", R2L: "OneR"}


def test_reproduces_unconstrained_model():
    a = select(load_table4(), SelectionPolicy(aa_min=0.85))
    assert a.idents() == MODEL_1A
    assert len(a.distinct_specs()) == 3


def test_reproduces_time_budget_model():
    a = select(load_table4(), SelectionPolicy(aa_min=0.85, tt_budget_s=20))
    assert a.idents() == MODEL_1B


def test_trace_explains_the_published_choices():
    trace = explain(load_table4(), SelectionPolicy(aa_min=0.85))
    probe = next(t for t in trace.categories if t.category is PROBE)
    assert ("NaiveBayes", "aa 78.32% < 85%") in probe.disqualified
    assert probe.steps[0] == ("tp", ("BayesNet", "JRip"))
    assert probe.decided_by == "fp"
    dos = next(t for t in trace.categories if t.category is DOS)
    assert dos.steps[0] == ("tp", ("JRip", "NBTree"))
    assert dos.winner == "JRip"
    text = trace.render()
    assert "disqualified NaiveBayes: aa 78.32% < 85%" in text
    assert "selected: JRip" in text


def test_budget_trace_reports_slow_rows():
    trace = explain(load_table4(), SelectionPolicy(aa_min=0.85, tt_budget_s=20))
    reasons = dict(trace.categories[0].disqualified)
    assert reasons["JRip"].startswith("tt ") and reasons["JRip"].endswith("> 20 s")
    assert sorted(trace.categories[0].candidates) == ["BayesNet", "J48", "LBk", "OneR"]


def test_aa_threshold_window():
    """Every aa_min strictly between the disqualified and the qualifying AA
    values reproduces both models; just below it does not."""
    table = load_table4()
    for aa in (0.7833, 0.80, 0.85, 0.89):
        assert select(table, SelectionPolicy(aa_min=aa)).idents() == MODEL_1A
        assert select(table, SelectionPolicy(aa_min=aa, tt_budget_s=20)).idents() == MODEL_1B
    assert select(table, SelectionPolicy(aa_min=0.78)).idents()[PROBE] == "NaiveBayes"


def test_single_row_table():
    row = load_table4().row("OneR")
    a = select(PerformanceTable((row,)))
    assert set(a.idents().values()) == {"OneR"}
    trace = explain(PerformanceTable((row,)))
    assert all(t.steps == () for t in trace.categories)


def test_no_qualified_classifier():
    with pytest.raises(NoQualifiedClassifierError) as e:
        select(load_table4(), SelectionPolicy(aa_min=0.99))
    assert e.value.category is DOS
    with pytest.raises(NoQualifiedClassifierError):
        select(load_table4(), SelectionPolicy(aa_min=0.85, tt_budget_s=1.0))


def test_failed_rows_never_qualify():
    table = load_table4()
    bad = EvalRow.failed(SPECS[0], "boom")
    rows = tuple(r for r in table.rows if r.ident != SPECS[0].ident) + (bad,)
    trace = explain(PerformanceTable(rows), SelectionPolicy(aa_min=0.0))
    assert (bad.ident, "failed: boom") in trace.categories[0].disqualified


def test_policy_validation():
    with pytest.raises(ValueError):
        SelectionPolicy(aa_min=1.5)
    with pytest.raises(ValueError):
        SelectionPolicy(tt_budget_s=0)
    with pytest.raises(ValueError):
        SelectionPolicy(tie_break=("tp", "speed"))
    assert SelectionPolicy(tie_break=("fp",)).tie_break == ("fp", "name")


def test_assignment_json_round_trip():
    a = select(load_table4(), SelectionPolicy(aa_min=0.85, tt_budget_s=20))
    back = Assignment.from_json(a.to_json())
    assert back == a
    assert back.table_fingerprint == load_table4().fingerprint()


def test_assignment_must_be_total():
    with pytest.raises(ValueError):
        Assignment({DOS: SPECS[0]})


# -- properties over random tables -------------------------------------------------------------

rate = st.sampled_from([0.0, 0.1, 0.25, 0.5, 0.9, 1.0, None])


@st.composite
def tables(draw):
    specs = draw(st.lists(st.sampled_from(SPECS), min_size=1, max_size=10, unique_by=lambda s: s.ident))
    rows = []
    for s in specs:
        per = {c: CategoryMetrics(draw(rate), draw(rate)) for c in ATTACK_CATEGORIES}
        aa = draw(st.sampled_from([0.5, 0.8, 0.9, 0.95]))
        tt = draw(st.sampled_from([0.5, 2.0, 10.0, 30.0, 100.0]))
        rows.append(EvalRow(s, per, aa, tt))
    return PerformanceTable(tuple(rows))


policies = st.builds(SelectionPolicy, aa_min=st.sampled_from([0.0, 0.6, 0.85]),
                     tt_budget_s=st.sampled_from([None, 1.0, 15.0, 50.0]))


def _try(table, policy):
    try:
        return select(table, policy)
    except NoQualifiedClassifierError:
        return None


def _key(row, c):
    m = row.per_category[c]
    return (-m.tp_rate if m.tp_rate is not None else math.inf,
            m.fp_rate if m.fp_rate is not None else math.inf,
            row.tt_s, row.ident)


@settings(max_examples=300, deadline=None)
@given(tables(), policies, st.randoms())
def test_invariant_under_row_order(table, policy, rnd):
    rows = list(table.rows)
    rnd.shuffle(rows)
    a, b = _try(table, policy), _try(PerformanceTable(tuple(rows)), policy)
    assert (a is None) == (b is None)
    if a is not None:
        assert a.idents() == b.idents()


@settings(max_examples=300, deadline=None)
@given(tables(), policies)
def test_winner_weakly_dominates_every_qualified_row(table, policy):
    a = _try(table, policy)
    if a is None:
        return
    qualified = [r for r in table.rows if r.aa >= policy.aa_min
                 and (policy.tt_budget_s is None or r.tt_s <= policy.tt_budget_s)]
    for c, ident in a.idents().items():
        win = table.row(ident)
        assert win in qualified
        assert all(_key(win, c) <= _key(r, c) for r in qualified)


@settings(max_examples=300, deadline=None)
@given(tables(), st.sampled_from([0.0, 0.85]), st.floats(1.0, 120.0), st.floats(1.0, 120.0))
def test_tighter_budget_never_picks_slower(table, aa_min, b1, b2):
    loose, tight = max(b1, b2), min(b1, b2)
    a = _try(table, SelectionPolicy(aa_min, loose))
    b = _try(table, SelectionPolicy(aa_min, tight))
    if a is None or b is None:
        return
    for c in ATTACK_CATEGORIES:
        assert table.row(b.idents()[c]).tt_s <= table.row(a.idents()[c]).tt_s


@settings(max_examples=300, deadline=None)
@given(tables())
def test_zero_aa_min_picks_maximum_tp(table):
    a = select(table, SelectionPolicy(aa_min=0.0))
    for c, ident in a.idents().items():
        tps = [r.per_category[c].tp_rate for r in table.rows if r.per_category[c].tp_rate is not None]
        got = table.row(ident).per_category[c].tp_rate
        if tps:
            assert got == max(tps)


@settings(max_examples=300, deadline=None)
@given(tables(), policies)
def test_trace_winners_equal_select(table, policy):
    a = _try(table, policy)
    if a is None:
        with pytest.raises(NoQualifiedClassifierError):
            explain(table, policy)
        return
    assert explain(table, policy).winners() == a.idents()
