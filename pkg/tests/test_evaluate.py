import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from parseval_cases import CASES
from lexparse.evaluate import (
    FOLLOWING, PRECEDING, ScoreReport, TokenMismatchError, TraceRecord, crosses,
    evaluate_corpus, extract_traces, parseval, trace_eval,
)
from lexparse.treebank_io import RawTree, read_trees

RELATIVE_NP = ("(NP (NP (DT the) (NN store)) (SBAR (WHNP-1 (WDT that)) (S (NP-SBJ (NNP Marks)) "
        "(VP (VBD bought) (NP (-NONE- *T*-1)) (NP-TMP (JJ last) (NN week))))))")


def one(text):
    return read_trees(text)[0]


@pytest.mark.parametrize("name,gold,test,m,g,t,cb", CASES, ids=[c[0] for c in CASES])
def test_hand_counted_pairs(name, gold, test, m, g, t, cb):
    s = parseval(one(gold), one(test))
    assert (s.matched, s.gold, s.test, s.crossing) == (m, g, t, cb)


@pytest.mark.parametrize("name,gold,test,m,g,t,cb", CASES, ids=[c[0] for c in CASES])
def test_swap_exchanges_precision_recall(name, gold, test, m, g, t, cb):
    s = parseval(one(test), one(gold))
    assert (s.matched, s.gold, s.test) == (m, t, g)


def test_crosses():
    assert crosses((0, 2), (1, 3)) and crosses((1, 3), (0, 2))
    assert not crosses((0, 3), (1, 2)) and not crosses((0, 1), (1, 2))
    assert not crosses((0, 2), (0, 2))


def test_token_mismatch_names_sentence():
    with pytest.raises(TokenMismatchError, match="sentence 7"):
        parseval(one("(S (A a) (B b))"), one("(S (A a) (B c))"), sentence=7)
    with pytest.raises(TokenMismatchError):
        parseval(one("(S (A a) (B b))"), one("(S (A a))"))


def test_noparse_counts_against_recall_only():
    gold = [one(CASES[0][1]), one(CASES[1][1])]
    rep = evaluate_corpus(gold, [gold[0], None])
    assert rep.labeled_precision == 1.0
    assert rep.labeled_recall == 3 / 6
    assert rep.crossing_brackets_mean == 0.0 and rep.zero_cb_rate == 1.0
    assert rep.counts["noparse"] == 1


def test_corpus_micro_average():
    golds = [one(c[1]) for c in CASES]
    tests = [one(c[2]) for c in CASES]
    rep = evaluate_corpus(golds, tests)
    m = sum(c[3] for c in CASES)
    assert rep.labeled_recall == m / sum(c[4] for c in CASES)
    assert rep.labeled_precision == m / sum(c[5] for c in CASES)
    assert rep.crossing_brackets_mean == 3 / 10
    assert rep.zero_cb_rate == 8 / 10 and rep.le2_cb_rate == 1.0
    assert rep.sentence_count == 10


def test_max_length_filter():
    golds = [one("(S (A a) (, ,) (B b))"), one("(S (A a) (B b) (C c))")]
    assert evaluate_corpus(golds, golds, max_length=2).sentence_count == 1
    assert evaluate_corpus(golds, golds, max_length=3).sentence_count == 2


def test_report_formats():
    rep = evaluate_corpus([one(CASES[1][1])], [one(CASES[1][2])])
    table = rep.format_table()
    assert "LR" in table and "33.3" in table
    kv = dict(line.split("=", 1) for line in rep.format_keyvalue().splitlines())
    assert float(kv["labeled_precision"]) == 1 / 3 and kv["sentence_count"] == "1"


# -- traces --------------------------------------------------------------

def test_relative_clause_trace_record():
    assert extract_traces(one(RELATIVE_NP)) == [TraceRecord("bought", FOLLOWING, "VP")]


def test_trace_from_annotated_output():
    t = one("(TOP (NP (NP (DT the) (NN store)) (SBAR (WHNP (WDT that)) (S-C (NP-C (NNP Marks)) "
            "(VP (VBD bought) (TRACE *) (NP (JJ last) (NN week)))))))")
    assert extract_traces(t) == [TraceRecord("bought", FOLLOWING, "VP")]


def test_subject_trace_precedes():
    t = one("(NP (NP (DT the) (NN man)) (SBAR (WHNP-1 (WDT that)) (S (NP-SBJ (-NONE- *T*-1)) "
            "(VP (VBD left)))))")
    assert extract_traces(t) == [TraceRecord("left", PRECEDING, "S")]


def test_trace_eval_cases():
    rec = TraceRecord("bought", FOLLOWING, "VP")
    assert trace_eval([rec], [rec]) == (1.0, 1.0)
    assert trace_eval([rec], [rec._replace(direction=PRECEDING)]) == (0.0, 0.0)
    assert trace_eval([rec], []) == (1.0, 0.0)
    assert trace_eval([rec], [rec, rec]) == (0.5, 1.0)


def test_corpus_traces():
    g = one(RELATIVE_NP)
    rep = evaluate_corpus([g], [g], traces=True)
    assert (rep.trace_precision, rep.trace_recall) == (1.0, 1.0)
    assert rep.counts["trace_correct"] == 1


# -- properties ----------------------------------------------------------

_labels = st.sampled_from(["S", "NP", "VP", "PP", "ADVP", "PRT", "SBAR"])
_tags = st.sampled_from(["NN", "VB", "DT", "IN"])


def _trees():
    leaf = st.builds(lambda t: RawTree(t, (), "w"), _tags)
    return st.recursive(leaf, lambda kids: st.builds(
        lambda lab, cs: RawTree(lab, tuple(cs)), _labels, st.lists(kids, min_size=1, max_size=3)),
        max_leaves=10).filter(lambda t: t.terminal is None)


@settings(max_examples=150, deadline=None)
@given(_trees())
def test_identity_scores_perfect(t):
    s = parseval(t, t)
    assert s.matched == s.gold == s.test and s.crossing == 0


def _insert_comma(t, k):
    """Add a comma preterminal before the k-th leaf."""
    counter = [0]

    def go(node):
        if node.terminal is not None:
            return [node]
        kids = []
        for c in node.children:
            if c.terminal is not None:
                if counter[0] == k:
                    kids.append(RawTree(",", (), ","))
                counter[0] += 1
                kids.append(c)
            else:
                kids.extend(go(c))
        return [RawTree(node.label_text, tuple(kids))]
    return go(t)[0]


@settings(max_examples=100, deadline=None)
@given(_trees(), _trees(), st.integers(0, 9))
def test_punctuation_insertion_invariant(a, b, k):
    n = len(a.leaves())
    b_leaves = len(b.leaves())
    if n != b_leaves:
        return
    k = k % n
    before = parseval(a, b)
    after = parseval(_insert_comma(a, k), _insert_comma(b, k))
    assert (before.matched, before.gold, before.test, before.crossing) == \
        (after.matched, after.gold, after.test, after.crossing)


def test_report_ratios_bounded():
    rep = ScoreReport.from_scores([])
    assert rep.labeled_precision == 1.0 and rep.sentence_count == 0
