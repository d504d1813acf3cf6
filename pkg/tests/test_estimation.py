import io
import itertools
import math
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import toy_params, toy_trees
from lexparse.estimation import (
    LAMBDA_FACTOR, LEVEL_VARS, PC, Lexicon, ModelFileError, accumulate,
    event_observations, interpolation_breakdown, load_model, map_unknowns, save_model,
    smoothed_prob, train_counts,
)
from lexparse.grammar_core import (
    UNKNOWN, GapDirection, HeadedWord, HeadEvent, Label, LexTree, tree_event_sequence,
)

BOUGHT = HeadedWord("bought", "VBD")


def head_event(P="S", word=BOUGHT, H="VP"):
    return HeadEvent(Label(P), word, Label(H))


# -- counting ------------------------------------------------------------

def test_single_event_counts():
    tab = accumulate([head_event()])
    k1, k3 = ("S", "bought", "VBD"), ("S",)
    assert tab.context[PC.P_H][0][k1] == 1
    assert tab.joint[PC.P_H][0][(k1, "VP")] == 1
    assert tab.diversity[PC.P_H][0][k1] == 1
    assert (tab.context[PC.P_H][2][k3], tab.joint[PC.P_H][2][(k3, "VP")],
            tab.diversity[PC.P_H][2][k3]) == (1, 1, 1)


def test_repeated_event_counts():
    tab = accumulate([head_event(), head_event()])
    k1 = ("S", "bought", "VBD")
    assert tab.context[PC.P_H][0][k1] == 2
    assert tab.joint[PC.P_H][0][(k1, "VP")] == 2
    assert tab.diversity[PC.P_H][0][k1] == 1


def test_level_counts():
    for cls, levels in LEVEL_VARS.items():
        n = 4 if cls in (PC.P_L2, PC.P_R2) else (1 if cls is PC.P_TOP else 3)
        assert len(levels) == n


def _recount(events):
    """Direct tally of (class, level, key, outcome) for comparison."""
    joint = Counter()
    for ev in events:
        for cls, keys, outcome in event_observations(ev):
            for i, k in enumerate(keys):
                joint[(cls, i, k, outcome)] += 1
    return joint


def _flatten(tab):
    out = Counter()
    for cls in PC:
        for i, jnt in enumerate(tab.joint[cls]):
            for (k, o), n in jnt.items():
                out[(cls, i, k, o)] = n
    return out


ALL_EVENTS = [e for t in toy_trees(3) for e in tree_event_sequence(t, 3)]
event_lists = st.lists(st.sampled_from(ALL_EVENTS), max_size=60)


@settings(max_examples=60, deadline=None)
@given(event_lists, event_lists)
def test_merge_equals_recount(a, b):
    merged = accumulate(a).merge(accumulate(b))
    assert merged == accumulate(a + b)
    assert _flatten(merged) == _recount(a + b)


@settings(max_examples=30, deadline=None)
@given(event_lists, event_lists, event_lists)
def test_merge_associative_commutative(a, b, c):
    A, B, C = accumulate(a), accumulate(b), accumulate(c)
    assert A.merge(B) == B.merge(A)
    assert A.merge(B).merge(C) == A.merge(B.merge(C))


@settings(max_examples=40, deadline=None)
@given(event_lists)
def test_count_table_invariants(evs):
    tab = accumulate(evs)
    for cls in PC:
        for i in range(len(LEVEL_VARS[cls])):
            sums = Counter()
            outs = Counter()
            for (k, o), n in tab.joint[cls][i].items():
                sums[k] += n
                outs[k] += 1
            assert sums == Counter(tab.context[cls][i])
            assert outs == Counter(tab.diversity[cls][i])
            for k, c in tab.context[cls][i].items():
                assert 1 <= tab.diversity[cls][i][k] <= c


# -- smoothing -----------------------------------------------------------

def test_seen_once_gives_one():
    tab = accumulate([head_event()])
    ctx = {"P": "S", "w": "bought", "t": "VBD"}
    assert smoothed_prob(PC.P_H, ctx, "VP", tab) == 1.0
    es, lams, final = interpolation_breakdown(PC.P_H, ctx, "VP", tab)
    assert es == [1.0, 1.0, 1.0] and final == 1.0
    assert lams == [1 / 6, 1 / 6, 1 / 6]


def test_unseen_level1_reduces_to_lower_levels():
    # level 2 (S, VBD): VP x2, S x1 (c=3, d=2); level 3 (S): VP x2, S x1, NP x1 (c=4, d=3)
    evs = [head_event(word=HeadedWord("bought", "VBD")),
           head_event(word=HeadedWord("sold", "VBD")),
           head_event(word=HeadedWord("said", "VBD"), H="S"),
           head_event(word=HeadedWord("dog", "NN"), H="NP")]
    tab = accumulate(evs)
    ctx = {"P": "S", "w": "liked", "t": "VBD"}
    es, lams, final = interpolation_breakdown(PC.P_H, ctx, "VP", tab)
    assert es[0] == 0.0 and lams[0] == 0.0
    l2 = 3 / (3 + LAMBDA_FACTOR * 2)
    expected = l2 * (2 / 3) + (1 - l2) * (2 / 4)
    assert final == pytest.approx(expected, rel=1e-15)
    assert es[1:] == [2 / 3, 2 / 4]


def test_all_unseen_is_zero():
    tab = accumulate([head_event()])
    assert smoothed_prob(PC.P_H, {"P": "NP", "w": "x", "t": "NN"}, "NN", tab) == 0.0


def test_four_level_nesting():
    params = toy_params(2, 1)
    ctx = {"M": "NP-C", "mt": "NNP", "P": "S", "H": "VP", "w": "bought", "t": "VBD",
           "dist": "1/0/0", "LC": "{NP-C}"}
    es, lams, final = interpolation_breakdown(PC.P_L2, ctx, "Marks", params.counts)
    assert len(es) == 4
    l1, l2, l3 = lams[:3]
    e1, e2, e3, e4 = es
    nested = l1 * e1 + (1 - l1) * (l2 * e2 + (1 - l2) * (l3 * e3 + (1 - l3) * e4))
    assert final == pytest.approx(nested, rel=1e-14)
    assert 0 < final <= 1


def _outcomes(tab, cls):
    return sorted({o for jnt in tab.joint[cls] for (_, o) in jnt})


def _contexts(tab, cls):
    """Observed level-1 contexts as variable mappings."""
    names = LEVEL_VARS[cls][0]
    return [dict(zip(names, k)) for k in tab.context[cls][0]]


@pytest.mark.parametrize("model", [1, 2, 3])
def test_normalisation_closed_spaces(model):
    tab = toy_params(model, 1).counts
    classes = [PC.P_H, PC.P_L1, PC.P_R1, PC.P_TOP]
    if model >= 2:
        classes += [PC.P_LC, PC.P_RC]
    for cls in classes:
        outs = _outcomes(tab, cls)
        for ctx in _contexts(tab, cls):
            total = sum(tab.prob(cls, tuple(tuple(ctx[v] for v in names)
                                            for names in LEVEL_VARS[cls]), o) for o in outs)
            assert total == pytest.approx(1.0, abs=1e-9)


def test_gap_direction_normalised():
    tab = toy_params(3, 1).counts
    ctxs = _contexts(tab, PC.P_G)
    assert ctxs
    for ctx in ctxs:
        total = sum(smoothed_prob(PC.P_G, ctx, g.value, tab) for g in GapDirection)
        assert total == pytest.approx(1.0, abs=1e-9)


def test_hard_constraints_only_remove_mass():
    tab = toy_params(2, 1).counts
    outs = _outcomes(tab, PC.P_L1)
    for ctx in _contexts(tab, PC.P_L1):
        total = sum(smoothed_prob(PC.P_L1, ctx, o, tab) for o in outs)
        assert total <= 1 + 1e-9


def test_hard_constraints_in_smoothed_prob():
    tab = toy_params(2, 1).counts
    ctx = {"P": "S", "H": "VP", "w": "bought", "t": "VBD", "dist": "1/0/0", "LC": "{NP-C}"}
    assert smoothed_prob(PC.P_L1, ctx, "NP-C/NNP", tab) > 0
    assert smoothed_prob(PC.P_L1, ctx, "STOP", tab) == 0.0
    assert smoothed_prob(PC.P_L1, ctx, "S-C/VBD", tab) == 0.0
    empty = dict(ctx, LC="{}")
    assert smoothed_prob(PC.P_L1, empty, "NP-C/NNP", tab) == 0.0
    assert smoothed_prob(PC.P_L1, empty, "STOP", tab) > 0


@settings(max_examples=50, deadline=None)
@given(st.lists(st.sampled_from(ALL_EVENTS), min_size=1, max_size=40), st.data())
def test_probability_bounds_and_monotone(evs, data):
    tab = accumulate(evs)
    ev = data.draw(st.sampled_from(evs))
    for cls, keys, outcome in event_observations(ev):
        es, lams = tab.terms(cls, keys, outcome)
        assert all(0 <= e <= 1 for e in es) and all(0 <= x <= 1 for x in lams)
        p = tab.prob(cls, keys, outcome)
        assert 0 < p <= 1
        more = accumulate([ev], accumulate(evs))
        assert more.prob(cls, keys, outcome) >= p - 1e-15


# -- lexicon -------------------------------------------------------------

def _tree_with(words):
    kids = tuple(LexTree(Label("NN"), HeadedWord(w, "NN")) for w in words)
    return LexTree(Label("NP"), kids[-1].head, kids, len(kids) - 1)


def test_unknown_threshold_boundary():
    lex = Lexicon.build([_tree_with(["five"] * 5 + ["four"] * 4)])
    assert lex.map_word("five") == "five"
    assert lex.map_word("four") == UNKNOWN
    assert lex.map_word("never") == UNKNOWN
    assert lex.unknown_tag_set() == ["NN"]
    mapped = map_unknowns([_tree_with(["five", "four"])], lex)[0]
    assert [hw.word for hw in mapped.tokens()] == ["five", UNKNOWN]
    assert [hw.tag for hw in mapped.tokens()] == ["NN", "NN"]


def test_lexicon_rejects_bad_threshold():
    with pytest.raises(ValueError):
        Lexicon(threshold=0)


def test_tag_dictionary(raw_trees):
    lex = toy_params(1).lexicon
    assert lex.tags_for("the") == ["DT"]
    assert lex.tags_for("zebra") == lex.unknown_tag_set()
    assert len(lex.unknown_tag_set()) <= 5
    assert all(lex.tag_dict[w] for w in lex.tag_dict)


# -- model files ---------------------------------------------------------

def _save(model, threshold=5, config=None):
    p = toy_params(model, threshold)
    buf = io.BytesIO()
    digest = save_model(buf, model, p.counts, p.lexicon, config or {"unknown_threshold": threshold})
    return buf.getvalue(), digest


@pytest.mark.parametrize("model", [1, 2, 3])
def test_save_load_round_trip(model):
    data, _ = _save(model)
    loaded = load_model(io.BytesIO(data))
    orig = toy_params(model)
    assert loaded.model == model
    assert loaded.counts == orig.counts and loaded.lexicon == orig.lexicon
    for t in toy_trees(model)[:10]:
        for ev in tree_event_sequence(t, model):
            for cls, keys, o in event_observations(ev, orig.lexicon.map_word):
                assert loaded.prob(cls, keys, o) == orig.prob(cls, keys, o)


def test_training_is_deterministic():
    a, da = _save(3)
    trees = toy_trees(3)
    lex = Lexicon.build(list(reversed(trees)))
    counts, _ = train_counts(list(reversed(trees)), 3, lex)
    buf = io.BytesIO()
    db = save_model(buf, 3, counts, lex, {"unknown_threshold": 5})
    assert da == db and a == buf.getvalue()


@pytest.mark.parametrize("mutate,msg", [
    (lambda d: b"XX" + d[2:], "not a model file"),
    (lambda d: d.replace(b"version=1", b"version=9", 1), "version 9"),
    (lambda d: d[: len(d) // 2], "truncated"),
    (lambda d: d[:-4], "truncated"),
])
def test_corrupt_model_files(mutate, msg):
    data, _ = _save(1)
    with pytest.raises(ModelFileError, match=msg):
        load_model(io.BytesIO(mutate(data)))


def test_model_file_on_disk(tmp_path):
    p = toy_params(2)
    path = tmp_path / "m.bin"
    save_model(str(path), 2, p.counts, p.lexicon)
    assert load_model(str(path)).counts == p.counts


def test_train_counts_reports_frame_overflow():
    kids = tuple(LexTree(Label("NP", True), HeadedWord("x%d" % i, "NN"),
                         (LexTree(Label("NN"), HeadedWord("x%d" % i, "NN")),), 0)
                 for i in range(5))
    v = LexTree(Label("VBD"), HeadedWord("v", "VBD"))
    vp = LexTree(Label("VP"), v.head, (v,) + kids, 0)
    good = toy_trees(2)[0]
    lex = Lexicon.build([vp, good], threshold=1)
    counts, skipped = train_counts([vp, good], 2, lex)
    assert [i for i, _ in skipped] == [0]
    assert counts.n_events(PC.P_TOP) == 1


def test_event_probability_is_product():
    p = toy_params(2)
    ev = next(e for e in tree_event_sequence(toy_trees(2)[2], 2) if getattr(e, "word", None))
    prods = [p.prob(c, k, o) for c, k, o in event_observations(ev, p.lexicon.map_word)]
    assert p.event_probability(ev) == pytest.approx(math.prod(prods), rel=1e-15)
    assert len(list(itertools.islice(prods, 3))) == 2
