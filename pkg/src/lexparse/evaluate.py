"""PARSEVAL scoring and trace evaluation.

Constituents are compared as ``(label, start, end)`` triples over token
indices computed after deleting punctuation (commas, colons, quotes, judged
by the gold tags).  ``-C`` and ``+gap`` marks and function tags are stripped,
ADVP and PRT are treated as one label, and neither preterminals nor the TOP
node count.  Corpus figures are micro-averaged.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

from .annotate import NONE_TAG, HeadRuleTable, default_heads
from .grammar_core import TOP, TRACE
from .treebank_io import RawTree, parse_label

EVAL_PUNCT_TAGS = frozenset([",", ":", "``", "''"])
LABEL_MERGES = {"PRT": "ADVP"}
PRECEDING = "preceding"
FOLLOWING = "following"
_ROOT_LABELS = frozenset([TOP, "ROOT"])


class TokenMismatchError(ValueError):
    """Gold and test trees do not cover the same words."""

    def __init__(self, msg, sentence=None):
        if sentence is not None:
            msg = "sentence %d: %s" % (sentence, msg)
        super().__init__(msg)
        self.sentence = sentence


def base_label(label_text: str) -> str:
    """``NP-C+gap`` and ``NP-SBJ-1`` both give ``NP``."""
    return parse_label(label_text.replace("(+gap)", "").replace("+gap", "")).base


def eval_label(label_text: str) -> str:
    """Category used for comparison (base label with ADVP/PRT merged)."""
    base = base_label(label_text)
    return LABEL_MERGES.get(base, base)


def _is_empty_leaf(node: RawTree) -> bool:
    return node.terminal is not None and node.label_text in (NONE_TAG, TRACE)


def tokens(tree: RawTree) -> list:
    """``(word, tag)`` pairs with empty elements (``-NONE-``, TRACE) removed."""
    return [(w, t) for w, t in tree.leaves() if t not in (NONE_TAG, TRACE)]


def _kept_index(tags: Sequence[str], punct_tags) -> list:
    """``out[i]`` = number of kept tokens before original token ``i``."""
    out = [0]
    for t in tags:
        out.append(out[-1] + (t not in punct_tags))
    return out


def _spans(node: RawTree, pos: int, out: list) -> int:
    """Collect ``(label, start, end)`` over surface tokens; return end position."""
    if node.terminal is not None:
        return pos if _is_empty_leaf(node) else pos + 1
    start = pos
    for c in node.children:
        pos = _spans(c, pos, out)
    if pos > start and node.label_text not in _ROOT_LABELS:
        out.append((eval_label(node.label_text), start, pos))
    return pos


class ConstituentSet:
    """Multiset of labelled spans over punctuation-free token indices."""

    def __init__(self, counts: Counter):
        self.counts = counts

    @classmethod
    def from_tree(cls, tree: RawTree, deleted_tags: Optional[Sequence[str]] = None,
                  punct_tags=EVAL_PUNCT_TAGS) -> "ConstituentSet":
        """``deleted_tags`` are the gold tags deciding which positions are punctuation."""
        if deleted_tags is None:
            deleted_tags = [t for _, t in tokens(tree)]
        kept = _kept_index(deleted_tags, punct_tags)
        raw = []
        _spans(tree, 0, raw)
        counts = Counter()
        for lab, s, e in raw:
            if e > len(deleted_tags):
                raise TokenMismatchError("tree has more tokens than its reference")
            counts[(lab, kept[s], kept[e])] += 1
        return cls(counts)

    def __len__(self):
        return sum(self.counts.values())

    def __iter__(self):
        return iter(self.counts.elements())

    def matched(self, other: "ConstituentSet") -> int:
        return sum(min(n, other.counts[k]) for k, n in self.counts.items())

    def spans(self) -> set:
        return {(s, e) for _, s, e in self.counts}


def crosses(a, b) -> bool:
    """Spans overlap without either containing the other."""
    (s1, e1), (s2, e2) = a, b
    return s1 < s2 < e1 < e2 or s2 < s1 < e2 < e1


@dataclass
class SentenceScore:
    matched: int
    gold: int
    test: int
    crossing: int
    length: int
    parsed: bool = True


def parseval(gold: RawTree, test: Optional[RawTree], sentence: Optional[int] = None,
             punct_tags=EVAL_PUNCT_TAGS) -> SentenceScore:
    """Per-sentence counts; ``test=None`` means the parser gave up."""
    gtoks = tokens(gold)
    gtags = [t for _, t in gtoks]
    length = sum(t not in punct_tags for t in gtags)
    gset = ConstituentSet.from_tree(gold, gtags, punct_tags)
    if test is None:
        return SentenceScore(0, len(gset), 0, 0, length, parsed=False)
    ttoks = tokens(test)
    if len(ttoks) != len(gtoks):
        raise TokenMismatchError("gold has %d tokens, test has %d" % (len(gtoks), len(ttoks)), sentence)
    for i, ((gw, gt), (tw, _)) in enumerate(zip(gtoks, ttoks)):
        if gt not in punct_tags and gw != tw:
            raise TokenMismatchError("token %d differs: %r vs %r" % (i, gw, tw), sentence)
    tset = ConstituentSet.from_tree(test, gtags, punct_tags)
    gspans = gset.spans()
    crossing = sum(1 for _, s, e in tset if any(crosses((s, e), g) for g in gspans))
    return SentenceScore(tset.matched(gset), len(gset), len(tset), crossing, length)


# -- traces --------------------------------------------------------------

class TraceRecord(NamedTuple):
    head_word: str
    direction: str
    label: str


def _is_trace(node: RawTree) -> bool:
    if node.terminal is not None:
        return node.label_text == TRACE
    if len(node.children) != 1 or parse_label(node.label_text).base != "NP":
        return False
    leaf = node.children[0]
    return (leaf.terminal is not None and leaf.label_text == NONE_TAG
            and leaf.terminal.startswith("*T*"))


def _is_empty(node: RawTree) -> bool:
    if node.terminal is not None:
        return _is_empty_leaf(node)
    return all(_is_empty(c) for c in node.children)


def lexical_head(node: RawTree, heads: Optional[HeadRuleTable] = None) -> str:
    heads = heads or default_heads()
    while node.terminal is None:
        kids = [c for c in node.children if not _is_empty(c)]
        if not kids:
            raise ValueError("constituent %s has no words" % node.label_text)
        h = heads.find(base_label(node.label_text), [base_label(c.label_text) for c in kids])
        node = kids[h]
    return node.terminal


def extract_traces(tree: RawTree, heads: Optional[HeadRuleTable] = None) -> list:
    """One record per NP trace: (head word, side of the head, parent label)."""
    heads = heads or default_heads()
    out = []
    for node in tree.subtrees():
        if node.terminal is not None:
            continue
        traces = [i for i, c in enumerate(node.children) if _is_trace(c)]
        if not traces:
            continue
        live = [i for i, c in enumerate(node.children) if not _is_empty(c)]
        if not live:
            continue
        labels = [base_label(node.children[i].label_text) for i in live]
        h = live[heads.find(base_label(node.label_text), labels)]
        word = lexical_head(node.children[h], heads)
        parent = base_label(node.label_text)
        for i in traces:
            out.append(TraceRecord(word, PRECEDING if i < h else FOLLOWING, parent))
    return out


def trace_counts(gold: Sequence[TraceRecord], test: Sequence[TraceRecord]):
    """``(correct, n_gold, n_test)``; each gold record can be matched once."""
    correct = sum((Counter(gold) & Counter(test)).values())
    return correct, len(gold), len(test)


def _ratio(num, den, empty=1.0):
    return num / den if den else empty


def trace_eval(gold: Sequence[TraceRecord], test: Sequence[TraceRecord]):
    """``(precision, recall)``; an empty test set has precision 1 by convention."""
    correct, ng, nt = trace_counts(gold, test)
    return _ratio(correct, nt), _ratio(correct, ng)


# -- aggregation ---------------------------------------------------------

@dataclass
class ScoreReport:
    labeled_precision: float
    labeled_recall: float
    crossing_brackets_mean: float
    zero_cb_rate: float
    le2_cb_rate: float
    sentence_count: int
    trace_precision: Optional[float] = None
    trace_recall: Optional[float] = None
    counts: dict = field(default_factory=dict, compare=False)

    @property
    def f1(self) -> float:
        p, r = self.labeled_precision, self.labeled_recall
        return 2 * p * r / (p + r) if p + r else 0.0

    @classmethod
    def from_scores(cls, scores: Sequence[SentenceScore], traces=None) -> "ScoreReport":
        matched = sum(s.matched for s in scores)
        gold = sum(s.gold for s in scores)
        test = sum(s.test for s in scores)
        n = len(scores)
        # failed parses lower recall but stay out of the bracket-crossing figures
        cbs = [s.crossing for s in scores if s.parsed]
        counts = dict(matched=matched, gold=gold, test=test,
                      noparse=sum(not s.parsed for s in scores))
        tp = tr = None
        if traces is not None:
            correct, ng, nt = traces
            tp, tr = _ratio(correct, nt), _ratio(correct, ng)
            counts.update(trace_correct=correct, trace_gold=ng, trace_test=nt)
        return cls(
            labeled_precision=_ratio(matched, test),
            labeled_recall=_ratio(matched, gold),
            crossing_brackets_mean=sum(cbs) / len(cbs) if cbs else 0.0,
            zero_cb_rate=_ratio(sum(c == 0 for c in cbs), len(cbs)),
            le2_cb_rate=_ratio(sum(c <= 2 for c in cbs), len(cbs)),
            sentence_count=n, trace_precision=tp, trace_recall=tr, counts=counts)

    def format_table(self, title: str = "") -> str:
        head = "%-24s %6s %6s %6s %7s %8s" % ("", "LR", "LP", "CBs", "0 CBs", "<=2 CBs")
        name = title or "%d sentences" % self.sentence_count
        row = "%-24s %6.1f %6.1f %6.2f %7.1f %8.1f" % (
            name, 100 * self.labeled_recall, 100 * self.labeled_precision,
            self.crossing_brackets_mean, 100 * self.zero_cb_rate, 100 * self.le2_cb_rate)
        lines = [head, row]
        if self.trace_precision is not None:
            lines.append("traces: precision %.1f%%  recall %.1f%%  (%d gold, %d proposed)" % (
                100 * self.trace_precision, 100 * self.trace_recall,
                self.counts.get("trace_gold", 0), self.counts.get("trace_test", 0)))
        return "\n".join(lines)

    def format_keyvalue(self) -> str:
        items = [
            ("sentence_count", self.sentence_count),
            ("labeled_recall", self.labeled_recall),
            ("labeled_precision", self.labeled_precision),
            ("f1", self.f1),
            ("crossing_brackets_mean", self.crossing_brackets_mean),
            ("zero_cb_rate", self.zero_cb_rate),
            ("le2_cb_rate", self.le2_cb_rate),
        ]
        if self.trace_precision is not None:
            items += [("trace_precision", self.trace_precision),
                      ("trace_recall", self.trace_recall)]
        items += sorted(self.counts.items())
        return "\n".join("%s=%r" % kv for kv in items)


def evaluate_corpus(gold_trees: Sequence[RawTree], test_trees: Sequence[Optional[RawTree]],
                    traces: bool = False, max_length: Optional[int] = None,
                    heads: Optional[HeadRuleTable] = None) -> ScoreReport:
    """Score aligned tree lists; ``None`` entries in ``test_trees`` are parse failures.

    ``max_length`` keeps sentences whose punctuation-free length is at most N.
    """
    if len(gold_trees) != len(test_trees):
        raise ValueError("gold has %d trees, test has %d" % (len(gold_trees), len(test_trees)))
    scores = []
    tcounts = [0, 0, 0]
    for i, (g, t) in enumerate(zip(gold_trees, test_trees)):
        s = parseval(g, t, sentence=i + 1)
        if max_length is not None and s.length > max_length:
            continue
        scores.append(s)
        if traces:
            c, ng, nt = trace_counts(extract_traces(g, heads),
                                     extract_traces(t, heads) if t is not None else [])
            tcounts[0] += c
            tcounts[1] += ng
            tcounts[2] += nt
    return ScoreReport.from_scores(scores, tuple(tcounts) if traces else None)
