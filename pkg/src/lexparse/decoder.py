"""CKY-style Viterbi chart decoder.

Constituents go through three stages: a complete edge is projected to an
incomplete parent (head, subcat and gap choices are scored), the parent takes
modifiers on its right and then on its left, and finally the two STOP
probabilities complete it.  Edges with the same signature over the same span
are merged, keeping the best score.

Each edge records whether the string between its head word and each of its
edges contains a verb and how many commas, so modifier distances are exact
for any tagging of the span.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional

from .grammar_core import (
    COMMA_TAGS, EMPTY_FRAME, LEFT, MORE_THAN_2, NEG_INF, NP_COMPLEMENT, RIGHT, STOP,
    TOP, TRACE, GapDirection, HeadedWord, Label, LexTree, SubcatFrame, frame_after,
    is_verb_tag,
)
from .estimation import (
    PC, TOP_KEYS, ParameterTables, frame_keys, head_keys, mod1_keys, mod2_keys,
    top_word_keys,
)
from .annotate import PUNCT_TAGS

log = logging.getLogger(__name__)

DEFAULT_BEAM = 1e-4
MAX_UNARY_DEPTH = 3

_STOP_LABEL = Label(STOP)
_TRACE_LABEL = Label(TRACE)

# gap states
NO_GAP = "none"
PENDING_LEFT = "pending-left"
PENDING_RIGHT = "pending-right"
DISCHARGED = "discharged"


@dataclass(frozen=True)
class Token:
    word: str
    tags: tuple
    is_punct: bool


class TaggedSentence:
    """Tokens with their candidate tags.

    Known words may take any tag seen with them in training; unknown words
    take the supplied tag when the input is pre-tagged, otherwise the most
    frequent tags seen on rare training words.
    """

    def __init__(self, tokens):
        self.tokens = tuple(tokens)
        for t in self.tokens:
            if not t.tags:
                raise ValueError("token %r has no candidate tags" % t.word)

    @classmethod
    def from_words(cls, words, lexicon, tags=None, punct_tags=PUNCT_TAGS):
        toks = []
        for i, w in enumerate(words):
            if lexicon.is_known(w):
                cands = tuple(lexicon.tags_for(w))
            elif tags is not None and tags[i]:
                cands = (tags[i],)
            else:
                cands = tuple(lexicon.unknown_tag_set())
            toks.append(Token(w, cands, all(t in punct_tags for t in cands)))
        return cls(toks)

    @classmethod
    def from_line(cls, line: str, lexicon, pretagged=False, punct_tags=PUNCT_TAGS):
        items = line.split()
        if pretagged:
            words, tags = [], []
            for it in items:
                w, sep, t = it.rpartition("_")
                if not sep or not w:
                    w, t = it, None
                words.append(w)
                tags.append(t)
            return cls.from_words(words, lexicon, tags, punct_tags)
        return cls.from_words(items, lexicon, None, punct_tags)

    def __len__(self):
        return len(self.tokens)

    @property
    def words(self):
        return [t.word for t in self.tokens]


class ChartEdge:
    __slots__ = ("start", "end", "parent", "gap", "head_label", "head_pos", "word", "tag",
                 "left_subcat", "right_subcat", "complete", "score",
                 "lverb", "lcom", "rverb", "rcom", "has_left", "bp")

    def __init__(self, start, end, parent, gap, head_label, head_pos, word, tag,
                 left_subcat, right_subcat, complete, score,
                 lverb, lcom, rverb, rcom, has_left, bp):
        self.start = start
        self.end = end
        self.parent = parent          # base label of this constituent
        self.gap = gap                # +gap on this constituent
        self.head_label = head_label  # base label of the head child (None for POS)
        self.head_pos = head_pos
        self.word = word              # lexicon-mapped head word
        self.tag = tag
        self.left_subcat = left_subcat
        self.right_subcat = right_subcat
        self.complete = complete
        self.score = score
        self.lverb = lverb
        self.lcom = lcom
        self.rverb = rverb
        self.rcom = rcom
        self.has_left = has_left
        self.bp = bp

    @property
    def span(self):
        return (self.start, self.end)

    @property
    def label(self) -> Label:
        return Label(self.parent, False, self.gap)

    @property
    def gap_state(self) -> str:
        if self.left_subcat.requires_gap:
            return PENDING_LEFT
        if self.right_subcat.requires_gap:
            return PENDING_RIGHT
        return DISCHARGED if self.gap else NO_GAP

    @property
    def signature(self):
        if self.complete:
            return (True, self.parent, self.gap, self.head_pos, self.tag,
                    self.lverb, self.lcom, self.rverb, self.rcom)
        return (False, self.parent, self.gap, self.head_label, self.head_pos, self.tag,
                self.left_subcat, self.right_subcat,
                self.lverb, self.lcom, self.rverb, self.rcom, self.has_left)

    def __repr__(self):
        return "<%s%s %s(%s/%s) %d-%d %s %s %.4f>" % (
            self.parent, "+gap" if self.gap else "", "+" if self.complete else "-",
            self.word, self.tag, self.start, self.end, self.left_subcat,
            self.right_subcat, self.score)


def _right_distance(e: ChartEdge) -> str:
    if e.end == e.head_pos + 1:
        return "1/0/0"
    return "0/%d/%d" % (e.rverb, e.rcom)


def _left_distance(e: ChartEdge) -> str:
    if e.start == e.head_pos:
        return "1/0/0"
    return "0/%d/%d" % (e.lverb, e.lcom)


def _span_features(e: ChartEdge):
    verb = e.lverb or e.rverb or is_verb_tag(e.tag)
    commas = e.lcom + e.rcom + (1 if e.tag in COMMA_TAGS else 0)
    return verb, min(commas, MORE_THAN_2)


def seed_edges(sentence: TaggedSentence, params: ParameterTables) -> list:
    """One complete preterminal edge per token and candidate tag."""
    if len(sentence) == 0:
        raise ValueError("empty sentence")
    wmap = params.lexicon.map_word
    out = []
    for i, tok in enumerate(sentence.tokens):
        w = wmap(tok.word)
        for tag in tok.tags:
            out.append(ChartEdge(i, i + 1, tag, False, None, i, w, tag,
                                 EMPTY_FRAME, EMPTY_FRAME, True, 0.0,
                                 False, 0, False, 0, False, ("seed",)))
    return out


def project(edge: ChartEdge, model: int, params: ParameterTables) -> list:
    """Incomplete parents headed by a complete ``edge``."""
    if not edge.complete:
        raise ValueError("only complete edges project")
    H = edge.parent
    w, t = edge.word, edge.tag
    out = []
    for P in params.parents_of(H):
        ph = params.prob(PC.P_H, head_keys(P, w, t), H)
        if ph <= 0.0:
            continue
        base = edge.score + math.log(ph)
        fkeys = frame_keys(P, H, w, t)
        options = []
        if model == 3:
            if edge.gap:
                options.append((True, GapDirection.HEAD))
            else:
                options += [(False, None), (True, GapDirection.LEFT), (True, GapDirection.RIGHT)]
        elif not edge.gap:
            options.append((False, None))
        for gap, g in options:
            score = base
            if g is not None:
                pg = params.prob(PC.P_G, fkeys, g.value)
                if pg <= 0.0:
                    continue
                score += math.log(pg)
            if model >= 2:
                frames = []
                for lc_text in params.outcomes_at(PC.P_LC, 2).get((P, H), ()):
                    plc = params.prob(PC.P_LC, fkeys, lc_text)
                    if plc <= 0.0:
                        continue
                    for rc_text in params.outcomes_at(PC.P_RC, 2).get((P, H), ()):
                        prc = params.prob(PC.P_RC, fkeys, rc_text)
                        if prc <= 0.0:
                            continue
                        frames.append((_frame(lc_text), _frame(rc_text),
                                       math.log(plc) + math.log(prc)))
            else:
                frames = [(EMPTY_FRAME, EMPTY_FRAME, 0.0)]
            for lc, rc, fs in frames:
                if g is GapDirection.LEFT:
                    lc = lc.with_gap(True)
                elif g is GapDirection.RIGHT:
                    rc = rc.with_gap(True)
                out.append(ChartEdge(edge.start, edge.end, P, gap, H, edge.head_pos, w, t,
                                     lc, rc, False, score + fs,
                                     edge.lverb, edge.lcom, edge.rverb, edge.rcom, False,
                                     ("proj", edge)))
    return out


_FRAMES = {}


def _frame(text: str) -> SubcatFrame:
    fr = _FRAMES.get(text)
    if fr is None:
        fr = _FRAMES[text] = SubcatFrame.parse(text)
    return fr


def modifier_variants(mod: ChartEdge, model: int) -> list:
    """Labels a complete edge can take as a modifier: plain and (model >= 2) -C."""
    plain = Label(mod.parent, False, mod.gap)
    if model >= 2:
        return [plain, Label(mod.parent, True, mod.gap)]
    return [plain]


def attach(parent: ChartEdge, modifier: Optional[ChartEdge], side: str, model: int,
           params: ParameterTables, label: Optional[Label] = None) -> Optional[ChartEdge]:
    """Add ``modifier`` (complete, adjacent on ``side``) to an incomplete parent.

    ``modifier=None`` attaches a zero-width TRACE.  ``label`` picks the
    modifier's label variant (default: plain label).  Returns None when the
    subcat or gap constraints give the attachment probability zero.
    """
    if parent.complete:
        raise ValueError("parent must be incomplete")
    right = side == RIGHT
    if right and parent.has_left:
        return None
    if not right and not parent.right_subcat.is_empty:
        return None
    frame = parent.right_subcat if right else parent.left_subcat
    if modifier is None:
        mlab = _TRACE_LABEL
        if not (frame.requires_gap and NP_COMPLEMENT in frame):
            return None
    else:
        if not modifier.complete:
            raise ValueError("modifier must be complete")
        if right and modifier.start != parent.end or not right and modifier.end != parent.start:
            raise ValueError("modifier not adjacent on the %s" % side)
        mlab = label if label is not None else Label(modifier.parent, False, modifier.gap)
        if mlab.is_complement and Label(mlab.base, True) not in frame:
            return None
        if modifier.gap and parent.gap and not frame.requires_gap:
            return None
    d = _right_distance(parent) if right else _left_distance(parent)
    P, H, w, t = parent.parent, parent.head_label, parent.word, parent.tag
    lc_text = frame.text
    k1 = mod1_keys(P, H, w, t, d, lc_text)
    if modifier is None:
        p = params.prob(PC.P_R1 if right else PC.P_L1, k1, TRACE)
        if p <= 0.0:
            return None
        score = parent.score + math.log(p)
        new_frame = frame_after(frame, mlab)
        bp = ("trace", side, parent)
        start, end = parent.start, parent.end
        verb, com = False, 0
    else:
        mtext = mlab.text
        p1 = params.prob(PC.P_R1 if right else PC.P_L1, k1, mtext + "/" + modifier.tag)
        if p1 <= 0.0:
            return None
        p2 = params.prob(PC.P_R2 if right else PC.P_L2,
                         mod2_keys(mtext, modifier.tag, P, H, w, t, d, lc_text), modifier.word)
        if p2 <= 0.0:
            return None
        score = parent.score + modifier.score + math.log(p1) + math.log(p2)
        new_frame = frame_after(frame, mlab)
        bp = ("attach", side, parent, modifier, mlab)
        if right:
            start, end = parent.start, modifier.end
        else:
            start, end = modifier.start, parent.end
        verb, com = _span_features(modifier)
    if right:
        return ChartEdge(start, end, P, parent.gap, H, parent.head_pos, w, t,
                         parent.left_subcat, new_frame, False, score,
                         parent.lverb, parent.lcom, parent.rverb or verb,
                         min(parent.rcom + com, MORE_THAN_2), False, bp)
    return ChartEdge(start, end, P, parent.gap, H, parent.head_pos, w, t,
                     new_frame, parent.right_subcat, False, score,
                     parent.lverb or verb, min(parent.lcom + com, MORE_THAN_2),
                     parent.rverb, parent.rcom, True, bp)


def complete(edge: ChartEdge, model: int, params: ParameterTables) -> Optional[ChartEdge]:
    """Add both STOP probabilities; None unless both frames are empty."""
    if edge.complete:
        raise ValueError("edge already complete")
    if not (edge.left_subcat.is_empty and edge.right_subcat.is_empty):
        return None
    P, H, w, t = edge.parent, edge.head_label, edge.word, edge.tag
    pr = params.prob(PC.P_R1, mod1_keys(P, H, w, t, _right_distance(edge), "{}"), STOP)
    if pr <= 0.0:
        return None
    pl = params.prob(PC.P_L1, mod1_keys(P, H, w, t, _left_distance(edge), "{}"), STOP)
    if pl <= 0.0:
        return None
    return ChartEdge(edge.start, edge.end, P, edge.gap, H, edge.head_pos, w, t,
                     EMPTY_FRAME, EMPTY_FRAME, True, edge.score + math.log(pr) + math.log(pl),
                     edge.lverb, edge.lcom, edge.rverb, edge.rcom, False, ("complete", edge))


def top_score(edge: ChartEdge, params: ParameterTables) -> float:
    """Log probability of generating ``edge`` below TOP; -inf if impossible."""
    if edge.gap or not edge.complete:
        return NEG_INF
    lab = edge.parent
    p = params.prob(PC.P_TOP, TOP_KEYS, lab + "/" + edge.tag)
    if p <= 0.0:
        return NEG_INF
    pw = params.prob(PC.P_R2, top_word_keys(lab, edge.tag), edge.word)
    if pw <= 0.0:
        return NEG_INF
    return edge.score + math.log(p) + math.log(pw)


class Chart:
    """Best edge per signature for every span, complete and incomplete apart."""

    def __init__(self, n: int):
        self.n = n
        self.complete = [[{} for _ in range(n + 1)] for _ in range(n + 1)]
        self.incomplete = [[{} for _ in range(n + 1)] for _ in range(n + 1)]

    def add(self, edge: ChartEdge) -> bool:
        """Insert unless an edge with this signature scores at least as well."""
        table = (self.complete if edge.complete else self.incomplete)[edge.start][edge.end]
        sig = edge.signature
        old = table.get(sig)
        if old is not None and old.score >= edge.score:
            return False
        table[sig] = edge
        return True

    def edges(self, start, end, complete=True):
        return list((self.complete if complete else self.incomplete)[start][end].values())

    def prune(self, start, end, log_beam: float):
        for tables in (self.complete, self.incomplete):
            table = tables[start][end]
            if not table:
                continue
            best = max(e.score for e in table.values())
            floor = best + log_beam
            for sig in [s for s, e in table.items() if e.score < floor]:
                del table[sig]

    def __len__(self):
        return sum(len(c) for row in self.complete for c in row) + \
            sum(len(c) for row in self.incomplete for c in row)


@dataclass
class ParseResult:
    tree: Optional[LexTree]
    score: float
    edges: int = 0

    @property
    def ok(self) -> bool:
        return self.tree is not None


class Decoder:
    def __init__(self, params: ParameterTables, model: Optional[int] = None,
                 beam: Optional[float] = DEFAULT_BEAM, max_unary: int = MAX_UNARY_DEPTH):
        self.params = params
        self.model = params.model if model is None else model
        if self.model != params.model:
            raise ValueError("parameters were trained for model %d" % params.model)
        if beam is not None and not beam > 0:
            raise ValueError("beam must be > 0 or None")
        # relative probability threshold below the best edge of a span
        self.log_beam = None if beam is None else -abs(math.log(beam))
        self.max_unary = max_unary

    def seed_chart(self, sentence: TaggedSentence) -> Chart:
        chart = Chart(len(sentence))
        for e in seed_edges(sentence, self.params):
            chart.add(e)
        return chart

    def _traces(self, edges):
        """Zero-width TRACE attachments on incomplete edges with a pending gap."""
        out = []
        if self.model != 3:
            return out
        for e in edges:
            if e.right_subcat.requires_gap:
                ne = attach(e, None, RIGHT, 3, self.params)
            elif e.left_subcat.requires_gap:
                ne = attach(e, None, LEFT, 3, self.params)
            else:
                continue
            if ne is not None:
                out.append(ne)
        return out

    def _close_span(self, chart: Chart, s: int, e: int, incompletes, completes):
        """Traces, completion and bounded unary projection within one span."""
        model, params = self.model, self.params
        new_inc = [x for x in incompletes if chart.add(x)]
        new_inc += [x for x in self._traces(new_inc) if chart.add(x)]
        changed = [x for x in completes if chart.add(x)]
        for x in new_inc:
            c = complete(x, model, params)
            if c is not None and chart.add(c):
                changed.append(c)
        for _ in range(self.max_unary):
            if not changed:
                break
            projected = []
            for c in changed:
                for p in project(c, model, params):
                    if chart.add(p):
                        projected.append(p)
            projected += [x for x in self._traces(projected) if chart.add(x)]
            changed = []
            for p in projected:
                c = complete(p, model, params)
                if c is not None and chart.add(c):
                    changed.append(c)
        # incomplete parents of the last round's completions still need to exist
        for c in changed:
            for p in project(c, model, params):
                if chart.add(p):
                    for x in self._traces([p]):
                        chart.add(x)

    def fill(self, sentence: TaggedSentence) -> Chart:
        n = len(sentence)
        if n == 0:
            raise ValueError("empty sentence")
        chart = Chart(n)
        seeds = seed_edges(sentence, self.params)
        for i in range(n):
            self._close_span(chart, i, i + 1, [], [x for x in seeds if x.start == i])
            if self.log_beam is not None:
                chart.prune(i, i + 1, self.log_beam)
        model, params = self.model, self.params
        for length in range(2, n + 1):
            for s in range(0, n - length + 1):
                e = s + length
                inc = []
                for m in range(s + 1, e):
                    mods = chart.complete[m][e]
                    if mods:
                        for par in chart.incomplete[s][m].values():
                            if par.has_left:
                                continue
                            for mod in mods.values():
                                for lab in modifier_variants(mod, model):
                                    x = attach(par, mod, RIGHT, model, params, lab)
                                    if x is not None:
                                        inc.append(x)
                    mods = chart.complete[s][m]
                    if mods:
                        for par in chart.incomplete[m][e].values():
                            if not par.right_subcat.is_empty:
                                continue
                            for mod in mods.values():
                                for lab in modifier_variants(mod, model):
                                    x = attach(par, mod, LEFT, model, params, lab)
                                    if x is not None:
                                        inc.append(x)
                self._close_span(chart, s, e, inc, [])
                if self.log_beam is not None:
                    chart.prune(s, e, self.log_beam)
        return chart

    def parse(self, sentence: TaggedSentence) -> ParseResult:
        chart = self.fill(sentence)
        best, best_score = None, NEG_INF
        for edge in chart.complete[0][len(sentence)].values():
            sc = top_score(edge, self.params)
            if sc > best_score:
                best, best_score = edge, sc
        if best is None:
            return ParseResult(None, NEG_INF, len(chart))
        tree = build_tree(best, sentence)
        top = LexTree(Label(TOP), tree.head, (tree,), 0)
        return ParseResult(top, best_score, len(chart))


def build_tree(edge: ChartEdge, sentence: TaggedSentence, label: Optional[Label] = None) -> LexTree:
    """Follow back-pointers of a complete edge to a LexTree with surface words."""
    if label is None:
        label = edge.label
    kind = edge.bp[0]
    if kind == "seed":
        return LexTree(label, HeadedWord(sentence.tokens[edge.head_pos].word, edge.tag))
    if kind != "complete":
        raise ValueError("not a complete edge")
    lefts, rights = [], []
    inc = edge.bp[1]
    while True:
        bp = inc.bp
        if bp[0] == "proj":
            head = build_tree(bp[1], sentence)
            break
        if bp[0] == "trace":
            node = LexTree(_TRACE_LABEL, None)
            side, inc = bp[1], bp[2]
        else:
            _, side, inc, mod, mlab = bp
            node = build_tree(mod, sentence, mlab)
        # back-pointers unwind outside-in
        (rights if side == RIGHT else lefts).append(node)
    children = tuple(lefts) + (head,) + tuple(reversed(rights))
    return LexTree(label, head.head, children, len(lefts))


def parse(sentence: TaggedSentence, model: int, params: ParameterTables,
          beam: Optional[float] = DEFAULT_BEAM) -> ParseResult:
    return Decoder(params, model, beam).parse(sentence)
