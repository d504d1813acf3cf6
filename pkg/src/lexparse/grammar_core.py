"""Labels, lexicalised trees, subcat frames, distances and generation events.

A lexicalised tree is scored by decomposing it into a sequence of atomic
generation events (head choice, subcat frames, gap direction, left/right
modifiers ending in STOP).  The probability of the tree is the product of the
event probabilities; :func:`tree_log_probability` sums their logs.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple, Optional, Sequence, Union

TOP = "TOP"
STOP = "STOP"
TRACE = "TRACE"
UNKNOWN = "UNKNOWN"

LEFT = "left"
RIGHT = "right"

# frames with more complements than this are treated as annotation noise
MAX_FRAME_SIZE = 4

COMMA_TAGS = frozenset([",", ":"])
MORE_THAN_2 = 3

NEG_INF = float("-inf")

_SPECIAL = (TOP, STOP, TRACE)


def is_verb_tag(tag: str) -> bool:
    return tag.startswith("VB") or tag == "MD"


@dataclass(frozen=True, order=True)
class Label:
    """A nonterminal or POS tag with complement and gap flags."""

    base: str
    is_complement: bool = False
    has_gap: bool = False

    def __post_init__(self):
        if not self.base:
            raise ValueError("empty label")
        if self.base in _SPECIAL and (self.is_complement or self.has_gap):
            raise ValueError("%s cannot carry -C or +gap" % self.base)

    def __str__(self):
        return self.text

    @cached_property
    def text(self) -> str:
        s = self.base
        if self.is_complement:
            s += "-C"
        if self.has_gap:
            s += "+gap"
        return s

    @classmethod
    def parse(cls, text: str) -> "Label":
        """Inverse of ``str(label)``: ``"S-C+gap"`` -> Label("S", True, True)."""
        gap = text.endswith("+gap")
        if gap:
            text = text[:-4]
        comp = text.endswith("-C") and len(text) > 2
        if comp:
            text = text[:-2]
        return cls(text, comp, gap)

    def stripped(self) -> "Label":
        if not (self.is_complement or self.has_gap):
            return self
        return Label(self.base)

    def with_flags(self, is_complement=None, has_gap=None) -> "Label":
        return Label(
            self.base,
            self.is_complement if is_complement is None else is_complement,
            self.has_gap if has_gap is None else has_gap,
        )


class HeadedWord(NamedTuple):
    word: str
    tag: str


def _check_headed(hw: HeadedWord):
    if not hw.word or not hw.tag:
        raise ValueError("head word and tag must be nonempty: %r" % (hw,))


@dataclass(frozen=True)
class SubcatFrame:
    """Multiset of required complement labels, plus an optional gap requirement.

    ``counts`` is a sorted tuple of ``(label_text, multiplicity)`` pairs.
    """

    counts: tuple = ()
    requires_gap: bool = False

    def __post_init__(self):
        for name, n in self.counts:
            if n < 1:
                raise ValueError("frame multiplicities must be >= 1")

    @classmethod
    def from_labels(cls, labels, requires_gap=False) -> "SubcatFrame":
        tally = {}
        for lab in labels:
            key = str(lab)
            tally[key] = tally.get(key, 0) + 1
        return cls(tuple(sorted(tally.items())), requires_gap)

    @classmethod
    def parse(cls, text: str) -> "SubcatFrame":
        text = text.strip()
        if not (text.startswith("{") and text.endswith("}")):
            raise ValueError("malformed subcat frame %r" % text)
        items = [x for x in text[1:-1].split(",") if x]
        gap = "+gap" in items
        return cls.from_labels([x for x in items if x != "+gap"], gap)

    def __len__(self):
        return sum(n for _, n in self.counts)

    def __contains__(self, label) -> bool:
        key = str(label)
        return any(name == key for name, _ in self.counts)

    def __str__(self):
        return self.text

    @cached_property
    def text(self) -> str:
        items = [name for name, n in self.counts for _ in range(n)]
        if self.requires_gap:
            items.append("+gap")
        return "{" + ",".join(items) + "}"

    @property
    def is_empty(self) -> bool:
        return not self.counts and not self.requires_gap

    def remove(self, label) -> "SubcatFrame":
        key = str(label)
        out = []
        found = False
        for name, n in self.counts:
            if name == key and not found:
                found = True
                if n > 1:
                    out.append((name, n - 1))
            else:
                out.append((name, n))
        if not found:
            raise KeyError(key)
        return SubcatFrame(tuple(out), self.requires_gap)

    def with_gap(self, flag: bool) -> "SubcatFrame":
        return SubcatFrame(self.counts, flag)

    def without_gap(self) -> "SubcatFrame":
        return SubcatFrame(self.counts, False)


EMPTY_FRAME = SubcatFrame()


class Distance(NamedTuple):
    adjacent: bool
    contains_verb: bool
    comma_bucket: int  # 0, 1, 2 or MORE_THAN_2

    def __str__(self):
        return "%d/%d/%d" % (self.adjacent, self.contains_verb, self.comma_bucket)

    @classmethod
    def parse(cls, text: str) -> "Distance":
        a, v, c = text.split("/")
        return cls(a == "1", v == "1", int(c))


ADJACENT = Distance(True, False, 0)


def distance_of_tags(tags: Sequence[str]) -> Distance:
    if not tags:
        return ADJACENT
    verb = any(is_verb_tag(t) for t in tags)
    commas = sum(1 for t in tags if t in COMMA_TAGS)
    return Distance(False, verb, min(commas, MORE_THAN_2))


def distance_between(head_position: int, edge_position: int, sentence) -> Distance:
    """Distance feature for the string between a head word and a modifier edge.

    ``sentence`` is a sequence of tags or ``(word, tag)`` pairs.  For
    ``edge_position >= head_position`` the string runs from the token after the
    head through ``edge_position`` inclusive; otherwise from ``edge_position``
    through the token before the head.  Passing the head position itself as the
    edge gives the empty string.
    """
    n = len(sentence)
    if not (0 <= head_position < n and 0 <= edge_position < n):
        raise IndexError("position out of range for sentence of length %d" % n)
    tags = [t if isinstance(t, str) else t[1] for t in sentence]
    if edge_position >= head_position:
        span = tags[head_position + 1:edge_position + 1]
    else:
        span = tags[edge_position:head_position]
    return distance_of_tags(span)


class GapDirection(enum.Enum):
    HEAD = "Head"
    LEFT = "Left"
    RIGHT = "Right"


@dataclass(frozen=True)
class LexTree:
    """A headed, lexicalised tree node.

    Preterminals have no children and carry the terminal in ``head.word``.
    TRACE leaves have no children and no head.  ``function_tags`` and
    ``coindex`` only live through annotation; a childless non-TRACE node with
    no head is a null-element placeholder awaiting gap threading.
    """

    label: Label
    head: Optional[HeadedWord]
    children: tuple = ()
    head_child_index: Optional[int] = None
    function_tags: frozenset = field(default=frozenset(), compare=False)
    coindex: Optional[int] = field(default=None, compare=False)

    def __post_init__(self):
        if self.children:
            h = self.head_child_index
            if h is None or not 0 <= h < len(self.children):
                raise ValueError("head child index out of range at %s" % self.label)
            if self.children[h].head != self.head:
                raise ValueError("head inheritance violated at %s" % self.label)
            if self.head is None:
                raise ValueError("internal node %s without a head" % self.label)
            _check_headed(self.head)
        elif self.head is not None:
            _check_headed(self.head)
            if self.label.base != self.head.tag:
                raise ValueError("preterminal label %s != tag %s" % (self.label, self.head.tag))
            if self.label.has_gap:
                raise ValueError("POS tag %s cannot carry +gap" % self.label)

    @property
    def is_preterminal(self) -> bool:
        return not self.children and self.head is not None

    @property
    def is_trace(self) -> bool:
        return not self.children and self.label.base == TRACE

    @property
    def is_null(self) -> bool:
        return not self.children and self.head is None and self.label.base != TRACE

    @property
    def head_child(self) -> "LexTree":
        return self.children[self.head_child_index]

    @cached_property
    def n_tokens(self) -> int:
        if not self.children:
            return 1 if self.head is not None else 0
        return sum(c.n_tokens for c in self.children)

    @cached_property
    def head_offset(self) -> int:
        """Token offset of the head word from this node's first token."""
        if not self.children:
            return 0
        h = self.head_child_index
        return sum(c.n_tokens for c in self.children[:h]) + self.children[h].head_offset

    def tokens(self) -> list:
        """Preterminal (word, tag) pairs, left to right; traces excluded."""
        out = []
        stack = [self]
        while stack:
            node = stack.pop()
            if node.is_preterminal:
                out.append(node.head)
            else:
                stack.extend(reversed(node.children))
        return out

    def subtrees(self):
        yield self
        for c in self.children:
            yield from c.subtrees()

    def __str__(self):
        from .treebank_io import write_tree
        return write_tree(self)


# --- events ---------------------------------------------------------------

@dataclass(frozen=True)
class TopEvent:
    label: Label
    head: HeadedWord


@dataclass(frozen=True)
class HeadEvent:
    parent: Label
    head: HeadedWord
    outcome: Label


@dataclass(frozen=True)
class SubcatEvent:
    side: str
    parent: Label
    head_label: Label
    head: HeadedWord
    outcome: SubcatFrame


@dataclass(frozen=True)
class GapEvent:
    parent: Label
    head_label: Label
    head: HeadedWord
    outcome: GapDirection


@dataclass(frozen=True)
class ModifierEvent:
    side: str
    parent: Label
    head_label: Label
    head: HeadedWord
    distance: Distance
    subcat: SubcatFrame
    outcome: Label
    word: Optional[HeadedWord] = None

    def __post_init__(self):
        if self.outcome.base in (STOP, TRACE) and self.word is not None:
            raise ValueError("%s modifiers carry no word" % self.outcome.base)


Event = Union[TopEvent, HeadEvent, SubcatEvent, GapEvent, ModifierEvent]


class FrameError(ValueError):
    """A node's complements cannot be covered by a legal subcat frame."""


class GapError(ValueError):
    """A node's gap annotation does not discharge exactly one gap."""


NP_COMPLEMENT = Label("NP", True)


def frame_of(children) -> SubcatFrame:
    """Complements among ``children``; TRACE stands in for an NP-C."""
    labels = []
    for c in children:
        if c.is_trace:
            labels.append(NP_COMPLEMENT)
        elif c.label.is_complement:
            labels.append(Label(c.label.base, True))
    return SubcatFrame.from_labels(labels)


def frame_after(frame: SubcatFrame, mod: Label) -> SubcatFrame:
    """Remaining frame after generating modifier ``mod``."""
    if mod.base == TRACE:
        return frame.remove(NP_COMPLEMENT).without_gap()
    if mod.is_complement:
        frame = frame.remove(Label(mod.base, True))
    if mod.has_gap and frame.requires_gap:
        frame = frame.without_gap()
    return frame


def violates_frame(mod: Label, frame: SubcatFrame) -> bool:
    """Hard subcat constraints: such modifiers have probability zero."""
    if mod.base == STOP:
        return not frame.is_empty
    if mod.base == TRACE:
        return not (frame.requires_gap and NP_COMPLEMENT in frame)
    if mod.is_complement:
        return Label(mod.base, True) not in frame
    return False


def gap_direction(node: LexTree) -> GapDirection:
    """Where a +gap node passes its gap; raises GapError unless exactly one carrier."""
    h = node.head_child_index
    carriers = [i for i, c in enumerate(node.children) if c.label.has_gap or c.is_trace]
    if len(carriers) != 1:
        raise GapError("node %s has %d gap carriers, expected 1" % (node.label, len(carriers)))
    i = carriers[0]
    if i == h:
        return GapDirection.HEAD
    return GapDirection.LEFT if i < h else GapDirection.RIGHT


def tree_event_sequence(tree: LexTree, model: int) -> list:
    """Complete generative derivation of ``tree`` under model 1, 2 or 3.

    The root may be a TOP node (as produced by annotation) or the phrase below
    it.  Per node: head, subcat frames (model >= 2), gap direction (model 3,
    +gap nodes only), right modifiers inside-out then STOP, left modifiers
    inside-out then STOP; children follow depth-first.
    """
    if model not in (1, 2, 3):
        raise ValueError("model must be 1, 2 or 3")
    root = tree.children[0] if tree.label.base == TOP else tree
    tags = [hw.tag for hw in root.tokens()]
    events = [TopEvent(root.label, root.head)]
    if root.children:
        _node_events(root, 0, tags, model, events)
    return events


def _node_events(node: LexTree, start: int, tags, model: int, events: list):
    children = node.children
    h = node.head_child_index
    hc = children[h]
    P = node.label.stripped()
    H = hc.label.stripped()
    hw = node.head
    if node.label.has_gap and model < 3:
        raise GapError("+gap on %s requires model 3" % node.label)
    if hc.label.has_gap and not node.label.has_gap:
        raise GapError("gap-carrying head child under non-gap %s" % node.label)

    starts = []
    pos = start
    for c in children:
        starts.append(pos)
        pos += c.n_tokens
    hp = start + node.head_offset

    events.append(HeadEvent(P, hw, H))
    lefts = list(range(h - 1, -1, -1))
    rights = list(range(h + 1, len(children)))
    if model >= 2:
        lc = frame_of(children[i] for i in lefts)
        rc = frame_of(children[i] for i in rights)
        for side, fr in ((LEFT, lc), (RIGHT, rc)):
            if len(fr) > MAX_FRAME_SIZE:
                raise FrameError("%s frame %s of node %s(%s) exceeds %d complements"
                                 % (side, fr, node.label, hw.word, MAX_FRAME_SIZE))
        events.append(SubcatEvent(LEFT, P, H, hw, lc))
        events.append(SubcatEvent(RIGHT, P, H, hw, rc))
    else:
        lc = rc = EMPTY_FRAME

    if model == 3:
        if node.label.has_gap:
            g = gap_direction(node)
            events.append(GapEvent(P, H, hw, g))
            if g is GapDirection.LEFT:
                lc = lc.with_gap(True)
            elif g is GapDirection.RIGHT:
                rc = rc.with_gap(True)
        elif any(c.is_trace for c in children):
            raise GapError("TRACE under non-gap node %s" % node.label)
    elif any(c.is_trace for c in children):
        raise GapError("TRACE under %s requires model 3" % node.label)

    # right side: string from the token after the head word to the right edge
    edge = starts[h] + hc.n_tokens
    frame = rc
    for i in rights:
        c = children[i]
        ev = _modifier(RIGHT, P, H, hw, distance_of_tags(tags[hp + 1:edge]), frame, c, model)
        events.append(ev)
        frame = frame_after(frame, ev.outcome) if model >= 2 else frame
        edge = starts[i] + c.n_tokens
    events.append(ModifierEvent(RIGHT, P, H, hw, distance_of_tags(tags[hp + 1:edge]),
                                frame, Label(STOP)))
    edge = starts[h]
    frame = lc
    for i in lefts:
        c = children[i]
        ev = _modifier(LEFT, P, H, hw, distance_of_tags(tags[edge:hp]), frame, c, model)
        events.append(ev)
        frame = frame_after(frame, ev.outcome) if model >= 2 else frame
        edge = starts[i]
    events.append(ModifierEvent(LEFT, P, H, hw, distance_of_tags(tags[edge:hp]),
                                frame, Label(STOP)))

    for i in [h] + rights + lefts:
        c = children[i]
        if c.children:
            _node_events(c, starts[i], tags, model, events)


def _modifier(side, P, H, hw, dist, frame, child, model) -> ModifierEvent:
    if child.is_trace:
        return ModifierEvent(side, P, H, hw, dist, frame, Label(TRACE))
    if child.is_null:
        raise ValueError("unthreaded null element under %s" % P)
    lab = child.label
    if model == 1 and lab.is_complement:
        lab = lab.with_flags(is_complement=False)
    return ModifierEvent(side, P, H, hw, dist, frame, lab, child.head)


def tree_log_probability(tree: LexTree, model: int, params) -> float:
    """Sum of log event probabilities; ``NEG_INF`` if any event has probability 0."""
    pmodel = getattr(params, "model", model)
    if pmodel != model:
        raise ValueError("parameters trained for model %d, not %d" % (pmodel, model))
    total = 0.0
    for ev in tree_event_sequence(tree, model):
        p = params.event_probability(ev)
        if p <= 0.0:
            return NEG_INF
        total += math.log(p)
    return total
