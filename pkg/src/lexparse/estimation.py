"""Back-off count tables, smoothed probabilities, lexicon and model files.

Every event is projected onto the back-off levels of its parameter class and
counted.  A probability is the nested interpolation of the per-level maximum
likelihood estimates, with Witten-Bell weights ``c / (c + 5 d)`` (``c`` the
context count, ``d`` the number of distinct outcomes seen with it).
"""
from __future__ import annotations

import enum
import hashlib
import io
import json
from collections import Counter
from typing import Iterable, Optional

from . import _ext
from .grammar_core import (
    ADJACENT, EMPTY_FRAME, TOP, UNKNOWN, GapEvent, HeadedWord, HeadEvent, Label,
    LexTree, ModifierEvent, SubcatEvent, SubcatFrame, TopEvent, LEFT, violates_frame,
)

LAMBDA_FACTOR = 5.0
UNKNOWN_THRESHOLD = 5
MAX_UNKNOWN_TAGS = 5

MAGIC = b"HPMODEL"
FORMAT_VERSION = 1


class ParameterClass(enum.Enum):
    P_H = "P_H"
    P_G = "P_G"
    P_LC = "P_LC"
    P_RC = "P_RC"
    P_L1 = "P_L1"
    P_R1 = "P_R1"
    P_L2 = "P_L2"
    P_R2 = "P_R2"
    P_TOP = "P_TOP"


PC = ParameterClass

_FRAME_VARS = [("P", "H", "w", "t"), ("P", "H", "t"), ("P", "H")]
_MOD1_VARS = [("P", "H", "w", "t", "dist", "LC"), ("P", "H", "t", "dist", "LC"),
              ("P", "H", "dist", "LC")]
_MOD2_VARS = [("M", "mt", "P", "H", "w", "t", "dist", "LC"),
              ("M", "mt", "P", "H", "t", "dist", "LC"), ("M", "mt"), ("mt",)]

# conditioning variables per back-off level
LEVEL_VARS = {
    PC.P_H: [("P", "w", "t"), ("P", "t"), ("P",)],
    PC.P_G: _FRAME_VARS,
    PC.P_LC: _FRAME_VARS,
    PC.P_RC: _FRAME_VARS,
    PC.P_L1: _MOD1_VARS,
    PC.P_R1: _MOD1_VARS,
    PC.P_L2: _MOD2_VARS,
    PC.P_R2: _MOD2_VARS,
    PC.P_TOP: [("P",)],
}


def project(cls: ParameterClass, context) -> tuple:
    """Back-off keys for ``context`` (a mapping of variable name to value)."""
    return tuple(tuple(str(context[v]) for v in names) for names in LEVEL_VARS[cls])


def head_keys(P, w, t):
    return ((P, w, t), (P, t), (P,))


def frame_keys(P, H, w, t):
    return ((P, H, w, t), (P, H, t), (P, H))


def mod1_keys(P, H, w, t, d, lc):
    return ((P, H, w, t, d, lc), (P, H, t, d, lc), (P, H, d, lc))


def mod2_keys(M, mt, P, H, w, t, d, lc):
    return ((M, mt, P, H, w, t, d, lc), (M, mt, P, H, t, d, lc), (M, mt), (mt,))


TOP_KEYS = ((TOP,),)
_ADJ = str(ADJACENT)
_EMPTY = str(EMPTY_FRAME)


def mod1_outcome(label: Label, tag: Optional[str]) -> str:
    if tag is None:
        return label.text
    return label.text + "/" + tag


def top_word_keys(label: str, tag: str):
    """Word generation for the root head reuses the right-word tables."""
    return mod2_keys(label, tag, TOP, "", "", "", _ADJ, _EMPTY)


def _identity(w):
    return w


def event_observations(ev, wmap=_identity):
    """``(class, keys, outcome)`` triples that an event contributes."""
    if isinstance(ev, ModifierEvent):
        side1, side2 = (PC.P_L1, PC.P_L2) if ev.side == LEFT else (PC.P_R1, PC.P_R2)
        P, H = ev.parent.text, ev.head_label.text
        w, t = wmap(ev.head.word), ev.head.tag
        d, lc = str(ev.distance), ev.subcat.text
        if ev.word is None:
            return [(side1, mod1_keys(P, H, w, t, d, lc), ev.outcome.text)]
        M, mt = ev.outcome.text, ev.word.tag
        return [(side1, mod1_keys(P, H, w, t, d, lc), M + "/" + mt),
                (side2, mod2_keys(M, mt, P, H, w, t, d, lc), wmap(ev.word.word))]
    if isinstance(ev, HeadEvent):
        return [(PC.P_H, head_keys(ev.parent.text, wmap(ev.head.word), ev.head.tag),
                 ev.outcome.text)]
    if isinstance(ev, SubcatEvent):
        cls = PC.P_LC if ev.side == LEFT else PC.P_RC
        return [(cls, frame_keys(ev.parent.text, ev.head_label.text, wmap(ev.head.word),
                                 ev.head.tag), ev.outcome.text)]
    if isinstance(ev, GapEvent):
        return [(PC.P_G, frame_keys(ev.parent.text, ev.head_label.text, wmap(ev.head.word),
                                    ev.head.tag), ev.outcome.value)]
    if isinstance(ev, TopEvent):
        M, mt = ev.label.text, ev.head.tag
        return [(PC.P_TOP, TOP_KEYS, M + "/" + mt),
                (PC.P_R2, top_word_keys(M, mt), wmap(ev.head.word))]
    raise TypeError("not an event: %r" % (ev,))


class CountTables:
    """Context, joint and diversity counts per (class, level)."""

    def __init__(self):
        self.context = {c: [{} for _ in LEVEL_VARS[c]] for c in PC}
        self.joint = {c: [{} for _ in LEVEL_VARS[c]] for c in PC}
        self.diversity = {c: [{} for _ in LEVEL_VARS[c]] for c in PC}

    def add(self, cls: ParameterClass, keys, outcome: str, n: int = 1):
        ctx, jnt, div = self.context[cls], self.joint[cls], self.diversity[cls]
        for i, k in enumerate(keys):
            jk = (k, outcome)
            old = jnt[i].get(jk, 0)
            if not old:
                div[i][k] = div[i].get(k, 0) + 1
            jnt[i][jk] = old + n
            ctx[i][k] = ctx[i].get(k, 0) + n

    def add_event(self, ev, wmap=_identity):
        for cls, keys, outcome in event_observations(ev, wmap):
            self.add(cls, keys, outcome)

    def merge(self, other: "CountTables") -> "CountTables":
        out = CountTables()
        for src in (self, other):
            for cls in PC:
                for i, jnt in enumerate(src.joint[cls]):
                    for (k, o), n in jnt.items():
                        out._add_level(cls, i, k, o, n)
        return out

    def _add_level(self, cls, i, k, o, n):
        jnt = self.joint[cls][i]
        old = jnt.get((k, o), 0)
        if not old:
            self.diversity[cls][i][k] = self.diversity[cls][i].get(k, 0) + 1
        jnt[(k, o)] = old + n
        self.context[cls][i][k] = self.context[cls][i].get(k, 0) + n

    def __eq__(self, other):
        if not isinstance(other, CountTables):
            return NotImplemented
        return (self.joint == other.joint and self.context == other.context
                and self.diversity == other.diversity)

    def n_events(self, cls: ParameterClass) -> int:
        return sum(self.context[cls][-1].values())

    def prob(self, cls: ParameterClass, keys, outcome: str) -> float:
        return _ext.backoff_prob(self.context[cls], self.diversity[cls], self.joint[cls],
                                 keys, outcome, LAMBDA_FACTOR)

    def terms(self, cls: ParameterClass, keys, outcome: str):
        return _ext.backoff_terms(self.context[cls], self.diversity[cls], self.joint[cls],
                                  keys, outcome, LAMBDA_FACTOR)


def accumulate(events: Iterable, tables: Optional[CountTables] = None, wmap=_identity) -> CountTables:
    tables = CountTables() if tables is None else tables
    for ev in events:
        tables.add_event(ev, wmap)
    return tables


def _parse_mod_outcome(outcome: str) -> Label:
    return Label.parse(outcome.rsplit("/", 1)[0] if "/" in outcome else outcome)


def smoothed_prob(cls: ParameterClass, context, outcome: str, tables) -> float:
    """Interpolated estimate of ``outcome`` given ``context`` (variable -> value).

    For modifier-label classes the subcat hard constraints apply: STOP with a
    non-empty frame, a complement missing from the frame, or TRACE without a
    pending gap get probability 0.
    """
    if isinstance(tables, ParameterTables):
        tables = tables.counts
    if cls in (PC.P_L1, PC.P_R1):
        lc = context["LC"]
        frame = lc if isinstance(lc, SubcatFrame) else SubcatFrame.parse(str(lc))
        if violates_frame(_parse_mod_outcome(outcome), frame):
            return 0.0
    return tables.prob(cls, project(cls, context), outcome)


def interpolation_breakdown(cls: ParameterClass, context, outcome: str, tables):
    """(estimates, lambdas, final) exactly as used by :func:`smoothed_prob`."""
    if isinstance(tables, ParameterTables):
        tables = tables.counts
    es, lams = tables.terms(cls, project(cls, context), outcome)
    return es, lams, smoothed_prob(cls, context, outcome, tables)


# --- lexicon -------------------------------------------------------------

class Lexicon:
    """Word counts, per-word tag sets and tags seen on rare words."""

    def __init__(self, word_count=None, tag_dict=None, unknown_tags=None,
                 threshold: int = UNKNOWN_THRESHOLD):
        if threshold < 1:
            raise ValueError("unknown-word threshold must be >= 1")
        self.word_count = Counter(word_count or {})
        self.tag_dict = {w: set(ts) for w, ts in (tag_dict or {}).items()}
        self.unknown_tags = Counter(unknown_tags or {})
        self.threshold = threshold
        for w, ts in self.tag_dict.items():
            if not ts:
                raise ValueError("empty tag set for %r" % w)

    @classmethod
    def build(cls, trees, threshold: int = UNKNOWN_THRESHOLD) -> "Lexicon":
        wc = Counter()
        td = {}
        pairs = []
        for t in trees:
            for w, tag in t.tokens():
                wc[w] += 1
                td.setdefault(w, set()).add(tag)
                pairs.append((w, tag))
        unk = Counter(tag for w, tag in pairs if wc[w] < threshold)
        return cls(wc, td, unk, threshold)

    def is_known(self, word: str) -> bool:
        return self.word_count.get(word, 0) >= self.threshold

    def map_word(self, word: str) -> str:
        return word if self.word_count.get(word, 0) >= self.threshold else UNKNOWN

    def unknown_tag_set(self, limit: int = MAX_UNKNOWN_TAGS) -> list:
        ranked = sorted(self.unknown_tags.items(), key=lambda kv: (-kv[1], kv[0]))
        return [t for t, _ in ranked[:limit]]

    def tags_for(self, word: str) -> list:
        if self.is_known(word):
            return sorted(self.tag_dict[word])
        return self.unknown_tag_set()

    def vocabulary_size(self) -> int:
        return sum(1 for w in self.word_count if self.is_known(w))

    def to_json(self):
        return {
            "threshold": self.threshold,
            "word_count": sorted(self.word_count.items()),
            "tag_dict": sorted((w, sorted(ts)) for w, ts in self.tag_dict.items()),
            "unknown_tags": sorted(self.unknown_tags.items()),
        }

    @classmethod
    def from_json(cls, obj) -> "Lexicon":
        return cls(dict(obj["word_count"]), {w: ts for w, ts in obj["tag_dict"]},
                   dict(obj["unknown_tags"]), obj["threshold"])

    def __eq__(self, other):
        return isinstance(other, Lexicon) and self.to_json() == other.to_json()


def map_unknowns(trees, lexicon: Lexicon) -> list:
    """Replace every word the lexicon does not know by ``UNKNOWN``."""
    return [_map_tree(t, lexicon.map_word) for t in trees]


def _map_tree(node: LexTree, wmap) -> LexTree:
    head = node.head
    if head is not None:
        head = HeadedWord(wmap(head.word), head.tag)
    kids = tuple(_map_tree(c, wmap) for c in node.children)
    return LexTree(node.label, head, kids, node.head_child_index,
                   node.function_tags, node.coindex)


# --- trained model -------------------------------------------------------

class ParameterTables:
    """A trained model: counts, lexicon and config, with cached probabilities.

    Words in queries are mapped through the lexicon, so trees carrying the
    original surface words can be scored directly.
    """

    def __init__(self, model: int, counts: CountTables, lexicon: Lexicon, config=None):
        if model not in (1, 2, 3):
            raise ValueError("model must be 1, 2 or 3")
        self.model = model
        self.counts = counts
        self.lexicon = lexicon
        self.config = dict(config or {})
        self._cache = {}
        self._index = {}

    def prob(self, cls: ParameterClass, keys, outcome: str) -> float:
        ck = (cls, keys, outcome)
        p = self._cache.get(ck)
        if p is None:
            p = self.counts.prob(cls, keys, outcome)
            self._cache[ck] = p
        return p

    def event_probability(self, ev) -> float:
        if isinstance(ev, ModifierEvent) and violates_frame(ev.outcome, ev.subcat):
            return 0.0
        p = 1.0
        for cls, keys, outcome in event_observations(ev, self.lexicon.map_word):
            p *= self.prob(cls, keys, outcome)
        return p

    def outcomes_at(self, cls: ParameterClass, level: int) -> dict:
        """Index: level key -> sorted observed outcomes."""
        idx = self._index.get((cls, level))
        if idx is None:
            tmp = {}
            for (k, o) in self.counts.joint[cls][level]:
                tmp.setdefault(k, []).append(o)
            idx = {k: sorted(v) for k, v in tmp.items()}
            self._index[(cls, level)] = idx
        return idx

    def parents_of(self, head_label: str) -> list:
        idx = self._index.get("parents")
        if idx is None:
            idx = {}
            for (k, o) in self.counts.joint[PC.P_H][2]:
                idx.setdefault(o, []).append(k[0])
            idx = {h: sorted(ps) for h, ps in idx.items()}
            self._index["parents"] = idx
        return idx.get(head_label, [])


# --- model files ---------------------------------------------------------

class ModelFileError(ValueError):
    pass


def _dump(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False).encode("utf-8")


def _counts_json(counts: CountTables, cls: ParameterClass):
    levels = []
    for jnt in counts.joint[cls]:
        levels.append(sorted([list(k), o, n] for (k, o), n in jnt.items()))
    return levels


def save_model(path_or_file, model: int, counts: CountTables, lexicon: Lexicon, config=None):
    """Write a deterministic model file (same inputs give identical bytes)."""
    sections = [("config", _dump(dict(sorted((config or {}).items())))),
                ("lexicon", _dump(lexicon.to_json()))]
    for cls in PC:
        sections.append(("counts:" + cls.value, _dump(_counts_json(counts, cls))))
    buf = io.BytesIO()
    buf.write(MAGIC + b"\n")
    buf.write(b"version=%d\nmodel=%d\nsections=%d\n" % (FORMAT_VERSION, model, len(sections)))
    for name, payload in sections:
        buf.write(b"%s\t%d\n" % (name.encode("ascii"), len(payload)))
        buf.write(payload)
        buf.write(b"\n")
    buf.write(b"END\n")
    data = buf.getvalue()
    if hasattr(path_or_file, "write"):
        path_or_file.write(data)
    else:
        with open(path_or_file, "wb") as f:
            f.write(data)
    return hashlib.sha256(data).hexdigest()


def _readline(f, what):
    line = f.readline()
    if not line.endswith(b"\n"):
        raise ModelFileError("truncated model file (reading %s)" % what)
    return line[:-1]


def _header_int(f, key):
    line = _readline(f, key)
    k, _, v = line.partition(b"=")
    if k != key.encode() or not v.isdigit():
        raise ModelFileError("malformed model header: expected %s=<int>" % key)
    return int(v)


def load_model(path_or_file) -> ParameterTables:
    if hasattr(path_or_file, "read"):
        f = io.BytesIO(path_or_file.read())
    else:
        with open(path_or_file, "rb") as fh:
            f = io.BytesIO(fh.read())
    if f.readline() != MAGIC + b"\n":
        raise ModelFileError("not a model file")
    version = _header_int(f, "version")
    if version != FORMAT_VERSION:
        raise ModelFileError("model file version %d, expected %d" % (version, FORMAT_VERSION))
    model = _header_int(f, "model")
    if model not in (1, 2, 3):
        raise ModelFileError("bad model number %d" % model)
    nsec = _header_int(f, "sections")
    sections = {}
    for _ in range(nsec):
        name, _, size = _readline(f, "section header").partition(b"\t")
        if not size.isdigit():
            raise ModelFileError("malformed section header %r" % name)
        payload = f.read(int(size))
        if len(payload) != int(size) or f.read(1) != b"\n":
            raise ModelFileError("truncated model file (section %s)" % name.decode())
        try:
            sections[name.decode()] = json.loads(payload.decode("utf-8"))
        except ValueError as e:
            raise ModelFileError("corrupt section %s: %s" % (name.decode(), e))
    if f.readline() != b"END\n":
        raise ModelFileError("truncated model file (missing END)")
    try:
        lexicon = Lexicon.from_json(sections["lexicon"])
        counts = CountTables()
        for cls in PC:
            for i, rows in enumerate(sections["counts:" + cls.value]):
                for k, o, n in rows:
                    counts._add_level(cls, i, tuple(k), o, n)
        config = sections["config"]
    except KeyError as e:
        raise ModelFileError("missing section %s" % e)
    return ParameterTables(model, counts, lexicon, config)


def train_counts(trees, model: int, lexicon: Lexicon):
    """Count events of already-annotated trees; returns (counts, skipped)."""
    from .grammar_core import FrameError, GapError, tree_event_sequence
    counts = CountTables()
    skipped = []
    for i, t in enumerate(map_unknowns(trees, lexicon)):
        try:
            events = tree_event_sequence(t, model)
        except (FrameError, GapError) as e:
            skipped.append((i, str(e)))
            continue
        accumulate(events, counts)
    return counts, skipped
