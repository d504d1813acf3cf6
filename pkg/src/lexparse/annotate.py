"""Raw treebank trees to annotated lexicalised trees.

Pipeline: :func:`lexicalize` (head finding, TOP node, null-element
placeholders for NP traces), :func:`mark_complements` (``-C``) and
:func:`thread_gaps` (``+gap`` paths ending in TRACE).  :func:`annotate` runs
the steps a given model needs.
"""
from __future__ import annotations

import logging
import re
from importlib import resources
from typing import Optional

from .grammar_core import TOP, TRACE, HeadedWord, Label, LexTree
from .treebank_io import RawTree, parse_label

log = logging.getLogger(__name__)

PUNCT_TAGS = frozenset([".", ",", ":", "``", "''"])
EXCLUDED_SEMANTIC_TAGS = frozenset(
    ["ADV", "VOC", "BNF", "DIR", "EXT", "LOC", "MNR", "TMP", "CLR", "PRP"])
NONE_TAG = "-NONE-"

_COMPLEMENT_PARENTS = {
    "S": frozenset(["NP", "SBAR", "S"]),
    "VP": frozenset(["NP", "SBAR", "S", "VP"]),
    "SBAR": frozenset(["S"]),
}
_TRACE_RE = re.compile(r"^\*T\*-(\d+)$")


class HeadRuleTable:
    """Per-parent priority lists for head finding.

    ``rules`` maps a parent label to a list of ``(direction, priorities)``
    passes, direction being ``"left"`` (scan left-to-right) or ``"right"``.
    """

    def __init__(self, rules: dict, default=("left", ())):
        for parent, passes in rules.items():
            for direction, _ in passes:
                if direction not in ("left", "right"):
                    raise ValueError("bad direction %r for %s" % (direction, parent))
        self.rules = rules
        self.default = [tuple(default)] if isinstance(default[0], str) else list(default)

    @classmethod
    def from_text(cls, text: str) -> "HeadRuleTable":
        rules = {}
        default = None
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            fields = line.split()
            if len(fields) < 2 or fields[1] not in ("left", "right"):
                raise ValueError("head rules line %d: expected 'PARENT left|right ...'" % lineno)
            entry = (fields[1], tuple(fields[2:]))
            if fields[0] == "*":
                default = entry
            else:
                rules.setdefault(fields[0], []).append(entry)
        return cls(rules, default or ("left", ()))

    @classmethod
    def from_file(cls, path) -> "HeadRuleTable":
        with open(path, encoding="utf-8") as f:
            return cls.from_text(f.read())

    @classmethod
    def default_table(cls) -> "HeadRuleTable":
        text = resources.files("lexparse").joinpath("data/head_rules.txt").read_text("utf-8")
        return cls.from_text(text)

    def find(self, parent: str, children) -> int:
        n = len(children)
        if n == 0:
            raise ValueError("no children")
        if n == 1:
            return 0
        cands = [i for i, c in enumerate(children) if c not in PUNCT_TAGS and c != NONE_TAG]
        if not cands:
            cands = list(range(n))
        passes = self.rules.get(parent, self.default)
        for direction, prio in passes:
            order = cands if direction == "left" else cands[::-1]
            for lab in prio:
                for i in order:
                    if children[i] == lab:
                        return self._coordination(i, children)
        first = passes[0][0]
        return self._coordination(cands[0] if first == "left" else cands[-1], children)

    @staticmethod
    def _coordination(h, children):
        # "X CC X": the first conjunct heads
        if h >= 2 and children[h - 1] == "CC" and children[h - 2] not in PUNCT_TAGS:
            return h - 2
        return h


_DEFAULT_TABLE = None


def default_heads() -> HeadRuleTable:
    global _DEFAULT_TABLE
    if _DEFAULT_TABLE is None:
        _DEFAULT_TABLE = HeadRuleTable.default_table()
    return _DEFAULT_TABLE


def find_head(parent: str, children, heads: Optional[HeadRuleTable] = None) -> int:
    return (heads or default_heads()).find(parent, list(children))


def _base(node: LexTree) -> str:
    return NONE_TAG if node.is_null else node.label.base


def _node(label, children, h, ftags=frozenset(), coindex=None) -> LexTree:
    return LexTree(label, children[h].head, tuple(children), h, ftags, coindex)


def lexicalize(tree: RawTree, heads: Optional[HeadRuleTable] = None) -> LexTree:
    """Head-annotated tree under a new TOP node.

    ``-NONE-`` elements are dropped except ``*T*-k`` NP traces, which become
    childless placeholder nodes carrying coindex ``k`` for :func:`thread_gaps`.
    """
    heads = heads or default_heads()
    if tree.label_text in (TOP, "ROOT") and len(tree.children) == 1:
        tree = tree.children[0]
    root = _lex(tree, heads)
    if root is None or root.is_null:
        raise ValueError("tree has no words")
    return LexTree(Label(TOP), root.head, (root,), 0)


def _lex(raw: RawTree, heads) -> Optional[LexTree]:
    ft = parse_label(raw.label_text)
    if raw.terminal is not None:
        if ft.base == NONE_TAG:
            return None
        return LexTree(Label(ft.base), HeadedWord(raw.terminal, ft.base))
    if (len(raw.children) == 1 and raw.children[0].terminal is not None
            and parse_label(raw.children[0].label_text).base == NONE_TAG):
        m = _TRACE_RE.match(raw.children[0].terminal)
        if m and ft.base == "NP":
            return LexTree(Label("NP"), None, (), None, ft.semantic_tags, int(m.group(1)))
        return None
    kids = [k for k in (_lex(c, heads) for c in raw.children) if k is not None]
    if not kids or all(k.is_null for k in kids):
        return None
    h = heads.find(ft.base, [_base(k) for k in kids])
    return _node(Label(ft.base), kids, h, ft.semantic_tags, ft.coindex)


def _is_punct(node: LexTree) -> bool:
    return node.is_preterminal and node.label.base in PUNCT_TAGS


def mark_complements(tree: LexTree) -> LexTree:
    """Set ``-C`` on complements; recomputed from function tags, so idempotent."""
    if not tree.children:
        return tree
    parent = tree.label.base
    h = tree.head_child_index
    allowed = _COMPLEMENT_PARENTS.get(parent, frozenset())
    pp_target = None
    if parent == "PP":
        for i in range(h + 1, len(tree.children)):
            if not _is_punct(tree.children[i]):
                pp_target = i
                break
    kids = []
    for i, c in enumerate(tree.children):
        comp = False
        if i != h and not _is_punct(c) and not c.is_trace:
            if i == pp_target:
                comp = True
            elif c.label.base in allowed and not (c.function_tags & EXCLUDED_SEMANTIC_TAGS):
                comp = True
        c = mark_complements(c)
        if c.label.is_complement != comp:
            c = _relabel(c, c.label.with_flags(is_complement=comp))
        kids.append(c)
    return LexTree(tree.label, tree.head, tuple(kids), h, tree.function_tags, tree.coindex)


def _relabel(node: LexTree, label: Label) -> LexTree:
    return LexTree(label, node.head, node.children, node.head_child_index,
                   node.function_tags, node.coindex)


def thread_gaps(tree: LexTree) -> LexTree:
    """Replace WHNP-coindexed NP traces by TRACE and mark the ``+gap`` path.

    For each SBAR with a ``WHNP-k`` child, the placeholder with coindex ``k``
    below it becomes a TRACE leaf and every node from the SBAR down to the
    TRACE's parent gets ``+gap``.  Unmatched fillers are logged and left
    alone; placeholders with no filler are logged and deleted.
    """
    tree = _thread(tree)
    return delete_nulls(tree, warn=True)


def _find_path(node: LexTree, k: int):
    """Child-index path to the placeholder with coindex ``k``, or None."""
    for i, c in enumerate(node.children):
        if c.is_null and c.coindex == k:
            return [i]
        if c.children:
            sub = _find_path(c, k)
            if sub is not None:
                return [i] + sub
    return None


def _thread(node: LexTree) -> LexTree:
    if not node.children:
        return node
    kids = tuple(_thread(c) for c in node.children)
    node = LexTree(node.label, node.head, kids, node.head_child_index,
                   node.function_tags, node.coindex)
    if node.label.base != "SBAR":
        return node
    for c in kids:
        if c.label.base == "WHNP" and c.coindex is not None:
            path = _find_path(node, c.coindex)
            if path is None:
                log.warning("WHNP-%d has no matching trace; left unthreaded", c.coindex)
                continue
            node = _mark_path(node, path)
    return node


def _mark_path(node: LexTree, path) -> LexTree:
    i = path[0]
    if len(path) == 1:
        child = LexTree(Label(TRACE), None)
    else:
        child = _mark_path(node.children[i], path[1:])
    kids = list(node.children)
    kids[i] = child
    return LexTree(node.label.with_flags(has_gap=True), node.head, tuple(kids),
                   node.head_child_index, node.function_tags, node.coindex)


def delete_nulls(tree: LexTree, warn: bool = False) -> Optional[LexTree]:
    """Remove remaining null-element placeholders, re-indexing heads."""
    if not tree.children:
        return tree
    kids = []
    h = tree.head_child_index
    new_h = None
    for i, c in enumerate(tree.children):
        if c.is_null:
            if warn:
                log.warning("trace *T*-%s has no filler; deleted", c.coindex)
            continue
        c = delete_nulls(c, warn)
        if c is None:
            continue
        if i == h:
            new_h = len(kids)
        kids.append(c)
    if new_h is None:
        return None
    return LexTree(tree.label, tree.head, tuple(kids), new_h, tree.function_tags, tree.coindex)


def annotate(tree: RawTree, model: int, heads: Optional[HeadRuleTable] = None) -> LexTree:
    """Full annotation for ``model``: heads; ``-C`` for 2 and 3; ``+gap`` for 3."""
    lt = lexicalize(tree, heads)
    if model >= 2:
        lt = mark_complements(lt)
    if model == 3:
        lt = thread_gaps(lt)
    else:
        lt = delete_nulls(lt)
    return lt
