"""Penn Treebank bracketed trees: reading, label splitting, writing."""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

from .grammar_core import TRACE, LexTree


class TreebankSyntaxError(ValueError):
    def __init__(self, msg, line, column):
        super().__init__("%s at line %d, column %d" % (msg, line, column))
        self.reason = msg
        self.line = line
        self.column = column


@dataclass(frozen=True)
class RawTree:
    label_text: str
    children: tuple = ()
    terminal: Optional[str] = None

    def __post_init__(self):
        if not self.label_text:
            raise ValueError("empty label")
        if bool(self.children) == (self.terminal is not None):
            raise ValueError("node %s needs children xor a terminal" % self.label_text)

    @property
    def is_preterminal(self):
        return self.terminal is not None

    def leaves(self):
        if self.terminal is not None:
            return [(self.terminal, self.label_text)]
        out = []
        for c in self.children:
            out.extend(c.leaves())
        return out

    def subtrees(self):
        yield self
        for c in self.children:
            yield from c.subtrees()

    def __str__(self):
        return write_tree(self)


@dataclass(frozen=True)
class FunctionTags:
    base: str
    semantic_tags: frozenset = field(default=frozenset())
    coindex: Optional[int] = None


_TOKEN = re.compile(r"\(|\)|[^\s()]+")


def _positions(text):
    line, col, last = 1, 1, 0
    for m in _TOKEN.finditer(text):
        chunk = text[last:m.start()]
        nl = chunk.count("\n")
        if nl:
            line += nl
            col = len(chunk) - chunk.rfind("\n")
        else:
            col += len(chunk)
        yield m.group(), line, col
        col += len(m.group())
        last = m.end()


def read_trees(text) -> list:
    """Parse every top-level bracketed expression in ``text`` (str or file).

    A label-less outer wrapper ``( ... )`` around a single tree is removed.
    """
    if not isinstance(text, str):
        text = text.read()
    trees = []
    # each frame: [label, children, terminals, line, col]
    stack = []
    expect_label = False
    for tok, line, col in _positions(text):
        if tok == "(":
            if expect_label:
                stack[-1][0] = ""
            stack.append([None, [], [], line, col])
            expect_label = True
        elif tok == ")":
            if not stack:
                raise TreebankSyntaxError("unbalanced ')'", line, col)
            label, kids, terms, l0, c0 = stack.pop()
            expect_label = False
            if label is None or (label == "" and not kids and not terms):
                raise TreebankSyntaxError("empty node", l0, c0)
            if kids and terms:
                raise TreebankSyntaxError("node mixes subtrees and words", l0, c0)
            if len(terms) > 1:
                raise TreebankSyntaxError("preterminal with several words", l0, c0)
            if label == "":
                if len(kids) != 1 or terms:
                    raise TreebankSyntaxError("unlabelled node must wrap one tree", l0, c0)
                node = kids[0]
            elif terms:
                node = RawTree(label, (), terms[0])
            else:
                node = RawTree(label, tuple(kids))
            if stack:
                stack[-1][1].append(node)
            else:
                trees.append(node)
        else:
            if not stack:
                raise TreebankSyntaxError("text outside brackets: %r" % tok, line, col)
            if expect_label:
                stack[-1][0] = tok
                expect_label = False
            else:
                stack[-1][2].append(tok)
    if stack:
        _, _, _, l0, c0 = stack[-1]
        raise TreebankSyntaxError("unbalanced '(' opened", l0, c0)
    return trees


def split_tree_texts(text: str):
    """Yield ``(line, column, chunk)`` for each top-level bracketed expression.

    Only parentheses are counted, so a malformed tree stays confined to its
    own chunk; a chunk left open at the end of the text runs to the end.
    """
    depth = 0
    start = None
    for m in re.finditer(r"[()]|[^\s()]+", text):
        if start is None:
            start = m.start()
        if m.group() == "(":
            depth += 1
        elif m.group() == ")":
            depth -= 1
        if depth <= 0:
            yield _line_col(text, start) + (text[start:m.end()],)
            start, depth = None, 0
    if start is not None:
        yield _line_col(text, start) + (text[start:],)


def _line_col(text, offset):
    line = text.count("\n", 0, offset) + 1
    return line, offset - (text.rfind("\n", 0, offset) + 1) + 1


def read_trees_lenient(text: str):
    """Like :func:`read_trees` but collects syntax errors instead of raising.

    Returns ``(trees, errors)``; error locations refer to the whole text.
    """
    trees, errors = [], []
    for line, col, chunk in split_tree_texts(text):
        try:
            trees.extend(read_trees(chunk))
        except TreebankSyntaxError as e:
            c = e.column + col - 1 if e.line == 1 else e.column
            errors.append(TreebankSyntaxError(e.reason, e.line + line - 1, c))
    return trees, errors


def read_tree_file(path) -> list:
    with open(path, encoding="utf-8") as f:
        return read_trees(f.read())


def parse_label(label_text: str) -> FunctionTags:
    """Split ``NP-SBJ-1`` into base NP, tags {SBJ}, coindex 1.

    ``=N`` gapping indices are dropped; ``NN|JJ`` resolves to its first
    alternative; bracket-style labels such as ``-NONE-`` are kept whole.
    """
    if not label_text:
        raise ValueError("empty label")
    if len(label_text) > 2 and label_text[0] == "-" and label_text.endswith("-"):
        return FunctionTags(label_text)
    text = label_text.split("=")[0] or label_text
    text = text.split("|")[0] or text
    parts = text.split("-")
    base = parts[0] or text
    tags = set()
    coindex = None
    for p in parts[1:]:
        if p.isdigit():
            coindex = int(p)
        elif p:
            tags.add(p)
    return FunctionTags(base, frozenset(tags), coindex)


def _lex_label(node: LexTree, debug: bool) -> str:
    lab = node.label
    s = lab.base + ("-C" if lab.is_complement else "")
    if debug and lab.has_gap:
        s += "(+gap)"
    return s


def write_tree(tree, debug: bool = False) -> str:
    """Single-line bracketed form of a RawTree or LexTree."""
    out = []
    _write(tree, debug, out)
    return "".join(out)


def _write(node, debug, out):
    if isinstance(node, RawTree):
        if node.terminal is not None:
            out.append("(%s %s)" % (node.label_text, node.terminal))
            return
        out.append("(" + node.label_text)
    else:
        if node.is_trace:
            out.append("(%s *)" % TRACE)
            return
        if node.is_null:
            out.append("(%s (-NONE- *T*-%s))" % (_lex_label(node, debug), node.coindex))
            return
        if node.is_preterminal:
            out.append("(%s %s)" % (_lex_label(node, debug), node.head.word))
            return
        out.append("(" + _lex_label(node, debug))
    for c in node.children:
        out.append(" ")
        _write(c, debug, out)
    out.append(")")
