"""Nested LUT tree structures for high-degree node updates.

A tree is written as an s-expression: ``L`` is the channel-LLR leaf, ``mu`` a
message leaf, and ``( ... )`` an internal node (one small LUT) with at least
two children, e.g. ``((mu mu)(mu mu) mu L)``.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass

__all__ = [
    "LLR",
    "MSG",
    "LutTree",
    "TreeSyntaxError",
    "cumulative_depth",
    "is_refinement",
    "parse_tree",
    "validate_for_degree",
    "REFERENCE_TREES",
]

LLR = "L"
MSG = "mu"


class TreeSyntaxError(ValueError):
    def __init__(self, message, position):
        super().__init__(f"{message} at position {position}")
        self.position = position


@dataclass(frozen=True)
class LutTree:
    """Tree node. Leaves carry ``kind`` (``"L"`` or ``"mu"``); internal nodes carry children."""

    kind: str | None = None
    children: tuple["LutTree", ...] = ()

    def __post_init__(self):
        if self.children:
            if self.kind is not None:
                raise ValueError("internal nodes have no leaf kind")
            if len(self.children) < 2:
                raise ValueError("internal node needs at least two children")
        elif self.kind not in (LLR, MSG):
            raise ValueError(f"unknown leaf kind {self.kind!r}")

    @classmethod
    def node(cls, *children) -> "LutTree":
        return cls(None, tuple(children))

    @property
    def is_leaf(self) -> bool:
        return not self.children

    def __str__(self):
        if self.is_leaf:
            return self.kind
        return "(" + " ".join(str(c) for c in self.children) + ")"

    def leaves(self) -> list["LutTree"]:
        if self.is_leaf:
            return [self]
        return [leaf for c in self.children for leaf in c.leaves()]

    def count(self, kind: str) -> int:
        return sum(1 for leaf in self.leaves() if leaf.kind == kind)

    def internal_nodes(self) -> list["LutTree"]:
        """Internal nodes in bottom-up (post-) order; the root comes last."""
        if self.is_leaf:
            return []
        out = []
        for c in self.children:
            out.extend(c.internal_nodes())
        out.append(self)
        return out

    def depth(self) -> int:
        if self.is_leaf:
            return 0
        return 1 + max(c.depth() for c in self.children)

    def canonical(self) -> "LutTree":
        """Child order normalised; equal for trees differing only in argument order."""
        if self.is_leaf:
            return self
        kids = sorted((c.canonical() for c in self.children), key=_canon_key)
        return LutTree(None, tuple(kids))


def _canon_key(t: LutTree):
    return (t.depth(), len(t.leaves()), str(t))


_TOKEN = re.compile(r"\s*(\(|\)|mu\b|L\b)")


def parse_tree(text: str) -> LutTree:
    """Parse a tree expression (grammar ``tree := "L" | "mu" | "(" tree+ ")"``)."""
    pos = 0
    tokens = []
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            bad = len(text) - len(text[pos:].lstrip())
            raise TreeSyntaxError(f"unexpected character {text[bad]!r}", bad)
        tokens.append((m.group(1), m.start(1)))
        pos = m.end()
    if not tokens:
        raise TreeSyntaxError("empty tree expression", 0)

    def parse_at(i):
        tok, where = tokens[i]
        if tok in (LLR, MSG):
            return LutTree(tok), i + 1
        if tok == ")":
            raise TreeSyntaxError("unexpected ')'", where)
        kids = []
        i += 1
        while True:
            if i >= len(tokens):
                raise TreeSyntaxError("missing ')'", len(text))
            if tokens[i][0] == ")":
                break
            kid, i = parse_at(i)
            kids.append(kid)
        if len(kids) < 2:
            raise TreeSyntaxError("internal node needs at least two children", where)
        return LutTree(None, tuple(kids)), i + 1

    tree, end = parse_at(0)
    if end != len(tokens):
        raise TreeSyntaxError("trailing input", tokens[end][1])
    return tree


def cumulative_depth(tree: LutTree) -> int:
    """Sum over all leaves of their distance to the root."""

    def walk(t, d):
        if t.is_leaf:
            return d
        return sum(walk(c, d + 1) for c in t.children)

    return walk(tree, 0)


def _contractions(tree: LutTree):
    """All trees reachable by contracting any subset of non-root internal edges."""
    if tree.is_leaf:
        yield tree
        return
    options = []
    for child in tree.children:
        opts = []
        for c in _contractions(child):
            opts.append((c,))
            if not c.is_leaf:
                opts.append(c.children)  # edge to this child contracted
        options.append(opts)
    for combo in itertools.product(*options):
        yield LutTree(None, tuple(k for part in combo for k in part))


def is_refinement(fine: LutTree, coarse: LutTree) -> bool:
    """True iff ``coarse`` arises from ``fine`` by contracting internal edges.

    Message leaves are interchangeable and argument order is immaterial; the
    LLR leaf only matches an LLR leaf.
    """
    if (fine.count(MSG), fine.count(LLR)) != (coarse.count(MSG), coarse.count(LLR)):
        raise ValueError("trees have different leaf multisets")
    target = coarse.canonical()
    n_fine, n_coarse = len(fine.internal_nodes()), len(coarse.internal_nodes())
    if n_fine < n_coarse:
        return False
    return any(
        t.canonical() == target
        for t in _contractions(fine)
        if len(t.internal_nodes()) == n_coarse
    )


def validate_for_degree(tree: LutTree, dv: int, role: str = "vn") -> list[str]:
    """Arity violations of ``tree`` for a degree-``dv`` VN update or decision.

    ``role`` is ``"vn"`` (``dv - 1`` message leaves) or ``"decision"``
    (``dv`` message leaves). Returns an empty list when the tree fits.
    """
    if role not in ("vn", "decision"):
        raise ValueError(f"unknown role {role!r}")
    want = dv - 1 if role == "vn" else dv
    problems = []
    n_msg, n_llr = tree.count(MSG), tree.count(LLR)
    if n_msg != want:
        problems.append(f"expected {want} message leaves for dv={dv} ({role}), found {n_msg}")
    if n_llr != 1:
        problems.append(f"expected exactly one LLR leaf, found {n_llr}")
    if tree.is_leaf and not problems:
        problems.append("tree must have an internal root node")
    return problems


def decision_tree_for(tree: LutTree) -> LutTree:
    """Default decision tree: the VN tree with one extra message leaf at the root."""
    return LutTree(None, tree.children + (LutTree(MSG),))


def move_llr_deeper(tree: LutTree) -> LutTree:
    """Swap the root-level LLR leaf with a message leaf one level down.

    The message leaf is taken from the root child subtree with the fewest
    leaves (first such child wins). Trees whose LLR leaf is not a root child,
    or that have no internal root child, are returned unchanged.
    """
    kids = list(tree.children)
    llr_pos = [i for i, c in enumerate(kids) if c.is_leaf and c.kind == LLR]
    subtrees = [
        i for i, c in enumerate(kids)
        if not c.is_leaf and any(g.is_leaf and g.kind == MSG for g in c.children)
    ]
    if not llr_pos or not subtrees:
        return tree
    target = min(subtrees, key=lambda i: len(kids[i].leaves()))
    sub = kids[target]
    j = next(k for k, g in enumerate(sub.children) if g.is_leaf and g.kind == MSG)
    new_sub = list(sub.children)
    new_sub[j] = LutTree(LLR)
    kids[target] = LutTree(None, tuple(new_sub))
    kids[llr_pos[0]] = LutTree(MSG)
    return LutTree(None, tuple(kids))


REFERENCE_TREES = {
    "T1": "((mu mu)(mu mu) mu L)",
    "T2": "((mu mu mu)(mu mu) L)",
    "T3": "((mu mu mu mu mu) L)",
    "T4": "(((mu mu)(mu mu)) mu L)",
    "T5": "(((mu mu mu)(mu mu)) L)",
    "T6": "((((mu mu)(mu mu)) mu) L)",
}
