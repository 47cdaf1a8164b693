"""Multi-level access policies: trees of threshold gates over attributes.

A policy is a forest of sub-trees hanging off an implicit root plus a
set of named security levels.  Each level selects a subset of the root
sub-trees and is satisfied only when every selected sub-tree is
satisfied.  Secret sharing assigns one polynomial per gate; the root
polynomial has degree c'-1 for c' sub-trees, and a level's secret is
the sum of the root shares over its selected indices.

The text form looks like::

    level 1 requires [1, 2]
    level 2 requires [1]
    tree: threshold(2, attr:doctor, attr:oncology), attr:admin

``tree:`` lists the root sub-trees in index order (1-based).  Terms are
either ``attr:<name>`` or ``threshold(t, <term>, ...)``.
"""

from __future__ import annotations

import re

from dataclasses import dataclass
from typing import Iterator, Union

from .errors import EtenonError

NodePath = tuple[int, ...]

_RESERVED = {"level", "tree", "requires", "attr", "threshold"}

_ATTR_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_.\-]*")


class PolicyError(EtenonError):
    """Bad policy text or a structurally invalid tree."""

    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        if line is not None:
            message = "line %d, col %d: %s" % (line, col, message)
        super().__init__(message)
        self.line = line
        self.col = col


@dataclass(frozen=True)
class Leaf:
    attribute: str


@dataclass(frozen=True)
class Gate:
    threshold: int
    children: tuple["SubTree", ...]


SubTree = Union[Leaf, Gate]


@dataclass(frozen=True)
class AccessTree:
    """Root sub-trees (1-indexed by position) plus the level table."""

    children: tuple[SubTree, ...]
    levels: dict[int, tuple[int, ...]]

    def level_ids(self) -> tuple[int, ...]:
        return tuple(sorted(self.levels))

    def leaf_count(self) -> int:
        return sum(1 for _ in iter_leaves(self))

    def attributes(self) -> frozenset[str]:
        return frozenset(leaf.attribute for _, leaf in iter_leaves(self))


def iter_leaves(tree: AccessTree) -> Iterator[tuple[NodePath, Leaf]]:
    """Yield (path, leaf) pairs in depth-first index order."""

    def walk(node: SubTree, path: NodePath):
        if isinstance(node, Leaf):
            yield path, node
        else:
            for j, child in enumerate(node.children, start=1):
                yield from walk(child, path + (j,))

    for i, child in enumerate(tree.children, start=1):
        yield from walk(child, (i,))


def iter_gates(tree: AccessTree) -> Iterator[tuple[NodePath, Gate]]:
    def walk(node: SubTree, path: NodePath):
        if isinstance(node, Gate):
            yield path, node
            for j, child in enumerate(node.children, start=1):
                yield from walk(child, path + (j,))

    for i, child in enumerate(tree.children, start=1):
        yield from walk(child, (i,))


# ----------------------------------------------------------------------
# satisfaction


def satisfies(node: SubTree, attrs) -> bool:
    """True when the attribute set satisfies the sub-tree."""
    if isinstance(node, Leaf):
        return node.attribute in attrs
    hits = sum(1 for child in node.children if satisfies(child, attrs))
    return hits >= node.threshold


def level_satisfied(tree: AccessTree, level: int, attrs) -> bool:
    """A level demands every one of its selected sub-trees."""
    try:
        wanted = tree.levels[level]
    except KeyError:
        raise PolicyError("unknown level %r" % (level,)) from None
    return all(satisfies(tree.children[i - 1], attrs) for i in wanted)


def satisfied_levels(tree: AccessTree, attrs) -> set[int]:
    return {l for l in tree.levels if level_satisfied(tree, l, attrs)}


# ----------------------------------------------------------------------
# structural checks


def validate_tree(tree: AccessTree) -> None:
    """Raise :class:`PolicyError` on any structural defect."""
    if not tree.children:
        raise PolicyError("tree has no sub-trees")
    if not tree.levels:
        raise PolicyError("policy declares no levels")

    def walk(node: SubTree):
        if isinstance(node, Leaf):
            if not node.attribute or not _ATTR_RE.fullmatch(node.attribute):
                raise PolicyError("bad attribute name %r" % (node.attribute,))
            if node.attribute in _RESERVED:
                raise PolicyError("attribute name %r is reserved" % (node.attribute,))
            return
        if not node.children:
            raise PolicyError("gate has no children")
        if not 1 <= node.threshold <= len(node.children):
            raise PolicyError(
                "threshold %d out of range for %d children"
                % (node.threshold, len(node.children))
            )
        for child in node.children:
            walk(child)

    for child in tree.children:
        walk(child)
    for level, wanted in tree.levels.items():
        if not isinstance(level, int):
            raise PolicyError("level ids must be integers")
        if not wanted:
            raise PolicyError("level %d selects no sub-trees" % level)
        for i in wanted:
            if not 1 <= i <= len(tree.children):
                raise PolicyError("level %d selects unknown sub-tree %d" % (level, i))
        if len(set(wanted)) != len(wanted):
            raise PolicyError("level %d repeats a sub-tree index" % level)


def lint_tree(tree: AccessTree) -> list[str]:
    """Non-fatal oddities: currently duplicate attributes under one gate."""
    warnings = []
    for path, gate in iter_gates(tree):
        seen = {}
        for child in gate.children:
            if isinstance(child, Leaf):
                seen[child.attribute] = seen.get(child.attribute, 0) + 1
        for attr, n in seen.items():
            if n > 1:
                warnings.append(
                    "gate at %s lists attribute %r %d times" % (list(path), attr, n)
                )
    return warnings


# ----------------------------------------------------------------------
# parsing


_TOKEN_RE = re.compile(
    r"(?P<ws>[ \t]+)"
    r"|(?P<comment>#[^\n]*)"
    r"|(?P<nl>\n)"
    r"|(?P<int>\d+)"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_.\-]*)"
    r"|(?P<sym>[\[\](),:])"
)


def _tokenize(text: str):
    tokens = []
    line, col, pos = 1, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise PolicyError("unexpected character %r" % text[pos], line, col)
        kind = m.lastgroup
        value = m.group()
        if kind == "nl":
            line += 1
            col = 1
        elif kind in ("ws", "comment"):
            col += len(value)
        else:
            tokens.append((kind, value, line, col))
            col += len(value)
        pos = m.end()
    return tokens


class _Parser:
    def __init__(self, tokens):
        self.tokens = tokens
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def next(self, expect_kind=None, expect_value=None):
        tok = self.peek()
        if tok is None:
            raise PolicyError("unexpected end of policy text")
        kind, value, line, col = tok
        if expect_kind is not None and kind != expect_kind:
            raise PolicyError("expected %s, found %r" % (expect_kind, value), line, col)
        if expect_value is not None and value != expect_value:
            raise PolicyError("expected %r, found %r" % (expect_value, value), line, col)
        self.pos += 1
        return tok

    def at_keyword(self, word):
        tok = self.peek()
        return tok is not None and tok[0] == "name" and tok[1] == word

    def parse(self) -> AccessTree:
        levels: dict[int, tuple[int, ...]] = {}
        children = None
        while self.peek() is not None:
            if self.at_keyword("level"):
                level, wanted, where = self.parse_level_line()
                if level in levels:
                    raise PolicyError("duplicate level %d" % level, *where)
                levels[level] = wanted
            elif self.at_keyword("tree"):
                _, _, line, col = self.next()
                if children is not None:
                    raise PolicyError("more than one tree block", line, col)
                self.next("sym", ":")
                children = self.parse_terms()
            else:
                _, value, line, col = self.peek()
                raise PolicyError("expected 'level' or 'tree', found %r" % value, line, col)
        if children is None:
            raise PolicyError("policy has no tree block")
        if not levels:
            raise PolicyError("policy declares no levels")
        tree = AccessTree(children=children, levels=levels)
        validate_tree(tree)
        return tree

    def parse_level_line(self):
        _, _, line, col = self.next()
        _, value, nl, nc = self.next("int")
        level = int(value)
        self.next("name", "requires")
        self.next("sym", "[")
        wanted = [int(self.next("int")[1])]
        while self.peek() is not None and self.peek()[1] == ",":
            self.next()
            wanted.append(int(self.next("int")[1]))
        self.next("sym", "]")
        return level, tuple(wanted), (line, col)

    def parse_terms(self):
        terms = [self.parse_term()]
        while self.peek() is not None and self.peek()[1] == ",":
            self.next()
            terms.append(self.parse_term())
        return tuple(terms)

    def parse_term(self) -> SubTree:
        tok = self.peek()
        if tok is None:
            raise PolicyError("unexpected end of policy text")
        kind, value, line, col = tok
        if kind != "name":
            raise PolicyError("expected a term, found %r" % value, line, col)
        if value == "attr":
            self.next()
            self.next("sym", ":")
            _, name, nl, nc = self.next("name")
            if name in _RESERVED:
                raise PolicyError("attribute name %r is reserved" % name, nl, nc)
            return Leaf(attribute=name)
        if value == "threshold":
            self.next()
            self.next("sym", "(")
            _, t_text, tl, tc = self.next("int")
            threshold = int(t_text)
            children = []
            while self.peek() is not None and self.peek()[1] == ",":
                self.next()
                children.append(self.parse_term())
            self.next("sym", ")")
            if not children:
                raise PolicyError("gate has no children", tl, tc)
            if not 1 <= threshold <= len(children):
                raise PolicyError(
                    "threshold %d out of range for %d children"
                    % (threshold, len(children)),
                    tl,
                    tc,
                )
            return Gate(threshold=threshold, children=tuple(children))
        raise PolicyError("expected 'attr' or 'threshold', found %r" % value, line, col)


def parse_policy(text: str) -> AccessTree:
    """Parse policy text; raises :class:`PolicyError` with line/col."""
    return _Parser(_tokenize(text)).parse()


def format_policy(tree: AccessTree) -> str:
    """Render a tree back to policy text; parses back to an equal tree."""

    def term(node: SubTree) -> str:
        if isinstance(node, Leaf):
            return "attr:%s" % node.attribute
        inner = ", ".join(term(c) for c in node.children)
        return "threshold(%d, %s)" % (node.threshold, inner)

    lines = [
        "level %d requires [%s]" % (level, ", ".join(str(i) for i in tree.levels[level]))
        for level in sorted(tree.levels)
    ]
    lines.append("tree: " + ", ".join(term(c) for c in tree.children))
    return "\n".join(lines) + "\n"


# ----------------------------------------------------------------------
# canonical JSON form


def tree_to_json(tree: AccessTree) -> dict:
    def node(n: SubTree):
        if isinstance(n, Leaf):
            return {"attr": n.attribute}
        return {"threshold": n.threshold, "children": [node(c) for c in n.children]}

    return {
        "children": [node(c) for c in tree.children],
        "levels": {str(l): list(tree.levels[l]) for l in sorted(tree.levels)},
    }


def tree_from_json(obj) -> AccessTree:
    def node(n) -> SubTree:
        if not isinstance(n, dict):
            raise PolicyError("bad tree node %r" % (n,))
        if "attr" in n:
            return Leaf(attribute=n["attr"])
        if "threshold" in n:
            return Gate(
                threshold=int(n["threshold"]),
                children=tuple(node(c) for c in n.get("children", [])),
            )
        raise PolicyError("bad tree node %r" % (n,))

    try:
        children = tuple(node(c) for c in obj["children"])
        levels = {
            int(level): tuple(int(i) for i in wanted)
            for level, wanted in obj["levels"].items()
        }
    except (KeyError, TypeError, ValueError) as exc:
        raise PolicyError("malformed tree document: %s" % exc) from None
    tree = AccessTree(children=children, levels=levels)
    validate_tree(tree)
    return tree


# ----------------------------------------------------------------------
# secret sharing


def poly_eval(coeffs, x: int, order: int) -> int:
    """Evaluate sum(coeffs[i] * x**i) modulo the order."""
    acc = 0
    for c in reversed(coeffs):
        acc = (acc * x + c) % order
    return acc


def lagrange_coeff(i: int, index_set, order: int) -> int:
    """Lagrange basis polynomial for index i over index_set, at zero."""
    num, den = 1, 1
    for j in index_set:
        if j == i:
            continue
        num = (num * (-j)) % order
        den = (den * (i - j)) % order
    return (num * pow(den, order - 2, order)) % order


@dataclass
class SharePlan:
    """Polynomials and derived shares for one encryption of a tree."""

    order: int
    root_coeffs: tuple[int, ...]
    gate_coeffs: dict[NodePath, tuple[int, ...]]
    leaf_shares: dict[NodePath, int]
    level_secrets: dict[int, int]


def assign_shares(tree: AccessTree, suite_order: int, rng=None) -> SharePlan:
    """Draw the root polynomial and per-gate polynomials, derive all shares.

    The root polynomial has one uniform coefficient per root sub-tree
    (degree c'-1).  Sub-tree i receives the share q_r(i); a gate with
    threshold t hides its share in a fresh degree t-1 polynomial's
    constant term and hands child j the value at j.  A level's secret
    is the sum of root shares over its selected sub-trees.
    """
    import secrets as _secrets

    def draw() -> int:
        if rng is None:
            return _secrets.randbelow(suite_order)
        return rng.randrange(suite_order)

    validate_tree(tree)
    root_coeffs = tuple(draw() for _ in tree.children)
    gate_coeffs: dict[NodePath, tuple[int, ...]] = {}
    leaf_shares: dict[NodePath, int] = {}

    def walk(node: SubTree, path: NodePath, share: int):
        if isinstance(node, Leaf):
            leaf_shares[path] = share
            return
        coeffs = (share,) + tuple(draw() for _ in range(node.threshold - 1))
        gate_coeffs[path] = coeffs
        for j, child in enumerate(node.children, start=1):
            walk(child, path + (j,), poly_eval(coeffs, j, suite_order))

    for i, child in enumerate(tree.children, start=1):
        walk(child, (i,), poly_eval(root_coeffs, i, suite_order))

    level_secrets = {
        level: sum(poly_eval(root_coeffs, i, suite_order) for i in wanted) % suite_order
        for level, wanted in tree.levels.items()
    }
    return SharePlan(
        order=suite_order,
        root_coeffs=root_coeffs,
        gate_coeffs=gate_coeffs,
        leaf_shares=leaf_shares,
        level_secrets=level_secrets,
    )
