"""Immutable terms over the carriers of an amalgam, plus parsing and printing.

A term is a finite binary tree whose leaves name concrete elements of the
participating algebras.  Leaves carry a ``(factor, elem)`` pair; factor 0 is
reserved for the shared base, so two leaves are equal exactly when they denote
the same element of the same carrier (shared-base elements are always stored
in base form, see :class:`quamal.amalgam.AmalgamConfig`).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable, Iterator, Union

BASE_FACTOR = 0

LEFT = 0
RIGHT = 1


class Op(Enum):
    """The three binary quasigroup operations."""

    MUL = "*"
    LDIV = "ld"
    RDIV = "rd"

    def __str__(self) -> str:
        return self.value


_OP_BY_TEXT = {op.value: op for op in Op}


@dataclass(frozen=True)
class Leaf:
    factor: int
    elem: int

    @property
    def size(self) -> int:
        return 1


class Node:
    """A binary operation applied to two subterms.

    Instances are immutable; subtree size and hash are computed once at
    construction so that syntactic equality checks can short-circuit.
    """

    __slots__ = ("op", "left", "right", "size", "_hash")

    def __init__(self, op: Op, left: "Term", right: "Term"):
        object.__setattr__(self, "op", op)
        object.__setattr__(self, "left", left)
        object.__setattr__(self, "right", right)
        object.__setattr__(self, "size", 1 + left.size + right.size)
        object.__setattr__(self, "_hash", hash((op, left, right)))

    def __setattr__(self, name, value):
        raise AttributeError("Node instances are immutable")

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other) -> bool:
        if self is other:
            return True
        if (
            not isinstance(other, Node)
            or self._hash != other._hash
            or self.op is not other.op
        ):
            return False
        return self.left == other.left and self.right == other.right

    def __repr__(self) -> str:
        return f"Node({self.op.name}, {self.left!r}, {self.right!r})"


Term = Union[Leaf, Node]
Path = tuple  # sequence of LEFT/RIGHT steps from the root


class ParseError(ValueError):
    """Raised on malformed term text; carries the offending position."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class PathError(ValueError):
    """Raised when a path does not resolve inside a term."""


def node_count(t: Term) -> int:
    """Number of leaf and node occurrences in ``t``."""
    return t.size


def subterm_at(t: Term, path: Path) -> Term:
    for i, step in enumerate(path):
        if not isinstance(t, Node):
            raise PathError(f"path step {i} descends below a leaf")
        t = t.left if step == LEFT else t.right
    return t


def replace_at(t: Term, path: Path, s: Term) -> Term:
    """Return ``t`` with the subterm at ``path`` replaced by ``s``."""
    if not path:
        return s
    if not isinstance(t, Node):
        raise PathError("path descends below a leaf")
    if path[0] == LEFT:
        return Node(t.op, replace_at(t.left, path[1:], s), t.right)
    return Node(t.op, t.left, replace_at(t.right, path[1:], s))


def iter_subterms(t: Term) -> Iterator[tuple[Path, Term]]:
    """Yield ``(path, subterm)`` pairs in pre-order (leftmost-outermost)."""
    stack = [((), t)]
    while stack:
        path, cur = stack.pop()
        yield path, cur
        if isinstance(cur, Node):
            stack.append((path + (RIGHT,), cur.right))
            stack.append((path + (LEFT,), cur.left))


def iter_leaves(t: Term) -> Iterator[tuple[Path, Leaf]]:
    for path, sub in iter_subterms(t):
        if isinstance(sub, Leaf):
            yield path, sub


def map_leaves(t: Term, fn: Callable[[Leaf], Term]) -> Term:
    if isinstance(t, Leaf):
        return fn(t)
    return Node(t.op, map_leaves(t.left, fn), map_leaves(t.right, fn))


def postorder_index(t: Term, path: Path) -> int:
    """Post-order rank of the node at ``path`` (used by innermost strategies)."""
    rank = 0
    cur = t
    for step in path:
        if step == RIGHT:
            rank += cur.left.size
        cur = cur.left if step == LEFT else cur.right
    return rank + cur.size - 1


_DELIMS = set("(),.")


def _tokenize(text: str):
    tokens = []  # (kind, value, pos); kind in {"name", "punct"}
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
            continue
        if c in _DELIMS:
            tokens.append(("punct", c, i))
            i += 1
            continue
        start = i
        while i < n and not text[i].isspace() and text[i] not in _DELIMS:
            i += 1
        tokens.append(("name", text[start:i], start))
    return tokens


def parse_term(text: str, cfg) -> Term:
    """Parse the prefix grammar ``term := leaf | op "(" term "," term ")"``.

    ``leaf := factor_name "." element_name``; leaf names are resolved (and
    shared-base elements canonicalized) through ``cfg``.
    """
    tokens = _tokenize(text)
    pos = 0

    def expect(value):
        nonlocal pos
        if pos >= len(tokens):
            raise ParseError(f"expected '{value}', found end of input", len(text))
        kind, tok, at = tokens[pos]
        if kind != "punct" or tok != value:
            raise ParseError(f"expected '{value}', found '{tok}'", at)
        pos += 1

    def term():
        nonlocal pos
        if pos >= len(tokens):
            raise ParseError("expected a term, found end of input", len(text))
        kind, tok, at = tokens[pos]
        if kind != "name":
            raise ParseError(f"expected a name, found '{tok}'", at)
        pos += 1
        if pos < len(tokens) and tokens[pos][1] == "(":
            op = _OP_BY_TEXT.get(tok)
            if op is None:
                raise ParseError(f"unknown operation '{tok}'", at)
            expect("(")
            left = term()
            expect(",")
            right = term()
            expect(")")
            return Node(op, left, right)
        expect(".")
        if pos >= len(tokens) or tokens[pos][0] != "name":
            raise ParseError("expected an element name after '.'", at)
        _, ename, eat = tokens[pos]
        pos += 1
        try:
            return cfg.leaf_by_name(tok, ename)
        except KeyError as exc:
            raise ParseError(str(exc.args[0]), at) from None

    result = term()
    if pos < len(tokens):
        raise ParseError(f"trailing input '{tokens[pos][1]}'", tokens[pos][2])
    return result


def format_term(t: Term, cfg) -> str:
    """Render ``t`` in the prefix grammar; round-trips through parse_term."""
    if isinstance(t, Leaf):
        return f"{cfg.factor_name(t.factor)}.{cfg.element_name(t.factor, t.elem)}"
    return f"{t.op}({format_term(t.left, cfg)},{format_term(t.right, cfg)})"
