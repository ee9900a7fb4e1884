"""Finite quasigroups as Latin squares, with congruence machinery.

The multiplication table determines both division tables uniquely; they are
materialized at construction so the rewriter can evaluate all three
operations by lookup.  Congruences are operation-compatible partitions; the
closure operator and quotient construction here back the codescent test
``is_codescent``: an injective homomorphism p: B -> E is codescent exactly
when every congruence R on B equals the pullback of its closure in E.
"""

from __future__ import annotations

import itertools
import json
import random
from dataclasses import dataclass, replace

from .terms import Op


class NotLatinSquareError(ValueError):
    pass


@dataclass(frozen=True)
class FiniteQuasigroup:
    n: int
    mul: tuple
    ldiv: tuple
    rdiv: tuple
    names: tuple
    name: str = "Q"

    def op(self, op: Op, a: int, b: int) -> int:
        if op is Op.MUL:
            return self.mul[a][b]
        if op is Op.LDIV:
            return self.ldiv[a][b]
        return self.rdiv[a][b]

    def elements(self) -> range:
        return range(self.n)

    def __repr__(self) -> str:
        return f"FiniteQuasigroup({self.name!r}, n={self.n})"


def _check_latin(table) -> None:
    n = len(table)
    full = set(range(n))
    for i, row in enumerate(table):
        if len(row) != n:
            raise NotLatinSquareError(f"row {i} has length {len(row)}, expected {n}")
        if set(row) != full:
            raise NotLatinSquareError(f"row {i} is not a permutation of 0..{n - 1}")
    for j in range(n):
        if {table[i][j] for i in range(n)} != full:
            raise NotLatinSquareError(f"column {j} is not a permutation of 0..{n - 1}")


def from_mul_table(table, names=None, name: str = "Q") -> FiniteQuasigroup:
    """Build a quasigroup from a Latin square; divisions are derived."""
    n = len(table)
    if n == 0:
        raise NotLatinSquareError("empty table")
    _check_latin(table)
    ldiv = [[0] * n for _ in range(n)]
    rdiv = [[0] * n for _ in range(n)]
    for a in range(n):
        for b in range(n):
            c = table[a][b]
            ldiv[a][c] = b  # unique b with a*b = c
            rdiv[c][b] = a  # unique a with a*b = c
    if names is None:
        names = tuple(str(i) for i in range(n))
    else:
        names = tuple(names)
        if len(names) != n or len(set(names)) != n:
            raise ValueError("element names must be distinct and match the order")
    return FiniteQuasigroup(
        n=n,
        mul=tuple(tuple(row) for row in table),
        ldiv=tuple(tuple(row) for row in ldiv),
        rdiv=tuple(tuple(row) for row in rdiv),
        names=names,
        name=name,
    )


def cyclic_quasigroup(n: int, name: str | None = None) -> FiniteQuasigroup:
    """The addition table of Z_n, handy as a deterministic fixture."""
    table = [[(a + b) % n for b in range(n)] for a in range(n)]
    return from_mul_table(table, name=name or f"Z{n}")


def _complete_latin(table, n, row, col, rng, row_used, col_used):
    # Row-major backtracking; candidate order is shuffled for randomness.
    if row == n:
        return True
    nrow, ncol = (row, col + 1) if col + 1 < n else (row + 1, 0)
    if table[row][col] is not None:
        return _complete_latin(table, n, nrow, ncol, rng, row_used, col_used)
    candidates = [v for v in range(n) if v not in row_used[row] and v not in col_used[col]]
    rng.shuffle(candidates)
    for v in candidates:
        table[row][col] = v
        row_used[row].add(v)
        col_used[col].add(v)
        if _complete_latin(table, n, nrow, ncol, rng, row_used, col_used):
            return True
        table[row][col] = None
        row_used[row].remove(v)
        col_used[col].remove(v)
    return False


def _random_latin(n, rng, fixed=None):
    table = [[None] * n for _ in range(n)]
    if fixed is not None:
        m = len(fixed)
        for i in range(m):
            for j in range(m):
                table[i][j] = fixed[i][j]
    row_used = [set(v for v in row if v is not None) for row in table]
    col_used = [set(table[i][j] for i in range(n) if table[i][j] is not None) for j in range(n)]
    if not _complete_latin(table, n, 0, 0, rng, row_used, col_used):
        return None
    return table


def random_quasigroup(n: int, seed: int, name: str | None = None) -> FiniteQuasigroup:
    """Deterministic random quasigroup of order ``n`` (backtracking fill)."""
    if n < 1:
        raise ValueError("order must be at least 1")
    rng = random.Random(seed)
    table = _random_latin(n, rng)
    return from_mul_table(table, name=name or f"R{n}")


def random_quasigroup_extending(
    sub: FiniteQuasigroup, n: int, seed: int, name: str | None = None
):
    """Random order-``n`` quasigroup whose top-left block is ``sub``.

    Returns ``(quasigroup, embedding)`` with the embedding fixing indices
    0..|sub|-1.  Requires n == |sub| or n >= 2|sub| (no Latin square has a
    proper subsquare on more than half its rows).
    """
    m = sub.n
    if n != m and n < 2 * m:
        raise ValueError(f"no order-{n} extension of an order-{m} subsquare exists")
    rng = random.Random(seed)
    table = _random_latin(n, rng, fixed=sub.mul)
    if table is None:
        raise ValueError("backtracking failed to complete the square")
    big = from_mul_table(table, name=name or f"E{n}")
    return big, Embedding(sub, big, tuple(range(m)))


@dataclass(frozen=True)
class Embedding:
    """An injective homomorphism between finite quasigroups."""

    source: FiniteQuasigroup
    target: FiniteQuasigroup
    map: tuple

    def __post_init__(self):
        m = tuple(self.map)
        object.__setattr__(self, "map", m)
        if len(m) != self.source.n:
            raise ValueError("map length does not match the source carrier")
        if any(not (0 <= x < self.target.n) for x in m):
            raise ValueError("map hits indices outside the target carrier")
        if len(set(m)) != len(m):
            raise ValueError("map is not injective")
        for op in Op:
            for a in range(self.source.n):
                for b in range(self.source.n):
                    if m[self.source.op(op, a, b)] != self.target.op(op, m[a], m[b]):
                        raise ValueError(
                            f"map does not preserve {op} at ({a}, {b})"
                        )

    @staticmethod
    def identity(q: FiniteQuasigroup) -> "Embedding":
        return Embedding(q, q, tuple(range(q.n)))

    def image(self) -> frozenset:
        return frozenset(self.map)

    def preimage(self) -> dict:
        return {x: a for a, x in enumerate(self.map)}


def generated_subquasigroup(q: FiniteQuasigroup, seeds) -> tuple:
    """Smallest subset containing ``seeds`` closed under all three operations."""
    seeds = set(seeds)
    if not seeds:
        raise ValueError("seed set must be nonempty")
    if any(not (0 <= s < q.n) for s in seeds):
        raise ValueError("seed index outside the carrier")
    closed = set(seeds)
    frontier = list(seeds)
    while frontier:
        nxt = []
        for a in frontier:
            for b in list(closed):
                for op in Op:
                    for c in (q.op(op, a, b), q.op(op, b, a)):
                        if c not in closed:
                            closed.add(c)
                            nxt.append(c)
        frontier = nxt
    return tuple(sorted(closed))


def subalgebra(q: FiniteQuasigroup, subset) -> tuple:
    """Re-index a closed subset as a quasigroup; returns ``(sub, into_map)``.

    ``into_map[i]`` is the index in ``q`` of the i-th subalgebra element.
    """
    idx = tuple(sorted(set(subset)))
    back = {x: i for i, x in enumerate(idx)}
    for a in idx:
        for b in idx:
            if q.mul[a][b] not in back or q.ldiv[a][b] not in back or q.rdiv[a][b] not in back:
                raise ValueError(f"subset is not closed at pair ({a}, {b})")
    table = [[back[q.mul[a][b]] for b in idx] for a in idx]
    sub = from_mul_table(table, names=tuple(q.names[x] for x in idx), name=f"{q.name}_sub")
    return sub, idx


class _UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, x):
        p = self.parent
        while p[x] != x:
            p[x] = p[p[x]]
            x = p[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if rb < ra:
            ra, rb = rb, ra
        self.parent[rb] = ra
        return True


def _canonical_classes(labels) -> tuple:
    # Renumber class ids by order of first appearance.
    seen = {}
    out = []
    for x in labels:
        if x not in seen:
            seen[x] = len(seen)
        out.append(seen[x])
    return tuple(out)


@dataclass(frozen=True)
class Congruence:
    """An operation-compatible partition, stored as a class-id vector."""

    algebra: FiniteQuasigroup
    class_of: tuple

    def __post_init__(self):
        labels = _canonical_classes(self.class_of)
        object.__setattr__(self, "class_of", labels)
        if len(labels) != self.algebra.n:
            raise ValueError("class vector length does not match the carrier")
        q, c = self.algebra, labels
        for op in Op:
            for a in range(q.n):
                for a2 in range(a, q.n):
                    if c[a] != c[a2]:
                        continue
                    for b in range(q.n):
                        for b2 in range(q.n):
                            if c[b] == c[b2] and c[q.op(op, a, b)] != c[q.op(op, a2, b2)]:
                                raise ValueError(
                                    f"partition is not compatible with {op}"
                                )

    @property
    def num_classes(self) -> int:
        return max(self.class_of) + 1 if self.class_of else 0

    def relates(self, a: int, b: int) -> bool:
        return self.class_of[a] == self.class_of[b]

    def classes(self) -> tuple:
        buckets = [[] for _ in range(self.num_classes)]
        for x, c in enumerate(self.class_of):
            buckets[c].append(x)
        return tuple(tuple(b) for b in buckets)

    def generating_pairs(self) -> list:
        return [(cls[0], x) for cls in self.classes() for x in cls[1:]]

    def refines(self, other: "Congruence") -> bool:
        return all(
            other.class_of[a] == other.class_of[b] for a, b in self.generating_pairs()
        )

    @staticmethod
    def diagonal(q: FiniteQuasigroup) -> "Congruence":
        return Congruence(q, tuple(range(q.n)))

    @staticmethod
    def full(q: FiniteQuasigroup) -> "Congruence":
        return Congruence(q, (0,) * q.n)


def congruence_closure(q: FiniteQuasigroup, pairs) -> Congruence:
    """Least congruence identifying all given pairs (union-find + propagation)."""
    uf = _UnionFind(q.n)
    for a, b in pairs:
        uf.union(a, b)
    changed = True
    while changed:
        changed = False
        reps = {}
        for x in range(q.n):
            reps.setdefault(uf.find(x), []).append(x)
        groups = list(reps.values())
        for op in Op:
            for ga in groups:
                for gb in groups:
                    a0 = ga[0]
                    b0 = gb[0]
                    target = uf.find(q.op(op, a0, b0))
                    for a in ga:
                        for b in gb:
                            if uf.find(q.op(op, a, b)) != target:
                                uf.union(q.op(op, a, b), q.op(op, a0, b0))
                                changed = True
    return Congruence(q, tuple(uf.find(x) for x in range(q.n)))


def enumerate_congruences(q: FiniteQuasigroup) -> list:
    """All congruences of ``q``: principal closures saturated under joins.

    Intended for desk-scale carriers (n <= 8); returned in a deterministic
    order (coarsest last).
    """
    diagonal = Congruence.diagonal(q)
    principals = []
    seen = {diagonal.class_of}
    for a in range(q.n):
        for b in range(a + 1, q.n):
            c = congruence_closure(q, [(a, b)])
            if c.class_of not in seen:
                seen.add(c.class_of)
                principals.append(c)
    found = {diagonal.class_of: diagonal}
    for c in principals:
        found[c.class_of] = c
    frontier = list(principals)
    while frontier:
        nxt = []
        for c in frontier:
            for p in principals:
                j = congruence_closure(q, c.generating_pairs() + p.generating_pairs())
                if j.class_of not in found:
                    found[j.class_of] = j
                    nxt.append(j)
        frontier = nxt
    return sorted(found.values(), key=lambda c: (-c.num_classes, c.class_of))


def quotient(q: FiniteQuasigroup, r: Congruence):
    """Quotient quasigroup and projection; defensive compatibility check."""
    if r.algebra is not q and r.algebra != q:
        raise ValueError("congruence belongs to a different algebra")
    classes = r.classes()
    k = len(classes)
    table = [[None] * k for _ in range(k)]
    for ca, cls_a in enumerate(classes):
        for cb, cls_b in enumerate(classes):
            vals = {r.class_of[q.mul[a][b]] for a in cls_a for b in cls_b}
            if len(vals) != 1:
                raise ValueError("partition is not compatible with mul")
            table[ca][cb] = vals.pop()
    names = tuple("_".join(q.names[x] for x in cls) for cls in classes)
    quot = from_mul_table(table, names=names, name=f"{q.name}/~")
    return quot, tuple(r.class_of)


@dataclass(frozen=True)
class CodescentVerdict:
    codescent: bool
    witness: Congruence | None
    congruences_checked: int


def is_codescent(p: Embedding) -> CodescentVerdict:
    """Check R' ∩ (B x B) = R for every congruence R on the source.

    R' is the closure in the target of the image of R.  The containment
    R ⊆ pullback(R') always holds; the test is the converse.  The first
    failing congruence (in enumeration order) is returned as witness.
    """
    b, e = p.source, p.target
    checked = 0
    for r in enumerate_congruences(b):
        checked += 1
        closed = congruence_closure(
            e, [(p.map[x], p.map[y]) for x, y in r.generating_pairs()]
        )
        pullback = _canonical_classes(tuple(closed.class_of[p.map[x]] for x in range(b.n)))
        assert all(
            pullback[x] == pullback[y] for x, y in r.generating_pairs()
        ), "automatic containment R ⊆ pullback(R') violated"
        if pullback != r.class_of:
            return CodescentVerdict(False, r, checked)
    return CodescentVerdict(True, None, checked)


def check_identities(q: FiniteQuasigroup) -> None:
    """Exhaustively assert the four defining identities on all pairs."""
    for a in range(q.n):
        for b in range(q.n):
            assert q.ldiv[a][q.mul[a][b]] == b
            assert q.rdiv[q.mul[a][b]][b] == a
            assert q.mul[a][q.ldiv[a][b]] == b
            assert q.mul[q.rdiv[a][b]][b] == a


_NAME_BAD = set("(),. \t\n\r")


def _check_name(s: str) -> str:
    if not s or any(ch in _NAME_BAD for ch in s):
        raise ValueError(f"name {s!r} contains grammar delimiters or is empty")
    return s


def quasigroup_to_dict(q: FiniteQuasigroup) -> dict:
    return {"name": q.name, "elements": list(q.names), "mul": [list(r) for r in q.mul]}


def quasigroup_from_dict(d: dict) -> FiniteQuasigroup:
    name = _check_name(d.get("name", "Q"))
    names = tuple(_check_name(s) for s in d["elements"])
    return from_mul_table(d["mul"], names=names, name=name)


def load_quasigroup(path) -> FiniteQuasigroup:
    with open(path, "r", encoding="utf-8") as fh:
        return quasigroup_from_dict(json.load(fh))


def rename(q: FiniteQuasigroup, name: str) -> FiniteQuasigroup:
    return replace(q, name=name)


def all_latin_squares(n: int):
    """Yield every n x n Latin square (desk scale: n <= 4)."""
    cols = [set() for _ in range(n)]
    table = []

    def rows():
        if len(table) == n:
            yield [list(r) for r in table]
            return
        for perm in itertools.permutations(range(n)):
            if any(perm[j] in cols[j] for j in range(n)):
                continue
            table.append(perm)
            for j in range(n):
                cols[j].add(perm[j])
            yield from rows()
            table.pop()
            for j in range(n):
                cols[j].remove(perm[j])

    yield from rows()


def all_quasigroups_up_to_iso(n: int) -> list:
    """Representatives of isomorphism classes of order-n quasigroups."""
    reps = {}
    for table in all_latin_squares(n):
        best = None
        for perm in itertools.permutations(range(n)):
            inv = [0] * n
            for i, x in enumerate(perm):
                inv[x] = i
            relabeled = tuple(
                tuple(perm[table[inv[a]][inv[b]]] for b in range(n)) for a in range(n)
            )
            if best is None or relabeled < best:
                best = relabeled
        if best not in reps:
            reps[best] = from_mul_table([list(r) for r in best], name=f"Q{n}_{len(reps)}")
    return list(reps.values())


def injective_homomorphisms(b: FiniteQuasigroup, e: FiniteQuasigroup) -> list:
    """All injective homomorphisms b -> e, each as an Embedding."""
    out = []
    for image in itertools.permutations(range(e.n), b.n):
        ok = True
        for x in range(b.n):
            for y in range(b.n):
                if image[b.mul[x][y]] != e.mul[image[x]][image[y]]:
                    ok = False
                    break
            if not ok:
                break
        if ok:
            out.append(Embedding(b, e, image))
    return out
