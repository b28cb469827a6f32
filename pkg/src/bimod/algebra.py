"""Finite-dimensional unital associative algebras given by structure constants.

An algebra is stored through its left-multiplication matrices: L_i[k, j] is
the coefficient of e_k in e_i * e_j.  That single list determines the
structure constants, the right-multiplication matrices, and (by Kronecker
products) tensor algebras.  The battery constructors (group algebras from
Cayley tables, full matrix algebras) are here too.
"""

from __future__ import annotations

from .linalg import Field, Matrix, Q
from .report import Report


class Algebra:
    """A unital associative algebra over an exact field.

    left_mult[i] is the matrix of x -> e_i * x on coordinates; unit is the
    coordinate column of 1.  Equality is structural (field, dimension,
    structure constants, unit) and ignores the display name, so relabeled
    copies such as k (x) A compare equal to A.
    """

    __slots__ = ("name", "field", "dim", "left_mult", "unit", "_right_mult",
                 "_gen_elements")

    def __init__(self, name: str, field: Field, left_mult: list, unit: Matrix):
        self.name = name
        self.field = field
        self.dim = len(left_mult)
        for m in left_mult:
            if m.rows != self.dim or m.cols != self.dim:
                raise ValueError("left multiplication matrices must be dim x dim")
        if unit.rows != self.dim or unit.cols != 1:
            raise ValueError("unit must be a dim x 1 column")
        self.left_mult = list(left_mult)
        self.unit = unit
        self._right_mult = None
        self._gen_elements = None

    # -- structure access

    @property
    def right_mult(self) -> list:
        """right_mult[j][k, i] = coefficient of e_k in e_i * e_j."""
        if self._right_mult is None:
            ent = [dict() for _ in range(self.dim)]
            for i, L in enumerate(self.left_mult):
                for k, j, v in L.entries():
                    ent[j][(k, i)] = v
            self._right_mult = [
                Matrix.from_entries(self.field, self.dim, self.dim, e) for e in ent
            ]
        return self._right_mult

    def product(self, i: int, j: int) -> Matrix:
        """Coordinates of e_i * e_j as a column."""
        return self.left_mult[i].col(j)

    def mult(self, x: Matrix, y: Matrix) -> Matrix:
        """Product of two coordinate columns."""
        acc = Matrix.zeros(self.field, self.dim, 1)
        for i, _, v in x.entries():
            acc = acc + (self.left_mult[i] * y) * v
        return acc

    def left_action_of(self, x: Matrix) -> Matrix:
        """Matrix of left multiplication by the element with coordinates x."""
        acc = Matrix.zeros(self.field, self.dim, self.dim)
        for i, _, v in x.entries():
            acc = acc + self.left_mult[i] * v
        return acc

    def structure_triples(self):
        """Yield (i, j, k, value) with e_i*e_j = sum_k value*e_k, sorted."""
        for i, L in enumerate(self.left_mult):
            for k, j, v in L.entries():
                yield (i, j, k, v)

    def generators(self) -> list:
        """A small subset of basis indices generating the algebra with 1.

        Greedy: grow the span of words in the chosen generators (rows of a
        matrix, closed under left multiplication by each generator) and add
        the first basis vector outside it until the span is everything.
        Callers use this only to shrink balance-relation sets; correctness
        never depends on which generating set comes back.
        """
        from .linalg import rref

        chosen: list[int] = []
        for _ in range(self.dim + 1):
            span = self.unit.transpose()
            rank = span.rank()
            grew = True
            while grew and rank < self.dim:
                grew = False
                for g in chosen:
                    cand = span.vstack(span * self.left_mult[g].transpose())
                    red, _, rk = rref(cand)
                    if rk > rank:
                        span, rank, grew = red.top_rows(rk), rk, True
            if rank == self.dim:
                return chosen
            for i in range(self.dim):
                probe = Matrix.from_entries(
                    self.field, 1, self.dim, {(0, i): self.field.one}
                )
                if span.vstack(probe).rank() > rank:
                    chosen.append(i)
                    break
        return list(range(self.dim))

    # -- comparisons

    def __eq__(self, other):
        return (
            isinstance(other, Algebra)
            and self.field == other.field
            and self.dim == other.dim
            and self.unit == other.unit
            and self.left_mult == other.left_mult
        )

    __hash__ = None

    def __repr__(self):
        return f"Algebra({self.name}, dim={self.dim}, over {self.field})"


# ---------------------------------------------------------------------------
# validation


def validate_algebra(a: Algebra) -> Report:
    """Check associativity and the two-sided unit law, listing every failure."""
    failures = []
    ident = Matrix.identity(a.field, a.dim)
    lu = a.left_action_of(a.unit)
    if lu != ident:
        failures.append("unit law fails on the left: L(unit) != id")
    ru = Matrix.zeros(a.field, a.dim, a.dim)
    for i, _, v in a.unit.entries():
        ru = ru + a.right_mult[i] * v
    if ru != ident:
        failures.append("unit law fails on the right: R(unit) != id")
    # associativity: L_i L_j = sum_k c[i][j][k] L_k  (left regular rep is an
    # algebra map); any failing pair is reported with indices
    for i in range(a.dim):
        for j in range(a.dim):
            lhs = a.left_mult[i] * a.left_mult[j]
            rhs = Matrix.zeros(a.field, a.dim, a.dim)
            for k, _, v in a.product(i, j).entries():
                rhs = rhs + a.left_mult[k] * v
            if lhs != rhs:
                failures.append(f"associativity fails at basis pair (i={i}, j={j})")
    return Report(claim=f"validate_algebra({a.name})", passed=not failures, failures=failures)


# ---------------------------------------------------------------------------
# constructions


def generating_elements(a: Algebra) -> list:
    """Coordinate columns of a small algebra generating set (with 1).

    Relation builders only need one balance row block per generating element,
    so keeping this list short matters for tensor algebras; their factor
    structure is remembered and turned into g(x)1 and 1(x)h elements instead
    of running the greedy search on the full product basis.
    """
    if a._gen_elements is None:
        a._gen_elements = [
            Matrix.from_entries(a.field, a.dim, 1, {(g, 0): a.field.one})
            for g in a.generators()
        ]
    return a._gen_elements


def opposite(a: Algebra) -> Algebra:
    """Reverse multiplication: the opposite's left action is a's right action."""
    name = a.name[:-3] if a.name.endswith("^op") else a.name + "^op"
    out = Algebra(name, a.field, list(a.right_mult), a.unit)
    # a set generating A also generates A^op (same span of words)
    out._gen_elements = a._gen_elements
    return out


def tensor_algebra(a: Algebra, b: Algebra, name: str | None = None) -> Algebra:
    """Tensor product algebra on the lexicographic (left-factor-major) basis."""
    if a.field != b.field:
        raise ValueError("field mismatch in tensor_algebra")
    left = []
    for i in range(a.dim):
        for p in range(b.dim):
            left.append(a.left_mult[i].kron(b.left_mult[p]))
    out = Algebra(
        name or f"({a.name}x{b.name})",
        a.field,
        left,
        a.unit.kron(b.unit),
    )
    out._gen_elements = [g.kron(b.unit) for g in generating_elements(a)] + [
        a.unit.kron(h) for h in generating_elements(b)
    ]
    return out


def group_algebra(cayley: list, name: str | None = None, field: Field = Q) -> Algebra:
    """Group algebra from a Cayley table t[i][j] = index of g_i * g_j.

    The table is checked to be an honest group: closed, associative, with
    identity and inverses; the failing axiom is named otherwise.
    """
    n = len(cayley)
    for row in cayley:
        if len(row) != n or any(not (0 <= x < n) for x in row):
            raise ValueError("not a group table: not closed on {0..n-1}")
    ident = None
    for e in range(n):
        if all(cayley[e][j] == j and cayley[j][e] == j for j in range(n)):
            ident = e
            break
    if ident is None:
        raise ValueError("not a group table: no identity element")
    for i in range(n):
        for j in range(n):
            for k in range(n):
                if cayley[cayley[i][j]][k] != cayley[i][cayley[j][k]]:
                    raise ValueError(
                        f"not a group table: associativity fails at ({i},{j},{k})"
                    )
    for i in range(n):
        if not any(cayley[i][j] == ident and cayley[j][i] == ident for j in range(n)):
            raise ValueError(f"not a group table: element {i} has no inverse")
    one = field.one
    left = [
        Matrix.from_entries(field, n, n, {(cayley[i][j], j): one for j in range(n)})
        for i in range(n)
    ]
    unit = Matrix.from_entries(field, n, 1, {(ident, 0): one})
    return Algebra(name or f"k[G{n}]", field, left, unit)


def matrix_algebra(n: int, name: str | None = None, field: Field = Q) -> Algebra:
    """Full matrix algebra M_n with basis e_pq at index p*n + q."""
    if n < 1:
        raise ValueError("matrix_algebra needs n >= 1")
    one = field.one
    left = []
    for p in range(n):
        for q in range(n):
            # e_pq * e_rs = delta_qr e_ps: column (r, s) has a 1 at (p, s)
            ent = {(p * n + s, q * n + s): one for s in range(n)}
            left.append(Matrix.from_entries(field, n * n, n * n, ent))
    unit = Matrix.from_entries(field, n * n, 1, {(p * n + p, 0): one for p in range(n)})
    out = Algebra(name or f"M{n}", field, left, unit)
    if n >= 2:
        # The cycle sum(e_{p,p+1 mod n}) and the idempotent e_00 generate M_n:
        # conjugating e_00 by cycle powers recovers every matrix unit.  Two
        # generators instead of n^2 basis elements keeps composite relation
        # sets small.
        cyc = Matrix.from_entries(
            field, n * n, 1, {(p * n + (p + 1) % n, 0): one for p in range(n)}
        )
        corner = Matrix.from_entries(field, n * n, 1, {(0, 0): one})
        out._gen_elements = [cyc, corner]
    return out


def dual_numbers(field: Field = Q, name: str | None = None) -> Algebra:
    """k[x]/(x^2): basis (1, x) with x^2 = 0.  The smallest non-semisimple
    algebra, used as the standing counterexample for separability."""
    one = field.one
    left = [
        Matrix.identity(field, 2),
        Matrix.from_entries(field, 2, 2, {(1, 0): one}),
    ]
    unit = Matrix.from_entries(field, 2, 1, {(0, 0): one})
    return Algebra(name or "k[x]/(x^2)", field, left, unit)


# ---------------------------------------------------------------------------
# battery


def cyclic_table(n: int) -> list:
    return [[(i + j) % n for j in range(n)] for i in range(n)]


def s3_table() -> list:
    """Cayley table of S_3; elements are the one-line permutations of (0,1,2)
    in lexicographic order, (p*q)(x) = p(q(x))."""
    perms = [(0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)]
    index = {p: i for i, p in enumerate(perms)}
    return [
        [index[tuple(p[q[x]] for x in range(3))] for q in perms]
        for p in perms
    ]


def s3_conjugacy_representatives() -> list:
    """Basis indices of class representatives: identity, a transposition, a
    3-cycle (in the s3_table element order)."""
    return [0, 1, 3]


def standard_battery(field: Field = Q) -> dict:
    """The named example algebras used throughout the tests and the CLI."""
    k = matrix_algebra(1, name="k", field=field)
    qc2 = group_algebra(cyclic_table(2), name="QC2", field=field)
    qc3 = group_algebra(cyclic_table(3), name="QC3", field=field)
    qs3 = group_algebra(s3_table(), name="QS3", field=field)
    m2 = matrix_algebra(2, name="M2", field=field)
    m3 = matrix_algebra(3, name="M3", field=field)
    return {
        "k": k,
        "QC2": qc2,
        "QC3": qc3,
        "QS3": qs3,
        "M2": m2,
        "M3": m3,
        "QC2xM2": tensor_algebra(qc2, m2, name="QC2xM2"),
    }


# ---------------------------------------------------------------------------
# serialization


def algebra_to_json(a: Algebra) -> dict:
    triples = sorted(
        ((i, j, k, a.field.to_str(v)) for (i, j, k, v) in a.structure_triples()),
    )
    return {
        "name": a.name,
        "field": a.field.json_tag(),
        "dim": a.dim,
        "unit": [a.field.to_str(a.unit.entry(i, 0)) for i in range(a.dim)],
        "structure": [list(t) for t in triples],
    }


def algebra_from_json(d: dict) -> Algebra:
    from .linalg import field_from_tag

    field = field_from_tag(d["field"])
    dim = int(d["dim"])
    unit_list = d["unit"]
    if len(unit_list) != dim:
        raise ValueError("unit length must equal dim")
    ent = [dict() for _ in range(dim)]
    for item in d["structure"]:
        i, j, k, v = item
        i, j, k = int(i), int(j), int(k)
        if not (0 <= i < dim and 0 <= j < dim and 0 <= k < dim):
            raise ValueError(f"structure index out of range: {item}")
        ent[i][(k, j)] = field.parse(v)
    left = [Matrix.from_entries(field, dim, dim, e) for e in ent]
    unit = Matrix.from_entries(
        field, dim, 1, {(i, 0): field.parse(v) for i, v in enumerate(unit_list)}
    )
    return Algebra(d["name"], field, left, unit)
