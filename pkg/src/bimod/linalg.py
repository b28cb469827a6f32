"""Exact linear algebra kernel: fields, matrices, row reduction, quotients.

Everything downstream (algebras, bimodules, homology, traces) is built on the
four primitives here: rref, solve, kernel_basis and make_quotient.  All
arithmetic is exact (arbitrary-precision rationals by default, or GF(p)), and
every operation is deterministic:

  * rref pivots on the first nonzero column, top to bottom (the reduced row
    echelon form is unique, so any correct algorithm yields the same matrix);
  * solve returns the particular solution with zeros in all free variables;
  * quotient bases are the standard coordinates at the non-pivot columns of
    the relation matrix's rref.

Matrices are immutable-by-convention wrappers around sympy's sparse
DomainMatrix, which supplies fast exact elimination.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, NamedTuple

from sympy import GF, QQ, isprime
from sympy.polys.matrices import DomainMatrix


class NotWellDefinedError(ValueError):
    """A map does not descend to the requested quotient."""


# ---------------------------------------------------------------------------
# fields


class Field:
    """An exact field: rationals or a prime field GF(p).

    Scalars are elements of ``self.domain`` (sympy domain elements).  They are
    stored canonically: rationals in lowest terms with positive denominator,
    GF(p) residues in 0..p-1.
    """

    domain = None
    name = ""

    @property
    def zero(self):
        return self.domain.zero

    @property
    def one(self):
        return self.domain.one

    def parse(self, x):
        """Coerce an int, Fraction, 'p/q' string or domain element to a scalar."""
        dom = self.domain
        if isinstance(x, str):
            x = Fraction(x)
        if isinstance(x, Fraction):
            if dom.is_FF and x.denominator % dom.characteristic() == 0:
                raise ZeroDivisionError(f"{x} has no image in {self.name}")
            return dom(x.numerator) / dom(x.denominator)
        if isinstance(x, int):
            return dom(x)
        return dom.convert(x)

    def to_str(self, el):
        """Canonical string form: 'p' or 'p/q' over Q, the residue over GF(p)."""
        if self.domain.is_FF:
            return str(int(el))
        num, den = el.numerator, el.denominator
        return str(num) if den == 1 else f"{num}/{den}"

    def to_fraction(self, el) -> Fraction:
        if self.domain.is_FF:
            return Fraction(int(el))
        return Fraction(int(el.numerator), int(el.denominator))

    def json_tag(self):
        raise NotImplementedError

    def __eq__(self, other):
        return isinstance(other, Field) and self.name == other.name

    def __hash__(self):
        return hash(self.name)

    def __repr__(self):
        return self.name


class _RationalField(Field):
    domain = QQ
    name = "Q"

    def json_tag(self):
        return "Q"


class PrimeField(Field):
    def __init__(self, p: int):
        if not (isinstance(p, int) and p >= 2 and isprime(p)):
            raise ValueError(f"GF({p}): modulus must be prime")
        self.p = p
        self.domain = GF(p, symmetric=False)
        self.name = f"GF({p})"

    def json_tag(self):
        return {"GF": self.p}


Q = _RationalField()


def field_from_tag(tag) -> Field:
    """Inverse of Field.json_tag, for deserialization."""
    if tag == "Q":
        return Q
    if isinstance(tag, dict) and set(tag) == {"GF"}:
        return PrimeField(int(tag["GF"]))
    raise ValueError(f"unrecognized field tag {tag!r}")


# ---------------------------------------------------------------------------
# matrices


class Matrix:
    """A dense-semantics exact matrix with sparse storage.

    Wraps a sympy DomainMatrix (SDM representation).  Entries are field
    scalars; the wrapper adds shape-checked arithmetic, Kronecker products
    and deterministic access order.  Do not mutate after construction.
    """

    __slots__ = ("field", "dm")
    __hash__ = None

    def __init__(self, field: Field, dm: DomainMatrix):
        self.field = field
        self.dm = dm.to_sparse() if not hasattr(dm.rep, "get") else dm

    # -- constructors

    @classmethod
    def from_rows(cls, field: Field, rows) -> "Matrix":
        nrows = len(rows)
        ncols = len(rows[0]) if nrows else 0
        ent = {}
        for i, row in enumerate(rows):
            if len(row) != ncols:
                raise ValueError("ragged rows")
            r = {}
            for j, x in enumerate(row):
                v = field.parse(x)
                if v:
                    r[j] = v
            if r:
                ent[i] = r
        return cls(field, DomainMatrix(ent, (nrows, ncols), field.domain))

    @classmethod
    def from_entries(cls, field: Field, nrows: int, ncols: int, entries) -> "Matrix":
        """Build from a {(i, j): value} mapping; zeros are dropped."""
        ent = {}
        for (i, j), x in entries.items():
            v = field.parse(x) if isinstance(x, (int, str, Fraction)) else x
            if v:
                if not (0 <= i < nrows and 0 <= j < ncols):
                    raise IndexError((i, j))
                ent.setdefault(i, {})[j] = v
        return cls(field, DomainMatrix(ent, (nrows, ncols), field.domain))

    @classmethod
    def from_row_dicts(cls, field: Field, rows, nrows: int, ncols: int) -> "Matrix":
        """Build from a {row: {col: domain value}} mapping; rows may be sparse.
        Values must already live in the field's domain (no parsing)."""
        ent = {i: dict(r) for i, r in rows.items() if r}
        return cls(field, DomainMatrix(ent, (nrows, ncols), field.domain))

    @classmethod
    def zeros(cls, field: Field, nrows: int, ncols: int) -> "Matrix":
        return cls(field, DomainMatrix({}, (nrows, ncols), field.domain))

    @classmethod
    def identity(cls, field: Field, n: int) -> "Matrix":
        one = field.one
        ent = {i: {i: one} for i in range(n)}
        return cls(field, DomainMatrix(ent, (n, n), field.domain))

    # -- shape and access

    @property
    def rows(self) -> int:
        return self.dm.shape[0]

    @property
    def cols(self) -> int:
        return self.dm.shape[1]

    def entry(self, i: int, j: int):
        if not (0 <= i < self.rows and 0 <= j < self.cols):
            raise IndexError((i, j))
        return self.dm.rep.get(i, {}).get(j, self.field.zero)

    def entries(self) -> Iterator[tuple[int, int, object]]:
        """Yield (i, j, value) for nonzero entries in row-major order."""
        rep = self.dm.rep
        for i in sorted(rep):
            row = rep[i]
            for j in sorted(row):
                yield i, j, row[j]

    def to_lists(self):
        z = self.field.zero
        rep = self.dm.rep
        return [
            [rep.get(i, {}).get(j, z) for j in range(self.cols)]
            for i in range(self.rows)
        ]

    def nnz(self) -> int:
        return sum(len(r) for r in self.dm.rep.values())

    # -- arithmetic

    def _chk(self, other, same_shape):
        if not isinstance(other, Matrix):
            raise TypeError(f"expected Matrix, got {type(other).__name__}")
        if self.field != other.field:
            raise ValueError("field mismatch")
        if same_shape and self.dm.shape != other.dm.shape:
            raise ValueError(f"shape mismatch {self.dm.shape} vs {other.dm.shape}")

    def __add__(self, other):
        self._chk(other, True)
        return Matrix(self.field, self.dm + other.dm)

    def __sub__(self, other):
        self._chk(other, True)
        return Matrix(self.field, self.dm - other.dm)

    def __neg__(self):
        return Matrix(self.field, -self.dm)

    def __mul__(self, other):
        """Matrix @ Matrix, or Matrix * scalar."""
        if isinstance(other, Matrix):
            self._chk(other, False)
            if self.cols != other.rows:
                raise ValueError(f"cannot multiply {self.dm.shape} by {other.dm.shape}")
            return Matrix(self.field, self.dm * other.dm)
        return Matrix(self.field, self.dm.mul(self.field.parse(other)))

    def __rmul__(self, other):
        return self.__mul__(other)

    def __eq__(self, other):
        return (
            isinstance(other, Matrix)
            and self.field == other.field
            and self.dm.shape == other.dm.shape
            and dict(self.dm.rep) == dict(other.dm.rep)
        )

    def transpose(self) -> "Matrix":
        return Matrix(self.field, self.dm.transpose())

    def kron(self, other: "Matrix") -> "Matrix":
        """Kronecker product, row-major index convention (left factor major)."""
        self._chk(other, False)
        r2, c2 = other.dm.shape
        ent = {}
        orep = other.dm.rep
        for i, row in self.dm.rep.items():
            for p in orep:
                orow = orep[p]
                tgt = {}
                for j, a in row.items():
                    for q, b in orow.items():
                        tgt[j * c2 + q] = a * b
                if tgt:
                    ent[i * r2 + p] = tgt
        return Matrix(
            self.field,
            DomainMatrix(ent, (self.rows * r2, self.cols * c2), self.field.domain),
        )

    def hstack(self, other: "Matrix") -> "Matrix":
        self._chk(other, False)
        return Matrix(self.field, self.dm.hstack(other.dm))

    def vstack(self, other: "Matrix") -> "Matrix":
        self._chk(other, False)
        return Matrix(self.field, self.dm.vstack(other.dm))

    def col(self, j: int) -> "Matrix":
        ent = {}
        for i, row in self.dm.rep.items():
            if j in row:
                ent[i] = {0: row[j]}
        return Matrix(self.field, DomainMatrix(ent, (self.rows, 1), self.field.domain))

    def row(self, i: int) -> "Matrix":
        r = self.dm.rep.get(i, {})
        ent = {0: dict(r)} if r else {}
        return Matrix(self.field, DomainMatrix(ent, (1, self.cols), self.field.domain))

    def top_rows(self, k: int) -> "Matrix":
        """The submatrix of the first k rows."""
        ent = {i: dict(r) for i, r in self.dm.rep.items() if i < k}
        return Matrix(self.field, DomainMatrix(ent, (k, self.cols), self.field.domain))

    def trace(self):
        t = self.field.zero
        for i, row in self.dm.rep.items():
            if i in row:
                t = t + row[i]
        return t

    def is_zero(self) -> bool:
        return all(not r for r in self.dm.rep.values())

    def rank(self) -> int:
        return self.dm.rank()

    def inv(self) -> "Matrix":
        """Exact inverse; raises ValueError when singular."""
        if self.rows != self.cols:
            raise ValueError("inverse of a non-square matrix")
        red, piv, rk = rref(self.hstack(Matrix.identity(self.field, self.rows)))
        if len([p for p in piv if p < self.rows]) < self.rows:
            raise ValueError("matrix is singular")
        ent = {}
        for i, row in red.dm.rep.items():
            tgt = {j - self.rows: v for j, v in row.items() if j >= self.rows}
            if tgt:
                ent[i] = tgt
        return Matrix(
            self.field, DomainMatrix(ent, (self.rows, self.rows), self.field.domain)
        )

    def __repr__(self):
        if self.rows * self.cols > 64:
            return f"Matrix({self.rows}x{self.cols} over {self.field}, nnz={self.nnz()})"
        body = "; ".join(
            " ".join(self.field.to_str(self.entry(i, j)) for j in range(self.cols))
            for i in range(self.rows)
        )
        return f"Matrix[{body}]"


def vec_r(m: Matrix) -> Matrix:
    """Flatten row-major into a column vector: index (i, j) -> i*cols + j."""
    c = m.cols
    ent = {}
    for i, row in m.dm.rep.items():
        for j, v in row.items():
            ent[i * c + j] = {0: v}
    return Matrix(m.field, DomainMatrix(ent, (m.rows * m.cols, 1), m.field.domain))


def unvec_r(v: Matrix, nrows: int, ncols: int) -> Matrix:
    if v.cols != 1 or v.rows != nrows * ncols:
        raise ValueError("shape mismatch in unvec_r")
    ent = {}
    for i, row in v.dm.rep.items():
        ent.setdefault(i // ncols, {})[i % ncols] = row[0]
    return Matrix(v.field, DomainMatrix(ent, (nrows, ncols), v.field.domain))


# ---------------------------------------------------------------------------
# row reduction, solving, kernels


class RrefResult(NamedTuple):
    reduced: Matrix
    pivot_cols: tuple
    rank: int


def rref(m: Matrix) -> RrefResult:
    """Unique reduced row echelon form, pivot columns, rank."""
    red, piv = m.dm.rref()
    return RrefResult(Matrix(m.field, red), tuple(piv), len(piv))


def solve(a: Matrix, b: Matrix):
    """Deterministic particular solution x of a*x = b, or None.

    Free (non-pivot) variables are set to zero.  b may have several columns;
    None means b is outside the column space (callers use this as a
    certificate, e.g. of non-projectivity).
    """
    a._chk(b, False)
    if a.rows != b.rows:
        raise ValueError("a and b must have the same number of rows")
    red, piv, rk = rref(a.hstack(b))
    piv_a = [p for p in piv if p < a.cols]
    if len(piv_a) < rk:
        return None  # a pivot fell in the b block: inconsistent system
    ent = {}
    for i, p in enumerate(piv_a):
        row = red.dm.rep.get(i, {})
        tgt = {j - a.cols: v for j, v in row.items() if j >= a.cols}
        if tgt:
            ent[p] = tgt
    return Matrix(a.field, DomainMatrix(ent, (a.cols, b.cols), a.field.domain))


def kernel_basis(a: Matrix) -> Matrix:
    """Rows form the standard free-variable basis of {x : a*x = 0}.

    Row k corresponds to the k-th non-pivot column f (in increasing order):
    it has 1 at f and -rref[i, f] at each pivot column p_i.
    """
    red, piv, rk = rref(a)
    pivset = set(piv)
    free = [j for j in range(a.cols) if j not in pivset]
    ent = {}
    for k, f in enumerate(free):
        row = {f: a.field.one}
        for i, p in enumerate(piv):
            v = red.dm.rep.get(i, {}).get(f)
            if v:
                row[p] = -v
        ent[k] = row
    return Matrix(a.field, DomainMatrix(ent, (len(free), a.cols), a.field.domain))


# ---------------------------------------------------------------------------
# quotient spaces


@dataclass(frozen=True)
class QuotientSpace:
    """An ambient space modulo the row span of a relation matrix.

    The quotient basis is the set of standard coordinates at the non-pivot
    columns of the relations' rref, making every downstream basis (HH_0
    classes, composite bimodule carriers) reproducible.  projection kills
    exactly the relation span; projection * section is the identity.
    """

    field: Field
    ambient_dim: int
    relation_basis: Matrix  # rref rows spanning the relation subspace
    relation_basis_t: Matrix  # its transpose, shared by every descent check
    quotient_dim: int
    projection: Matrix  # quotient_dim x ambient_dim
    section: Matrix  # ambient_dim x quotient_dim
    pivot_cols: tuple
    nonpivot_cols: tuple

    def project_vector(self, v: Matrix) -> Matrix:
        return self.projection * v

    def lift(self, w: Matrix) -> Matrix:
        return self.section * w


def _sorted_relation_dm(field: Field, relations: Matrix) -> DomainMatrix:
    # Dedupe rows and feed the sparsest first: the rref is unique either way,
    # but the elimination runs much faster on big structured relation sets.
    seen = set()
    rows = []
    for i, row in relations.dm.rep.items():
        if not row:
            continue
        key = tuple(sorted(row.items(), key=lambda t: t[0]))
        if key in seen:
            continue
        seen.add(key)
        rows.append(row)
    rows.sort(key=lambda r: (len(r), sorted(r)))
    ent = {i: dict(r) for i, r in enumerate(rows)}
    return DomainMatrix(ent, (len(rows), relations.cols), field.domain)


def make_quotient(ambient_dim: int, relations: Matrix) -> QuotientSpace:
    """Quotient of a coordinate space by the row span of `relations`."""
    if relations.cols != ambient_dim:
        raise ValueError("relation columns must match the ambient dimension")
    field = relations.field
    red_dm, piv = _sorted_relation_dm(field, relations).rref()
    piv = tuple(piv)
    rk = len(piv)
    red = Matrix(
        field,
        DomainMatrix(
            {i: red_dm.rep[i] for i in range(rk) if i in red_dm.rep},
            (rk, ambient_dim),
            field.domain,
        ),
    )
    pivset = set(piv)
    nonpiv = tuple(j for j in range(ambient_dim) if j not in pivset)
    qdim = ambient_dim - rk
    one = field.one
    proj = {}
    for k, f in enumerate(nonpiv):
        row = {f: one}
        for i, p in enumerate(piv):
            v = red.dm.rep.get(i, {}).get(f)
            if v:
                row[p] = -v
        proj[k] = row
    sec = {f: {k: one} for k, f in enumerate(nonpiv)}
    return QuotientSpace(
        field=field,
        ambient_dim=ambient_dim,
        relation_basis=red,
        relation_basis_t=red.transpose(),
        quotient_dim=qdim,
        projection=Matrix(field, DomainMatrix(proj, (qdim, ambient_dim), field.domain)),
        section=Matrix(field, DomainMatrix(sec, (ambient_dim, qdim), field.domain)),
        pivot_cols=piv,
        nonpivot_cols=nonpiv,
    )


def induced_on_quotient(f: Matrix, src: QuotientSpace, dst: QuotientSpace) -> Matrix:
    """Descend f: src ambient -> dst ambient to the quotients.

    Well-definedness demands that f maps the src relation span into the dst
    relation span; since ker(dst.projection) is exactly that span, the check
    is dst.projection * f * src.relation_basis^T = 0.  Failure raises
    NotWellDefinedError: some upstream map was not an intertwiner.
    """
    if f.rows != dst.ambient_dim or f.cols != src.ambient_dim:
        raise ValueError("f does not map src ambient to dst ambient")
    if src.relation_basis.rows:
        resid = dst.projection * f * src.relation_basis_t
        if not resid.is_zero():
            raise NotWellDefinedError(
                "map does not preserve the relation subspace"
            )
    return dst.projection * f * src.section


def map_from_quotient(f: Matrix, src: QuotientSpace) -> Matrix:
    """Descend f: src ambient -> W to the quotient, for a plain target W.

    f must kill the relation span outright; the descended map is f composed
    with the quotient section (independent of the section choice once the
    kill-check passes).
    """
    if f.cols != src.ambient_dim:
        raise ValueError("f is not defined on the src ambient")
    if src.relation_basis.rows:
        resid = f * src.relation_basis_t
        if not resid.is_zero():
            raise NotWellDefinedError("map does not kill the relation subspace")
    return f * src.section
