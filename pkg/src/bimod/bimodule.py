"""Bimodules and their calculus: the 1- and 2-cells over algebra 0-cells.

A bimodule is a coordinate space with commuting per-basis action matrices
for a left algebra and a right algebra.  Composition over the shared middle
algebra is an explicit quotient: the balance relations are rows of a matrix,
the quotient carries a canonical basis, and every structure map downstream
(unitors, rebracketings, interchange, Serre duals) is a concrete matrix
between such bases, with well-definedness checked at construction instead of
assumed.  The monoidal product over the ground field, the dualizability
cells C/E/Gamma, hom spaces and an isomorphism search live here too.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass

from .algebra import Algebra, generating_elements, matrix_algebra, opposite, tensor_algebra
from .linalg import (
    Matrix,
    QuotientSpace,
    induced_on_quotient,
    kernel_basis,
    make_quotient,
    map_from_quotient,
    unvec_r,
)
from .report import Report


class Bimodule:
    """A (left_alg, right_alg)-bimodule on a coordinate space.

    left_action[i] is the matrix of the i-th basis element of the left
    algebra acting on coordinates; right_action[j] likewise for the right
    algebra.  Compatibility (unital algebra map on the left, reversed unital
    action on the right, commuting actions) is checked by validate_bimodule,
    not by the constructor.  Equality is structural and ignores the name.
    """

    __slots__ = ("name", "left_alg", "right_alg", "dim", "left_action", "right_action")

    def __init__(self, name, left_alg, right_alg, dim, left_action, right_action):
        if len(left_action) != left_alg.dim:
            raise ValueError("need one left action matrix per left algebra basis element")
        if len(right_action) != right_alg.dim:
            raise ValueError("need one right action matrix per right algebra basis element")
        for m in list(left_action) + list(right_action):
            if m.rows != dim or m.cols != dim:
                raise ValueError("action matrices must be dim x dim")
        self.name = name
        self.left_alg = left_alg
        self.right_alg = right_alg
        self.dim = dim
        self.left_action = list(left_action)
        self.right_action = list(right_action)

    def left_action_of(self, x: Matrix) -> Matrix:
        """Action matrix of the left-algebra element with coordinates x."""
        acc = Matrix.zeros(self.left_alg.field, self.dim, self.dim)
        for i, _, v in x.entries():
            acc = acc + self.left_action[i] * v
        return acc

    def right_action_of(self, y: Matrix) -> Matrix:
        """Action matrix of the right-algebra element with coordinates y."""
        acc = Matrix.zeros(self.right_alg.field, self.dim, self.dim)
        for j, _, v in y.entries():
            acc = acc + self.right_action[j] * v
        return acc

    @property
    def field(self):
        return self.left_alg.field

    def __eq__(self, other):
        return (
            isinstance(other, Bimodule)
            and self.left_alg == other.left_alg
            and self.right_alg == other.right_alg
            and self.dim == other.dim
            and self.left_action == other.left_action
            and self.right_action == other.right_action
        )

    __hash__ = None

    def __repr__(self):
        return (
            f"Bimodule({self.name}, dim={self.dim}, "
            f"over ({self.left_alg.name}, {self.right_alg.name}))"
        )


def validate_bimodule(m: Bimodule) -> Report:
    """Check the three bimodule axioms, listing every failure."""
    failures = []
    a, b = m.left_alg, m.right_alg
    ident = Matrix.identity(m.field, m.dim)
    if m.left_action_of(a.unit) != ident:
        failures.append("left action not unital: L(unit) != id")
    if m.right_action_of(b.unit) != ident:
        failures.append("right action not unital: R(unit) != id")
    for i in range(a.dim):
        for j in range(a.dim):
            lhs = m.left_action[i] * m.left_action[j]
            rhs = Matrix.zeros(m.field, m.dim, m.dim)
            for k, _, v in a.product(i, j).entries():
                rhs = rhs + m.left_action[k] * v
            if lhs != rhs:
                failures.append(f"left action fails multiplicativity at (i={i}, j={j})")
    # right action reverses: (x.f_i).f_j = x.(f_i f_j), so R_j R_i matches
    # the structure constants of f_i f_j
    for i in range(b.dim):
        for j in range(b.dim):
            lhs = m.right_action[j] * m.right_action[i]
            rhs = Matrix.zeros(m.field, m.dim, m.dim)
            for k, _, v in b.product(i, j).entries():
                rhs = rhs + m.right_action[k] * v
            if lhs != rhs:
                failures.append(f"right action fails multiplicativity at (i={i}, j={j})")
    for i in range(a.dim):
        li = m.left_action[i]
        for j in range(b.dim):
            if li * m.right_action[j] != m.right_action[j] * li:
                failures.append(f"actions do not commute at (left={i}, right={j})")
    return Report(
        claim=f"validate_bimodule({m.name})", passed=not failures, failures=failures
    )


class BimoduleMap:
    """A 2-cell: a matrix intertwining both actions.

    The matrix maps src coordinates to dst coordinates (dst.dim x src.dim).
    With check=True (the default) the constructor verifies the intertwining
    relations and raises ValueError otherwise; internal constructions whose
    intertwining is forced (composites of checked maps, Kronecker products)
    pass check=False.
    """

    __slots__ = ("src", "dst", "matrix")

    def __init__(self, src: Bimodule, dst: Bimodule, matrix: Matrix, check: bool = True):
        if src.left_alg != dst.left_alg or src.right_alg != dst.right_alg:
            raise ValueError("bimodule maps need a common algebra pair")
        if matrix.rows != dst.dim or matrix.cols != src.dim:
            raise ValueError("matrix shape must be dst.dim x src.dim")
        if check:
            for i in range(src.left_alg.dim):
                if matrix * src.left_action[i] != dst.left_action[i] * matrix:
                    raise ValueError(f"not an intertwiner: left action basis {i}")
            for j in range(src.right_alg.dim):
                if matrix * src.right_action[j] != dst.right_action[j] * matrix:
                    raise ValueError(f"not an intertwiner: right action basis {j}")
        self.src = src
        self.dst = dst
        self.matrix = matrix

    @classmethod
    def identity(cls, m: Bimodule) -> "BimoduleMap":
        return cls(m, m, Matrix.identity(m.field, m.dim), check=False)

    def __matmul__(self, other: "BimoduleMap") -> "BimoduleMap":
        """Composite self o other (apply other first)."""
        if other.dst != self.src:
            raise ValueError("maps do not compose: dst/src mismatch")
        return BimoduleMap(other.src, self.dst, self.matrix * other.matrix, check=False)

    def __add__(self, other: "BimoduleMap") -> "BimoduleMap":
        if self.src != other.src or self.dst != other.dst:
            raise ValueError("maps with different endpoints cannot be added")
        return BimoduleMap(self.src, self.dst, self.matrix + other.matrix, check=False)

    def scaled(self, c) -> "BimoduleMap":
        return BimoduleMap(self.src, self.dst, self.matrix * c, check=False)

    def is_invertible(self) -> bool:
        return self.src.dim == self.dst.dim and self.matrix.rank() == self.src.dim

    def inverse(self) -> "BimoduleMap":
        return BimoduleMap(self.dst, self.src, self.matrix.inv(), check=False)

    def __eq__(self, other):
        return (
            isinstance(other, BimoduleMap)
            and self.src == other.src
            and self.dst == other.dst
            and self.matrix == other.matrix
        )

    __hash__ = None

    def __repr__(self):
        return f"BimoduleMap({self.src.name} -> {self.dst.name})"


@dataclass(frozen=True, eq=False)
class CompositeBimodule:
    """A composite over the shared algebra, keeping its quotient carrier.

    carrier presents result's coordinates as a quotient of the ambient
    tensor square (factor index (s, t) -> s * dim(second factor) + t) by the
    balance relations; maps are descended through it later, never re-derived.
    """

    result: Bimodule
    carrier: QuotientSpace
    factors: tuple


def balance_rows(m: Bimodule, n: Bimodule, element: Matrix) -> Matrix:
    """Rows spanning (x.b (x) y) - (x (x) b.y) in the ambient of m (x) n,
    for the middle-algebra element b with the given coordinates."""
    rb = m.right_action_of(element)
    lb = n.left_action_of(element)
    i_m = Matrix.identity(m.field, m.dim)
    i_n = Matrix.identity(n.field, n.dim)
    return rb.transpose().kron(i_n) - i_m.kron(lb.transpose())


def balance_matrix(m: Bimodule, n: Bimodule, elements) -> Matrix:
    """Stacked balance rows for every element in the given list."""
    blocks = [balance_rows(m, n, b) for b in elements]
    if not blocks:
        return Matrix.zeros(m.field, 0, m.dim * n.dim)
    out = blocks[0]
    for blk in blocks[1:]:
        out = out.vstack(blk)
    return out


def compose(m: Bimodule, n: Bimodule) -> CompositeBimodule:
    """The 1-cell composite: tensor over the shared middle algebra.

    The carrier quotients the ambient tensor square by balance rows for a
    generating set of the middle algebra; products of generators contribute
    nothing new (their rows telescope into generator rows acted on by basis
    elements, all of which are already present), so the row span equals the
    span over the full basis.  Outer actions descend through the carrier
    with an explicit well-definedness check.
    """
    if m.right_alg != n.left_alg:
        raise ValueError(
            f"algebra mismatch: cannot compose over {m.right_alg.name} "
            f"and {n.left_alg.name}"
        )
    mid = m.right_alg
    relations = balance_matrix(m, n, generating_elements(mid))
    carrier = make_quotient(m.dim * n.dim, relations)
    i_m = Matrix.identity(m.field, m.dim)
    i_n = Matrix.identity(n.field, n.dim)
    left = [
        induced_on_quotient(m.left_action[i].kron(i_n), carrier, carrier)
        for i in range(m.left_alg.dim)
    ]
    right = [
        induced_on_quotient(i_m.kron(n.right_action[j]), carrier, carrier)
        for j in range(n.right_alg.dim)
    ]
    result = Bimodule(
        f"({m.name} o {n.name})",
        m.left_alg,
        n.right_alg,
        carrier.quotient_dim,
        left,
        right,
    )
    return CompositeBimodule(result=result, carrier=carrier, factors=(m, n))


def compose_maps(
    f: BimoduleMap, g: BimoduleMap, cm: CompositeBimodule, cm2: CompositeBimodule
) -> BimoduleMap:
    """Descend f (x) g to a map cm.result -> cm2.result.

    Raises NotWellDefinedError when the Kronecker product fails to preserve
    the balance relations, which happens exactly when an input matrix is not
    an intertwiner.
    """
    if f.src != cm.factors[0] or g.src != cm.factors[1]:
        raise ValueError("f, g do not start at cm's factors")
    if f.dst != cm2.factors[0] or g.dst != cm2.factors[1]:
        raise ValueError("f, g do not end at cm2's factors")
    mat = induced_on_quotient(f.matrix.kron(g.matrix), cm.carrier, cm2.carrier)
    return BimoduleMap(cm.result, cm2.result, mat)


# ---------------------------------------------------------------------------
# monoidal product over the ground field


def tensor_k(m: Bimodule, n: Bimodule, name: str | None = None) -> Bimodule:
    """Product over the ground field, with lexicographic bases throughout."""
    if m.field != n.field:
        raise ValueError("field mismatch in tensor_k")
    left_alg = tensor_algebra(m.left_alg, n.left_alg)
    right_alg = tensor_algebra(m.right_alg, n.right_alg)
    left = [
        m.left_action[i].kron(n.left_action[p])
        for i in range(m.left_alg.dim)
        for p in range(n.left_alg.dim)
    ]
    right = [
        m.right_action[j].kron(n.right_action[q])
        for j in range(m.right_alg.dim)
        for q in range(n.right_alg.dim)
    ]
    return Bimodule(
        name or f"({m.name}(x){n.name})",
        left_alg,
        right_alg,
        m.dim * n.dim,
        left,
        right,
    )


def tensor_k_maps(f: BimoduleMap, g: BimoduleMap) -> BimoduleMap:
    return BimoduleMap(
        tensor_k(f.src, g.src),
        tensor_k(f.dst, g.dst),
        f.matrix.kron(g.matrix),
        check=False,
    )


# ---------------------------------------------------------------------------
# canonical cells


def unit_bimodule(a: Algebra) -> Bimodule:
    """The identity 1-cell: a acting on itself by multiplication."""
    return Bimodule(f"U_{a.name}", a, a, a.dim, list(a.left_mult), list(a.right_mult))


def ground_algebra(field) -> Algebra:
    """The ground field as the one-dimensional algebra."""
    return matrix_algebra(1, name="k", field=field)


def canonical_cells(a: Algebra):
    """The dualizability cells of a 0-cell: (a^op, C, E).

    Both C and E have underlying space a.  C is a (k, a (x) a^op)-bimodule
    with x . (e_i (x) e_p^op) = e_p * x * e_i; E is an (a^op (x) a, k)-
    bimodule with (e_i^op (x) e_p) . x = e_p * x * e_i.
    """
    a_op = opposite(a)
    k = ground_algebra(a.field)
    ident = Matrix.identity(a.field, a.dim)
    sandwich = [
        a.left_mult[p] * a.right_mult[i]
        for i in range(a.dim)
        for p in range(a.dim)
    ]
    c = Bimodule(
        f"C_{a.name}", k, tensor_algebra(a, a_op), a.dim, [ident], sandwich
    )
    e = Bimodule(
        f"E_{a.name}", tensor_algebra(a_op, a), k, a.dim, sandwich, [ident]
    )
    return a_op, c, e


def gamma(a: Algebra, b: Algebra) -> Bimodule:
    """The symmetry 1-cell from a (x) b to b (x) a.

    Underlying space a (x) b; the left action is multiplication, the right
    action of b_j (x) a_q multiplies the a-factor by a_q and the b-factor by
    b_j on the right.
    """
    if a.field != b.field:
        raise ValueError("field mismatch in gamma")
    t_left = tensor_algebra(a, b)
    t_right = tensor_algebra(b, a)
    right = [
        a.right_mult[q].kron(b.right_mult[j])
        for j in range(b.dim)
        for q in range(a.dim)
    ]
    return Bimodule(
        f"Gamma({a.name},{b.name})",
        t_left,
        t_right,
        a.dim * b.dim,
        list(t_left.left_mult),
        right,
    )


# ---------------------------------------------------------------------------
# Serre duals


def serre_dual(m: Bimodule) -> Bimodule:
    """Swap the actions through the opposite algebras: (A,B) to (B^op, A^op)."""
    name = m.name[:-3] if m.name.endswith("^sd") else m.name + "^sd"
    return Bimodule(
        name,
        opposite(m.right_alg),
        opposite(m.left_alg),
        m.dim,
        list(m.right_action),
        list(m.left_action),
    )


def serre_dual_map(f: BimoduleMap) -> BimoduleMap:
    """The same matrix between the Serre duals, intertwining re-verified."""
    return BimoduleMap(serre_dual(f.src), serre_dual(f.dst), f.matrix)


def serre_dual_composite(m: Bimodule, reading: str = "standard") -> CompositeBimodule:
    """The Serre dual built as a composite of dualizability cells.

    standard reading (bottom strand = left tensor factor):
        (U_{B^op} (x) C_A) o (U_{B^op} (x) M (x) U_{A^op}) o (E_B (x) U_{A^op})
    flipped reading (the other strand order, with the matching C'/E' cells):
        (C'_A (x) U_{B^op}) o (U_{A^op} (x) M (x) U_{B^op}) o (U_{A^op} (x) E'_B)
    Both produce a (B^op, A^op)-bimodule; the action-swap serre_dual is the
    cheap construction, this one realizes it as an honest composite.
    """
    a, b = m.left_alg, m.right_alg
    a_op, c_a, _ = canonical_cells(a)
    b_op, _, e_b = canonical_cells(b)
    u_aop = unit_bimodule(a_op)
    u_bop = unit_bimodule(b_op)
    if reading == "standard":
        cell1 = tensor_k(u_bop, c_a)
        cell2 = tensor_k(tensor_k(u_bop, m), u_aop)
        cell3 = tensor_k(e_b, u_aop)
    elif reading == "flipped":
        k = ground_algebra(a.field)
        ident_a = Matrix.identity(a.field, a.dim)
        ident_b = Matrix.identity(b.field, b.dim)
        # C': (k, A^op (x) A) with x . (e_p^op (x) e_i) = e_p * x * e_i
        c_flip = Bimodule(
            f"C'_{a.name}",
            k,
            tensor_algebra(a_op, a),
            a.dim,
            [ident_a],
            [
                a.left_mult[p] * a.right_mult[i]
                for p in range(a.dim)
                for i in range(a.dim)
            ],
        )
        # E': (B (x) B^op, k) with (e_i (x) e_p^op) . x = e_i * x * e_p
        e_flip = Bimodule(
            f"E'_{b.name}",
            tensor_algebra(b, b_op),
            k,
            b.dim,
            [
                b.left_mult[i] * b.right_mult[p]
                for i in range(b.dim)
                for p in range(b.dim)
            ],
            [ident_b],
        )
        cell1 = tensor_k(c_flip, u_bop)
        cell2 = tensor_k(tensor_k(u_aop, m), u_bop)
        cell3 = tensor_k(u_aop, e_flip)
    else:
        raise ValueError("reading must be 'standard' or 'flipped'")
    return compose(compose(cell1, cell2).result, cell3)


# ---------------------------------------------------------------------------
# hom spaces and isomorphism search


def hom_space(m: Bimodule, n: Bimodule, elements=None) -> Matrix:
    """Rows are a canonical basis of bimodule maps m -> n, flattened row-major.

    The intertwining system is assembled for a generating set of each side
    algebra (soluble exactly when the full per-basis system is: intertwining
    generators forces intertwining their products); pass explicit coordinate
    columns via `elements` to use a different set, e.g. the full basis.
    """
    if m.left_alg != n.left_alg or m.right_alg != n.right_alg:
        raise ValueError("hom_space needs a common algebra pair")
    if elements is None:
        lefts = generating_elements(m.left_alg)
        rights = generating_elements(m.right_alg)
    else:
        lefts, rights = elements
    i_m = Matrix.identity(m.field, m.dim)
    i_n = Matrix.identity(n.field, n.dim)
    blocks = []
    for x in lefts:
        blocks.append(
            i_n.kron(m.left_action_of(x).transpose()) - n.left_action_of(x).kron(i_m)
        )
    for y in rights:
        blocks.append(
            i_n.kron(m.right_action_of(y).transpose()) - n.right_action_of(y).kron(i_m)
        )
    if not blocks:
        sys = Matrix.zeros(m.field, 0, n.dim * m.dim)
    else:
        sys = blocks[0]
        for blk in blocks[1:]:
            sys = sys.vstack(blk)
    return kernel_basis(sys)


def hom_basis_maps(m: Bimodule, n: Bimodule, elements=None):
    """The hom_space rows as unflattened matrices."""
    rows = hom_space(m, n, elements)
    return [unvec_r(rows.row(r).transpose(), n.dim, m.dim) for r in range(rows.rows)]


def find_isomorphism(m: Bimodule, n: Bimodule, seed: int = 0):
    """Search the hom space for an invertible intertwiner; None if not found.

    Deterministic order: single basis maps, then sums of two and three basis
    maps with coefficients in {1, -1, 2}, then 64 combinations with
    pseudo-random integer coefficients in [-4, 4] from the given seed.  A
    returned map is always a verified invertible intertwiner; None is
    inconclusive by design (no witness found, not a non-isomorphism proof).
    """
    if m.left_alg != n.left_alg or m.right_alg != n.right_alg:
        raise ValueError("find_isomorphism needs a common algebra pair")
    if m.dim != n.dim:
        return None
    basis = hom_basis_maps(m, n)
    if not basis:
        return None

    def attempt(mat):
        if mat.rank() == n.dim:
            return BimoduleMap(m, n, mat)
        return None

    for cand in basis:
        hit = attempt(cand)
        if hit:
            return hit
    coeffs = [m.field.parse(c) for c in (1, -1, 2)]
    for size in (2, 3):
        for idxs in itertools.combinations(range(len(basis)), size):
            for cs in itertools.product(coeffs, repeat=size):
                mat = basis[idxs[0]] * cs[0]
                for pos in range(1, size):
                    mat = mat + basis[idxs[pos]] * cs[pos]
                hit = attempt(mat)
                if hit:
                    return hit
    rng = random.Random(seed)
    for _ in range(64):
        mat = Matrix.zeros(m.field, n.dim, m.dim)
        for cand in basis:
            mat = mat + cand * m.field.parse(rng.randint(-4, 4))
        hit = attempt(mat)
        if hit:
            return hit
    return None


# ---------------------------------------------------------------------------
# unitors


def left_unitor(cm: CompositeBimodule):
    """(U_A o M) -> M, class of a (x) x to a.x, with its inverse x to [1 (x) x].

    Both composites are checked to be identities; this is a theorem for the
    balance quotient, so a failure means the carrier is corrupt.
    """
    u, m = cm.factors
    if u != unit_bimodule(cm.result.left_alg):
        raise ValueError("left_unitor needs a composite with U_A as first factor")
    amb = m.left_action[0]
    for i in range(1, len(m.left_action)):
        amb = amb.hstack(m.left_action[i])
    fwd_mat = map_from_quotient(amb, cm.carrier)
    inv_mat = cm.carrier.projection * u.left_alg.unit.kron(Matrix.identity(m.field, m.dim))
    _check_inverse_pair(fwd_mat, inv_mat, "left unitor")
    return (
        BimoduleMap(cm.result, m, fwd_mat),
        BimoduleMap(m, cm.result, inv_mat),
    )


def right_unitor(cm: CompositeBimodule):
    """(M o U_B) -> M, class of x (x) b to x.b, with its inverse."""
    m, u = cm.factors
    if u != unit_bimodule(cm.result.right_alg):
        raise ValueError("right_unitor needs a composite with U_B as second factor")
    b = u.right_alg
    ent = {}
    for j in range(b.dim):
        for u_row, s, v in m.right_action[j].entries():
            ent[(u_row, s * b.dim + j)] = v
    amb = Matrix.from_entries(m.field, m.dim, m.dim * b.dim, ent)
    fwd_mat = map_from_quotient(amb, cm.carrier)
    inv_mat = cm.carrier.projection * Matrix.identity(m.field, m.dim).kron(b.unit)
    _check_inverse_pair(fwd_mat, inv_mat, "right unitor")
    return (
        BimoduleMap(cm.result, m, fwd_mat),
        BimoduleMap(m, cm.result, inv_mat),
    )


def _check_inverse_pair(fwd: Matrix, inv: Matrix, what: str):
    if fwd * inv != Matrix.identity(fwd.field, fwd.rows) or inv * fwd != Matrix.identity(
        fwd.field, inv.rows
    ):
        raise ValueError(f"{what}: canonical maps failed to invert each other")


# ---------------------------------------------------------------------------
# flat composites and rebracketing


@dataclass(frozen=True, eq=False)
class FlatComposite:
    """One quotient for a whole chain: the full tensor of all factors modulo
    every adjacent balance relation at once."""

    factors: tuple
    carrier: QuotientSpace
    result: Bimodule


def flat_compose(factors) -> FlatComposite:
    """Compose a chain of 1-cells in a single quotient step."""
    factors = tuple(factors)
    if not factors:
        raise ValueError("flat_compose needs at least one factor")
    field = factors[0].field
    for f, g in zip(factors, factors[1:]):
        if f.right_alg != g.left_alg:
            raise ValueError(
                f"algebra mismatch in chain: {f.name} then {g.name}"
            )
    dims = [f.dim for f in factors]
    ambient = 1
    for d in dims:
        ambient *= d
    blocks = []
    for i in range(len(factors) - 1):
        pre = 1
        for d in dims[:i]:
            pre *= d
        post = 1
        for d in dims[i + 2:]:
            post *= d
        i_pre = Matrix.identity(field, pre)
        i_post = Matrix.identity(field, post)
        for b in generating_elements(factors[i].right_alg):
            blocks.append(
                i_pre.kron(balance_rows(factors[i], factors[i + 1], b)).kron(i_post)
            )
    if blocks:
        rel = blocks[0]
        for blk in blocks[1:]:
            rel = rel.vstack(blk)
    else:
        rel = Matrix.zeros(field, 0, ambient)
    carrier = make_quotient(ambient, rel)
    rest = ambient // dims[0]
    head = ambient // dims[-1]
    left = [
        induced_on_quotient(
            factors[0].left_action[i].kron(Matrix.identity(field, rest)),
            carrier,
            carrier,
        )
        for i in range(factors[0].left_alg.dim)
    ]
    right = [
        induced_on_quotient(
            Matrix.identity(field, head).kron(factors[-1].right_action[j]),
            carrier,
            carrier,
        )
        for j in range(factors[-1].right_alg.dim)
    ]
    name = " o ".join(f.name for f in factors)
    result = Bimodule(
        f"[{name}]",
        factors[0].left_alg,
        factors[-1].right_alg,
        carrier.quotient_dim,
        left,
        right,
    )
    return FlatComposite(factors=factors, carrier=carrier, result=result)


def bracket_to_flat(tree):
    """Evaluate a bracketing tree of 1-cells against its flat composite.

    tree is a Bimodule (leaf) or a pair (left_tree, right_tree).  Returns
    (factors, obj, flat, to_flat, result): obj is the top CompositeBimodule
    (or the leaf), flat the FlatComposite on the in-order factors, and
    to_flat the canonical matrix from the nested result's coordinates to the
    flat quotient's coordinates, well-definedness checked at every descent.
    """
    if isinstance(tree, Bimodule):
        flat = flat_compose([tree])
        return [tree], tree, flat, flat.carrier.projection, tree
    left_tree, right_tree = tree
    f_l, _, flat_l, t_l, res_l = bracket_to_flat(left_tree)
    f_r, _, flat_r, t_r, res_r = bracket_to_flat(right_tree)
    cm = compose(res_l, res_r)
    flat = flat_compose(f_l + f_r)
    lift_l = flat_l.carrier.section * t_l
    lift_r = flat_r.carrier.section * t_r
    psi = flat.carrier.projection * lift_l.kron(lift_r)
    to_flat = map_from_quotient(psi, cm.carrier)
    return f_l + f_r, cm, flat, to_flat, cm.result


def rebracketing_iso(tree_a, tree_b) -> BimoduleMap:
    """The canonical isomorphism between two bracketings of one chain.

    Both trees must flatten to the same factor list.  The map goes through
    the flat composite; its invertibility is verified by exact inversion.
    """
    factors_a, _, _, t_a, res_a = bracket_to_flat(tree_a)
    factors_b, _, _, t_b, res_b = bracket_to_flat(tree_b)
    if factors_a != factors_b:
        raise ValueError("the two trees do not flatten to the same chain")
    mat = t_b.inv() * t_a
    return BimoduleMap(res_a, res_b, mat)


def interchange_iso(m: Bimodule, n: Bimodule, mp: Bimodule, np_: Bimodule):
    """(M (x) N) o (M' (x) N')  ->  (M o M') (x) (N o N').

    Returns (outer, left, right, fwd, inv): the three composites and the
    factor-permutation descent with its verified inverse.
    """
    outer = compose(tensor_k(m, n), tensor_k(mp, np_))
    left = compose(m, mp)
    right = compose(n, np_)
    dm, dn, dmp, dnp = m.dim, n.dim, mp.dim, np_.dim
    ent = {}
    for s in range(dm):
        for t in range(dn):
            for u in range(dmp):
                for v in range(dnp):
                    src = (s * dn + t) * (dmp * dnp) + (u * dnp + v)
                    dst = (s * dmp + u) * (dn * dnp) + (t * dnp + v)
                    ent[(dst, src)] = m.field.one
    perm = Matrix.from_entries(m.field, dm * dn * dmp * dnp, dm * dn * dmp * dnp, ent)
    tgt = tensor_k(left.result, right.result)
    fwd_mat = map_from_quotient(
        left.carrier.projection.kron(right.carrier.projection) * perm, outer.carrier
    )
    inv_mat = (
        outer.carrier.projection
        * perm.transpose()
        * left.carrier.section.kron(right.carrier.section)
    )
    _check_inverse_pair(fwd_mat, inv_mat, "interchange")
    fwd = BimoduleMap(outer.result, tgt, fwd_mat)
    inv = BimoduleMap(tgt, outer.result, inv_mat)
    return outer, left, right, fwd, inv


# ---------------------------------------------------------------------------
# example bimodules


def representation_bimodule(a: Algebra, matrices, name: str) -> Bimodule:
    """A left module (an (a, k)-bimodule) from per-basis action matrices."""
    if not matrices:
        raise ValueError("need at least one action matrix")
    dim = matrices[0].rows
    k = ground_algebra(a.field)
    return Bimodule(name, a, k, dim, list(matrices), [Matrix.identity(a.field, dim)])


def column_module(n: int, field) -> Bimodule:
    """The column space of the n x n matrix algebra as an (M_n, k)-bimodule."""
    a = matrix_algebra(n, field=field)
    mats = []
    for p in range(n):
        for q in range(n):
            mats.append(Matrix.from_entries(field, n, n, {(p, q): field.one}))
    return representation_bimodule(a, mats, f"columns(M{n})")


# ---------------------------------------------------------------------------
# serialization


def bimodule_to_json(m: Bimodule) -> dict:
    def mat_lists(mat):
        return [
            [m.field.to_str(mat.entry(i, j)) for j in range(mat.cols)]
            for i in range(mat.rows)
        ]

    return {
        "left": m.left_alg.name,
        "right": m.right_alg.name,
        "dim": m.dim,
        "left_action": [mat_lists(x) for x in m.left_action],
        "right_action": [mat_lists(x) for x in m.right_action],
    }


def bimodule_from_json(d: dict, algebras: dict, name: str = "bimodule") -> Bimodule:
    try:
        left_alg = algebras[d["left"]]
        right_alg = algebras[d["right"]]
    except KeyError as exc:
        raise ValueError(f"unknown algebra {exc.args[0]!r} in bimodule") from exc
    dim = int(d["dim"])
    field = left_alg.field

    def parse_mats(rows_list, count, what):
        if len(rows_list) != count:
            raise ValueError(f"need {count} {what} matrices, got {len(rows_list)}")
        out = []
        for rows in rows_list:
            if len(rows) != dim or any(len(r) != dim for r in rows):
                raise ValueError(f"{what} matrices must be dim x dim")
            out.append(Matrix.from_rows(field, rows))
        return out

    return Bimodule(
        name,
        left_alg,
        right_alg,
        dim,
        parse_mats(d["left_action"], left_alg.dim, "left_action"),
        parse_mats(d["right_action"], right_alg.dim, "right_action"),
    )


def map_to_json(f: BimoduleMap) -> dict:
    return {
        "src": bimodule_to_json(f.src),
        "dst": bimodule_to_json(f.dst),
        "matrix": [
            [f.src.field.to_str(f.matrix.entry(i, j)) for j in range(f.matrix.cols)]
            for i in range(f.matrix.rows)
        ],
    }


def map_from_json(d: dict, algebras: dict) -> BimoduleMap:
    src = bimodule_from_json(d["src"], algebras, name="src")
    dst = bimodule_from_json(d["dst"], algebras, name="dst")
    return BimoduleMap(src, dst, Matrix.from_rows(src.field, d["matrix"]))
