"""The shadow: Hochschild chains of (A,A)-bimodules, exactly.

Degree-n chains are M (x) A^(x n) in lexicographic coordinates; the boundary
is the standard alternating sum, assembled sparsely.  HH dimensions come
from exact boundary ranks.  Degree 0 carries all the structure the trace
layer needs: the commutator quotient HH_0 with induced maps, the cyclicity
isomorphism between HH_0 of a composite and its reverse, and the degree-0
Kunneth map.  Each descent re-checks well-definedness instead of trusting
the caller.
"""

from __future__ import annotations

from dataclasses import dataclass

from .algebra import Algebra, tensor_algebra
from .bimodule import (
    Bimodule,
    BimoduleMap,
    compose,
    left_unitor,
    rebracketing_iso,
    right_unitor,
    unit_bimodule,
)
from .linalg import Matrix, QuotientSpace, make_quotient, map_from_quotient
from .report import Report


@dataclass(frozen=True, eq=False)
class HochschildComplex:
    """Chains C_n = M (x) A^(x n) for n = 0..cap with boundaries b_1..b_cap."""

    algebra: Algebra
    coefficients: Bimodule
    cap: int
    chain_dims: list
    boundaries: list  # boundaries[i] is b_{i+1}: C_{i+1} -> C_i


@dataclass(frozen=True, eq=False)
class HH0Space:
    """The commutator quotient of an (A,A)-bimodule, with a canonical basis."""

    carrier: QuotientSpace


def _require_endo(a: Algebra, m: Bimodule, what: str):
    if m.left_alg != a or m.right_alg != a:
        raise ValueError(f"{what} needs an ({a.name},{a.name})-bimodule, got {m.name}")


def _sparse_columns(mats):
    """Per-basis action columns as lists of (row, value) pairs."""
    cols = [[[] for _ in range(mats[0].cols)] for _ in mats]
    for i, mat in enumerate(mats):
        for u, s, v in mat.entries():
            cols[i][s].append((u, v))
    return cols


def hochschild_boundary(a: Algebra, m: Bimodule, n: int) -> Matrix:
    """The degree-n boundary C_n -> C_{n-1}.

    b(m (x) a_1 (x) ... (x) a_n) = (m.a_1) (x) a_2 ... a_n
      + sum_{i=1}^{n-1} (-1)^i  m (x) ... (a_i a_{i+1}) ... (x) a_n
      + (-1)^n (a_n.m) (x) a_1 ... a_{n-1}
    in lexicographic coordinates (m-index most significant).
    """
    _require_endo(a, m, "hochschild_boundary")
    if n < 1:
        raise ValueError("boundary degree must be at least 1")
    d, md, field = a.dim, m.dim, a.field
    rcols = _sparse_columns(m.right_action)
    lcols = _sparse_columns(m.left_action)
    prods = [[list(a.product(i, j).entries()) for j in range(d)] for i in range(d)]
    pows = [d**e for e in range(n + 1)]
    tail = pows[n - 1]
    rows: dict = {}

    def add(r, c, v):
        row = rows.setdefault(r, {})
        w = row.get(c)
        w = v if w is None else w + v
        if w:
            row[c] = w
        elif c in row:
            del row[c]

    last_sign = field.one if n % 2 == 0 else -field.one
    for s in range(md):
        base = s * pows[n]
        for t in range(pows[n]):
            src = base + t
            digits = []
            tt = t
            for pos in range(n - 1, -1, -1):
                digits.append(tt // pows[pos])
                tt %= pows[pos]
            rest = t % tail
            for u, v in rcols[digits[0]][s]:
                add(u * tail + rest, src, v)
            sign = field.one
            for i in range(1, n):
                sign = -sign
                for k, _, v in prods[digits[i - 1]][digits[i]]:
                    merged = 0
                    for pos, dg in enumerate(digits[: i - 1] + [k] + digits[i + 1 :]):
                        merged = merged * d + dg
                    add(s * tail + merged, src, sign * v)
            head = t // d
            for u, v in lcols[digits[-1]][s]:
                add(u * tail + head, src, last_sign * v)
    return Matrix.from_row_dicts(field, rows, md * pows[n - 1], md * pows[n])


def hochschild_complex(a: Algebra, m: Bimodule, cap: int = 2) -> HochschildComplex:
    """The complex up to the degree cap, with b o b = 0 enforced."""
    _require_endo(a, m, "hochschild_complex")
    if cap < 0:
        raise ValueError("cap must be nonnegative")
    boundaries = [hochschild_boundary(a, m, deg) for deg in range(1, cap + 1)]
    for lower, upper in zip(boundaries, boundaries[1:]):
        if not (lower * upper).is_zero():
            raise ValueError("boundary squares to a nonzero map; corrupt input")
    return HochschildComplex(
        algebra=a,
        coefficients=m,
        cap=cap,
        chain_dims=[m.dim * a.dim**deg for deg in range(cap + 1)],
        boundaries=boundaries,
    )


def hh_dims(a: Algebra, m: Bimodule, cap: int = 2) -> list:
    """Exact dims of HH_0..HH_cap via boundary ranks:
    HH_n = dim C_n - rank b_n - rank b_{n+1} (with b_0 = 0)."""
    _require_endo(a, m, "hh_dims")
    if cap < 0:
        raise ValueError("cap must be nonnegative")
    ranks = [0] + [
        hochschild_boundary(a, m, deg).rank() for deg in range(1, cap + 2)
    ]
    return [
        m.dim * a.dim**deg - ranks[deg] - ranks[deg + 1] for deg in range(cap + 1)
    ]


def hh0(a: Algebra, m: Bimodule) -> HH0Space:
    """M modulo the span of a_i.m_s - m_s.a_i over every basis pair."""
    _require_endo(a, m, "hh0")
    rel = (m.left_action[0] - m.right_action[0]).transpose()
    for i in range(1, a.dim):
        rel = rel.vstack((m.left_action[i] - m.right_action[i]).transpose())
    return HH0Space(carrier=make_quotient(m.dim, rel))


def hh0_induced(f: BimoduleMap, src: HH0Space, dst: HH0Space) -> Matrix:
    """Descend a 2-cell to the commutator quotients; raises
    NotWellDefinedError if f fails to preserve the relation span."""
    psi = dst.carrier.projection * f.matrix
    return map_from_quotient(psi, src.carrier)


def shadow_iso(m: Bimodule, n: Bimodule) -> Matrix:
    """The cyclicity isomorphism HH_0(A; M o N) -> HH_0(B; N o M), induced by
    the coordinate swap x (x) y -> y (x) x; verified invertible."""
    if m.left_alg != n.right_alg or m.right_alg != n.left_alg:
        raise ValueError("shadow_iso needs 1-cells with opposite algebra pairs")
    cmn = compose(m, n)
    cnm = compose(n, m)
    h_src = hh0(m.left_alg, cmn.result)
    h_dst = hh0(n.left_alg, cnm.result)
    swap = Matrix.from_entries(
        m.field,
        m.dim * n.dim,
        m.dim * n.dim,
        {
            (t * m.dim + s, s * n.dim + t): m.field.one
            for s in range(m.dim)
            for t in range(n.dim)
        },
    )
    psi = h_dst.carrier.projection * cnm.carrier.projection * swap
    on_composite = map_from_quotient(psi, cmn.carrier)
    theta = map_from_quotient(on_composite, h_src.carrier)
    if (
        h_src.carrier.quotient_dim != h_dst.carrier.quotient_dim
        or theta.rank() != h_src.carrier.quotient_dim
    ):
        raise ValueError("cyclicity map failed to be invertible; corrupt carrier")
    return theta


def kunneth0(a: Algebra, b: Algebra) -> Matrix:
    """HH_0(A) (x) HH_0(B) -> HH_0(A (x) B) on the chosen bases, [x] (x) [y]
    to [x (x) y]; verified invertible."""
    ha = hh0(a, unit_bimodule(a))
    hb = hh0(b, unit_bimodule(b))
    hab = hh0(tensor_algebra(a, b), unit_bimodule(tensor_algebra(a, b)))
    mat = hab.carrier.projection * ha.carrier.section.kron(hb.carrier.section)
    if mat.rows != mat.cols or mat.rank() != mat.rows:
        raise ValueError("degree-0 Kunneth map failed to be invertible")
    return mat


def verify_shadow_axioms(samples) -> Report:
    """Check the cyclicity hexagon on each composable triple and the unitor
    triangle on each endo-cell factor, by exact matrix equality at HH_0.

    A sample is a triple (M, N, P) over algebra pairs (A,B), (B,C), (C,A).
    """
    samples = list(samples)
    failures = []
    for idx, (m, n, p) in enumerate(samples):
        tag = f"triple {idx} ({m.name}, {n.name}, {p.name})"
        mn = compose(m, n).result
        np_ = compose(n, p).result
        pm = compose(p, m).result
        x1 = compose(mn, p).result
        x4 = compose(n, pm).result
        h_x1 = hh0(m.left_alg, x1)
        h_x4 = hh0(n.left_alg, x4)
        # route one: associate, swap M past (N o P), associate
        assoc1 = rebracketing_iso(((m, n), p), (m, (n, p)))
        theta1 = shadow_iso(m, np_)
        assoc2 = rebracketing_iso(((n, p), m), (n, (p, m)))
        x2 = compose(m, np_).result
        x3 = compose(np_, m).result
        leg_one = (
            hh0_induced(assoc2, hh0(n.left_alg, x3), h_x4)
            * theta1
            * hh0_induced(assoc1, h_x1, hh0(m.left_alg, x2))
        )
        # route two: swap (M o N) past P, associate, swap (P o M) past N
        theta2 = shadow_iso(mn, p)
        y1 = compose(p, mn).result
        y2 = compose(pm, n).result
        assoc3 = rebracketing_iso((p, (m, n)), ((p, m), n))
        theta3 = shadow_iso(pm, n)
        leg_two = (
            theta3
            * hh0_induced(assoc3, hh0(p.left_alg, y1), hh0(p.left_alg, y2))
            * theta2
        )
        if leg_one != leg_two:
            failures.append(f"{tag}: hexagon legs differ")
        for mod in (m, n, p):
            if mod.left_alg != mod.right_alg:
                continue
            a = mod.left_alg
            cm_right = compose(mod, unit_bimodule(a))
            cm_left = compose(unit_bimodule(a), mod)
            theta = shadow_iso(mod, unit_bimodule(a))
            h_mod = hh0(a, mod)
            r_fwd = right_unitor(cm_right)[0]
            l_fwd = left_unitor(cm_left)[0]
            lhs = hh0_induced(r_fwd, hh0(a, cm_right.result), h_mod)
            rhs = hh0_induced(l_fwd, hh0(a, cm_left.result), h_mod) * theta
            if lhs != rhs:
                failures.append(f"{tag}: unit triangle fails for {mod.name}")
    return Report(
        claim=f"verify_shadow_axioms({len(samples)} samples)",
        passed=not failures,
        failures=failures,
    )
