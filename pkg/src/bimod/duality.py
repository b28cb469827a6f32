"""Dual pairs for 1-cells and dualizability witnesses for 0-cells.

Right duals are decided by splitting the tautological free cover of the
underlying right module; the dual is the space of right-linear maps into
the acting algebra, the splitting supplies the coevaluation, and both
triangle identities are checked exactly.  For 0-cells the module builds
the canonical cells, the isomorphisms from the unit 1-cells onto their
looped composites, and compares the two coherence composites leg against
leg.  Separability idempotents realize the 2-dualizability criterion at
the abelian level.
"""

from dataclasses import dataclass

from .algebra import Algebra, generating_elements, opposite
from .bimodule import (
    Bimodule,
    BimoduleMap,
    canonical_cells,
    compose,
    compose_maps,
    left_unitor,
    rebracketing_iso,
    right_unitor,
    tensor_k,
    tensor_k_maps,
    unit_bimodule,
)
from .linalg import (
    Matrix,
    kernel_basis,
    make_quotient,
    map_from_quotient,
    rref,
    solve,
    unvec_r,
    vec_r,
)
from .report import Report


class WitnessFailure(ValueError):
    """A requested witness does not exist; carries the rank certificate
    of the inconsistent linear system."""

    def __init__(self, claim: str, certificate: dict):
        super().__init__(claim)
        self.claim = claim
        self.certificate = certificate


# ---------------------------------------------------------------------------
# domain types


@dataclass(frozen=True, eq=False)
class DualPair:
    """A right dual with its structure maps.

    coev: U_A -> (m o dual).result and ev: (dual o m).result -> U_B;
    carriers keeps the two composites so later checks reuse their quotient
    coordinates.
    """

    m: Bimodule
    dual: Bimodule
    coev: BimoduleMap
    ev: BimoduleMap
    carriers: tuple


@dataclass(frozen=True, eq=False)
class ZeroCellWitness:
    """Dualizability data of an algebra: the two cells and the verified
    isomorphisms from the unit 1-cells onto the looped composites.

    lightning: U_a -> ((C (x) U_a) o (U_a (x) E)).result and
    lightning_rev: U_{a_dual} -> ((U_{a_dual} (x) C) o (E (x) U_{a_dual})).result;
    carriers keeps those two composites.
    """

    a: Algebra
    a_dual: Algebra
    C: Bimodule
    E: Bimodule
    lightning: BimoduleMap
    lightning_rev: BimoduleMap
    carriers: tuple


@dataclass(frozen=True, eq=False)
class SeparabilityWitness:
    """A separability idempotent as a coordinate column in A (x) A^op
    (basis index i * dim + p for e_i (x) e_p)."""

    a: Algebra
    idempotent: Matrix


def _right_mult_of(a: Algebra, g: Matrix) -> Matrix:
    acc = Matrix.zeros(a.field, a.dim, a.dim)
    for j, _, v in g.entries():
        acc = acc + a.right_mult[j] * v
    return acc


# ---------------------------------------------------------------------------
# right duals of 1-cells


def right_dual_witness(m: Bimodule) -> DualPair:
    """Decide f.g. projectivity over the right algebra and package the dual.

    The free cover sends the slot (t, b) to m_t . b.  A right-linear section
    is a tuple of maps m -> B, one per slot, so it lives in the span of the
    map space Hom_B(m, B); solving for its coefficients keeps the system at
    dim(m) * dim(Hom) unknowns.  On success the dual is Hom_B(m, B) with
    (b . f . a)(x) = b . f(a . x), the section rows give the coevaluation
    and evaluation is applying the map; the triangle identities are checked
    before returning.  Raises WitnessFailure with the rank certificate of
    the section system when no splitting exists.
    """
    b_alg = m.right_alg
    fld = m.field
    dm, db = m.dim, b_alg.dim
    eye_m = Matrix.identity(fld, dm)
    eye_b = Matrix.identity(fld, db)

    # right-linear maps m -> B, flattened row-major as db x dm matrices
    blocks = []
    for g in generating_elements(b_alg):
        blocks.append(
            eye_b.kron(m.right_action_of(g).transpose())
            - _right_mult_of(b_alg, g).kron(eye_m)
        )
    if not blocks:
        blocks.append(Matrix.zeros(fld, 1, db * dm))
    ksys = blocks[0]
    for blk in blocks[1:]:
        ksys = ksys.vstack(blk)
    hom = kernel_basis(ksys)
    nd = hom.rows
    if nd == 0:
        raise WitnessFailure(
            f"{m.name} is not right dualizable: no nonzero right-linear "
            f"maps to {b_alg.name}",
            {"system_rank": 0, "augmented_rank": 1},
        )
    homs = [unvec_r(hom.row(al).transpose(), db, dm) for al in range(nd)]

    # section coefficients: sum_t m_t . f_t(x_j) = x_j with f_t in the span
    # of the map space; unknown (t, al) at column t * nd + al
    ent = {}
    for al, h in enumerate(homs):
        for j in range(dm):
            ract = m.right_action_of(h.col(j))
            for out, t, v in ract.entries():
                key = (j * dm + out, t * nd + al)
                w = ent.get(key, fld.zero) + v
                if w == fld.zero:
                    ent.pop(key, None)
                else:
                    ent[key] = w
    system = Matrix.from_entries(fld, dm * dm, dm * nd, ent)
    rhs = vec_r(eye_m)
    coeff = solve(system, rhs)
    if coeff is None:
        raise WitnessFailure(
            f"{m.name} is not right dualizable over {b_alg.name}",
            {
                "system_rank": system.rank(),
                "augmented_rank": system.hstack(rhs).rank(),
            },
        )

    # the dual on the map-space coordinates: kernel rows are the standard
    # free-column basis, so coordinates are read off at the free columns
    piv = set(rref(ksys).pivot_cols)
    free = [j for j in range(ksys.cols) if j not in piv]
    sel = Matrix.from_entries(
        fld, nd, db * dm, {(r, f): fld.one for r, f in enumerate(free)}
    )
    kt = hom.transpose()
    n_left = []
    for j in range(db):
        w = (b_alg.left_mult[j].kron(eye_m)) * kt
        if kt * (sel * w) != w:
            raise ValueError("left action leaves the map space; corrupt input")
        n_left.append(sel * w)
    n_right = []
    for i in range(m.left_alg.dim):
        w = (eye_b.kron(m.left_action[i].transpose())) * kt
        if kt * (sel * w) != w:
            raise ValueError("right action leaves the map space; corrupt input")
        n_right.append(sel * w)
    n = Bimodule(f"rdual({m.name})", b_alg, m.left_alg, nd, n_left, n_right)

    mn = compose(m, n)
    nm = compose(n, m)

    # coev(1) = sum_t m_t (x) f_t; the coefficient vector already uses the
    # ambient indexing of m o n
    base_q = mn.carrier.projection * coeff
    cols = None
    for i in range(m.left_alg.dim):
        colv = mn.result.left_action[i] * base_q
        cols = colv if cols is None else cols.hstack(colv)
    coev = BimoduleMap(unit_bimodule(m.left_alg), mn.result, cols)

    # ev(class(f_al (x) x_i)) = f_al(x_i)
    eent = {}
    for al in range(nd):
        for _, rc, v in hom.row(al).entries():
            brow, i = divmod(rc, dm)
            eent[(brow, al * dm + i)] = v
    ev_amb = Matrix.from_entries(fld, db, nd * dm, eent)
    ev = BimoduleMap(
        nm.result, unit_bimodule(b_alg), map_from_quotient(ev_amb, nm.carrier)
    )

    pair = DualPair(m=m, dual=n, coev=coev, ev=ev, carriers=(mn, nm))
    rep = verify_triangles(pair)
    if not rep.passed:
        raise ValueError(
            "triangle identities failed for a successful splitting; corrupt input"
        )
    return pair


def verify_triangles(dp: DualPair) -> Report:
    """Both triangle composites, compared with identity matrices exactly."""
    m, n = dp.m, dp.dual
    mn, nm = dp.carriers
    u_a = unit_bimodule(m.left_alg)
    u_b = unit_bimodule(m.right_alg)
    fld = m.field

    cm_um = compose(u_a, m)
    _, lu_i = left_unitor(cm_um)
    cm_mnm = compose(mn.result, m)
    step1 = compose_maps(dp.coev, BimoduleMap.identity(m), cm_um, cm_mnm)
    rho = rebracketing_iso(((m, n), m), (m, (n, m)))
    cm_m_nm = compose(m, nm.result)
    cm_mu = compose(m, u_b)
    step2 = compose_maps(BimoduleMap.identity(m), dp.ev, cm_m_nm, cm_mu)
    ru_f, _ = right_unitor(cm_mu)
    tri1 = ru_f @ step2 @ rho @ step1 @ lu_i

    cm_nu = compose(n, u_a)
    _, ru2_i = right_unitor(cm_nu)
    cm_n_mn = compose(n, mn.result)
    step1b = compose_maps(BimoduleMap.identity(n), dp.coev, cm_nu, cm_n_mn)
    rho2 = rebracketing_iso((n, (m, n)), ((n, m), n))
    cm_nm_n = compose(nm.result, n)
    cm_un = compose(u_b, n)
    step2b = compose_maps(dp.ev, BimoduleMap.identity(n), cm_nm_n, cm_un)
    lu2_f, _ = left_unitor(cm_un)
    tri2 = lu2_f @ step2b @ rho2 @ step1b @ ru2_i

    failures = []
    cert = {}
    if tri1.matrix != Matrix.identity(fld, m.dim):
        failures.append("the composite through the module is not the identity")
        cert["module_composite"] = [
            [str(x) for x in row] for row in tri1.matrix.to_lists()
        ]
    if tri2.matrix != Matrix.identity(fld, n.dim):
        failures.append("the composite through the dual is not the identity")
        cert["dual_composite"] = [
            [str(x) for x in row] for row in tri2.matrix.to_lists()
        ]
    return Report(
        claim=f"triangle identities for ({m.name}, {n.name})",
        passed=not failures,
        failures=failures,
        certificate=cert or None,
    )


def compose_dual_pairs(p1: DualPair, p2: DualPair) -> DualPair:
    """The pair for m1 o m2: dual n2 o n1 with nested structure maps.

    Coevaluation inserts p2's coevaluation in the middle of p1's;
    evaluation applies p1's evaluation inside and p2's outside.
    """
    m1, n1 = p1.m, p1.dual
    m2, n2 = p2.m, p2.dual
    if m1.right_alg != m2.left_alg:
        raise ValueError("pairs do not compose: algebra mismatch")
    fld = m1.field
    a_alg = m1.left_alg
    b_alg = m1.right_alg
    c_alg = m2.right_alg
    mm = compose(m1, m2)
    nn = compose(n2, n1)
    big_mn = compose(mm.result, nn.result)
    big_nm = compose(nn.result, mm.result)

    amb1 = p1.carriers[0].carrier.section * (p1.coev.matrix * a_alg.unit)
    amb2 = p2.carriers[0].carrier.section * (p2.coev.matrix * b_alg.unit)
    base = Matrix.zeros(fld, mm.result.dim * nn.result.dim, 1)
    for r1, _, v1 in amb1.entries():
        t, al = divmod(r1, n1.dim)
        for r2, _, v2 in amb2.entries():
            s, be = divmod(r2, n2.dim)
            pm = mm.carrier.projection.col(t * m2.dim + s)
            pn = nn.carrier.projection.col(be * n1.dim + al)
            base = base + pm.kron(pn) * (v1 * v2)
    base_q = big_mn.carrier.projection * base
    cols = None
    for i in range(a_alg.dim):
        colv = big_mn.result.left_action[i] * base_q
        cols = colv if cols is None else cols.hstack(colv)
    coev = BimoduleMap(unit_bimodule(a_alg), big_mn.result, cols)

    ev1_q = p1.ev.matrix * p1.carriers[1].carrier.projection
    ev2_q = p2.ev.matrix * p2.carriers[1].carrier.projection
    ent = {}
    for u in range(nn.result.dim):
        lift_n = nn.carrier.section.col(u)
        for w in range(mm.result.dim):
            lift_m = mm.carrier.section.col(w)
            col = u * mm.result.dim + w
            acc = Matrix.zeros(fld, c_alg.dim, 1)
            for rn, _, vn in lift_n.entries():
                be, al = divmod(rn, n1.dim)
                for rm, _, vm in lift_m.entries():
                    t, s = divmod(rm, m2.dim)
                    inner = ev1_q.col(al * m1.dim + t)
                    moved = Matrix.zeros(fld, n2.dim, 1)
                    for j, _, vj in inner.entries():
                        moved = moved + n2.right_action[j].col(be) * vj
                    for r2, _, v2 in moved.entries():
                        acc = acc + ev2_q.col(r2 * m2.dim + s) * (vn * vm * v2)
            for r, _, v in acc.entries():
                ent[(r, col)] = v
    ev_amb = Matrix.from_entries(
        fld, c_alg.dim, nn.result.dim * mm.result.dim, ent
    )
    ev = BimoduleMap(
        big_nm.result,
        unit_bimodule(c_alg),
        map_from_quotient(ev_amb, big_nm.carrier),
    )
    return DualPair(
        m=mm.result, dual=nn.result, coev=coev, ev=ev, carriers=(big_mn, big_nm)
    )


# ---------------------------------------------------------------------------
# 1-dualizability of 0-cells


def _looped_composites(a: Algebra, a_dual: Algebra, c: Bimodule, e: Bimodule):
    """The two composites a witness loops onto:
    (C (x) U_a) o (U_a (x) E) and (U_ad (x) C) o (E (x) U_ad)."""
    u_a = unit_bimodule(a)
    u_b = unit_bimodule(a_dual)
    tcomp = compose(tensor_k(c, u_a), tensor_k(u_a, e))
    t2comp = compose(tensor_k(u_b, c), tensor_k(e, u_b))
    return u_a, u_b, tcomp, t2comp


def one_dualizability_witness(a: Algebra) -> ZeroCellWitness:
    """The canonical cells with the explicit unit-to-composite isomorphisms.

    lightning sends a_t to the class of (1_C (x) a_t) (x) (1_a (x) 1_E) and
    lightning_rev mirrors it; both are verified invertible, and the two
    coherence composites are compared before returning.
    """
    a_op, c, e = canonical_cells(a)
    d = a.dim
    fld = a.field
    unit = a.unit
    u_a, u_b, tcomp, t2comp = _looped_composites(a, a_op, c, e)
    de, dc = e.dim, c.dim

    ent = {}
    for t in range(d):
        for i, _, vi in unit.entries():
            for p, _, vp in unit.entries():
                for q, _, vq in unit.entries():
                    row = (i * d + t) * (d * de) + p * de + q
                    ent[(row, t)] = vi * vp * vq
    amb = Matrix.from_entries(fld, (dc * d) * (d * de), d, ent)
    zeta = BimoduleMap(u_a, tcomp.result, tcomp.carrier.projection * amb)

    ent = {}
    for t in range(d):
        for i, _, vi in unit.entries():
            for q, _, vq in unit.entries():
                for p, _, vp in unit.entries():
                    row = (t * dc + i) * (de * d) + q * d + p
                    ent[(row, t)] = vi * vq * vp
    amb = Matrix.from_entries(fld, (d * dc) * (de * d), d, ent)
    zeta_rev = BimoduleMap(u_b, t2comp.result, t2comp.carrier.projection * amb)

    if not zeta.is_invertible() or not zeta_rev.is_invertible():
        raise ValueError(
            f"unit-to-composite maps are not invertible for {a.name}; corrupt input"
        )
    w = ZeroCellWitness(
        a=a,
        a_dual=a_op,
        C=c,
        E=e,
        lightning=zeta,
        lightning_rev=zeta_rev,
        carriers=(tcomp, t2comp),
    )
    rep = verify_witness_coherence(w)
    if not rep.passed:
        raise ValueError(
            f"coherence composites differ for {a.name}: {'; '.join(rep.failures)}"
        )
    return w


def verify_witness_coherence(w: ZeroCellWitness) -> Report:
    """Both coherence composites of a witness, checked exactly.

    Each figure has two legs out of a cell into a common composite; the
    legs must agree, equivalently one leg inverted against the other is
    the identity of the cell.  For the canonical cells the composite
    target collapses to a small quotient (see _cc_quotient); any other
    cells go through the full ambient tensor.
    """
    _, c_std, e_std = canonical_cells(w.a)
    realized = w.C == c_std and w.E == e_std
    failures = []
    for tag, legs in (
        ("first cell", _coherence_legs_through_c(w, realized)),
        ("second cell", _coherence_legs_through_e(w, realized)),
    ):
        leg1, leg2 = legs
        if not leg2.is_invertible():
            failures.append(f"{tag}: the unit-looping leg is not invertible")
            continue
        cmp_map = leg2.inverse() @ leg1
        if cmp_map.matrix != Matrix.identity(w.a.field, cmp_map.src.dim):
            failures.append(f"{tag}: the coherence composite is not the identity")
    return Report(
        claim=f"coherence composites for {w.a.name}",
        passed=not failures,
        failures=failures,
    )


def _cc_quotient(a: Algebra, a_dual: Algebra, c: Bimodule):
    """Quotient of C (x) C carrying (C (x) C) o ((U_a (x) E) (x) U_ad).

    The right factor is generated over the middle algebra by 1 (x) 1 (x) 1:
    acting by e_i (x) (e_j (x) e_p) (x) e_l gives e_i (x) e_p e_j (x) e_l,
    which span it.  So the composite is C (x) C modulo the right action of
    the generator's annihilator, and a dimension count identifies that
    annihilator with A (x) K (x) A^op for K the kernel of (j, p) -> e_p e_j;
    absorbing the outer slots into basis elements leaves the relations
    x . (1 (x) kappa (x) 1) for x a basis element and kappa in K.
    """
    d, dc = a.dim, c.dim
    fld = a.field
    ment = {}
    for j in range(d):
        for p in range(d):
            for r, _, v in a.product(p, j).entries():
                ment[(r, j * d + p)] = v
    mult = Matrix.from_entries(fld, d, d * d, ment)
    kap = kernel_basis(mult)
    r1 = []  # right action of 1 (x) e_j on C
    r2 = []  # right action of e_p (x) 1 on C
    for j in range(d):
        acc = Matrix.zeros(fld, dc, dc)
        for i, _, vi in a.unit.entries():
            acc = acc + c.right_action[i * d + j] * vi
        r1.append(acc)
    for p in range(d):
        acc = Matrix.zeros(fld, dc, dc)
        for q, _, vq in a_dual.unit.entries():
            acc = acc + c.right_action[p * d + q] * vq
        r2.append(acc)
    rel = None
    for kk in range(kap.rows):
        acc = Matrix.zeros(fld, dc * dc, dc * dc)
        for _, jp, v in kap.row(kk).entries():
            j, p = divmod(jp, d)
            acc = acc + r1[j].kron(r2[p]) * v
        block = acc.transpose()
        rel = block if rel is None else rel.vstack(block)
    if rel is None:
        rel = Matrix.zeros(fld, 1, dc * dc)
    carrier = make_quotient(dc * dc, rel)
    qd = carrier.quotient_dim
    left = [Matrix.identity(fld, qd)]
    right = []
    for i in range(d):
        for q in range(d):
            right.append(carrier.projection * r2[i].kron(r1[q]) * carrier.section)
    res = Bimodule("[C x C looped]", c.left_alg, c.right_alg, qd, left, right)
    return carrier, res, r1, r2


def _ee_quotient(a: Algebra, a_dual: Algebra, e: Bimodule):
    """Quotient of E (x) E carrying ((U_ad (x) C) (x) U_a) o (E (x) E);
    mirror of _cc_quotient with the left factor cyclic as a right module,
    annihilator kernel (a2, b3) -> e_b3 e_a2."""
    d, de = a.dim, e.dim
    fld = a.field
    ment = {}
    for a2 in range(d):
        for b3 in range(d):
            for r, _, v in a.product(b3, a2).entries():
                ment[(r, a2 * d + b3)] = v
    mult = Matrix.from_entries(fld, d, d * d, ment)
    kap = kernel_basis(mult)
    l1 = []  # left action of 1 (x) e_a on E
    l2 = []  # left action of e_b (x) 1 on E
    for a2 in range(d):
        acc = Matrix.zeros(fld, de, de)
        for q, _, vq in a_dual.unit.entries():
            acc = acc + e.left_action[q * d + a2] * vq
        l1.append(acc)
    for b3 in range(d):
        acc = Matrix.zeros(fld, de, de)
        for p, _, vp in a.unit.entries():
            acc = acc + e.left_action[b3 * d + p] * vp
        l2.append(acc)
    rel = None
    for kk in range(kap.rows):
        acc = Matrix.zeros(fld, de * de, de * de)
        for _, ab_, v in kap.row(kk).entries():
            a2, b3 = divmod(ab_, d)
            acc = acc + l1[a2].kron(l2[b3]) * v
        block = acc.transpose()
        rel = block if rel is None else rel.vstack(block)
    if rel is None:
        rel = Matrix.zeros(fld, 1, de * de)
    carrier = make_quotient(de * de, rel)
    qd = carrier.quotient_dim
    right = [Matrix.identity(fld, qd)]
    left = []
    for b in range(d):
        for a4 in range(d):
            left.append(carrier.projection * l2[b].kron(l1[a4]) * carrier.section)
    res = Bimodule("[E x E looped]", e.left_alg, e.right_alg, qd, left, right)
    return carrier, res, l1, l2


def _coherence_legs_through_c(w: ZeroCellWitness, realized: bool):
    """The two legs C -> (C (x) C) o ((U_a (x) E) (x) U_ad): unit insertion
    on the right, a whiskered unit-looping iso, then redistribution."""
    a, a_op, c, e = w.a, w.a_dual, w.C, w.E
    tcomp, t2comp = w.carriers
    zeta, zeta_rev = w.lightning, w.lightning_rev
    d, dc, de = a.dim, c.dim, e.dim
    fld = a.field
    u_a = unit_bimodule(a)
    u_b = unit_bimodule(a_op)
    u_ab = unit_bimodule(c.right_alg)

    if realized:
        carrier, target, r1, r2 = _cc_quotient(a, a_op, c)
    else:
        cc = tensor_k(c, c)
        y = tensor_k(tensor_k(u_a, e), u_b)
        cm = compose(cc, y)
        carrier, target = cm.carrier, cm.result
        ydim = y.dim

    cm_cu = compose(c, u_ab)
    _, ru_inv = right_unitor(cm_cu)

    tb = tensor_k(tcomp.result, u_b)
    cm_c_tb = compose(c, tb)
    whisk1 = compose_maps(
        BimoduleMap.identity(c),
        tensor_k_maps(zeta, BimoduleMap.identity(u_b)),
        cm_cu,
        cm_c_tb,
    )
    tdim = tcomp.result.dim
    if realized:
        cols = {}
        for cidx in range(dc):
            wcols = [mat.col(cidx) for mat in r2]
            for t in range(tdim):
                lift = tcomp.carrier.section.col(t)
                for b in range(d):
                    col = cidx * (tdim * d) + t * d + b
                    acc = cols.setdefault(col, {})
                    for r, _, v in lift.entries():
                        s1, s2 = divmod(r, d * de)
                        c2, u = divmod(s1, d)
                        v_, eidx = divmod(s2, de)
                        ca = r2[v_].col(c2)
                        cb = c.right_action[eidx * d + b]
                        for wrow, _, wv in wcols[u].entries():
                            cbcol = cb.col(wrow)
                            for ra, _, va in ca.entries():
                                for rb, _, vb in cbcol.entries():
                                    key = ra * dc + rb
                                    acc[key] = acc.get(key, fld.zero) + v * wv * va * vb
        amb = _columns_to_matrix(fld, dc * dc, dc * tdim * d, cols)
    else:
        wmats = []
        for u in range(d):
            acc = Matrix.zeros(fld, dc, dc)
            for q, _, vq in a_op.unit.entries():
                acc = acc + c.right_action[u * d + q] * vq
            wmats.append(acc)
        ent = {}
        for cidx in range(dc):
            wcols = [mat.col(cidx) for mat in wmats]
            for t in range(tdim):
                lift = tcomp.carrier.section.col(t)
                for b in range(d):
                    col = cidx * (tdim * d) + t * d + b
                    for r, _, v in lift.entries():
                        s1, s2 = divmod(r, d * de)
                        c2, u = divmod(s1, d)
                        v_, eidx = divmod(s2, de)
                        for wrow, _, wv in wcols[u].entries():
                            row = (c2 * dc + wrow) * ydim + (v_ * de + eidx) * d + b
                            key = (row, col)
                            ent[key] = ent.get(key, fld.zero) + v * wv
        amb = Matrix.from_entries(fld, dc * dc * ydim, dc * tdim * d, ent)
    dist1 = BimoduleMap(
        cm_c_tb.result,
        target,
        map_from_quotient(carrier.projection * amb, cm_c_tb.carrier),
    )
    leg1 = dist1 @ whisk1 @ ru_inv

    at = tensor_k(u_a, t2comp.result)
    cm_c_at = compose(c, at)
    whisk2 = compose_maps(
        BimoduleMap.identity(c),
        tensor_k_maps(BimoduleMap.identity(u_a), zeta_rev),
        cm_cu,
        cm_c_at,
    )
    t2dim = t2comp.result.dim
    unita = a.unit
    if realized:
        cols = {}
        for cidx in range(dc):
            for aidx in range(d):
                wcols = [c.right_action[aidx * d + u].col(cidx) for u in range(d)]
                for t in range(t2dim):
                    lift = t2comp.carrier.section.col(t)
                    col = cidx * (d * t2dim) + aidx * t2dim + t
                    acc = cols.setdefault(col, {})
                    for r, _, v in lift.entries():
                        s1, s2 = divmod(r, de * d)
                        u, c2 = divmod(s1, dc)
                        e2, b = divmod(s2, d)
                        for wrow, _, wv in wcols[u].entries():
                            for p, _, vp in unita.entries():
                                ca = r2[p].col(wrow)
                                cbcol = c.right_action[e2 * d + b].col(c2)
                                for ra, _, va in ca.entries():
                                    for rb, _, vb in cbcol.entries():
                                        key = ra * dc + rb
                                        acc[key] = (
                                            acc.get(key, fld.zero) + v * wv * vp * va * vb
                                        )
        amb = _columns_to_matrix(fld, dc * dc, dc * d * t2dim, cols)
    else:
        ent = {}
        for cidx in range(dc):
            for aidx in range(d):
                wcols = [c.right_action[aidx * d + u].col(cidx) for u in range(d)]
                for t in range(t2dim):
                    lift = t2comp.carrier.section.col(t)
                    col = cidx * (d * t2dim) + aidx * t2dim + t
                    for r, _, v in lift.entries():
                        s1, s2 = divmod(r, de * d)
                        u, c2 = divmod(s1, dc)
                        e2, b = divmod(s2, d)
                        for wrow, _, wv in wcols[u].entries():
                            for p, _, vp in unita.entries():
                                row = (wrow * dc + c2) * ydim + (p * de + e2) * d + b
                                key = (row, col)
                                ent[key] = ent.get(key, fld.zero) + v * wv * vp
        amb = Matrix.from_entries(fld, dc * dc * ydim, dc * d * t2dim, ent)
    dist2 = BimoduleMap(
        cm_c_at.result,
        target,
        map_from_quotient(carrier.projection * amb, cm_c_at.carrier),
    )
    leg2 = dist2 @ whisk2 @ ru_inv
    return leg1, leg2


def _coherence_legs_through_e(w: ZeroCellWitness, realized: bool):
    """The two legs E -> ((U_ad (x) C) (x) U_a) o (E (x) E); mirror of
    _coherence_legs_through_c with unit insertion on the left."""
    a, a_op, c, e = w.a, w.a_dual, w.C, w.E
    tcomp, t2comp = w.carriers
    zeta, zeta_rev = w.lightning, w.lightning_rev
    d, dc, de = a.dim, c.dim, e.dim
    fld = a.field
    u_a = unit_bimodule(a)
    u_b = unit_bimodule(a_op)
    u_ba = unit_bimodule(e.left_alg)

    if realized:
        carrier, target, l1, l2 = _ee_quotient(a, a_op, e)
    else:
        x1 = tensor_k(tensor_k(u_b, c), u_a)
        ee = tensor_k(e, e)
        cm = compose(x1, ee)
        carrier, target = cm.carrier, cm.result
        eedim = ee.dim

    cm_ue = compose(u_ba, e)
    _, lu_inv = left_unitor(cm_ue)

    bt = tensor_k(u_b, tcomp.result)
    cm_bt_e = compose(bt, e)
    whisk1 = compose_maps(
        tensor_k_maps(BimoduleMap.identity(u_b), zeta),
        BimoduleMap.identity(e),
        cm_ue,
        cm_bt_e,
    )
    tdim = tcomp.result.dim
    if realized:
        cols = {}
        for b in range(d):
            for t in range(tdim):
                lift = tcomp.carrier.section.col(t)
                for eidx in range(de):
                    col = (b * tdim + t) * de + eidx
                    acc = cols.setdefault(col, {})
                    for r, _, v in lift.entries():
                        s1, s2 = divmod(r, d * de)
                        c2, u = divmod(s1, d)
                        v_, e2 = divmod(s2, de)
                        for wrow, _, wv in l1[v_].col(eidx).entries():
                            ca = e.left_action[b * d + c2].col(wrow)
                            cb = l1[u].col(e2)
                            for ra, _, va in ca.entries():
                                for rb, _, vb in cb.entries():
                                    key = ra * de + rb
                                    acc[key] = acc.get(key, fld.zero) + v * wv * va * vb
        amb = _columns_to_matrix(fld, de * de, d * tdim * de, cols)
    else:
        wmats = []
        for v_ in range(d):
            acc = Matrix.zeros(fld, de, de)
            for q, _, vq in a_op.unit.entries():
                acc = acc + e.left_action[q * d + v_] * vq
            wmats.append(acc)
        ent = {}
        for b in range(d):
            for t in range(tdim):
                lift = tcomp.carrier.section.col(t)
                for eidx in range(de):
                    col = (b * tdim + t) * de + eidx
                    for r, _, v in lift.entries():
                        s1, s2 = divmod(r, d * de)
                        c2, u = divmod(s1, d)
                        v_, e2 = divmod(s2, de)
                        for wrow, _, wv in wmats[v_].col(eidx).entries():
                            row = ((b * dc + c2) * d + u) * eedim + wrow * de + e2
                            key = (row, col)
                            ent[key] = ent.get(key, fld.zero) + v * wv
        amb = Matrix.from_entries(fld, d * dc * d * eedim, d * tdim * de, ent)
    dist1 = BimoduleMap(
        cm_bt_e.result,
        target,
        map_from_quotient(carrier.projection * amb, cm_bt_e.carrier),
    )
    leg1 = dist1 @ whisk1 @ lu_inv

    t2b = tensor_k(t2comp.result, u_a)
    cm_t2a_e = compose(t2b, e)
    whisk2 = compose_maps(
        tensor_k_maps(zeta_rev, BimoduleMap.identity(u_a)),
        BimoduleMap.identity(e),
        cm_ue,
        cm_t2a_e,
    )
    t2dim = t2comp.result.dim
    unita = a.unit
    if realized:
        cols = {}
        for aidx in range(d):
            for t in range(t2dim):
                lift = t2comp.carrier.section.col(t)
                for eidx in range(de):
                    col = (t * d + aidx) * de + eidx
                    acc = cols.setdefault(col, {})
                    for r, _, v in lift.entries():
                        s1, s2 = divmod(r, de * d)
                        u, c2 = divmod(s1, dc)
                        e2, b = divmod(s2, d)
                        for wrow, _, wv in e.left_action[b * d + aidx].col(eidx).entries():
                            ca = e.left_action[u * d + c2].col(e2)
                            for p, _, vp in unita.entries():
                                cb = l1[p].col(wrow)
                                for ra, _, va in ca.entries():
                                    for rb, _, vb in cb.entries():
                                        key = ra * de + rb
                                        acc[key] = (
                                            acc.get(key, fld.zero) + v * wv * vp * va * vb
                                        )
        amb = _columns_to_matrix(fld, de * de, t2dim * d * de, cols)
    else:
        ent = {}
        for aidx in range(d):
            for t in range(t2dim):
                lift = t2comp.carrier.section.col(t)
                for eidx in range(de):
                    col = (t * d + aidx) * de + eidx
                    for r, _, v in lift.entries():
                        s1, s2 = divmod(r, de * d)
                        u, c2 = divmod(s1, dc)
                        e2, b = divmod(s2, d)
                        for wrow, _, wv in e.left_action[b * d + aidx].col(eidx).entries():
                            for p, _, vp in unita.entries():
                                row = ((u * dc + c2) * d + p) * eedim + e2 * de + wrow
                                key = (row, col)
                                ent[key] = ent.get(key, fld.zero) + v * wv * vp
        amb = Matrix.from_entries(fld, d * dc * d * eedim, t2dim * d * de, ent)
    dist2 = BimoduleMap(
        cm_t2a_e.result,
        target,
        map_from_quotient(carrier.projection * amb, cm_t2a_e.carrier),
    )
    leg2 = dist2 @ whisk2 @ lu_inv
    return leg1, leg2


def _columns_to_matrix(fld, rows, cols, col_dicts) -> Matrix:
    ent = {}
    for col, acc in col_dicts.items():
        for row, v in acc.items():
            if v != fld.zero:
                ent[(row, col)] = v
    return Matrix.from_entries(fld, rows, cols, ent)


# ---------------------------------------------------------------------------
# 2-dualizability: separability and the cell duals


def separability_idempotent(a: Algebra) -> SeparabilityWitness:
    """Solve mu(e) = 1 with (x (x) 1) e = e (1 (x) x) for generators x.

    The deterministic particular solution of solve() is returned; both
    conditions are re-verified over the whole basis.  Raises WitnessFailure
    with the rank certificate when the system is inconsistent, which is the
    verdict that the algebra is not 2-dualizable at the abelian level.
    """
    d = a.dim
    fld = a.field
    ment = {}
    for i in range(d):
        for p in range(d):
            for r, _, v in a.product(i, p).entries():
                ment[(r, i * d + p)] = v
    mu = Matrix.from_entries(fld, d, d * d, ment)
    eye = Matrix.identity(fld, d)
    blocks = [mu]
    for g in generating_elements(a):
        blocks.append(a.left_action_of(g).kron(eye) - eye.kron(_right_mult_of(a, g)))
    system = blocks[0]
    for blk in blocks[1:]:
        system = system.vstack(blk)
    rhs = a.unit
    if system.rows > d:
        rhs = rhs.vstack(Matrix.zeros(fld, system.rows - d, 1))
    sol = solve(system, rhs)
    if sol is None:
        raise WitnessFailure(
            f"{a.name} is not separable",
            {
                "system_rank": system.rank(),
                "augmented_rank": system.hstack(rhs).rank(),
            },
        )
    if mu * sol != a.unit:
        raise ValueError("solution fails the unit condition; corrupt input")
    for j in range(d):
        if a.left_mult[j].kron(eye) * sol != eye.kron(a.right_mult[j]) * sol:
            raise ValueError("solution fails the Casimir condition; corrupt input")
    return SeparabilityWitness(a=a, idempotent=sol)


def two_dualizability_report(a: Algebra):
    """Right duals of both canonical cells, cross-checked against separability.

    Returns (report, rdual(C) or None, rdual(E) or None); the first cell is
    right dualizable exactly when the algebra is separable, and the two
    routes to that verdict must agree.
    """
    _, c, e = canonical_cells(a)
    failures = []
    cert = None
    sep_ok = True
    try:
        separability_idempotent(a)
    except WitnessFailure as exc:
        sep_ok = False
        cert = exc.certificate
    pair_c = None
    try:
        pair_c = right_dual_witness(c)
    except WitnessFailure as exc:
        if cert is None:
            cert = exc.certificate
    if (pair_c is not None) != sep_ok:
        failures.append(
            "separability and the dual of the first cell disagree; corrupt input"
        )
    pair_e = None
    try:
        pair_e = right_dual_witness(e)
    except WitnessFailure as exc:
        failures.append(f"the second cell has no right dual: {exc.claim}")
        if cert is None:
            cert = exc.certificate
    if not sep_ok:
        failures.append(f"{a.name} is not separable")
    rep = Report(
        claim=f"two-dualizability of {a.name}",
        passed=not failures,
        failures=failures,
        certificate=cert,
    )
    return rep, pair_c, pair_e


def dual_of_zero_cell_witness(
    w: ZeroCellWitness, pair_c: DualPair, pair_e: DualPair
) -> ZeroCellWitness:
    """Package the cell duals as a witness for the opposite algebra.

    The new cells are rdual(E) (first) and rdual(C) (second).  The new
    unit-to-composite maps are computed by chasing the unit element through
    coevaluation insertions, collapsing the looped composite of the given
    witness with an inverted lightning map along the way; invertibility and
    both coherence composites are then verified from scratch.
    """
    if pair_c.m != w.C or pair_e.m != w.E:
        raise ValueError("the pairs must dualize the witness cells")
    a, a_op = w.a, w.a_dual
    d = a.dim
    fld = a.field
    c_new = pair_e.dual
    e_new = pair_c.dual
    nc = pair_c.dual.dim
    ne = pair_e.dual.dim
    dc, de = w.C.dim, w.E.dim
    u_a, u_b, tcomp, t2comp = _looped_composites(a_op, opposite(a_op), c_new, e_new)

    amb_c = pair_c.carriers[0].carrier.section * pair_c.coev.matrix.col(0)
    ba_alg = w.E.left_alg
    amb_e = pair_e.carriers[0].carrier.section * (pair_e.coev.matrix * ba_alg.unit)

    # lightning: U_{a_op} -> (rdual(E) (x) U_{a_op}) o (U_{a_op} (x) rdual(C));
    # collapse classes of (1 (x) C_t) (x) (E_s (x) 1) through the given
    # witness's reversed lightning map
    t2_orig = w.carriers[1]
    zr_inv = w.lightning_rev.inverse().matrix
    f1 = tcomp.factors[0]
    unit = a.unit
    collapsed = {}

    def u_rev(t, s):
        if (t, s) not in collapsed:
            ent = {}
            for j, _, vj in unit.entries():
                for p, _, vp in unit.entries():
                    row = (j * dc + t) * (de * d) + s * d + p
                    ent[(row, 0)] = vj * vp
            vec = Matrix.from_entries(fld, d * dc * de * d, 1, ent)
            collapsed[(t, s)] = zr_inv * (t2_orig.carrier.projection * vec)
        return collapsed[(t, s)]

    total = Matrix.zeros(fld, (ne * d) * (d * nc), 1)
    for rc, _, vc in amb_c.entries():
        t, al = divmod(rc, nc)
        right_vec = Matrix.from_entries(
            fld, d * nc, 1, {(j * nc + al, 0): vj for j, _, vj in unit.entries()}
        )
        for re_, _, ve in amb_e.entries():
            s, be = divmod(re_, ne)
            base = Matrix.from_entries(
                fld, ne * d, 1, {(be * d + j, 0): vj for j, _, vj in unit.entries()}
            )
            uvec = u_rev(t, s)
            moved = Matrix.zeros(fld, ne * d, 1)
            for j, _, vj in uvec.entries():
                moved = moved + f1.left_action[j] * base * vj
            total = total + moved.kron(right_vec) * (vc * ve)
    q = tcomp.carrier.projection * total
    cols = None
    for i in range(d):
        colv = tcomp.result.left_action[i] * q
        cols = colv if cols is None else cols.hstack(colv)
    zeta_new = BimoduleMap(u_a, tcomp.result, cols)

    # lightning_rev mirrors it through the given witness's forward map
    t_orig = w.carriers[0]
    z_inv = w.lightning.inverse().matrix
    f1b = t2comp.factors[0]
    collapsed2 = {}

    def u_fwd(t, s):
        if (t, s) not in collapsed2:
            ent = {}
            for j, _, vj in unit.entries():
                for p, _, vp in unit.entries():
                    row = (t * d + j) * (d * de) + p * de + s
                    ent[(row, 0)] = vj * vp
            vec = Matrix.from_entries(fld, dc * d * d * de, 1, ent)
            collapsed2[(t, s)] = z_inv * (t_orig.carrier.projection * vec)
        return collapsed2[(t, s)]

    total = Matrix.zeros(fld, (d * ne) * (nc * d), 1)
    for rc, _, vc in amb_c.entries():
        t, al = divmod(rc, nc)
        right_vec = Matrix.from_entries(
            fld, nc * d, 1, {(al * d + j, 0): vj for j, _, vj in unit.entries()}
        )
        for re_, _, ve in amb_e.entries():
            s, be = divmod(re_, ne)
            base = Matrix.from_entries(
                fld, d * ne, 1, {(j * ne + be, 0): vj for j, _, vj in unit.entries()}
            )
            uvec = u_fwd(t, s)
            moved = Matrix.zeros(fld, d * ne, 1)
            for j, _, vj in uvec.entries():
                moved = moved + f1b.left_action[j] * base * vj
            total = total + moved.kron(right_vec) * (vc * ve)
    q = t2comp.carrier.projection * total
    cols = None
    for i in range(d):
        colv = t2comp.result.left_action[i] * q
        cols = colv if cols is None else cols.hstack(colv)
    zeta_rev_new = BimoduleMap(u_b, t2comp.result, cols)

    if not zeta_new.is_invertible() or not zeta_rev_new.is_invertible():
        raise ValueError(
            f"packaged unit-to-composite maps are not invertible for {a_op.name}"
        )
    w2 = ZeroCellWitness(
        a=a_op,
        a_dual=opposite(a_op),
        C=c_new,
        E=e_new,
        lightning=zeta_new,
        lightning_rev=zeta_rev_new,
        carriers=(tcomp, t2comp),
    )
    rep = verify_witness_coherence(w2)
    if not rep.passed:
        raise ValueError(
            f"packaged witness fails coherence for {a_op.name}: "
            f"{'; '.join(rep.failures)}"
        )
    return w2
