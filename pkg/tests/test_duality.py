"""Duality layer: right duals with triangle identities, dualizability
witnesses for algebras, separability idempotents, packaged opposite duals.

Expected values come from independent counts: dual dimensions are map-space
dimensions (free rank-r modules over A give r * dim A, the cell over M_n
gives n^2 by the simple-module count for M_{n^2}), separability verdicts are
the classical ones (group algebras with invertible order and matrix algebras
are separable, k[x]/(x^2) and GF(2)[C_2] are not), and the Hochschild
contrast checks HH_1 of the dual numbers against the one-dimensional module
of differentials.  Rejection rank certificates are pinned to the concrete
inconsistent systems.
"""

import pytest

from bimod.algebra import (
    Algebra,
    cyclic_table,
    dual_numbers,
    group_algebra,
    opposite,
    standard_battery,
)
from bimod.bimodule import (
    Bimodule,
    canonical_cells,
    column_module,
    compose,
    ground_algebra,
    representation_bimodule,
    unit_bimodule,
)
from bimod.duality import (
    DualPair,
    WitnessFailure,
    _coherence_legs_through_c,
    _coherence_legs_through_e,
    compose_dual_pairs,
    dual_of_zero_cell_witness,
    one_dualizability_witness,
    right_dual_witness,
    separability_idempotent,
    two_dualizability_report,
    verify_triangles,
    verify_witness_coherence,
)
from bimod.hochschild import hh_dims
from bimod.linalg import Matrix, PrimeField, Q

BATTERY = standard_battery()
QC2 = BATTERY["QC2"]
QC3 = BATTERY["QC3"]
QS3 = BATTERY["QS3"]
M2 = BATTERY["M2"]
M3 = BATTERY["M3"]
KQ = ground_algebra(Q)

ONE = Q.one
NEG = -Q.one
ZERO = Q.zero


def s3_standard_rep() -> Bimodule:
    """The 2-dimensional irreducible of S_3 on {x : x_0+x_1+x_2 = 0} with
    basis e_0 - e_2, e_1 - e_2, matrices written against the s3_table
    element order."""
    mats = [
        Matrix.from_rows(Q, [[ONE, ZERO], [ZERO, ONE]]),
        Matrix.from_rows(Q, [[ONE, ZERO], [NEG, NEG]]),
        Matrix.from_rows(Q, [[ZERO, ONE], [ONE, ZERO]]),
        Matrix.from_rows(Q, [[NEG, NEG], [ONE, ZERO]]),
        Matrix.from_rows(Q, [[ZERO, ONE], [NEG, NEG]]),
        Matrix.from_rows(Q, [[NEG, NEG], [ZERO, ONE]]),
    ]
    return representation_bimodule(QS3, mats, "V_std")


def right_regular(a: Algebra) -> Bimodule:
    """A as a (ground, A)-bimodule."""
    return Bimodule(
        f"{a.name}_r",
        ground_algebra(a.field),
        a,
        a.dim,
        [Matrix.identity(a.field, a.dim)],
        list(a.right_mult),
    )


def free_right_module(a: Algebra, rank: int) -> Bimodule:
    dim = rank * a.dim
    right = []
    for j in range(a.dim):
        ent = {}
        for blk in range(rank):
            off = blk * a.dim
            for r, c, v in a.right_mult[j].entries():
                ent[(off + r, off + c)] = v
        right.append(Matrix.from_entries(a.field, dim, dim, ent))
    return Bimodule(
        f"free({a.name},{rank})",
        ground_algebra(a.field),
        a,
        dim,
        [Matrix.identity(a.field, dim)],
        right,
    )


# ---------------------------------------------------------------------------
# right duals of 1-cells


class TestRightDual:
    def test_unit_over_ground_is_its_own_dual(self):
        p = right_dual_witness(unit_bimodule(KQ))
        assert p.dual.dim == 1
        assert verify_triangles(p).passed

    def test_standard_rep(self):
        p = right_dual_witness(s3_standard_rep())
        # over the ground field the dual is the full linear dual
        assert p.dual.dim == 2
        assert p.dual.left_alg == KQ and p.dual.right_alg == QS3
        assert verify_triangles(p).passed

    def test_regular_bimodule_dual_is_map_space(self):
        p = right_dual_witness(unit_bimodule(QS3))
        # Hom_A(A, A) = A acting by left multiplication
        assert p.dual.dim == 6
        assert verify_triangles(p).passed

    def test_column_module(self):
        p = right_dual_witness(column_module(2, Q))
        assert p.dual.dim == 2
        assert verify_triangles(p).passed

    @pytest.mark.parametrize(
        "name,rank", [("QC2", 2), ("QC3", 1), ("M2", 1), ("QS3", 2)]
    )
    def test_free_modules(self, name, rank):
        a = BATTERY[name]
        p = right_dual_witness(free_right_module(a, rank))
        # Hom_A(A^r, A) = A^r
        assert p.dual.dim == rank * a.dim

    def test_non_projective_module_rejected(self):
        dn = dual_numbers()
        k0 = Bimodule(
            "k0",
            KQ,
            dn,
            1,
            [Matrix.identity(Q, 1)],
            [Matrix.identity(Q, 1), Matrix.zeros(Q, 1, 1)],
        )
        with pytest.raises(WitnessFailure) as exc:
            right_dual_witness(k0)
        assert exc.value.certificate == {"system_rank": 0, "augmented_rank": 1}
        assert "not right dualizable" in exc.value.claim

    def test_free_module_over_non_semisimple_algebra_is_fine(self):
        # projectivity is about the module, not the algebra
        p = right_dual_witness(right_regular(dual_numbers()))
        assert p.dual.dim == 2
        assert verify_triangles(p).passed

    def test_cell_duals_over_m3(self):
        _, c, e = canonical_cells(M3)
        pc = right_dual_witness(c)
        # A (x) A^op = M_9 and the cell is its 9-dimensional simple, so the
        # map space into the rank-one free module has dimension 9
        assert pc.dual.dim == 9
        pe = right_dual_witness(e)
        assert pe.dual.dim == 9


class TestTriangles:
    def test_scaling_coev_down_and_ev_up_stays_valid(self):
        p = right_dual_witness(s3_standard_rep())
        half = Q.one / (Q.one + Q.one)
        two = Q.one + Q.one
        scaled = DualPair(
            p.m, p.dual, p.coev.scaled(half), p.ev.scaled(two), p.carriers
        )
        assert verify_triangles(scaled).passed

    def test_perturbed_coev_fails_with_offending_composites(self):
        p = right_dual_witness(s3_standard_rep())
        two = Q.one + Q.one
        bad = DualPair(p.m, p.dual, p.coev.scaled(two), p.ev, p.carriers)
        rep = verify_triangles(bad)
        assert not rep.passed
        assert len(rep.failures) == 2
        # both composites double instead of being the identity
        assert rep.certificate["module_composite"] == [["2", "0"], ["0", "2"]]
        assert rep.certificate["dual_composite"] == [["2", "0"], ["0", "2"]]


class TestComposePairs:
    def test_tensor_style_composite(self):
        pv = right_dual_witness(s3_standard_rep())
        p2 = right_dual_witness(right_regular(QC2))
        pc = compose_dual_pairs(pv, p2)
        assert pc.m.dim == 4 and pc.dual.dim == 4
        assert verify_triangles(pc).passed

    def test_balanced_composite(self):
        pu = right_dual_witness(unit_bimodule(QS3))
        pv = right_dual_witness(s3_standard_rep())
        pc = compose_dual_pairs(pu, pv)
        assert pc.m.dim == 2 and pc.dual.dim == 2
        assert verify_triangles(pc).passed

    def test_mismatched_pairs_rejected(self):
        pv = right_dual_witness(s3_standard_rep())
        pq = right_dual_witness(right_regular(QC2))
        with pytest.raises(ValueError):
            compose_dual_pairs(pq, pv)


# ---------------------------------------------------------------------------
# 0-cell witnesses


class TestOneDualizability:
    @pytest.mark.parametrize("name", sorted(BATTERY))
    def test_battery_witness(self, name):
        a = BATTERY[name]
        w = one_dualizability_witness(a)
        assert w.a_dual == opposite(a)
        assert w.C.dim == a.dim and w.E.dim == a.dim
        assert w.lightning.is_invertible()
        assert w.lightning_rev.is_invertible()
        assert verify_witness_coherence(w).passed

    def test_qc2_looped_composites_have_dim_two(self):
        w = one_dualizability_witness(QC2)
        assert w.carriers[0].result.dim == 2
        assert w.carriers[1].result.dim == 2

    @pytest.mark.parametrize("name", ["QC2", "M2"])
    def test_fast_and_generic_coherence_legs_agree(self, name):
        w = one_dualizability_witness(BATTERY[name])
        for fn in (_coherence_legs_through_c, _coherence_legs_through_e):
            fast1, fast2 = fn(w, True)
            slow1, slow2 = fn(w, False)
            assert fast1.matrix == fast2.matrix
            assert slow1.matrix == slow2.matrix
            assert fast2.is_invertible() and slow2.is_invertible()


class TestSeparability:
    def test_qc2_idempotent_exact(self):
        w = separability_idempotent(QC2)
        half = Q.one / (Q.one + Q.one)
        assert [w.idempotent.entry(i, 0) for i in range(4)] == [
            half,
            Q.zero,
            Q.zero,
            half,
        ]

    @pytest.mark.parametrize("name", sorted(BATTERY))
    def test_battery_separable_with_vanishing_higher_hh(self, name):
        a = BATTERY[name]
        separability_idempotent(a)
        dims = hh_dims(a, unit_bimodule(a), cap=2)
        assert dims[1] == 0 and dims[2] == 0

    def test_dual_numbers_rejected(self):
        with pytest.raises(WitnessFailure) as exc:
            separability_idempotent(dual_numbers())
        assert exc.value.certificate == {"system_rank": 3, "augmented_rank": 4}
        # contrast: the obstruction shows up as nonvanishing HH_1, which for
        # k[x]/(x^2) is the one-dimensional module of differentials
        dn = dual_numbers()
        assert hh_dims(dn, unit_bimodule(dn), cap=2) == [2, 1, 1]

    def test_modular_group_algebra_rejected(self):
        f2c2 = group_algebra(cyclic_table(2), name="F2C2", field=PrimeField(2))
        with pytest.raises(WitnessFailure) as exc:
            separability_idempotent(f2c2)
        assert exc.value.certificate == {"system_rank": 2, "augmented_rank": 3}


class TestTwoDualizability:
    @pytest.mark.parametrize("name,ddim", [("QC2", 2), ("M2", 4), ("QS3", 6)])
    def test_separable_algebras_pass(self, name, ddim):
        rep, pc, pe = two_dualizability_report(BATTERY[name])
        assert rep.passed and not rep.failures
        assert pc.dual.dim == ddim and pe.dual.dim == ddim
        assert verify_triangles(pc).passed
        assert verify_triangles(pe).passed

    def test_m3_cell_dual_dimension(self):
        rep, pc, pe = two_dualizability_report(M3)
        assert rep.passed
        assert pc.dual.dim == 9 and pe.dual.dim == 9

    def test_dual_numbers_fail_with_certificate(self):
        rep, pc, pe = two_dualizability_report(dual_numbers())
        assert not rep.passed
        assert pc is None
        assert pe is not None and pe.dual.dim == 2
        assert rep.certificate == {"system_rank": 3, "augmented_rank": 4}
        assert any("not separable" in f for f in rep.failures)


class TestPackagedDual:
    @pytest.mark.parametrize("name", ["k", "QC2", "M2"])
    def test_witness_for_opposite_algebra(self, name):
        a = BATTERY[name]
        w = one_dualizability_witness(a)
        _, pc, pe = two_dualizability_report(a)
        w2 = dual_of_zero_cell_witness(w, pc, pe)
        assert w2.a == opposite(a)
        # the double opposite is the algebra itself
        assert w2.a_dual == a
        assert w2.C == pe.dual and w2.E == pc.dual
        assert verify_witness_coherence(w2).passed

    def test_swapped_pairs_rejected(self):
        w = one_dualizability_witness(QC2)
        _, pc, pe = two_dualizability_report(QC2)
        with pytest.raises(ValueError):
            dual_of_zero_cell_witness(w, pe, pc)
