"""Algebra layer: constructors, validation, opposite/tensor, serialization.

Expected values below are either forced by the defining formulas (delta rules,
group tables) or cross-checked through validate_algebra, which enumerates
every associativity triple directly.
"""

from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from bimod.algebra import (
    Algebra,
    algebra_from_json,
    algebra_to_json,
    cyclic_table,
    generating_elements,
    group_algebra,
    matrix_algebra,
    opposite,
    s3_conjugacy_representatives,
    s3_table,
    standard_battery,
    tensor_algebra,
    validate_algebra,
)
from bimod.linalg import Matrix, PrimeField, Q


BATTERY = standard_battery(Q)


def col(field, dim, entries):
    return Matrix.from_entries(field, dim, 1, {(i, 0): field.parse(v) for i, v in entries.items()})


# ---------------------------------------------------------------------------
# validation


def test_validate_ground_field():
    k = matrix_algebra(1)
    assert k.dim == 1
    assert validate_algebra(k).passed


@pytest.mark.parametrize("name", sorted(BATTERY))
def test_validate_battery(name):
    rep = validate_algebra(BATTERY[name])
    assert rep.passed, rep.failures


def test_validate_battery_tensor_grid():
    # every pairwise tensor of battery algebras validates (largest is dim 81*?
    # no: M3 x M3 at dim 81; QC2xM2 x M3 at dim 72)
    names = sorted(BATTERY)
    for x in names:
        for y in names:
            t = tensor_algebra(BATTERY[x], BATTERY[y])
            rep = validate_algebra(t)
            assert rep.passed, (x, y, rep.failures)
            assert t.dim == BATTERY[x].dim * BATTERY[y].dim


@pytest.mark.parametrize("name", sorted(BATTERY))
def test_validate_opposites(name):
    rep = validate_algebra(opposite(BATTERY[name]))
    assert rep.passed, rep.failures


def test_validate_catches_unit_failure():
    # d=2, only product e_0*e_0 = e_0, unit (1,0): then e_0*e_1 = 0 != e_1
    one = Q.one
    left = [
        Matrix.from_entries(Q, 2, 2, {(0, 0): one}),
        Matrix.from_entries(Q, 2, 2, {}),
    ]
    a = Algebra("broken", Q, left, col(Q, 2, {0: 1}))
    rep = validate_algebra(a)
    assert not rep.passed
    assert any("unit law" in f for f in rep.failures)


def test_validate_catches_associativity_failure():
    # unit e_0 on both sides, but e_1 e_1 = e_2, e_1 e_2 = 0, e_2 e_1 = e_1:
    # then (e_1 e_1) e_1 = e_1 while e_1 (e_1 e_1) = 0
    one = Q.one
    left = [
        Matrix.identity(Q, 3),
        Matrix.from_entries(Q, 3, 3, {(1, 0): one, (2, 1): one}),
        Matrix.from_entries(Q, 3, 3, {(2, 0): one, (1, 1): one}),
    ]
    a = Algebra("nonassoc", Q, left, col(Q, 3, {0: 1}))
    rep = validate_algebra(a)
    assert not rep.passed
    assert any("associativity" in f for f in rep.failures)
    assert not any("unit law" in f for f in rep.failures)


# ---------------------------------------------------------------------------
# opposite


def test_opposite_commutative_is_identity():
    qc2 = BATTERY["QC2"]
    assert opposite(qc2) == qc2


def test_opposite_m2_product_reverses():
    # basis e_pq at index 2p+q; in the opposite, e_01 . e_10 is computed as
    # e_10 e_01 = e_11 (index 3)
    m2op = opposite(BATTERY["M2"])
    assert m2op.product(1, 2) == col(Q, 4, {3: 1})
    # and in M2 itself e_01 e_10 = e_00
    assert BATTERY["M2"].product(1, 2) == col(Q, 4, {0: 1})


@pytest.mark.parametrize("name", sorted(BATTERY))
def test_opposite_involution(name):
    a = BATTERY[name]
    assert opposite(opposite(a)) == a
    assert opposite(opposite(a)).name == a.name


def test_opposite_of_tensor_is_tensor_of_opposites():
    for x, y in [("QC2", "M2"), ("M2", "QC3"), ("M2", "M3")]:
        a, b = BATTERY[x], BATTERY[y]
        assert opposite(tensor_algebra(a, b)) == tensor_algebra(opposite(a), opposite(b))


# ---------------------------------------------------------------------------
# tensor


@pytest.mark.parametrize("name", sorted(BATTERY))
def test_tensor_with_ground_field_is_identity(name):
    k = BATTERY["k"]
    a = BATTERY[name]
    assert tensor_algebra(k, a) == a
    assert tensor_algebra(a, k) == a


def test_tensor_qc2_qc2_is_klein_group_algebra():
    klein = [[0, 1, 2, 3], [1, 0, 3, 2], [2, 3, 0, 1], [3, 2, 1, 0]]
    assert tensor_algebra(BATTERY["QC2"], BATTERY["QC2"]) == group_algebra(klein)


def test_tensor_m2_with_opposite_validates():
    t = tensor_algebra(BATTERY["M2"], opposite(BATTERY["M2"]))
    assert t.dim == 16
    assert validate_algebra(t).passed


def test_tensor_field_mismatch():
    with pytest.raises(ValueError, match="field mismatch"):
        tensor_algebra(BATTERY["M2"], matrix_algebra(2, field=PrimeField(5)))


def test_tensor_associative_on_the_nose():
    a, b, c = BATTERY["QC2"], BATTERY["M2"], BATTERY["QC3"]
    assert tensor_algebra(tensor_algebra(a, b), c) == tensor_algebra(a, tensor_algebra(b, c))


# ---------------------------------------------------------------------------
# group algebras


def test_group_algebra_trivial_group():
    assert group_algebra([[0]]) == matrix_algebra(1)


def test_group_algebra_c2_relation():
    qc2 = group_algebra(cyclic_table(2))
    assert qc2.product(1, 1) == qc2.unit


def test_group_algebra_s3():
    qs3 = group_algebra(s3_table())
    assert qs3.dim == 6
    assert validate_algebra(qs3).passed
    # the table really is nonabelian
    t = s3_table()
    assert any(t[i][j] != t[j][i] for i in range(6) for j in range(6))


def test_s3_class_representatives_have_right_orders():
    t = s3_table()
    reps = s3_conjugacy_representatives()
    assert len(reps) == 3 and reps[0] == 0

    def order(g):
        x, n = g, 1
        while x != 0:
            x, n = t[x][g], n + 1
        return n

    assert [order(g) for g in reps] == [1, 2, 3]


def test_group_algebra_rejects_non_closed():
    with pytest.raises(ValueError, match="not closed"):
        group_algebra([[0, 1], [1, 5]])


def test_group_algebra_rejects_no_identity():
    with pytest.raises(ValueError, match="no identity"):
        group_algebra([[1, 1], [1, 1]])


def test_group_algebra_rejects_non_associative():
    with pytest.raises(ValueError, match="associativity"):
        group_algebra([[0, 1, 2], [1, 2, 2], [2, 2, 1]])


def test_group_algebra_rejects_missing_inverse():
    # multiplicative monoid {1, 0}: associative with identity, 0 not invertible
    with pytest.raises(ValueError, match="no inverse"):
        group_algebra([[0, 1], [1, 1]])


# ---------------------------------------------------------------------------
# matrix algebras


def test_matrix_algebra_delta_rule():
    m2 = matrix_algebra(2)
    # e_01 e_10 = e_00, e_01 e_01 = 0, e_10 e_01 = e_11
    assert m2.product(1, 2) == col(Q, 4, {0: 1})
    assert m2.product(1, 1).is_zero()
    assert m2.product(2, 1) == col(Q, 4, {3: 1})


def test_matrix_algebra_m3_validates():
    assert validate_algebra(matrix_algebra(3)).passed


def test_matrix_algebra_rejects_n0():
    with pytest.raises(ValueError):
        matrix_algebra(0)


# ---------------------------------------------------------------------------
# generators


def element_closure_dim(a, elems):
    """Independent check: dimension of the unital subalgebra generated by the
    given element columns, via two-sided products of a spanning set."""
    from bimod.linalg import rref

    rows = a.unit.transpose()
    for v in elems:
        rows = rows.vstack(v.transpose())
    red, _, rank = rref(rows)
    span = red.top_rows(rank)
    while True:
        before = rank
        prods = span
        for s in range(span.rows):
            xi = span.row(s).transpose()
            for t in range(span.rows):
                yj = span.row(t).transpose()
                prods = prods.vstack(a.mult(xi, yj).transpose())
                prods = prods.vstack(a.mult(yj, xi).transpose())
        red, _, rank = rref(prods)
        span = red.top_rows(rank)
        if rank == before:
            return rank


def two_sided_closure_dim(a, gens):
    cols = [
        Matrix.from_entries(a.field, a.dim, 1, {(g, 0): a.field.one}) for g in gens
    ]
    return element_closure_dim(a, cols)


@pytest.mark.parametrize("name", sorted(BATTERY))
def test_generators_generate(name):
    a = BATTERY[name]
    gens = a.generators()
    assert two_sided_closure_dim(a, gens) == a.dim
    assert len(gens) <= a.dim


@pytest.mark.parametrize("name", sorted(BATTERY))
def test_generating_elements_generate(name):
    # compose() trusts these elements to present the middle algebra; a bad
    # hint would silently under-quotient every composite over it.
    a = BATTERY[name]
    assert element_closure_dim(a, generating_elements(a)) == a.dim


@pytest.mark.parametrize("n", [2, 3, 4])
def test_matrix_algebra_two_generators(n):
    a = matrix_algebra(n)
    elems = generating_elements(a)
    assert len(elems) == 2
    assert element_closure_dim(a, elems) == n * n


def test_tensor_generating_elements_generate():
    t = tensor_algebra(BATTERY["M2"], opposite(BATTERY["QS3"]))
    elems = generating_elements(t)
    assert len(elems) <= 4
    assert element_closure_dim(t, elems) == t.dim


def test_generators_small_for_m3():
    assert len(BATTERY["M3"].generators()) <= 5  # far fewer than dim 9


def test_generators_empty_for_ground_field():
    assert BATTERY["k"].generators() == []


# ---------------------------------------------------------------------------
# element arithmetic properties

small_coord = st.integers(min_value=-3, max_value=3)


@st.composite
def qs3_element(draw):
    vals = draw(st.lists(small_coord, min_size=6, max_size=6))
    return col(Q, 6, {i: v for i, v in enumerate(vals) if v})


@given(qs3_element(), qs3_element(), qs3_element())
@settings(max_examples=40, deadline=None)
def test_mult_is_associative_on_elements(x, y, z):
    a = BATTERY["QS3"]
    assert a.mult(a.mult(x, y), z) == a.mult(x, a.mult(y, z))


@given(qs3_element(), qs3_element())
@settings(max_examples=40, deadline=None)
def test_left_action_matrix_matches_mult(x, y):
    a = BATTERY["QS3"]
    assert a.left_action_of(x) * y == a.mult(x, y)


@given(qs3_element())
@settings(max_examples=25, deadline=None)
def test_unit_is_two_sided(x):
    a = BATTERY["QS3"]
    assert a.mult(a.unit, x) == x
    assert a.mult(x, a.unit) == x


# ---------------------------------------------------------------------------
# equality semantics


def test_equality_ignores_name():
    assert group_algebra(cyclic_table(2), name="X") == BATTERY["QC2"]


def test_algebras_are_unhashable():
    with pytest.raises(TypeError):
        hash(BATTERY["QC2"])


# ---------------------------------------------------------------------------
# serialization


def test_to_json_exact_qc2():
    d = algebra_to_json(BATTERY["QC2"])
    assert d == {
        "name": "QC2",
        "field": "Q",
        "dim": 2,
        "unit": ["1", "0"],
        "structure": [
            [0, 0, 0, "1"],
            [0, 1, 1, "1"],
            [1, 0, 1, "1"],
            [1, 1, 0, "1"],
        ],
    }


@pytest.mark.parametrize("name", sorted(BATTERY))
def test_json_round_trip(name):
    a = BATTERY[name]
    b = algebra_from_json(algebra_to_json(a))
    assert b == a and b.name == a.name


def test_json_round_trip_gf5():
    a = group_algebra(cyclic_table(5), name="F5C5", field=PrimeField(5))
    d = algebra_to_json(a)
    assert d["field"] == {"GF": 5}
    assert algebra_from_json(d) == a


def test_json_fractional_structure_constants():
    # Q[x]/(x^2 - 1/2): e_1 e_1 = (1/2) e_0, serialized as "1/2"
    left = [
        Matrix.identity(Q, 2),
        Matrix.from_entries(Q, 2, 2, {(1, 0): 1, (0, 1): Fraction(1, 2)}),
    ]
    a = Algebra("Qsqrt-half", Q, left, col(Q, 2, {0: 1}))
    assert validate_algebra(a).passed
    d = algebra_to_json(a)
    assert [1, 1, 0, "1/2"] in d["structure"]
    assert algebra_from_json(d) == a


def test_from_json_rejects_bad_index():
    d = algebra_to_json(BATTERY["QC2"])
    d["structure"].append([0, 0, 7, "1"])
    with pytest.raises(ValueError, match="out of range"):
        algebra_from_json(d)


def test_from_json_rejects_wrong_unit_length():
    d = algebra_to_json(BATTERY["QC2"])
    d["unit"] = ["1"]
    with pytest.raises(ValueError, match="unit length"):
        algebra_from_json(d)
