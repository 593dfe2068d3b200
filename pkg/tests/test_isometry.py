import numpy as np
import pytest
from scipy.stats import unitary_group

from nclp.algebra import Algebra, generated_algebra
from nclp.errors import DecompositionFailure, InvalidTriple, NotAntiauto, NotIsometry
from nclp.isometry import (
    LinearMap,
    TypicalTriple,
    YeadonTriple,
    construct_typical,
    construct_yeadon,
    decompose_isometry,
    decompose_l1,
    embed_via_ce,
    isometry_from_antiiso,
    random_typical,
    random_yeadon,
    symmetric_embedding,
    typical_distance,
    typical_to_yeadon,
    uniqueness_roundtrip,
    verify_isometry,
    yeadon_distance,
    yeadon_to_typical,
)
from nclp.jordan import ANTI, MULT, JordanMono, Slot, example_m2_m4, image_bicommutant, random_desk_jordan
from nclp.lp import LpElement, dual_pairing, random_orthogonal_pairs, schatten_norm
from nclp.projections import PositiveProjection, build_positive_projection, trace_ce
from nclp.superop import Superoperator

M2, M4 = Algebra([2]), Algebra([4])
PS = [1.0, 1.5, 3.0, 4.0]


def identity_map(A, p):
    return LinearMap(A, A, np.eye(A.dim), p)


def m2_m4_typical(lam, p):
    J = example_m2_m4()
    P = build_positive_projection(J, trace_ce(M4, image_bicommutant(J)), lam)
    return TypicalTriple(M4.identity(), J, P, p)


@pytest.mark.parametrize("p", PS)
def test_construct_yeadon_m2_m4(p):
    J = example_m2_m4()
    y = YeadonTriple(M4.identity(), M4.identity() * 2 ** (-1 / p), J, p)
    assert max(y.residuals().values()) < 1e-12
    T = construct_yeadon(y)
    assert verify_isometry(T, trials=500).max_rel_deviation <= 1e-9
    rng = np.random.default_rng(0)
    x = M2.random(rng)
    assert abs(schatten_norm(T(x), p) - schatten_norm(x, p)) < 1e-12 * schatten_norm(x, p)


def test_construct_yeadon_identity_and_partial_isometry():
    A = Algebra([2, 1])
    J = JordanMono(A, A, [Slot(0, 0, 0, MULT), Slot(1, 1, 0, MULT)])
    T = construct_yeadon(YeadonTriple(A.identity(), A.identity(), J, 3.0))
    assert np.abs(T.matrix - np.eye(A.dim)).max() < 1e-14
    # non-unital J: w maps J(1) onto a different corner of the target
    B = Algebra([3])
    J = JordanMono(M2, B, [Slot(0, 0, 0, MULT)])
    w = np.zeros((3, 3))
    w[1, 0] = w[2, 1] = 1
    y = YeadonTriple(B.element([w]), J.unit(), J, 1.5)
    assert verify_isometry(construct_yeadon(y)).max_rel_deviation <= 1e-9


def test_construct_yeadon_rejects_invalid():
    J = example_m2_m4()
    with pytest.raises(InvalidTriple):
        construct_yeadon(YeadonTriple(M4.identity(), M4.identity(), J, 1.0))


def test_construct_typical_m2_m4_p1():
    t = m2_m4_typical(0.5, 1.0)
    T = construct_typical(t)
    rng = np.random.default_rng(1)
    J = t.J
    for _ in range(5):
        h = M2.random_positive(rng)
        assert (T(h) - J(h) * 0.5).norm() < 1e-12
        assert abs(schatten_norm(T(h), 1) - schatten_norm(h, 1)) < 1e-12
    A = Algebra([2, 2])
    J = JordanMono(A, A, [Slot(0, 0, 0, MULT), Slot(1, 1, 0, MULT)])
    P = PositiveProjection(A, J, Superoperator(A, A, np.eye(A.dim)))
    T = construct_typical(TypicalTriple(A.identity(), J, P, 3.0))
    assert np.abs(T.matrix - np.eye(A.dim)).max() < 1e-12


@pytest.mark.parametrize("p", PS)
def test_typical_matches_yeadon_and_symmetric(p):
    rng = np.random.default_rng(int(p * 10))
    for _ in range(5):
        J = random_desk_jordan(rng, both_modes=True)
        t = random_typical(J, p, rng)
        T = construct_typical(t)
        assert verify_isometry(T, trials=300).max_rel_deviation <= 1e-9
        assert T.distance(construct_yeadon(typical_to_yeadon(t))) <= 1e-9
        t1 = TypicalTriple(J.unit(), J, t.P, p)
        phi = J.source.random_state(rng)
        S, Q = symmetric_embedding(J, t.P, phi, p)
        assert S.distance(construct_typical(t1)) <= 1e-9
        # companion projection is a left inverse of norm one
        assert np.abs(Q.matrix @ S.matrix - np.eye(J.source.dim)).max() <= 1e-9
        assert verify_isometry(LinearMap.wrap(Q @ S, p)).max_rel_deviation <= 1e-9


def test_symmetric_embedding_examples():
    A = Algebra([2, 1])
    J = JordanMono(A, A, [Slot(0, 0, 0, MULT), Slot(1, 1, 0, MULT)])
    P = Superoperator(A, A, np.eye(A.dim))
    S, _ = symmetric_embedding(J, P, A.random_state(np.random.default_rng(2)), 2.5)
    assert np.abs(S.matrix - np.eye(A.dim)).max() < 1e-10
    t = m2_m4_typical(0.5, 1.0)
    S, _ = symmetric_embedding(t.J, t.P, M2.identity() * 0.5, 1.0)
    assert S.distance(construct_typical(t)) < 1e-10
    rng = np.random.default_rng(3)
    S1, _ = symmetric_embedding(t.J, t.P, M2.random_state(rng), 3.0)
    S2, _ = symmetric_embedding(t.J, t.P, M2.random_state(rng), 3.0)
    assert S1.distance(S2) < 1e-9


def test_verify_isometry_controls():
    A = Algebra([2, 2])
    assert verify_isometry(identity_map(A, 3.0)).max_rel_deviation == 0
    T = identity_map(A, 3.0)
    scaled = LinearMap(A, A, 1.01 * T.matrix, 3.0)
    assert abs(verify_isometry(scaled).max_rel_deviation - 0.01) < 1e-12


@pytest.mark.parametrize("p", [1.0, 3.0])
def test_decompose_roundtrip(p):
    rng = np.random.default_rng(int(p))
    for _ in range(10):
        J = random_desk_jordan(rng, both_modes=True)
        y = random_yeadon(J, p, rng)
        back = decompose_isometry(construct_yeadon(y))
        d = yeadon_distance(back, y)
        assert max(d.values()) <= 1e-9, d


def test_decompose_examples():
    rng = np.random.default_rng(4)
    y = decompose_isometry(identity_map(Algebra([2, 1]), 1.5))
    A = y.J.source
    assert (y.w - A.identity()).norm() < 1e-12 and (y.B - A.identity()).norm() < 1e-12
    assert np.abs(y.J.superoperator.matrix - np.eye(A.dim)).max() < 1e-12
    transpose = JordanMono(M2, M2, [Slot(0, 0, 0, ANTI)])
    y = decompose_isometry(LinearMap.wrap(transpose.superoperator, 3.0))
    assert all(s.mode == ANTI for s in y.J.slots)
    assert (y.B - M2.identity()).norm() < 1e-12 and (y.w - M2.identity()).norm() < 1e-12
    x = M2.random(rng)
    assert (y.J(x) - x.T).norm() < 1e-12


def test_decompose_fails_at_p2_for_rotation():
    U = unitary_group.rvs(4, random_state=5)
    T = LinearMap(M2, M2, U, 2.0)
    assert verify_isometry(T).max_rel_deviation <= 1e-9
    with pytest.raises(DecompositionFailure):
        decompose_isometry(T)


def test_decompose_rejects_non_isometry():
    with pytest.raises(NotIsometry):
        decompose_isometry(LinearMap(M2, M2, 1.1 * np.eye(4), 3.0))


def test_decompose_l1_examples():
    rng = np.random.default_rng(6)
    t = decompose_l1(identity_map(M2, 1.0))
    assert (t.w - M2.identity()).norm() < 1e-12
    assert np.abs(t.P.map.matrix - np.eye(4)).max() < 1e-10
    u = M2.element([np.diag([1j, 1])])
    T = LinearMap(M2, M2, M2.map_matrix(lambda x: u @ x), 1.0)
    t = decompose_l1(T)
    assert (t.w - u).norm() < 1e-12
    assert np.abs(t.J.superoperator.matrix - np.eye(4)).max() < 1e-10
    for _ in range(5):
        J = random_desk_jordan(rng, both_modes=True)
        t = random_typical(J, 1.0, rng)
        back = decompose_l1(construct_typical(t))
        assert max(typical_distance(back, t).values()) <= 1e-8


def test_l1_paths_agree():
    rng = np.random.default_rng(7)
    for _ in range(5):
        J = random_desk_jordan(rng, both_modes=True)
        T = construct_typical(random_typical(J, 1.0, rng))
        a = decompose_l1(T)
        b = yeadon_to_typical(decompose_isometry(T))
        assert max(typical_distance(a, b).values()) <= 1e-8


@pytest.mark.parametrize("p", [1.0, 3.0])
def test_conversion_examples(p):
    J = example_m2_m4()
    y = typical_to_yeadon(m2_m4_typical(0.5, p))
    assert (y.B - M4.identity() * 2 ** (-1 / p)).norm() < 1e-12
    t = yeadon_to_typical(YeadonTriple(M4.identity(), M4.identity() * 2 ** (-1 / p), J, p))
    assert abs(t.P.map.distance(m2_m4_typical(0.5, p).P.map)) < 1e-10
    y = typical_to_yeadon(m2_m4_typical(2 / 3, p))
    ref = np.diag(np.array([2 / 3, 2 / 3, 1 / 3, 1 / 3]) ** (1 / p))
    assert np.abs(y.B.blocks[0] - ref).max() < 1e-12
    back = yeadon_to_typical(y)
    assert back.P.map.distance(m2_m4_typical(2 / 3, p).P.map) < 1e-10


def test_embed_via_ce():
    rng = np.random.default_rng(8)
    D = generated_algebra([M2.matrix_unit(0, 0, 0), M2.matrix_unit(0, 1, 1)])
    E = trace_ce(M2, D)
    T = embed_via_ce(E, 3.0)
    for _ in range(5):
        x = T.domain.random(rng)
        assert abs(schatten_norm(T(x), 3) - schatten_norm(x, 3)) < 1e-12 * schatten_norm(x, 3)
    full = trace_ce(M2, generated_algebra(list(M2.basis)))
    T = embed_via_ce(full, 1.5)
    assert verify_isometry(T).max_rel_deviation <= 1e-12
    R = image_bicommutant(example_m2_m4())
    E = trace_ce(M4, R)
    Tp, Tq = embed_via_ce(E, 3.0), embed_via_ce(E, 1.5)
    for _ in range(10):
        x, y = Tp.domain.random(rng), Tp.domain.random(rng)
        lhs = dual_pairing(LpElement(Tp(x), 3.0), LpElement(Tq(y), 1.5))
        rhs = dual_pairing(LpElement(x, 3.0), LpElement(y, 1.5))
        assert abs(lhs - rhs) < 1e-10 * max(1.0, abs(rhs))


def test_isometry_from_antiiso():
    rng = np.random.default_rng(9)
    transpose = JordanMono(M2, M2, [Slot(0, 0, 0, ANTI)])
    T = isometry_from_antiiso(transpose, 1.0)
    assert verify_isometry(T).max_rel_deviation <= 1e-12
    h = M2.random_positive(rng)
    assert (T(h) - h.T).norm() < 1e-12
    A = Algebra([3, 2], [0.5, 1.5])
    alpha = JordanMono(A, A, [Slot(0, 0, 0, ANTI), Slot(1, 1, 0, ANTI)], A.random_unitary(rng))
    T1 = isometry_from_antiiso(alpha, 3.0, A.random_state(rng))
    T2 = isometry_from_antiiso(alpha, 3.0, A.random_state(rng))
    assert T1.distance(T2) < 1e-10
    assert verify_isometry(T1).max_rel_deviation <= 1e-9
    with pytest.raises(NotAntiauto):
        isometry_from_antiiso(example_m2_m4(), 1.0)


def test_uniqueness_roundtrip():
    rng = np.random.default_rng(10)
    assert uniqueness_roundtrip(identity_map(Algebra([2, 1]), 3.0))
    for p in (1.0, 1.5, 3.0):
        J = random_desk_jordan(rng, both_modes=True)
        assert uniqueness_roundtrip(construct_typical(random_typical(J, p, rng)))


@pytest.mark.parametrize("p", PS)
def test_orthogonality_preserved(p):
    rng = np.random.default_rng(int(10 * p) + 1)
    J = random_desk_jordan(rng, both_modes=True)
    T = construct_yeadon(random_yeadon(J, p, rng))
    for x, y in random_orthogonal_pairs(J.source, p, rng, 50):
        a, b = T(x.element), T(y.element)
        scale = a.norm() * b.norm()
        assert (a @ b.H).norm() <= 1e-9 * scale and (a.H @ b).norm() <= 1e-9 * scale
