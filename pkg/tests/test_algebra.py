import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nclp.algebra import (
    Algebra,
    Element,
    absolute,
    bicommutant,
    center,
    commutant,
    functional_calculus,
    generated_algebra,
    is_central,
    is_partial_isometry,
    is_positive,
    is_projection,
    minimal_central_projections,
    polar,
    power,
    supports,
)
from nclp.errors import DimensionMismatch, NotPositive

M2 = Algebra([2])
M3 = Algebra([3])
M4 = Algebra([4])


def diag(A, *vals):
    return A.element([np.diag(vals)])


def test_algebra_validation():
    with pytest.raises(ValueError):
        Algebra([2, 0])
    with pytest.raises(ValueError):
        Algebra([2, 2], [1.0, -1.0])
    with pytest.raises(ValueError):
        Algebra([2], [1.0, 2.0])
    with pytest.raises(DimensionMismatch):
        M2.element([np.eye(3)])


def test_weighted_trace_and_coordinates():
    A = Algebra([2, 1], [0.5, 3.0])
    rng = np.random.default_rng(0)
    x, y = A.random(rng), A.random(rng)
    direct = 0.5 * np.trace(x.blocks[0]) + 3.0 * x.blocks[1][0, 0]
    assert abs(A.trace(x) - direct) < 1e-12
    # trace-orthonormal coordinates realise <a, b> = tau(a* b)
    assert abs(np.vdot(A.vec(x), A.vec(y)) - A.trace(x.H @ y)) < 1e-12
    assert A.unvec(A.vec(x)).allclose(x, 1e-14)
    G = np.array([[A.inner(a, b) for b in A.basis] for a in A.basis])
    assert np.abs(G - np.eye(A.dim)).max() < 1e-12


def test_star_permutation_is_transpose():
    A = Algebra([3, 2])
    x = A.random(np.random.default_rng(1))
    s = A.star_permutation
    assert np.abs(A.vec(x.T) - A.vec(x)[s]).max() < 1e-15


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 31), st.sampled_from([(2,), (3,), (1, 2), (2, 2)]))
def test_traciality(seed, dims):
    A = Algebra(list(dims), list(np.linspace(0.5, 1.5, len(dims))))
    rng = np.random.default_rng(seed)
    x, y = A.random(rng), A.random(rng)
    assert abs(A.trace(x @ y) - A.trace(y @ x)) < 1e-10 * (1 + x.norm() * y.norm())


def test_functional_calculus_examples():
    assert power(M2.identity(), 0.5).allclose(M2.identity(), 1e-14)
    assert power(diag(M2, 4, 9), 0.5).allclose(diag(M2, 2, 3), 1e-14)
    out = functional_calculus(diag(M2, 4, 0), ("power", 0.5))
    assert out.allclose(diag(M2, 2, 0), 1e-14)
    with pytest.raises(NotPositive):
        power(diag(M2, 1, -1), 0.5)


@pytest.mark.parametrize("p", [1.0, 1.5, 3.0, 4.0])
def test_power_roundtrip(p):
    rng = np.random.default_rng(int(10 * p))
    A = Algebra([3, 2])
    for _ in range(20):
        h = A.random_positive(rng)
        back = power(power(h, 1 / p), p)
        assert (back - h).norm() <= 1e-10 * h.norm()


def test_polar_examples():
    w, a = polar(M2.zeros())
    assert w.norm() == 0 and a.norm() == 0
    w, a = polar(diag(M2, -2, 3))
    assert w.allclose(diag(M2, -1, 1), 1e-14)
    assert a.allclose(diag(M2, 2, 3), 1e-14)


def test_polar_roundtrip_and_support():
    rng = np.random.default_rng(2)
    A = Algebra([3, 2])
    for rank in (None, 1, 2):
        x = A.random_positive(rng, rank=rank) @ A.random(rng) if rank else A.random(rng)
        w, a = polar(x)
        assert (w @ a - x).norm() <= 1e-10 * x.norm()
        assert is_partial_isometry(w)
        _, s_r = supports(x)
        assert (w.H @ w - s_r).norm() < 1e-10
        assert (a - absolute(x)).norm() < 1e-10 * x.norm()


def test_supports_examples():
    l, r = supports(M2.identity())
    assert l.allclose(M2.identity()) and r.allclose(M2.identity())
    e12 = M2.matrix_unit(0, 0, 1)
    l, r = supports(e12)
    assert l.allclose(M2.matrix_unit(0, 0, 0)) and r.allclose(M2.matrix_unit(0, 1, 1))
    rng = np.random.default_rng(3)
    x = M3.random_positive(rng, rank=2) @ M3.random(rng)
    l, r = supports(x)
    assert (l @ x - x).norm() < 1e-10 and (x @ r - x).norm() < 1e-10
    # left support from the eigenvectors of x x*
    w, v = np.linalg.eigh((x @ x.H).blocks[0])
    ref = v[:, w > 1e-9 * w.max()]
    assert np.abs(l.blocks[0] - ref @ ref.conj().T).max() < 1e-10


def test_commutant_examples():
    assert commutant([M3.identity()]).dim == 9
    diagonals = [M2.matrix_unit(0, 0, 0), M2.matrix_unit(0, 1, 1)]
    C = commutant(diagonals)
    assert C.dim == 2
    assert C.contains(diag(M2, 1.0, -2.0))
    assert not C.contains(M2.matrix_unit(0, 0, 1))


def test_bicommutant_of_transpose_pairs():
    imgs = []
    for x in M2.basis:
        b = np.zeros((4, 4), complex)
        b[:2, :2] = x.blocks[0]
        b[2:, 2:] = x.blocks[0].T
        imgs.append(M4.element([b]))
    B = bicommutant(imgs)
    assert B.dim == 8
    # double-commutant stability and agreement with the generated algebra
    assert bicommutant(B.basis).same_subspace(B) < 1e-10
    assert generated_algebra(imgs).same_subspace(B) < 1e-10
    assert B.closure_residual() < 1e-10


def test_center_and_minimal_central_projections():
    A = Algebra([2, 1, 3])
    full = generated_algebra(A.basis)
    Z = center(full)
    assert Z.dim == 3
    zs = minimal_central_projections(full)
    assert len(zs) == 3
    total = A.zeros()
    for a, z in enumerate(zs):
        assert is_projection(z)
        assert is_central(z)
        total = total + z
        for b in range(a):
            assert (z @ zs[b]).norm() < 1e-10
    assert total.allclose(A.identity(), 1e-10)


def test_element_arithmetic_and_predicates():
    rng = np.random.default_rng(4)
    A = Algebra([2, 2])
    x = A.random(rng)
    assert ((x + x) - x * 2).norm() == 0
    assert (x.H.H - x).norm() == 0
    assert is_positive(x.H @ x)
    assert not is_positive(diag(M2, 1.0, -0.5))
    with pytest.raises(AttributeError):
        x.blocks = ()
    other = Algebra([2, 1]).random(rng)
    with pytest.raises(DimensionMismatch):
        x + other


def test_operator_norm():
    x = Element(Algebra([2, 1]), [np.diag([1.0, -3.0]), [[2.0]]])
    assert abs(x.norm() - 3.0) < 1e-14
