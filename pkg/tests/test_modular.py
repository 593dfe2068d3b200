import numpy as np
import pytest

from nclp.algebra import Algebra, generated_algebra, imag_power
from nclp.campaigns import hs_negative_case, hs_positive_case
from nclp.errors import NotAntiauto, NotFaithful
from nclp.isometry import random_projection_data
from nclp.jordan import ANTI, MULT, JordanMono, Slot, example_m2_m4, image_bicommutant, random_desk_jordan
from nclp.modular import (
    ModularContext,
    chain_rule_residual,
    check_anticocycle,
    check_centralizer,
    check_hs_conditions,
    cocycle_abs_relation,
    cocycle_identity_residual,
    connes_cocycle,
    cosine_family,
    modular_auto,
    phi_transform,
    phi_transform_quadrature,
    self_polar_form,
    self_polar_integral,
    support_corner,
)
from nclp.projections import build_positive_projection, trace_ce

M2, M4 = Algebra([2]), Algebra([4])
D23 = M2.element([np.diag([2 / 3, 1 / 3])])


def random_ctx(rng, A=Algebra([2, 3], [0.7, 1.3])):
    return ModularContext(A.random_state(rng))


def test_modular_auto_examples():
    ctx = ModularContext(D23)
    e12 = M2.matrix_unit(0, 0, 1)
    assert (modular_auto(ctx, 1.0, e12) - e12 * np.exp(1j * np.log(2))).norm() < 1e-14
    x = M2.random(np.random.default_rng(0))
    assert (modular_auto(ctx, 0.0, x) - x).norm() < 1e-14
    tracial = ModularContext(M2.identity() * 0.5)
    assert (modular_auto(tracial, 2.7, x) - x).norm() < 1e-14
    assert (cosine_family(tracial, 2.7, x) - x).norm() < 1e-14


def test_group_cosine_and_kms_laws():
    rng = np.random.default_rng(1)
    for _ in range(10):
        ctx = random_ctx(rng)
        A = ctx.algebra
        a, b = A.random(rng), A.random(rng)
        s, t = rng.normal(size=2)
        gl = modular_auto(ctx, s, modular_auto(ctx, t, a)) - modular_auto(ctx, s + t, a)
        assert gl.norm() < 1e-10 * a.norm()
        lhs = cosine_family(ctx, s, cosine_family(ctx, t, a))
        rhs = (cosine_family(ctx, s + t, a) + cosine_family(ctx, s - t, a)) * 0.5
        assert (lhs - rhs).norm() < 1e-10 * a.norm()
        assert (cosine_family(ctx, 0.0, a) - a).norm() < 1e-14 * a.norm()
        kms = ctx.state(cosine_family(ctx, t, a).jordan(b)) - ctx.state(a.jordan(cosine_family(ctx, t, b)))
        assert abs(kms) < 1e-10 * a.norm() * b.norm()


def test_phi_transform_examples():
    ctx = ModularContext(D23)
    e12 = M2.matrix_unit(0, 0, 1)
    assert (phi_transform(ctx, e12) - e12 * (2 * np.sqrt(2) / 3)).norm() < 1e-14
    assert (phi_transform_quadrature(ctx, e12) - e12 * (2 * np.sqrt(2) / 3)).norm() < 1e-6
    x = M2.random(np.random.default_rng(2))
    assert (phi_transform(ModularContext(M2.identity() * 0.5), x) - x).norm() < 1e-14


def test_phi_transform_identity_and_quadrature():
    rng = np.random.default_rng(3)
    for _ in range(5):
        ctx = random_ctx(rng)
        x = ctx.algebra.random(rng)
        h = ctx.power(0.5)
        y = phi_transform(ctx, x)
        assert (h @ x @ h - (y @ ctx.d + ctx.d @ y) * 0.5).norm() < 1e-10 * x.norm()
        assert (phi_transform_quadrature(ctx, x) - y).norm() < 1e-6 * x.norm()


def test_self_polar_form():
    rng = np.random.default_rng(4)
    ctx = random_ctx(rng)
    one = ctx.algebra.identity()
    assert abs(self_polar_form(ctx, one, one) - 1) < 1e-12
    tracial = ModularContext(M2.identity() * 0.5)
    a, b = M2.random(rng), M2.random(rng)
    assert abs(self_polar_form(tracial, a, b) - M2.trace(a @ b.H) / 2) < 1e-12
    for _ in range(3):
        a, b = ctx.algebra.random(rng), ctx.algebra.random(rng)
        assert abs(self_polar_form(ctx, a, b) - self_polar_integral(ctx, a, b)) < 1e-6
        assert self_polar_form(ctx, a, a).real >= 0
        assert abs(self_polar_form(ctx, a, b) - np.conj(self_polar_form(ctx, b, a))) < 1e-12


def test_connes_cocycle():
    rng = np.random.default_rng(5)
    A = Algebra([2, 2], [1.0, 0.5])
    phi, psi, omega = (A.random_state(rng) for _ in range(3))
    one = A.identity()
    assert (connes_cocycle(phi, phi, 1.3) - one).norm() < 1e-12
    assert (connes_cocycle(phi, psi, 0.0) - one).norm() < 1e-14
    for s, t in rng.normal(size=(5, 2)):
        assert cocycle_identity_residual(phi, psi, s, t) < 1e-10
        assert chain_rule_residual(phi, psi, omega, t) < 1e-10


def test_anticocycle():
    rng = np.random.default_rng(6)
    transpose = JordanMono(M2, M2, [Slot(0, 0, 0, ANTI)])
    phi, psi = M2.random_state(rng), M2.random_state(rng)
    assert max(check_anticocycle(transpose, phi, phi, 0.7).values()) < 1e-12
    assert max(check_anticocycle(transpose, phi, psi, 0.7).values()) < 1e-10
    U = M2.random_unitary(rng)
    conj = JordanMono(M2, M2, [Slot(0, 0, 0, ANTI)], U)
    assert max(check_anticocycle(conj, phi, psi, 0.7).values()) < 1e-10
    A = Algebra([3, 1, 2])
    alpha = JordanMono(A, A, [Slot(0, 0, 0, ANTI), Slot(1, 1, 0, ANTI), Slot(2, 2, 0, ANTI)], A.random_unitary(rng))
    assert max(check_anticocycle(alpha, A.random_state(rng), A.random_state(rng), -1.1).values()) < 1e-10


def test_anticocycle_rejects_non_antiautomorphisms():
    phi = M2.identity() * 0.5
    with pytest.raises(NotAntiauto):
        check_anticocycle(JordanMono(M2, M2, [Slot(0, 0, 0, MULT)]), phi, phi, 0.3)
    with pytest.raises(NotAntiauto):
        check_anticocycle(example_m2_m4(), phi, phi, 0.3)


def test_check_centralizer():
    d = M4.element([np.diag([0.1, 0.2, 0.3, 0.4])])
    diagonals = generated_algebra([M4.matrix_unit(0, k, k) for k in range(4)])
    assert check_centralizer(d, diagonals) <= 1e-12
    assert check_centralizer(d, generated_algebra(list(M4.basis))) > 1e-3
    # block scalar density is invisible to the block subalgebra
    d = M4.element([np.diag([0.1, 0.1, 0.4, 0.4])])
    assert check_centralizer(d, image_bicommutant(example_m2_m4())) <= 1e-12


def test_cocycle_abs_relation():
    rng = np.random.default_rng(7)
    for _ in range(10):
        J = random_desk_jordan(rng, pad=0)
        F, lam = random_projection_data(J, rng)
        P = build_positive_projection(J, F, lam)
        phi, psi = J.source.random_state(rng), J.source.random_state(rng)
        assert cocycle_abs_relation(J, P.map, phi, psi) < 1e-8


def test_hs_trace_state_example():
    J = example_m2_m4()
    rep = check_hs_conditions(J, M4.identity() * 0.25)
    assert rep.holds(1e-10) and rep.projection_exists
    P = build_positive_projection(J, trace_ce(M4, image_bicommutant(J)), 0.5)
    assert rep.projection.distance(P.map) < 1e-10


def test_hs_identity_inclusion():
    A = Algebra([2, 1])
    J = JordanMono(A, A, [Slot(0, 0, 0, MULT), Slot(1, 1, 0, MULT)])
    rep = check_hs_conditions(J, A.random_state(np.random.default_rng(8)))
    assert rep.holds(1e-10) and rep.projection_exists
    assert np.abs(rep.projection.matrix - np.eye(A.dim)).max() < 1e-10


def test_hs_positive_and_negative_cases():
    rng = np.random.default_rng(9)
    for _ in range(5):
        J, psi, P = hs_positive_case(rng)
        rep = check_hs_conditions(J, psi, rng=rng)
        assert rep.holds(1e-9) and rep.projection.distance(P.map) < 1e-9
        J, psi = hs_negative_case(rng)
        rep = check_hs_conditions(J, psi, rng=rng)
        assert not rep.projection_exists
        assert max(rep.condition2, rep.condition3) > 1e-3


def test_not_faithful():
    with pytest.raises(NotFaithful):
        ModularContext(M2.element([np.diag([1.0, 0.0])]))


def test_support_corner_for_non_faithful_state():
    rng = np.random.default_rng(10)
    A = Algebra([3, 2], [1.0, 0.5])
    v = M4.random_unitary(rng).blocks[0][:3, :2]
    d = A.element([v @ np.diag([0.6, 0.2]) @ v.conj().T, np.zeros((2, 2))])
    corner = support_corner(d)
    assert corner.algebra.dims == (2,)
    x = corner.algebra.random(rng)
    assert (corner.compress(corner.expand(x)) - x).norm() < 1e-12
    # sigma on the corner is d^{it} . d^{-it} with the support-restricted powers
    y = A.random(rng)
    u = imag_power(d, 0.8)
    lhs = corner.expand(modular_auto(corner.ctx, 0.8, corner.compress(y)))
    assert (lhs - u @ y @ u.H).norm() < 1e-10
    assert abs(corner.ctx.state(corner.compress(y)) - A.trace(d @ y)) < 1e-12
