import numpy as np
import pytest

from nclp.algebra import Algebra
from nclp.cfm import (
    BlochCFM,
    bloch_vector,
    cfm_check_axioms,
    cfm_eval,
    cfm_from_functional,
    counterexample,
    degenerate_path,
    derived_witness,
    fit_linear,
    format_monomial,
    nonlinearity_witness,
    parse_monomial,
    projection_from_bloch,
    sphere_grid,
)
from nclp.errors import NoWitnessFound, NotPositive, WrongAlgebra
from nclp.lp import LpElement

M2, M3 = Algebra([2]), Algebra([3])


def proj(n):
    return M2.element([projection_from_bloch(n)])


def test_monomials():
    assert parse_monomial("x^3") == (3, 0, 0)
    assert parse_monomial("x^2*y") == (2, 1, 0)
    assert parse_monomial("x y z") == (1, 1, 1)
    assert format_monomial((1, 2, 0)) == "x*y^2"
    with pytest.raises(ValueError):
        parse_monomial("w^2")


def test_bloch_geometry():
    for n in sphere_grid(8, 4):
        q = projection_from_bloch(n)
        assert np.abs(q @ q - q).max() < 1e-14
        w, v = np.linalg.eigh(q)
        assert np.abs(bloch_vector(v[:, 1]) - n).max() < 1e-12


def test_cfm_eval_examples():
    rho = counterexample()
    assert abs(cfm_eval(rho, M2.identity()) - 2) < 1e-14
    assert abs(cfm_eval(rho, proj([1, 0, 0])) - 1.5) < 1e-14
    assert abs(cfm_eval(rho, LpElement(proj([-1, 0, 0]), 1)) - 0.5) < 1e-14
    flat = BlochCFM(3.0, {})
    rng = np.random.default_rng(0)
    for _ in range(10):
        h = M2.random_positive(rng)
        assert abs(flat(h) - 1.5 * np.trace(h.blocks[0]).real) < 1e-12


def test_well_defined_at_degenerate_spectrum():
    rho = counterexample()
    rng = np.random.default_rng(1)
    for _ in range(5):
        u = M2.random_unitary(rng)
        assert abs(rho(u @ M2.identity() @ u.H * 0.7) - 1.4) < 1e-12


def test_cfm_eval_errors():
    rho = counterexample()
    with pytest.raises(WrongAlgebra):
        cfm_eval(rho, M3.identity())
    with pytest.raises(NotPositive):
        cfm_eval(rho, M2.element([np.diag([1.0, -0.5])]))
    with pytest.raises(NotPositive):
        cfm_eval(rho, M2.matrix_unit(0, 0, 1))


def test_bloch_validation():
    with pytest.raises(ValueError):
        BlochCFM(2.0, {"x^2": 0.1})
    with pytest.raises(ValueError):
        BlochCFM(1.0, {"x^3": 0.6})
    BlochCFM(1.0, {"x^3": 0.5})


def test_axioms_linear_baseline():
    rep = cfm_check_axioms(BlochCFM(2.0, {}), trials=200)
    assert rep.max() <= 1e-10


@pytest.mark.parametrize("p", [1.0, 3.0])
def test_axioms_counterexample(p):
    rep = cfm_check_axioms(counterexample(p), trials=200)
    assert rep.max() <= 1e-8
    # the jump at the degenerate point shrinks linearly with the step
    assert rep.lipschitz_estimate < 1.0


def test_continuity_along_degenerate_path():
    rho = counterexample()
    for t in (1e-2, 1e-4, 1e-6):
        h = degenerate_path(M2, t)
        w = np.linalg.eigvalsh(h.blocks[0])
        assert abs(w[1] - 1 - t) < 1e-12 and abs(w[0] - 1 + t) < 1e-12
        # rho(h_t) - c = 2 t u(n_t), so the jump is at most t * c
        assert abs(rho(h) - 2.0) <= 2 * t


def test_axioms_even_term_corruption():
    bad = BlochCFM(2.0, {"x^3": 0.5, "z^2": 0.3}, allow_even=True)
    assert cfm_check_axioms(bad, trials=200).orthogonal_additivity > 1e-3


def test_witness_derived():
    rho = counterexample()
    w = derived_witness(rho)
    assert abs(w.rho_parts - 2.5) < 1e-12
    assert abs(w.rho_sum - 2.25) < 1e-12
    assert abs(w.gap - 0.25) < 1e-9
    # eigen-data of proj(+x) + proj(+z)
    ev = np.linalg.eigvalsh((w.h1 + w.h2).blocks[0])
    assert np.abs(ev - [1 - 1 / np.sqrt(2), 1 + 1 / np.sqrt(2)]).max() < 1e-12


def test_witness_search():
    rho = counterexample()
    w = nonlinearity_witness(rho)
    assert w.gap >= 0.25 - 1e-9
    assert abs(abs(rho(w.h1 + w.h2) - rho(w.h1) - rho(w.h2)) - w.gap) < 1e-12


@pytest.mark.parametrize("poly", [{}, {"z": 0.3}, {"x": 0.1, "y": -0.2}])
def test_no_witness_for_linear(poly):
    rho = BlochCFM(2.0, poly)
    with pytest.raises(NoWitnessFound):
        nonlinearity_witness(rho)
    assert fit_linear(rho).residual <= 1e-10


def test_u_linear_fits_density():
    rho = BlochCFM(2.0, {"z": 0.3})
    fit = fit_linear(rho)
    # f(n) = 1 + 0.3 n_z gives density 1 + 0.3 sigma_z
    assert np.abs(fit.eta.blocks[0] - np.diag([1.3, 0.7])).max() < 1e-10


def test_fit_linear_counterexample():
    assert fit_linear(counterexample()).residual >= 0.05


def test_fit_linear_zero():
    fit = fit_linear(BlochCFM(0.0, {}))
    assert fit.residual == 0 and fit.eta.norm() == 0


@pytest.mark.parametrize("p", [1.0, 1.5, 3.0])
def test_functional_cfm_roundtrip(p):
    rng = np.random.default_rng(int(10 * p))
    for A in (M3, Algebra([2, 1], [0.5, 2.0])):
        eta = A.random_positive(rng)
        rho = cfm_from_functional(eta, p)
        assert cfm_check_axioms(rho, trials=50).max() <= 1e-10
        fit = fit_linear(rho)
        assert fit.residual <= 1e-10
        assert (fit.eta - eta).norm() <= 1e-9 * eta.norm()
        with pytest.raises(NoWitnessFound):
            nonlinearity_witness(rho)
