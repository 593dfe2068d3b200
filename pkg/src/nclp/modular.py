"""Modular theory for faithful states on finite-dimensional algebras.

With ``phi = tau(d .)`` everything is explicit in the eigenbasis of ``d``:
``sigma_t(x) = d^{it} x d^{-it}``, the cosine family is the even part of
``sigma``, and analytic continuations are plain matrix powers.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad_vec

from .algebra import DEFAULT_TOL, Algebra, Element, SubalgebraBasis, imag_power, power
from .errors import NotAntiauto, NotFaithful, SingularSystem
from .jordan import ANTI, JordanMono
from .lp import StateDensity
from .superop import Superoperator

QUAD_CUTOFF = 20.0


def _density(phi) -> tuple[Algebra, Element]:
    if isinstance(phi, StateDensity):
        return phi.algebra, phi.d
    if isinstance(phi, Element):
        return phi.algebra, phi
    raise TypeError("expected StateDensity or Element")


class ModularContext:
    """A faithful positive functional with its cached eigen-decomposition."""

    def __init__(self, phi, tol: float = DEFAULT_TOL):
        algebra, d = _density(phi)
        self.algebra = algebra
        self.d = d
        self.tol = tol
        self.eig = []
        scale = d.norm()
        for b in d.blocks:
            w, v = np.linalg.eigh((b + b.conj().T) * 0.5)
            if w.min() <= tol * scale:
                raise NotFaithful(f"density has eigenvalue {w.min():.3e}; compress to its support first")
            self.eig.append((w, v))

    @property
    def phi(self) -> StateDensity:
        return StateDensity(self.algebra, self.d)

    def _apply_entrywise(self, x: Element, factor) -> Element:
        """Multiply eigenbasis entry ``(j, k)`` of ``x`` by ``factor(w_j, w_k)``."""
        blocks = []
        for (w, v), b in zip(self.eig, x.blocks):
            y = v.conj().T @ b @ v
            y = y * factor(w[:, None], w[None, :])
            blocks.append(v @ y @ v.conj().T)
        return Element(self.algebra, blocks)

    def power(self, alpha: complex) -> Element:
        return Element(self.algebra, [(v * w.astype(complex) ** alpha) @ v.conj().T for w, v in self.eig])

    def state(self, x: Element) -> complex:
        return self.algebra.trace(self.d @ x)


@dataclass
class SupportCorner:
    """``s(phi) M s(phi)`` as an algebra of its own, with the faithful restriction of ``phi``.

    ``isometries[i]`` has the support eigenvectors of block ``i`` as columns;
    blocks where ``phi`` vanishes are dropped.
    """

    parent: Algebra
    algebra: Algebra
    blocks: list
    isometries: list
    ctx: ModularContext

    def compress(self, y: Element) -> Element:
        return Element(self.algebra, [v.conj().T @ y.blocks[i] @ v for i, v in zip(self.blocks, self.isometries)])

    def expand(self, x: Element) -> Element:
        out = [np.zeros((n, n), complex) for n in self.parent.dims]
        for b, i, v in zip(x.blocks, self.blocks, self.isometries):
            out[i] = v @ b @ v.conj().T
        return Element(self.parent, out)


def support_corner(phi, tol: float = DEFAULT_TOL) -> SupportCorner:
    """Compress a possibly non-faithful ``phi`` to its support."""
    parent, d = _density(phi)
    scale = d.norm()
    blocks, isos, dims, weights = [], [], [], []
    for i, b in enumerate(d.blocks):
        w, v = np.linalg.eigh((b + b.conj().T) * 0.5)
        keep = w > tol * scale
        if keep.any():
            blocks.append(i)
            isos.append(v[:, keep])
            dims.append(int(keep.sum()))
            weights.append(parent.weights[i])
    if not blocks:
        raise NotFaithful("functional is zero")
    corner = Algebra(dims, weights)
    dc = Element(corner, [v.conj().T @ d.blocks[i] @ v for i, v in zip(blocks, isos)])
    return SupportCorner(parent, corner, blocks, isos, ModularContext(dc, tol))


def modular_auto(ctx: ModularContext, t: float, x: Element) -> Element:
    """``sigma_t(x) = d^{it} x d^{-it}``."""
    return ctx._apply_entrywise(x, lambda a, b: np.exp(1j * t * (np.log(a) - np.log(b))))


def cosine_family(ctx: ModularContext, t: float, x: Element) -> Element:
    """``rho_t = (sigma_t + sigma_{-t}) / 2``."""
    return ctx._apply_entrywise(x, lambda a, b: np.cos(t * (np.log(a) - np.log(b))))


def phi_factor(a, b):
    return 2.0 * np.sqrt(a * b) / (a + b)


def phi_transform(ctx: ModularContext, x: Element) -> Element:
    """``int sigma_t(x) sech(pi t) dt`` in closed form."""
    return ctx._apply_entrywise(x, phi_factor)


def phi_transform_quadrature(ctx: ModularContext, x: Element, cutoff: float = QUAD_CUTOFF,
                             epsabs: float = 1e-11) -> Element:
    """The same integral by adaptive quadrature on ``|t| <= cutoff``."""
    a = ctx.algebra

    def integrand(t):
        return a.vec(modular_auto(ctx, t, x)) / np.cosh(np.pi * t)

    val, _ = quad_vec(integrand, -cutoff, cutoff, epsabs=epsabs, epsrel=1e-11, limit=400)
    return a.unvec(val)


def jordan_with_density(ctx: ModularContext, y: Element) -> Element:
    """``(y d + d y) / 2``."""
    return (y @ ctx.d + ctx.d @ y) * 0.5


def self_polar_form(ctx: ModularContext, a: Element, b: Element) -> complex:
    """``s(a, b) = tau(d^{1/2} a d^{1/2} b*)``, linear in ``a``.

    This is the trace form of ``<d^{1/4} a d^{1/4}, d^{1/4} b d^{1/4}>`` with
    the inner product linear in its first slot, and equals the integral
    ``int phi(rho_t(a) . b*) sech(pi t) dt``.
    """
    h = ctx.power(0.5)
    return ctx.algebra.trace(h @ a @ h @ b.H)


def self_polar_integral(ctx: ModularContext, a: Element, b: Element, cutoff: float = QUAD_CUTOFF) -> complex:
    """Quadrature of ``int phi(rho_t(a) . b*) sech(pi t) dt``."""
    bs = b.H

    def integrand(t):
        r = cosine_family(ctx, t, a)
        v = ctx.state(r.jordan(bs)) / np.cosh(np.pi * t)
        return np.array([v.real, v.imag])

    val, _ = quad_vec(integrand, -cutoff, cutoff, epsabs=1e-12, epsrel=1e-11, limit=400)
    return complex(val[0], val[1])


def self_polar_gram(ctx: ModularContext, elements) -> np.ndarray:
    """``G[k, l] = s(e_l, e_k)``; hermitian positive semidefinite."""
    h = ctx.power(0.5)
    vecs = np.array([ctx.algebra.vec(h @ e @ h) for e in elements])
    raw = np.array([ctx.algebra.vec(e) for e in elements])
    # s(e_l, e_k) = tau(d^{1/2} e_l d^{1/2} e_k^*) = <e_k, d^{1/2} e_l d^{1/2}>
    return raw.conj() @ vecs.T


def connes_cocycle(phi, psi, t: float, tol: float = DEFAULT_TOL) -> Element:
    """``(Dphi : Dpsi)_t = d_phi^{it} d_psi^{-it}``."""
    cp = phi if isinstance(phi, ModularContext) else ModularContext(phi, tol)
    cs = psi if isinstance(psi, ModularContext) else ModularContext(psi, tol)
    return cp.power(1j * t) @ cs.power(-1j * t)


def analytic_cocycle(phi, psi, alpha: float, tol: float = DEFAULT_TOL) -> Element:
    """``(Dphi : Dpsi)_{-i alpha} = d_phi^{alpha} d_psi^{-alpha}``."""
    cp = phi if isinstance(phi, ModularContext) else ModularContext(phi, tol)
    cs = psi if isinstance(psi, ModularContext) else ModularContext(psi, tol)
    return cp.power(alpha) @ cs.power(-alpha)


def cocycle_identity_residual(phi, psi, s: float, t: float) -> float:
    """``||u_{s+t} - u_s sigma^psi_s(u_t)||``."""
    cs = ModularContext(psi)
    cp = ModularContext(phi)
    lhs = connes_cocycle(cp, cs, s + t)
    rhs = connes_cocycle(cp, cs, s) @ modular_auto(cs, s, connes_cocycle(cp, cs, t))
    return (lhs - rhs).norm()


def chain_rule_residual(phi, psi, omega, t: float) -> float:
    """``||(Dphi:Dpsi)_t (Dpsi:Domega)_t - (Dphi:Domega)_t||``."""
    cp, cs, co = ModularContext(phi), ModularContext(psi), ModularContext(omega)
    lhs = connes_cocycle(cp, cs, t) @ connes_cocycle(cs, co, t)
    return (lhs - connes_cocycle(cp, co, t)).norm()


def _check_antiauto(alpha: JordanMono, tol: float = DEFAULT_TOL):
    if alpha.source != alpha.target:
        raise NotAntiauto("an antiautomorphism maps an algebra onto itself")
    if any(s.mode != ANTI and alpha.source.dims[s.src] > 1 for s in alpha.slots):
        raise NotAntiauto("all slots on non-abelian blocks must be ANTI")
    if (alpha.unit() - alpha.target.identity()).norm() > 1e3 * tol:
        raise NotAntiauto("map is not unital, hence not surjective")
    if len(alpha.slots) != alpha.source.nblocks:
        raise NotAntiauto("each block must be used exactly once")


def pullback_density(K: Superoperator, d: Element) -> Element:
    """Density of ``phi ∘ K`` on ``K.domain`` for ``phi = tau(d .)`` on ``K.codomain``."""
    return K.predual()(d)


def check_anticocycle(alpha: JordanMono, phi, psi, t: float, tol: float = DEFAULT_TOL) -> dict:
    """Residuals of the cocycle and modular-group transport under an antiautomorphism.

    ``cocycle``: ``(D(psi∘a^-1) : D(phi∘a^-1))_t`` vs ``a((Dphi:Dpsi)_{-t})``;
    ``modaut``: ``sigma_t^{phi∘a^-1}`` vs ``a ∘ sigma_{-t}^phi ∘ a^-1`` on a basis.
    """
    _check_antiauto(alpha, tol)
    A = alpha.source
    inv = Superoperator.from_function(alpha.inverse, A, A)
    _, dphi = _density(phi)
    _, dpsi = _density(psi)
    phi_a = ModularContext(pullback_density(inv, dphi), tol)
    psi_a = ModularContext(pullback_density(inv, dpsi), tol)
    lhs = connes_cocycle(psi_a, phi_a, t)
    rhs = alpha(connes_cocycle(ModularContext(dphi, tol), ModularContext(dpsi, tol), -t))
    cocycle = (lhs - rhs).norm()
    cphi = ModularContext(dphi, tol)
    modaut = 0.0
    for y in A.basis:
        l = modular_auto(phi_a, t, y)
        r = alpha(modular_auto(cphi, -t, alpha.inverse(y)))
        modaut = max(modaut, (l - r).norm())
    return {"cocycle": cocycle, "modaut": modaut}


def check_centralizer(phi, A: SubalgebraBasis, times=(0.3, 1.0, np.pi), tol: float = DEFAULT_TOL) -> float:
    """``max ||sigma_t(a) - a||`` over the basis of ``A``; ``phi`` may be non-faithful."""
    _, d = _density(phi)
    r = 0.0
    for t in times:
        u = imag_power(d, t, tol)
        for a in A.basis:
            r = max(r, (u @ a @ u.H - a).norm())
    return r


def cocycle_abs_relation(J: JordanMono, P: Superoperator, phi, psi, tol: float = DEFAULT_TOL) -> float:
    """``|| |z| - J(|y|) ||`` with ``y = d_phi^{1/2} d_psi^{-1/2}`` and ``z`` its barred analogue.

    Bars are pullbacks along ``J^{-1} ∘ P``; ``P`` must be faithful (``P(1) = 1``).
    """
    from .algebra import absolute

    _, dphi = _density(phi)
    _, dpsi = _density(psi)
    y = analytic_cocycle(dphi, dpsi, 0.5, tol)
    K = Superoperator.from_function(J.inverse, J.target, J.source) @ P
    bar_phi = pullback_density(K, dphi)
    bar_psi = pullback_density(K, dpsi)
    z = analytic_cocycle(bar_phi, bar_psi, 0.5, tol)
    return (absolute(z, tol) - J(absolute(y, tol))).norm()


# -- Haagerup-Størmer conditions -----------------------------------------------------


@dataclass
class HSReport:
    condition2: float
    condition3: float
    condition1: float | None = None
    projection: Superoperator | None = None
    positivity_defect: float | None = None
    bimodule_defect: float | None = None
    nullity: int = 0
    extra: dict = field(default_factory=dict)

    def holds(self, tol: float = 1e-8) -> bool:
        return self.condition2 <= tol and self.condition3 <= tol

    @property
    def projection_exists(self) -> bool:
        return self.projection is not None


def kms_projection(J: JordanMono, psi, tol: float = DEFAULT_TOL) -> Superoperator:
    """Solve ``s_psi(y, J(x)) = s_psi(P(y), J(x))`` for ``P`` with range ``J(M_1)``.

    ``P`` is the orthogonal projection onto ``J(M_1)`` for the positive form
    ``s_psi``; a singular Gram matrix raises :class:`SingularSystem`.
    """
    ctx = psi if isinstance(psi, ModularContext) else ModularContext(psi, tol)
    M2 = J.target
    imgs = [J(b) for b in J.source.basis]
    G = self_polar_gram(ctx, imgs)
    sv = np.linalg.svd(G, compute_uv=False)
    nullity = int(np.sum(sv <= tol * sv.max()))
    if nullity:
        raise SingularSystem("self-polar Gram matrix on J(M_1) is singular", nullity=nullity)
    h = ctx.power(0.5)
    # rhs[k, m] = s(basis_m, J e_k) = <J e_k, h basis_m h>
    Jm = np.array([M2.vec(e) for e in imgs])
    H = M2.map_matrix(lambda y: h @ y @ h)
    rhs = Jm.conj() @ H
    C = np.linalg.solve(G, rhs)
    return Superoperator(M2, M2, Jm.T @ C)


def check_hs_conditions(J: JordanMono, psi, times=(0.0, 0.37, 1.0, 2.3), tol: float = DEFAULT_TOL,
                        rng: np.random.Generator | None = None, samples: int = 200) -> HSReport:
    """Haagerup-Størmer conditions for ``J`` and a faithful state ``psi`` on the target.

    ``theta_1 = psi ∘ J`` is the pulled-back state on the source, so the form
    and cosine family of ``psi | J(M_1)`` are those of ``theta_1`` transported
    by ``J``.  The candidate projection comes from the self-polar equation;
    whenever it is not a positive Jordan-bimodule projection preserving
    ``psi``, no admissible projection exists, since any such one would solve
    the same nonsingular system.
    """
    from .projections import stormer_identity2_residual
    from .superop import positivity_defect

    ctx2 = psi if isinstance(psi, ModularContext) else ModularContext(psi, tol)
    d1 = pullback_density(J.superoperator, ctx2.d)
    ctx1 = ModularContext(d1, tol)
    src = J.source.basis
    c2 = 0.0
    scale = 0.0
    for a in src:
        for b in src:
            lhs = self_polar_form(ctx1, a, b)
            rhs = self_polar_form(ctx2, J(a), J(b))
            c2 = max(c2, abs(lhs - rhs))
            scale = max(scale, abs(rhs))
    c3 = 0.0
    for t in times:
        for a in src:
            c3 = max(c3, (cosine_family(ctx2, t, J(a)) - J(cosine_family(ctx1, t, a))).norm())
    P = kms_projection(J, ctx2, tol)
    cond1 = 0.0
    for y in J.target.basis:
        cond1 = max(cond1, abs(ctx2.state(P(y)) - ctx2.state(y)))
    rng = np.random.default_rng(0) if rng is None else rng
    pos = positivity_defect(P, rng, samples)
    bim = stormer_identity2_residual(P, J, rng, samples=20)
    report = HSReport(c2, c3, cond1, None, pos, bim, 0)
    report.extra["candidate"] = P
    if pos <= 1e-8 and bim <= 1e-8 and cond1 <= 1e-8:
        report.projection = P
    return report
