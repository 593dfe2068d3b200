"""Conditional expectations and positive projections onto Jordan images.

Every positive projection ``P`` onto ``J(M_1)`` factors as ``S_lambda ∘ F``
with ``F`` a conditional expectation onto the image bicommutant and
``S_lambda`` the symmetrizer that averages the multiplicative and
antimultiplicative copies with central weights ``lambda`` and ``1 - lambda``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .algebra import (
    DEFAULT_TOL,
    Algebra,
    Element,
    SubalgebraBasis,
    commutant,
    imag_power,
    orthonormal_span,
)
from .errors import (
    NotFaithful,
    NotIncreasing,
    NotInvariant,
    NotSubalgebra,
    OutsideBicommutant,
    ReconstructionMismatch,
    SingularLambda,
)
from .jordan import ANTI, MULT, JordanMono, image_bicommutant
from .lp import StateDensity, schatten_norm
from .superop import Superoperator, positivity_defect, sampled_norm

LAMBDA_MARGIN = 1e-8


# -- conditional expectations -----------------------------------------------------


@dataclass
class ConditionalExpectation:
    parent: Algebra
    range: SubalgebraBasis
    map: Superoperator
    preserved_state: StateDensity | None = None

    def __call__(self, y: Element) -> Element:
        return self.map(y)

    def check(self, rng: np.random.Generator, samples: int = 100) -> dict:
        """Residuals of idempotence, unit law, bimodule law, positivity, state preservation."""
        M = self.map.matrix
        out = {
            "idempotence": float(np.linalg.norm(M @ M - M, 2)),
            "unit": (self(self.parent.identity()) - self.range.unit).norm(),
            "range": max(self.range.residual(self(b)) for b in self.parent.basis),
            "fixes_range": max((self(b) - b).norm() for b in self.range.basis),
        }
        bim = 0.0
        for _ in range(10):
            n1 = self.range.project(self.parent.random(rng))
            n2 = self.range.project(self.parent.random(rng))
            m = self.parent.random(rng)
            bim = max(bim, (self(n1 @ m @ n2) - n1 @ self(m) @ n2).norm())
        out["bimodule"] = bim
        out["positivity"] = positivity_defect(self.map, rng, samples)
        if self.preserved_state is not None:
            phi = self.preserved_state
            out["state"] = max(abs(phi(self(b)) - phi(b)) for b in self.parent.basis)
        return out


def trace_ce(parent: Algebra, range_: SubalgebraBasis, tol: float = DEFAULT_TOL) -> ConditionalExpectation:
    """Trace-preserving expectation: the ``tau``-orthogonal projection onto ``range_``."""
    r = range_.closure_residual()
    if r > 1e3 * tol:
        raise NotSubalgebra(f"range is not a *-subalgebra (closure residual {r:.3e})")
    E = Superoperator(parent, parent, range_.projector)
    return ConditionalExpectation(parent, range_, E, None)


def modular_invariance_residual(d: Element, range_: SubalgebraBasis, times=(0.3, 1.0, np.pi),
                                tol: float = DEFAULT_TOL) -> float:
    """How far ``d^{it} . d^{-it}`` moves ``range_`` off itself."""
    r = 0.0
    for t in times:
        u = imag_power(d, t, tol)
        for b in range_.basis:
            r = max(r, range_.residual(u @ b @ u.H))
    return r


def state_ce(parent: Algebra, range_: SubalgebraBasis, phi, tol: float = DEFAULT_TOL) -> ConditionalExpectation:
    """The ``phi``-preserving expectation, from ``phi(n* E(y)) = phi(n* y)`` for ``n`` in the range.

    ``phi`` must be faithful on the corner of the range unit and its modular
    group must leave the range invariant.
    """
    d = phi.d if isinstance(phi, StateDensity) else phi
    r = modular_invariance_residual(d, range_, tol=tol)
    if r > 1e-7:
        raise NotInvariant(f"range is not invariant under the modular group (residual {r:.3e})", residual=r)
    B = range_.basis
    G = np.array([[parent.trace(d @ bj.H @ bk) for bk in B] for bj in B])
    sv = np.linalg.svd(G, compute_uv=False)
    if sv.min() <= tol * sv.max():
        raise NotFaithful("state is not faithful on the range")
    # phi(b_j* y) = tau(d b_j* y) = <b_j d, y>
    R = np.array([parent.vec(b @ d).conj() for b in B])
    E = Superoperator(parent, parent, range_.coords @ np.linalg.solve(G, R))
    state = phi if isinstance(phi, StateDensity) else StateDensity(parent, d)
    return ConditionalExpectation(parent, range_, E, state)


def relative_commutant(J: JordanMono, tol: float = DEFAULT_TOL) -> SubalgebraBasis:
    """``J(M_1)' ∩ M_2``."""
    return commutant([J(b) for b in J.source.basis], None, tol)


# -- symmetrizer ---------------------------------------------------------------------


@dataclass
class Symmetrizer:
    """``S_lambda``: ``pi(x) ⊕ pi'(y) -> J(lambda x + (1 - lambda) y)``.

    ``lam`` holds one scalar per source block; blocks carried only
    multiplicatively have ``lambda = 1``, only antimultiplicatively ``0``.
    """

    jordan: JordanMono
    lam: np.ndarray

    def __post_init__(self):
        J = self.jordan
        lam = np.asarray(self.lam, dtype=float).copy()
        if lam.shape != (J.source.nblocks,):
            raise ValueError("one lambda per source block required")
        for i in range(J.source.nblocks):
            modes = J.modes(i)
            if modes == {MULT}:
                lam[i] = 1.0
            elif modes == {ANTI}:
                lam[i] = 0.0
        if np.any(lam < -1e-12) or np.any(lam > 1 + 1e-12):
            raise ValueError(f"lambda must lie in [0, 1], got {lam}")
        self.lam = lam

    @classmethod
    def from_element(cls, J: JordanMono, lam: Element) -> "Symmetrizer":
        vals = [np.trace(b).real / b.shape[0] for b in lam.blocks]
        return cls(J, np.array(vals))

    def element(self) -> Element:
        return self.jordan.source.central(self.lam)

    def margins(self) -> dict:
        """Smallest ``lambda`` and ``1 - lambda`` over blocks carrying both modes."""
        both = [i for i in range(self.jordan.source.nblocks) if self.jordan.modes(i) == {MULT, ANTI}]
        if not both:
            return {"lambda": np.inf, "one_minus_lambda": np.inf}
        return {
            "lambda": float(min(self.lam[i] for i in both)),
            "one_minus_lambda": float(min(1 - self.lam[i] for i in both)),
        }


def symmetrize(S: Symmetrizer, y: Element, tol: float = DEFAULT_TOL) -> Element:
    J = S.jordan
    a, b, res = J.split_parts(y, tol)
    if res > max(1e-8, tol) * max(1.0, y.norm()):
        raise OutsideBicommutant(f"element is {res:.3e} away from the image bicommutant")
    lam = J.source.central(S.lam)
    one = J.source.identity()
    return J(lam @ a + (one - lam) @ b)


# -- positive projections -------------------------------------------------------------


@dataclass
class PositiveProjection:
    parent: Algebra
    jordan: JordanMono
    map: Superoperator

    def __call__(self, y: Element) -> Element:
        return self.map(y)

    def check(self, rng: np.random.Generator, samples: int = 100) -> dict:
        J = self.jordan
        M = self.map.matrix
        return {
            "idempotence": float(np.linalg.norm(M @ M - M, 2)),
            "fixes_image": max((self(J(b)) - J(b)).norm() for b in J.source.basis),
            "unit": (self(self.parent.identity()) - J.unit()).norm(),
            "positivity": positivity_defect(self.map, rng, samples),
        }


def build_positive_projection(J: JordanMono, F: ConditionalExpectation, lam) -> PositiveProjection:
    """``P = S_lambda ∘ F``."""
    S = lam if isinstance(lam, Symmetrizer) else Symmetrizer(J, np.atleast_1d(lam) * np.ones(J.source.nblocks))
    M2 = J.target
    # S_lambda is linear on the bicommutant; its matrix there composed with F.
    P = Superoperator.from_function(lambda y: symmetrize(S, F(y)), M2, M2)
    return PositiveProjection(M2, J, P)


def symmetrizer_map(S: Symmetrizer) -> Superoperator:
    """``S_lambda ∘ (projection onto the bicommutant)`` as a superoperator."""
    J = S.jordan
    A = image_bicommutant(J)
    return Superoperator.from_function(lambda y: symmetrize(S, A.project(y)), J.target, J.target)


@dataclass
class Factorization:
    F: ConditionalExpectation
    lam: np.ndarray
    residual: float
    off_corner_residual: float
    centrality_residual: float
    margins: dict = field(default_factory=dict)


def factor_projection(P: PositiveProjection, tol: float = DEFAULT_TOL) -> Factorization:
    """Recover ``(F, lambda)`` with ``P = S_lambda ∘ F``."""
    J = P.jordan
    src, M2 = J.source, J.target
    lam = np.ones(src.nblocks)
    central = 0.0
    for i in range(src.nblocks):
        zi = J.part_projection(i, MULT)
        if J.has_mode(i, MULT):
            v = J.inverse(P(zi)).blocks[i]
            n = v.shape[0]
            lam[i] = float(np.trace(v).real / n)
            central = max(central, float(np.linalg.norm(v - lam[i] * np.eye(n), 2)))
        else:
            lam[i] = 0.0
    both = [i for i in range(src.nblocks) if J.modes(i) == {MULT, ANTI}]
    margins = {"lambda": min((lam[i] for i in both), default=np.inf),
               "one_minus_lambda": min((1 - lam[i] for i in both), default=np.inf)}
    if margins["lambda"] < LAMBDA_MARGIN or margins["one_minus_lambda"] < LAMBDA_MARGIN:
        raise SingularLambda(f"lambda or 1 - lambda is singular (margins {margins})")
    for i in range(src.nblocks):
        modes = J.modes(i)
        if modes == {MULT}:
            central = max(central, abs(lam[i] - 1.0))
        elif modes == {ANTI}:
            lam[i] = 0.0

    parts = []
    for i in range(src.nblocks):
        for mode in (MULT, ANTI):
            if J.has_mode(i, mode):
                parts.append((i, mode, J.part_projection(i, mode)))

    zero = src.zeros()

    def F_fn(y: Element) -> Element:
        out = M2.zeros()
        for i, mode, z in parts:
            x = J.inverse(P(z @ y @ z))
            scale = lam[i] if mode == MULT else 1.0 - lam[i]
            blk = [np.zeros_like(b) for b in x.blocks]
            blk[i] = x.blocks[i] / scale
            xi = Element(src, blk)
            out = out + (J.embed_parts(xi, zero) if mode == MULT else J.embed_parts(zero, xi))
        return out

    Fmap = Superoperator.from_function(F_fn, M2, M2)
    off = 0.0
    for a, (_, _, z) in enumerate(parts):
        for b, (_, _, w) in enumerate(parts):
            if a != b:
                for y in M2.basis:
                    off = max(off, P(z @ y @ w).norm())
    F = ConditionalExpectation(M2, image_bicommutant(J), Fmap)
    rebuilt = build_positive_projection(J, F, Symmetrizer(J, lam))
    res = rebuilt.map.distance(P.map)
    if res > max(tol, 1e-9) * 10:
        raise ReconstructionMismatch(f"S_lambda ∘ F misses P by {res:.3e}", residual=res)
    return Factorization(F, lam, res, off, central, margins)


# -- Størmer identities -----------------------------------------------------------------


def stormer_identity2_residual(P: Superoperator, J: JordanMono, rng: np.random.Generator, samples: int = 20) -> float:
    """``max ||P(J(x) . y) - J(x) . P(y)||`` over basis ``x`` and random ``y``, relative to ``||y||``."""
    r = 0.0
    ys = [J.target.random(rng) for _ in range(samples)]
    for x in J.source.basis:
        jx = J(x)
        for y in ys:
            r = max(r, (P(jx.jordan(y)) - jx.jordan(P(y))).norm() / y.norm())
    return r


@dataclass
class StormerReport:
    norm_one: float
    jordan_bimodule: float
    triple_product: float
    center: float

    def max(self) -> float:
        return max(self.norm_one, self.jordan_bimodule, self.triple_product, self.center)


def check_stormer(P, J: JordanMono | None = None, rng: np.random.Generator | None = None,
                  samples: int = 20, tol: float = DEFAULT_TOL) -> StormerReport:
    if isinstance(P, PositiveProjection):
        J = P.jordan
        K = P.map
    else:
        K = P
    rng = np.random.default_rng(0) if rng is None else rng
    nrm = sampled_norm(K, rng, samples=50)
    r1 = abs(nrm - 1.0)
    r2 = stormer_identity2_residual(K, J, rng, samples)
    r3 = 0.0
    ys = [J.target.random(rng) for _ in range(samples)]
    xs = list(J.source.basis) + [J.source.random(rng) for _ in range(5)]
    for x in xs:
        jx = J(x)
        for y in ys:
            r3 = max(r3, (K(jx @ y @ jx) - jx @ K(y) @ jx).norm() / (y.norm() * x.norm() ** 2))
    rel = relative_commutant(J, tol)
    zJ = orthonormal_span([J.target.vec(J(J.source.block_unit(i))) for i in range(J.source.nblocks)],
                          J.target.dim, tol, check_band=False)
    r4 = 0.0
    for z in rel.basis:
        v = J.target.vec(K(z))
        r4 = max(r4, float(np.linalg.norm(v - zJ @ (zJ.conj().T @ v))))
    return StormerReport(r1, r2, r3, r4)


# -- paving -----------------------------------------------------------------------------


@dataclass
class PavingReport:
    state_residuals: list
    element_residuals: list
    monotone_state: bool
    monotone_element: bool
    final_state: float
    final_element: float


def trace_norm(x: Element) -> float:
    return schatten_norm(x, 1)


def paving_demo(parent: Algebra, chain: Sequence[Element], theta: Element, x: Element,
                tol: float = DEFAULT_TOL, slack: float = 1e-12) -> PavingReport:
    """``||theta ∘ E_a - theta||_1`` and ``||E_a(x) - x||`` along ``E_a = q_a . q_a``.

    ``theta`` is a density; ``theta ∘ E_a`` has density ``q_a theta q_a``.
    """
    chain = list(chain)
    for a, q in enumerate(chain):
        if (q @ q - q).norm() > 1e3 * tol or (q - q.H).norm() > 1e3 * tol:
            raise NotIncreasing(f"chain entry {a} is not a projection")
    for a in range(len(chain) - 1):
        q, r = chain[a], chain[a + 1]
        if (r @ q - q).norm() > 1e3 * tol:
            raise NotIncreasing(f"chain entry {a} is not below entry {a + 1}")
    if (chain[-1] - parent.identity()).norm() > 1e3 * tol:
        raise NotIncreasing("chain does not end at the identity")
    sr = [trace_norm(q @ theta @ q - theta) for q in chain]
    er = [(q @ x @ q - x).norm() for q in chain]
    mono_s = all(sr[a + 1] <= sr[a] + slack for a in range(len(sr) - 1))
    mono_e = all(er[a + 1] <= er[a] + slack for a in range(len(er) - 1))
    return PavingReport(sr, er, mono_s, mono_e, sr[-1], er[-1])


def corner_chain(parent: Algebra, sizes: Sequence[int], unitary: Element | None = None) -> list[Element]:
    """Projections onto leading ``k x k`` corners of a one-block algebra, optionally rotated."""
    if parent.nblocks != 1:
        raise ValueError("corner chains are defined for a single block")
    n = parent.dims[0]
    out = []
    for k in sizes:
        m = np.zeros((n, n), complex)
        m[:k, :k] = np.eye(k)
        q = Element(parent, [m])
        if unitary is not None:
            q = unitary @ q @ unitary.H
        out.append(q)
    return out
