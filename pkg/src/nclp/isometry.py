"""Construction and decomposition of L^p isometries.

Two descriptions of the same isometry ``T: L^p(M_1) -> L^p(M_2)``:

* Yeadon form ``T(x) = w B J(x)`` with ``B`` positive, commuting with
  ``J(M_1)`` and satisfying ``tau_1(x) = tau_2(B^p J(x))``;
* typical form ``T(h) = w (density of phi ∘ J^{-1} ∘ P)^{1/p}`` on positive
  ``h = phi^{1/p}``, with ``P`` a positive projection onto ``J(M_1)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import (
    DEFAULT_TOL,
    Algebra,
    Element,
    commutant,
    polar,
    power,
    support,
)
from .errors import (
    DecompositionFailure,
    DimensionMismatch,
    InvalidTriple,
    NotAntiauto,
    NotIsometry,
    NclpError,
)
from .jordan import ANTI, MULT, JordanMono, image_bicommutant, match_jordan, verify_jordan_mono
from .lp import LpElement, positive_decompose
from .projections import (
    ConditionalExpectation,
    PositiveProjection,
    Symmetrizer,
    build_positive_projection,
    state_ce,
    trace_ce,
)
from .superop import Superoperator


@dataclass(frozen=True, eq=False)
class LinearMap(Superoperator):
    """A linear map between L^p spaces; ``p`` is shared by domain and codomain."""

    p: float = 1.0

    @classmethod
    def wrap(cls, K: Superoperator, p: float) -> "LinearMap":
        return cls(K.domain, K.codomain, K.matrix, p)


@dataclass(frozen=True)
class YeadonTriple:
    w: Element
    B: Element
    J: JordanMono
    p: float

    def residuals(self) -> dict:
        J, w, B = self.J, self.w, self.B
        one = J.unit()
        out = {
            "w_star_w": (w.H @ w - one).norm(),
            "support_B": (support(B) - one).norm(),
            "commutation": max((B @ J(x) - J(x) @ B).norm() for x in J.source.basis),
        }
        Bp = power(B, self.p)
        out["trace"] = max(
            abs(J.source.trace(x) - J.target.trace(Bp @ J(x))) for x in J.source.basis
        )
        return out

    def validate(self, tol: float = 1e-8):
        for name, r in self.residuals().items():
            if r > tol:
                raise InvalidTriple(f"Yeadon invariant '{name}' fails (residual {r:.3e})")


@dataclass(frozen=True)
class TypicalTriple:
    w: Element
    J: JordanMono
    P: PositiveProjection
    p: float

    def residuals(self) -> dict:
        one = self.J.unit()
        return {
            "w_star_w": (self.w.H @ self.w - one).norm(),
            "P_unit": (self.P(self.J.target.identity()) - one).norm(),
        }

    def validate(self, tol: float = 1e-8):
        for name, r in self.residuals().items():
            if r > tol:
                raise InvalidTriple(f"typical invariant '{name}' fails (residual {r:.3e})")


def jordan_inverse_map(J: JordanMono) -> Superoperator:
    return Superoperator.from_function(J.inverse, J.target, J.source)


def reduction_map(J: JordanMono, P) -> Superoperator:
    """``K = J^{-1} ∘ P : M_2 -> M_1``."""
    Pm = P.map if isinstance(P, PositiveProjection) else P
    return jordan_inverse_map(J) @ Pm


# -- construction ---------------------------------------------------------------------


def construct_yeadon(data: YeadonTriple, validate: bool = True, tol: float = 1e-8) -> LinearMap:
    """``T(x) = w B J(x)``."""
    if validate:
        data.validate(tol)
    wB = data.w @ data.B
    K = Superoperator.from_function(lambda x: wB @ data.J(x), data.J.source, data.J.target)
    return LinearMap.wrap(K, data.p)


def typical_on_cone(data: TypicalTriple, h: Element, K_star: Superoperator | None = None) -> Element:
    """``w (K_*(h^p))^{1/p}`` for positive ``h``."""
    p = data.p
    if K_star is None:
        K_star = reduction_map(data.J, data.P).predual()
    return data.w @ power(K_star(power(h, p)), 1.0 / p)


def construct_typical(data: TypicalTriple, validate: bool = True, tol: float = 1e-8,
                      cone_check: int = 0, rng: np.random.Generator | None = None) -> LinearMap:
    """Typical isometry from ``(w, J, P)``.

    The map is fixed on the positive cone and extended linearly through the
    four-part positive decomposition of each basis element.  With
    ``cone_check > 0`` the linear map is compared with the cone formula on
    that many random positives; a mismatch means the triple does not come
    from a linear isometry.
    """
    if validate:
        data.validate(tol)
    M1, M2 = data.J.source, data.J.target
    K_star = reduction_map(data.J, data.P).predual()
    cols = []
    for b in M1.basis:
        h1, h2, h3, h4 = (typical_on_cone(data, h.element, K_star) for h in positive_decompose(LpElement(b, data.p)))
        cols.append(M2.vec(h1 - h2 + (h3 - h4) * 1j))
    T = LinearMap(M1, M2, np.array(cols).T, data.p)
    if cone_check:
        rng = np.random.default_rng(0) if rng is None else rng
        worst = 0.0
        for _ in range(cone_check):
            h = M1.random_positive_spectrum(rng)
            if h.norm() == 0:
                continue
            worst = max(worst, (T(h) - typical_on_cone(data, h, K_star)).norm() / h.norm())
        if worst > 1e-7:
            raise InvalidTriple(f"cone formula is not linear (deviation {worst:.3e})")
    return T


# -- verification -------------------------------------------------------------------------


def batch_norms(algebra: Algebra, V: np.ndarray, p: float) -> np.ndarray:
    """Schatten p-norms of the elements whose coordinates are the rows of ``V``."""
    V = V / algebra._sqrt_weights
    total = np.zeros(V.shape[0])
    for o, n, t in zip(algebra.offsets, algebra.dims, algebra.weights):
        stack = V[:, o:o + n * n].reshape(-1, n, n)
        s = np.linalg.svd(stack, compute_uv=False)
        total += t * np.sum(s ** p, axis=-1)
    return total ** (1.0 / p)


def structured_samples(algebra: Algebra) -> list[Element]:
    """Matrix units and all sums and differences of two matrix units."""
    units = [algebra.matrix_unit(*u) for u in algebra.unit_basis]
    out = list(units)
    for a in range(len(units)):
        for b in range(a + 1, len(units)):
            out.append(units[a] + units[b])
            out.append(units[a] - units[b])
            out.append(units[a] + units[b] * 1j)
    return out


def random_samples(algebra: Algebra, rng: np.random.Generator, trials: int) -> list[Element]:
    """Mix of generic elements, positives, partial isometries and orthogonal sums."""
    out = []
    for k in range(trials):
        kind = k % 4
        if kind == 0:
            out.append(algebra.random(rng))
        elif kind == 1:
            out.append(algebra.random_positive(rng, rank=int(rng.integers(1, 1 + max(algebra.dims)))))
        elif kind == 2:
            u = algebra.random_unitary(rng)
            q = support(algebra.random_positive(rng, rank=1))
            out.append(u @ q)
        else:
            u = algebra.random_unitary(rng)
            blocks = []
            for n in algebra.dims:
                diag = rng.normal(size=n) * (rng.random(n) < 0.6)
                blocks.append(np.diag(diag))
            out.append(u @ Element(algebra, blocks) @ u.H)
    return out


@dataclass
class IsometryReport:
    max_rel_deviation: float
    positivity_of_T_on_cone: bool
    samples: int

    @property
    def passed(self) -> bool:
        return self.max_rel_deviation <= 1e-9


def verify_isometry(T: LinearMap, trials: int = 200, seed: int = 0, p: float | None = None) -> IsometryReport:
    """Relative norm deviation on structured and random samples."""
    p = T.p if p is None else p
    rng = np.random.default_rng(seed)
    A = T.domain
    xs = structured_samples(A) + random_samples(A, rng, trials)
    X = np.array([A.vec(x) for x in xs])
    Y = X @ T.matrix.T
    nx = batch_norms(A, X, p)
    ny = batch_norms(T.codomain, Y, p)
    mask = nx > 0
    dev = float(np.max(np.abs(ny[mask] - nx[mask]) / nx[mask])) if mask.any() else 0.0
    pos_ok = True
    for _ in range(20):
        h = A.random_positive(rng)
        out = T(h)
        herm = (out - out.H).norm()
        lo = min(float(np.linalg.eigvalsh((b + b.conj().T) / 2).min()) for b in out.blocks)
        if herm > 1e-9 * out.norm() or lo < -1e-9 * out.norm():
            pos_ok = False
            break
    return IsometryReport(dev, pos_ok, len(xs))


# -- decomposition ---------------------------------------------------------------------------


def decompose_isometry(T: LinearMap, p: float | None = None, check_trials: int = 100,
                       tol: float = DEFAULT_TOL, seed: int = 0) -> YeadonTriple:
    """Recover ``(w, B, J)`` from ``T`` via the polar decomposition of ``T(1)``.

    At finite dimension every L^p isometry (``p != 2``) has this form, so a
    failure here reflects numerical trouble rather than a counterexample.
    """
    p = T.p if p is None else p
    rep = verify_isometry(T, check_trials, seed, p)
    if rep.max_rel_deviation > 1e-7:
        raise NotIsometry(f"map deviates from isometry by {rep.max_rel_deviation:.3e}", rep.max_rel_deviation)
    M1, M2 = T.domain, T.codomain
    w, B = polar(T(M1.identity()), tol)
    Binv = power(B, -1.0, tol)
    raw = Superoperator.from_function(lambda x: Binv @ w.H @ T(x), M1, M2)
    jr = verify_jordan_mono(raw, tol=tol)
    residuals = {"jordan_product": jr.jordan_product_residual, "star": jr.star_residual}
    if not (jr.jordan_product_residual <= 1e-7 and jr.star_residual <= 1e-7 and jr.injectivity_ok):
        raise DecompositionFailure(
            "extracted map is not a Jordan *-monomorphism; at finite dimension with p != 2 this "
            "indicates numerical trouble, not a counterexample",
            residuals,
        )
    try:
        J = match_jordan(raw, tol)
    except NclpError as exc:
        raise DecompositionFailure(f"could not bring J to slot form: {exc}", residuals) from exc
    out = YeadonTriple(w, B, J, p)
    res = out.residuals()
    if max(res.values()) > 1e-7:
        raise DecompositionFailure("recovered triple violates Yeadon invariants", res)
    return out


def support_map_l1(Tplus: Superoperator, tol: float = DEFAULT_TOL) -> Superoperator:
    """``J`` from supports: ``J(q) = s(T(q))`` on projections, extended through matrix units."""
    M1, M2 = Tplus.domain, Tplus.codomain

    def s(q: Element) -> Element:
        out = Tplus(q)
        return support((out + out.H) * 0.5, tol)

    cols = {}
    for i, n in enumerate(M1.dims):
        E = lambda j, k: M1.matrix_unit(i, j, k)
        for j in range(n):
            cols[(i, j, j)] = s(E(j, j))
        for j in range(n):
            for k in range(n):
                if j == k:
                    continue
                base = E(j, j) + E(k, k)
                qp = (base + E(j, k) + E(k, j)) * 0.5
                qm = (base - E(j, k) - E(k, j)) * 0.5
                qa = (base - E(j, k) * 1j + E(k, j) * 1j) * 0.5
                qb = (base + E(j, k) * 1j - E(k, j) * 1j) * 0.5
                cols[(i, j, k)] = (s(qp) - s(qm) + (s(qa) - s(qb)) * 1j) * 0.5
    # columns in coordinate order: basis element (i,j,k) is E_jk / sqrt(t_i)
    mat = np.array([M2.vec(cols[u]) / np.sqrt(M1.weights[u[0]]) for u in M1.unit_basis]).T
    return Superoperator(M1, M2, mat)


def decompose_l1(T: LinearMap, tol: float = DEFAULT_TOL, check_trials: int = 100, seed: int = 0) -> TypicalTriple:
    """Typical data of an L^1 isometry through supports and the trace dual."""
    rep = verify_isometry(T, check_trials, seed, 1.0)
    if rep.max_rel_deviation > 1e-7:
        raise NotIsometry(f"map deviates from isometry by {rep.max_rel_deviation:.3e}", rep.max_rel_deviation)
    M1, M2 = T.domain, T.codomain
    w, _ = polar(T(M1.identity()), tol)
    wH = w.H
    Tplus = Superoperator.from_function(lambda x: wH @ T(x), M1, M2)
    Jraw = support_map_l1(Tplus, tol)
    try:
        J = match_jordan(Jraw, tol)
    except NclpError as exc:
        raise DecompositionFailure(f"support map is not a Jordan monomorphism: {exc}") from exc
    dual = Tplus.predual()
    unit_res = (dual(M2.identity()) - M1.identity()).norm()
    if unit_res > 1e-7:
        raise DecompositionFailure("trace dual is not unital", {"dual_unit": unit_res})
    P = PositiveProjection(M2, J, J.superoperator @ dual)
    sP = (P(M2.identity()) - J.unit()).norm()
    if sP > 1e-7:
        raise DecompositionFailure("support of P differs from J(1)", {"support": sP})
    return TypicalTriple(w, J, P, 1.0)


# -- conversions -----------------------------------------------------------------------------


def typical_to_yeadon(t: TypicalTriple, tol: float = DEFAULT_TOL) -> YeadonTriple:
    """``B = (density of tau_1 ∘ J^{-1} ∘ P)^{1/p}``."""
    K = reduction_map(t.J, t.P)
    dens = K.predual()(t.J.source.identity())
    B = power((dens + dens.H) * 0.5, 1.0 / t.p, tol)
    y = YeadonTriple(t.w, B, t.J, t.p)
    comm = y.residuals()["commutation"]
    if comm > 1e-7:
        raise InvalidTriple(f"density does not commute with J(M_1) (residual {comm:.3e})")
    return y


def yeadon_to_typical(y: YeadonTriple, tol: float = DEFAULT_TOL) -> TypicalTriple:
    """``P = S_lambda ∘ F`` with ``F`` preserving ``tau_2(B^p .)``."""
    J = y.J
    d = power(y.B, y.p, tol)
    A = image_bicommutant(J, tol)
    F = state_ce(J.target, A, d, tol)
    lam = np.ones(J.source.nblocks)
    for i in range(J.source.nblocks):
        if J.has_mode(i, MULT):
            z = J.part_projection(i, MULT)
            lam[i] = J.target.trace(d @ z).real / J.source.trace(J.source.block_unit(i)).real
        else:
            lam[i] = 0.0
    lam = np.clip(lam, 0.0, 1.0)
    P = build_positive_projection(J, F, Symmetrizer(J, lam))
    return TypicalTriple(y.w, J, P, y.p)


# -- embeddings ---------------------------------------------------------------------------------


def embed_via_ce(E: ConditionalExpectation, p: float, tol: float = DEFAULT_TOL) -> LinearMap:
    """``phi^{1/p} -> (phi ∘ E)^{1/p}`` from ``L^p`` of the range into ``L^p`` of the parent."""
    from .jordan import subalgebra_inclusion

    J = subalgebra_inclusion(E.range, tol)
    for s in J.slots:
        if s.mode != MULT:
            raise DimensionMismatch("inclusion of a subalgebra must be multiplicative")
    P = PositiveProjection(E.parent, J, E.map)
    return construct_typical(TypicalTriple(J.unit(), J, P, p), validate=False)


def isometry_from_antiiso(alpha: JordanMono, p: float, phi: Element | None = None,
                          tol: float = DEFAULT_TOL) -> LinearMap:
    """``x phi^{1/p} -> (phi ∘ alpha^{-1})^{1/p} alpha(x)`` for a *-antiisomorphism ``alpha``."""
    M1, M2 = alpha.source, alpha.target
    if any(s.mode != ANTI and M1.dims[s.src] > 1 for s in alpha.slots):
        raise NotAntiauto("all slots on non-abelian blocks must be ANTI")
    if (alpha.unit() - M2.identity()).norm() > 1e-8 or M1.dim != M2.dim:
        raise NotAntiauto("map is not onto")
    d = M1.identity() if phi is None else phi
    d2 = jordan_inverse_map(alpha).predual()(d)
    left = power(d2, 1.0 / p, tol)
    right = power(d, -1.0 / p, tol)
    K = Superoperator.from_function(lambda xi: left @ alpha(xi @ right), M1, M2)
    return LinearMap.wrap(K, p)


def symmetric_embedding(J: JordanMono, P, phi: Element, p: float, tol: float = DEFAULT_TOL):
    """``d^{1/2p} x d^{1/2p} -> dbar^{1/2p} J(x) dbar^{1/2p}`` and its companion projection.

    ``dbar`` is the density of ``phi ∘ J^{-1} ∘ P``.  Returns ``(T, Q)`` with
    ``Q: dbar^{1/2p} y dbar^{1/2p} -> d^{1/2p} J^{-1}P(y) d^{1/2p}``.
    """
    M1, M2 = J.source, J.target
    K = reduction_map(J, P)
    dbar = K.predual()(phi)
    a = 1.0 / (2 * p)
    d_pos, d_neg = power(phi, a, tol), power(phi, -a, tol)
    b_pos, b_neg = power(dbar, a, tol), power(dbar, -a, tol)
    T = Superoperator.from_function(lambda xi: b_pos @ J(d_neg @ xi @ d_neg) @ b_pos, M1, M2)
    Q = Superoperator.from_function(lambda eta: d_pos @ K(b_neg @ eta @ b_neg) @ d_pos, M2, M1)
    return LinearMap.wrap(T, p), LinearMap.wrap(Q, p)


def left_multiply(w: Element, T: Superoperator) -> LinearMap:
    K = Superoperator.from_function(lambda x: w @ T(x), T.domain, T.codomain)
    return LinearMap.wrap(K, getattr(T, "p", 1.0))


# -- uniqueness ---------------------------------------------------------------------------------


def typical_distance(a: TypicalTriple, b: TypicalTriple) -> dict:
    return {
        "w": (a.w - b.w).norm(),
        "J": a.J.superoperator.distance(b.J.superoperator),
        "P": a.P.map.distance(b.P.map),
    }


def yeadon_distance(a: YeadonTriple, b: YeadonTriple) -> dict:
    return {
        "w": (a.w - b.w).norm(),
        "B": (a.B - b.B).norm(),
        "J": a.J.superoperator.distance(b.J.superoperator),
    }


def uniqueness_roundtrip(T: LinearMap, p: float | None = None, tol: float = 1e-9) -> bool:
    """Decompose, rebuild, decompose again and compare the two typical triples."""
    p = T.p if p is None else p
    t1 = yeadon_to_typical(decompose_isometry(T, p))
    T2 = construct_typical(t1)
    t2 = yeadon_to_typical(decompose_isometry(T2, p))
    dist = typical_distance(t1, t2)
    return max(dist.values()) <= tol and T.distance(T2) <= tol * 10


# -- random data -------------------------------------------------------------------------------


def random_positive_definite(m: int, rng: np.random.Generator) -> np.ndarray:
    g = (rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m))) / np.sqrt(2)
    return g @ g.conj().T + 0.2 * np.eye(m)


def random_commuting_density(J: JordanMono, rng: np.random.Generator) -> Element:
    """Positive ``D`` in ``J(M_1)'`` supported on ``J(1)`` with ``tau_2(D J(x)) = tau_1(x)``."""
    M1, M2 = J.source, J.target
    groups: dict = {}
    for s in J.slots:
        key = (s.src, s.dst) if M1.dims[s.src] == 1 else (s.src, s.dst, s.mode)
        groups.setdefault(key, []).append(s)
    blocks = [np.zeros((n, n), complex) for n in M2.dims]
    mats = {}
    for key, slots in groups.items():
        mats[key] = random_positive_definite(len(slots), rng)
    for i in range(M1.nblocks):
        mass = sum(M2.weights[key[1]] * np.trace(G).real for key, G in mats.items() if key[0] == i)
        for key in mats:
            if key[0] == i:
                mats[key] = mats[key] * (M1.weights[i] / mass)
    for key, slots in groups.items():
        G = mats[key]
        n = M1.dims[key[0]]
        k = key[1]
        for a, sa in enumerate(slots):
            for b, sb in enumerate(slots):
                for r in range(n):
                    blocks[k][sa.offset + r, sb.offset + r] = G[a, b]
    return J.conj(Element(M2, blocks))


def random_partial_isometry(J: JordanMono, rng: np.random.Generator) -> Element:
    return J.target.random_unitary(rng) @ J.unit()


def random_yeadon(J: JordanMono, p: float, rng: np.random.Generator) -> YeadonTriple:
    D = random_commuting_density(J, rng)
    return YeadonTriple(random_partial_isometry(J, rng), power(D, 1.0 / p), J, p)


def random_invariant_state(J: JordanMono, rng: np.random.Generator) -> Element:
    """Faithful density whose modular group normalises the image bicommutant.

    Built as ``(b + 1 - J(1)) c`` with ``b`` positive in the bicommutant and
    ``c`` positive in its commutant, so the factors commute.
    """
    M2 = J.target
    A = image_bicommutant(J)
    g = A.project(M2.random(rng))
    b = g @ g.H + J.unit() * 0.3
    C = commutant(list(A.basis), None)
    h = C.project(M2.random(rng))
    c = h @ h.H + M2.identity() * 0.3
    d = (b + M2.identity() - J.unit()) @ c
    d = (d + d.H) * 0.5
    return d / M2.trace(d).real


def random_projection_data(J: JordanMono, rng: np.random.Generator, tracial: bool = False):
    """Random ``(F, lambda)`` with ``lambda`` in ``[0.15, 0.85]``."""
    A = image_bicommutant(J)
    if tracial:
        F = trace_ce(J.target, A)
    else:
        F = state_ce(J.target, A, random_invariant_state(J, rng))
    lam = Symmetrizer(J, rng.uniform(0.15, 0.85, size=J.source.nblocks))
    return F, lam


def random_typical(J: JordanMono, p: float, rng: np.random.Generator, tracial: bool = False) -> TypicalTriple:
    F, lam = random_projection_data(J, rng, tracial)
    P = build_positive_projection(J, F, lam)
    return TypicalTriple(random_partial_isometry(J, rng), J, P, p)

