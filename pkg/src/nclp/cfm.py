"""Continuous finite measures on L^p cones and the M2 counterexample.

A c.f.m. is a nonnegative, positively homogeneous, orthogonally additive,
bounded and continuous function on the positive cone of ``L^p(M)``.  In
``M_2`` the only positive element with more than one orthogonal splitting is
a multiple of ``1``, so any continuous ``f`` on the Bloch sphere with
``f(n) + f(-n) = c`` defines one:

    rho(a q + b q_perp) = a f(n) + b f(-n)

with ``n`` the Bloch vector of the rank-one projection ``q``.  Taking
``f = c/2 + u`` with ``u`` odd and nonlinear gives a c.f.m. that is not the
restriction of any linear functional.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.linalg import expm

from .algebra import Algebra, Element, random_unitary
from .errors import NoWitnessFound, NotPositive, WrongAlgebra
from .lp import schatten_norm

PAULI = (
    np.array([[0, 1], [1, 0]], complex),
    np.array([[0, -1j], [1j, 0]], complex),
    np.array([[1, 0], [0, -1]], complex),
)

M2 = Algebra([2])

_FACTOR = re.compile(r"^([xyz])(?:\^(\d+))?$")


def parse_monomial(key: str) -> tuple[int, int, int]:
    """``"x^2*y"`` or ``"x^2 y"`` -> exponents ``(2, 1, 0)``."""
    exps = [0, 0, 0]
    factors = [f for f in re.split(r"[*\s]+", key.strip()) if f]
    if not factors:
        raise ValueError(f"empty monomial {key!r}")
    for f in factors:
        m = _FACTOR.match(f)
        if not m:
            raise ValueError(f"cannot parse monomial factor {f!r} in {key!r}")
        exps["xyz".index(m.group(1))] += int(m.group(2) or 1)
    return tuple(exps)


def format_monomial(exps: tuple[int, int, int]) -> str:
    parts = []
    for var, e in zip("xyz", exps):
        if e == 1:
            parts.append(var)
        elif e > 1:
            parts.append(f"{var}^{e}")
    return "*".join(parts) if parts else "1"


def projection_from_bloch(n) -> np.ndarray:
    n = np.asarray(n, float)
    return 0.5 * (np.eye(2) + n[0] * PAULI[0] + n[1] * PAULI[1] + n[2] * PAULI[2])


def bloch_vector(v: np.ndarray) -> np.ndarray:
    """Bloch vector of the projection onto the unit vector ``v``."""
    z = np.conj(v[0]) * v[1]
    return np.array([2 * z.real, 2 * z.imag, abs(v[0]) ** 2 - abs(v[1]) ** 2])


def sphere_grid(n_phi: int = 32, n_theta: int = 16) -> np.ndarray:
    """Deterministic ``n_phi x n_theta`` grid of unit vectors (theta at cell midpoints)."""
    theta = (np.arange(n_theta) + 0.5) * np.pi / n_theta
    phi = np.arange(n_phi) * 2 * np.pi / n_phi
    P, T = np.meshgrid(phi, theta, indexing="ij")
    return np.stack([np.sin(T) * np.cos(P), np.sin(T) * np.sin(P), np.cos(T)], axis=-1).reshape(-1, 3)


class CFM:
    """Black-box c.f.m. on ``L^p(M)_+``."""

    algebra: Algebra
    p: float

    def __call__(self, h: Element) -> float:
        raise NotImplementedError


@dataclass
class BlochCFM(CFM):
    """``rho(a q + b q_perp) = a f(n) + b f(-n)`` with ``f = c/2 + u``.

    ``odd_poly`` maps monomials (``"x^3"``, ``"x*y^2"``...) to coefficients.
    With ``allow_even`` the oddness requirement is dropped; that only serves
    to build deliberately broken controls.
    """

    c: float
    odd_poly: dict
    p: float = 1.0
    allow_even: bool = False

    def __post_init__(self):
        self.algebra = M2
        self.terms = {}
        for key, coef in self.odd_poly.items():
            exps = parse_monomial(key) if isinstance(key, str) else tuple(key)
            if sum(exps) % 2 == 0 and not self.allow_even:
                raise ValueError(f"monomial {key!r} has even degree; u must be odd")
            self.terms[exps] = self.terms.get(exps, 0.0) + float(coef)
        if self.c < 0:
            raise ValueError("c must be nonnegative")
        if not self.allow_even:
            bound = float(np.abs(self.u(sphere_grid(181, 90))).max())
            if bound > self.c / 2 + 1e-12:
                raise ValueError(f"max |u| on the sphere ({bound:.4f}) exceeds c/2; f would go negative")

    def u(self, n: np.ndarray) -> np.ndarray:
        n = np.asarray(n, float)
        out = np.zeros(n.shape[:-1])
        for (a, b, c), coef in self.terms.items():
            out = out + coef * n[..., 0] ** a * n[..., 1] ** b * n[..., 2] ** c
        return out

    def f(self, n: np.ndarray) -> np.ndarray:
        return self.c / 2 + self.u(n)

    def __call__(self, h: Element) -> float:
        return cfm_eval(self, h)

    def eval_spectral(self, alpha, beta, n):
        """Vectorised ``alpha f(n) + beta f(-n)``."""
        n = np.asarray(n, float)
        return alpha * self.f(n) + beta * self.f(-n)

    def to_dict(self) -> dict:
        return {"c": self.c, "odd_poly": {format_monomial(k): v for k, v in self.terms.items()}, "p": self.p}


def _check_m2(h: Element):
    if h.algebra.dims != (2,):
        raise WrongAlgebra(f"Bloch measures live on M2, not {h.algebra}")


def cfm_eval(rho: BlochCFM, h, tol: float = 1e-9) -> float:
    """Evaluate a Bloch c.f.m. on a positive element of ``M_2``."""
    h = getattr(h, "element", h)
    _check_m2(h)
    b = h.blocks[0]
    scale = max(float(np.abs(b).max()), 1e-300)
    if np.abs(b - b.conj().T).max() > tol * scale:
        raise NotPositive("element is not hermitian")
    w, v = np.linalg.eigh((b + b.conj().T) / 2)
    if w[0] < -tol * scale:
        raise NotPositive(f"eigenvalue {w[0]:.3e} is negative")
    w = np.maximum(w, 0.0)
    n = bloch_vector(v[:, 1])
    return float(rho.eval_spectral(w[1], w[0], n))


@dataclass
class FunctionalCFM(CFM):
    """``rho(xi) = Re tau(xi eta)`` for a positive ``eta`` in ``L^q``."""

    eta: Element
    p: float = 1.0

    def __post_init__(self):
        self.algebra = self.eta.algebra

    def __call__(self, h) -> float:
        h = getattr(h, "element", h)
        return float(self.algebra.trace(h @ self.eta).real)


def cfm_from_functional(eta, p: float = 1.0) -> FunctionalCFM:
    eta = getattr(eta, "element", eta)
    return FunctionalCFM(eta, p)


@dataclass
class CallableCFM(CFM):
    fn: Callable
    algebra: Algebra
    p: float = 1.0

    def __call__(self, h) -> float:
        return float(self.fn(getattr(h, "element", h)))


# -- axioms -----------------------------------------------------------------------------


@dataclass
class CFMAxiomsReport:
    homogeneity: float
    orthogonal_additivity: float
    boundedness: float
    continuity: float
    norm_estimate: float
    lipschitz_estimate: float

    def max(self) -> float:
        return max(self.homogeneity, self.orthogonal_additivity, self.boundedness, self.continuity)


def _orthogonal_pair(A: Algebra, rng: np.random.Generator, equal: bool = False):
    """Two positives with disjoint supports (random split of a random eigenbasis)."""
    u = A.random_unitary(rng)
    b1, b2 = [], []
    for n in A.dims:
        mask = rng.random(n) < 0.5
        # equal eigenvalues make h1 + h2 degenerate, the case where splittings are not unique
        vals = np.full(n, rng.uniform(0.1, 2.0)) if equal else rng.uniform(0.0, 2.0, size=n)
        b1.append(np.diag(vals * mask))
        b2.append(np.diag(vals * ~mask))
    return u @ Element(A, b1) @ u.H, u @ Element(A, b2) @ u.H


def degenerate_path(A: Algebra, t: float, rng_seed: int = 11) -> Element:
    """``1 + t V_t E V_t*`` with ``V_t`` spinning ever faster as ``t -> 0``.

    On ``M_2`` this is ``(1+t) proj(n_t) + (1-t) proj(-n_t)`` with a rotating
    Bloch vector ``n_t``; its limit is ``1`` although the eigenbasis has none.
    """
    rng = np.random.default_rng(rng_seed)
    blocks = []
    for n in A.dims:
        g = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        g = (g + g.conj().T) / 2
        e = np.linspace(-1.0, 1.0, n) if n > 1 else np.zeros(1)
        v = expm(1j * np.sin(1.0 / t) * 3.0 * g)
        blocks.append(np.eye(n) + t * (v * e) @ v.conj().T)
    return Element(A, blocks)


def cfm_check_axioms(rho: CFM, trials: int = 200, seed: int = 0, delta_min: float = 1e-13) -> CFMAxiomsReport:
    """Sampled residuals of the four c.f.m. conditions.

    Continuity is probed at ``delta_min`` along random positive perturbations
    and along :func:`degenerate_path`; the largest difference quotient over
    the path is returned as ``lipschitz_estimate`` so a reader can confirm
    the residual shrinks linearly with the step.
    """
    A = rho.algebra
    p = rho.p
    rng = np.random.default_rng(seed)
    hom = add = neg = 0.0
    norm_est = 0.0
    cont = 0.0
    for _ in range(trials):
        h = A.random_positive(rng, rank=int(rng.integers(1, 1 + max(A.dims))))
        lam = float(rng.uniform(0.0, 5.0))
        r = rho(h)
        scale = max(abs(r), 1.0)
        hom = max(hom, abs(rho(h * lam) - lam * r) / scale / max(lam, 1.0))
        h1, h2 = _orthogonal_pair(A, rng, equal=bool(rng.random() < 0.5))
        r1, r2 = rho(h1), rho(h2)
        add = max(add, abs(rho(h1 + h2) - r1 - r2) / max(abs(r1) + abs(r2), 1.0))
        neg = max(neg, max(0.0, -r), max(0.0, -r1), max(0.0, -r2))
        nh = schatten_norm(h, p)
        if nh > 0:
            norm_est = max(norm_est, r / nh)
        g = A.random_positive(rng)
        cont = max(cont, abs(rho(h + g * (delta_min / max(g.norm(), 1e-300))) - r))
    base = rho(A.identity())
    lip = 0.0
    diff = 0.0
    for t in np.geomspace(1e-1, delta_min, 40):
        diff = abs(rho(degenerate_path(A, t)) - base)
        lip = max(lip, diff / t)
    cont = max(cont, diff)
    return CFMAxiomsReport(hom, add, neg, cont, norm_est, lip)


# -- nonlinearity ---------------------------------------------------------------------------


@dataclass
class Witness:
    h1: Element
    h2: Element
    gap: float
    rho_sum: float
    rho_parts: float


def pair_gaps(rho: BlochCFM, n1: np.ndarray, n2: np.ndarray) -> np.ndarray:
    """``|rho(q1 + q2) - rho(q1) - rho(q2)|`` for rank-one projections, vectorised.

    ``q1 + q2 = 1 + (n1 + n2).sigma / 2`` has eigenvalues ``1 +- r`` with
    ``r = |n1 + n2| / 2`` and top eigenvector along ``(n1 + n2) / (2 r)``.
    """
    s = n1 + n2
    r = np.linalg.norm(s, axis=-1) / 2
    m = np.divide(s, 2 * r[..., None], out=np.zeros_like(s), where=r[..., None] > 1e-15)
    whole = rho.eval_spectral(1 + r, 1 - r, m)
    whole = np.where(r > 1e-15, whole, rho.c)
    return np.abs(whole - rho.f(n1) - rho.f(n2))


def derived_witness(rho: BlochCFM) -> Witness:
    """The pair ``(proj(+x), proj(+z))``."""
    h1 = M2.element([projection_from_bloch([1, 0, 0])])
    h2 = M2.element([projection_from_bloch([0, 0, 1])])
    s, a = rho(h1 + h2), rho(h1) + rho(h2)
    return Witness(h1, h2, abs(s - a), s, a)


def nonlinearity_witness(rho, p: float | None = None, tol: float = 1e-9,
                         n_phi: int = 32, n_theta: int = 16) -> Witness:
    """Largest additivity gap over pairs of rank-one projections.

    Ties go to the lexicographically first grid pair; the derived pair
    ``(+x, +z)`` is always examined too.
    """
    if isinstance(rho, BlochCFM):
        grid = np.vstack([[[1, 0, 0], [0, 0, 1]], sphere_grid(n_phi, n_theta)])
        G = pair_gaps(rho, grid[:, None, :], grid[None, :, :])
        k = int(np.argmax(G))
        i, j = divmod(k, grid.shape[0])
        gap = float(G[i, j])
        h1 = M2.element([projection_from_bloch(grid[i])])
        h2 = M2.element([projection_from_bloch(grid[j])])
    else:
        A = rho.algebra
        rng = np.random.default_rng(12345)
        projs = []
        for _ in range(64):
            blocks = []
            for n in A.dims:
                v = random_unitary(n, rng)[:, 0]
                blocks.append(np.outer(v, v.conj()) * (rng.random() < 0.7))
            projs.append(Element(A, blocks))
        vals = [rho(q) for q in projs]
        gap, i, j = -1.0, 0, 0
        for a in range(len(projs)):
            for b in range(len(projs)):
                g = abs(rho(projs[a] + projs[b]) - vals[a] - vals[b])
                if g > gap:
                    gap, i, j = g, a, b
        h1, h2 = projs[i], projs[j]
    if gap <= tol:
        raise NoWitnessFound("no additivity gap above tolerance; the measure looks linear", gap=gap)
    s, a = rho(h1 + h2), rho(h1) + rho(h2)
    return Witness(h1, h2, gap, s, a)


# -- linear fit --------------------------------------------------------------------------------


def hermitian_basis(A: Algebra) -> list[Element]:
    out = []
    for i, n in enumerate(A.dims):
        for j in range(n):
            out.append(A.matrix_unit(i, j, j))
            for k in range(j + 1, n):
                ejk, ekj = A.matrix_unit(i, j, k), A.matrix_unit(i, k, j)
                out.append(ejk + ekj)
                out.append((ejk - ekj) * 1j)
    return out


def standard_grid(A: Algebra, p: float, size: int = 400, seed: int = 2024) -> list[Element]:
    """Deterministic positives normalised to ``||h||_p = 1``.

    On ``M_2``: the rank-one projections of the 32 x 16 sphere grid plus
    mixtures ``a q + b q_perp`` along the same directions.  Elsewhere: seeded
    random positives of every rank.
    """
    out = []
    if A.dims == (2,):
        dirs = sphere_grid(32, 16)
        for k, n in enumerate(dirs):
            q = projection_from_bloch(n)
            out.append(A.element([q]))
            a = 0.2 + 0.6 * ((k * 7) % 13) / 12
            out.append(A.element([a * q + (1 - a) * (np.eye(2) - q)]))
    else:
        rng = np.random.default_rng(seed)
        for k in range(size):
            out.append(A.random_positive(rng, rank=1 + k % max(A.dims)))
    return [h * (1.0 / schatten_norm(h, p)) for h in out]


@dataclass
class LinearFit:
    eta: Element
    residual: float
    rms: float


def fit_linear(rho: CFM, p: float | None = None, grid: list[Element] | None = None) -> LinearFit:
    """Least-squares hermitian ``eta`` with ``rho(h) ~ tau(h eta)`` on the grid.

    ``residual`` is the largest absolute misfit over the grid.
    """
    A = rho.algebra
    p = rho.p if p is None else p
    grid = standard_grid(A, p) if grid is None else grid
    basis = hermitian_basis(A)
    X = np.array([[A.trace(h @ b).real for b in basis] for h in grid])
    y = np.array([rho(h) for h in grid])
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    eta = A.zeros()
    for c, b in zip(coef, basis):
        eta = eta + b * c
    misfit = X @ coef - y
    return LinearFit(eta, float(np.abs(misfit).max()), float(np.sqrt(np.mean(misfit ** 2))))


def counterexample(p: float = 1.0) -> BlochCFM:
    """``c = 2``, ``u = n_x^3 / 2``."""
    return BlochCFM(2.0, {"x^3": 0.5}, p)
