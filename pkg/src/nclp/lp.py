"""Noncommutative L^p spaces over finite-dimensional algebras."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import (
    DEFAULT_TOL,
    Algebra,
    Check,
    Element,
    hermitian_parts,
    is_positive,
    power,
    random_unitary,
)
from .errors import DimensionMismatch, ExponentMismatch, NotPositive


@dataclass(frozen=True)
class LpElement:
    """An algebra element regarded in ``L^p(M, tau)``."""

    element: Element
    p: float

    def __post_init__(self):
        if not np.isfinite(self.p) or self.p < 1:
            raise ValueError(f"exponent must lie in [1, inf), got {self.p}")

    @property
    def algebra(self) -> Algebra:
        return self.element.algebra

    def norm(self) -> float:
        return lp_norm(self)

    def __add__(self, other: "LpElement") -> "LpElement":
        _same_space(self, other)
        return LpElement(self.element + other.element, self.p)

    def __sub__(self, other: "LpElement") -> "LpElement":
        _same_space(self, other)
        return LpElement(self.element - other.element, self.p)

    def __mul__(self, c) -> "LpElement":
        return LpElement(self.element * c, self.p)

    __rmul__ = __mul__

    @property
    def H(self) -> "LpElement":
        return LpElement(self.element.H, self.p)


@dataclass(frozen=True)
class StateDensity:
    """Density ``d`` of the positive functional ``x -> tau(d x)``."""

    algebra: Algebra
    d: Element

    def __call__(self, x: Element) -> complex:
        return self.algebra.trace(self.d @ x)

    def is_faithful(self, tol: float = DEFAULT_TOL) -> bool:
        scale = self.d.norm()
        lo = min(float(np.linalg.eigvalsh(b).min()) for b in self.d.blocks)
        return lo > tol * scale

    def is_normalized(self, tol: float = DEFAULT_TOL) -> bool:
        return abs(self.algebra.trace(self.d) - 1) <= tol

    def normalized(self) -> "StateDensity":
        return StateDensity(self.algebra, self.d / self.algebra.trace(self.d).real)


def _same_space(a: LpElement, b: LpElement):
    if a.algebra != b.algebra:
        raise DimensionMismatch(f"{a.algebra} vs {b.algebra}")
    if a.p != b.p:
        raise ExponentMismatch(f"p = {a.p} vs p = {b.p}")


def singular_values(x: Element) -> list[np.ndarray]:
    return [np.linalg.svd(b, compute_uv=False) for b in x.blocks]


def schatten_norm(x: Element, p: float) -> float:
    """Weighted Schatten norm ``(sum_i t_i Tr|x_i|^p)^{1/p}``; ``p = inf`` gives the operator norm."""
    svs = singular_values(x)
    if np.isinf(p):
        return max(float(s.max()) if s.size else 0.0 for s in svs)
    total = sum(t * float(np.sum(s ** p)) for t, s in zip(x.algebra.weights, svs))
    return total ** (1.0 / p)


def lp_norm(xi: LpElement) -> float:
    return schatten_norm(xi.element, xi.p)


def batched_schatten(stack: np.ndarray, weights: np.ndarray, p: float) -> np.ndarray:
    """Schatten norms of many single-block elements at once.

    ``stack`` has shape ``(batch, n, n)`` for one block; callers sum the
    weighted p-th powers over blocks.  Returns ``t * Tr|x|^p`` per batch item.
    """
    s = np.linalg.svd(stack, compute_uv=False)
    return weights * np.sum(s ** p, axis=-1)


def orthogonal(xi: LpElement, eta: LpElement, tol: float = DEFAULT_TOL) -> Check:
    """``xi eta* = xi* eta = 0`` up to ``tol * ||xi|| ||eta||``."""
    a, b = xi.element, eta.element
    if a.algebra != b.algebra:
        raise DimensionMismatch(f"{a.algebra} vs {b.algebra}")
    scale = a.norm() * b.norm()
    r = max((a @ b.H).norm(), (a.H @ b).norm())
    rel = r / scale if scale > 0 else 0.0
    return Check(rel <= tol, rel)


@dataclass(frozen=True)
class ClarksonResult:
    equal: bool
    lhs: float
    rhs: float

    @property
    def gap(self) -> float:
        return abs(self.lhs - self.rhs) / max(abs(self.rhs), 1e-300)


def clarkson_equal(xi: LpElement, eta: LpElement, tol: float = DEFAULT_TOL) -> ClarksonResult:
    """Both sides of ``||xi+eta||^p + ||xi-eta||^p = 2(||xi||^p + ||eta||^p)``.

    Equality is judged relative to the right-hand side.
    """
    _same_space(xi, eta)
    p = xi.p
    a, b = xi.element, eta.element
    lhs = schatten_norm(a + b, p) ** p + schatten_norm(a - b, p) ** p
    rhs = 2 * (schatten_norm(a, p) ** p + schatten_norm(b, p) ** p)
    equal = abs(lhs - rhs) <= tol * max(rhs, 1e-300) or (rhs == 0 and lhs == 0)
    return ClarksonResult(bool(equal), float(lhs), float(rhs))


def hermitian_split(h: Element) -> tuple[Element, Element]:
    """Jordan decomposition ``h = h_+ - h_-`` of a hermitian element."""
    plus, minus = [], []
    for b in h.blocks:
        w, v = np.linalg.eigh((b + b.conj().T) * 0.5)
        plus.append((v * np.maximum(w, 0)) @ v.conj().T)
        minus.append((v * np.maximum(-w, 0)) @ v.conj().T)
    return Element(h.algebra, plus), Element(h.algebra, minus)


def positive_decompose(xi: LpElement) -> tuple[LpElement, LpElement, LpElement, LpElement]:
    """``xi = (h1 - h2) + i (h3 - h4)`` with ``h1 ⊥ h2`` and ``h3 ⊥ h4`` positive."""
    re, im = hermitian_parts(xi.element)
    h1, h2 = hermitian_split(re)
    h3, h4 = hermitian_split(im)
    return tuple(LpElement(h, xi.p) for h in (h1, h2, h3, h4))


def conjugate_exponent(p: float) -> float:
    return np.inf if p == 1 else p / (p - 1)


def dual_pairing(xi: LpElement, eta, tol: float = 1e-12) -> complex:
    """``tau(xi eta)`` for conjugate exponents; a bare Element means ``q = inf``."""
    if isinstance(eta, Element):
        if xi.p != 1:
            raise ExponentMismatch(f"a bounded element pairs with p = 1, not p = {xi.p}")
        other = eta
    else:
        if abs(1.0 / xi.p + 1.0 / eta.p - 1.0) > tol:
            raise ExponentMismatch(f"1/{xi.p} + 1/{eta.p} != 1")
        other = eta.element
    if xi.algebra != other.algebra:
        raise DimensionMismatch(f"{xi.algebra} vs {other.algebra}")
    return xi.algebra.trace(xi.element @ other)


def density_identify(h: Element, p: float, tol: float = DEFAULT_TOL) -> StateDensity:
    """The functional ``tau_{h^p}`` that the positive ``h`` in ``L^p`` represents."""
    if not is_positive(h, tol):
        raise NotPositive("density_identify needs a positive element")
    return StateDensity(h.algebra, power(h, p, tol))


def density_root(phi: StateDensity, p: float, tol: float = DEFAULT_TOL) -> LpElement:
    """Inverse of :func:`density_identify`: ``phi^{1/p}`` in ``L^p``."""
    return LpElement(power(phi.d, 1.0 / p, tol), p)


def overlap(xi: Element, eta: Element) -> float:
    """``max(||xi eta*||, ||xi* eta||) / (||xi|| ||eta||)``; zero exactly for orthogonal pairs."""
    scale = xi.norm() * eta.norm()
    if scale == 0:
        return 0.0
    return max((xi @ eta.H).norm(), (xi.H @ eta).norm()) / scale


def _unitary_stack(n: int, count: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.normal(size=(count, n, n)) + 1j * rng.normal(size=(count, n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r, axis1=-2, axis2=-1)
    return q * (d / np.abs(d))[:, None, :]


def _unstack(A: Algebra, stacks, p: float) -> list[LpElement]:
    count = stacks[0].shape[0]
    return [LpElement(Element(A, [s[k] for s in stacks]), p) for k in range(count)]


def random_orthogonal_pairs(A: Algebra, p: float, rng: np.random.Generator,
                            count: int) -> list[tuple[LpElement, LpElement]]:
    """Pairs with disjoint left and right supports: shared singular bases, split singular slots.

    Every pair has both members nonzero.
    """
    xs, ys = [], []
    for n in A.dims:
        u, v = _unitary_stack(n, count, rng), _unitary_stack(n, count, rng)
        mask = rng.random((count, n)) < 0.5
        s = rng.uniform(0.1, 2.0, size=(count, n))
        vh = np.conj(np.swapaxes(v, -1, -2))
        xs.append((u * (s * mask)[:, None, :]) @ vh)
        ys.append((u * (s * ~mask)[:, None, :]) @ vh)
    nx = sum(np.abs(x).sum(axis=(1, 2)) for x in xs)
    ny = sum(np.abs(y).sum(axis=(1, 2)) for y in ys)
    keep = (nx > 0) & (ny > 0)
    pairs = list(zip(_unstack(A, [x[keep] for x in xs], p), _unstack(A, [y[keep] for y in ys], p)))
    if len(pairs) < count:
        pairs += random_orthogonal_pairs(A, p, rng, count - len(pairs))
    return pairs


def random_orthogonal_pair(A: Algebra, p: float, rng: np.random.Generator) -> tuple[LpElement, LpElement]:
    return random_orthogonal_pairs(A, p, rng, 1)[0]


def random_overlapping_pairs(A: Algebra, p: float, rng: np.random.Generator, count: int,
                             min_overlap: float = 0.1) -> list[tuple[LpElement, LpElement]]:
    """Generic pairs, resampled until :func:`overlap` is at least ``min_overlap``."""

    def opnorm(stacks):
        return np.max([np.linalg.norm(m, 2, axis=(1, 2)) for m in stacks], axis=0)

    def gauss(n):
        return (rng.normal(size=(count, n, n)) + 1j * rng.normal(size=(count, n, n))) / np.sqrt(2)

    xs = [gauss(n) for n in A.dims]
    ys = [gauss(n) for n in A.dims]
    adj = [np.conj(np.swapaxes(m, -1, -2)) for m in ys]
    cross = np.maximum(opnorm([x @ a for x, a in zip(xs, adj)]),
                       opnorm([np.conj(np.swapaxes(x, -1, -2)) @ y for x, y in zip(xs, ys)]))
    keep = cross >= min_overlap * opnorm(xs) * opnorm(ys)
    pairs = list(zip(_unstack(A, [x[keep] for x in xs], p), _unstack(A, [y[keep] for y in ys], p)))
    if len(pairs) < count:
        pairs += random_overlapping_pairs(A, p, rng, count - len(pairs), min_overlap)
    return pairs


def random_overlapping_pair(A: Algebra, p: float, rng: np.random.Generator,
                            min_overlap: float = 0.1) -> tuple[LpElement, LpElement]:
    return random_overlapping_pairs(A, p, rng, 1, min_overlap)[0]


def clarkson_batch(pairs, tol: float = DEFAULT_TOL) -> list[ClarksonResult]:
    """:func:`clarkson_equal` for many pairs on one algebra, with stacked SVDs."""
    if not pairs:
        return []
    xi0 = pairs[0][0]
    A, p = xi0.algebra, xi0.p
    for x, y in pairs:
        _same_space(xi0, x)
        _same_space(xi0, y)
    t = np.asarray(A.weights)
    tot = {key: 0.0 for key in ("plus", "minus", "x", "y")}
    for i in range(A.nblocks):
        X = np.array([x.element.blocks[i] for x, _ in pairs])
        Y = np.array([y.element.blocks[i] for _, y in pairs])
        for key, M in (("plus", X + Y), ("minus", X - Y), ("x", X), ("y", Y)):
            tot[key] = tot[key] + batched_schatten(M, t[i], p)
    lhs = tot["plus"] + tot["minus"]
    rhs = 2 * (tot["x"] + tot["y"])
    out = []
    for l, r in zip(lhs, rhs):
        equal = abs(l - r) <= tol * max(r, 1e-300) or (r == 0 and l == 0)
        out.append(ClarksonResult(bool(equal), float(l), float(r)))
    return out
