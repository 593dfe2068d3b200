"""Finite-dimensional von Neumann algebras as direct sums of matrix blocks.

An :class:`Algebra` is ``M_{n_1} + ... + M_{n_k}`` with the faithful trace
``tau(x) = sum_i t_i Tr(x_i)``.  Elements are immutable tuples of dense complex
blocks.  Linear maps between algebras are stored as matrices acting on
*coordinates* in the trace-orthonormal basis ``E^{(i)}_{jk} / sqrt(t_i)``;
:meth:`Algebra.vec` and :meth:`Algebra.unvec` convert.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import DegenerateBasis, DimensionMismatch, NotPositive, NotSubalgebra

DEFAULT_TOL = 1e-9

# Singular values in (tol, BAND * tol] (relative) are neither clearly zero nor
# clearly nonzero; rank decisions there raise DegenerateBasis.
BAND = 1e3

# Relative size of eigenvalue noise from dense Hermitian eigensolvers.
NOISE_TOL = 1e-13


@dataclass(frozen=True)
class Check:
    """Outcome of a tolerance-based predicate: a verdict plus its margin."""

    passed: bool
    residual: float

    def __bool__(self):
        return bool(self.passed)


class Algebra:
    """Direct sum of full matrix blocks with positive trace weights."""

    def __init__(self, dims: Sequence[int], weights: Sequence[float] | None = None):
        dims = tuple(int(n) for n in dims)
        if weights is None:
            weights = (1.0,) * len(dims)
        weights = tuple(float(t) for t in weights)
        if not dims:
            raise ValueError("an algebra needs at least one block")
        if len(dims) != len(weights):
            raise ValueError("block_dims and trace_weights differ in length")
        if any(n < 1 for n in dims):
            raise ValueError(f"block dimensions must be positive, got {dims}")
        if any(not np.isfinite(t) or t <= 0 for t in weights):
            raise ValueError(f"trace weights must be strictly positive, got {weights}")
        self.dims = dims
        self.weights = weights

    def __repr__(self):
        body = " + ".join(f"M{n}" for n in self.dims)
        if any(t != 1.0 for t in self.weights):
            return f"Algebra({body}, weights={list(self.weights)})"
        return f"Algebra({body})"

    def __eq__(self, other):
        return (
            isinstance(other, Algebra)
            and self.dims == other.dims
            and np.allclose(self.weights, other.weights, rtol=1e-14, atol=0)
        )

    def __hash__(self):
        return hash((self.dims, tuple(round(t, 12) for t in self.weights)))

    @property
    def nblocks(self) -> int:
        return len(self.dims)

    @cached_property
    def dim(self) -> int:
        return sum(n * n for n in self.dims)

    @cached_property
    def offsets(self) -> tuple[int, ...]:
        out, acc = [], 0
        for n in self.dims:
            out.append(acc)
            acc += n * n
        return tuple(out)

    # -- constructors -------------------------------------------------------

    def element(self, blocks) -> "Element":
        return Element(self, blocks)

    def zeros(self) -> "Element":
        return Element(self, [np.zeros((n, n), complex) for n in self.dims])

    def identity(self) -> "Element":
        return Element(self, [np.eye(n, dtype=complex) for n in self.dims])

    def scalar(self, c) -> "Element":
        return Element(self, [c * np.eye(n, dtype=complex) for n in self.dims])

    def central(self, values: Sequence[complex]) -> "Element":
        """Element equal to ``values[i] * 1`` on block ``i``."""
        if len(values) != self.nblocks:
            raise DimensionMismatch("one value per block required")
        return Element(self, [v * np.eye(n, dtype=complex) for v, n in zip(values, self.dims)])

    def block_unit(self, i: int) -> "Element":
        return self.central([1.0 if k == i else 0.0 for k in range(self.nblocks)])

    def matrix_unit(self, block: int, j: int, k: int) -> "Element":
        blocks = [np.zeros((n, n), complex) for n in self.dims]
        blocks[block][j, k] = 1.0
        return Element(self, blocks)

    def from_dense(self, m) -> "Element":
        """Read the diagonal blocks of a dense matrix of size ``sum(dims)``."""
        m = np.asarray(m, dtype=complex)
        tot = sum(self.dims)
        if m.shape != (tot, tot):
            raise DimensionMismatch(f"expected {(tot, tot)}, got {m.shape}")
        blocks, a = [], 0
        for n in self.dims:
            blocks.append(m[a:a + n, a:a + n])
            a += n
        return Element(self, blocks)

    # -- coordinates --------------------------------------------------------

    @cached_property
    def _sqrt_weights(self) -> np.ndarray:
        return np.concatenate([np.full(n * n, np.sqrt(t)) for n, t in zip(self.dims, self.weights)])

    def vec(self, x: "Element") -> np.ndarray:
        """Coordinates of ``x`` in the trace-orthonormal basis."""
        self._own(x)
        return np.concatenate([b.ravel() for b in x.blocks]) * self._sqrt_weights

    def unvec(self, v) -> "Element":
        v = np.asarray(v, dtype=complex)
        if v.shape != (self.dim,):
            raise DimensionMismatch(f"coordinate vector of length {self.dim} expected, got {v.shape}")
        v = v / self._sqrt_weights
        return Element(
            self, [v[o:o + n * n].reshape(n, n) for o, n in zip(self.offsets, self.dims)]
        )

    @cached_property
    def basis(self) -> tuple["Element", ...]:
        """Trace-orthonormal basis, in coordinate order."""
        eye = np.eye(self.dim)
        return tuple(self.unvec(eye[k]) for k in range(self.dim))

    @cached_property
    def unit_basis(self) -> tuple[tuple[int, int, int], ...]:
        """(block, row, col) of every matrix unit, in coordinate order."""
        return tuple((i, j, k) for i, n in enumerate(self.dims) for j in range(n) for k in range(n))

    @cached_property
    def star_permutation(self) -> np.ndarray:
        """Index permutation ``s`` with ``vec(x.T)[m] == vec(x)[s[m]]``."""
        perm = []
        for o, n in zip(self.offsets, self.dims):
            idx = np.arange(n * n).reshape(n, n).T.ravel() + o
            perm.extend(idx.tolist())
        return np.array(perm)

    def map_matrix(self, fn: Callable[["Element"], "Element"], codomain: "Algebra | None" = None) -> np.ndarray:
        """Coordinate matrix of a linear map given as a function."""
        codomain = self if codomain is None else codomain
        cols = [codomain.vec(fn(b)) for b in self.basis]
        return np.array(cols).T.reshape(codomain.dim, self.dim)

    def apply_matrix(self, matrix, x: "Element", domain: "Algebra | None" = None) -> "Element":
        """Apply a coordinate matrix with codomain ``self``."""
        domain = self if domain is None else domain
        return self.unvec(np.asarray(matrix) @ domain.vec(x))

    # -- traces and inner products -----------------------------------------

    def trace(self, x: "Element") -> complex:
        self._own(x)
        return complex(sum(t * np.trace(b) for t, b in zip(self.weights, x.blocks)))

    def inner(self, a: "Element", b: "Element") -> complex:
        """``tau(a* b)``."""
        return complex(np.vdot(self.vec(a), self.vec(b)))

    # -- random sampling ----------------------------------------------------

    def random(self, rng: np.random.Generator, scale: float = 1.0) -> "Element":
        return Element(
            self,
            [scale * (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))) / np.sqrt(2) for n in self.dims],
        )

    def random_hermitian(self, rng: np.random.Generator) -> "Element":
        x = self.random(rng)
        return (x + x.H) * 0.5

    def random_positive(self, rng: np.random.Generator, rank: int | None = None) -> "Element":
        blocks = []
        for n in self.dims:
            r = n if rank is None else min(rank, n)
            g = (rng.normal(size=(n, r)) + 1j * rng.normal(size=(n, r))) / np.sqrt(2)
            blocks.append(g @ g.conj().T)
        return Element(self, blocks)

    def random_positive_spectrum(self, rng: np.random.Generator, floor: float = 0.05,
                                 zero_prob: float = 0.3) -> "Element":
        """Positive element with eigenvalues exactly 0 or in ``[floor, 1]``.

        Keeps ``h**p`` resolvable in double precision for moderate ``p``.
        """
        blocks = []
        for n in self.dims:
            w = rng.uniform(floor, 1.0, size=n) * (rng.random(n) >= zero_prob)
            u = random_unitary(n, rng)
            blocks.append((u * w) @ u.conj().T)
        return Element(self, blocks)

    def random_unitary(self, rng: np.random.Generator) -> "Element":
        return Element(self, [random_unitary(n, rng) for n in self.dims])

    def random_state(self, rng: np.random.Generator) -> "Element":
        """Random faithful density (positive definite, trace one)."""
        d = self.random_positive(rng) + self.scalar(0.05)
        return d * (1.0 / self.trace(d).real)

    def _own(self, x: "Element"):
        if x.algebra is not self and x.algebra != self:
            raise DimensionMismatch(f"element of {x.algebra} used in {self}")


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR with phase correction."""
    z = (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


class Element:
    """Immutable element of an :class:`Algebra`."""

    __slots__ = ("algebra", "blocks")

    def __init__(self, algebra: Algebra, blocks):
        blocks = tuple(np.array(b, dtype=complex) for b in blocks)
        if len(blocks) != algebra.nblocks:
            raise DimensionMismatch(f"{len(blocks)} blocks given for {algebra}")
        for b, n in zip(blocks, algebra.dims):
            if b.shape != (n, n):
                raise DimensionMismatch(f"block of shape {b.shape} where {(n, n)} expected")
            b.flags.writeable = False
        object.__setattr__(self, "algebra", algebra)
        object.__setattr__(self, "blocks", blocks)

    def __setattr__(self, name, value):
        raise AttributeError("Element is immutable")

    def __repr__(self):
        return f"Element({self.algebra}, {[b.round(6).tolist() for b in self.blocks]})"

    def _binary(self, other, op):
        if not isinstance(other, Element):
            return NotImplemented
        self.algebra._own(other)
        return Element(self.algebra, [op(a, b) for a, b in zip(self.blocks, other.blocks)])

    def __add__(self, other):
        return self._binary(other, np.add)

    def __sub__(self, other):
        return self._binary(other, np.subtract)

    def __matmul__(self, other):
        return self._binary(other, np.matmul)

    def __mul__(self, c):
        if isinstance(c, Element):
            return NotImplemented
        return Element(self.algebra, [c * b for b in self.blocks])

    __rmul__ = __mul__

    def __truediv__(self, c):
        return self * (1.0 / c)

    def __neg__(self):
        return self * -1.0

    @property
    def H(self) -> "Element":
        return Element(self.algebra, [b.conj().T for b in self.blocks])

    @property
    def T(self) -> "Element":
        """Blockwise transpose in the stored basis."""
        return Element(self.algebra, [b.T for b in self.blocks])

    def jordan(self, other: "Element") -> "Element":
        """Jordan product ``(xy + yx) / 2``."""
        return (self @ other + other @ self) * 0.5

    def dense(self) -> np.ndarray:
        tot = sum(self.algebra.dims)
        out = np.zeros((tot, tot), complex)
        a = 0
        for b in self.blocks:
            n = b.shape[0]
            out[a:a + n, a:a + n] = b
            a += n
        return out

    def norm(self) -> float:
        """Operator norm."""
        best = 0.0
        for b in self.blocks:
            if b.any():
                best = max(best, float(np.linalg.svd(b, compute_uv=False)[0]))
        return best

    def trace(self) -> complex:
        return self.algebra.trace(self)

    def allclose(self, other: "Element", atol: float = 1e-10) -> bool:
        return distance(self, other) <= atol


def distance(a: Element, b: Element) -> float:
    """Operator-norm distance."""
    return (a - b).norm()


def rel_residual(r: float, scale: float) -> float:
    return r / scale if scale > 0 else r


# -- predicates ---------------------------------------------------------------


def is_hermitian(x: Element, tol: float = DEFAULT_TOL) -> Check:
    r = rel_residual(distance(x, x.H), x.norm())
    return Check(r <= tol, r)


def is_positive(x: Element, tol: float = DEFAULT_TOL) -> Check:
    """Residual is the relative size of the most negative eigenvalue."""
    herm = is_hermitian(x, tol)
    if not herm:
        return Check(False, max(herm.residual, tol * 10))
    h = (x + x.H) * 0.5
    lo = min(float(np.linalg.eigvalsh(b).min()) for b in h.blocks)
    r = rel_residual(max(0.0, -lo), x.norm())
    return Check(r <= tol, max(r, herm.residual))


def is_projection(x: Element, tol: float = DEFAULT_TOL) -> Check:
    r = max(distance(x, x.H), distance(x @ x, x))
    return Check(r <= tol, r)


def is_partial_isometry(x: Element, tol: float = DEFAULT_TOL) -> Check:
    return is_projection(x.H @ x, tol)


def is_unitary(x: Element, tol: float = DEFAULT_TOL) -> Check:
    one = x.algebra.identity()
    r = max(distance(x.H @ x, one), distance(x @ x.H, one))
    return Check(r <= tol, r)


def is_central(x: Element, tol: float = DEFAULT_TOL) -> Check:
    """Central in the whole algebra: scalar on every block."""
    r = 0.0
    for b in x.blocks:
        n = b.shape[0]
        r = max(r, float(np.linalg.norm(b - np.trace(b) / n * np.eye(n), 2)))
    return Check(r <= tol, r)


def commutator_residual(a: Element, b: Element) -> float:
    return distance(a @ b, b @ a)


# -- functional calculus ------------------------------------------------------


def _hermitian_eig(x: Element, tol: float, require_positive: bool):
    scale = x.norm()
    herm = distance(x, x.H)
    if herm > tol * max(scale, 1.0):
        raise NotPositive(f"element is not hermitian (residual {herm:.3e})")
    out = []
    for b in x.blocks:
        w, v = np.linalg.eigh((b + b.conj().T) * 0.5)
        out.append((w, v))
    if require_positive:
        lo = min((w.min() for w, _ in out), default=0.0)
        if lo < -tol * max(scale, 1.0):
            raise NotPositive(f"min eigenvalue {lo:.3e} below -tol")
    return out, scale


def spectral_map(x: Element, fn: Callable[[np.ndarray], np.ndarray], tol: float = DEFAULT_TOL,
                 positive: bool = True, zero_value: complex = 0.0) -> Element:
    """Apply ``fn`` to the spectrum of a hermitian ``x``.

    Eigenvalues within ``tol * ||x||`` of zero are treated as exactly zero and
    mapped to ``zero_value``; this keeps supports exact.
    """
    eig, scale = _hermitian_eig(x, tol, positive)
    cut = tol * scale
    blocks = []
    for w, v in eig:
        nz = np.abs(w) > cut
        if positive:
            nz &= w > 0
        fw = np.full(w.shape, zero_value, dtype=complex)
        if nz.any():
            fw[nz] = fn(w[nz])
        blocks.append((v * fw) @ v.conj().T)
    return Element(x.algebra, blocks)


def power(x: Element, alpha: float, tol: float = DEFAULT_TOL) -> Element:
    """``x**alpha`` for positive ``x``; negative powers invert on the support."""
    if alpha == 0:
        return support(x, tol)
    if alpha > 0:
        # continuous at 0, so only eigen-solver noise needs cutting; a coarse
        # cut would distort small eigenvalues under later fractional powers
        tol = min(tol, NOISE_TOL)
    return spectral_map(x, lambda w: w ** alpha, tol)


def imag_power(x: Element, t: float, tol: float = DEFAULT_TOL) -> Element:
    """``x**(it)`` on the support of positive ``x`` (zero elsewhere)."""
    return spectral_map(x, lambda w: np.exp(1j * t * np.log(w)), tol)


def support(x: Element, tol: float = DEFAULT_TOL) -> Element:
    """Support projection of a positive (or hermitian) element."""
    return spectral_map(x, lambda w: np.ones_like(w), tol, positive=False)


def functional_calculus(x: Element, f, tol: float = DEFAULT_TOL) -> Element:
    """Functional calculus on a positive element.

    ``f`` is ``("power", alpha)`` with ``alpha > 0``, ``"abs"`` (the
    identity on positives, i.e. ``|x|``), or a vectorised callable.
    """
    if isinstance(f, tuple) and f[0] == "power":
        alpha = float(f[1])
        if alpha <= 0:
            raise ValueError("power tag requires alpha > 0")
        return power(x, alpha, tol)
    if f == "abs":
        return spectral_map(x, lambda w: w, tol)
    if callable(f):
        return spectral_map(x, f, tol)
    raise ValueError(f"unknown function tag {f!r}")


def absolute(x: Element, tol: float = DEFAULT_TOL) -> Element:
    """``|x| = (x* x)^{1/2}``."""
    return polar(x, tol)[1]


def sqrt(x: Element, tol: float = DEFAULT_TOL) -> Element:
    return power(x, 0.5, tol)


def hermitian_parts(x: Element) -> tuple[Element, Element]:
    """``x = re + i*im`` with both parts hermitian."""
    return (x + x.H) * 0.5, (x - x.H) * (-0.5j)


def _numerical_rank(s: np.ndarray, scale: float, tol: float) -> int:
    return int(np.sum(s > tol * scale)) if scale > 0 else 0


def polar(x: Element, tol: float = DEFAULT_TOL) -> tuple[Element, Element]:
    """Polar decomposition ``x = w |x|`` with ``w* w = s(|x|)``."""
    scale = x.norm()
    ws, as_ = [], []
    for b in x.blocks:
        u, s, vh = np.linalg.svd(b)
        r = _numerical_rank(s, scale, tol)
        ws.append(u[:, :r] @ vh[:r])
        as_.append((vh[:r].conj().T * s[:r]) @ vh[:r])
    return Element(x.algebra, ws), Element(x.algebra, as_)


def supports(x: Element, tol: float = DEFAULT_TOL) -> tuple[Element, Element]:
    """Left and right support projections."""
    scale = x.norm()
    left, right = [], []
    for b in x.blocks:
        u, s, vh = np.linalg.svd(b)
        r = _numerical_rank(s, scale, tol)
        left.append(u[:, :r] @ u[:, :r].conj().T)
        right.append(vh[:r].conj().T @ vh[:r])
    return Element(x.algebra, left), Element(x.algebra, right)


def rank(x: Element, tol: float = DEFAULT_TOL) -> int:
    scale = x.norm()
    return sum(_numerical_rank(np.linalg.svd(b, compute_uv=False), scale, tol) for b in x.blocks)


# -- subspaces and subalgebras --------------------------------------------------


def orthonormal_span(vectors, dim: int, tol: float = DEFAULT_TOL, check_band: bool = True) -> np.ndarray:
    """Orthonormal basis (columns) of the span of coordinate vectors."""
    vectors = [np.asarray(v, complex) for v in vectors]
    if not vectors:
        return np.zeros((dim, 0), complex)
    m = np.array(vectors).T
    u, s, _ = np.linalg.svd(m, full_matrices=False)
    scale = s.max() if s.size else 0.0
    if scale == 0:
        return np.zeros((dim, 0), complex)
    if check_band:
        _check_band(s / scale, tol)
    r = int(np.sum(s > tol * scale))
    return u[:, :r]


def _check_band(s_rel: np.ndarray, tol: float):
    bad = s_rel[(s_rel > tol) & (s_rel <= BAND * tol)]
    if bad.size:
        raise DegenerateBasis("numerical rank undecidable", gap=float(bad.min()))


def null_space(m: np.ndarray, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Orthonormal basis (columns) of the kernel of ``m``, with band check."""
    m = np.asarray(m, complex)
    ncols = m.shape[1]
    if m.shape[0] == 0:
        return np.eye(ncols, dtype=complex)
    _, s, vh = np.linalg.svd(m)
    scale = max(s.max() if s.size else 0.0, 1.0)
    s_full = np.zeros(ncols)
    s_full[: s.size] = s
    _check_band(s_full / scale, tol)
    keep = s_full <= tol * scale
    return vh.conj().T[:, keep]


class SubalgebraBasis:
    """A *-subalgebra of ``parent`` with an orthonormal (trace) basis.

    ``coords`` holds the basis as orthonormal columns in the parent's
    coordinates; ``unit`` is the subalgebra's unit, a projection of the parent.
    """

    def __init__(self, parent: Algebra, coords: np.ndarray, unit: Element):
        self.parent = parent
        self.coords = np.asarray(coords, complex)
        self.unit = unit

    def __repr__(self):
        return f"SubalgebraBasis(dim={self.dim} in {self.parent})"

    @property
    def dim(self) -> int:
        return self.coords.shape[1]

    @cached_property
    def basis(self) -> tuple[Element, ...]:
        return tuple(self.parent.unvec(self.coords[:, k]) for k in range(self.dim))

    @cached_property
    def projector(self) -> np.ndarray:
        """Trace-orthogonal projection onto the span (coordinate matrix)."""
        return self.coords @ self.coords.conj().T

    def project(self, x: Element) -> Element:
        return self.parent.unvec(self.projector @ self.parent.vec(x))

    def residual(self, x: Element) -> float:
        """Distance (trace 2-norm) from ``x`` to the subalgebra."""
        v = self.parent.vec(x)
        return float(np.linalg.norm(v - self.projector @ v))

    def contains(self, x: Element, tol: float = DEFAULT_TOL) -> Check:
        r = rel_residual(self.residual(x), max(float(np.linalg.norm(self.parent.vec(x))), 1.0))
        return Check(r <= tol, r)

    def closure_residual(self) -> float:
        """How far the span is from being closed under product and adjoint."""
        r = 0.0
        for a in self.basis:
            r = max(r, self.residual(a.H))
            for b in self.basis:
                r = max(r, self.residual(a @ b))
        return r

    def same_subspace(self, other: "SubalgebraBasis") -> float:
        """Distance between the two orthogonal projectors (operator norm)."""
        return float(np.linalg.norm(self.projector - other.projector, 2))


def _block_operator(parent: Algebra, left: Element, right: Element) -> np.ndarray:
    """Coordinate matrix of ``x -> left x right`` (block diagonal)."""
    out = np.zeros((parent.dim, parent.dim), complex)
    for o, n, a, b in zip(parent.offsets, parent.dims, left.blocks, right.blocks):
        out[o:o + n * n, o:o + n * n] = np.kron(a, b.T)
    return out


def commutator_matrix(s: Element) -> np.ndarray:
    """Coordinate matrix of ``x -> s x - x s``."""
    one = s.algebra.identity()
    return _block_operator(s.algebra, s, one) - _block_operator(s.algebra, one, s)


def corner_coords(parent: Algebra, unit: Element | None, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Orthonormal coordinates of the corner ``unit * M * unit``."""
    if unit is None:
        return np.eye(parent.dim, dtype=complex)
    compress = _block_operator(parent, unit, unit)
    w, v = np.linalg.eigh((compress + compress.conj().T) * 0.5)
    return v[:, w > 0.5]


def commutant(S: Iterable[Element], unit: Element | None = None, tol: float = DEFAULT_TOL) -> SubalgebraBasis:
    """Relative commutant of ``S`` inside the corner ``unit * M * unit``.

    The adjoints of ``S`` are included, so the result is a *-subalgebra.
    """
    S = list(S)
    if not S:
        raise ValueError("commutant of an empty set requested; pass at least the unit")
    parent = S[0].algebra
    one = parent.identity() if unit is None else unit
    C = corner_coords(parent, unit, tol)
    gens = S + [s.H for s in S]
    rows = [commutator_matrix(s) @ C for s in gens]
    N = null_space(np.vstack(rows), tol)
    return SubalgebraBasis(parent, C @ N, one)


def bicommutant(S: Iterable[Element], unit: Element | None = None, tol: float = DEFAULT_TOL) -> SubalgebraBasis:
    """Double commutant of ``S`` relative to the corner of ``unit``."""
    S = list(S)
    first = commutant(S, unit, tol)
    return commutant(list(first.basis), unit, tol)


def generated_algebra(S: Iterable[Element], unit: Element | None = None, tol: float = DEFAULT_TOL,
                      max_rounds: int = 64) -> SubalgebraBasis:
    """Unital (w.r.t. ``unit``) *-algebra generated by ``S``, by span closure."""
    S = list(S)
    parent = S[0].algebra
    one = parent.identity() if unit is None else unit
    vecs = [parent.vec(x) for x in S] + [parent.vec(x.H) for x in S] + [parent.vec(one)]
    Q = orthonormal_span(vecs, parent.dim, tol, check_band=False)
    for _ in range(max_rounds):
        elems = [parent.unvec(Q[:, k]) for k in range(Q.shape[1])]
        prods = [parent.vec(a @ b) for a in elems for b in elems]
        Q2 = orthonormal_span(list(Q.T) + prods, parent.dim, tol, check_band=False)
        if Q2.shape[1] == Q.shape[1]:
            return SubalgebraBasis(parent, Q2, one)
        Q = Q2
    raise NotSubalgebra("span closure did not stabilise")


def subalgebra_from_elements(elements: Sequence[Element], unit: Element, tol: float = DEFAULT_TOL) -> SubalgebraBasis:
    """Wrap a spanning set that is already claimed to be a *-subalgebra."""
    parent = unit.algebra
    Q = orthonormal_span([parent.vec(x) for x in elements], parent.dim, tol, check_band=False)
    A = SubalgebraBasis(parent, Q, unit)
    r = A.closure_residual()
    if r > tol * 1e3:
        raise NotSubalgebra(f"span is not a *-subalgebra (closure residual {r:.3e})")
    return A


def full_subalgebra(parent: Algebra) -> SubalgebraBasis:
    return SubalgebraBasis(parent, np.eye(parent.dim, dtype=complex), parent.identity())


def center(A: SubalgebraBasis, tol: float = DEFAULT_TOL) -> SubalgebraBasis:
    """Center ``A ∩ A'``."""
    parent = A.parent
    rows = [commutator_matrix(s) @ A.coords for s in A.basis]
    N = null_space(np.vstack(rows), tol)
    return SubalgebraBasis(parent, A.coords @ N, A.unit)


def minimal_central_projections(A: SubalgebraBasis, tol: float = DEFAULT_TOL, seed: int = 20240917) -> list[Element]:
    """Minimal projections of the center of ``A``; they partition ``A.unit``.

    A generic hermitian central element separates the minimal central
    projections by its eigenvalues; the clusters are split at the largest gaps.
    Deterministic for a fixed ``seed``.
    """
    Z = center(A, tol)
    k = Z.dim
    if k == 1:
        return [A.unit]
    parent = A.parent
    herm = []
    for z in Z.basis:
        re, im = hermitian_parts(z)
        herm += [re, im]
    rng = np.random.default_rng(seed)
    last_err = None
    for _ in range(8):
        coef = rng.normal(size=len(herm))
        c = parent.zeros()
        for a, h in zip(coef, herm):
            c = c + h * a
        shift = 10.0 * (c.norm() + 1.0)
        c = c + A.unit * shift
        eig = []
        for bi, b in enumerate(c.blocks):
            w, v = np.linalg.eigh((b + b.conj().T) * 0.5)
            for m in range(w.size):
                if w[m] > shift / 2:
                    eig.append((w[m], bi, v[:, m]))
        eig.sort(key=lambda e: e[0])
        vals = np.array([e[0] for e in eig])
        gaps = np.diff(vals)
        if gaps.size < k - 1:
            last_err = DegenerateBasis("fewer eigenvalues than central summands")
            continue
        cut = np.sort(np.argsort(gaps)[-(k - 1):])
        spread = max(gaps[np.setdiff1d(np.arange(gaps.size), cut)], default=0.0)
        sep = gaps[cut].min()
        if sep <= 1e3 * max(spread, tol * shift):
            last_err = DegenerateBasis("central eigenvalue clusters not separated", gap=float(sep))
            continue
        groups = np.split(np.arange(len(eig)), cut + 1)
        projs = []
        for g in groups:
            blocks = [np.zeros((n, n), complex) for n in parent.dims]
            for m in g:
                _, bi, v = eig[m]
                blocks[bi] = blocks[bi] + np.outer(v, v.conj())
            projs.append(Element(parent, blocks))
        return projs
    raise last_err
