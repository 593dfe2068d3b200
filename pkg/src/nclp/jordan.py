"""Normal Jordan *-monomorphisms between finite-dimensional algebras.

A :class:`JordanMono` places copies of each source block (or of its
transpose) on disjoint diagonal sub-blocks of the target and then conjugates
by a unitary ``U``::

    J(x) = U · layout(x) · U*
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
    generated_algebra,
    minimal_central_projections,
    orthonormal_span,
    random_unitary,
)
from .errors import AmbiguousBlock, DimensionMismatch, ReconstructionMismatch
from .superop import Superoperator

MULT = "MULT"
ANTI = "ANTI"


@dataclass(frozen=True)
class Slot:
    src: int
    dst: int
    offset: int
    mode: str = MULT

    def __post_init__(self):
        if self.mode not in (MULT, ANTI):
            raise ValueError(f"mode must be MULT or ANTI, got {self.mode!r}")


class JordanMono:
    """Jordan *-monomorphism given by slots and a conjugating unitary of the target.

    Slots of 1x1 source blocks are stored as MULT, since transpose is trivial
    there and abelian summands belong to the multiplicative part.
    """

    def __init__(self, source: Algebra, target: Algebra, slots: Sequence, conjugator: Element | None = None):
        self.source = source
        self.target = target
        norm = []
        for s in slots:
            s = s if isinstance(s, Slot) else Slot(*s)
            if not 0 <= s.src < source.nblocks:
                raise DimensionMismatch(f"slot source block {s.src} out of range")
            if not 0 <= s.dst < target.nblocks:
                raise DimensionMismatch(f"slot target block {s.dst} out of range")
            n = source.dims[s.src]
            if s.offset < 0 or s.offset + n > target.dims[s.dst]:
                raise DimensionMismatch(f"slot {s} does not fit in target block of size {target.dims[s.dst]}")
            if n == 1 and s.mode == ANTI:
                s = Slot(s.src, s.dst, s.offset, MULT)
            norm.append(s)
        for a in range(len(norm)):
            for b in range(a + 1, len(norm)):
                sa, sb = norm[a], norm[b]
                if sa.dst != sb.dst:
                    continue
                na, nb = source.dims[sa.src], source.dims[sb.src]
                if sa.offset < sb.offset + nb and sb.offset < sa.offset + na:
                    raise DimensionMismatch(f"slots {sa} and {sb} overlap")
        self.slots = tuple(norm)
        if conjugator is None:
            conjugator = target.identity()
        if conjugator.algebra != target:
            raise DimensionMismatch("conjugator must live in the target algebra")
        self.conjugator = conjugator

    def __repr__(self):
        return f"JordanMono({self.source} -> {self.target}, slots={list(self.slots)})"

    # -- application ----------------------------------------------------------

    def layout(self, parts: Sequence[np.ndarray]) -> Element:
        """Place ``parts[k]`` in slot ``k`` (no conjugation)."""
        blocks = [np.zeros((n, n), complex) for n in self.target.dims]
        for s, m in zip(self.slots, parts):
            n = m.shape[0]
            blocks[s.dst][s.offset:s.offset + n, s.offset:s.offset + n] = m
        return Element(self.target, blocks)

    def conj(self, y: Element) -> Element:
        u = self.conjugator
        return u @ y @ u.H

    def unconj(self, y: Element) -> Element:
        u = self.conjugator
        return u.H @ y @ u

    def __call__(self, x: Element) -> Element:
        if x.algebra != self.source:
            raise DimensionMismatch(f"element of {x.algebra} passed to J on {self.source}")
        parts = [x.blocks[s.src] if s.mode == MULT else x.blocks[s.src].T for s in self.slots]
        return self.conj(self.layout(parts))

    apply = __call__

    def slot_parts(self, y: Element) -> list[np.ndarray]:
        """Sub-blocks of ``U* y U`` sitting at each slot."""
        z = self.unconj(y)
        out = []
        for s in self.slots:
            n = self.source.dims[s.src]
            out.append(z.blocks[s.dst][s.offset:s.offset + n, s.offset:s.offset + n])
        return out

    def inverse(self, y: Element) -> Element:
        """Left inverse: average of the (un-transposed) slot contents."""
        acc = [np.zeros((n, n), complex) for n in self.source.dims]
        count = [0] * self.source.nblocks
        for s, m in zip(self.slots, self.slot_parts(y)):
            acc[s.src] += m if s.mode == MULT else m.T
            count[s.src] += 1
        return Element(self.source, [a / max(c, 1) for a, c in zip(acc, count)])

    @property
    def matrix(self) -> np.ndarray:
        return self.superoperator.matrix

    @property
    def superoperator(self) -> Superoperator:
        if not hasattr(self, "_superop"):
            self._superop = Superoperator.from_function(self, self.source, self.target)
        return self._superop

    def unit(self) -> Element:
        if not hasattr(self, "_unit"):
            self._unit = self(self.source.identity())
        return self._unit

    # -- structure --------------------------------------------------------------

    def modes(self, i: int) -> set[str]:
        return {s.mode for s in self.slots if s.src == i}

    def has_mode(self, i: int, mode: str) -> bool:
        return mode in self.modes(i)

    def mode_projection(self, mode: str) -> Element:
        parts = [np.eye(self.source.dims[s.src]) * (s.mode == mode) for s in self.slots]
        return self.conj(self.layout(parts))

    def part_projection(self, i: int, mode: str) -> Element:
        """Central projection of the image bicommutant carrying block ``i`` in ``mode``."""
        parts = [np.eye(self.source.dims[s.src]) * (s.src == i and s.mode == mode) for s in self.slots]
        return self.conj(self.layout(parts))

    def embed_parts(self, mult: Element, anti: Element) -> Element:
        """``pi(mult) ⊕ pi'(anti)``: MULT slots get ``mult``, ANTI slots get ``anti^T``."""
        parts = []
        for s in self.slots:
            parts.append(mult.blocks[s.src] if s.mode == MULT else anti.blocks[s.src].T)
        return self.conj(self.layout(parts))

    def split_parts(self, y: Element, tol: float = DEFAULT_TOL) -> tuple[Element, Element, float]:
        """Inverse of :meth:`embed_parts` with a membership residual.

        Blocks lacking a mode get zero in that component.
        """
        mult = [np.zeros((n, n), complex) for n in self.source.dims]
        anti = [np.zeros((n, n), complex) for n in self.source.dims]
        cm = [0] * self.source.nblocks
        ca = [0] * self.source.nblocks
        for s, m in zip(self.slots, self.slot_parts(y)):
            if s.mode == MULT:
                mult[s.src] += m
                cm[s.src] += 1
            else:
                anti[s.src] += m.T
                ca[s.src] += 1
        a = Element(self.source, [m / max(c, 1) for m, c in zip(mult, cm)])
        b = Element(self.source, [m / max(c, 1) for m, c in zip(anti, ca)])
        unit = self.unit()
        corner = unit @ y @ unit
        res = max((self.embed_parts(a, b) - y).norm(), (corner - y).norm())
        return a, b, res

    def compose_unitary(self, v: Element) -> "JordanMono":
        """``Ad(v) ∘ J``."""
        return JordanMono(self.source, self.target, self.slots, v @ self.conjugator)

    def to_dict(self) -> dict:
        from .serialize import jordan_to_json

        return jordan_to_json(self)


# -- verification ---------------------------------------------------------------


@dataclass
class JordanReport:
    jordan_product_residual: float
    star_residual: float
    injectivity_ok: bool
    unit_is_projection: bool
    unit_residual: float = 0.0
    extra: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return (
            self.jordan_product_residual <= 1e-9
            and self.star_residual <= 1e-9
            and self.injectivity_ok
            and self.unit_is_projection
        )


def verify_jordan_mono(J, source: Algebra | None = None, target: Algebra | None = None,
                       tol: float = DEFAULT_TOL) -> JordanReport:
    """Residuals of the Jordan *-monomorphism laws on the source basis.

    ``J`` may be a :class:`JordanMono`, a :class:`Superoperator` or a callable
    (then ``source`` is required).
    """
    if isinstance(J, JordanMono):
        source, fn = J.source, J
    elif isinstance(J, Superoperator):
        source, fn = J.domain, J
    else:
        fn = J
    basis = [source.matrix_unit(i, j, k) for (i, j, k) in source.unit_basis]
    images = [fn(b) for b in basis]
    jr = 0.0
    for a, ja in zip(basis, images):
        for b, jb in zip(basis, images):
            jr = max(jr, (fn(a.jordan(b)) - ja.jordan(jb)).norm())
    sr = max((fn(b.H) - jb.H).norm() for b, jb in zip(basis, images))
    inj = True
    if isinstance(J, JordanMono):
        inj = all(any(s.src == i for s in J.slots) for i in range(source.nblocks))
    m = np.array([v.algebra.vec(v) for v in images]).T
    sv = np.linalg.svd(m, compute_uv=False)
    inj = inj and bool(sv.min() > tol * max(sv.max(), 1.0))
    one = fn(source.identity())
    ur = max((one @ one - one).norm(), (one - one.H).norm())
    return JordanReport(jr, sr, inj, ur <= max(tol, 1e-9), ur)


# -- structure decomposition ------------------------------------------------------


def image_bicommutant(J, tol: float = DEFAULT_TOL) -> SubalgebraBasis:
    """The *-algebra generated by ``J(M_1)`` inside the corner of ``J(1)``."""
    fn, source = _as_map(J)
    imgs = [fn(b) for b in source.basis]
    return generated_algebra(imgs, unit=fn(source.identity()), tol=tol)


def _as_map(J):
    if isinstance(J, JordanMono):
        return J, J.source
    if isinstance(J, Superoperator):
        return J, J.domain
    raise TypeError("expected JordanMono or Superoperator")


def _summand_residuals(fn, source: Algebra, z: Element) -> tuple[float, float]:
    rm = ra = 0.0
    for i, n in enumerate(source.dims):
        units = [source.matrix_unit(i, j, k) for j in range(n) for k in range(n)]
        imgs = [z @ fn(u) for u in units]
        full = [fn(u) for u in units]
        for a, ja in zip(units, imgs):
            for b, jb_full in zip(units, full):
                jab = z @ fn(a @ b)
                rm = max(rm, (jab - ja @ jb_full).norm())
                ra = max(ra, (jab - z @ jb_full @ fn(a)).norm())
    return rm, ra


def classify_summands(J, tol: float = DEFAULT_TOL) -> list[tuple[Element, str]]:
    """Minimal central projections of the image bicommutant with their modes."""
    fn, source = _as_map(J)
    A = image_bicommutant(J, tol)
    scale = max(fn(source.identity()).norm(), 1.0)
    out = []
    thresh = max(tol, 1e-8) * scale
    for z in minimal_central_projections(A, tol):
        rm, ra = _summand_residuals(fn, source, z)
        if rm <= thresh:
            out.append((z, MULT))
        elif ra <= thresh:
            out.append((z, ANTI))
        else:
            raise AmbiguousBlock(f"summand is neither multiplicative ({rm:.2e}) nor anti ({ra:.2e})")
    return out


def structure_decompose(J, tol: float = DEFAULT_TOL) -> tuple[Element, Element]:
    """Central projections ``(z_mult, z_anti)`` of the image bicommutant."""
    fn, source = _as_map(J)
    target = fn(source.identity()).algebra
    zm, za = target.zeros(), target.zeros()
    for z, mode in classify_summands(J, tol):
        if mode == MULT:
            zm = zm + z
        else:
            za = za + z
    return zm, za


def match_jordan(K: Superoperator, tol: float = DEFAULT_TOL) -> JordanMono:
    """Rewrite a raw Jordan *-monomorphism in slot form.

    Raises :class:`ReconstructionMismatch` when the slot form does not
    reproduce ``K``.
    """
    source, target = K.domain, K.codomain
    rng_cols = {k: [] for k in range(target.nblocks)}
    slots = []
    fill = [0] * target.nblocks
    for z, mode in classify_summands(K, tol):
        hits = [i for i in range(source.nblocks) if (z @ K(source.block_unit(i))).norm() > 0.5]
        if len(hits) != 1:
            raise AmbiguousBlock("central summand does not sit under a single source block")
        i = hits[0]
        n = source.dims[i]
        e11 = z @ K(source.matrix_unit(i, 0, 0))
        for k in range(target.nblocks):
            blk = e11.blocks[k]
            w, v = np.linalg.eigh((blk + blk.conj().T) * 0.5)
            for c in np.nonzero(w > 0.5)[0]:
                vc = v[:, c]
                cols = []
                for j in range(n):
                    e = source.matrix_unit(i, j, 0) if mode == MULT else source.matrix_unit(i, 0, j)
                    cols.append((z @ K(e)).blocks[k] @ vc)
                rng_cols[k].extend(cols)
                slots.append(Slot(i, k, fill[k], mode))
                fill[k] += n
    blocks = []
    for k, m in enumerate(target.dims):
        cols = np.array(rng_cols[k]).T if rng_cols[k] else np.zeros((m, 0), complex)
        if cols.shape[1] < m:
            occupied = orthonormal_span(list(cols.T), m, tol, check_band=False)
            cols = np.hstack([cols, _complement(occupied, m)])
        u, _, vh = np.linalg.svd(cols)
        blocks.append(u @ vh)
    J = JordanMono(source, target, slots, Element(target, blocks))
    res = J.superoperator.distance(K)
    if res > max(tol, 1e-8) * max(1.0, float(np.linalg.norm(K.matrix, 2))):
        raise ReconstructionMismatch(f"slot form misses the raw map by {res:.3e}", residual=res)
    return J


def _complement(q: np.ndarray, m: int) -> np.ndarray:
    """Orthonormal basis of the orthogonal complement of the columns of ``q``."""
    if q.shape[1] == 0:
        return np.eye(m, dtype=complex)
    u, s, _ = np.linalg.svd(q, full_matrices=True)
    return u[:, q.shape[1]:]


# -- random generation -------------------------------------------------------------


def random_jordan(source: Algebra, rng: np.random.Generator, max_mult: int = 2, pad: int = 1,
                  target_blocks: int | None = None, both_modes: bool | None = None,
                  unitary: bool = True) -> JordanMono:
    """Random Jordan monomorphism out of ``source`` with a fresh target algebra.

    Each source block receives between one and ``max_mult`` copies per mode;
    copies are spread over ``target_blocks`` blocks and every target block may
    get up to ``pad`` unused dimensions (so ``J(1)`` need not be 1).
    Blocks that receive no copy are dropped, so ``pad=0`` makes ``J`` unital.
    """
    nt = target_blocks if target_blocks is not None else int(rng.integers(1, 3))
    placements = []
    for i, n in enumerate(source.dims):
        if both_modes is None:
            choice = int(rng.integers(0, 3)) if n > 1 else 0
            modes = [(MULT,), (ANTI,), (MULT, ANTI)][choice]
        elif both_modes:
            modes = (MULT, ANTI)
        else:
            modes = (MULT,)
        for mode in modes:
            for _ in range(int(rng.integers(1, max_mult + 1))):
                placements.append((i, mode, int(rng.integers(0, nt))))
    rng.shuffle(placements)
    used = sorted({k for _, _, k in placements})
    nt = len(used)
    fill = [0] * nt
    slots = []
    for i, mode, k in placements:
        k = used.index(k)
        slots.append(Slot(i, k, fill[k], mode))
        fill[k] += source.dims[i]
    dims = [f + int(rng.integers(0, pad + 1)) for f in fill]
    weights = list(rng.uniform(0.5, 2.0, size=nt))
    target = Algebra(dims, weights)
    conj = target.random_unitary(rng) if unitary else None
    return JordanMono(source, target, slots, conj)


DESK_SOURCES = ([1, 1], [2], [1, 2], [2, 1], [2, 2], [3], [1, 1, 1])


def random_desk_jordan(rng: np.random.Generator, max_dim: int = 16, max_block: int = 4, pad: int = 1,
                       both_modes: bool | None = None, sources=DESK_SOURCES) -> JordanMono:
    """Random weighted source and Jordan monomorphism with target dim <= ``max_dim``.

    Resamples until every target block has size at most ``max_block``.
    """
    while True:
        dims = list(sources[int(rng.integers(len(sources)))])
        src = Algebra(dims, list(rng.uniform(0.5, 2.0, size=len(dims))))
        J = random_jordan(src, rng, max_mult=2, pad=pad, both_modes=both_modes)
        if J.target.dim <= max_dim and max(J.target.dims) <= max_block:
            return J


def example_m2_m4() -> JordanMono:
    """``x -> diag(x, x^T)`` from M2 into M4."""
    return JordanMono(Algebra([2]), Algebra([4]), [Slot(0, 0, 0, MULT), Slot(0, 0, 2, ANTI)])


__all__ = [
    "MULT",
    "ANTI",
    "Slot",
    "JordanMono",
    "JordanReport",
    "verify_jordan_mono",
    "image_bicommutant",
    "classify_summands",
    "structure_decompose",
    "match_jordan",
    "random_jordan",
    "random_desk_jordan",
    "example_m2_m4",
    "subalgebra_inclusion",
    "random_unitary",
]


def subalgebra_inclusion(A: SubalgebraBasis, tol: float = DEFAULT_TOL, seed: int = 7) -> JordanMono:
    """Realise a *-subalgebra as ``M_{n_1} + ... + M_{n_k}`` with its inclusion map.

    The source trace is the restriction of the parent trace, so the inclusion
    is trace preserving.  Matrix units come from the eigenprojections of a
    generic hermitian element of each simple summand.
    """
    parent = A.parent
    rng = np.random.default_rng(seed)
    summands = []
    for z in minimal_central_projections(A, tol):
        Q = orthonormal_span([parent.vec(z @ b @ z) for b in A.basis], parent.dim, tol, check_band=False)
        n = int(round(np.sqrt(Q.shape[1])))
        if n * n != Q.shape[1]:
            raise DimensionMismatch(f"simple summand of dimension {Q.shape[1]} is not a full matrix algebra")
        units = _matrix_units(parent, Q, z, n, rng, tol)
        summands.append(units)
    source = Algebra([len(u) for u in summands],
                     [parent.trace(u[0][0]).real for u in summands])

    def incl(x: Element) -> Element:
        out = parent.zeros()
        for i, units in enumerate(summands):
            b = x.blocks[i]
            for j in range(len(units)):
                for k in range(len(units)):
                    if b[j, k] != 0:
                        out = out + units[j][k] * b[j, k]
        return out

    return match_jordan(Superoperator.from_function(incl, source, parent), tol)


def _matrix_units(parent: Algebra, Q: np.ndarray, z: Element, n: int, rng, tol: float):
    if n == 1:
        return [[z]]
    coef = rng.normal(size=Q.shape[1]) + 1j * rng.normal(size=Q.shape[1])
    h = parent.unvec(Q @ coef)
    h = (h + h.H) * 0.5
    eig = []
    for bi, b in enumerate(h.blocks):
        w, v = np.linalg.eigh(b)
        zb = z.blocks[bi]
        for m in range(w.size):
            if np.real(np.vdot(v[:, m], zb @ v[:, m])) > 0.5:
                eig.append((w[m], bi, v[:, m]))
    eig.sort(key=lambda e: e[0])
    vals = np.array([e[0] for e in eig])
    cut = np.sort(np.argsort(np.diff(vals))[-(n - 1):])
    groups = np.split(np.arange(len(eig)), cut + 1)
    f = []
    for g in groups:
        blocks = [np.zeros((d, d), complex) for d in parent.dims]
        for m in g:
            _, bi, v = eig[m]
            blocks[bi] += np.outer(v, v.conj())
        f.append(Element(parent, blocks))
    a = parent.unvec(Q @ (rng.normal(size=Q.shape[1]) + 1j * rng.normal(size=Q.shape[1])))
    col = [f[0]]
    for j in range(1, n):
        x = f[j] @ a @ f[0]
        col.append(x / x.norm())
    return [[col[j] @ col[k].H for k in range(n)] for j in range(n)]
