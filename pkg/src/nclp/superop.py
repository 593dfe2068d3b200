"""Linear maps between algebras, stored as matrices on trace-orthonormal coordinates."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .algebra import Algebra, Element
from .errors import DimensionMismatch


@dataclass(frozen=True, eq=False)
class Superoperator:
    """A linear map ``domain -> codomain``; ``matrix`` has shape ``(codomain.dim, domain.dim)``."""

    domain: Algebra
    codomain: Algebra
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (self.codomain.dim, self.domain.dim):
            raise DimensionMismatch(
                f"matrix shape {m.shape} does not fit {self.domain} -> {self.codomain}"
            )
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_function(cls, fn: Callable[[Element], Element], domain: Algebra, codomain: Algebra) -> "Superoperator":
        return cls(domain, codomain, domain.map_matrix(fn, codomain))

    @classmethod
    def identity(cls, algebra: Algebra) -> "Superoperator":
        return cls(algebra, algebra, np.eye(algebra.dim, dtype=complex))

    def __call__(self, x: Element) -> Element:
        return self.codomain.unvec(self.matrix @ self.domain.vec(x))

    def __matmul__(self, other: "Superoperator") -> "Superoperator":
        """Composition ``self ∘ other``."""
        if other.codomain != self.domain:
            raise DimensionMismatch(f"cannot compose {other.codomain} into {self.domain}")
        return Superoperator(other.domain, self.codomain, self.matrix @ other.matrix)

    def __sub__(self, other: "Superoperator") -> "Superoperator":
        return Superoperator(self.domain, self.codomain, self.matrix - other.matrix)

    def __add__(self, other: "Superoperator") -> "Superoperator":
        return Superoperator(self.domain, self.codomain, self.matrix + other.matrix)

    def __mul__(self, c) -> "Superoperator":
        return Superoperator(self.domain, self.codomain, c * self.matrix)

    __rmul__ = __mul__

    def predual(self) -> "Superoperator":
        """The map ``K_*`` with ``tau_dom(K_*(k) y) = tau_cod(k K(y))``."""
        sd = self.domain.star_permutation
        sc = self.codomain.star_permutation
        return Superoperator(self.codomain, self.domain, self.matrix.T[sd][:, sc])

    def adjoint(self) -> "Superoperator":
        """Hilbert-space adjoint for the trace inner products ``tau(a* b)``."""
        return Superoperator(self.codomain, self.domain, self.matrix.conj().T)

    def distance(self, other: "Superoperator") -> float:
        """Spectral norm of the coordinate difference."""
        return float(np.linalg.norm(self.matrix - other.matrix, 2))

    def is_hermiticity_preserving(self) -> float:
        """``max ||K(b*) - K(b)*||`` over the basis (zero for *-preserving maps)."""
        r = 0.0
        for b in self.domain.basis:
            r = max(r, (self(b.H) - self(b).H).norm())
        return r


def positivity_defect(K: Superoperator, rng: np.random.Generator, samples: int = 100) -> float:
    """Largest relative negative eigenvalue of ``K(h)`` over random positive ``h``."""
    worst = 0.0
    for _ in range(samples):
        h = K.domain.random_positive(rng, rank=int(rng.integers(1, 1 + max(K.domain.dims))))
        out = K(h)
        herm = (out + out.H) * 0.5
        lo = min(float(np.linalg.eigvalsh(b).min()) for b in herm.blocks)
        anti = (out - out.H).norm()
        worst = max(worst, (max(0.0, -lo) + anti) / max(h.norm(), 1e-300))
    return worst


def sampled_norm(K: Superoperator, rng: np.random.Generator, samples: int = 200) -> float:
    """Lower estimate of the operator-norm-to-operator-norm bound of ``K``.

    Positive maps attain their norm at the unit, so it is always included;
    unitaries and random contractions fill in the rest.
    """
    best = K(K.domain.identity()).norm()
    for _ in range(samples):
        u = K.domain.random_unitary(rng)
        best = max(best, K(u).norm())
        x = K.domain.random(rng)
        nx = x.norm()
        if nx > 0:
            best = max(best, K(x).norm() / nx)
    return best
