"""JSON encodings.

Complex entries are ``[re, im]`` pairs.  Decoders take the JSON path of the
value they read so that a malformed document fails with a
:class:`SchemaError` naming the offending location.
"""
from __future__ import annotations

import json

import numpy as np

from .algebra import Algebra, Element
from .errors import NclpError, SchemaError
from .jordan import JordanMono, Slot
from .lp import LpElement
from .superop import Superoperator

BASIS = "trace-orthonormal"


# -- primitives ----------------------------------------------------------------------------


def complex_to_json(a) -> list:
    a = np.asarray(a, complex)
    return np.stack([a.real, a.imag], axis=-1).tolist()


def _expect(cond: bool, path: str, msg: str):
    if not cond:
        raise SchemaError(path, msg)


def _field(obj, key: str, path: str):
    _expect(isinstance(obj, dict), path, "expected an object")
    _expect(key in obj, f"{path}.{key}", "missing field")
    return obj[key]


def _number(x, path: str) -> float:
    _expect(isinstance(x, (int, float)) and not isinstance(x, bool), path, "expected a number")
    return float(x)


def complex_from_json(x, path: str, ndim: int) -> np.ndarray:
    try:
        a = np.asarray(x, dtype=float)
    except (TypeError, ValueError):
        raise SchemaError(path, "expected a numeric array of [re, im] pairs") from None
    _expect(a.ndim == ndim + 1 and a.shape[-1] == 2, path,
            f"expected a {ndim}-dimensional array of [re, im] pairs, got shape {a.shape}")
    return a[..., 0] + 1j * a[..., 1]


# -- algebra objects --------------------------------------------------------------------------


def algebra_to_json(A: Algebra) -> dict:
    return {"dims": list(A.dims), "weights": [float(t) for t in A.weights]}


def algebra_from_json(obj, path: str = "$") -> Algebra:
    dims = _field(obj, "dims", path)
    _expect(isinstance(dims, list) and all(isinstance(n, int) and n > 0 for n in dims),
            f"{path}.dims", "expected a list of positive integers")
    weights = obj.get("weights") if isinstance(obj, dict) else None
    if weights is None:
        weights = [1.0] * len(dims)
    _expect(isinstance(weights, list) and len(weights) == len(dims), f"{path}.weights",
            "expected one weight per block")
    weights = [_number(t, f"{path}.weights[{k}]") for k, t in enumerate(weights)]
    try:
        return Algebra(dims, weights)
    except (NclpError, ValueError) as exc:
        raise SchemaError(path, str(exc)) from None


def element_to_json(x: Element) -> dict:
    return {"blocks": [complex_to_json(b) for b in x.blocks]}


def element_from_json(obj, algebra: Algebra, path: str = "$") -> Element:
    blocks = _field(obj, "blocks", path)
    _expect(isinstance(blocks, list) and len(blocks) == algebra.nblocks, f"{path}.blocks",
            f"expected {algebra.nblocks} blocks")
    out = []
    for k, (b, n) in enumerate(zip(blocks, algebra.dims)):
        m = complex_from_json(b, f"{path}.blocks[{k}]", 2)
        _expect(m.shape == (n, n), f"{path}.blocks[{k}]", f"expected a {n}x{n} block, got {m.shape}")
        out.append(m)
    return Element(algebra, out)


def lp_to_json(xi: LpElement) -> dict:
    return {"p": float(xi.p), "element": element_to_json(xi.element)}


def lp_from_json(obj, algebra: Algebra, path: str = "$") -> LpElement:
    p = _number(_field(obj, "p", path), f"{path}.p")
    _expect(p >= 1, f"{path}.p", "p must be at least 1")
    return LpElement(element_from_json(_field(obj, "element", path), algebra, f"{path}.element"), p)


# -- maps ------------------------------------------------------------------------------------


def jordan_to_json(J: JordanMono) -> dict:
    return {
        "source": algebra_to_json(J.source),
        "target": algebra_to_json(J.target),
        "slots": [{"src": s.src, "dst": s.dst, "offset": s.offset, "mode": s.mode} for s in J.slots],
        "conjugator": element_to_json(J.conjugator),
    }


def jordan_from_json(obj, path: str = "$") -> JordanMono:
    source = algebra_from_json(_field(obj, "source", path), f"{path}.source")
    target = algebra_from_json(_field(obj, "target", path), f"{path}.target")
    raw = _field(obj, "slots", path)
    _expect(isinstance(raw, list), f"{path}.slots", "expected a list")
    slots = []
    for k, s in enumerate(raw):
        sp = f"{path}.slots[{k}]"
        vals = [_field(s, key, sp) for key in ("src", "dst", "offset")]
        for key, v in zip(("src", "dst", "offset"), vals):
            _expect(isinstance(v, int), f"{sp}.{key}", "expected an integer")
        mode = _field(s, "mode", sp)
        _expect(mode in ("MULT", "ANTI"), f"{sp}.mode", "expected \"MULT\" or \"ANTI\"")
        slots.append(Slot(*vals, mode))
    conj = obj.get("conjugator")
    U = None if conj is None else element_from_json(conj, target, f"{path}.conjugator")
    try:
        return JordanMono(source, target, slots, U)
    except NclpError as exc:
        raise SchemaError(path, str(exc)) from None


def _matrix_from_json(obj, dom: Algebra, cod: Algebra, path: str) -> np.ndarray:
    m = complex_from_json(_field(obj, "matrix", path), f"{path}.matrix", 2)
    _expect(m.shape == (cod.dim, dom.dim), f"{path}.matrix",
            f"expected shape {(cod.dim, dom.dim)}, got {m.shape}")
    return m


def superop_to_json(K: Superoperator) -> dict:
    return {
        "domain": algebra_to_json(K.domain),
        "codomain": algebra_to_json(K.codomain),
        "basis": BASIS,
        "matrix": complex_to_json(K.matrix),
    }


def superop_from_json(obj, path: str = "$") -> Superoperator:
    dom = algebra_from_json(_field(obj, "domain", path), f"{path}.domain")
    cod = algebra_from_json(_field(obj, "codomain", path), f"{path}.codomain")
    basis = obj.get("basis", BASIS)
    _expect(basis == BASIS, f"{path}.basis", f"only the {BASIS} basis is supported")
    return Superoperator(dom, cod, _matrix_from_json(obj, dom, cod, path))


def linear_map_to_json(T) -> dict:
    return {
        "p": float(T.p),
        "domain": algebra_to_json(T.domain),
        "codomain": algebra_to_json(T.codomain),
        "matrix": complex_to_json(T.matrix),
    }


def linear_map_from_json(obj, path: str = "$"):
    from .isometry import LinearMap

    p = _number(_field(obj, "p", path), f"{path}.p")
    _expect(p >= 1, f"{path}.p", "p must be at least 1")
    dom = algebra_from_json(_field(obj, "domain", path), f"{path}.domain")
    cod = algebra_from_json(_field(obj, "codomain", path), f"{path}.codomain")
    return LinearMap(dom, cod, _matrix_from_json(obj, dom, cod, path), p)


# -- triples ----------------------------------------------------------------------------------


def yeadon_to_json(y) -> dict:
    return {"kind": "yeadon", "p": float(y.p), "w": element_to_json(y.w), "B": element_to_json(y.B),
            "J": jordan_to_json(y.J)}


def typical_to_json(t) -> dict:
    return {"kind": "typical", "p": float(t.p), "w": element_to_json(t.w), "J": jordan_to_json(t.J),
            "P": superop_to_json(t.P.map)}


def triple_from_json(obj, path: str = "$"):
    from .isometry import TypicalTriple, YeadonTriple
    from .projections import PositiveProjection

    if isinstance(obj, dict) and "kind" not in obj:
        # output of ``nclp decompose`` carries both forms
        for key in ("typical", "yeadon"):
            if key in obj:
                return triple_from_json(obj[key], f"{path}.{key}")
    kind = _field(obj, "kind", path)
    p = _number(_field(obj, "p", path), f"{path}.p")
    J = jordan_from_json(_field(obj, "J", path), f"{path}.J")
    w = element_from_json(_field(obj, "w", path), J.target, f"{path}.w")
    if kind == "yeadon":
        B = element_from_json(_field(obj, "B", path), J.target, f"{path}.B")
        return YeadonTriple(w, B, J, p)
    if kind == "typical":
        P = superop_from_json(_field(obj, "P", path), f"{path}.P")
        _expect(P.domain == J.target and P.codomain == J.target, f"{path}.P",
                "P must act on the target algebra of J")
        return TypicalTriple(w, J, PositiveProjection(J.target, J, P), p)
    raise SchemaError(f"{path}.kind", "expected \"yeadon\" or \"typical\"")


def bloch_to_json(rho) -> dict:
    return rho.to_dict()


def bloch_from_json(obj, path: str = "$"):
    from .cfm import BlochCFM

    c = _number(_field(obj, "c", path), f"{path}.c")
    poly = _field(obj, "odd_poly", path)
    _expect(isinstance(poly, dict), f"{path}.odd_poly", "expected an object of monomial coefficients")
    for k, v in poly.items():
        _number(v, f"{path}.odd_poly[{k!r}]")
    p = _number(obj.get("p", 1.0), f"{path}.p")
    try:
        return BlochCFM(c, poly, p)
    except ValueError as exc:
        raise SchemaError(f"{path}.odd_poly", str(exc)) from None


# -- text helpers -----------------------------------------------------------------------------


def loads(text: str, path: str = "$"):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(path, f"invalid JSON: {exc.msg} at line {exc.lineno} column {exc.colno}") from None


def dumps(obj, indent: int | None = None) -> str:
    return json.dumps(obj, indent=indent, sort_keys=False)
