"""JSON documents for matrices, frames, operator families and samplers.

Floats are written with 17 significant digits, which round-trips every
double exactly.  Non-finite values use the ``Infinity``/``NaN`` tokens
understood by Python's ``json`` module.
"""
from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any

import numpy as np

from .correlation import PovmFamily
from .errors import NotAProjection
from .frames import WeightedProjectionFrame
from .projection import Projection
from .random_frames import ProjectionSampler, SamplerKind
from .spectral import DEFAULT_TOL, SymmetricOperator, Tolerance, is_projection

__all__ = [
    "DocumentError",
    "format_float",
    "dumps",
    "load_document",
    "matrix_document",
    "parse_matrix",
    "parse_operator",
    "parse_projection",
    "frame_document",
    "parse_frame",
    "family_document",
    "parse_family",
    "parse_sampler",
    "parse_generators",
]

KINDS = ("symmetric", "projection", "general")


class DocumentError(ValueError):
    """Malformed input document."""


# -- serialization ------------------------------------------------------------

def format_float(x: float) -> str:
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return "%.17g" % x


def _scalar(x) -> str | None:
    if x is None:
        return "null"
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format_float(float(x))
    if isinstance(x, str):
        return json.dumps(x)
    return None


def _encode(obj: Any, level: int, indent: int) -> str:
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    s = _scalar(obj)
    if s is not None:
        return s
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        body = ",\n".join(f"{pad}{json.dumps(str(k))}: {_encode(v, level + 1, indent)}" for k, v in obj.items())
        return "{\n" + body + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        flat = [_scalar(v.item() if isinstance(v, np.generic) else v) for v in obj]
        if all(f is not None for f in flat):
            return "[" + ", ".join(flat) + "]"
        body = ",\n".join(pad + _encode(v, level + 1, indent) for v in obj)
        return "[\n" + body + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj: Any, indent: int = 2) -> str:
    return _encode(obj, 0, indent) + "\n"


def load_document(path: str | Path) -> Any:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DocumentError(f"cannot read {path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None


# -- matrices -----------------------------------------------------------------

def matrix_document(m, kind: str = "general") -> dict:
    a = np.asarray(m, dtype=float)
    return {"kind": kind, "n": int(a.shape[0]), "data": a.tolist()}


def parse_matrix(doc: Any, tol: Tolerance = DEFAULT_TOL) -> tuple[np.ndarray, str]:
    """Validate a matrix document; bare nested arrays count as ``general``.

    ``projection`` documents must be idempotent, otherwise
    :class:`~noff.errors.NotAProjection` is raised.
    """
    if isinstance(doc, list):
        doc = {"kind": "general", "data": doc}
    if not isinstance(doc, dict) or "data" not in doc:
        raise DocumentError("matrix document needs a 'data' field")
    kind = doc.get("kind", "general")
    if kind not in KINDS:
        raise DocumentError(f"unknown matrix kind {kind!r}")
    try:
        a = np.array(doc["data"], dtype=float)
    except (TypeError, ValueError):
        raise DocumentError("matrix data must be a nested array of numbers") from None
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise DocumentError(f"matrix data must be square, got shape {a.shape}")
    n = doc.get("n", a.shape[0])
    if n != a.shape[0]:
        raise DocumentError(f"declared n = {n} but data is {a.shape[0]} x {a.shape[1]}")
    if kind == "projection":
        ok, res = is_projection(a, tol)
        if not ok:
            raise NotAProjection(f"projection document has ||P^2 - P||_F = {res:.3g}")
    return a, kind


def parse_operator(doc: Any) -> SymmetricOperator:
    a, _ = parse_matrix(doc)
    return SymmetricOperator(a)


def parse_projection(doc: Any, tol: Tolerance = DEFAULT_TOL) -> Projection:
    """Raises :class:`~noff.errors.NotAProjection` for non-idempotent data."""
    a, _ = parse_matrix(doc, tol)
    return Projection(a, tol=tol)


# -- frames and families ------------------------------------------------------

def frame_document(frame: WeightedProjectionFrame) -> dict:
    return {
        "n": frame.dim,
        "items": [{"weight": v, "matrix": matrix_document(p.matrix, "projection")} for v, p in frame.items],
    }


def parse_frame(doc: Any, tol: Tolerance = DEFAULT_TOL) -> WeightedProjectionFrame:
    if not isinstance(doc, dict) or "items" not in doc:
        raise DocumentError("frame document needs 'items'")
    items = []
    for item in doc["items"]:
        if not isinstance(item, dict) or "matrix" not in item:
            raise DocumentError("frame items need a 'matrix'")
        w = item.get("weight", 1.0)
        if not isinstance(w, (int, float)) or not w > 0:
            raise DocumentError(f"frame weights must be positive numbers, got {w!r}")
        items.append((float(w), parse_projection(item["matrix"], tol)))
    n = doc.get("n")
    if n is None:
        if not items:
            raise DocumentError("empty frame needs 'n'")
        n = items[0][1].dim
    if any(p.dim != n for _, p in items):
        raise DocumentError("frame items disagree with n")
    return WeightedProjectionFrame(int(n), tuple(items))


def family_document(family: PovmFamily) -> dict:
    return {"n": family.dim, "items": [matrix_document(t.entries, "symmetric") for t in family.items]}


def parse_family(doc: Any, tol: Tolerance = DEFAULT_TOL) -> PovmFamily:
    if not isinstance(doc, dict) or "items" not in doc:
        raise DocumentError("family document needs 'items'")
    ops = [parse_operator(d) for d in doc["items"]]
    if not ops:
        raise DocumentError("family is empty")
    n = doc.get("n", ops[0].dim)
    if any(t.dim != n for t in ops):
        raise DocumentError("family items disagree with n")
    return PovmFamily(int(n), tuple(ops), tol)


# -- samplers and groups ------------------------------------------------------

def parse_sampler(doc: Any, seed: int, tol: Tolerance = DEFAULT_TOL) -> ProjectionSampler:
    """Build a sampler from ``{"kind": ..., ...}``.

    ``deterministic`` needs ``projection``; ``finite_discrete`` needs
    ``items`` of ``{"probability", "matrix"}``; ``haar_orthogonal`` and
    ``oblique_haar`` need ``n`` and ``rank`` (and ``theta`` for the latter).
    """
    if not isinstance(doc, dict) or "kind" not in doc:
        raise DocumentError("sampler document needs 'kind'")
    try:
        kind = SamplerKind(doc["kind"])
    except ValueError:
        raise DocumentError(f"unknown sampler kind {doc['kind']!r}") from None
    if kind is SamplerKind.DETERMINISTIC:
        if "projection" not in doc:
            raise DocumentError("deterministic sampler needs 'projection'")
        return ProjectionSampler.deterministic(parse_projection(doc["projection"], tol))
    if kind is SamplerKind.FINITE_DISCRETE:
        items = doc.get("items") or []
        if not items:
            raise DocumentError("finite_discrete sampler needs 'items'")
        support = []
        for it in items:
            if "probability" not in it or "matrix" not in it:
                raise DocumentError("finite_discrete items need 'probability' and 'matrix'")
            support.append((float(it["probability"]), parse_projection(it["matrix"], tol)))
        try:
            return ProjectionSampler.finite_discrete(support, seed=seed)
        except ValueError as exc:
            raise DocumentError(str(exc)) from None
    for key in ("n", "rank"):
        if key not in doc:
            raise DocumentError(f"{kind.value} sampler needs {key!r}")
    if kind is SamplerKind.HAAR_ORTHOGONAL:
        return ProjectionSampler.haar_orthogonal(int(doc["n"]), int(doc["rank"]), seed=seed)
    return ProjectionSampler.oblique_haar(int(doc["n"]), int(doc["rank"]), float(doc.get("theta", 0.0)), seed=seed)


def parse_generators(doc: Any) -> list[np.ndarray]:
    if isinstance(doc, dict):
        doc = doc.get("generators")
    if not isinstance(doc, list) or not doc:
        raise DocumentError("generator document needs a non-empty 'generators' list")
    return [parse_matrix(g)[0] for g in doc]
