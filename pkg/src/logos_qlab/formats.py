"""JSON file formats: states, power pools, KS instances, arrangements, individuals.

Complex numbers travel as ``[re, im]`` pairs and matrices as row-major nested
arrays. Parsers raise :class:`SchemaError` carrying a JSON path.
"""

from __future__ import annotations

import json
from importlib import resources
from typing import Any

import jsonschema
import numpy as np

from .arrangements import ExperimentalArrangement, build_arrangement, check_factorization
from .contextuality import KsInstance
from .errors import QLabError, SchemaError
from .individuals import QuantumIndividual, completeness_rank
from .linalg import DEFAULT_TOL, Power, dagger, make_projector
from .valuation import IntensiveState

_COMPLEX = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}
_VECTOR = {"type": "array", "items": _COMPLEX, "minItems": 1}
_MATRIX = {"type": "array", "items": _VECTOR, "minItems": 1}
_DIM = {"type": "integer", "minimum": 1}

STATE_SCHEMA = {
    "type": "object",
    "properties": {"dim": _DIM, "ket": _VECTOR, "rho": _MATRIX},
    "required": ["dim"],
    "oneOf": [{"required": ["ket"]}, {"required": ["rho"]}],
}

POWER_SCHEMA = {
    "type": "object",
    "properties": {"label": {"type": ["string", "null"]}, "ket": _VECTOR, "matrix": _MATRIX},
    "oneOf": [{"required": ["ket"]}, {"required": ["matrix"]}],
}

POOL_SCHEMA = {
    "type": "object",
    "properties": {"dim": _DIM, "powers": {"type": "array", "items": POWER_SCHEMA}},
    "required": ["dim", "powers"],
}

SINGLE_POWER_SCHEMA = {
    "type": "object",
    "properties": {"dim": _DIM, **POWER_SCHEMA["properties"]},
    "required": ["dim"],
    "oneOf": POWER_SCHEMA["oneOf"],
}

INSTANCE_SCHEMA = {
    "type": "object",
    "properties": {
        "dim": _DIM,
        "vectors": {"type": "array", "items": _VECTOR, "minItems": 1},
        "contexts": {
            "type": "array",
            "items": {"type": "array", "items": {"type": "integer", "minimum": 0}},
        },
        "name": {"type": "string"},
    },
    "required": ["dim", "vectors"],
}

ARRANGEMENT_SCHEMA = {
    "type": "object",
    "properties": {
        "factor_dims": {"type": "array", "items": {"type": "integer", "minimum": 2}, "minItems": 1},
        "bases": {"type": "array", "items": {"type": "array", "items": _VECTOR}},
        "alpha": _MATRIX,
    },
    "required": ["factor_dims", "bases", "alpha"],
}

BASES_SCHEMA = {
    "type": "object",
    "properties": {
        "factor_dims": ARRANGEMENT_SCHEMA["properties"]["factor_dims"],
        "bases": ARRANGEMENT_SCHEMA["properties"]["bases"],
    },
    "required": ["bases"],
}

INDIVIDUAL_SCHEMA = {
    "type": "object",
    "properties": {
        "dim": _DIM,
        "powers": {"type": "array", "items": POWER_SCHEMA},
        "potentia": {"type": ["array", "null"], "items": {"type": "number"}},
        "complete": {"type": "boolean"},
        "certified": {"type": "boolean"},
    },
    "required": ["dim", "powers"],
}

VALUES_SCHEMA = {
    "type": "object",
    "properties": {
        "values": {"type": "array", "items": {"type": "number"}},
        "families": {"type": "array", "items": {"type": "array", "items": {"type": "integer"}}},
    },
    "required": ["values"],
}


def _path(parts) -> str:
    out = "$"
    for p in parts:
        out += f"[{p}]" if isinstance(p, int) else f".{p}"
    return out


def load_json(data: bytes | str, schema: dict) -> Any:
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise SchemaError("$", f"not UTF-8: {exc}") from None
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise SchemaError("$", f"invalid JSON: {exc}") from None
    try:
        jsonschema.validate(doc, schema)
    except jsonschema.ValidationError as exc:
        raise SchemaError(_path(exc.absolute_path), exc.message) from None
    return doc


def complex_vector(items, path: str = "$") -> np.ndarray:
    return np.array([complex(re, im) for re, im in items], dtype=complex)


def complex_matrix(rows, path: str = "$") -> np.ndarray:
    width = {len(r) for r in rows}
    if len(width) != 1:
        raise SchemaError(path, "matrix rows have unequal length")
    return np.array([[complex(re, im) for re, im in r] for r in rows], dtype=complex)


def encode_complex(z: complex) -> list[float]:
    z = complex(z)
    return [float(z.real), float(z.imag)]


def encode_vector(v) -> list:
    return [encode_complex(z) for z in np.asarray(v).reshape(-1)]


def encode_matrix(m) -> list:
    return [encode_vector(row) for row in np.asarray(m)]


def _check_len(n: int, dim: int, path: str) -> None:
    if n != dim:
        raise SchemaError(path, f"expected {dim} entries, found {n}")


def parse_state(data: bytes | str, tol: float = DEFAULT_TOL) -> IntensiveState:
    doc = load_json(data, STATE_SCHEMA)
    dim = doc["dim"]
    if "ket" in doc:
        _check_len(len(doc["ket"]), dim, "$.ket")
        return IntensiveState.from_ket(complex_vector(doc["ket"]), tol=tol)
    rho = complex_matrix(doc["rho"], "$.rho")
    _check_len(rho.shape[0], dim, "$.rho")
    _check_len(rho.shape[1], dim, "$.rho[0]")
    return IntensiveState(rho, tol=tol)


def dump_state(state: IntensiveState) -> dict:
    return {"dim": state.dim, "rho": encode_matrix(state.rho)}


def _power(doc: dict, dim: int, path: str, tol: float) -> Power:
    label = doc.get("label")
    if "ket" in doc:
        _check_len(len(doc["ket"]), dim, f"{path}.ket")
        return make_projector(complex_vector(doc["ket"]), label=label, tol=tol)
    m = complex_matrix(doc["matrix"], f"{path}.matrix")
    _check_len(m.shape[0], dim, f"{path}.matrix")
    _check_len(m.shape[1], dim, f"{path}.matrix[0]")
    return Power(m, label=label, tol=tol)


def dump_power(p: Power) -> dict:
    return {"label": p.label, "matrix": encode_matrix(p.op)}


def parse_pool(data: bytes | str, tol: float = DEFAULT_TOL) -> list[Power]:
    doc = load_json(data, POOL_SCHEMA)
    dim = doc["dim"]
    return [_power(p, dim, f"$.powers[{i}]", tol) for i, p in enumerate(doc["powers"])]


def dump_pool(powers) -> dict:
    powers = list(powers)
    return {"dim": powers[0].dim, "powers": [dump_power(p) for p in powers]}


def parse_power(data: bytes | str, tol: float = DEFAULT_TOL) -> Power:
    doc = load_json(data, SINGLE_POWER_SCHEMA)
    return _power(doc, doc["dim"], "$", tol)


def parse_instance(data: bytes | str) -> KsInstance:
    doc = load_json(data, INSTANCE_SCHEMA)
    dim = doc["dim"]
    for i, v in enumerate(doc["vectors"]):
        _check_len(len(v), dim, f"$.vectors[{i}]")
    vecs = np.array([complex_vector(v) for v in doc["vectors"]])
    ctxs = doc.get("contexts")
    n = len(vecs)
    for c, ctx in enumerate(ctxs or ()):
        for j, m in enumerate(ctx):
            if m >= n:
                raise SchemaError(f"$.contexts[{c}][{j}]", f"index {m} out of range for {n} vectors")
    return KsInstance(vecs, None if ctxs is None else [tuple(c) for c in ctxs], doc.get("name"))


def dump_instance(inst: KsInstance) -> dict:
    out = {"dim": inst.dim, "vectors": [encode_vector(v) for v in inst.vectors]}
    if inst.contexts is not None:
        out["contexts"] = [list(c) for c in inst.contexts]
    if inst.name is not None:
        out["name"] = inst.name
    return out


def bundled_instance(name: str = "cabello18") -> KsInstance:
    """Load a KS instance shipped with the package, checked against its integer rays."""
    text = resources.files("logos_qlab.data").joinpath(f"{name}.json").read_text("utf-8")
    inst = parse_instance(text)
    rays = json.loads(text).get("integer_rays")
    if rays is not None:
        r = np.array(rays, dtype=float)
        r /= np.linalg.norm(r, axis=1)[:, None]
        if r.shape != inst.vectors.shape or np.abs(r - inst.vectors).max() > 1e-15:
            raise QLabError(f"bundled instance {name!r}: vectors disagree with integer rays")
    return inst


def _bases(doc_bases, dims, path) -> list[np.ndarray]:
    if len(doc_bases) != len(dims):
        raise SchemaError(path, f"{len(doc_bases)} bases for {len(dims)} screens")
    out = []
    for k, (kets, d) in enumerate(zip(doc_bases, dims)):
        _check_len(len(kets), d, f"{path}[{k}]")
        for j, ket in enumerate(kets):
            _check_len(len(ket), d, f"{path}[{k}][{j}]")
        # Kets are stored one per row; the basis matrix holds them as columns.
        out.append(np.array([complex_vector(ket) for ket in kets]).T)
    return out


def parse_bases(data: bytes | str, factor_dims) -> list[np.ndarray]:
    doc = load_json(data, BASES_SCHEMA)
    dims = check_factorization(doc.get("factor_dims", factor_dims))
    if list(dims) != list(factor_dims):
        raise SchemaError("$.factor_dims", f"{list(dims)} does not match {list(factor_dims)}")
    return _bases(doc["bases"], dims, "$.bases")


def dump_arrangement(ea: ExperimentalArrangement) -> dict:
    return {
        "factor_dims": list(ea.factor_dims),
        "bases": [[encode_vector(b[:, j]) for j in range(b.shape[1])] for b in ea.bases],
        "alpha": encode_matrix(ea.alpha),
        "degree": ea.degree,
    }


def parse_arrangement(data: bytes | str, tol: float = DEFAULT_TOL) -> ExperimentalArrangement:
    """Rebuild an arrangement; the lab state is recovered from ``alpha`` and the bases."""
    doc = load_json(data, ARRANGEMENT_SCHEMA)
    dims = check_factorization(doc["factor_dims"])
    n = int(np.prod(dims))
    bases = _bases(doc["bases"], dims, "$.bases")
    alpha = complex_matrix(doc["alpha"], "$.alpha")
    _check_len(alpha.shape[0], n, "$.alpha")
    _check_len(alpha.shape[1], n, "$.alpha[0]")
    u = bases[0]
    for b in bases[1:]:
        u = np.kron(u, b)
    lab = IntensiveState(u @ alpha @ dagger(u), tol=tol)
    ea = build_arrangement(lab, dims, bases, tol)
    # Keep the stored coefficients rather than the recomputed ones.
    alpha.flags.writeable = False
    return ExperimentalArrangement(ea.lab, ea.factor_dims, ea.bases, alpha)


def dump_individual(ind: QuantumIndividual) -> dict:
    return {
        "dim": ind.dim,
        "powers": [dump_power(p) for p in ind.powers],
        "potentia": None if ind.potentia is None else list(ind.potentia),
        "complete": ind.complete,
        "rank": ind.rank,
        "certified": ind.certified,
        "method": ind.method,
        "pool_indices": list(ind.pool_indices),
    }


def parse_individual(data: bytes | str, tol: float = DEFAULT_TOL) -> QuantumIndividual:
    doc = load_json(data, INDIVIDUAL_SCHEMA)
    dim = doc["dim"]
    powers = tuple(_power(p, dim, f"$.powers[{i}]", tol) for i, p in enumerate(doc["powers"]))
    rank, complete = completeness_rank(powers, dim, tol)
    if "complete" in doc and doc["complete"] != complete:
        raise SchemaError("$.complete", f"recorded {doc['complete']}, recomputed {complete}")
    return QuantumIndividual(
        dim, powers, rank, complete, doc.get("potentia"),
        tuple(doc.get("pool_indices", range(len(powers)))),
        doc.get("method", "exact"), doc.get("certified", True),
    )


def dumps(doc: Any) -> str:
    """Canonical JSON text: sorted keys, two-space indent, trailing newline."""
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"
