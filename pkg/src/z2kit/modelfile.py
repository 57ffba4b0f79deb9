"""JSON model files.

Keys: name, dim, bands, n_occupied, lattice_vectors, hoppings (list of
{delta, matrix}), time_reversal_unitary, parameters and, optionally,
generator (a built-in name used to rebuild the model when a parameter is
changed). Complex entries are [re, im] pairs.
"""
from __future__ import annotations

import inspect
import json
import re

import numpy as np

from . import models
from .errors import SchemaError
from .model import BlochModel, TimeReversalOp

REQUIRED = ("name", "dim", "bands", "n_occupied", "lattice_vectors", "hoppings",
            "time_reversal_unitary", "parameters")
BUILTIN_PREFIX = "builtin:"


def _line_of(text, key):
    if text is None:
        return None
    m = re.search(r'"%s"\s*:' % re.escape(key), text)
    return text.count("\n", 0, m.start()) + 1 if m else None


def _complex_matrix(value, n, fld, line):
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        raise SchemaError(fld, "expected a matrix of [re, im] pairs", line) from None
    if arr.shape != (n, n, 2):
        raise SchemaError(fld, f"expected shape {n}x{n} of [re, im] pairs, got {arr.shape}", line)
    return arr[..., 0] + 1j * arr[..., 1]


def _int(value, fld, line):
    if isinstance(value, bool) or not isinstance(value, int):
        raise SchemaError(fld, f"expected an integer, got {value!r}", line)
    return value


def model_from_record(rec: dict, text: str | None = None) -> BlochModel:
    if not isinstance(rec, dict):
        raise SchemaError("<root>", "expected an object", 1)
    for key in REQUIRED:
        if key not in rec:
            raise SchemaError(key, "missing required field", None)
    line = lambda key: _line_of(text, key)  # noqa: E731
    if not isinstance(rec["name"], str):
        raise SchemaError("name", "expected a string", line("name"))
    dim = _int(rec["dim"], "dim", line("dim"))
    if not 1 <= dim <= 3:
        raise SchemaError("dim", f"must be 1, 2 or 3, got {dim}", line("dim"))
    bands = _int(rec["bands"], "bands", line("bands"))
    if bands <= 0 or bands % 2:
        raise SchemaError("bands", f"must be a positive even integer, got {bands}", line("bands"))
    n_occ = _int(rec["n_occupied"], "n_occupied", line("n_occupied"))
    if n_occ % 2 or not 0 < n_occ < bands:
        raise SchemaError("n_occupied", "must be even and between 0 and bands",
                          line("n_occupied"))
    try:
        lv = np.asarray(rec["lattice_vectors"], dtype=float)
    except (TypeError, ValueError):
        raise SchemaError("lattice_vectors", "expected real numbers",
                          line("lattice_vectors")) from None
    if lv.shape != (dim, dim):
        raise SchemaError("lattice_vectors", f"expected a {dim}x{dim} matrix",
                          line("lattice_vectors"))
    hops_in = rec["hoppings"]
    if not isinstance(hops_in, list) or not hops_in:
        raise SchemaError("hoppings", "expected a non-empty list", line("hoppings"))
    hops = {}
    for i, h in enumerate(hops_in):
        fld = f"hoppings[{i}]"
        if not isinstance(h, dict) or "delta" not in h or "matrix" not in h:
            raise SchemaError(fld, "expected an object with 'delta' and 'matrix'", line("hoppings"))
        delta = h["delta"]
        if (not isinstance(delta, list) or len(delta) != dim
                or any(isinstance(x, bool) or not isinstance(x, int) for x in delta)):
            raise SchemaError(fld + ".delta", f"expected {dim} integers", line("hoppings"))
        T = _complex_matrix(h["matrix"], bands, fld + ".matrix", line("hoppings"))
        key = tuple(delta)
        hops[key] = hops.get(key, 0) + T
    U = _complex_matrix(rec["time_reversal_unitary"], bands, "time_reversal_unitary",
                        line("time_reversal_unitary"))
    params = rec["parameters"]
    if not isinstance(params, dict) or any(
            isinstance(v, bool) or not isinstance(v, (int, float)) for v in params.values()):
        raise SchemaError("parameters", "expected a map of names to real numbers",
                          line("parameters"))
    gen = rec.get("generator")
    if gen is not None and gen not in models.BUILTINS:
        raise SchemaError("generator", f"unknown generator {gen!r}", line("generator"))
    tr = TimeReversalOp(U)
    return BlochModel(rec["name"], dim, n_occ, hops, tr, parameters=dict(params),
                      lattice_vectors=lv, generator=gen)


def _pairs(M):
    M = np.asarray(M, dtype=complex)
    # + 0.0 turns -0.0 into 0.0 so dumps(loads(text)) == text
    return (np.stack([M.real, M.imag], axis=-1) + 0.0).tolist()


def model_to_record(model: BlochModel) -> dict:
    rec = {
        "name": model.name,
        "dim": model.dim,
        "bands": model.bands,
        "n_occupied": model.n_occupied,
        "lattice_vectors": np.asarray(model.lattice_vectors, dtype=float).tolist(),
        "hoppings": [{"delta": list(d), "matrix": _pairs(T)} for d, T in model.hoppings.items()],
        "time_reversal_unitary": _pairs(model.tr_op.U),
        "parameters": {k: float(v) for k, v in model.parameters.items()},
    }
    if model.generator is not None:
        rec["generator"] = model.generator
    return rec


def loads(text: str) -> BlochModel:
    try:
        rec = json.loads(text)
    except json.JSONDecodeError as e:
        raise SchemaError("<document>", e.msg, e.lineno) from None
    return model_from_record(rec, text)


def dumps(model: BlochModel) -> str:
    return json.dumps(model_to_record(model), indent=1, sort_keys=True) + "\n"


def load_model(source: str, overrides: dict | None = None) -> BlochModel:
    """Load ``builtin:<name>`` or a JSON file; ``overrides`` rebuild via the generator."""
    overrides = dict(overrides or {})
    if source.startswith(BUILTIN_PREFIX):
        name = source[len(BUILTIN_PREFIX):]
        if name not in models.BUILTINS:
            raise SchemaError("model", f"unknown built-in model {name!r}; "
                              f"choose from {sorted(models.BUILTINS)}")
        known = inspect.signature(models.BUILTINS[name]).parameters
        for key in overrides:
            if key not in known:
                raise SchemaError("parameters", f"model has no parameter {key!r}; "
                                  f"available: {sorted(known)}")
        return models.build(name, **overrides)
    with open(source, encoding="utf-8") as fh:
        model = loads(fh.read())
    if overrides:
        model = with_parameters(model, overrides)
    return model


def with_parameters(model: BlochModel, overrides: dict) -> BlochModel:
    """Rebuild ``model`` from its generator with some parameters replaced."""
    for key in overrides:
        if key not in model.parameters:
            raise SchemaError("parameters", f"model has no parameter {key!r}")
    if model.generator is None:
        raise SchemaError("generator", "changing parameters needs a generator entry")
    params = dict(model.parameters)
    params.update(overrides)
    new = models.build(model.generator, **params)
    new.name = model.name
    return new


def save_model(model: BlochModel, path: str):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(model))
