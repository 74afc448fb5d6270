"""JSON encoding of matrices, states, algebras, maps and protocol trees.

Complex numbers are ``[re, im]`` pairs and matrices are nested row arrays.  Python's float
formatting is round-trip exact, so decoding an encoded array reproduces it bit for bit.
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .algebra import AlgebraRep, from_basis
from .maps import ExplicitMap, ProtocolRound
from .registry import AlgebraSpec, SpecError, build
from .states import DensityMatrix, PureState


class InputError(ValueError):
    """Malformed or inconsistent JSON input."""


def encode_complex(z) -> list:
    z = complex(z)
    return [z.real, z.imag]


def encode_array(a) -> list:
    """Nested lists with complex entries as ``[re, im]`` pairs."""
    a = np.asarray(a, dtype=complex)
    return np.stack([a.real, a.imag], axis=-1).tolist()


def decode_array(data, ndim: int | None = None) -> np.ndarray:
    """Inverse of :func:`encode_array`; real entries without a pair are accepted too."""
    try:
        arr = np.asarray(data, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InputError(f"ragged or non-numeric array: {exc}") from None
    if arr.ndim >= 1 and arr.shape[-1] == 2 and (ndim is None or arr.ndim == ndim + 1):
        out = arr[..., 0] + 1j * arr[..., 1]
    else:
        out = arr.astype(complex)
    if ndim is not None and out.ndim != ndim:
        raise InputError(f"expected a {ndim}-dimensional array, got shape {out.shape}")
    return out


def encode_state(state) -> dict:
    if isinstance(state, PureState):
        return {"dim": state.dim, "amplitudes": encode_array(state.amplitudes)}
    if isinstance(state, DensityMatrix):
        return {"dim": state.dim, "matrix": encode_array(state.matrix)}
    raise TypeError(f"cannot encode {type(state).__name__}")


def decode_state(data) -> PureState | DensityMatrix:
    if not isinstance(data, dict) or "dim" not in data:
        raise InputError("state must be an object with 'dim' and 'amplitudes' or 'matrix'")
    dim = int(data["dim"])
    if "amplitudes" in data:
        vec = decode_array(data["amplitudes"], 1)
        if vec.size != dim:
            raise InputError(f"'dim' is {dim} but {vec.size} amplitudes were given")
        return PureState(vec) if not data.get("normalize") else PureState.normalized(vec)
    if "matrix" in data:
        m = decode_array(data["matrix"], 2)
        if m.shape != (dim, dim):
            raise InputError(f"'dim' is {dim} but the matrix has shape {m.shape}")
        return DensityMatrix(m)
    raise InputError("state needs 'amplitudes' or 'matrix'")


def encode_algebra_spec(spec) -> dict:
    spec = AlgebraSpec.coerce(spec)
    return {"kind": spec.kind, "params": spec.params}


def decode_algebra(data) -> AlgebraRep:
    if not isinstance(data, dict):
        raise InputError("algebra must be an object")
    if "custom_basis" in data:
        mats = [decode_array(m, 2) for m in data["custom_basis"]]
        return from_basis(mats, meta={"kind": "custom"}, check_closure=True)
    if "kind" not in data:
        raise InputError("algebra needs 'kind' or 'custom_basis'")
    params = dict(data.get("params", {}))
    if "basis" in params:
        params["basis"] = [decode_array(m, 2) for m in params["basis"]]
    return build(AlgebraSpec(data["kind"], params))


def encode_map(m: ExplicitMap) -> dict:
    out = {"kraus": [encode_array(c) for c in m.kraus]}
    if m.certificates is not None:
        out["certificates"] = [to_jsonable(c) for c in m.certificates]
    return out


def decode_map(data) -> ExplicitMap:
    if not isinstance(data, dict) or "kraus" not in data:
        raise InputError("map must be an object with a 'kraus' list")
    ops = [decode_array(c, 2) for c in data["kraus"]]
    certs = data.get("certificates")
    if certs is not None:
        certs = tuple(_decode_certificate(c) for c in certs)
    return ExplicitMap(tuple(ops), certificates=certs)


def _decode_certificate(c):
    if c is None or c.get("kind") != "exp":
        return c
    return {"kind": "exp", "elements": [decode_array(x, 2) for x in c.get("elements", [])]}


def decode_protocol(data) -> ProtocolRound:
    """``{"kraus": [...], "branches": [subtree | null, ...]}``; a plain map is one round."""
    m = decode_map(data)
    br = data.get("branches")
    if br is None:
        return ProtocolRound(m)
    if len(br) != len(m):
        raise InputError("one branch entry per Kraus operator is required")
    return ProtocolRound(m, tuple(None if b is None else decode_protocol(b) for b in br))


def encode_protocol(p: ProtocolRound) -> dict:
    out = encode_map(p.map)
    if p.branches is not None:
        out["branches"] = [None if b is None else encode_protocol(b) for b in p.branches]
    return out


def load(source):
    """Parse JSON from a file path or an inline JSON string."""
    if isinstance(source, (dict, list)):
        return source
    text = str(source).strip()
    if text[:1] in "{[":
        return json.loads(text)
    path = Path(text)
    if not path.is_file():
        raise InputError(f"no such file: {text}")
    return json.loads(path.read_text())


def dumps(obj) -> str:
    return json.dumps(to_jsonable(obj), indent=2, allow_nan=True)


def to_jsonable(obj):
    """Recursively convert numpy values to JSON-compatible Python objects."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            return encode_array(obj)
        return obj.tolist()
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return encode_complex(obj)
    return obj


def write_atomic(path, text: str) -> None:
    """Write ``text`` to ``path`` through a temporary file and a rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


__all__ = [
    "InputError",
    "SpecError",
    "decode_algebra",
    "decode_array",
    "decode_map",
    "decode_protocol",
    "decode_state",
    "dumps",
    "encode_algebra_spec",
    "encode_array",
    "encode_map",
    "encode_protocol",
    "encode_state",
    "load",
    "to_jsonable",
    "write_atomic",
]
