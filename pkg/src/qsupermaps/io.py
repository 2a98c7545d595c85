"""JSON interchange format for Choi matrices.

A document looks like::

    {"kind": "supermap",
     "dims": {"a0": 2, "a1": 2, "b0": 2, "b1": 2},
     "matrix": [[[re, im], ...], ...],
     "meta": {...}}

``kind`` is ``"map"`` (dims ``in``/``out``), ``"supermap"`` (``a0``..``b1``)
or ``"state"`` (``d``).  Numbers are written with 17 significant digits, so
finite doubles survive a store/load cycle bit for bit.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Union

import numpy as np

from .errors import ParseError
from .maps import MapChoi
from .supermap import SuperChoi
from .tensor import HERMITIAN_RTOL, FactoredMatrix

_DIM_KEYS = {"map": ("in", "out"), "supermap": ("a0", "a1", "b0", "b1"), "state": ("d",)}


@dataclass(frozen=True, eq=False)
class ChoiFile:
    kind: str
    dims: dict
    matrix: np.ndarray
    meta: dict = field(default_factory=dict)

    def to_object(self, state_label: str = "B0") -> Union[MapChoi, SuperChoi, FactoredMatrix]:
        if self.kind == "map":
            return MapChoi.from_array(self.matrix, self.dims["in"], self.dims["out"])
        if self.kind == "supermap":
            return SuperChoi.from_array(self.matrix, tuple(self.dims[k] for k in _DIM_KEYS["supermap"]))
        return FactoredMatrix(self.matrix, ((state_label, self.dims["d"]),))

    @classmethod
    def from_object(cls, obj, meta: dict | None = None) -> "ChoiFile":
        meta = dict(meta or {})
        if isinstance(obj, SuperChoi):
            return cls("supermap", dict(zip(_DIM_KEYS["supermap"], obj.dims)), obj.data, meta)
        if isinstance(obj, MapChoi):
            return cls("map", {"in": obj.d_in, "out": obj.d_out}, obj.data, meta)
        if isinstance(obj, FactoredMatrix):
            return cls("state", {"d": obj.dim}, obj.data, meta)
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def _num(x: float) -> str:
    if not math.isfinite(x):
        raise ValueError(f"cannot serialize non-finite value {x!r}")
    text = "%.17g" % x
    # "-0" would read back as the integer 0 and lose its sign
    return "-0.0" if text == "-0" else text


def dumps(cf: ChoiFile) -> str:
    rows = []
    for row in np.asarray(cf.matrix, dtype=complex):
        rows.append("[" + ", ".join(f"[{_num(z.real)}, {_num(z.imag)}]" for z in row) + "]")
    parts = [
        f'"kind": {json.dumps(cf.kind)}',
        f'"dims": {json.dumps(cf.dims)}',
        '"matrix": [\n    ' + ",\n    ".join(rows) + "\n  ]",
    ]
    if cf.meta:
        parts.append(f'"meta": {json.dumps(cf.meta, sort_keys=True)}')
    return "{\n  " + ",\n  ".join(parts) + "\n}\n"


def _positive_int(v: Any, key: str) -> int:
    if isinstance(v, bool) or not isinstance(v, (int, float)) or v != int(v) or v < 1:
        raise ParseError(f"dimension {key!r} must be a positive integer, got {v!r}")
    return int(v)


def loads(text: str) -> ChoiFile:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ParseError("top level must be an object")
    kind = doc.get("kind")
    if kind not in _DIM_KEYS:
        raise ParseError(f"kind must be one of {sorted(_DIM_KEYS)}, got {kind!r}")
    dims_in = doc.get("dims")
    if not isinstance(dims_in, dict):
        raise ParseError("missing 'dims' object")
    try:
        dims = {k: _positive_int(dims_in[k], k) for k in _DIM_KEYS[kind]}
    except KeyError as exc:
        raise ParseError(f"dims lacks field {exc.args[0]!r}") from exc
    raw = doc.get("matrix")
    if not isinstance(raw, list) or not raw:
        raise ParseError("missing or empty 'matrix'")
    n = len(raw)
    data = np.empty((n, n), dtype=complex)
    for i, row in enumerate(raw):
        if not isinstance(row, list) or len(row) != n:
            raise ParseError(f"matrix row {i} does not have {n} entries")
        for j, entry in enumerate(row):
            if (not isinstance(entry, list) or len(entry) != 2
                    or not all(isinstance(v, (int, float)) and not isinstance(v, bool)
                               for v in entry)):
                raise ParseError(f"entry ({i}, {j}) must be a pair [re, im]")
            data[i, j] = complex(float(entry[0]), float(entry[1]))
    expected = int(np.prod(list(dims.values())))
    if n != expected:
        raise ParseError(f"matrix dimension {n} does not match dims product {expected}")
    if not np.all(np.isfinite(data)):
        raise ParseError("matrix has non-finite entries")
    scale = 1.0 + np.abs(data).max()
    if np.abs(data - data.conj().T).max() > HERMITIAN_RTOL * scale:
        raise ParseError("matrix is not Hermitian")
    meta = doc.get("meta") or {}
    if not isinstance(meta, dict):
        raise ParseError("'meta' must be an object")
    return ChoiFile(kind, dims, data, meta)


def load(path: Union[str, Path]) -> ChoiFile:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    return loads(text)


def store(path: Union[str, Path], obj, meta: dict | None = None) -> None:
    cf = obj if isinstance(obj, ChoiFile) else ChoiFile.from_object(obj, meta)
    Path(path).write_text(dumps(cf))
