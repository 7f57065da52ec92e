"""Structured verification records and their text serialization."""
from __future__ import annotations

import hashlib
import json
import math
import time
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field, fields

import numpy as np


def summarize(value) -> dict:
    """Compact, JSON-friendly summary of an array-like value."""
    arr = np.asarray(value)
    if np.iscomplexobj(arr):
        arr = arr.real
    arr = arr.astype(float)
    if arr.size == 0:
        return {"shape": list(arr.shape), "norm": 0.0}
    out = {"shape": list(arr.shape), "norm": float(np.linalg.norm(arr.ravel()))}
    if arr.size == 1:
        out["value"] = float(arr.ravel()[0])
    else:
        out["min"] = float(arr.min())
        out["max"] = float(arr.max())
    return out


def digest(*parts) -> str:
    h = hashlib.sha256()
    for p in parts:
        if isinstance(p, np.ndarray):
            h.update(np.ascontiguousarray(p).tobytes())
        else:
            h.update(repr(p).encode())
    return h.hexdigest()[:16]


def relative_residual(lhs, rhs, floor: float = 1e-300) -> tuple[float, float]:
    """(absolute, relative) Frobenius misfit; relative to the larger side."""
    lhs, rhs = np.asarray(lhs), np.asarray(rhs)
    diff = float(np.linalg.norm(np.ravel(lhs - rhs)))
    scale = max(float(np.linalg.norm(np.ravel(lhs))), float(np.linalg.norm(np.ravel(rhs))))
    return diff, diff / max(scale, floor) if scale > 0 else diff


@dataclass
class VerificationReport:
    check_id: str
    anchor: str
    residual: float
    tolerance: float
    residual_abs: float = float("nan")
    residual_rel: float = float("nan")
    lhs: dict = field(default_factory=dict)
    rhs: dict = field(default_factory=dict)
    inputs_digest: str = ""
    seed: int | None = None
    duration_ms: float = 0.0
    asserted: bool = True
    notes: str = ""
    passed: bool = field(init=False)

    def __post_init__(self):
        self.residual = float(self.residual)
        self.tolerance = float(self.tolerance)
        self.passed = bool(self.residual <= self.tolerance)

    @classmethod
    def compare(cls, check_id, anchor, lhs, rhs, tolerance, *, relative=True, **kw):
        """Build a report from two sides; ``relative`` picks which residual is judged."""
        ab, rel = relative_residual(lhs, rhs)
        return cls(
            check_id=check_id,
            anchor=anchor,
            residual=rel if relative else ab,
            tolerance=tolerance,
            residual_abs=ab,
            residual_rel=rel,
            lhs=summarize(lhs),
            rhs=summarize(rhs),
            **kw,
        )

    def to_dict(self, timing: bool = True) -> dict:
        d = asdict(self)
        if not timing:
            d.pop("duration_ms")
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "VerificationReport":
        names = {f.name for f in fields(cls) if f.init}
        rep = cls(**{k: v for k, v in d.items() if k in names})
        if "passed" in d and bool(d["passed"]) != rep.passed:
            raise ValueError(f"inconsistent pass flag in record {d.get('check_id')}")
        return rep

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        if not self.asserted:
            flag = "INFO"
        return f"[{flag}] {self.check_id}: residual={self.residual:.3e} tol={self.tolerance:.1e}"


def _clean(obj):
    # json cannot carry nan/inf; encode them as strings so records round-trip
    if isinstance(obj, float):
        if math.isnan(obj) or math.isinf(obj):
            return repr(obj)
        return obj
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def _unclean(obj):
    if isinstance(obj, str) and obj in ("nan", "inf", "-inf"):
        return float(obj)
    if isinstance(obj, dict):
        return {k: _unclean(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_unclean(v) for v in obj]
    return obj


def dumps(records, meta: dict | None = None, timing: bool = True, data: dict | None = None) -> str:
    """Serialize records as JSON.

    Durations go to a separate ``timing`` section so that the ``records``
    payload is byte-identical across runs with the same configuration.
    """
    doc = {"meta": meta or {}, "records": [r.to_dict(timing=False) for r in records]}
    if data:
        doc["data"] = data
    if timing:
        doc["timing_ms"] = [r.duration_ms for r in records]
    return json.dumps(_clean(doc), indent=1, sort_keys=True)


def payload(text: str) -> str:
    """The timing-free part of a serialized document."""
    doc = json.loads(text)
    doc.pop("timing_ms", None)
    return json.dumps(doc, indent=1, sort_keys=True)


def loads(text: str) -> tuple[dict, list[VerificationReport]]:
    doc = _unclean(json.loads(text))
    recs = [VerificationReport.from_dict(d) for d in doc["records"]]
    for r, ms in zip(recs, doc.get("timing_ms", [])):
        r.duration_ms = float(ms)
    return doc.get("meta", {}), recs


@contextmanager
def timer():
    box = {"ms": 0.0}
    t0 = time.perf_counter()
    try:
        yield box
    finally:
        box["ms"] = (time.perf_counter() - t0) * 1e3
