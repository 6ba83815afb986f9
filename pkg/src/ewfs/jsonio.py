"""JSON interchange: scenario, correlation, inequality, certificate and vertex files.

Complex numbers are ``[re, im]`` pairs (plain numbers are read as real).
Floats are written with 17 significant digits so files round-trip exactly.
Setting indices are 0-based; the paper's setting label is index + 1.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any

import numpy as np

from .polytope import Inequality, LFDecomposition, MembershipCertificate, VertexSet
from .scenario import CorrelationTable, PointerAsk, make_scenario

SETTING_NOTE = "setting indices are 0-based; paper label x = index + 1"


class InvalidInput(ValueError):
    """Malformed input file; the message starts with the offending location."""

    def __init__(self, where: str, message: str):
        super().__init__(f"{where}: {message}")
        self.where = where


# ---------------------------------------------------------------------------
# writing


def _fmt_float(v: float) -> str:
    if not math.isfinite(v):
        raise ValueError(f"cannot serialize non-finite value {v!r}")
    if v == 0:
        return "0.0"
    s = format(v, ".17g")
    if "e" not in s and "." not in s:
        s += ".0"
    return s


def _plain(obj: Any) -> Any:
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    return obj


def _emit(obj: Any, indent: int, level: int) -> str:
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return _fmt_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    pad, inner = " " * (indent * level), " " * (indent * (level + 1))
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(not isinstance(v, (list, dict)) for v in obj) or all(
            isinstance(v, list) and all(not isinstance(w, (list, dict)) for w in v) for v in obj
        ):
            return "[" + ", ".join(_emit(v, indent, level + 1) for v in obj) + "]"
        return "[\n" + ",\n".join(inner + _emit(v, indent, level + 1) for v in obj) + "\n" + pad + "]"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = (inner + json.dumps(k) + ": " + _emit(v, indent, level + 1) for k, v in obj.items())
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj: Any, indent: int = 2) -> str:
    return _emit(_plain(obj), indent, 0) + "\n"


# ---------------------------------------------------------------------------
# reading helpers


def load_json(path: str | Path) -> Any:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise InvalidInput(str(path), f"cannot read file ({e.strerror})") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise InvalidInput(f"{path}:{e.lineno}:{e.colno}", f"malformed JSON ({e.msg})") from None


def _field(d: Any, key: str, where: str) -> Any:
    if not isinstance(d, dict):
        raise InvalidInput(where, "expected an object")
    if key not in d:
        raise InvalidInput(where, f"missing field {key!r}")
    return d[key]


def parse_complex(v: Any, where: str) -> complex:
    if isinstance(v, bool):
        raise InvalidInput(where, "expected a number or [re, im]")
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, list) and len(v) == 2 and all(isinstance(u, (int, float)) and not isinstance(u, bool) for u in v):
        return complex(v[0], v[1])
    raise InvalidInput(where, f"expected a number or [re, im], got {v!r}")


def _complex_vec(v: Any, where: str) -> np.ndarray:
    if not isinstance(v, list) or not v:
        raise InvalidInput(where, "expected a non-empty list of amplitudes")
    return np.array([parse_complex(u, f"{where}[{i}]") for i, u in enumerate(v)], dtype=complex)


def _basis(v: Any, where: str) -> list[np.ndarray]:
    if not isinstance(v, list) or not v:
        raise InvalidInput(where, "expected a non-empty list of basis vectors")
    return [_complex_vec(r, f"{where}[{i}]") for i, r in enumerate(v)]


def _int(d: dict, key: str, where: str, lo: int = 1) -> int:
    v = _field(d, key, where)
    if isinstance(v, bool) or not isinstance(v, int) or v < lo:
        raise InvalidInput(f"{where}.{key}", f"expected an integer >= {lo}, got {v!r}")
    return v


def _real_array(v: Any, shape: tuple[int, ...], where: str) -> np.ndarray:
    try:
        arr = np.array(v, dtype=float)
    except (TypeError, ValueError):
        raise InvalidInput(where, "expected a nested array of numbers") from None
    if arr.shape != shape:
        raise InvalidInput(where, f"expected shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInput(where, "non-finite entries")
    return arr


# ---------------------------------------------------------------------------
# scenarios


def scenario_from_dict(d: Any):
    systems = d.get("systems", {}) if isinstance(d, dict) else None
    if not isinstance(systems, dict):
        raise InvalidInput("systems", "expected an object mapping system names to dimensions")
    names = tuple(systems.get("names", ["S_A", "S_B", "F"]))
    dims = (int(systems.get("S_A", 2)), int(systems.get("S_B", 2)))
    initial = _complex_vec(_field(d, "initial_amps", "$"), "initial_amps")
    fb = _basis(_field(d, "friend_basis", "$"), "friend_basis")
    alice = []
    for i, s in enumerate(_field(d, "alice_settings", "$")):
        where = f"alice_settings[{i}]"
        kind = _field(s, "kind", where)
        if kind == "pointer_ask":
            alice.append(PointerAsk())
        elif kind == "reverse":
            alice.append((kind, _basis(_field(s, "basis", where), f"{where}.basis")))
        elif kind == "direct":
            outcomes = s.get("outcomes")
            if outcomes is not None and not (isinstance(outcomes, list) and all(
                    isinstance(o, int) and not isinstance(o, bool) for o in outcomes)):
                raise InvalidInput(f"{where}.outcomes", "expected a list of integer outcome labels")
            alice.append((kind, _basis(_field(s, "basis", where), f"{where}.basis"), outcomes))
        else:
            raise InvalidInput(f"{where}.kind", f"unknown setting kind {kind!r}")
    bob_raw = _field(d, "bob_settings", "$")
    if not isinstance(bob_raw, list) or not bob_raw:
        raise InvalidInput("bob_settings", "expected a non-empty list of bases")
    bob = [_basis(b, f"bob_settings[{j}]") for j, b in enumerate(bob_raw)]
    try:
        return make_scenario(initial, fb, alice, bob, dims=dims, names=names)
    except ValueError as e:
        raise InvalidInput("$", str(e)) from None


def scenario_to_dict(sc) -> dict:
    def basis(vs):
        return [list(v.amps) for v in vs]

    alice = []
    for s in sc.alice_settings:
        if isinstance(s, PointerAsk):
            alice.append({"kind": "pointer_ask"})
        elif s.kind == "reverse_and_measure":
            alice.append({"kind": "reverse", "basis": basis(s.basis)})
        else:
            entry = {"kind": "direct", "basis": basis(s.basis)}
            if s.outcomes is not None:
                entry["outcomes"] = list(s.outcomes)
            alice.append(entry)
    return {
        "systems": {"S_A": sc.sys_a.dim, "S_B": sc.sys_b.dim, "names": [sc.sys_a.name, sc.sys_b.name, sc.friend.name]},
        "initial_amps": list(sc.initial.amps),
        "friend_basis": basis(sc.friend_basis),
        "alice_settings": alice,
        "bob_settings": [basis(b) for b in sc.bob_settings],
    }


# ---------------------------------------------------------------------------
# tables, inequalities, certificates, vertices


def table_to_dict(t: CorrelationTable) -> dict:
    return {"note": SETTING_NOTE, "nx": t.nx, "ny": t.ny, "ka": t.ka, "kb": t.kb, "p": t.p}


def table_from_dict(d: Any, where: str = "$") -> CorrelationTable:
    shape = tuple(_int(d, k, where) for k in ("nx", "ny", "ka", "kb"))
    return CorrelationTable(_real_array(_field(d, "p", where), shape, f"{where}.p"))


def inequality_to_dict(iq: Inequality) -> dict:
    nx, ny, ka, kb = iq.dims
    return {"nx": nx, "ny": ny, "ka": ka, "kb": kb, "coeffs": iq.coeffs, "bound": iq.bound}


def inequality_from_dict(d: Any, where: str = "$") -> Inequality:
    shape = tuple(_int(d, k, where) for k in ("nx", "ny", "ka", "kb"))
    coeffs = _real_array(_field(d, "coeffs", where), shape, f"{where}.coeffs")
    bound = _field(d, "bound", where)
    if isinstance(bound, bool) or not isinstance(bound, (int, float)) or not math.isfinite(bound):
        raise InvalidInput(f"{where}.bound", f"expected a finite number, got {bound!r}")
    if not np.any(coeffs):
        raise InvalidInput(f"{where}.coeffs", "all coefficients are zero")
    return Inequality(coeffs, float(bound))


def certificate_to_dict(cert: MembershipCertificate) -> dict:
    w = cert.witness
    if isinstance(w, Inequality):
        witness = {"type": "separating_inequality", **inequality_to_dict(w)}
    elif isinstance(w, LFDecomposition):
        witness = {"type": "lf_decomposition", "weights": w.weights, "blocks": w.blocks}
    else:
        witness = {"type": "convex_weights", "weights": np.asarray(w)}
    return {"model": cert.model, "verdict": cert.verdict, "gap": cert.gap, "witness": witness}


def vertices_to_dict(vs: VertexSet) -> dict:
    nx, ny, ka, kb = vs.dims
    return {"note": SETTING_NOTE, "model": vs.model, "nx": nx, "ny": ny, "ka": ka, "kb": kb,
            "count": len(vs), "vertices": vs.vertices}


def tables_from_any(d: Any) -> list[CorrelationTable]:
    """A correlation file, or a vertex export (every vertex is returned)."""
    if isinstance(d, dict) and "vertices" in d:
        shape = tuple(_int(d, k, "$") for k in ("nx", "ny", "ka", "kb"))
        raw = d["vertices"]
        if not isinstance(raw, list) or not raw:
            raise InvalidInput("vertices", "expected a non-empty list of tables")
        return [CorrelationTable(_real_array(v, shape, f"vertices[{i}]")) for i, v in enumerate(raw)]
    return [table_from_dict(d)]
