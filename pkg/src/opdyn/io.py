"""JSON schemas for operators, nets and vectors; report serialization.

Operators::

    {"field": "real"|"complex", "norm": "l1"|"l2"|"sup", "kind": ...,
     "entries": [[...]], "angle": a, "direction": d, "weights": w,
     "summands": [...]}

Complex scalars are ``[re, im]`` pairs.  A rescaled norm is written as
``{"base": "l2", "horizon": N}``.  Vectors are ``{"index": coefficient}``
maps; nets are ``{"mesh": m, "centers": [vector, ...]}``.
"""

from __future__ import annotations

import dataclasses
import enum
import json
import math
import re
from fractions import Fraction
from pathlib import Path
from typing import Any, List, Optional, Sequence

import numpy as np

from .errors import InvariantViolation, ParseError
from .operators import (
    DenseMatrix,
    Direction,
    DirectSum,
    Generator,
    Operator,
    RotationBlock,
    StochasticMatrix,
    WeightedShift,
    _BilateralInverse,
    rescale,
)
from .orbits import CompactNet
from .vectors import NormKind, Rescaled, ScalarField, SparseVector

KINDS = ("dense", "rotation", "shift", "stochastic", "direct_sum", "generator")


# ---------------------------------------------------------------------------
# parsing


class _Source:
    """Raw text kept around to attach line numbers to schema errors."""

    def __init__(self, text: str, name: str = "<input>"):
        self.text = text
        self.name = name

    def line_of(self, key: str) -> int:
        m = re.search(r'"%s"\s*:' % re.escape(key), self.text)
        return self.text.count("\n", 0, m.start()) + 1 if m else 1

    def fail(self, key: str, reason: str):
        raise ParseError(self.line_of(key), reason)


def _load_json(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.lineno, exc.msg) from None


def _read(path) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise ParseError(0, f"cannot read {path}: {exc.strerror}") from None


def _pair_imag(v) -> bool:
    return isinstance(v, list) and len(v) == 2 and _is_pair_scalar(v) and v[1] != 0


def _has_complex(obj: dict) -> bool:
    """Whether a spec without a field tag carries a genuinely complex scalar."""
    entries = obj.get("entries")
    if isinstance(entries, list) and any(
        _pair_imag(v) for row in entries if isinstance(row, list) for v in row
    ):
        return True
    weights = obj.get("weights")
    if isinstance(weights, list) and any(_pair_imag(w) for w in weights):
        return True
    summands = obj.get("summands")
    return isinstance(summands, list) and any(isinstance(x, dict) and _has_complex(x) for x in summands)


def _field(obj: dict, src: _Source, default: Optional[ScalarField] = None) -> ScalarField:
    raw = obj.get("field")
    if raw is None:
        if default is not None:
            return default
        # absent tag: complex only if some [re, im] pair has a nonzero imaginary part
        return ScalarField.COMPLEX if _has_complex(obj) else ScalarField.REAL
    try:
        return ScalarField(raw)
    except ValueError:
        src.fail("field", f"unknown field {raw!r}")


def _norm(obj: dict, src: _Source, default: NormKind):
    raw = obj.get("norm")
    if raw is None:
        return default
    if isinstance(raw, dict):
        try:
            return Rescaled(NormKind(raw["base"]), int(raw.get("horizon", 1000)))
        except (KeyError, ValueError, TypeError):
            src.fail("norm", f"malformed rescaled norm {raw!r}")
    try:
        return NormKind(raw)
    except ValueError:
        src.fail("norm", f"unknown norm {raw!r}")


def _scalar(value, field: ScalarField, src: _Source, key: str):
    if isinstance(value, bool):
        src.fail(key, f"boolean is not a scalar: {value!r}")
    if isinstance(value, (int, float)):
        return float(value) if field is ScalarField.REAL else complex(value)
    if isinstance(value, list) and len(value) == 2 and all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
    ):
        z = complex(value[0], value[1])
        if field is ScalarField.REAL:
            if z.imag != 0:
                raise InvariantViolation("field", f"complex entry {value!r} in a real-field spec")
            return z.real
        return z
    src.fail(key, f"not a scalar: {value!r}")


def _matrix(rows, field: ScalarField, src: _Source, key: str = "entries") -> np.ndarray:
    if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
        src.fail(key, "entries must be a non-empty array of rows")
    d = len(rows)
    if any(len(r) != d for r in rows):
        raise InvariantViolation("shape", "entries must form a square matrix")
    out = np.empty((d, d), dtype=field.dtype)
    for i, row in enumerate(rows):
        for j, v in enumerate(row):
            out[i, j] = _scalar(v, field, src, key)
    return out


def operator_from_obj(obj: Any, src: Optional[_Source] = None, parent_field: Optional[ScalarField] = None) -> Operator:
    src = src or _Source(json.dumps(obj))
    if not isinstance(obj, dict):
        raise ParseError(1, "operator spec must be a JSON object")
    kind = obj.get("kind")
    if kind not in KINDS:
        src.fail("kind", f"unknown kind {kind!r}; expected one of {', '.join(KINDS)}")
    field = _field(obj, src, parent_field)
    if kind == "stochastic":
        norm = _norm(obj, src, NormKind.L1)
    else:
        norm = _norm(obj, src, NormKind.L2)
    base_norm = norm.base if isinstance(norm, Rescaled) else norm
    if kind in ("dense", "stochastic", "generator"):
        if "entries" not in obj:
            src.fail("kind", f"{kind} spec needs 'entries'")
        M = _matrix(obj["entries"], field, src)
        cls = {"dense": DenseMatrix, "stochastic": StochasticMatrix, "generator": Generator}[kind]
        T = cls(M, field, base_norm)
    elif kind == "rotation":
        angle = obj.get("angle")
        if not isinstance(angle, (int, float)) or isinstance(angle, bool):
            src.fail("angle", "rotation spec needs a numeric 'angle'")
        T = RotationBlock(float(angle), field, base_norm)
    elif kind == "shift":
        try:
            direction = Direction(obj.get("direction", "forward"))
        except ValueError:
            src.fail("direction", f"unknown direction {obj.get('direction')!r}")
        raw = obj.get("weights", 1.0)
        if isinstance(raw, list) and not (len(raw) == 2 and field is ScalarField.COMPLEX and _is_pair_scalar(raw)):
            weights = [_scalar(w, field, src, "weights") for w in raw]
        else:
            weights = _scalar(raw, field, src, "weights")
        T = WeightedShift(direction, weights, field, base_norm)
        if obj.get("inverse"):
            T = _BilateralInverse(T)
    else:
        summands = obj.get("summands")
        if not isinstance(summands, list) or not summands:
            src.fail("summands", "direct_sum spec needs a non-empty 'summands' array")
        parts = [operator_from_obj(s, src, field) for s in summands]
        T = DirectSum(parts, field, base_norm)
    if isinstance(norm, Rescaled):
        T = rescale(T, norm.horizon)
    return T


def _is_pair_scalar(raw) -> bool:
    # a bare [re, im] pair is one complex weight, not a two-periodic sequence
    return all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in raw)


def parse_operator(text: str, name: str = "<input>") -> Operator:
    src = _Source(text, name)
    return operator_from_obj(_load_json(text), src)


def load_operator(path) -> Operator:
    return parse_operator(_read(path), str(path))


def vector_from_obj(obj: Any, field: ScalarField, src: Optional[_Source] = None) -> SparseVector:
    src = src or _Source(json.dumps(obj))
    if not isinstance(obj, dict):
        raise ParseError(1, "a vector is an {\"index\": coefficient} object")
    coef = {}
    for key, value in obj.items():
        try:
            idx = int(key)
        except ValueError:
            src.fail(key, f"vector index {key!r} is not an integer")
        coef[idx] = _scalar(value, field, src, key)
    return SparseVector(coef, field)


def vectors_from_obj(obj: Any, field: ScalarField, src: Optional[_Source] = None) -> List[SparseVector]:
    """A single vector map, a list of them, or ``{"vectors": [...]}``."""
    if isinstance(obj, dict) and "vectors" in obj:
        obj = obj["vectors"]
    if isinstance(obj, list):
        return [vector_from_obj(v, field, src) for v in obj]
    return [vector_from_obj(obj, field, src)]


def load_vectors(path, field: ScalarField) -> List[SparseVector]:
    text = _read(path)
    return vectors_from_obj(_load_json(text), field, _Source(text, str(path)))


def net_from_obj(obj: Any, field: ScalarField, src: Optional[_Source] = None) -> CompactNet:
    src = src or _Source(json.dumps(obj))
    if not isinstance(obj, dict):
        raise ParseError(1, "a net is a {\"mesh\": m, \"centers\": [...]} object")
    mesh = obj.get("mesh")
    if not isinstance(mesh, (int, float)) or isinstance(mesh, bool):
        src.fail("mesh", "net needs a numeric 'mesh'")
    if not (mesh > 0 and math.isfinite(mesh)):
        raise InvariantViolation("mesh", f"mesh must be positive, got {mesh!r}")
    centers = obj.get("centers")
    if not isinstance(centers, list) or not centers:
        src.fail("centers", "net needs a non-empty 'centers' array")
    return CompactNet([vector_from_obj(c, field, src) for c in centers], float(mesh))


def load_net(path, field: ScalarField) -> CompactNet:
    text = _read(path)
    return net_from_obj(_load_json(text), field, _Source(text, str(path)))


def parse_inputs(op_path, net_path=None, vec_path=None):
    """Operator, optional net and optional vectors, all validated at load."""
    T = load_operator(op_path)
    K = load_net(net_path, T.field) if net_path else None
    vecs = load_vectors(vec_path, T.field) if vec_path else None
    return T, K, vecs


# ---------------------------------------------------------------------------
# serialization


def _scalar_out(z):
    if isinstance(z, complex):
        return [z.real, z.imag]
    return float(z)


def _matrix_out(M: np.ndarray, field: ScalarField):
    if field is ScalarField.COMPLEX:
        return [[[complex(v).real, complex(v).imag] for v in row] for row in M.tolist()]
    return [[float(v) for v in row] for row in np.real(M).tolist()]


def _norm_out(norm):
    if isinstance(norm, Rescaled):
        return {"base": norm.base.value, "horizon": norm.horizon}
    return norm.value


def operator_to_obj(T: Operator) -> dict:
    out = {"field": T.field.value, "norm": _norm_out(T.norm)}
    if isinstance(T, _BilateralInverse):
        out.update(operator_to_obj(T._source))
        out["norm"] = _norm_out(T.norm)
        out["inverse"] = True
        return out
    if isinstance(T, Generator):
        out.update(kind="generator", entries=_matrix_out(T.matrix(), T.field))
    elif isinstance(T, StochasticMatrix):
        out.update(kind="stochastic", entries=_matrix_out(T.entries, ScalarField.REAL))
    elif isinstance(T, DenseMatrix):
        out.update(kind="dense", entries=_matrix_out(T.matrix(), T.field))
    elif isinstance(T, RotationBlock):
        out.update(kind="rotation", angle=T.angle)
    elif isinstance(T, WeightedShift):
        w = [_scalar_out(x) for x in T.weights]
        out.update(kind="shift", direction=T.direction.value, weights=w[0] if len(w) == 1 else w)
    elif isinstance(T, DirectSum):
        out.update(kind="direct_sum", summands=[operator_to_obj(s) for s in T.summands])
    else:
        raise TypeError(f"cannot serialize {T!r}")
    return out


def vector_to_obj(x: SparseVector) -> dict:
    return {str(k): _scalar_out(v) for k, v in x.items()}


def net_to_obj(K: CompactNet) -> dict:
    return {"mesh": K.mesh, "centers": [vector_to_obj(c) for c in K.centers]}


def to_jsonable(obj: Any) -> Any:
    """Recursively convert report objects to JSON-compatible values.

    Non-finite floats become the strings ``"inf"``, ``"-inf"`` and ``"nan"``.
    """
    if obj is None or isinstance(obj, (bool, str)):
        return obj
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating, Fraction)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, (complex, np.complexfloating)):
        return [to_jsonable(obj.real), to_jsonable(obj.imag)]
    if isinstance(obj, SparseVector):
        return {k: to_jsonable(v) for k, v in vector_to_obj(obj).items()}
    if isinstance(obj, CompactNet):
        return to_jsonable(net_to_obj(obj))
    if isinstance(obj, Operator):
        return operator_to_obj(obj)
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()] if obj.ndim else to_jsonable(obj.item())
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, range)):
        return [to_jsonable(v) for v in obj]
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj: Any) -> str:
    """Deterministic JSON: sorted keys, shortest round-trip floats."""
    return json.dumps(to_jsonable(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def decomposition_to_obj(D) -> dict:
    return {
        "dim_L": D.dim_L,
        "dim_X0": D.dim_X0,
        "L_basis": [vector_to_obj(b) for b in D.L_basis],
        "X0_basis": [vector_to_obj(b) for b in D.X0_basis],
        "projector": _matrix_out(D.projector, D.field),
        "decay": D.decay,
        "rate": D.rate,
        "constant": D.constant,
        "projector_norm": D.projector_norm,
        "eigenvalues": [[complex(z).real, complex(z).imag] for z in D.eigenvalues],
        "gap_eigenvalues": [[z.real, z.imag] for z in D.gap_eigenvalues],
    }


def weyl_to_obj(W) -> dict:
    lam = complex(W.lam)
    return {
        "lambda": [lam.real, lam.imag],
        "vectors": [vector_to_obj(v) for v in W.vectors],
        "residuals": list(W.residuals),
        "separation": W.separation,
        "finite_dimensional": W.finite_dimensional,
        "branch": W.branch,
    }


def supercyclic_to_obj(V, targets: Sequence[SparseVector], chain: Sequence[dict] = ()) -> dict:
    evidence = []
    for e in V.evidence:
        if e is None:
            continue
        rec = dict(e)
        rec["target"] = vector_to_obj(targets[e["target"]])
        rec["target_index"] = e["target"]
        evidence.append(rec)
    out = {
        "classification": V.classification,
        "density_gap": V.density_gap,
        "doubled_horizon_gap": V.doubled_gap,
        "nonvanishing_gap": V.nonvanishing_gap,
        "vanishing_index": V.vanishing_index,
        "horizon": V.horizon,
        "tol": V.tol,
        "evidence": evidence,
        "chain": list(chain),
    }
    if V.lower_bounds is not None:
        out["lower_bounds"] = V.lower_bounds
        out["doubled_horizon_lower_bounds"] = V.doubled_lower_bounds
    if V.allowance is not None:
        out["mesh_allowance"] = V.allowance
    return out
