"""Scalar fields, norm tags and finitely supported sequence vectors."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from numbers import Number
from typing import Iterable, Mapping, Union

import numpy as np

from .errors import FieldMismatch, IndexDomainViolation


class ScalarField(Enum):
    REAL = "real"
    COMPLEX = "complex"

    @property
    def dtype(self):
        return np.float64 if self is ScalarField.REAL else np.complex128


class NormKind(Enum):
    L1 = "l1"
    L2 = "l2"
    SUP = "sup"

    @property
    def ord(self):
        """The ``ord`` argument numpy uses for this norm (vectors and induced)."""
        return {NormKind.L1: 1, NormKind.L2: 2, NormKind.SUP: np.inf}[self]


@dataclass(frozen=True)
class Rescaled:
    """Norm ``sup_n ||T^n x||`` over the base norm, truncated at ``horizon``.

    Only :func:`opdyn.operators.rescale` builds operators tagged with it, after
    certifying power-boundedness.
    """

    base: NormKind
    horizon: int = 1000

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be positive")


NormTag = Union[NormKind, Rescaled]


def base_kind(tag: NormTag) -> NormKind:
    return tag.base if isinstance(tag, Rescaled) else tag


def _exact_abs_sq(c) -> Fraction:
    if isinstance(c, complex):
        return Fraction(c.real) ** 2 + Fraction(c.imag) ** 2
    return Fraction(c) ** 2


def _coerce(value, field: ScalarField):
    if field is ScalarField.REAL:
        if isinstance(value, (complex, np.complexfloating)):
            if value.imag != 0:
                raise FieldMismatch("complex coefficient in a real vector")
            value = value.real
        return float(value)
    return complex(value)


class SparseVector:
    """Finitely supported vector ``sqrt(scale_sq) * sum_k c_k e_k``.

    Indices are unbounded Python integers (negative ones are allowed for
    bilateral models).  Zero coefficients are never stored.  The common
    factor ``scale_sq`` is an exact rational, so vectors like
    ``n^{-1/2} (e_a + ... + e_{a+n-1})`` keep an exact squared L2 norm;
    see :meth:`norm_sq_exact`.
    """

    __slots__ = ("_coef", "field", "scale_sq", "_norm_cache")

    def __init__(
        self,
        coefficients: Union[Mapping[int, Number], Iterable] = (),
        field: ScalarField = ScalarField.REAL,
        scale_sq: Union[int, Fraction] = 1,
    ):
        items = coefficients.items() if isinstance(coefficients, Mapping) else coefficients
        coef = {}
        for k, v in items:
            if int(k) != k:
                raise IndexDomainViolation(f"non-integer index {k!r}")
            v = _coerce(v, field)
            if v != 0:
                coef[int(k)] = v
        scale_sq = Fraction(scale_sq)
        if scale_sq <= 0:
            raise ValueError("scale_sq must be positive")
        self._coef = dict(sorted(coef.items()))
        self.field = field
        self.scale_sq = scale_sq
        self._norm_cache = {}

    @classmethod
    def _raw(cls, coef: dict, field: ScalarField, scale_sq: Fraction) -> "SparseVector":
        # trusted constructor: coef already coerced, sorted and zero-free
        obj = cls.__new__(cls)
        obj._coef = coef
        obj.field = field
        obj.scale_sq = scale_sq
        obj._norm_cache = {}
        return obj

    @classmethod
    def basis(cls, index: int, field: ScalarField = ScalarField.REAL) -> "SparseVector":
        return cls({index: 1.0}, field)

    @classmethod
    def zero(cls, field: ScalarField = ScalarField.REAL) -> "SparseVector":
        return cls((), field)

    @classmethod
    def from_dense(cls, values, field: ScalarField = None, offset: int = 0) -> "SparseVector":
        arr = np.asarray(values)
        if field is None:
            field = ScalarField.COMPLEX if np.iscomplexobj(arr) else ScalarField.REAL
        if field is ScalarField.REAL and np.iscomplexobj(arr):
            if np.any(arr.imag != 0):
                raise FieldMismatch("complex entries for a real vector")
            arr = arr.real
        conv = float if field is ScalarField.REAL else complex
        return cls._raw(
            {offset + i: conv(v) for i, v in enumerate(arr.tolist()) if v != 0},
            field,
            Fraction(1),
        )

    # -- basic access -----------------------------------------------------

    @property
    def scale(self) -> float:
        return math.sqrt(self.scale_sq) if self.scale_sq != 1 else 1.0

    @property
    def support(self) -> tuple:
        return tuple(self._coef)

    @property
    def raw_coefficients(self) -> dict:
        """Coefficients before the common scale is applied (read-only view)."""
        return dict(self._coef)

    def items(self):
        s = self.scale
        if s == 1.0:
            return list(self._coef.items())
        return [(k, v * s) for k, v in self._coef.items()]

    def __getitem__(self, index: int):
        v = self._coef.get(index)
        if v is None:
            return 0.0 if self.field is ScalarField.REAL else 0j
        return v * self.scale

    def __len__(self):
        return len(self._coef)

    def __iter__(self):
        return iter(self._coef)

    def is_zero(self) -> bool:
        return not self._coef

    def min_index(self):
        return next(iter(self._coef)) if self._coef else None

    def max_index(self):
        return next(reversed(self._coef)) if self._coef else None

    def to_dense(self, dim: int, offset: int = 0) -> np.ndarray:
        out = np.zeros(dim, dtype=self.field.dtype)
        s = self.scale
        for k, v in self._coef.items():
            j = k - offset
            if not 0 <= j < dim:
                raise IndexDomainViolation(f"index {k} outside [{offset}, {offset + dim})")
            out[j] = v * s
        return out

    def as_complex(self) -> "SparseVector":
        if self.field is ScalarField.COMPLEX:
            return self
        return SparseVector._raw(
            {k: complex(v) for k, v in self._coef.items()}, ScalarField.COMPLEX, self.scale_sq
        )

    def materialize(self) -> "SparseVector":
        """Same vector with the scale folded into the coefficients."""
        if self.scale_sq == 1:
            return self
        return SparseVector(self.items(), self.field)

    # -- arithmetic -------------------------------------------------------

    def _check_field(self, other: "SparseVector"):
        if not isinstance(other, SparseVector):
            raise TypeError(f"expected SparseVector, got {type(other).__name__}")
        if other.field is not self.field:
            raise FieldMismatch(f"{self.field.value} vs {other.field.value}")

    def _combine(self, other: "SparseVector", sign: float) -> "SparseVector":
        self._check_field(other)
        if self.scale_sq == other.scale_sq:
            a, b, scale_sq = self._coef, other._coef, self.scale_sq
        else:
            a, b, scale_sq = dict(self.items()), dict(other.items()), Fraction(1)
        out = dict(a)
        top = next(reversed(a)) if a else None
        ordered = True
        for k, v in b.items():
            if k in out:
                w = out[k] + sign * v
                if w == 0:
                    del out[k]
                else:
                    out[k] = w
            else:
                out[k] = sign * v
                if top is not None and k < top:
                    ordered = False
        if not ordered:
            out = dict(sorted(out.items()))
        return SparseVector._raw(out, self.field, scale_sq)

    def __add__(self, other):
        return self._combine(other, 1.0)

    def __sub__(self, other):
        return self._combine(other, -1.0)

    def __neg__(self):
        return SparseVector._raw({k: -v for k, v in self._coef.items()}, self.field, self.scale_sq)

    def __mul__(self, scalar):
        if isinstance(scalar, SparseVector):
            return NotImplemented
        scalar = _coerce(scalar, self.field)
        if scalar == 0:
            return SparseVector.zero(self.field)
        if scalar == 1:
            return self
        coef = {}
        for k, v in self._coef.items():
            w = v * scalar
            if w != 0:
                coef[k] = w
        return SparseVector._raw(coef, self.field, self.scale_sq)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self * (1.0 / scalar)

    def translate(self, offset: int) -> "SparseVector":
        """Move every coefficient from index k to k + offset."""
        return SparseVector._raw(
            {k + offset: v for k, v in self._coef.items()}, self.field, self.scale_sq
        )

    def inner(self, other: "SparseVector"):
        """``<self, other> = sum self_k conj(other_k)``."""
        self._check_field(other)
        small, big = (self, other) if len(self) <= len(other) else (other, self)
        acc = 0j if self.field is ScalarField.COMPLEX else 0.0
        for k in small._coef:
            if k in big._coef:
                acc += self._coef[k] * other._coef[k].conjugate()
        return acc * (self.scale * other.scale)

    # -- norms ------------------------------------------------------------

    def norm_sq_exact(self) -> Fraction:
        """Squared L2 norm as an exact rational (floats are exact rationals)."""
        cached = self._norm_cache.get("exact")
        if cached is None:
            cached = self.scale_sq * sum((_exact_abs_sq(v) for v in self._coef.values()), Fraction(0))
            self._norm_cache["exact"] = cached
        return cached

    def norm(self, kind: NormKind = NormKind.L2) -> float:
        cached = self._norm_cache.get(kind)
        if cached is not None:
            return cached
        vals = self._coef.values()
        if not vals:
            result = 0.0
        elif kind is NormKind.L2:
            top = max(abs(v) for v in vals)
            if 1e-150 < top < 1e150:
                ssq = math.fsum(abs(v) ** 2 for v in vals)
                result = math.sqrt(ssq * float(self.scale_sq)) if self.scale_sq != 1 else math.sqrt(ssq)
            elif top == 0:
                result = 0.0
            else:
                # factor out the largest entry so the squares neither underflow nor overflow
                ssq = math.fsum((abs(v) / top) ** 2 for v in vals)
                result = top * math.sqrt(ssq) * self.scale
        elif kind is NormKind.L1:
            result = math.fsum(abs(v) for v in vals) * self.scale
        elif kind is NormKind.SUP:
            result = max(abs(v) for v in vals) * self.scale
        else:
            raise TypeError(f"unsupported norm {kind!r}")
        self._norm_cache[kind] = result
        return result

    def distance(self, other: "SparseVector", kind: NormKind = NormKind.L2) -> float:
        self._check_field(other)
        if self.is_zero():
            return other.norm(kind)
        if other.is_zero():
            return self.norm(kind)
        if self._coef.keys().isdisjoint(other._coef):
            a, b = self.norm(kind), other.norm(kind)
            if kind is NormKind.L2:
                return math.hypot(a, b)
            if kind is NormKind.L1:
                return a + b
            return max(a, b)
        return (self - other).norm(kind)

    def distance_sq_exact(self, other: "SparseVector") -> Fraction:
        """Exact squared L2 distance.

        Exact whenever the two supports are disjoint or the vectors share the
        same ``scale_sq``; otherwise the overlap is materialized in floating
        point before the exact summation.
        """
        self._check_field(other)
        if self._coef.keys().isdisjoint(other._coef):
            return self.norm_sq_exact() + other.norm_sq_exact()
        return (self - other).norm_sq_exact()

    # -- comparison -------------------------------------------------------

    def __eq__(self, other):
        if not isinstance(other, SparseVector):
            return NotImplemented
        if self.field is not other.field:
            return False
        if self.scale_sq == other.scale_sq:
            return self._coef == other._coef
        return dict(self.items()) == dict(other.items())

    __hash__ = None

    def allclose(self, other: "SparseVector", atol: float = 1e-12) -> bool:
        return (self - other).norm(NormKind.SUP) <= atol

    def __repr__(self):
        body = ", ".join(f"{k}: {v!r}" for k, v in self._coef.items())
        scale = "" if self.scale_sq == 1 else f", scale_sq={self.scale_sq}"
        return f"SparseVector({{{body}}}, {self.field.name}{scale})"
