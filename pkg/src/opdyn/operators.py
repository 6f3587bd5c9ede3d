"""Operator representations and the operations every analysis builds on.

Finite-dimensional operators act on vectors supported in ``0..d-1``: the
mathematical basis vector ``e_1`` of a matrix model is index 0.  Shift
operators act on sequence indices directly, ``S e_k = w_k e_{k+1}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence, Union

import numpy as np
import scipy.linalg

from .errors import (
    AlreadyComplex,
    DimensionMismatch,
    FieldMismatch,
    IndexDomainViolation,
    InvariantViolation,
    NotFiniteDimensional,
    NotPowerBounded,
)
from .vectors import NormKind, NormTag, Rescaled, ScalarField, SparseVector, base_kind

SPECTRAL_TOL = 1e-9
# eigenvalues closer than this are treated as one cluster when counting
# algebraic multiplicity (perturbed Jordan blocks split by ~sqrt(eps))
CLUSTER_TOL = 1e-6
DEFAULT_HORIZON = 1000


class Direction(Enum):
    FORWARD = "forward"
    BACKWARD = "backward"
    BILATERAL = "bilateral"


def _as_matrix(entries, field: ScalarField, name: str) -> np.ndarray:
    arr = np.array(entries, dtype=complex if field is ScalarField.COMPLEX else None)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
        raise InvariantViolation("shape", f"{name} entries must be a non-empty square matrix")
    if field is ScalarField.REAL:
        if np.iscomplexobj(arr):
            if np.any(arr.imag != 0):
                raise InvariantViolation("field", "complex entry in a real-field operator")
            arr = arr.real
        arr = arr.astype(np.float64)
    if not np.all(np.isfinite(arr)):
        raise InvariantViolation("finite", f"{name} entries must be finite")
    arr.setflags(write=False)
    return arr


class Operator:
    """Base class of the operator variants.

    Every operator carries exactly one scalar field and one norm tag.
    Instances are immutable.
    """

    field: ScalarField
    norm: NormTag

    def __init__(self, field: ScalarField, norm: NormTag):
        object.__setattr__(self, "field", ScalarField(field))
        object.__setattr__(self, "norm", norm if isinstance(norm, Rescaled) else NormKind(norm))
        object.__setattr__(self, "_cache", {})

    def __setattr__(self, name, value):
        raise AttributeError(f"{type(self).__name__} is immutable")

    @property
    def dim(self) -> Optional[int]:
        return None

    @property
    def is_finite(self) -> bool:
        return self.dim is not None

    @property
    def base_norm(self) -> NormKind:
        return base_kind(self.norm)

    def matrix(self) -> np.ndarray:
        raise NotFiniteDimensional(f"{type(self).__name__} has no finite matrix")

    def with_norm(self, norm: NormTag) -> "Operator":
        clone = object.__new__(type(self))
        object.__setattr__(clone, "__dict__", dict(self.__dict__))
        object.__setattr__(clone, "norm", norm)
        # cached values depend only on the data and the base norm
        if base_kind(norm) is not self.base_norm:
            object.__setattr__(clone, "_cache", {})
        return clone

    def _key(self):
        raise NotImplementedError

    def __eq__(self, other):
        if type(self) is not type(other):
            return NotImplemented
        if self.field is not other.field or self.norm != other.norm:
            return False
        return _deep_equal(self._key(), other._key())

    __hash__ = None


def _deep_equal(a, b) -> bool:
    if isinstance(a, np.ndarray) or isinstance(b, np.ndarray):
        return np.array_equal(np.asarray(a), np.asarray(b))
    if isinstance(a, (tuple, list)) and isinstance(b, (tuple, list)):
        return len(a) == len(b) and all(_deep_equal(x, y) for x, y in zip(a, b))
    return a == b


class DenseMatrix(Operator):
    def __init__(self, entries, field=ScalarField.REAL, norm=NormKind.L2):
        super().__init__(field, norm)
        object.__setattr__(self, "entries", _as_matrix(entries, self.field, "dense"))

    @property
    def dim(self):
        return self.entries.shape[0]

    def matrix(self):
        return self.entries

    def _key(self):
        return (self.entries,)

    def __repr__(self):
        return f"DenseMatrix({self.entries.tolist()!r}, {self.field.name}, {self.norm})"


class Generator(DenseMatrix):
    """Generator ``G`` of the semigroup ``exp(tG)``; applying it applies ``G``."""

    def __repr__(self):
        return f"Generator({self.entries.tolist()!r}, {self.field.name}, {self.norm})"


class RotationBlock(Operator):
    """Rotation of the real plane by ``angle`` radians."""

    def __init__(self, angle: float, field=ScalarField.REAL, norm=NormKind.L2):
        super().__init__(field, norm)
        if self.field is not ScalarField.REAL:
            raise InvariantViolation("field", "a rotation block acts on a real plane; use complexify")
        if not math.isfinite(angle):
            raise InvariantViolation("finite", "angle must be finite")
        object.__setattr__(self, "angle", float(angle))

    @property
    def dim(self):
        return 2

    def matrix(self):
        m = self._cache.get("matrix")
        if m is None:
            c, s = math.cos(self.angle), math.sin(self.angle)
            m = np.array([[c, -s], [s, c]])
            m.setflags(write=False)
            self._cache["matrix"] = m
        return m

    def _key(self):
        return (self.angle,)

    def __repr__(self):
        return f"RotationBlock({self.angle!r})"


class StochasticMatrix(Operator):
    """Column-stochastic matrix; default norm L1."""

    def __init__(self, entries, field=ScalarField.REAL, norm=NormKind.L1):
        super().__init__(field, norm)
        arr = _as_matrix(entries, ScalarField.REAL, "stochastic")
        if np.any(arr < 0):
            raise InvariantViolation("stochastic", "negative entry")
        sums = arr.sum(axis=0)
        if np.any(np.abs(sums - 1.0) > 1e-12):
            raise InvariantViolation("stochastic", f"column sums {sums.tolist()} differ from 1")
        if self.field is ScalarField.COMPLEX:
            arr = arr.astype(complex)
            arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)

    @property
    def dim(self):
        return self.entries.shape[0]

    def matrix(self):
        return self.entries

    def _key(self):
        return (self.entries,)

    def __repr__(self):
        return f"StochasticMatrix({self.entries.real.tolist()!r})"


class WeightedShift(Operator):
    """Weighted shift on sequences.

    ``weights`` is a scalar or a finite sequence read periodically,
    ``w_k = weights[k mod p]`` (Python modulo, so negative indices work).
    Forward and Backward act on indices ``k >= 0``; Bilateral on all of Z.
    """

    def __init__(self, direction=Direction.FORWARD, weights=1.0, field=ScalarField.REAL, norm=NormKind.L2):
        super().__init__(field, norm)
        direction = Direction(direction)
        if isinstance(weights, (list, tuple, np.ndarray)):
            ws = tuple(weights)
        else:
            ws = (weights,)
        if not ws:
            raise InvariantViolation("weights", "empty weight sequence")
        conv = float if self.field is ScalarField.REAL else complex
        try:
            ws = tuple(conv(w) for w in ws)
        except TypeError:
            raise InvariantViolation("field", "complex weight in a real-field shift") from None
        if not all(math.isfinite(abs(w)) for w in ws):
            raise InvariantViolation("finite", "weights must be finite")
        object.__setattr__(self, "direction", direction)
        object.__setattr__(self, "weights", ws)

    @property
    def period(self) -> int:
        return len(self.weights)

    def weight(self, k: int):
        return self.weights[k % len(self.weights)]

    @property
    def unit_weights(self) -> bool:
        return all(w == 1 for w in self.weights)

    @property
    def step(self) -> int:
        return -1 if self.direction is Direction.BACKWARD else 1

    def weight_product(self, k: int, n: int):
        """Product of the weights met by ``e_k`` during ``n`` applications."""
        if n == 0 or self.unit_weights:
            return 1.0
        p = len(self.weights)
        if self.direction is Direction.BACKWARD:
            idx = [k - j for j in range(min(n, p))]
        else:
            idx = [k + j for j in range(min(n, p))]
        if n <= p:
            return math.prod(self.weight(i) for i in idx)
        full = math.prod(self.weights)
        q, r = divmod(n, p)
        return full**q * math.prod(self.weight(i) for i in idx[:r])

    def _key(self):
        return (self.direction, self.weights)

    def __repr__(self):
        w = self.weights[0] if len(self.weights) == 1 else list(self.weights)
        return f"WeightedShift({self.direction.value}, weights={w!r})"


class DirectSum(Operator):
    """Block-diagonal sum of finite-dimensional summands (indices concatenated)."""

    def __init__(self, summands: Sequence[Operator], field=None, norm=NormKind.L2):
        summands = tuple(summands)
        if not summands:
            raise InvariantViolation("summands", "direct sum needs at least one summand")
        if field is None:
            field = ScalarField.COMPLEX if any(s.field is ScalarField.COMPLEX for s in summands) else ScalarField.REAL
        super().__init__(field, norm)
        for s in summands:
            if not s.is_finite:
                raise NotFiniteDimensional("direct sums accept finite-dimensional summands only")
            if s.field is not self.field:
                raise InvariantViolation("field", "summand field differs from the direct sum field")
        object.__setattr__(self, "summands", summands)

    @property
    def dim(self):
        return sum(s.dim for s in self.summands)

    def matrix(self):
        m = self._cache.get("matrix")
        if m is None:
            m = scipy.linalg.block_diag(*(s.matrix() for s in self.summands))
            m = m.astype(self.field.dtype)
            m.setflags(write=False)
            self._cache["matrix"] = m
        return m

    def _key(self):
        return (tuple(type(s).__name__ for s in self.summands), self.summands)

    def __repr__(self):
        return f"DirectSum({list(self.summands)!r})"


OperatorSpec = Union[DenseMatrix, RotationBlock, WeightedShift, StochasticMatrix, DirectSum, Generator]


def identity(dim: int, field=ScalarField.REAL, norm=NormKind.L2) -> DenseMatrix:
    return DenseMatrix(np.eye(dim), field, norm)


def diag(*values, field=None, norm=NormKind.L2) -> DenseMatrix:
    if field is None:
        field = ScalarField.COMPLEX if any(isinstance(v, complex) for v in values) else ScalarField.REAL
    return DenseMatrix(np.diag(np.array(values, dtype=field.dtype)), field, norm)


# ---------------------------------------------------------------------------
# application


def _check_field(T: Operator, x: SparseVector):
    if x.field is not T.field:
        raise FieldMismatch(f"operator over {T.field.value}, vector over {x.field.value}")


def _check_finite_domain(T: Operator, x: SparseVector):
    d = T.dim
    lo, hi = x.min_index(), x.max_index()
    if lo is not None and (lo < 0 or hi >= d):
        raise IndexDomainViolation(f"support [{lo}, {hi}] outside the {d}-dimensional domain")


def _shift_power(T: WeightedShift, x: SparseVector, n: int) -> SparseVector:
    if n == 0:
        return x
    lo = x.min_index()
    if lo is not None and lo < 0 and T.direction is not Direction.BILATERAL:
        raise IndexDomainViolation(f"negative index {lo} fed to a {T.direction.value} shift")
    step = T.step
    if T.unit_weights:
        y = x.translate(step * n)
        if T.direction is Direction.BACKWARD and lo is not None and lo < n:
            y = SparseVector._raw({k: v for k, v in y.raw_coefficients.items() if k >= 0}, x.field, x.scale_sq)
        return y
    coef = {}
    for k, v in x.raw_coefficients.items():
        if T.direction is Direction.BACKWARD and k - n < 0:
            continue
        w = T.weight_product(k, n)
        val = v if w == 1 else v * w
        if val != 0:
            coef[k + step * n] = val
    return SparseVector._raw(coef, x.field, x.scale_sq)


def apply(T: Operator, x: SparseVector) -> SparseVector:
    """Exact image ``Tx``."""
    _check_field(T, x)
    if isinstance(T, WeightedShift):
        return _shift_power(T, x, 1)
    _check_finite_domain(T, x)
    y = T.matrix() @ x.to_dense(T.dim)
    return SparseVector.from_dense(y, T.field)


def apply_power(T: Operator, x: SparseVector, n: int) -> SparseVector:
    """``T^n x`` (closed form for shifts, repeated multiplication otherwise)."""
    if n < 0:
        raise ValueError("negative power")
    _check_field(T, x)
    if isinstance(T, WeightedShift):
        return _shift_power(T, x, n)
    _check_finite_domain(T, x)
    M = T.matrix()
    v = x.to_dense(T.dim)
    for _ in range(n):
        v = M @ v
    return SparseVector.from_dense(v, T.field)


def dense_orbit(T: Operator, x: np.ndarray, horizon: int) -> np.ndarray:
    """Rows ``T^n x`` for ``n = 0..horizon`` (finite-dimensional operators).

    ``x`` may be a single vector ``(d,)`` or a batch ``(m, d)``; the result
    is ``(horizon+1, d)`` or ``(horizon+1, m, d)``.
    """
    M = T.matrix()
    x = np.asarray(x)
    dtype = np.result_type(M.dtype, x.dtype)
    out = np.empty((horizon + 1,) + x.shape, dtype=dtype)
    out[0] = x
    Mt = M.T
    for n in range(horizon):
        out[n + 1] = out[n] @ Mt
    return out


def operator_norm(T: Operator, kind: Optional[NormKind] = None) -> float:
    """Induced norm of ``T`` in the base norm (or ``kind``)."""
    kind = kind or T.base_norm
    if isinstance(T, WeightedShift):
        return max(abs(w) for w in T.weights)
    return float(np.linalg.norm(T.matrix(), kind.ord))


def power_norms(T: Operator, horizon: int, kind: Optional[NormKind] = None) -> np.ndarray:
    """``||T^n||`` for ``n = 0..horizon`` in the base norm."""
    kind = kind or T.base_norm
    if isinstance(T, WeightedShift):
        p = T.period
        logs = np.log(np.abs(np.array(T.weights * (horizon // p + 2))))
        csum = np.concatenate([[0.0], np.cumsum(logs)])
        out = np.empty(horizon + 1)
        out[0] = 1.0
        for n in range(1, horizon + 1):
            out[n] = np.exp(max(csum[k + n] - csum[k] for k in range(p)))
        return out
    M = T.matrix()
    out = np.empty(horizon + 1)
    P = np.eye(M.shape[0], dtype=M.dtype)
    out[0] = 1.0
    for n in range(1, horizon + 1):
        P = P @ M
        out[n] = np.linalg.norm(P, kind.ord)
        if not np.isfinite(out[n]):
            out[n:] = np.inf
            break
    return out


# ---------------------------------------------------------------------------
# power boundedness


@dataclass(frozen=True)
class BoundWitness:
    kind: str  # "spectral_radius" or "jordan_chain"
    eigenvalue: complex
    detail: str = ""


@dataclass(frozen=True)
class PowerBoundCertificate:
    bounded: bool
    sup_norm_estimate: float
    witness: Optional[BoundWitness]
    spectral_radius: float
    horizon: int
    horizon_max: float
    tail_ratio: float
    cross_check_agrees: bool


def cluster_nullity(M: np.ndarray, mu: complex, cluster: np.ndarray, tol: float = SPECTRAL_TOL) -> int:
    """Numerical ``dim ker(M - mu)`` for a cluster of computed eigenvalues around ``mu``.

    Distinct eigenvalues inside the cluster move the singular values of
    ``M - mu`` by up to the cluster spread, so the threshold widens with it.
    A Jordan chain still leaves a singular value of order one.
    """
    d = M.shape[0]
    scale = max(np.linalg.norm(M, 2), 1.0)
    spread = float(np.max(np.abs(cluster - mu))) if len(cluster) else 0.0
    sv = np.linalg.svd(M - mu * np.eye(d), compute_uv=False)
    return int(np.sum(sv <= max(tol * scale, 4 * spread)))


def _peripheral_jordan_witness(M: np.ndarray, eigs: np.ndarray) -> Optional[BoundWitness]:
    peripheral = [lam for lam in eigs if abs(lam) >= 1 - SPECTRAL_TOL]
    seen = []
    for lam in peripheral:
        if any(abs(lam - mu) <= CLUSTER_TOL for mu in seen):
            continue
        cluster = eigs[np.abs(eigs - lam) <= CLUSTER_TOL]
        mu = complex(np.mean(cluster))
        seen.append(mu)
        algebraic = len(cluster)
        geometric = cluster_nullity(M, mu, cluster)
        if geometric < algebraic:
            return BoundWitness(
                "jordan_chain",
                mu,
                f"algebraic multiplicity {algebraic} > geometric multiplicity {geometric}",
            )
    return None


def power_bounded_check(T: Operator, horizon: int = DEFAULT_HORIZON) -> PowerBoundCertificate:
    """Decide ``sup_n ||T^n|| < inf``.

    Finite dimensions: spectral radius <= 1 and every eigenvalue of modulus
    >= 1 - 1e-9 semisimple.  Shifts: the geometric mean of ``|w|`` over a
    period is <= 1.  ``max_{n<=horizon} ||T^n||`` is reported as the
    supremum estimate and used only as a cross-check.
    """
    cached = T._cache.get(("pbc", horizon))
    if cached is not None:
        return cached
    norms = power_norms(T, horizon)
    half = max(horizon // 2, 1)
    head = float(np.max(norms[: half + 1]))
    tail = float(np.max(norms[half:]))
    tail_ratio = tail / head if head > 0 else 0.0
    if isinstance(T, WeightedShift):
        logs = [math.log(abs(w)) if w != 0 else -math.inf for w in T.weights]
        radius = math.exp(sum(logs) / len(logs))
        bounded = radius <= 1 + SPECTRAL_TOL
        witness = None if bounded else BoundWitness("spectral_radius", complex(radius), "geometric mean of |weights| exceeds 1")
    else:
        M = T.matrix()
        eigs = np.linalg.eigvals(M)
        radius = float(np.max(np.abs(eigs)))
        witness = None
        if radius > 1 + SPECTRAL_TOL:
            lam = complex(eigs[np.argmax(np.abs(eigs))])
            witness = BoundWitness("spectral_radius", lam, f"|lambda| = {abs(lam)!r} > 1")
        else:
            witness = _peripheral_jordan_witness(M, eigs)
        bounded = witness is None
    horizon_max = float(np.max(norms))
    agrees = (tail_ratio <= 1.01) if bounded else (tail_ratio > 1.0 or not math.isfinite(horizon_max))
    cert = PowerBoundCertificate(
        bounded=bounded,
        sup_norm_estimate=max(horizon_max, 1.0) if bounded else math.inf,
        witness=witness,
        spectral_radius=float(radius),
        horizon=horizon,
        horizon_max=horizon_max,
        tail_ratio=tail_ratio,
        cross_check_agrees=agrees,
    )
    T._cache[("pbc", horizon)] = cert
    return cert


def require_power_bounded(T: Operator, horizon: int = DEFAULT_HORIZON) -> PowerBoundCertificate:
    cert = power_bounded_check(T, horizon)
    if not cert.bounded:
        raise NotPowerBounded(f"{T!r} is not power bounded ({cert.witness.detail})", cert)
    return cert


# ---------------------------------------------------------------------------
# rescaled norm


@dataclass(frozen=True)
class RescaledNorm:
    """``max_{n<=horizon} ||T^n x||`` with an audit trail for the tail.

    For ``n > horizon`` and any ``m <= horizon``,
    ``||T^n x|| <= M ||T^m x||`` where ``M`` is the power-bound estimate, so
    the true supremum lies in ``[value, max(value, tail_bound)]``.
    """

    value: float
    horizon: int
    argmax: int
    tail_bound: float
    sup_norm_estimate: float


def rescaled_norm_report(T: Operator, x: SparseVector, horizon: int = DEFAULT_HORIZON) -> RescaledNorm:
    cert = require_power_bounded(T)
    _check_field(T, x)
    kind = T.base_norm
    if T.is_finite:
        _check_finite_domain(T, x)
        orb = dense_orbit(T, x.to_dense(T.dim), horizon)
        norms = np.linalg.norm(orb, kind.ord, axis=1)
    else:
        norms = np.array([apply_power(T, x, n).norm(kind) for n in range(horizon + 1)])
    k = int(np.argmax(norms))
    return RescaledNorm(
        value=float(norms[k]),
        horizon=horizon,
        argmax=k,
        tail_bound=float(cert.sup_norm_estimate * np.min(norms)),
        sup_norm_estimate=cert.sup_norm_estimate,
    )


def rescaled_norm(T: Operator, x: SparseVector, horizon: int = DEFAULT_HORIZON) -> float:
    """Finite-horizon rescaled norm ``max_{0<=n<=horizon} ||T^n x||``."""
    return rescaled_norm_report(T, x, horizon).value


def rescaled_norms_dense(T: Operator, X: np.ndarray, horizon: int) -> np.ndarray:
    """Rescaled norms of the rows of ``X`` (finite-dimensional ``T``)."""
    require_power_bounded(T)
    V = np.atleast_2d(X)
    Mt = T.matrix().T
    ord_ = T.base_norm.ord
    best = np.linalg.norm(V, ord_, axis=1)
    for _ in range(horizon):
        V = V @ Mt
        np.maximum(best, np.linalg.norm(V, ord_, axis=1), out=best)
    return best


def rescale(T: Operator, horizon: int = DEFAULT_HORIZON) -> Operator:
    """Copy of ``T`` whose active norm is the rescaled sup-norm."""
    require_power_bounded(T)
    return T.with_norm(Rescaled(T.base_norm, horizon))


def base_operator(T: Operator) -> Operator:
    return T.with_norm(T.base_norm) if isinstance(T.norm, Rescaled) else T


def active_norm(T: Operator, x: SparseVector) -> float:
    """Norm of ``x`` in ``T``'s active norm (base or rescaled)."""
    if isinstance(T.norm, Rescaled):
        return rescaled_norm(base_operator(T), x, T.norm.horizon)
    return x.norm(T.norm)


def active_norms_dense(T: Operator, X: np.ndarray) -> np.ndarray:
    """Active norms of the rows of ``X``."""
    X = np.atleast_2d(X)
    if isinstance(T.norm, Rescaled):
        return rescaled_norms_dense(base_operator(T), X, T.norm.horizon)
    return np.linalg.norm(X, T.norm.ord, axis=1)


# ---------------------------------------------------------------------------
# complexification


def complexify(T: Operator) -> Operator:
    """``T_C(x + iy) = Tx + iTy``."""
    if T.field is ScalarField.COMPLEX:
        raise AlreadyComplex(f"{T!r} is already complex")
    C = ScalarField.COMPLEX
    if isinstance(T, WeightedShift):
        return WeightedShift(T.direction, T.weights, C, T.norm)
    if isinstance(T, DirectSum):
        return DirectSum([complexify(s) for s in T.summands], C, T.norm)
    if isinstance(T, StochasticMatrix):
        return StochasticMatrix(T.entries, C, T.norm)
    if isinstance(T, Generator):
        return Generator(T.matrix(), C, T.norm)
    return DenseMatrix(T.matrix(), C, T.norm)


def check_dims(T: Operator, dim: int):
    if T.dim != dim:
        raise DimensionMismatch(f"operator dimension {T.dim} vs {dim}")


def is_exact_isometry(T: Operator, tol: float = 1e-12) -> bool:
    """Whether ``T`` preserves its base norm on every vector.

    Unit-modulus forward/bilateral shifts are isometries in every l^p norm;
    rotation blocks and unitary matrices in L2.
    """
    if isinstance(T.norm, Rescaled):
        return False
    if isinstance(T, WeightedShift):
        return T.direction is not Direction.BACKWARD and all(abs(w) == 1 for w in T.weights)
    if T.norm is NormKind.L2:
        M = T.matrix()
        return bool(np.linalg.norm(M.conj().T @ M - np.eye(M.shape[0]), 2) <= tol)
    # in l1 / sup only signed (phase) permutation matrices are isometries
    M = T.matrix()
    mags = np.abs(M)
    return bool(np.all((mags == 0) | (np.abs(mags - 1) <= tol)) and np.all(np.sum(mags > 0, axis=0) == 1) and np.all(np.sum(mags > 0, axis=1) == 1))


def is_invertible(T: Operator) -> bool:
    if isinstance(T, WeightedShift):
        return T.direction is Direction.BILATERAL and all(w != 0 for w in T.weights)
    M = T.matrix()
    sv = np.linalg.svd(M, compute_uv=False)
    return bool(sv[-1] > SPECTRAL_TOL * max(sv[0], 1.0))


def inverse(T: Operator) -> Operator:
    if isinstance(T, WeightedShift):
        if not is_invertible(T):
            raise NotFiniteDimensional("only bilateral shifts with nonzero weights are invertible")
        # (S^{-1} e_{k+1}) = e_k / w_k, i.e. a backward step with weights 1/w_{k-1}
        return _BilateralInverse(T)
    if isinstance(T, RotationBlock):
        return RotationBlock(-T.angle, T.field, T.norm)
    return DenseMatrix(np.linalg.inv(T.matrix()), T.field, T.norm)


class _BilateralInverse(WeightedShift):
    """Inverse of a bilateral weighted shift: ``e_k -> e_{k-1} / w_{k-1}``."""

    def __init__(self, S: WeightedShift):
        inv = tuple(1 / w for w in S.weights)
        # reorder so that weight(k) = 1 / S.weight(k-1)
        p = len(inv)
        shifted = tuple(inv[(k - 1) % p] for k in range(p))
        super().__init__(Direction.BILATERAL, shifted, S.field, S.norm)
        object.__setattr__(self, "_source", S)

    @property
    def step(self):
        return -1

    def weight_product(self, k, n):
        if n == 0 or self.unit_weights:
            return 1.0
        return math.prod(self.weight(k - j) for j in range(n))

    def __repr__(self):
        return f"inverse({self._source!r})"
