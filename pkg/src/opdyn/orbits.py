"""Orbits, returning vectors and attractor verdicts against epsilon-nets."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Union

import numpy as np
from scipy.spatial import cKDTree

from .errors import (
    EmptyNet,
    EmptySampleSet,
    FieldMismatch,
    HypothesisNotSatisfied,
    NotContraction,
    PreconditionNotReturning,
    SampleOutsideBall,
    ScalarNotUnimodular,
)
from .operators import (
    Operator,
    _check_field,
    _check_finite_domain,
    active_norm,
    active_norms_dense,
    apply_power,
    base_operator,
    dense_orbit,
    operator_norm,
    require_power_bounded,
)
from .vectors import NormKind, Rescaled, ScalarField, SparseVector

DEFAULT_HORIZON = 2000
DEFAULT_TOL = 1e-6
DEFAULT_SEED = 0x5EED
MIN_WITNESSES = 3


@dataclass(frozen=True)
class OrbitTrace:
    base: SparseVector
    horizon: int
    stride: int
    iterates: List[SparseVector]
    norms: List[float]

    @property
    def times(self) -> List[int]:
        return [k * self.stride for k in range(len(self.iterates))]

    def to_csv(self, net: Optional["CompactNet"] = None, kind: NormKind = NormKind.L2) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "norm", "distance_to_net"])
        for n, v, nrm in zip(self.times, self.iterates, self.norms):
            dist = "" if net is None else repr(point_set_distance(v, net, kind).upper)
            w.writerow([n, repr(nrm), dist])
        return buf.getvalue()


@dataclass(frozen=True)
class CompactNet:
    """The compact set ``union_i B(center_i, mesh)``.

    ``mesh`` may be 0: a finite point set is compact on its own.
    """

    centers: tuple
    mesh: float

    def __init__(self, centers: Sequence[SparseVector], mesh: float):
        centers = tuple(centers)
        if not centers:
            raise EmptyNet("a net needs at least one center")
        if not mesh >= 0 or not math.isfinite(mesh):
            raise ValueError("mesh must be a finite non-negative number")
        fields = {c.field for c in centers}
        if len(fields) > 1:
            raise FieldMismatch("net centers mix scalar fields")
        object.__setattr__(self, "centers", centers)
        object.__setattr__(self, "mesh", float(mesh))

    @property
    def field(self) -> ScalarField:
        return self.centers[0].field

    def dense_centers(self, dim: int) -> np.ndarray:
        return np.array([c.to_dense(dim) for c in self.centers])


def scaled_vector_net(
    k: SparseVector, field: ScalarField, resolution: int = 64, kind: NormKind = NormKind.L2
) -> CompactNet:
    """Net of ``{lambda k : |lambda| <= 1}``: a segment over R, a disk over C."""
    h = 1.0 / resolution
    grid = np.linspace(-1.0, 1.0, 2 * resolution + 1)
    nk = k.norm(kind)
    if field is ScalarField.REAL:
        return CompactNet([k * float(c) for c in grid], 0.5 * h * nk)
    pts = [complex(a, b) for a in grid for b in grid if abs(complex(a, b)) <= 1 + h]
    kc = k.as_complex()
    return CompactNet([kc * z for z in pts], h / math.sqrt(2) * nk)


@dataclass(frozen=True)
class Interval:
    lower: float
    upper: float

    def __contains__(self, value):
        return self.lower <= value <= self.upper


def point_set_distance(x: SparseVector, K: CompactNet, kind: NormKind = NormKind.L2) -> Interval:
    """Bracket ``rho(x, K)`` as ``[max(0, d - mesh), d]``, d the distance to the nearest center."""
    if x.field is not K.field:
        raise FieldMismatch("vector and net over different fields")
    d = min(x.distance(c, kind) for c in K.centers)
    return Interval(max(0.0, d - K.mesh), d)


# ---------------------------------------------------------------------------
# orbits


def orbit(T: Operator, x: SparseVector, horizon: int, stride: int = 1) -> OrbitTrace:
    if horizon < 1 or stride < 1:
        raise ValueError("horizon and stride must be positive")
    _check_field(T, x)
    times = range(0, horizon + 1, stride)
    if T.is_finite:
        _check_finite_domain(T, x)
        orb = dense_orbit(T, x.to_dense(T.dim), horizon)[::stride]
        iterates = [SparseVector.from_dense(row, T.field) for row in orb]
    else:
        iterates = [apply_power(T, x, n) for n in times]
    norms = [active_norm(T, v) for v in iterates]
    return OrbitTrace(x, horizon, stride, iterates, norms)


def _norm_kind(T: Operator) -> NormKind:
    return T.base_norm


def _tree_metric(kind: NormKind, complex_data: bool):
    """Minkowski ``p`` for a KD-tree query, or None when the norm has no real embedding."""
    if kind is NormKind.L2:
        return 2
    if complex_data:
        return None
    return 1 if kind is NormKind.L1 else np.inf


def _realify(X: np.ndarray) -> np.ndarray:
    # C^d -> R^2d preserves the L2 distance
    return np.concatenate([X.real, X.imag], axis=-1) if np.iscomplexobj(X) else X


def _distances_to_net(T: Operator, x: SparseVector, K: CompactNet, times: Sequence[int]) -> np.ndarray:
    """``min_i ||T^n x - c_i||`` for each n in ``times`` (sorted ascending)."""
    _check_field(T, x)
    if x.field is not K.field:
        raise FieldMismatch("vector and net over different fields")
    times = list(times)
    if T.is_finite:
        _check_finite_domain(T, x)
        orb = dense_orbit(T, x.to_dense(T.dim), times[-1])[times]
        C = K.dense_centers(T.dim)
        if not isinstance(T.norm, Rescaled) and len(K.centers) > 64:
            tree_p = _tree_metric(T.norm, np.iscomplexobj(orb))
            if tree_p is not None:
                d, _ = cKDTree(_realify(C)).query(_realify(orb), p=tree_p)
                return np.asarray(d, dtype=float)
        diff = orb[:, None, :] - C[None, :, :]
        flat = diff.reshape(-1, T.dim)
        if isinstance(T.norm, Rescaled):
            d = active_norms_dense(T, flat)
        else:
            d = np.linalg.norm(flat, T.norm.ord, axis=1)
        return d.reshape(len(times), len(K.centers)).min(axis=1)
    kind = _norm_kind(T)
    out = np.empty(len(times))
    for j, n in enumerate(times):
        v = apply_power(T, x, n)
        out[j] = min(v.distance(c, kind) for c in K.centers)
    return out


# ---------------------------------------------------------------------------
# returning vectors


@dataclass(frozen=True)
class ReturningCertificate:
    vector: SparseVector
    indices: tuple
    residuals: tuple
    tolerance: float


@dataclass(frozen=True)
class NotReturning:
    min_residual: float
    argmin: int
    horizon: int


@dataclass(frozen=True)
class VanishingOrbit:
    index: int
    norm: float


def _residual_profile(T: Operator, a: SparseVector, horizon: int) -> np.ndarray:
    """``||T^n a - a||`` in the base norm for ``n = 0..horizon``."""
    kind = T.base_norm
    if T.is_finite:
        _check_finite_domain(T, a)
        v = a.to_dense(T.dim)
        orb = dense_orbit(T, v, horizon)
        return np.linalg.norm(orb - v, kind.ord, axis=1)
    return np.array([apply_power(T, a, n).distance(a, kind) for n in range(horizon + 1)])


def _active_residual(T: Operator, a: SparseVector, n: int) -> float:
    return active_norm(T, _iterates(T, a, [n])[0] - a)


def is_returning(
    T: Operator,
    a: SparseVector,
    tol: float = DEFAULT_TOL,
    horizon: int = DEFAULT_HORIZON,
) -> Union[ReturningCertificate, NotReturning]:
    """Search ``1 <= n <= horizon`` for ``||T^n a - a|| <= tol``.

    Every such index is a witness; at least three are required.  Under a
    rescaled norm, candidates are screened in the base norm (which is never
    larger) and then re-measured in the active norm.
    """
    require_power_bounded(base_operator(T))
    _check_field(T, a)
    res = _residual_profile(base_operator(T), a, horizon)
    res[0] = np.inf
    candidates = np.flatnonzero(res <= tol)
    witnesses = []
    if isinstance(T.norm, Rescaled):
        for n in candidates:
            r = _active_residual(T, a, int(n))
            if r <= tol:
                witnesses.append((int(n), r))
    else:
        witnesses = [(int(n), float(res[n])) for n in candidates]
    if len(witnesses) < MIN_WITNESSES:
        k = int(np.argmin(res))
        return NotReturning(float(res[k]), k, horizon)
    return ReturningCertificate(
        a, tuple(n for n, _ in witnesses), tuple(r for _, r in witnesses), float(tol)
    )


def verify_certificate(T: Operator, cert: ReturningCertificate) -> bool:
    """Recompute every residual of ``cert`` from scratch."""
    if len(cert.indices) < MIN_WITNESSES or list(cert.indices) != sorted(set(cert.indices)):
        return False
    return all(_active_residual(T, cert.vector, n) <= cert.tolerance for n in cert.indices)


def _require_contraction(T: Operator, tol: float):
    if isinstance(T.norm, Rescaled):
        return
    nrm = operator_norm(T)
    if nrm > 1 + tol:
        raise NotContraction(f"||T|| = {nrm!r} > 1 in the active norm; rescale first")


@dataclass(frozen=True)
class Lemma1Verdict:
    norm_constancy: bool
    span_dim: int
    isometry_on_span: bool
    certificate: ReturningCertificate
    max_norm_deviation: float
    max_isometry_defect: float


def _orbit_span_basis(T: Operator, a: SparseVector, horizon: int, rank_tol: float = 1e-9):
    """Orthonormal basis (columns, dense over the union of supports) of span O(a)."""
    if T.is_finite:
        orb = dense_orbit(base_operator(T), a.to_dense(T.dim), horizon)
        offset = 0
    else:
        vecs = [apply_power(base_operator(T), a, n) for n in range(horizon + 1)]
        lo = min(v.min_index() for v in vecs if not v.is_zero())
        hi = max(v.max_index() for v in vecs if not v.is_zero())
        offset = lo
        orb = np.array([v.to_dense(hi - lo + 1, lo) for v in vecs])
    U, s, _ = np.linalg.svd(orb.T, full_matrices=False)
    rank = int(np.sum(s > rank_tol * max(s[0], 1e-300))) if s.size else 0
    return U[:, :rank], offset


def lemma1_isometry_check(
    T: Operator,
    a: SparseVector,
    tol: float = DEFAULT_TOL,
    horizon: int = DEFAULT_HORIZON,
    samples: int = 16,
    seed: int = DEFAULT_SEED,
) -> Lemma1Verdict:
    """Check that ``T`` is isometric on ``L(a) = cl span O(a)`` for returning ``a``."""
    _require_contraction(T, tol)
    cert = is_returning(T, a, tol, horizon)
    if not isinstance(cert, ReturningCertificate):
        raise PreconditionNotReturning(
            f"vector is not returning (min residual {cert.min_residual!r} at n = {cert.argmin})"
        )
    B = base_operator(T)
    if T.is_finite:
        orb = dense_orbit(B, a.to_dense(T.dim), horizon)
        norms = active_norms_dense(T, orb)
    else:
        norms = np.array([active_norm(T, apply_power(B, a, n)) for n in range(horizon + 1)])
    deviation = float(np.max(np.abs(norms - norms[0])))
    constancy = deviation <= tol

    span_horizon = min(horizon, 4 * (T.dim or 64))
    basis, offset = _orbit_span_basis(T, a, span_horizon)
    rng = np.random.default_rng(seed)
    k = basis.shape[1]
    coeffs = rng.standard_normal((samples, k))
    if T.field is ScalarField.COMPLEX:
        coeffs = coeffs + 1j * rng.standard_normal((samples, k))
    defect = 0.0
    for c in coeffs:
        b = SparseVector.from_dense(basis @ c, T.field, offset)
        if T.field is ScalarField.REAL and np.iscomplexobj(basis):
            b = SparseVector.from_dense((basis @ c).real, T.field, offset)
        nb = active_norm(T, b)
        nTb = active_norm(T, apply_power(B, b, 1))
        defect = max(defect, abs(nTb - nb) / max(nb, 1e-300))
    return Lemma1Verdict(constancy, k, defect <= tol, cert, deviation, defect)


# ---------------------------------------------------------------------------
# scalar recovery


def _cluster_scalars(values: np.ndarray, radius: float, real: bool):
    """Clusters of ``values`` as (mean, representative, member indices), largest first.

    Real scalars are grouped by sign and represented by the snapped value
    +-1; complex ones by greedy ball clustering of the given radius.
    """
    out = []
    if real:
        for s in (1.0, -1.0):
            members = np.flatnonzero(np.sign(values) == s)
            if members.size:
                out.append((float(np.mean(values[members])), s, members))
    else:
        pts = np.column_stack([values.real, values.imag])
        neigh = cKDTree(pts).query_ball_point(pts, radius)
        order = sorted(range(len(pts)), key=lambda i: (-len(neigh[i]), i))
        used = np.zeros(len(pts), dtype=bool)
        for i in order:
            members = np.array([j for j in neigh[i] if not used[j]], dtype=int)
            if members.size == 0:
                continue
            used[members] = True
            mean = complex(np.mean(values[members]))
            out.append((mean, mean, members))
    out.sort(key=lambda t: -len(t[2]))
    return out


def _pow_apply(M: np.ndarray, v: np.ndarray, n: int) -> np.ndarray:
    """``M^n v`` by binary exponentiation."""
    result = v
    P = M
    while n:
        if n & 1:
            result = P @ result
        n >>= 1
        if n:
            P = P @ P
    return result


def _iterates(T: Operator, a: SparseVector, ns: Sequence[int]) -> List[SparseVector]:
    B = base_operator(T)
    if T.is_finite:
        v = a.to_dense(T.dim)
        M = B.matrix()
        return [SparseVector.from_dense(_pow_apply(M, v, int(n)), T.field) for n in ns]
    return [apply_power(B, a, int(n)) for n in ns]


def lemma4_recover(
    T: Operator,
    a: SparseVector,
    scalars: Sequence,
    indices: Sequence[int],
    tol: float = DEFAULT_TOL,
    horizon: int = DEFAULT_HORIZON,
    max_power: int = 1000,
) -> Union[ReturningCertificate, VanishingOrbit]:
    """Recover a returning certificate from data ``lambda_k T^{n_k} a -> a``.

    If the orbit norm drops below ``tol`` within ``horizon`` the orbit is
    reported as vanishing.  Otherwise the scalars of the converging data
    (residual <= tol) are clustered, largest cluster first; each cluster
    mean ``c`` must be unimodular (snapped to +-1 over the reals).  The
    smallest power ``m`` with ``|c^m - 1| <= tol`` gives candidate returns
    at ``m * n_k``, kept only when their residual re-measures below ``tol``.
    The cluster radius starts at ``tol`` and shrinks until some cluster
    yields three verified returns.
    """
    if len(scalars) != len(indices) or len(indices) == 0:
        raise HypothesisNotSatisfied("scalars and indices must be non-empty and of equal length")
    _require_contraction(T, tol)
    _check_field(T, a)
    B = base_operator(T)
    lam = np.array(scalars, dtype=complex)
    idx = np.array(indices, dtype=int)
    if np.any(idx < 0):
        raise HypothesisNotSatisfied("negative power index")
    if T.field is ScalarField.REAL and np.any(lam.imag != 0):
        raise FieldMismatch("complex scalars for a real operator")

    if T.is_finite:
        _check_finite_domain(T, a)
        v = a.to_dense(T.dim)
        orb = dense_orbit(B, v, max(horizon, int(idx.max())))
        norms = active_norms_dense(T, orb[: horizon + 1])
        scaled = orb[idx] * (lam.real if T.field is ScalarField.REAL else lam)[:, None]
        residuals = active_norms_dense(T, scaled - v)
    else:
        norms = np.array([active_norm(T, apply_power(B, a, n)) for n in range(horizon + 1)])
        residuals = np.array(
            [active_norm(T, apply_power(B, a, int(n)) * _field_scalar(l, T.field) - a) for l, n in zip(lam, idx)]
        )
    small = np.flatnonzero(norms < tol)
    if small.size:
        n = int(small[0])
        return VanishingOrbit(n, float(norms[n]))

    tail = residuals[len(residuals) - max(1, len(residuals) // 4):]
    if np.min(tail) > tol:
        raise HypothesisNotSatisfied(
            f"lambda_k T^n_k a does not approach a: tail residual {float(np.min(tail))!r} > {tol!r}"
        )
    good = residuals <= tol
    lam, idx = lam[good], idx[good]
    real = T.field is ScalarField.REAL
    exponents = np.arange(1, max_power + 1)

    radius = max(tol, 1e-12)
    while radius >= 1e-12:
        clusters = _cluster_scalars(lam.real if real else lam, radius, real)
        if not clusters:
            raise ScalarNotUnimodular("all extracted scalars vanish")
        top_mean = clusters[0][0]
        if abs(abs(top_mean) - 1) > tol:
            raise ScalarNotUnimodular(f"extracted scalar {top_mean!r} has modulus {abs(top_mean)!r}")
        for mean, c, members in clusters:
            if abs(abs(mean) - 1) > tol or len(members) < MIN_WITNESSES:
                continue
            hits = np.flatnonzero(np.abs(complex(c) ** exponents - 1) <= tol)
            if hits.size == 0:
                continue
            m = int(exponents[hits[0]])
            cand = sorted({m * int(n) for n in idx[members] if n > 0})
            witnesses = [(n, _active_residual(T, a, n)) for n in cand]
            witnesses = [(n, r) for n, r in witnesses if r <= tol]
            if len(witnesses) >= MIN_WITNESSES:
                return ReturningCertificate(
                    a, tuple(n for n, _ in witnesses), tuple(r for _, r in witnesses), float(tol)
                )
        if real:
            break
        radius /= 4
    raise HypothesisNotSatisfied("no scalar cluster yields three verified returns")


def _field_scalar(value: complex, field: ScalarField):
    if field is ScalarField.REAL:
        return float(value.real)
    return complex(value)


# ---------------------------------------------------------------------------
# attraction


@dataclass(frozen=True)
class AttractionVerdict:
    attracted: bool
    tail_max_distance: float


@dataclass(frozen=True)
class OccasionalVerdict:
    occasionally_attracted: bool
    min_distance: float
    argmin: int


def default_unit_samples(T: Operator, count: int = 32, seed: int = DEFAULT_SEED, support: int = 32) -> List[SparseVector]:
    """Coordinate vectors plus ``count`` pseudo-random unit vectors (active base norm)."""
    dim = T.dim if T.is_finite else support
    rng = np.random.default_rng(seed)
    kind = T.base_norm
    out = [SparseVector.basis(i, T.field) for i in range(dim)]
    for _ in range(count):
        v = rng.standard_normal(dim)
        if T.field is ScalarField.COMPLEX:
            v = v + 1j * rng.standard_normal(dim)
        v = v / np.linalg.norm(v, kind.ord)
        out.append(SparseVector.from_dense(v, T.field))
    return out


def _check_samples(T: Operator, samples: Sequence[SparseVector]):
    if not samples:
        raise EmptySampleSet("no unit-ball samples supplied")
    for s in samples:
        if s.norm(T.base_norm) > 1 + 1e-12:
            raise SampleOutsideBall(f"sample of norm {s.norm(T.base_norm)!r} outside the unit ball")


def attractor_check(
    T: Operator,
    K: CompactNet,
    unit_samples: Sequence[SparseVector],
    horizon: int = DEFAULT_HORIZON,
    tol: float = DEFAULT_TOL,
) -> List[AttractionVerdict]:
    """Per-sample test of ``lim rho(T^n x, K) = 0``: max distance over the last quarter."""
    _check_samples(T, unit_samples)
    times = range((3 * horizon) // 4, horizon + 1)
    out = []
    for x in unit_samples:
        d = float(np.max(_distances_to_net(T, x, K, times)))
        out.append(AttractionVerdict(d <= K.mesh + tol, d))
    return out


def occasional_attractor_check(
    T: Operator,
    K: CompactNet,
    unit_samples: Sequence[SparseVector],
    horizon: int = DEFAULT_HORIZON,
    tol: float = DEFAULT_TOL,
) -> List[OccasionalVerdict]:
    """Per-sample test of ``liminf rho(T^n x, K) = 0``: min distance over ``[horizon/2, horizon]``."""
    _check_samples(T, unit_samples)
    start = horizon // 2
    times = range(start, horizon + 1)
    out = []
    for x in unit_samples:
        d = _distances_to_net(T, x, K, times)
        k = int(np.argmin(d))
        out.append(OccasionalVerdict(bool(d[k] <= K.mesh + tol), float(d[k]), start + k))
    return out
