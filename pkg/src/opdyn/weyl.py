"""Weyl sequences (sparse families of approximate eigenvectors) and the
falsification harness for occasionally attracting nets of isometries."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import List, Optional, Sequence, Union

import numpy as np

from .errors import NoApproximateKernel, NotIsometry, NotUnimodular
from .operators import (
    Direction,
    Operator,
    WeightedShift,
    apply,
    base_operator,
    is_exact_isometry,
)
from .orbits import DEFAULT_SEED, CompactNet, _check_samples, _distances_to_net, default_unit_samples
from .vectors import NormKind, ScalarField, SparseVector

KERNEL_RANK_TOL = 1e-9


@dataclass(frozen=True)
class WeylSequenceReport:
    lam: complex
    vectors: List[SparseVector]
    residuals: List[float]
    separation: Optional[float]
    finite_dimensional: bool = False
    branch: str = "shift"
    residuals_sq_exact: Optional[List[Fraction]] = None
    separation_sq_exact: Optional[Fraction] = None


def _unimodular(lam: complex, tol: float = 1e-12) -> complex:
    lam = complex(lam)
    if abs(abs(lam) - 1) > tol:
        raise NotUnimodular(f"|lambda| = {abs(lam)!r} is not 1")
    return lam


def _field_for(lam: complex) -> ScalarField:
    return ScalarField.REAL if lam.imag == 0 else ScalarField.COMPLEX


def _scalar(lam: complex, field: ScalarField):
    return lam.real if field is ScalarField.REAL else lam


def window_vector(lam: complex, start: int, length: int, field: ScalarField) -> SparseVector:
    """``length^{-1/2} sum_{k=start}^{start+length-1} lam^{-k} e_k``.

    Coefficients are generated downward from the top of the window by
    multiplication with ``lam``, so ``coef[k-1] == lam * coef[k]`` holds
    bit for bit and the interior of ``S z - lam z`` cancels exactly.
    """
    top = start + length - 1
    lam_s = _scalar(lam, field)
    if lam == 1:
        u = 1.0
    elif lam == -1:
        u = -1.0 if top % 2 else 1.0
    else:
        u = _scalar(cmath.exp(-1j * top * cmath.phase(lam)), field)
    coef = {}
    for k in range(top, start - 1, -1):
        coef[k] = u
        u = lam_s * u
    return SparseVector(coef, field, Fraction(1, length))


def _pairwise_separation(vectors: Sequence[SparseVector]):
    if len(vectors) < 2:
        return None, None
    spans = sorted((v.min_index(), v.max_index()) for v in vectors if not v.is_zero())
    if len(spans) == len(vectors) and all(a[1] < b[0] for a, b in zip(spans, spans[1:])):
        # pairwise disjoint windows: ||a - b||^2 = ||a||^2 + ||b||^2
        lo = sorted(v.norm_sq_exact() for v in vectors)
        best = lo[0] + lo[1]
    else:
        best = min(a.distance_sq_exact(b) for a, b in combinations(vectors, 2))
    return math.sqrt(best), best


def weyl_residual(T: Operator, z: SparseVector, lam: complex) -> SparseVector:
    return apply(T, z) - z * _scalar(complex(lam), z.field)


def weyl_sequence_shift(
    direction: Union[Direction, str],
    lam: complex,
    count: int,
) -> WeylSequenceReport:
    """Weyl vectors of the unit-weight shift on disjoint windows ``[n^2, n^2 + n)``.

    In L2 the residual of the n-th vector is ``sqrt(2/n)``: only the two
    boundary terms of the window survive.
    """
    direction = Direction(direction)
    if direction is Direction.BACKWARD:
        raise ValueError("the window construction is for forward and bilateral shifts")
    lam = _unimodular(lam)
    field = _field_for(lam)
    S = WeightedShift(direction, 1.0, field)
    vectors, residuals, exact = [], [], []
    for n in range(1, count + 1):
        z = window_vector(lam, n * n, n, field)
        r = weyl_residual(S, z, lam)
        r_sq = r.norm_sq_exact()
        vectors.append(z)
        exact.append(r_sq)
        residuals.append(math.sqrt(r_sq))
    sep, sep_sq = _pairwise_separation(vectors)
    return WeylSequenceReport(lam, vectors, residuals, sep, False, "shift", exact, sep_sq)


def weyl_sequence_identity(count: int) -> WeylSequenceReport:
    """The orthonormal basis ``e_1, e_2, ...`` is a Weyl sequence of the identity at 1."""
    vectors = [SparseVector.basis(n) for n in range(1, count + 1)]
    sep, sep_sq = _pairwise_separation(vectors)
    zero = Fraction(0)
    return WeylSequenceReport(1 + 0j, vectors, [0.0] * count, sep, False, "identity", [zero] * count, sep_sq)


def shift_eq3_norms(T: WeightedShift, z: SparseVector, lam: complex, kmax: int = 20) -> List[float]:
    """``||T^k z - lam T^{k-1} z||`` for ``k = 1..kmax``."""
    lam_s = _scalar(complex(lam), z.field)
    out = []
    prev = z
    for _ in range(kmax):
        cur = apply(T, prev)
        out.append((cur - prev * lam_s).norm(NormKind.L2))
        prev = cur
    return out


def weyl_sequence_dense(T: Operator, lam: complex, threshold: float) -> WeylSequenceReport:
    """Approximate kernel of ``T - lam`` for a matrix.

    A numerically nontrivial kernel (singular values <= 1e-9 ||S||) gives
    exact Weyl vectors.  Otherwise the smallest singular direction is
    returned when its residual is <= ``threshold``.  Finite matrices have no
    essential spectrum, so ``finite_dimensional`` is always set: this is a
    truncation diagnostic.
    """
    M = base_operator(T).matrix()
    lam = complex(lam)
    complex_out = T.field is ScalarField.COMPLEX or lam.imag != 0
    field = ScalarField.COMPLEX if complex_out else ScalarField.REAL
    S = M.astype(complex) - lam * np.eye(M.shape[0]) if complex_out else M - lam.real * np.eye(M.shape[0])
    _, sv, Vh = np.linalg.svd(S)
    kind = T.base_norm
    scale = max(sv[0], 1e-300)
    kernel = np.flatnonzero(sv <= KERNEL_RANK_TOL * scale)
    if kernel.size:
        rows, branch = Vh[kernel], "kernel"
    elif sv[-1] <= threshold:
        rows, branch = Vh[-1:], "approximate"
    else:
        raise NoApproximateKernel(
            f"smallest singular value {sv[-1]!r} of T - lambda exceeds {threshold!r}", float(sv[-1])
        )
    vectors, residuals = [], []
    for row in rows:
        v = row.conj()
        v = v / np.linalg.norm(v, kind.ord)
        z = SparseVector.from_dense(v, field)
        vectors.append(z)
        residuals.append(float(np.linalg.norm(S @ v, kind.ord)))
    sep = None
    if len(vectors) > 1:
        sep = min(a.distance(b, kind) for a, b in combinations(vectors, 2))
    return WeylSequenceReport(lam, vectors, residuals, sep, True, branch)


# ---------------------------------------------------------------------------
# falsification harness


@dataclass(frozen=True)
class FalsificationWitness:
    probe_index: int
    probe: SparseVector
    min_tail_distance: float
    lower_bound: float
    argmin: int
    horizon: int
    eigen_defects: List[float]


@dataclass(frozen=True)
class NetSurvives:
    horizon: int
    min_tail_distances: List[float]
    eigen_defects: List[float]


def eigen_defects(T: Operator, K: CompactNet) -> List[float]:
    """For each center ``c``: ``min_mu ||Tc - mu c|| / ||c||`` (L2).

    An orbit tail converging to ``a`` along a Weyl sequence forces
    ``Ta = lam a``; positive defects at every nonzero center show the net
    holds no such limit.
    """
    from .supercyclic import best_scalar_match

    out = []
    for c in K.centers:
        if c.is_zero():
            out.append(0.0)
            continue
        _, res = best_scalar_match(c, apply(base_operator(T), c))
        out.append(res / c.norm())
    return out


def default_probes(T: Operator, K: CompactNet, count: int = 8, seed: int = DEFAULT_SEED) -> List[SparseVector]:
    """Unit probes for :func:`theorem1_falsify`.

    For sequence models: bumps ``e_j`` just past every center's support
    (their forward orbits never meet the net), then seeded unit vectors.
    """
    if T.is_finite:
        return default_unit_samples(T, count, seed)
    top = max((c.max_index() for c in K.centers if not c.is_zero()), default=0)
    bumps = [SparseVector.basis(top + 1 + j, T.field) for j in range(4)]
    return bumps + default_unit_samples(T, count, seed)[-count:]


def theorem1_falsify(
    T: Operator,
    K: CompactNet,
    probes: Sequence[SparseVector],
    horizon: int = 4096,
    margin: float = 1e-9,
) -> Union[FalsificationWitness, NetSurvives]:
    """Look for a probe whose orbit tail keeps away from ``K``.

    Returns the first probe with ``min_{horizon/2 <= n <= horizon}`` distance
    to the centers above ``mesh + margin``: at this horizon ``K`` is not
    occasionally attracting for it.  :class:`NetSurvives` is inconclusive,
    never a proof of attraction.
    """
    if not is_exact_isometry(T):
        raise NotIsometry(f"{T!r} is not an exact isometry")
    _check_samples(T, probes)
    start = horizon // 2
    times = range(start, horizon + 1)
    defects = eigen_defects(T, K)
    mins = []
    for i, p in enumerate(probes):
        d = _distances_to_net(T, p, K, times)
        k = int(np.argmin(d))
        mins.append(float(d[k]))
        if d[k] > K.mesh + margin:
            return FalsificationWitness(i, p, float(d[k]), float(d[k]) - K.mesh, start + k, horizon, defects)
    return NetSurvives(horizon, mins, defects)
