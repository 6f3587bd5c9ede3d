"""Matrix semigroups ``T_t = exp(tG)`` and the transfer of attraction from
integer to real times."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
import scipy.linalg
from scipy.optimize import linprog

from .decomposition import vu_sine_decompose
from .errors import LNotInvariant, NegativeTime, UnboundedSemigroup
from .operators import CLUSTER_TOL, SPECTRAL_TOL, DenseMatrix, Generator, cluster_nullity
from .orbits import CompactNet, occasional_attractor_check
from .vectors import NormKind, ScalarField, SparseVector

DEFAULT_DT = 1 / 64


@dataclass(frozen=True)
class SemigroupSpec:
    """Generator plus a boundedness certificate.

    ``bounded`` follows the eigenvalue criterion (real parts <= tol,
    imaginary-axis eigenvalues semisimple); ``bound`` is the sampled
    ``sup ||exp(tG)||`` over ``[0, t_max]`` and is never trusted alone.
    """

    generator: np.ndarray
    field: ScalarField
    norm: NormKind
    bounded: bool
    bound: float
    unit_bound: float
    t_max: float

    @classmethod
    def from_generator(
        cls,
        G,
        field: Optional[ScalarField] = None,
        norm: NormKind = NormKind.L2,
        t_max: float = 50.0,
        samples: int = 401,
    ) -> "SemigroupSpec":
        if isinstance(G, Generator):
            field = G.field if field is None else field
            norm = G.base_norm
            G = G.matrix()
        G = np.array(G, dtype=complex if field is ScalarField.COMPLEX else None)
        if field is None:
            field = ScalarField.COMPLEX if np.iscomplexobj(G) else ScalarField.REAL
        if field is ScalarField.REAL:
            G = np.real_if_close(G).astype(float)
        bounded = _generator_bounded(G)
        ts = np.linspace(0.0, t_max, samples)
        norms = [np.linalg.norm(scipy.linalg.expm(t * G), norm.ord) for t in ts]
        unit = [np.linalg.norm(scipy.linalg.expm(t * G), norm.ord) for t in np.linspace(0.0, 1.0, 129)]
        G.setflags(write=False)
        return cls(G, field, norm, bounded, float(max(norms)), float(max(unit)), t_max)

    @property
    def dim(self) -> int:
        return self.generator.shape[0]

    def operator_at(self, t: float) -> DenseMatrix:
        return DenseMatrix(semigroup_at(self, t), self.field, self.norm)


def _generator_bounded(G: np.ndarray, tol: float = SPECTRAL_TOL) -> bool:
    eigs = np.linalg.eigvals(G)
    if np.any(eigs.real > tol):
        return False
    for lam in eigs[np.abs(eigs.real) <= tol]:
        cluster = eigs[np.abs(eigs - lam) <= CLUSTER_TOL]
        if cluster_nullity(G, complex(np.mean(cluster)), cluster, tol) < len(cluster):
            return False
    return True


def semigroup_at(S: SemigroupSpec, t: float) -> np.ndarray:
    """``exp(tG)`` by scaling and squaring."""
    if t < 0:
        raise NegativeTime(f"t = {t!r} < 0")
    return scipy.linalg.expm(t * S.generator)


@dataclass(frozen=True)
class SemigroupSample:
    times: tuple
    operators: tuple

    def law_defect(self) -> float:
        """Largest relative ``||T_{s+t} - T_s T_t||`` over pairs whose sum is sampled."""
        index = {t: i for i, t in enumerate(self.times)}
        worst = 0.0
        for i, s in enumerate(self.times):
            for j, t in enumerate(self.times):
                k = index.get(s + t)
                if k is None:
                    continue
                lhs = self.operators[k]
                rhs = self.operators[i] @ self.operators[j]
                worst = max(worst, np.linalg.norm(lhs - rhs, 2) / max(np.linalg.norm(lhs, 2), 1e-300))
        return worst


def sample(S: SemigroupSpec, times: Sequence[float]) -> SemigroupSample:
    times = tuple(float(t) for t in times)
    return SemigroupSample(times, tuple(semigroup_at(S, t) for t in times))


def tilde_net(S: SemigroupSpec, K: CompactNet, dt: float = DEFAULT_DT) -> CompactNet:
    """Net covering ``union_{t in [0,1]} T_t(K)``.

    Centers ``T_{j dt} c`` for ``j = 0..ceil(1/dt)``.  A point ``T_t y`` with
    ``||y - c|| <= mesh`` is within ``M mesh + dt ||G|| M ||c||`` of the
    center at the nearest grid time, ``M = sup_{t<=1} ||T_t||`` (the
    Lipschitz bound in ``t``; the nearest grid time is only ``dt/2`` away).
    """
    if not S.bounded:
        raise UnboundedSemigroup("tilde net needs a bounded semigroup")
    if not 0 < dt <= 1:
        raise ValueError("dt must lie in (0, 1]")
    steps = math.ceil(1 / dt - 1e-12)
    step_op = semigroup_at(S, dt)
    M = S.unit_bound
    gnorm = float(np.linalg.norm(S.generator, S.norm.ord))
    centers = []
    for c in K.centers:
        v = c.to_dense(S.dim)
        for _ in range(steps + 1):
            centers.append(SparseVector.from_dense(v, S.field))
            v = step_op @ v
    cmax = max(c.norm(S.norm) for c in K.centers)
    mesh = K.mesh * M + dt * gnorm * M * cmax
    return CompactNet(centers, mesh)


def distance_to_span(v: np.ndarray, basis: np.ndarray, norm: NormKind = NormKind.L2) -> float:
    """``min_c ||v - basis @ c||``; L1 and sup via linear programming (real data)."""
    if basis.shape[1] == 0:
        return float(np.linalg.norm(v, norm.ord))
    if norm is NormKind.L2:
        coef, *_ = np.linalg.lstsq(basis, v, rcond=None)
        return float(np.linalg.norm(v - basis @ coef))
    if np.iscomplexobj(v) or np.iscomplexobj(basis):
        raise NotImplementedError("L1/sup distance to a complex span")
    d, k = basis.shape
    # variables: c (k, free), t (d or 1, >= 0)
    if norm is NormKind.L1:
        nt = d
        cost = np.concatenate([np.zeros(k), np.ones(d)])
        eye_t = np.eye(d)
    else:
        nt = 1
        cost = np.concatenate([np.zeros(k), [1.0]])
        eye_t = np.ones((d, 1))
    A = np.block([[basis, -eye_t], [-basis, -eye_t]])
    b = np.concatenate([v, -v])
    bounds = [(None, None)] * k + [(0, None)] * nt
    res = linprog(cost, A_ub=A, b_ub=b, bounds=bounds, method="highs")
    return float(res.fun)


@dataclass(frozen=True)
class ContinuousAttractionVerdict:
    converges: bool
    max_tail_distance: float
    distances: List[dict]
    beta_bins: List[float]
    invariance_defect: float


def _basis_matrix(L_basis: Sequence[SparseVector], dim: int) -> np.ndarray:
    if not L_basis:
        return np.zeros((dim, 0))
    return np.column_stack([b.to_dense(dim) for b in L_basis])


def continuous_attraction_check(
    S: SemigroupSpec,
    L_basis: Sequence[SparseVector],
    x: SparseVector,
    real_times: Sequence[float],
    tol: float = 1e-4,
    dt: float = DEFAULT_DT,
) -> ContinuousAttractionVerdict:
    """Distance from ``T_t x`` to ``span(L_basis)`` at the sampled real times.

    Each time is split as ``t = [t] + {t}``; fractional parts are binned at
    width ``dt`` and ``T_[t] T_beta x`` at the bin representative ``beta`` is
    measured next to ``T_t x``.
    """
    B = _basis_matrix(L_basis, S.dim)
    norm = S.norm
    probe_times = sorted({0.5, 1.0} | {(math.floor(t / dt) * dt) % 1.0 for t in real_times})
    defect = 0.0
    for t in probe_times:
        Tt = semigroup_at(S, t)
        for i in range(B.shape[1]):
            col = B[:, i]
            defect = max(defect, distance_to_span(Tt @ col, B, norm) / max(np.linalg.norm(col, norm.ord), 1e-300))
    if defect > tol:
        raise LNotInvariant(f"T_t L leaves L by {defect!r} > {tol!r}")

    xv = x.to_dense(S.dim)
    records = []
    betas = set()
    for t in real_times:
        whole = math.floor(t)
        frac = t - whole
        beta = math.floor(frac / dt) * dt
        betas.add(beta)
        direct = distance_to_span(semigroup_at(S, t) @ xv, B, norm)
        split = distance_to_span(semigroup_at(S, whole) @ (semigroup_at(S, beta) @ xv), B, norm)
        records.append({"t": float(t), "floor": whole, "frac": frac, "beta": beta, "distance": direct, "split_distance": split})
    worst = max((r["distance"] for r in records), default=0.0)
    return ContinuousAttractionVerdict(worst <= tol, worst, records, sorted(betas), defect)


@dataclass(frozen=True)
class TransferReport:
    net: CompactNet
    occasional: list
    dim_L: int
    L_basis: List[SparseVector]
    continuous: list

    @property
    def passed(self) -> bool:
        return all(v.occasionally_attracted for v in self.occasional) and all(c.converges for c in self.continuous)


def theorem3_transfer(
    S: SemigroupSpec,
    K: CompactNet,
    samples: Sequence[SparseVector],
    real_times: Sequence[float],
    dt: float = DEFAULT_DT,
    horizon: int = 2000,
    tol: float = 1e-4,
) -> TransferReport:
    """Tilde net, occasional attraction for ``T_1``, decomposition of ``T_1``,
    then attraction of ``T_t x`` to ``L`` at real times."""
    net = tilde_net(S, K, dt)
    T1 = S.operator_at(1.0)
    occasional = occasional_attractor_check(T1, net, samples, horizon, tol)
    D = vu_sine_decompose(T1)
    continuous = [continuous_attraction_check(S, D.L_basis, x, real_times, tol, dt) for x in samples]
    return TransferReport(net, occasional, D.dim_L, D.L_basis, continuous)
