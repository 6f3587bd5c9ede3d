"""Asymptotic splitting ``X = X0 + L`` of a power-bounded matrix.

``L`` is the peripheral spectral subspace (eigenvalues of modulus one),
``X0`` the complementary invariant subspace on which ``T^n -> 0``, and
``A`` the projector onto ``L`` along ``X0``, i.e. ``x -> a(x)`` with
``||T^n x - T^n a(x)|| -> 0``.  Also home of the real quadratic witness
``T^2 + rT + s`` built from a complex eigenvalue.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field as dc_field
from typing import List

import numpy as np
import scipy.linalg

from .errors import DimensionMismatch, FieldMismatch, NotFiniteDimensional
from .operators import Operator, base_operator, complexify, dense_orbit, require_power_bounded
from .orbits import is_returning
from .vectors import ScalarField, SparseVector

DEFAULT_TOL = 1e-9
# eigenvalues with 1 - GAP_WIDTH < |lambda| < 1 - tol are classified into X0
# but flagged, because the split is ill-conditioned there
GAP_WIDTH = 1e-6
DECAY_HORIZON = 200


class GapWarning(UserWarning):
    pass


@dataclass
class AsymptoticDecomposition:
    L_basis: List[SparseVector]
    projector: np.ndarray
    X0_basis: List[SparseVector]
    eigenvalues: np.ndarray
    decay: List[dict]
    decay_per_basis: np.ndarray
    rate: float
    constant: float
    projector_norm: float
    gap_eigenvalues: List[complex] = dc_field(default_factory=list)
    field: ScalarField = ScalarField.REAL

    @property
    def dim_L(self) -> int:
        return len(self.L_basis)

    @property
    def dim_X0(self) -> int:
        return len(self.X0_basis)

    @property
    def dim(self) -> int:
        return self.projector.shape[0]

    def L_matrix(self) -> np.ndarray:
        if not self.L_basis:
            return np.zeros((self.dim, 0))
        return np.column_stack([b.to_dense(self.dim) for b in self.L_basis])


def _finite_matrix(T: Operator) -> np.ndarray:
    if not T.is_finite:
        raise NotFiniteDimensional(f"{T!r}: decomposition needs a finite-dimensional operator")
    return base_operator(T).matrix()


def _orthonormal_range(M: np.ndarray, k: int) -> np.ndarray:
    U, _, _ = np.linalg.svd(M)
    return U[:, :k]


def spectral_projector(M: np.ndarray, tol: float = DEFAULT_TOL):
    """Projector onto the span of eigenvalues with ``|lambda| >= 1 - tol``.

    Sorted complex Schur form, then a Sylvester solve decouples the two
    diagonal blocks.  Returns ``(projector, k, eigenvalues)``.
    """
    d = M.shape[0]
    Tc, Q, k = scipy.linalg.schur(M.astype(complex), output="complex", sort=lambda z: abs(z) >= 1 - tol)
    eigs = np.diag(Tc).copy()
    if k == 0:
        P = np.zeros((d, d), dtype=complex)
    elif k == d:
        P = np.eye(d, dtype=complex)
    else:
        A11, A12, A22 = Tc[:k, :k], Tc[:k, k:], Tc[k:, k:]
        Y = scipy.linalg.solve_sylvester(A11, -A22, -A12)
        Pz = np.zeros((d, d), dtype=complex)
        Pz[:k, :k] = np.eye(k)
        Pz[:k, k:] = -Y
        P = Q @ Pz @ Q.conj().T
    if not np.iscomplexobj(M):
        P = P.real
    return P, k, eigs


def vu_sine_decompose(T: Operator, tol: float = DEFAULT_TOL, horizon: int = DECAY_HORIZON) -> AsymptoticDecomposition:
    """Split a finite-dimensional power-bounded ``T`` into ``X0 + L``."""
    M = _finite_matrix(T)
    require_power_bounded(base_operator(T))
    d = M.shape[0]
    P, k, eigs = spectral_projector(M, tol)
    mods = np.abs(eigs)
    gap = [complex(z) for z in eigs if 1 - GAP_WIDTH < abs(z) < 1 - tol]
    if gap:
        warnings.warn(f"eigenvalues {gap} lie in the classification gap below the unit circle", GapWarning)

    L = _orthonormal_range(P, k)
    X0 = _orthonormal_range(np.eye(d) - P, d - k)
    if T.field is ScalarField.REAL:
        L, X0 = L.real, X0.real
    L_basis = [SparseVector.from_dense(L[:, i], T.field) for i in range(k)]
    X0_basis = [SparseVector.from_dense(X0[:, i], T.field) for i in range(d - k)]

    kind = T.base_norm
    if d - k:
        orb = dense_orbit(base_operator(T), X0.T, horizon)  # (n, basis, d)
        per_basis = np.linalg.norm(orb, kind.ord, axis=2)
        # operator norm of T^n restricted along X0: T^n (I - P)
        R = np.eye(d) - P
        comp = []
        for _ in range(horizon + 1):
            comp.append(np.linalg.norm(R, kind.ord))
            R = M @ R
        comp = np.array(comp)
        rho0 = float(np.max(mods[mods < 1 - tol])) if np.any(mods < 1 - tol) else 0.0
        rate = (1.0 + rho0) / 2.0
        n = np.arange(horizon + 1)
        constant = float(np.max(comp / rate**n))
    else:
        per_basis = np.zeros((horizon + 1, 0))
        rate, constant = 0.0, 0.0
    step = max(1, horizon // 20)
    decay = [
        {"n": int(n), "norm": float(per_basis[n].max()) if per_basis.shape[1] else 0.0}
        for n in range(0, horizon + 1, step)
    ]
    return AsymptoticDecomposition(
        L_basis=L_basis,
        projector=P,
        X0_basis=X0_basis,
        eigenvalues=eigs,
        decay=decay,
        decay_per_basis=per_basis,
        rate=rate,
        constant=constant,
        projector_norm=float(np.linalg.norm(P, kind.ord)),
        gap_eigenvalues=gap,
        field=T.field,
    )


def verify_returning_basis(D: AsymptoticDecomposition, T: Operator, tol: float = 1e-6, horizon: int = 2000) -> List:
    """Run :func:`is_returning` on every ``L`` basis vector."""
    return [is_returning(T, b, tol, horizon) for b in D.L_basis]


@dataclass(frozen=True)
class ProjectionReport:
    a: SparseVector
    tail_residual: float
    rho_at_a: float
    min_rho_perturbed: float
    locally_optimal: bool
    horizon: int


def asymptotic_project(
    D: AsymptoticDecomposition,
    T: Operator,
    x: SparseVector,
    horizon: int = DECAY_HORIZON,
    delta: float = 1e-3,
) -> ProjectionReport:
    """``a(x) = A x`` with a residual report.

    ``rho_x(a') = liminf_n ||T^n x - T^n a'||`` is estimated by the minimum
    over ``[horizon/2, horizon]`` and compared against perturbations
    ``a(x) +- delta * b`` for each ``L`` basis vector ``b``.
    """
    M = _finite_matrix(T)
    if M.shape[0] != D.dim:
        raise DimensionMismatch(f"decomposition of dimension {D.dim}, operator of dimension {M.shape[0]}")
    if x.field is not T.field:
        raise FieldMismatch("vector and operator over different fields")
    if x.min_index() is not None and (x.min_index() < 0 or x.max_index() >= D.dim):
        raise DimensionMismatch(f"vector support outside the {D.dim}-dimensional space")
    kind = T.base_norm
    xv = x.to_dense(D.dim)
    av = D.projector @ xv
    if T.field is ScalarField.REAL:
        av = av.real
    start = horizon // 2

    def rho(candidate):
        orb = dense_orbit(base_operator(T), xv - candidate, horizon)
        return float(np.min(np.linalg.norm(orb[start:], kind.ord, axis=1))), float(
            np.linalg.norm(orb[-1], kind.ord)
        )

    rho_a, tail = rho(av)
    perturbed = []
    for b in D.L_basis:
        bv = b.to_dense(D.dim)
        for sign in (1.0, -1.0):
            perturbed.append(rho(av + sign * delta * bv)[0])
    min_pert = min(perturbed) if perturbed else math.inf
    return ProjectionReport(
        a=SparseVector.from_dense(av, T.field),
        tail_residual=tail,
        rho_at_a=rho_a,
        min_rho_perturbed=min_pert,
        locally_optimal=rho_a <= min_pert,
        horizon=horizon,
    )


# ---------------------------------------------------------------------------
# real quadratic witness


@dataclass(frozen=True)
class RealQuadraticWitness:
    r: float
    s: float
    singularity: float
    source_eigenvalue: complex

    def polynomial(self, M: np.ndarray) -> np.ndarray:
        return M @ M + self.r * M + self.s * np.eye(M.shape[0])


def select_eigenvalue(eigs: np.ndarray) -> complex:
    """Largest modulus; ties by largest imaginary part, then first in oracle order."""
    mods = np.abs(eigs)
    top = mods.max()
    tie = 1e-12 * max(top, 1.0)
    best = None
    for i, z in enumerate(eigs):
        if top - mods[i] > tie:
            continue
        if best is None or z.imag > eigs[best].imag + tie:
            best = i
    return complex(eigs[best])


def real_quadratic_witness(T: Operator) -> RealQuadraticWitness:
    """``(r, s) = (-(lambda + conj lambda), |lambda|^2)`` for an eigenvalue of ``T_C``.

    ``T^2 + rT + s`` is then singular: ``(t - lambda)(t - conj lambda)``
    has real coefficients and vanishes at an eigenvalue.
    """
    if T.field is not ScalarField.REAL:
        raise FieldMismatch("the quadratic witness is defined for real operators")
    M = _finite_matrix(T)
    eigs = np.linalg.eigvals(_finite_matrix(complexify(base_operator(T))))
    lam = select_eigenvalue(eigs)
    r = -2.0 * lam.real
    s = lam.real**2 + lam.imag**2
    S = M @ M + r * M + s * np.eye(M.shape[0])
    singularity = float(np.linalg.svd(S, compute_uv=False)[-1])
    return RealQuadraticWitness(r, s, singularity, lam)


def rotation_identity_residual(alpha: float) -> float:
    """``||R^2 - (sin 2a / sin a) R + I||`` for the plane rotation by ``alpha``."""
    c, s = math.cos(alpha), math.sin(alpha)
    R = np.array([[c, -s], [s, c]])
    coef = math.sin(2 * alpha) / s
    return float(np.linalg.norm(R @ R - coef * R + np.eye(2), 2))
