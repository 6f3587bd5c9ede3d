"""Projective orbit density: supercyclicity and compact-supercyclicity probes,
and the lemma chain that forces supercyclic power-bounded orbits to vanish."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import (
    EmptyNet,
    EmptySampleSet,
    OpdynError,
    ZeroCandidate,
    ZeroDirection,
)
from .operators import (
    Direction,
    Operator,
    WeightedShift,
    apply,
    apply_power,
    base_operator,
    active_norm,
    active_norms_dense,
    dense_orbit,
    inverse,
    is_invertible,
    power_norms,
    require_power_bounded,
    rescale,
    _check_field,
    _check_finite_domain,
)
from .orbits import (
    DEFAULT_SEED,
    CompactNet,
    OccasionalVerdict,
    ReturningCertificate,
    VanishingOrbit,
    default_unit_samples,
    scaled_vector_net,
    is_returning,
    lemma1_isometry_check,
    lemma4_recover,
    occasional_attractor_check,
)
from .vectors import NormKind, ScalarField, SparseVector

DEFAULT_TOL = 1e-2
DEFAULT_TARGETS = 64
SPARSE_SUPPORT = 32
TINY = 1e-300
LOG_TINY = math.log(TINY)
# (targets x orbit points x dim) entries per residual chunk
_CHUNK = 1 << 22

PROJECTIVELY_DENSE = "ProjectivelyDense"
NOT_DENSE = "NotDense"
VANISHING_ORBIT = "VanishingOrbit"
INCONCLUSIVE = "Inconclusive"


def best_scalar_match(y: SparseVector, x: SparseVector) -> Tuple[object, float]:
    """``argmin_lambda ||lambda y - x||`` in L2 and the minimum."""
    if x.field is not y.field:
        x, y = x.as_complex(), y.as_complex()
    yy = y.norm_sq_exact()
    if yy == 0:
        raise ZeroDirection("best scalar match against the zero vector")
    lam = x.inner(y) / float(yy)
    return lam, (y * lam - x).norm(NormKind.L2)


@dataclass
class SupercyclicityVerdict:
    candidate: object
    classification: str
    density_gap: float
    evidence: List[dict]
    tol: float
    horizon: int
    doubled_gap: float = math.nan
    nonvanishing_gap: float = math.nan
    vanishing_index: Optional[int] = None
    lower_bounds: Optional[List[float]] = None
    allowance: Optional[float] = None
    doubled_lower_bounds: Optional[List[float]] = None


def default_targets(T: Operator, count: int = DEFAULT_TARGETS, seed: int = DEFAULT_SEED, support: int = SPARSE_SUPPORT) -> List[SparseVector]:
    """``count`` seeded L2-unit vectors plus the coordinate directions
    (ambient dimension, or indices ``0..support-1`` for sequence models)."""
    dim = T.dim if T.is_finite else support
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        v = rng.standard_normal(dim)
        if T.field is ScalarField.COMPLEX:
            v = v + 1j * rng.standard_normal(dim)
        out.append(SparseVector.from_dense(v / np.linalg.norm(v), T.field))
    out.extend(SparseVector.basis(i, T.field) for i in range(dim))
    return out


def _check_targets(targets: Sequence[SparseVector]):
    if not targets:
        raise EmptySampleSet("no targets supplied")
    for x in targets:
        if abs(x.norm() - 1) > 1e-9:
            raise ValueError(f"target of norm {x.norm()!r} is not normalized")


def _normalized_orbit(M: np.ndarray, v: np.ndarray, horizon: int):
    """Unit directions of ``M^n v`` and ``log ||M^n v||`` (``-inf`` once zero)."""
    d = v.shape[0]
    dirs = np.zeros((horizon + 1, d), dtype=np.result_type(M, v))
    logs = np.full(horizon + 1, -np.inf)
    acc = 0.0
    for n in range(horizon + 1):
        nv = np.linalg.norm(v)
        if nv == 0 or not math.isfinite(nv):
            break
        acc += math.log(nv)
        v = v / nv
        dirs[n] = v
        logs[n] = acc
        v = M @ v
    return dirs, logs


def _dense_residuals(X: np.ndarray, Y: np.ndarray):
    """Residuals ``||x - <x, y> y||`` for unit rows ``y``; returns (residuals, scalars)."""
    m, d = X.shape
    N = Y.shape[0]
    res = np.empty((m, N))
    lam = np.empty((m, N), dtype=np.result_type(X, Y))
    step = max(1, _CHUNK // max(1, m * d))
    for s in range(0, N, step):
        Yc = Y[s : s + step]
        P = X @ Yc.conj().T
        R = X[:, None, :] - P[:, :, None] * Yc[None, :, :]
        res[:, s : s + step] = np.linalg.norm(R, axis=2)
        lam[:, s : s + step] = P
    return res, lam


def _cone_lower(res: np.ndarray, alpha: np.ndarray) -> np.ndarray:
    """Residual lower bound when the direction may tilt by at most ``alpha``.

    For unit ``x`` the residual is ``sin theta`` with ``theta`` the angle to
    the line; tilting the line by ``alpha`` leaves at least ``sin(theta - alpha)``.
    """
    theta = np.arcsin(np.clip(res, 0.0, 1.0))
    return np.sin(np.clip(theta - alpha, 0.0, None))


@dataclass
class _Profile:
    """Per-target minimum residual over ``n <= H`` and ``n <= 2H`` plus evidence."""

    best_h: np.ndarray
    best_2h: np.ndarray
    best_nonvanishing: np.ndarray
    lower_h: np.ndarray
    lower_2h: np.ndarray
    evidence: List[dict]
    vanishing_index: Optional[int]


def _scalar_out(z, field):
    z = complex(z)
    if field is ScalarField.REAL:
        z = complex(z.real, 0.0)
    return [z.real, z.imag]


def _dense_rows(M, c, X, N):
    Y, logs = _normalized_orbit(M, c, N)
    res, lam = _dense_residuals(X, Y)
    return res, lam, logs


def _shift_rows(T: WeightedShift, c: SparseVector, targets, N):
    """Only powers whose shifted support meets a target's support can beat ``||x|| = 1``."""
    m = len(targets)
    if T.unit_weights:
        norms = np.full(N + 1, c.norm())
    else:
        norms = np.empty(N + 1)
        v = c
        for n in range(N + 1):
            norms[n] = v.norm()
            v = apply(T, v)
    with np.errstate(divide="ignore"):
        logs = np.where(norms > 0, np.log(np.where(norms > 0, norms, 1.0)), -np.inf)
    res = np.ones((m, N + 1))
    lam = np.zeros((m, N + 1), dtype=complex)
    cache = {}
    for i, x in enumerate(targets):
        for t in x.support:
            for s in c.support:
                n = (t - s) * T.step
                if not 0 <= n <= N or norms[n] == 0:
                    continue
                if n not in cache:
                    y = apply_power(T, c, n)
                    cache[n] = y * (1.0 / norms[n])
                lam[i, n], res[i, n] = best_scalar_match(cache[n], x)
    return res, lam, logs


def _profile(T: Operator, starts: Sequence[SparseVector], targets, horizon, tol, mesh=0.0):
    B = base_operator(T)
    N = 2 * horizon
    if B.is_finite:
        M = B.matrix()
        X = np.array([t.to_dense(B.dim) for t in targets])
        for c in starts:
            _check_finite_domain(B, c)
        rows = lambda c: _dense_rows(M, c.to_dense(B.dim), X, N)
    elif isinstance(B, WeightedShift):
        rows = lambda c: _shift_rows(B, c, targets, N)
    else:
        raise NotImplementedError(f"no orbit model for {B!r}")
    op_norms = power_norms(B, N, NormKind.L2) if mesh > 0 else None

    m = len(targets)
    best_h, best_2h, best_nv = (np.full(m, np.inf) for _ in range(3))
    lower_h, lower_2h = np.full(m, np.inf), np.full(m, np.inf)
    ev = [None] * m
    vanish = None
    log_tol = math.log(tol)
    for ci, c in enumerate(starts):
        res, lam, logs = rows(c)
        live = logs > LOG_TINY
        res[:, ~live] = np.inf
        gone = np.flatnonzero(logs < log_tol)
        if gone.size and gone[0] <= horizon and (vanish is None or gone[0] < vanish):
            vanish = int(gone[0])
        if mesh > 0:
            with np.errstate(over="ignore", invalid="ignore"):
                ratio = op_norms * mesh / np.exp(logs)
            alpha = np.where(ratio < 1, np.arcsin(np.clip(ratio, 0.0, 1.0)), np.pi / 2)
            lower = _cone_lower(np.where(np.isfinite(res), res, 1.0), alpha[None, :])
            # the image of a ball around a vanished point reaches the origin
            lower[:, ~live] = 0.0
        else:
            lower = res
        nv_res = np.where((logs >= log_tol)[None, :], res, np.inf)
        k_h = np.argmin(res[:, : horizon + 1], axis=1)
        for i in range(m):
            n = int(k_h[i])
            r = res[i, n]
            if r < best_h[i]:
                best_h[i] = r
                ev[i] = {
                    "target": i,
                    "center": ci,
                    "n": n,
                    "lambda": _scalar_out(lam[i, n], B.field),
                    "orbit_log_norm": float(logs[n]),
                    "residual": float(r),
                }
        best_2h = np.minimum(best_2h, res.min(axis=1))
        best_nv = np.minimum(best_nv, nv_res[:, : horizon + 1].min(axis=1))
        lower_h = np.minimum(lower_h, lower[:, : horizon + 1].min(axis=1))
        lower_2h = np.minimum(lower_2h, lower.min(axis=1))
    return _Profile(best_h, best_2h, best_nv, lower_h, lower_2h, ev, vanish)


def _classify(p: _Profile, tol: float):
    gap = float(np.max(p.best_h))
    gap_2h = float(np.max(p.best_2h))
    nv_gap = float(np.max(p.best_nonvanishing))
    if gap <= tol:
        if p.vanishing_index is not None and nv_gap > tol:
            return VANISHING_ORBIT, gap, gap_2h, nv_gap
        return PROJECTIVELY_DENSE, gap, gap_2h, nv_gap
    stable = np.any((p.lower_h >= 10 * tol) & (p.lower_2h >= 10 * tol))
    return (NOT_DENSE if stable else INCONCLUSIVE), gap, gap_2h, nv_gap


def supercyclic_probe(
    T: Operator,
    k: SparseVector,
    targets: Optional[Sequence[SparseVector]] = None,
    horizon: int = 10_000,
    tol: float = DEFAULT_TOL,
) -> SupercyclicityVerdict:
    """How well the scaled orbit ``F . O(k)`` approximates each target.

    ``density_gap`` is the worst target's best residual over ``n <= horizon``.
    NotDense needs a target at ``>= 10 tol`` at both ``horizon`` and
    ``2 horizon``.  VanishingOrbit: density only through powers where
    ``||T^n k|| < tol``.  Scalars in the evidence refer to the unit direction
    ``T^n k / ||T^n k||``; ``orbit_log_norm`` recovers the raw scale.
    """
    if k.is_zero():
        raise ZeroCandidate("the zero vector is never supercyclic")
    _check_field(T, k)
    if targets is None:
        targets = default_targets(T)
    _check_targets(targets)
    p = _profile(T, [k], targets, horizon, tol)
    cls, gap, gap_2h, nv = _classify(p, tol)
    return SupercyclicityVerdict(
        k, cls, gap, p.evidence, tol, horizon, gap_2h, nv, p.vanishing_index,
        [float(v) for v in p.lower_h], None, [float(v) for v in p.lower_2h],
    )


def compact_supercyclic_probe(
    T: Operator,
    K: CompactNet,
    targets: Optional[Sequence[SparseVector]] = None,
    horizon: int = 10_000,
    tol: float = DEFAULT_TOL,
) -> SupercyclicityVerdict:
    """Density of ``F . O(K)`` for a net ``K``.

    Center residuals are achieved values, so they bound the density gap from
    above.  NotDense uses a rigorous lower bound instead: a point of the
    ``mesh`` ball around ``c`` has ``T^n y`` within ``||T^n|| mesh`` of
    ``T^n c``, which tilts the line by at most
    ``arcsin(||T^n|| mesh / ||T^n c||)``.
    """
    if not K.centers:
        raise EmptyNet("empty net")
    for c in K.centers:
        _check_field(T, c)
    if targets is None:
        targets = default_targets(T)
    _check_targets(targets)
    starts = [c for c in K.centers if not c.is_zero()]
    if not starts:
        raise ZeroCandidate("every center of the net is zero")
    p = _profile(T, starts, targets, horizon, tol, K.mesh)
    cls, gap, gap_2h, nv = _classify(p, tol)
    allowance = 0.0
    if K.mesh > 0:
        sup_pow = float(np.max(power_norms(base_operator(T), horizon, NormKind.L2)))
        lam_max = max(
            (math.hypot(*e["lambda"]) * math.exp(-e["orbit_log_norm"]) for e in p.evidence if e and math.isfinite(e["orbit_log_norm"])),
            default=0.0,
        )
        allowance = sup_pow * K.mesh * lam_max
    return SupercyclicityVerdict(
        K, cls, gap, p.evidence, tol, horizon, gap_2h, nv, p.vanishing_index,
        [float(v) for v in p.lower_h], allowance, [float(v) for v in p.lower_2h],
    )


# ---------------------------------------------------------------------------
# lemma chain


FINITE_DIMENSIONAL_EXCEPTION = "FiniteDimensionalException"
CONSISTENT = "ConsistentWithTheorem4"
NOT_SUPERCYCLIC_AT_SCALE = "NotSupercyclicAtScale"


@dataclass
class ChainReport:
    verdict: str
    stages: List[dict]
    probe: Optional[SupercyclicityVerdict] = None
    vanishing: Optional[VanishingOrbit] = None
    returning: Optional[ReturningCertificate] = None
    recovered: Optional[ReturningCertificate] = None
    isometry: Optional[object] = None
    inverse_net: Optional[CompactNet] = None
    inverse_attraction: Optional[List[OccasionalVerdict]] = None
    sample_tails: Optional[List[float]] = None

    def stage(self, name: str) -> Optional[dict]:
        return next((s for s in self.stages if s["stage"] == name), None)


def _orbit_norm_profile(T: Operator, k: SparseVector, horizon: int) -> np.ndarray:
    B = base_operator(T)
    if B.is_finite:
        return active_norms_dense(T, dense_orbit(B, k.to_dense(B.dim), horizon))
    if isinstance(B, WeightedShift) and B.unit_weights and B.direction is not Direction.BACKWARD:
        return np.full(horizon + 1, active_norm(T, k))
    out = np.empty(horizon + 1)
    v = k
    for n in range(horizon + 1):
        out[n] = active_norm(T, v)
        v = apply(B, v)
    return out


def _scalar_data(T: Operator, k: SparseVector, horizon: int, tol: float):
    """``(lambda_n, n)`` with ``||lambda_n T^n k - k|| <= tol``, ``1 <= n <= horizon``."""
    B = base_operator(T)
    lams, idx = [], []
    if B.is_finite:
        kd = k.to_dense(B.dim)
        orb = dense_orbit(B, kd, horizon)
        yy = np.sum(np.abs(orb) ** 2, axis=1)
        ok = yy > 0
        lam = np.zeros(horizon + 1, dtype=orb.dtype)
        lam[ok] = (orb[ok].conj() @ kd) / yy[ok]
        res = np.linalg.norm(lam[:, None] * orb - kd, axis=1)
        for n in range(1, horizon + 1):
            if ok[n] and res[n] <= tol:
                lams.append(complex(lam[n]))
                idx.append(n)
        return lams, idx
    for n in range(1, horizon + 1):
        y = apply_power(B, k, n)
        if y.is_zero() or set(y.support).isdisjoint(k.support):
            continue
        lam, r = best_scalar_match(y, k)
        if r <= tol:
            lams.append(complex(lam))
            idx.append(n)
    return lams, idx


def theorem4_pipeline(
    T: Operator,
    k: SparseVector,
    horizon: int = 10_000,
    tol: float = DEFAULT_TOL,
    vanish_tol: float = 1e-6,
    confirm_at: int = 500,
    samples: int = 16,
    seed: int = DEFAULT_SEED,
    targets: Optional[Sequence[SparseVector]] = None,
) -> ChainReport:
    """Run the chain: rescale, probe, vanishing test, scalar recovery,
    isometry on the orbit span, and occasional attraction of ``T^{-1}`` by
    the scaled-``k`` net.

    ``tol`` governs density and returning residuals; ``vanish_tol`` the
    orbit-vanishing test.  A vanishing orbit is propagated to ``samples``
    seeded unit vectors: ``||T^confirm_at x|| <= vanish_tol`` for each.
    """
    cert = require_power_bounded(base_operator(T))
    stages = []
    R = rescale(base_operator(T))
    stages.append({"stage": "rescale", "ok": True, "sup_norm_estimate": cert.sup_norm_estimate})
    rep = ChainReport(INCONCLUSIVE, stages)

    probe = supercyclic_probe(T, k, targets, horizon, tol)
    rep.probe = probe
    stages.append(
        {"stage": "probe", "ok": probe.classification == PROJECTIVELY_DENSE, "classification": probe.classification, "density_gap": probe.density_gap}
    )

    norms = _orbit_norm_profile(R, k, horizon)
    small = np.flatnonzero(norms < vanish_tol)
    if small.size:
        n0 = int(small[0])
        rep.vanishing = VanishingOrbit(n0, float(norms[n0]))
        stages.append({"stage": "vanishing", "ok": True, "vanishing": True, "index": n0, "norm": float(norms[n0])})
        tails = _sample_tails(T, confirm_at, samples, seed)
        rep.sample_tails = tails
        confirmed = max(tails) <= vanish_tol
        record = {"stage": "propagate", "ok": confirmed, "confirm_at": confirm_at, "max_tail": max(tails)}
        if probe.classification == PROJECTIVELY_DENSE:
            # x within eps of c T^j k gives ||T^n x|| <= |c| ||T^{n+j} k|| + sup||T^m|| eps
            record["epsilon_bound"] = _epsilon_bound(T, k, probe, confirm_at)
        stages.append(record)
        if confirmed:
            rep.verdict = CONSISTENT
        elif probe.classification == NOT_DENSE:
            rep.verdict = NOT_SUPERCYCLIC_AT_SCALE
        return rep
    stages.append({"stage": "vanishing", "ok": True, "vanishing": False, "min_norm": float(norms.min())})

    if probe.classification == NOT_DENSE:
        rep.verdict = NOT_SUPERCYCLIC_AT_SCALE
        stages.append({"stage": "chain", "ok": False, "skipped": "candidate is not projectively dense at this horizon"})
        return rep

    complete = True
    try:
        ret = is_returning(R, k, tol, horizon)
        rep.returning = ret if isinstance(ret, ReturningCertificate) else None
        lams, idx = _scalar_data(R, k, horizon, tol)
        rec = lemma4_recover(R, k, lams, idx, tol, horizon)
        rep.recovered = rec if isinstance(rec, ReturningCertificate) else None
        stages.append(
            {
                "stage": "returning",
                "ok": rep.recovered is not None,
                "scalar_data": len(idx),
                "indices": list(rep.recovered.indices) if rep.recovered else [],
                "direct_certificate": rep.returning is not None,
            }
        )
        complete &= rep.recovered is not None
    except OpdynError as exc:
        stages.append({"stage": "returning", "ok": False, "error": type(exc).__name__, "detail": str(exc)})
        complete = False

    if complete:
        try:
            iso = lemma1_isometry_check(R, k, tol, horizon)
            rep.isometry = iso
            ok = iso.norm_constancy and iso.isometry_on_span
            stages.append(
                {"stage": "isometry", "ok": ok, "span_dim": iso.span_dim, "max_isometry_defect": iso.max_isometry_defect}
            )
            complete &= ok
        except OpdynError as exc:
            stages.append({"stage": "isometry", "ok": False, "error": type(exc).__name__, "detail": str(exc)})
            complete = False

    B = base_operator(T)
    if complete:
        if is_invertible(B):
            Tinv = inverse(B)
            net = scaled_vector_net(k, B.field)
            unit = default_unit_samples(B, samples, seed)
            verdicts = occasional_attractor_check(Tinv, net, unit, horizon, tol)
            rep.inverse_net, rep.inverse_attraction = net, verdicts
            ok = all(v.occasionally_attracted for v in verdicts)
            stages.append(
                {"stage": "inverse_attraction", "ok": ok, "mesh": net.mesh, "max_min_distance": max(v.min_distance for v in verdicts)}
            )
            complete &= ok
        else:
            stages.append({"stage": "inverse_attraction", "ok": False, "skipped": "NotInvertible"})
            complete = False

    if complete and B.is_finite:
        rep.verdict = FINITE_DIMENSIONAL_EXCEPTION
    return rep


def _sample_tails(T: Operator, n: int, count: int, seed: int) -> List[float]:
    B = base_operator(T)
    unit = default_unit_samples(B, count, seed)[-count:]
    return [active_norm(B, apply_power(B, x, n)) for x in unit]


def _epsilon_bound(T: Operator, k: SparseVector, probe: SupercyclicityVerdict, n: int) -> float:
    B = base_operator(T)
    sup_pow = float(np.max(power_norms(B, n)))
    worst = 0.0
    for e in probe.evidence:
        c = math.hypot(*e["lambda"])
        j = e["n"]
        tail = apply_power(B, k, n + j).norm() / math.exp(e["orbit_log_norm"])
        worst = max(worst, c * tail + sup_pow * e["residual"])
    return worst
