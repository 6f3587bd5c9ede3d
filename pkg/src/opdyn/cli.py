"""``opdyn`` command line.

Every command reads an operator spec (``--op``), writes a JSON report to
``--out`` (stdout when omitted) and, where a trace exists, a CSV next to it.
Exit status: 0 on completion, 2 on precondition or input errors, 3 when a
falsification run is inconclusive, 1 on any other analysis error.
"""

from __future__ import annotations

import argparse
import csv
import io as _io
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import io
from .decomposition import vu_sine_decompose
from .errors import InvariantViolation, OpdynError, ParseError, PreconditionError
from .operators import WeightedShift, base_operator
from .orbits import (
    DEFAULT_SEED,
    ReturningCertificate,
    attractor_check,
    default_unit_samples,
    is_returning,
    occasional_attractor_check,
    orbit,
    scaled_vector_net,
)
from .semigroup import DEFAULT_DT, SemigroupSpec, theorem3_transfer
from .supercyclic import compact_supercyclic_probe, default_targets, supercyclic_probe, theorem4_pipeline
from .vectors import SparseVector
from .weyl import NetSurvives, default_probes, theorem1_falsify, weyl_sequence_dense, weyl_sequence_shift

COMMANDS = (
    "decompose",
    "orbit",
    "returning",
    "attractor",
    "occasional",
    "weyl",
    "falsify",
    "semigroup",
    "supercyclic",
    "compact-supercyclic",
    "theorem4",
)

# per-command defaults for --tol / --horizon
DEFAULTS = {
    "decompose": (1e-9, 200),
    "orbit": (1e-6, 100),
    "returning": (1e-6, 2000),
    "attractor": (1e-6, 2000),
    "occasional": (1e-6, 2000),
    "weyl": (1e-6, 0),
    "falsify": (1e-9, 4096),
    "semigroup": (1e-4, 2000),
    "supercyclic": (1e-2, 10_000),
    "compact-supercyclic": (1e-2, 10_000),
    "theorem4": (1e-2, 10_000),
}

EXIT_OK, EXIT_ERROR, EXIT_PRECONDITION, EXIT_INCONCLUSIVE = 0, 1, 2, 3


class Result:
    def __init__(self, report, rows: Optional[List[list]] = None, header: Optional[list] = None, status: int = EXIT_OK):
        self.report = report
        self.rows = rows
        self.header = header
        self.status = status


def _parse_lambda(text: str) -> complex:
    try:
        parts = [float(p) for p in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"--lambda expects RE,IM, got {text!r}") from None
    if len(parts) == 1:
        return complex(parts[0], 0.0)
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"--lambda expects RE,IM, got {text!r}")
    return complex(parts[0], parts[1])


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="opdyn", description="Asymptotic dynamics of linear operators at desk scale.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--op", required=True, metavar="PATH", help="operator spec (JSON)")
    p.add_argument("--out", metavar="PATH", help="report path; a CSV trace goes next to it")
    p.add_argument("--tol", type=float)
    p.add_argument("--horizon", type=int)
    p.add_argument("--seed", type=lambda s: int(s, 0), default=DEFAULT_SEED)
    p.add_argument("--net", metavar="PATH", help="compact net (JSON)")
    p.add_argument("--vec", metavar="PATH", help="vector or list of vectors (JSON)")
    p.add_argument("--lambda", dest="lam", type=_parse_lambda, default=complex(1.0, 0.0), metavar="RE,IM")
    p.add_argument("--count", type=int, default=16)
    p.add_argument("--dt", type=float, default=DEFAULT_DT)
    p.add_argument("--targets", type=int, default=64)
    return p


# ---------------------------------------------------------------------------
# commands


def _first_vector(T, vecs) -> SparseVector:
    if vecs:
        return vecs[0]
    return SparseVector.basis(0, T.field)


def _samples(T, vecs, count, seed):
    return list(vecs) if vecs else default_unit_samples(T, count, seed)


def _need_net(K, command):
    if K is None:
        raise ParseError(0, f"{command} needs --net")
    return K


def cmd_decompose(T, K, vecs, a):
    D = vu_sine_decompose(T, a.tol, a.horizon)
    rows = [[d["n"], d["norm"]] for d in D.decay]
    return Result(io.decomposition_to_obj(D), rows, ["n", "norm"])


def cmd_orbit(T, K, vecs, a):
    x = _first_vector(T, vecs)
    tr = orbit(T, x, a.horizon)
    text = tr.to_csv(K, T.base_norm)
    rows = [r.split(",") for r in text.strip().split("\n")[1:]]
    report = {"base": x, "horizon": tr.horizon, "norms": tr.norms}
    return Result(report, rows, ["n", "norm", "distance_to_net"])


def cmd_returning(T, K, vecs, a):
    x = _first_vector(T, vecs)
    res = is_returning(T, x, a.tol, a.horizon)
    if isinstance(res, ReturningCertificate):
        report = {"returning": True, "vector": x, "indices": res.indices, "residuals": res.residuals, "tolerance": res.tolerance}
        rows = [[n, r] for n, r in zip(res.indices, res.residuals)]
    else:
        report = {"returning": False, "min_residual": res.min_residual, "argmin": res.argmin, "horizon": res.horizon}
        rows = []
    return Result(report, rows, ["n", "residual"])


def cmd_attractor(T, K, vecs, a):
    K = _need_net(K, "attractor")
    xs = _samples(T, vecs, a.count, a.seed)
    verdicts = attractor_check(T, K, xs, a.horizon, a.tol)
    report = {"attracted": all(v.attracted for v in verdicts), "mesh": K.mesh, "samples": verdicts}
    rows = [[i, v.tail_max_distance, int(v.attracted)] for i, v in enumerate(verdicts)]
    return Result(report, rows, ["sample", "tail_max_distance", "attracted"])


def cmd_occasional(T, K, vecs, a):
    K = _need_net(K, "occasional")
    xs = _samples(T, vecs, a.count, a.seed)
    verdicts = occasional_attractor_check(T, K, xs, a.horizon, a.tol)
    report = {"occasionally_attracted": all(v.occasionally_attracted for v in verdicts), "mesh": K.mesh, "samples": verdicts}
    rows = [[i, v.min_distance, v.argmin, int(v.occasionally_attracted)] for i, v in enumerate(verdicts)]
    return Result(report, rows, ["sample", "min_distance", "argmin", "occasionally_attracted"])


def cmd_weyl(T, K, vecs, a):
    B = base_operator(T)
    if isinstance(B, WeightedShift):
        W = weyl_sequence_shift(B.direction, a.lam, a.count)
    else:
        W = weyl_sequence_dense(T, a.lam, a.tol)
    rows = [[n, r] for n, r in enumerate(W.residuals, start=1)]
    return Result(io.weyl_to_obj(W), rows, ["n", "residual"])


def cmd_falsify(T, K, vecs, a):
    K = _need_net(K, "falsify")
    probes = list(vecs) if vecs else default_probes(T, K, a.count, a.seed)
    out = theorem1_falsify(T, K, probes, a.horizon, a.tol)
    if isinstance(out, NetSurvives):
        report = {"witness": None, "inconclusive": True, "horizon": out.horizon, "min_tail_distances": out.min_tail_distances, "eigen_defects": out.eigen_defects}
        rows = [[i, d] for i, d in enumerate(out.min_tail_distances)]
        return Result(report, rows, ["probe", "min_tail_distance"], EXIT_INCONCLUSIVE)
    report = {
        "witness": {
            "probe_index": out.probe_index,
            "probe": out.probe,
            "min_tail_distance": out.min_tail_distance,
            "lower_bound": out.lower_bound,
            "argmin": out.argmin,
        },
        "inconclusive": False,
        "horizon": out.horizon,
        "mesh": K.mesh,
        "eigen_defects": out.eigen_defects,
    }
    return Result(report, [[out.probe_index, out.min_tail_distance]], ["probe", "min_tail_distance"])


def cmd_semigroup(T, K, vecs, a):
    S = SemigroupSpec.from_generator(base_operator(T))
    if K is None:
        K = scaled_vector_net(SparseVector.basis(0, T.field), T.field)
    xs = _samples(T, vecs, a.count, a.seed)
    rng = np.random.default_rng(a.seed)
    times = sorted(rng.uniform(10.0, 50.0, 32).tolist())
    rep = theorem3_transfer(S, K, xs, times, a.dt, a.horizon, a.tol)
    report = {
        "bounded": S.bounded,
        "bound": S.bound,
        "tilde_mesh": rep.net.mesh,
        "tilde_centers": len(rep.net.centers),
        "dim_L": rep.dim_L,
        "L_basis": rep.L_basis,
        "occasional": rep.occasional,
        "continuous": [
            {"converges": c.converges, "max_tail_distance": c.max_tail_distance, "beta_bins": c.beta_bins, "distances": c.distances}
            for c in rep.continuous
        ],
        "passed": rep.passed,
    }
    rows = [[i, d["t"], d["distance"]] for i, c in enumerate(rep.continuous) for d in c.distances]
    return Result(report, rows, ["sample", "t", "distance"])


def _target_set(T, a):
    return default_targets(T, a.targets, a.seed)


def _evidence_rows(V):
    return [[e["target"], e["n"], e["residual"]] for e in V.evidence if e]


def cmd_supercyclic(T, K, vecs, a):
    k = _first_vector(T, vecs)
    targets = _target_set(T, a)
    V = supercyclic_probe(T, k, targets, a.horizon, a.tol)
    return Result(io.supercyclic_to_obj(V, targets), _evidence_rows(V), ["target", "n", "residual"])


def cmd_compact_supercyclic(T, K, vecs, a):
    K = _need_net(K, "compact-supercyclic")
    targets = _target_set(T, a)
    V = compact_supercyclic_probe(T, K, targets, a.horizon, a.tol)
    return Result(io.supercyclic_to_obj(V, targets), _evidence_rows(V), ["target", "n", "residual"])


def cmd_theorem4(T, K, vecs, a):
    k = _first_vector(T, vecs)
    targets = _target_set(T, a)
    rep = theorem4_pipeline(T, k, a.horizon, a.tol, seed=a.seed, targets=targets)
    report = io.supercyclic_to_obj(rep.probe, targets, rep.stages)
    report["verdict"] = rep.verdict
    report["returning_certificate"] = (
        {"indices": rep.recovered.indices, "residuals": rep.recovered.residuals} if rep.recovered else None
    )
    rows = [[i, s["stage"], int(bool(s["ok"]))] for i, s in enumerate(rep.stages)]
    return Result(report, rows, ["index", "stage", "ok"])


HANDLERS = {
    "decompose": cmd_decompose,
    "orbit": cmd_orbit,
    "returning": cmd_returning,
    "attractor": cmd_attractor,
    "occasional": cmd_occasional,
    "weyl": cmd_weyl,
    "falsify": cmd_falsify,
    "semigroup": cmd_semigroup,
    "supercyclic": cmd_supercyclic,
    "compact-supercyclic": cmd_compact_supercyclic,
    "theorem4": cmd_theorem4,
}


def _csv_text(header, rows) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in r])
    return buf.getvalue()


def run(args: argparse.Namespace) -> int:
    tol, horizon = DEFAULTS[args.command]
    args.tol = tol if args.tol is None else args.tol
    args.horizon = horizon if args.horizon is None else args.horizon
    try:
        T, K, vecs = io.parse_inputs(args.op, args.net, args.vec)
        result = HANDLERS[args.command](T, K, vecs, args)
    except (PreconditionError, ParseError, InvariantViolation) as exc:
        _diagnostic(args, exc)
        return EXIT_PRECONDITION
    except OpdynError as exc:
        _diagnostic(args, exc)
        return EXIT_ERROR
    report = {"command": args.command, "status": result.status, "report": result.report}
    text = io.dumps(report)
    if args.out:
        out = Path(args.out)
        out.write_text(text)
        if result.rows is not None:
            out.with_suffix(".csv").write_text(_csv_text(result.header, result.rows))
    else:
        sys.stdout.write(text)
    return result.status


def _diagnostic(args, exc: Exception):
    diag = {"command": args.command, "error": type(exc).__name__, "detail": str(exc)}
    for attr in ("line", "reason", "which"):
        if hasattr(exc, attr):
            diag[attr] = getattr(exc, attr)
    text = io.dumps(diag)
    sys.stderr.write(text)
    if args.out:
        Path(args.out).write_text(text)


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    return run(args)


if __name__ == "__main__":
    sys.exit(main())
