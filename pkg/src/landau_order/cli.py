"""Command-line front end: solve, verify, band and convergence runs.

Exit codes: 0 success, 1 verification failed, 2 partial convergence,
64 usage or configuration error, 70 resource limit.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, config
from .bloch_bands import alpha_grid, compute_band, verify_band
from .eigensolve import dense_reference
from .errors import ChainConvergenceError, DomainError, ResourceError, UsageError
from .kernels import BACKEND
from .ordering import report_passes, sweep_sectors, verify_sequence, write_csv
from .sector_operator import DENSE_CAP, assemble, assemble_bloch

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_PARTIAL = 2
EXIT_USAGE = 64
EXIT_RESOURCE = 70

CONVERGENCE_COLUMNS = ("m", "resolution", "h", "energy", "residual", "converged",
                       "difference", "observed_order", "richardson")


def _write_json(path, doc):
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def _diagnostics(seq):
    out = {}
    for m, e in seq.entries.items():
        d = dict(e.diagnostics)
        d.pop("assembly_s", None)
        d.pop("solve_s", None)
        out[str(m)] = d
    return out


def _timings(seq):
    return {str(m): {"assembly_s": e.diagnostics.get("assembly_s"),
                     "solve_s": e.diagnostics.get("solve_s")} for m, e in seq.entries.items()}


def _oracle(cfg, seq, alpha=None):
    """Dense cross-check of every sector small enough to diagonalize."""
    out = {}
    if seq.grid.dimension > DENSE_CAP:
        return {"skipped": f"dimension {seq.grid.dimension} exceeds {DENSE_CAP}"}
    for m in seq.m_values:
        if alpha is None:
            op = assemble(cfg.spec, cfg.field, m, seq.grid)
        else:
            op = assemble_bloch(cfg.spec, cfg.field, m, alpha, seq.grid)
        ref = dense_reference(op)[: len(seq.entries[m].levels)]
        out[str(m)] = float(np.max(np.abs(ref - seq.entries[m].levels)))
    return out


def _run_doc(cfg, args, extra):
    return {
        "config": cfg.doc,
        "config_digest": cfg.digest,
        "spec_digest": cfg.spec.digest,
        "certificate": cfg.spec.certificate,
        "radial_sign": cfg.spec.radial_sign,
        "version": __version__,
        "backend": BACKEND,
        "threads": args.threads,
        **extra,
    }


def cmd_solve(cfg, args, out):
    spec = cfg.spec
    t0 = time.perf_counter()
    sweep = cfg.sweep(threads=args.threads, richardson=False, domain_check=False)
    alpha = 0.0 if spec.is_periodic else None
    # unconverged rows are written and flagged; the exit code reports them
    seq = sweep_sectors(spec, cfg.field, cfg.m_range, cfg.levels, sweep, alpha=alpha,
                        allow_total_failure=True)
    seq.to_csv(out / "energies.csv")
    extra = {"grid": seq.grid.to_dict(), "diagnostics": _diagnostics(seq),
             "timings": {"total_s": time.perf_counter() - t0, "sectors": _timings(seq)},
             "all_converged": seq.all_converged()}
    if args.oracle:
        extra["oracle_max_abs_diff"] = _oracle(cfg, seq, alpha)
    _write_json(out / "run.json", _run_doc(cfg, args, extra))
    return EXIT_OK if seq.all_converged() else EXIT_PARTIAL


def _band(cfg, args, sweep):
    b = cfg.doc["band"]
    alphas = b["alphas"] if b["alphas"] is not None else alpha_grid(b["n_alpha"])
    m_range = cfg.m_range if cfg.doc["m"] is None else list(range(cfg.doc["m"] + 1))
    return compute_band(cfg.spec, cfg.field, m_range, alphas, sweep)


def cmd_verify(cfg, args, out):
    spec = cfg.spec
    v = cfg.doc["verify"]
    t0 = time.perf_counter()
    sweep = cfg.sweep(threads=args.threads)
    m_range = list(range(cfg.doc["m_max"] + 1))
    extra = {}
    if spec.is_periodic:
        surface = _band(cfg, args, sweep)
        seq = surface.slice(0.0)
        report = verify_sequence(seq, spec, v["tolerance"], v["tangential_detail"])
        report.extend(verify_band(surface, spec, v["tolerance"]), prefix="band")
        surface.to_csv(out / "band.csv")
        converged = surface.all_converged()
        extra["alpha_digests"] = surface.digests
    else:
        seq = sweep_sectors(spec, cfg.field, m_range, cfg.levels, sweep)
        report = verify_sequence(seq, spec, v["tolerance"], v["tangential_detail"])
        converged = seq.all_converged()
    seq.to_csv(out / "energies.csv")
    doc = report.to_dict()
    doc["certificate"] = spec.certificate
    doc["radial_sign"] = spec.radial_sign
    doc["config_digest"] = cfg.digest
    doc["sequence"] = seq.summary()
    if args.oracle:
        doc["oracle_max_abs_diff"] = _oracle(cfg, seq, 0.0 if spec.is_periodic else None)
    _write_json(out / "report.json", doc)
    extra.update({"grid": seq.grid.to_dict(), "diagnostics": _diagnostics(seq),
                  "timings": {"total_s": time.perf_counter() - t0, "sectors": _timings(seq)},
                  "verdict": doc["verdict"]})
    _write_json(out / "run.json", _run_doc(cfg, args, extra))
    if not converged:
        return EXIT_PARTIAL
    return EXIT_OK if report_passes(report) else EXIT_FAILED


def cmd_band(cfg, args, out):
    spec = cfg.spec
    if not spec.is_periodic:
        raise UsageError("band needs a periodic potential (periodic_chain term)")
    v = cfg.doc["verify"]
    t0 = time.perf_counter()
    surface = _band(cfg, args, cfg.sweep(threads=args.threads))
    surface.to_csv(out / "band.csv")
    report = verify_band(surface, spec, v["tolerance"])
    doc = report.to_dict()
    doc["certificate"] = spec.certificate
    doc["config_digest"] = cfg.digest
    doc["alphas"] = surface.alphas
    doc["alpha_digests"] = surface.digests
    _write_json(out / "report.json", doc)
    _write_json(out / "run.json", _run_doc(cfg, args, {
        "timings": {"total_s": time.perf_counter() - t0}, "verdict": doc["verdict"]}))
    if not surface.all_converged():
        return EXIT_PARTIAL
    return EXIT_OK if report_passes(report) else EXIT_FAILED


def convergence_table(cfg, threads=1):
    """E_m per resolution level, observed order and Richardson extrapolation."""
    c = cfg.doc["convergence"]
    levels = sorted(set(c["resolutions"]))
    if len(levels) < 3:
        raise UsageError("convergence needs at least 3 distinct resolution levels")
    ms = sorted(set(c["m"]))
    spec = cfg.spec
    alpha = 0.0 if spec.is_periodic else None
    runs = {}
    for lvl in levels:
        sweep = cfg.sweep(threads=threads, richardson=False, resolution=lvl, domain_check=False)
        seq = sweep_sectors(spec, cfg.field, list(range(max(ms) + 1)), 1, sweep, alpha=alpha)
        runs[lvl] = seq
    rows, summary = [], {}
    for m in ms:
        E = [runs[lvl].energy(m) for lvl in levels]
        diffs = [None] + [E[i] - E[i - 1] for i in range(1, len(E))]
        orders = [None, None] + [
            math.log2(abs(diffs[i - 1]) / abs(diffs[i])) if diffs[i] and diffs[i - 1] else None
            for i in range(2, len(E))]
        # second-order stencil: E_inf ~ E_f + (E_f - E_c) / 3
        rich = [None] + [E[i] + (E[i] - E[i - 1]) / 3.0 for i in range(1, len(E))]
        for i, lvl in enumerate(levels):
            seq = runs[lvl]
            rows.append({
                "m": m, "resolution": lvl, "h": repr(seq.grid.h_r),
                "energy": repr(E[i]), "residual": repr(seq.residual(m)),
                "converged": str(seq.usable(m)).lower(),
                "difference": "" if diffs[i] is None else repr(diffs[i]),
                "observed_order": "" if orders[i] is None else repr(orders[i]),
                "richardson": "" if rich[i] is None else repr(rich[i]),
            })
        summary[str(m)] = {"observed_orders": [o for o in orders if o is not None],
                           "richardson": rich[-1], "finest": E[-1]}
    converged = all(runs[lvl].usable(m) for lvl in levels for m in ms)
    return rows, summary, converged


def cmd_convergence(cfg, args, out):
    t0 = time.perf_counter()
    rows, summary, converged = convergence_table(cfg, args.threads)
    write_csv(rows, CONVERGENCE_COLUMNS, out / "convergence.csv")
    _write_json(out / "convergence.json", {"config_digest": cfg.digest, "sectors": summary})
    _write_json(out / "run.json", _run_doc(cfg, args, {
        "timings": {"total_s": time.perf_counter() - t0}}))
    return EXIT_OK if converged else EXIT_PARTIAL


COMMANDS = {"solve": cmd_solve, "verify": cmd_verify, "band": cmd_band,
            "convergence": cmd_convergence}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, required=True, help="JSON run configuration")
    common.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    common.add_argument("--threads", type=int, default=1,
                        help="worker processes across sectors (1 = deterministic reference)")
    common.add_argument("--oracle", action="store_true",
                        help="cross-check against dense diagonalization on small grids")
    parser = argparse.ArgumentParser(
        prog="landau-order",
        description="Angular-momentum ordering of magnetic Schroedinger ground states.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("solve", parents=[common], help="solve sectors, write energies.csv")
    sub.add_parser("verify", parents=[common], help="sweep and run every ordering check")
    sub.add_parser("band", parents=[common], help="Bloch band of a periodic chain")
    sub.add_parser("convergence", parents=[common], help="grid refinement study")
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad usage; map it to the usage code
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        cfg = config.load(args.config)
    except UsageError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.command == "band" and not cfg.spec.is_periodic:
        print("error: band needs a periodic potential (periodic_chain term)", file=sys.stderr)
        return EXIT_USAGE
    if args.command == "convergence" and len(set(cfg.doc["convergence"]["resolutions"])) < 3:
        print("error: convergence needs at least 3 distinct resolution levels", file=sys.stderr)
        return EXIT_USAGE
    out = args.out
    try:
        out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](cfg, args, out)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ResourceError, MemoryError) as exc:
        print(f"resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (DomainError, ChainConvergenceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
