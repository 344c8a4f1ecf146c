"""Command-line front end.

Exit codes:

    0   success
    1   invalid input: unreadable file, malformed JSON, violated invariant
    2   a numerical-health warning was raised and ``--strict`` was given
    3   the computation itself failed (no convergence, conditions not met)
    64  bad command-line usage

Errors are written to standard error as one JSON object.  All randomness
derives from ``--seed``; sub-tasks use ``derive_seed(seed, task, index)``.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from pathlib import Path

from . import __version__, bounds, channels, ensembles, formats, measurement, oracle
from .errors import (
    ConditionsFail,
    DiscriminationError,
    NoConvergence,
    NoProgress,
    NotPSD,
    NumericalHealthWarning,
    ParseError,
    ValidationError,
)
from .linalg import PSD_TOL

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_HEALTH = 2
EXIT_COMPUTE = 3
EXIT_USAGE = 64

ENSEMBLE_SUFFIX = ".ens.json"

log = logging.getLogger("qdiscrim")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _positive(text: str) -> float:
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {text}")
    return value


def _count(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {text}")
    return value


def _priors(text: str):
    if text in ("uniform", "random"):
        return text
    try:
        return [float(x) for x in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected uniform, random or comma-separated numbers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    common.add_argument("--tol-psd", type=_positive, default=PSD_TOL, help="relative PSD tolerance for inputs")
    common.add_argument("--tol-ortho", type=_positive, default=measurement.ORTHO_TOL, help="orthogonality tolerance")
    common.add_argument("--tol-cert", type=_positive, default=measurement.CERT_TOL, help="optimality certificate tolerance")
    common.add_argument("--strict", action="store_true", help="exit 2 on numerical-health warnings")
    common.add_argument("--json", action="store_true", help="print JSON instead of a table")
    common.add_argument("-o", "--output", help="output file (or directory for batches)")
    common.add_argument("-v", "--verbose", action="store_true")

    batch = _Parser(add_help=False)
    batch.add_argument("inputs", nargs="+", help=f"{ENSEMBLE_SUFFIX} files or directories")
    batch.add_argument("--jobs", type=_count, default=1, help="worker processes for batches")
    batch.add_argument("--project-support", action="store_true", help="restrict states to their joint support")

    parser = _Parser(prog="qdiscrim", description="Bounds on quantum state discrimination.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    gen = sub.add_parser("gen", parents=[common], help="generate random ensembles")
    _generator_args(gen)
    gen.add_argument("--count", type=_count, default=None, help="write this many ensembles into the -o directory")

    p = sub.add_parser("bounds", parents=[common, batch], help="all bounds for each ensemble")
    p.add_argument("--csv", help="also write one CSV row per ensemble to this file")
    p.add_argument("--best-first", action="store_true", help="try every state as the distinguished one")
    p.add_argument("--povm", help="POVM file for the attainment gap (single input only)")
    p.add_argument("--oracle", action="store_true", help="also run the optimiser and fill oracle_q")
    p.add_argument("--restarts", type=_count, default=8)

    sub.add_parser("check", parents=[common, batch], help="exact-attainment conditions")

    sub.add_parser("construct-povm", parents=[common, batch], help="explicit POVM when conditions (i), (ii) hold")

    p = sub.add_parser("optimize", parents=[common, batch], help="numerical optimum of the error probability")
    p.add_argument("--restarts", type=_count, default=8)
    p.add_argument("--max-iters", type=_count, default=2000)

    p = sub.add_parser("channels", parents=[common], help="lower bound for channel discrimination")
    p.add_argument("channels", nargs="+", help=".chan.json files")
    p.add_argument("--priors", type=_priors, default="uniform")
    p.add_argument("--samples", type=_count, default=20000)
    p.add_argument("--no-refine", action="store_true")

    p = sub.add_parser("compare", parents=[common, batch], help="minimum-error versus unambiguous bounds")
    p.add_argument("--csv", help="also write the CSV table to this file")
    p.add_argument("--restarts", type=_count, default=8)

    p = sub.add_parser("search-cor1", parents=[common], help="look for ensembles meeting all attainment conditions")
    _generator_args(p)
    p.add_argument("--trials", type=_count, default=100)
    return parser


def _generator_args(p) -> None:
    p.add_argument("--kind", required=True, choices=ensembles.KINDS)
    p.add_argument("--dim", type=_count, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--rank", type=_count, default=None)
    p.add_argument("--priors", type=_priors, default="uniform")


# ---------------------------------------------------------------- helpers


def _ensemble_paths(inputs) -> list[Path]:
    paths = []
    for raw in inputs:
        p = Path(raw)
        if p.is_dir():
            found = sorted(p.glob(f"*{ENSEMBLE_SUFFIX}"), key=lambda q: q.name)
            if not found:
                raise ValidationError([f"{p}: no {ENSEMBLE_SUFFIX} files"])
            paths.extend(found)
        else:
            paths.append(p)
    return paths


def _ident(path: Path) -> str:
    name = path.name
    return name[: -len(ENSEMBLE_SUFFIX)] if name.endswith(ENSEMBLE_SUFFIX) else path.stem


def _load(path: Path, args) -> ensembles.WeightedEnsemble:
    e = ensembles.load(path, args.tol_psd)
    if getattr(args, "project_support", False):
        e = ensembles.project_joint_support(e)
    return e


def _map(fn, items, jobs: int) -> list:
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _emit_documents(args, docs: list[tuple[str, dict]], suffix: str) -> None:
    """Write ``docs`` to ``-o``: one file for a single input, a directory otherwise."""
    if not args.output:
        return
    out = Path(args.output)
    if len(docs) == 1 and not out.is_dir():
        formats.write_json(out, docs[0][1])
        return
    out.mkdir(parents=True, exist_ok=True)
    for ident, doc in docs:
        formats.write_json(out / f"{ident}{suffix}", doc)


def _print_json(doc) -> None:
    sys.stdout.write(formats.dumps(doc) + "\n")


def _fmt(x, width=12) -> str:
    if x is None:
        return "-".rjust(width)
    if isinstance(x, bool):
        return ("yes" if x else "no").rjust(width)
    if isinstance(x, float):
        return f"{x:.{width - 4}g}".rjust(width)
    return str(x).rjust(width)


def _print_table(columns: list[str], rows: list[list]) -> None:
    widths = [max(12, len(c)) for c in columns]
    widths[0] = max([len(columns[0])] + [len(str(r[0])) for r in rows])
    print("  ".join(c.rjust(w) for c, w in zip(columns, widths)))
    for r in rows:
        print("  ".join(_fmt(v, w) for v, w in zip(r, widths)))


def _collect(fn):
    """Run ``fn`` and return its result together with any health warnings."""
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", NumericalHealthWarning)
        value = fn()
    notes = [str(w.message) for w in caught if issubclass(w.category, NumericalHealthWarning)]
    return value, notes


# ---------------------------------------------------------------- per-file work (picklable)


def _bounds_one(path: Path, args) -> dict:
    e = _load(path, args)
    povm = measurement.load(args.povm) if args.povm else None
    report, notes = _collect(lambda: bounds.full_report(e, povm, args.tol_ortho, args.best_first))
    notes = report.warnings + notes
    report.warnings = notes
    if args.oracle:
        res = oracle.optimize_min_error(e, restarts=args.restarts, seed=_task_seed(args, "oracle", path), cert_tol=args.tol_cert)
        report.oracle_q = res.q_star
        if not res.certificate.optimal:
            notes.append(f"oracle certificate failed, worst min eig {res.certificate.worst_min_eig:.3g}")
    doc = {"id": _ident(path), "source": str(path), **report.to_dict()}
    return {"doc": doc, "csv": report.csv_row(_ident(path)), "warnings": notes}


def _check_one(path: Path, args) -> dict:
    e = _load(path, args)
    report, notes = _collect(lambda: measurement.check_corollary1_conditions(e, args.tol_ortho))
    doc = {"id": _ident(path), "source": str(path), **report.to_dict()}
    return {"doc": doc, "warnings": notes}


def _construct_one(path: Path, args) -> dict:
    e = _load(path, args)
    report = measurement.check_theorem2_conditions(e, args.tol_ortho)
    p = measurement.theorem2_povm(e, args.tol_ortho, report)
    gap = bounds.attainment_gap(e, p)
    cert = measurement.hykl_certificate(e, p, args.tol_cert)
    doc = {
        "id": _ident(path),
        "povm": measurement.to_document(p),
        "attainment_gap": gap,
        "error_probability": measurement.error_probability(e, p),
        "certificate": cert.to_dict(),
        "conditions": report.to_dict(),
    }
    notes = [] if gap <= 1e-8 else [f"attainment gap {gap:.3g} exceeds 1e-8"]
    return {"doc": doc, "warnings": notes}


def _task_seed(args, task: str, path: Path) -> int:
    # keyed by file name so results do not depend on batch order
    return ensembles.derive_seed(args.seed, f"{task}/{_ident(path)}")


def _optimize_one(path: Path, args) -> dict:
    e = _load(path, args)
    res = oracle.optimize_min_error(
        e, max_iters=args.max_iters, restarts=args.restarts, seed=_task_seed(args, "oracle", path), cert_tol=args.tol_cert
    )
    notes = [] if res.certificate.optimal else [f"certificate failed, worst min eig {res.certificate.worst_min_eig:.3g}"]
    return {"doc": {"id": _ident(path), **res.to_dict()}, "warnings": notes}


def _compare_one(path: Path, args) -> dict:
    e = _load(path, args)
    report, notes = _collect(lambda: bounds.full_report(e, None, args.tol_ortho))
    notes = report.warnings + notes
    res = oracle.optimize_min_error(e, restarts=args.restarts, seed=_task_seed(args, "oracle", path), cert_tol=args.tol_cert)
    if not res.certificate.optimal:
        notes.append(f"oracle certificate failed, worst min eig {res.certificate.worst_min_eig:.3g}")
    report.oracle_q = res.q_star
    doc = {
        "id": _ident(path),
        "m": e.m,
        "dim": e.dim,
        "q_lower": report.q_lower,
        "q_star": res.q_star,
        "two_q_lower": 2 * report.q_lower,
        "qu_feng": report.qu_lower_feng,
        "qu_pairwise": report.qu_lower_pairwise,
        "ineq122_lhs": report.ineq122_lhs,
        "ineq122_holds": report.ineq122_holds,
        "certified": res.certificate.optimal,
    }
    return {"doc": doc, "csv": report.csv_row(_ident(path)), "warnings": notes}


# ---------------------------------------------------------------- commands


def _batch(args, worker, suffix):
    paths = _ensemble_paths(args.inputs)
    results = _map(partial(worker, args=args), paths, args.jobs)
    _emit_documents(args, [(r["doc"]["id"], r["doc"]) for r in results], suffix)
    return results


def cmd_gen(args) -> list[str]:
    spec = ensembles.GeneratorSpec(args.kind, args.dim, args.m, args.rank, args.priors, args.seed)
    if args.count is None:
        e = ensembles.generate(spec)
        if args.output:
            ensembles.save(e, args.output)
            print(f"wrote {args.output} (m={e.m}, dim={e.dim})")
        else:
            _print_json(ensembles.to_document(e))
        return []
    if not args.output:
        raise UsageError("gen --count needs -o DIRECTORY")
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    width = len(str(args.count - 1))
    for k in range(args.count):
        e = ensembles.generate(spec.with_seed(ensembles.derive_seed(args.seed, "gen", k)))
        ensembles.save(e, out / f"gen-{k:0{width}d}{ENSEMBLE_SUFFIX}")
    print(f"wrote {args.count} ensembles to {out}")
    return []


def cmd_bounds(args) -> list[str]:
    if args.povm and len(_ensemble_paths(args.inputs)) != 1:
        raise UsageError("--povm needs exactly one ensemble")
    results = _batch(args, _bounds_one, ".report.json")
    if args.csv:
        Path(args.csv).write_text(bounds.csv_text([r["csv"] for r in results]), encoding="utf-8")
    if args.json:
        _print_json([r["doc"] for r in results] if len(results) > 1 else results[0]["doc"])
    else:
        cols = ["id", "m", "dim", "q_lower", "q_upper_t3", "cond_pass", "qu_feng", "qu_pairwise", "ineq122_lhs"]
        rows = []
        for r in results:
            d = r["doc"]
            rows.append(
                [d["id"], d["m"], d["dim"], d["q_lower"], d["q_upper_t3"]["value"], d["conditions"]["corollary1"],
                 d["qu_lower_feng"], d["qu_lower_pairwise"], d["ineq122_lhs"]]
            )
        _print_table(cols, rows)
    return [w for r in results for w in r["warnings"]]


def cmd_check(args) -> list[str]:
    results = _batch(args, _check_one, ".conditions.json")
    if args.json:
        _print_json([r["doc"] for r in results] if len(results) > 1 else results[0]["doc"])
    else:
        cols = ["id", "cond_i", "cond_ii", "cond_s1", "cond_eta", "theorem2", "theorem3", "corollary1"]
        rows = [
            [d["id"]] + [d[c]["passed"] for c in cols[1:5]] + [d["theorem2"], d["theorem3"], d["corollary1"]]
            for d in (r["doc"] for r in results)
        ]
        _print_table(cols, rows)
    return [w for r in results for w in r["warnings"]]


def cmd_construct_povm(args) -> list[str]:
    paths = _ensemble_paths(args.inputs)
    results = _map(partial(_construct_one, args=args), paths, args.jobs)
    _emit_documents(args, [(r["doc"]["id"], r["doc"]["povm"]) for r in results], ".povm.json")
    if args.json:
        _print_json([r["doc"] for r in results] if len(results) > 1 else results[0]["doc"])
    else:
        rows = [
            [d["id"], d["error_probability"], d["attainment_gap"], d["certificate"]["optimal"]]
            for d in (r["doc"] for r in results)
        ]
        _print_table(["id", "error", "attain_gap", "optimal"], rows)
    return [w for r in results for w in r["warnings"]]


def cmd_optimize(args) -> list[str]:
    results = _batch(args, _optimize_one, ".oracle.json")
    if args.json:
        _print_json([r["doc"] for r in results] if len(results) > 1 else results[0]["doc"])
    else:
        rows = [
            [d["id"], d["q_star"], d["iterations"], d["restarts_used"], d["certificate"]["optimal"]]
            for d in (r["doc"] for r in results)
        ]
        _print_table(["id", "q_star", "iterations", "restarts", "optimal"], rows)
    return [w for r in results for w in r["warnings"]]


def cmd_channels(args) -> list[str]:
    chans = [channels.load(p, args.tol_psd) for p in args.channels]
    res = channels.channel_bound(
        chans, args.priors, samples=args.samples, refine=not args.no_refine, seed=args.seed
    )
    doc = {"channels": list(args.channels), "priors": _resolved_priors(args.priors, len(chans)), **res.to_dict()}
    if args.output:
        formats.write_json(args.output, doc)
    if args.json:
        _print_json(doc)
    else:
        print(f"bound        {res.bound:.10g}")
        print(f"best sample  {res.best_sample:.10g}  (of {res.samples}, seed {res.seed})")
        print("argmin input " + " ".join(f"{z.real:+.6f}{z.imag:+.6f}j" for z in res.argmin_vector))
    return []


def _resolved_priors(priors, m):
    return [float(x) for x in ensembles.resolve_priors(priors, m)]


def cmd_compare(args) -> list[str]:
    results = _batch(args, _compare_one, ".compare.json")
    if args.csv:
        Path(args.csv).write_text(bounds.csv_text([r["csv"] for r in results]), encoding="utf-8")
    if args.json:
        _print_json([r["doc"] for r in results])
    else:
        cols = ["id", "m", "dim", "q_lower", "q_star", "two_q_lower", "qu_feng", "qu_pairwise", "ineq122"]
        rows = [
            [d["id"], d["m"], d["dim"], d["q_lower"], d["q_star"], d["two_q_lower"], d["qu_feng"], d["qu_pairwise"],
             "holds" if d["ineq122_holds"] else "FAILS"]
            for d in (r["doc"] for r in results)
        ]
        _print_table(cols, rows)
    return [w for r in results for w in r["warnings"]]


def cmd_search_cor1(args) -> list[str]:
    spec = ensembles.GeneratorSpec(args.kind, args.dim, args.m, args.rank, args.priors, args.seed)
    hits = oracle.search_cor1(spec, args.trials, ortho_tol=args.tol_ortho, out_dir=args.output)
    doc = {
        "spec": {"kind": spec.kind, "dim": spec.dim, "m": spec.m, "rank": spec.rank, "priors": spec.priors, "seed": spec.seed},
        "trials": args.trials,
        "hits": [h.to_dict() for h in hits],
    }
    if args.output:
        formats.write_json(Path(args.output) / "hits.json", doc)
    if args.json:
        _print_json(doc)
    else:
        print(f"{len(hits)} of {args.trials} trials satisfy every attainment condition")
        for h in hits:
            print(f"  {h.ensemble_id}  seed={h.seed}" + (f"  {h.path}" if h.path else ""))
    return []


COMMANDS = {
    "gen": cmd_gen,
    "bounds": cmd_bounds,
    "check": cmd_check,
    "construct-povm": cmd_construct_povm,
    "optimize": cmd_optimize,
    "channels": cmd_channels,
    "compare": cmd_compare,
    "search-cor1": cmd_search_cor1,
}


# ---------------------------------------------------------------- entry point


def _error_exit(kind: str, exc: BaseException, code: int) -> int:
    doc = {"error": kind, "type": type(exc).__name__, "message": str(exc), "exit_code": code}
    if isinstance(exc, ValidationError):
        doc["violations"] = exc.violations
    if isinstance(exc, ParseError):
        doc["location"] = exc.location
    if isinstance(exc, ConditionsFail):
        doc["conditions"] = exc.report.to_dict()
    sys.stderr.write(json.dumps(doc) + "\n")
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        return _error_exit("usage", exc, EXIT_USAGE)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", NumericalHealthWarning)
            notes = COMMANDS[args.command](args)
        notes = notes + [str(w.message) for w in caught if issubclass(w.category, NumericalHealthWarning)]
        for w in caught:
            if not issubclass(w.category, NumericalHealthWarning):
                log.warning("%s", w.message)
    except UsageError as exc:
        return _error_exit("usage", exc, EXIT_USAGE)
    except (ParseError, ValidationError, OSError) as exc:
        return _error_exit("invalid_input", exc, EXIT_INVALID)
    except (ConditionsFail, NoConvergence, NoProgress, NotPSD) as exc:
        return _error_exit("computation", exc, EXIT_COMPUTE)
    except (DiscriminationError, ValueError) as exc:
        return _error_exit("invalid_input", exc, EXIT_INVALID)
    for n in notes:
        log.warning("numerical health: %s", n)
    if notes and args.strict:
        sys.stderr.write(json.dumps({"error": "numerical_health", "warnings": notes, "exit_code": EXIT_HEALTH}) + "\n")
        return EXIT_HEALTH
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
