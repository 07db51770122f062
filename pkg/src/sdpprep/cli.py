"""Command line front end: ``sdpprep {reduce,verify,lift,metrics,gen}``.

Exit codes: 0 success (reduced / unchanged / verified), 1 usage, I/O or
parse error, 2 infeasibility detected by ``reduce``, 3 certificate rejected
by ``verify``.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .core import StructuralError, SymBlockMatrix
from .gen import PRESETS, GenParams, gen_planted, gen_strictly_feasible
from .io_sdpa import (SdpaError, SolutionFile, parse_solution, read_instance,
                      write_instance, write_solution)
from .lift import lift_matrix, verify_certificate
from .metrics import NotApplicable, dimacs_errors, helped, worst_error
from .reduce import ReductionCertificate, Tolerances, VerdictKind, preprocess

REPORT_SCHEMA = "sdpprep.report/1"
EXIT_OK, EXIT_ERROR, EXIT_INFEASIBLE, EXIT_REJECTED = 0, 1, 2, 3

INTERPRETATION = ("matrices 1..m and the rhs vector of the input are read as the "
                  "equality constraints A_i . X = b_i over X psd; reductions act on "
                  "that side only")


class CliError(Exception):
    pass


def _tolerances(args) -> Tolerances:
    eps_rhs = 0.0 if args.strict else args.eps_rhs
    return Tolerances(eps_support=args.eps_support, eps_rhs=eps_rhs,
                      eps_pivot=args.eps_pivot)


def _load(path) -> object:
    try:
        return read_instance(path)
    except OSError as exc:
        raise CliError(f"{path}: {exc.strerror or exc}") from None
    except (SdpaError, StructuralError) as exc:
        raise CliError(f"{path}:{getattr(exc, 'line', '?')}: {exc}") from None


def _write(path, text: str) -> None:
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise CliError(f"{path}: {exc.strerror or exc}") from None


def build_report(path: str, inst, verdict, tol: Tolerances, wall: float) -> dict:
    cert = verdict.certificate
    if verdict.instance is not None:
        final = verdict.instance.structure
        final_m = verdict.instance.m
    else:
        final = cert.reduced_structure()
        final_m = len(cert.kept_constraints)
    return {
        "schema": REPORT_SCHEMA,
        "input": str(path),
        "verdict": verdict.kind.value,
        "interpretation": INTERPRETATION,
        "original": {"n": inst.n, "m": inst.m, "block_sizes": list(inst.structure.sizes)},
        "final": {"n": final.n, "m": final_m, "block_sizes": list(final.sizes)},
        "steps": [
            {"step": k, "constraint": s.constraint_id, "sign": s.sign,
             "action": s.action.value, "rhs": s.rhs_at_step,
             "support_size": len(s.support_original),
             "support_original": [[g.block, g.local] for g in s.support_original]}
            for k, s in enumerate(cert.steps, start=1)],
        "n_steps": len(cert.steps),
        "tolerances": {"eps_support": tol.eps_support, "eps_rhs": tol.eps_rhs,
                       "eps_pivot": tol.eps_pivot},
        "wall_time_s": wall,
    }


def reduce_file(path, out=None, cert_path=None, report_path=None,
                tol: Tolerances = Tolerances(), force_out: bool = False) -> tuple[int, dict]:
    inst = _load(path)
    t0 = time.perf_counter()
    verdict = preprocess(inst, tol)
    wall = time.perf_counter() - t0
    report = build_report(path, inst, verdict, tol, wall)
    if out and verdict.instance is not None and (
            verdict.kind is VerdictKind.REDUCED or force_out):
        _write(out, write_instance(verdict.instance))
        report["output"] = str(out)
    if cert_path:
        _write(cert_path, verdict.certificate.to_json())
        report["certificate"] = str(cert_path)
    if report_path:
        _write(report_path, json.dumps(report, indent=1) + "\n")
    code = EXIT_INFEASIBLE if verdict.kind is VerdictKind.INFEASIBLE else EXIT_OK
    return code, report


def _batch_one(job) -> dict:
    path, out_dir, tol, force_out = job
    stem = Path(path).name.removesuffix(".dat-s")
    out_dir = Path(out_dir)
    try:
        code, report = reduce_file(
            path, out_dir / f"{stem}.reduced.dat-s", out_dir / f"{stem}.cert.json",
            out_dir / f"{stem}.report.json", tol, force_out)
        return {"input": str(path), "exit": code, "verdict": report["verdict"],
                "n_steps": report["n_steps"]}
    except CliError as exc:
        return {"input": str(path), "exit": EXIT_ERROR, "error": str(exc)}


def cmd_reduce(args) -> int:
    tol = _tolerances(args)
    if args.in_dir:
        if not args.out_dir:
            raise CliError("--in-dir needs --out-dir")
        files = sorted(Path(args.in_dir).glob("*.dat-s"))
        Path(args.out_dir).mkdir(parents=True, exist_ok=True)
        jobs = [(str(f), args.out_dir, tol, args.force_out) for f in files]
        if args.jobs > 1:
            with ProcessPoolExecutor(args.jobs) as ex:
                results = list(ex.map(_batch_one, jobs))
        else:
            results = [_batch_one(j) for j in jobs]
        print(json.dumps({"schema": REPORT_SCHEMA, "batch": results}, indent=1))
        return EXIT_ERROR if any(r["exit"] == EXIT_ERROR for r in results) else EXIT_OK
    if not args.input:
        raise CliError("one of --in or --in-dir is required")
    code, report = reduce_file(args.input, args.out, args.cert, args.report, tol,
                               args.force_out)
    if not args.report:
        print(json.dumps(report, indent=1))
    print(f"{report['verdict']}: n {report['original']['n']} -> {report['final']['n']}, "
          f"m {report['original']['m']} -> {report['final']['m']}, "
          f"{report['n_steps']} steps", file=sys.stderr)
    return code


def _load_cert(path) -> ReductionCertificate:
    try:
        return ReductionCertificate.from_json(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise CliError(f"{path}: {exc.strerror or exc}") from None
    except (ValueError, KeyError, TypeError) as exc:
        raise CliError(f"{path}: malformed certificate: {exc}") from None


def cmd_verify(args) -> int:
    inst = _load(args.input)
    cert = _load_cert(args.cert)
    res = verify_certificate(inst, cert)
    if res:
        print(f"certificate OK: {len(cert.steps)} steps replayed", file=sys.stderr)
        return EXIT_OK
    for line in res.diagnostics:
        print(line, file=sys.stderr)
    return EXIT_REJECTED


def _read_solution(path, structure, m) -> SolutionFile:
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_solution(fh, structure, m)
    except OSError as exc:
        raise CliError(f"{path}: {exc.strerror or exc}") from None
    except SdpaError as exc:
        raise CliError(f"{path}:{exc.line}: {exc}") from None


def cmd_lift(args) -> int:
    cert = _load_cert(args.cert)
    if cert.infeasible:
        raise CliError("certificate proves infeasibility; there is nothing to lift")
    sol = _read_solution(args.sol, cert.reduced_structure(), len(cert.kept_constraints))
    try:
        X = lift_matrix(sol.X, cert)
        S = lift_matrix(sol.S, cert) if sol.S is not None else None
    except StructuralError as exc:
        raise CliError(str(exc)) from None
    y = None
    if sol.y is not None:
        y = np.zeros(cert.original_m)
        y[np.array(cert.kept_constraints, dtype=int) - 1] = sol.y
    _write(args.out, write_solution(SolutionFile(y, X, S)))
    return EXIT_OK


def cmd_metrics(args) -> int:
    inst = _load(args.input)
    sol = _read_solution(args.sol, inst.structure, inst.m)
    try:
        errs = dimacs_errors(inst, sol, args.tol_eig)
    except StructuralError as exc:
        raise CliError(str(exc)) from None
    out: dict = {"errors": errs.as_dict()}
    try:
        worst = worst_error(errs)
    except NotApplicable:
        worst = None
    out["worst_error"] = worst
    if args.peer_err is not None or args.infeasible_detected:
        if worst is None and not args.infeasible_detected:
            raise CliError("no error measure available for the helped test")
        mine = worst if worst is not None else 0.0
        peer = args.peer_err if args.peer_err is not None else mine
        before, after = (peer, mine) if args.role == "after" else (mine, peer)
        ok, reason = helped(before, after, args.infeasible_detected,
                            args.obj_before, args.obj_after, args.as_printed)
        out["helped"] = {"helped": ok, "reason": int(reason), "reason_name": reason.name,
                         "err_before": before, "err_after": after}
    print(json.dumps(out, indent=1))
    return EXIT_OK


def cmd_gen(args) -> int:
    try:
        if args.preset == "feasible":
            inst, witness = gen_strictly_feasible(args.seed, args.base_n, args.base_m,
                                                  base_nnz=args.base_nnz,
                                                  diag_block=args.diag_block,
                                                  value_scale=args.value_scale)
            summary = {"deleted_count": 0, "infeasible": False, "planted_ids": [],
                       "planted_supports": [], "preset": "feasible", "seed": args.seed}
        else:
            sizes = (tuple(args.support_sizes) if args.support_sizes
                     else (args.support_size,) * args.k)
            p = GenParams(args.seed, base_n=args.base_n, base_m=args.base_m,
                          support_sizes=sizes, coupling_density=args.coupling_density,
                          value_scale=args.value_scale, base_nnz=args.base_nnz,
                          diag_block=args.diag_block, **PRESETS[args.preset])
            inst, plant, witness = gen_planted(p)
            summary = plant.to_dict()
            summary["preset"] = args.preset
    except ValueError as exc:
        raise CliError(f"bad generator parameters: {exc}") from None
    _write(args.out, write_instance(inst))
    _write(f"{args.out}.plant.json", json.dumps(summary, indent=1) + "\n")
    if args.witness:
        X = SymBlockMatrix.from_dense(inst.structure, witness)
        _write(args.witness, write_solution(SolutionFile(None, X)))
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        # usage errors share exit code 1; 2 is reserved for infeasibility
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="sdpprep", description="Inspection-based SDP presolve.")
    sub = ap.add_subparsers(dest="command", required=True)

    r = sub.add_parser("reduce", help="presolve an SDPA instance")
    r.add_argument("--in", dest="input")
    r.add_argument("--in-dir")
    r.add_argument("--out-dir")
    r.add_argument("--jobs", type=int, default=1)
    r.add_argument("--out")
    r.add_argument("--force-out", action="store_true",
                   help="write --out even when nothing was reduced")
    r.add_argument("--cert")
    r.add_argument("--report")
    r.add_argument("--eps-rhs", type=float, default=Tolerances.eps_rhs)
    r.add_argument("--eps-support", type=float, default=Tolerances.eps_support)
    r.add_argument("--eps-pivot", type=float, default=Tolerances.eps_pivot)
    r.add_argument("--strict", action="store_true", help="treat only b == 0 as zero")
    r.set_defaults(func=cmd_reduce)

    v = sub.add_parser("verify", help="replay a certificate against the original")
    v.add_argument("--in", dest="input", required=True)
    v.add_argument("--cert", required=True)
    v.set_defaults(func=cmd_verify)

    li = sub.add_parser("lift", help="map a reduced solution to original coordinates")
    li.add_argument("--cert", required=True)
    li.add_argument("--sol", required=True)
    li.add_argument("--out", required=True)
    li.set_defaults(func=cmd_lift)

    me = sub.add_parser("metrics", help="DIMACS error measures of a solution")
    me.add_argument("--in", dest="input", required=True)
    me.add_argument("--sol", required=True)
    me.add_argument("--tol-eig", type=float, default=1e-10)
    me.add_argument("--peer-err", type=float,
                    help="worst error of the other side of the before/after pair")
    me.add_argument("--role", choices=("after", "before"), default="after",
                    help="which side this instance/solution pair is (default after)")
    me.add_argument("--obj-before", type=float)
    me.add_argument("--obj-after", type=float)
    me.add_argument("--infeasible-detected", action="store_true")
    me.add_argument("--as-printed", action="store_true",
                    help="use the literal before/after ratio in the error clause")
    me.set_defaults(func=cmd_metrics)

    g = sub.add_parser("gen", help="generate a planted or strictly feasible instance")
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--preset", choices=("reducible", "infeasible", "feasible",
                                        "ill-conditioned"), required=True)
    g.add_argument("--k", type=int, default=3)
    g.add_argument("--support-size", type=int, default=2)
    g.add_argument("--support-sizes", type=int, nargs="+")
    g.add_argument("--base-n", type=int, default=6)
    g.add_argument("--base-m", type=int, default=4)
    g.add_argument("--base-nnz", type=int, default=6)
    g.add_argument("--diag-block", type=int, default=0)
    g.add_argument("--coupling-density", type=float, default=0.3)
    g.add_argument("--value-scale", type=float, default=1.0)
    g.add_argument("--out", required=True)
    g.add_argument("--witness", help="also write the planted feasible point")
    g.set_defaults(func=cmd_gen)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    raise SystemExit(main())
