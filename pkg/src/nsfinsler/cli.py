"""``nsfinsler`` command-line interface.

Exit codes: 0 feasible, 1 infeasible, 2 input or usage error,
3 internal inconsistency between the two matrix-Finsler routes.
"""
from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .core import (check_ns3, check_s1_strict, check_s2_strict, construct_cross_witness, decide_ns1,
                   synthesize_alpha_definite)
from .errors import (FinslerError, InternalInconsistency, InvalidInput,
                     PreconditionViolated, WitnessSearchFailed)
from .io import (dumps, load_matrix_file, load_report, matrix_file, require, tolerances_dict, verify_report,
                 witness_dict)
from .linalg import DEFAULT_TOL, ToleranceProfile, definiteness_class
from .matrix_finsler import BlockedSymmetricPair, MFL_MODES, decide_mfl, gen_mfl_pair
from .models import FinslerInstance
from .oracle import (oracle_feasible, gen_feasible_instance, gen_ns3_violating_instance,
                     gen_random_instance, gen_strict_instance)
from .projection import NsplInstance, check_nspl, solve_nspl_identity

EXIT_FEASIBLE, EXIT_INFEASIBLE, EXIT_USAGE, EXIT_INCONSISTENT = 0, 1, 2, 3
BOUNDARY_BAND = 1e-7


class UsageError(Exception):
    pass


def _tolerances(args) -> ToleranceProfile:
    changes = {}
    if args.tol_psd is not None:
        changes["psd_tol"] = args.tol_psd
        if args.tol_psd >= DEFAULT_TOL.strict_margin:
            changes["strict_margin"] = 10.0 * args.tol_psd
    if args.tol_rank is not None:
        changes["rank_tol"] = args.tol_rank
    return DEFAULT_TOL.replace(**changes)


def _base(command: str, args, tol: ToleranceProfile, instance: dict) -> dict:
    return {"command": command, "version": __version__, "seed": args.seed,
            "tolerances": tolerances_dict(tol), "instance": instance}


def _status(cs, M, N, tol, N_override=None) -> dict:
    return {"status": cs.status.value, "note": cs.note,
            "witness": witness_dict(cs.witness, M, N, tol, N_override)}


def _instance(data) -> FinslerInstance:
    require(data, "M", "N")
    return FinslerInstance(data["M"], data["N"])


def _pair_dict(inst: FinslerInstance) -> dict:
    return {"n": inst.n, "M": inst.M, "N": inst.N}


# ---------------------------------------------------------------------------
# Commands. Each returns (report, exit code).


def cmd_check(data, args, tol):
    if args.verify_only:
        checks = verify_report(data["raw"], tol)
        ok = bool(checks) and all(flag for _, flag in checks)
        report = {"command": "check", "verify_only": True, "version": __version__,
                  "checks": {label: flag for label, flag in checks}, "all_verified": ok}
        return report, EXIT_FEASIBLE if ok else EXIT_INFEASIBLE
    inst = _instance(data)
    v = decide_ns1(inst, tol, args.seed, args.samples)
    report = _base("check", args, tol, _pair_dict(inst))
    report.update({
        "feasible": v.feasible, "alpha": v.alpha, "lambda_min": v.lambda_min,
        "method": v.method.value, "n_class": v.n_class,
        "ns2": _status(v.ns2, inst.M, inst.N, tol), "ns3": _status(v.ns3, inst.M, inst.N, tol),
    })
    if v.feasible:
        report["residual_lambda_min"] = float(np.linalg.eigvalsh(inst.pencil(v.alpha))[0])
    return report, EXIT_FEASIBLE if v.feasible else EXIT_INFEASIBLE


def cmd_alpha(data, args, tol):
    inst = _instance(data)
    report = _base("alpha", args, tol, _pair_dict(inst))
    cls = definiteness_class(inst.N, tol)
    report["n_class"] = cls.value
    if not cls.semidefinite:
        v = decide_ns1(inst, tol, args.seed, args.samples)
        report.update({"feasible": v.feasible, "alpha": v.alpha, "lambda_min": v.lambda_min,
                       "method": v.method.value})
        return report, EXIT_FEASIBLE if v.feasible else EXIT_INFEASIBLE
    try:
        cert = synthesize_alpha_definite(inst, tol)
    except PreconditionViolated as exc:
        report.update({"feasible": False, "alpha": None, "reason": str(exc)})
        return report, EXIT_INFEASIBLE
    report.update({"feasible": True, "alpha": cert.alpha, "lambda_min": cert.lambda_min,
                   "method": "definite-constructive"})
    return report, EXIT_FEASIBLE


def cmd_strict(data, args, tol):
    inst = _instance(data)
    s1 = check_s1_strict(inst, tol)
    s2 = check_s2_strict(inst, tol)
    report = _base("strict", args, tol, _pair_dict(inst))
    report.update({"feasible": s1.feasible, "alpha": s1.alpha, "lambda_min": s1.lambda_min,
                   "s2": {"holds": s2.feasible, "epsilon": s2.epsilon}})
    return report, EXIT_FEASIBLE if s1.feasible else EXIT_INFEASIBLE


def cmd_nspl(data, args, tol):
    if "Q" not in data:
        require(data, "M")
        data = dict(data, Q=data["M"])
    require(data, "U")
    n = data["Q"].shape[0]
    identity_V = "V" not in data or (data["V"].shape == (n, n) and np.array_equal(data["V"], np.eye(n)))
    V = np.eye(n) if "V" not in data else data["V"]
    inst = NsplInstance(data["Q"], data["U"], V)
    rep = check_nspl(inst, tol)
    U, Q = inst.U, inst.Q
    stacked = np.vstack([U, inst.V])
    report = _base("nspl", args, tol, {"n": n, "Q": Q, "U": U, "V": inst.V})
    report.update({
        "feasible": rep.feasible,
        "cond_U": _status(rep.cond_U, Q, U.T @ U, tol, U.T @ U),
        "cond_V": _status(rep.cond_V, Q, inst.V.T @ inst.V, tol, inst.V.T @ inst.V),
        "coupling": _status(rep.coupling, Q, stacked.T @ stacked, tol, stacked.T @ stacked),
        "X": None,
    })
    if rep.feasible and identity_V:
        X = solve_nspl_identity(Q, U, tol)
        uu = float(np.sum(U * U))
        report["X"] = X
        report["beta"] = float(np.sum(X * U) / uu) if uu > 0 else 0.0
        report["residual_lambda_min"] = float(np.linalg.eigvalsh(Q + U.T @ X + X.T @ U)[0])
    return report, EXIT_FEASIBLE if rep.feasible else EXIT_INFEASIBLE


def cmd_mfl(data, args, tol):
    require(data, "M", "N")
    if not data.get("m"):
        raise InvalidInput('matrix-Finsler input needs block sizes "n" and "m"')
    pair = BlockedSymmetricPair(data["n"], data["m"], data["M"], data["N"])
    report = _base("mfl", args, tol, {"n": pair.n, "m": pair.m, "M": pair.M, "N": pair.N})
    try:
        res = decide_mfl(pair, tol, args.seed)
    except PreconditionViolated as exc:
        raise InvalidInput(f"{exc} ({exc.report.as_dict() if exc.report is not None else ''})") from None
    v = res.verdict
    report.update({
        "feasible": v.feasible, "alpha": v.alpha, "assumptions": res.assumptions.as_dict(),
        "m1": {"holds": res.m1.holds, "failed": res.m1.failed, "lambda_min": res.m1.lambda_min},
        "ns3": _status(res.ns3, pair.M, pair.N, tol), "Z": res.m1.Z,
    })
    return report, EXIT_FEASIBLE if v.feasible else EXIT_INFEASIBLE


def cmd_witness(data, args, tol):
    """Cross-term witness from an (NS3) violator.

    Exit 0 when a verified witness is produced (certifying infeasibility),
    1 otherwise.
    """
    inst = _instance(data)
    report = _base("witness", args, tol, _pair_dict(inst))
    x = data.get("x")
    if x is None:
        ns3 = check_ns3(inst, tol, args.seed)
        if ns3.witness is None:
            report.update({"witness": None, "reason": f"no (NS3) violator available ({ns3.status.value})"})
            return report, EXIT_INFEASIBLE
        x = ns3.witness.x
    report["ns3_violator"] = x
    try:
        w = construct_cross_witness(inst, x, tol, args.seed)
    except WitnessSearchFailed as exc:
        report.update({"witness": None, "reason": str(exc)})
        return report, EXIT_INFEASIBLE
    report["witness"] = witness_dict(w, inst.M, inst.N, tol)
    return report, EXIT_FEASIBLE


def cmd_oracle(data, args, tol):
    inst = _instance(data)
    report = _base("oracle", args, tol, _pair_dict(inst))
    feasible, res = oracle_feasible(inst, tol)
    exhausted = res.exhausted
    report.update({
        "alpha_star": res.alpha_star, "value": res.value, "bracket": list(res.bracket),
        "iterations": res.iterations, "budget_exhausted": exhausted,
        "boundary": abs(res.value) <= BOUNDARY_BAND, "feasible": feasible,
    })
    return report, EXIT_FEASIBLE if feasible else EXIT_INFEASIBLE


def cmd_gen(data, args, tol):
    n = args.n
    if args.kind == "mfl":
        pair = gen_mfl_pair(n, args.m, args.seed, args.mode)
        out = matrix_file(n, pair.M, pair.N, m=args.m, seed=args.seed,
                          ground_truth={"mode": args.mode})
        return out, EXIT_FEASIBLE
    makers = {"feasible": gen_feasible_instance, "strict": gen_strict_instance,
              "random": gen_random_instance, "ns3": gen_ns3_violating_instance}
    g = makers[args.kind](n, args.seed, args.cls)
    extra = {"seed": args.seed, "ground_truth": dict(g.ground_truth(), n_class=g.n_class, kind=args.kind)}
    if g.planted is not None:
        extra["x"] = g.planted
    return matrix_file(n, g.inst.M, g.inst.N, **extra), EXIT_FEASIBLE


COMMANDS = {"check": cmd_check, "alpha": cmd_alpha, "strict": cmd_strict, "nspl": cmd_nspl,
            "mfl": cmd_mfl, "witness": cmd_witness, "oracle": cmd_oracle, "gen": cmd_gen}


# ---------------------------------------------------------------------------
# Output


def _text(report: dict) -> str:
    lines = []
    for key in sorted(report):
        if key in ("instance", "tolerances"):
            continue
        value = report[key]
        if isinstance(value, dict):
            inner = ", ".join(f"{k}={value[k]}" for k in sorted(value) if k != "witness")
            if value.get("witness"):
                inner += f", witness={np.round(np.asarray(value['witness']['x'], dtype=float), 10).tolist()}"
            lines.append(f"{key}: {inner}")
        elif isinstance(value, np.ndarray):
            lines.append(f"{key}: {value.tolist()}")
        else:
            lines.append(f"{key}: {value}")
    return "\n".join(lines) + "\n"


def render(report: dict, fmt: str) -> str:
    return _text(report) if fmt == "text" else dumps(report)


def run_one(command: str, source, args) -> tuple[str, int]:
    tol = _tolerances(args)
    if command == "gen":
        data = {}
    elif command == "check" and args.verify_only:
        data = {"raw": load_report(source)}
    else:
        data = load_matrix_file(source, args.input_format)
    report, code = COMMANDS[command](data, args, tol)
    return render(report, args.format), code


def _run_safe(command, source, args) -> tuple[str, int]:
    try:
        return run_one(command, source, args)
    except InternalInconsistency as exc:
        return f"error: internal inconsistency: {exc}\n", EXIT_INCONSISTENT
    except (InvalidInput, UsageError, FinslerError, ValueError) as exc:
        return f"error: {exc}\n", EXIT_USAGE


def _batch_worker(item):
    command, path, args = item
    return path, _run_safe(command, path, args)


def run_batch(command: str, directory: Path, args) -> int:
    files = sorted(p for p in directory.iterdir() if p.suffix in (".json", ".txt") and p.is_file())
    if args.output is None:
        raise UsageError("batch mode needs --output DIR")
    out_dir = Path(args.output)
    out_dir.mkdir(parents=True, exist_ok=True)
    items = [(command, str(p), args) for p in files]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_batch_worker, items))
    else:
        results = [_batch_worker(it) for it in items]
    summary = {}
    for path, (text, code) in results:
        stem = Path(path).stem
        (out_dir / f"{stem}.{command}.{'txt' if args.format == 'text' else 'json'}").write_text(text)
        summary[Path(path).name] = code
    sys.stdout.write(dumps({"command": command, "batch": str(directory), "exit_codes": summary}))
    return max(summary.values(), default=EXIT_FEASIBLE)


# ---------------------------------------------------------------------------
# Argument parsing


def _positive_float(text):
    try:
        x = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not (np.isfinite(x) and x > 0):
        raise argparse.ArgumentTypeError("must be a positive finite number")
    return x


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--tol-psd", type=_positive_float, default=None, help="semidefiniteness tolerance")
    common.add_argument("--tol-rank", type=_positive_float, default=None, help="relative rank tolerance")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--samples", type=int, default=10_000, help="witness sampling budget")
    common.add_argument("--format", choices=("json", "text"), default="json", help="report format")
    common.add_argument("--input-format", choices=("json", "text"), default=None,
                        help="force the input layout (default: sniffed)")
    common.add_argument("--output", "-o", default=None, help="write the report here (a directory in batch mode)")
    common.add_argument("--jobs", type=int, default=1, help="worker processes for batch directories")

    parser = _Parser(prog="nsfinsler", description="Certify feasibility of M + aN >= 0.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    helps = {
        "check": "decide feasibility and report witnesses",
        "alpha": "synthesize a multiplier",
        "strict": "strict variant: M + aN > 0",
        "nspl": "projection-lemma conditions and closed-form X (V = I)",
        "mfl": "matrix Finsler decision for blocked pairs",
        "witness": "cross-term witness from an (NS3) violator",
        "oracle": "line-search oracle on lambda_min(M + aN)",
    }
    epilogs = {"nspl": "X is only synthesized for V = I. For U = I, swap U and V in the input "
                       "and transpose the returned X."}
    for name, text in helps.items():
        p = sub.add_parser(name, parents=[common], help=text, epilog=epilogs.get(name))
        p.add_argument("input", help="matrix file, '-' for stdin, or a directory (batch)")
        if name == "check":
            p.add_argument("--verify-only", action="store_true",
                           help="treat input as a report and re-verify its certificates")

    g = sub.add_parser("gen", parents=[common], help="write a seeded instance with ground truth")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--m", type=int, default=2, help="second block size (kind mfl)")
    g.add_argument("--class", dest="cls", choices=("psd", "nsd", "indefinite", "zero", "pd", "nd"),
                   default="indefinite")
    g.add_argument("--kind", choices=("feasible", "strict", "random", "ns3", "mfl"), default="feasible")
    g.add_argument("--mode", choices=MFL_MODES, default="random", help="generator mode (kind mfl)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    if args.jobs < 1 or args.samples < 1:
        sys.stderr.write("error: --jobs and --samples must be positive\n")
        return EXIT_USAGE

    source = getattr(args, "input", None)
    try:
        if source not in (None, "-") and Path(source).is_dir():
            return run_batch(args.command, Path(source), args)
    except UsageError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE

    text, code = _run_safe(args.command, source, args)
    if code in (EXIT_USAGE, EXIT_INCONSISTENT) and text.startswith("error:"):
        sys.stderr.write(text)
        return code
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
