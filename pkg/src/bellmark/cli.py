"""Command-line entry point.

Exit codes: 0 success, 1 numerical failure, 2 invalid input, 3 verification
violations, 64 usage error.
"""
from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from . import __version__
from .bell import build_direct, correlator_coefficients, evaluate_from_correlations
from .bounds import (
    WitnessInput,
    evaluate_witness,
    full_entanglement_threshold,
    linear_bound,
    quadratic_bound,
)
from .errors import BellmarkError, DimensionCapError, ValidationError
from .io import (
    bloch_setup_to_json,
    correlations_from_json,
    dumps,
    load_json_arg,
    matrix_to_json,
    partition_from_json,
    setup_from_json,
    state_from_json,
)
from .linalg import expectation
from .measurement import sample_experiment
from .optimize import DEFAULT_RESTARTS, DEFAULT_TOL, maximize_witness, scan_threshold_window
from .states import Partition, enumerate_partitions
from .verify import (
    single_site_anticommuting,
    verify_lemma,
    verify_lemma_internals,
    verify_separability_bound,
    verify_tightness,
)

EXIT_OK, EXIT_NUMERIC, EXIT_INVALID, EXIT_VIOLATION, EXIT_USAGE = 0, 1, 2, 3, 64


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise UsageError(message)


class Run:
    """Collects manifest data and writes outputs."""

    def __init__(self, command: str, args: argparse.Namespace):
        self.command = command
        self.params = {k: v for k, v in vars(args).items() if k not in ("func",)}
        self.inputs: dict[str, str] = {}
        self.seeds: dict[str, int] = {}
        self.extra: dict = {}
        self.outputs: list[str] = []
        self.start = time.perf_counter()

    def load(self, text: str, field: str):
        obj, digest = load_json_arg(text, field)
        self.inputs[field] = digest
        return obj

    def emit(self, out: str | None, payload: dict):
        if not out:
            return
        Path(out).write_text(dumps(payload))
        self.outputs.append(out)
        manifest = {
            "subcommand": self.command,
            "parameters": self.params,
            "seeds": self.seeds,
            "inputs": self.inputs,
            "tool_version": __version__,
            "wall_time": time.perf_counter() - self.start,
            "outputs": self.outputs,
            **self.extra,
        }
        Path(out + ".manifest.json").write_text(dumps(manifest))


def _parse_subset(text: str | None):
    if text is None:
        return None
    try:
        return [int(t) - 1 for t in text.split(",") if t.strip()]
    except ValueError:
        raise ValidationError(f"bad subset {text!r}", field="subset") from None


def _parse_profile(text: str | None):
    if text is None:
        return None
    try:
        k, m = (int(t) for t in text.split(","))
    except ValueError:
        raise ValidationError("expected K,M", field="hypothesis") from None
    return (k, m)


def _parse_grid(text: str) -> list[float]:
    try:
        start, stop, step = (float(t) for t in text.split(":"))
    except ValueError:
        raise ValidationError("expected START:STOP:STEP", field="x") from None
    if step <= 0 or stop < start:
        raise ValidationError("need STEP > 0 and STOP >= START", field="x")
    count = int(round((stop - start) / step))
    return [round(start + i * step, 12) for i in range(count + 1)]


def _optimal_setup(run: Run, rho, anticommute: bool, seed: int, restarts: int):
    res = maximize_witness(rho, anticommute, restarts=restarts, seed=seed)
    run.seeds["optimizer"] = seed
    run.extra["optimal_settings"] = res.settings.to_dict()
    run.extra["optimal_value"] = res.best_value
    return res.settings.to_setup(anticommute)


def _resolve_setup(run: Run, text: str, rho, anticommute: bool, seed, restarts: int):
    if text == "optimal":
        return _optimal_setup(run, rho, anticommute, 0 if seed is None else seed, restarts)
    setup = setup_from_json(run.load(text, "setup"))
    if anticommute and not setup.anticommute:
        norms = setup.anticommutator_norms()
        run.extra["anticommutator_norms"] = norms
        if max(norms) > 1e-9:
            raise ValidationError(
                f"anticommutation assumed but max ||{{A,A'}}|| = {max(norms):.3g}", field="setup"
            )
    return setup


def cmd_bell_build(args, run: Run) -> int:
    setup = setup_from_json(run.load(args.setup, "setup"))
    pair = build_direct(setup, _parse_subset(args.subset))
    coeffs = correlator_coefficients(len(pair.sites))
    payload = {
        "subset": [j + 1 for j in pair.sites],
        "site_dims": list(pair.site_dims),
        "B": matrix_to_json(pair.B),
        "Bprime": matrix_to_json(pair.Bp),
        "coefficients": coeffs.to_table(),
    }
    print(f"Bell pair on sites {payload['subset']} (dim {pair.B.shape[0]})")
    run.emit(args.out, payload)
    return EXIT_OK


def cmd_bound(args, run: Run) -> int:
    n, k, m = args.n, args.k, args.m
    payload = {"n": n, "k": k, "m": m, "anticommute": args.anticommute}
    if not args.linear:
        payload["quadratic"] = quadratic_bound(n, k, m, args.anticommute)
        print(f"quadratic {payload['quadratic']:.10g}")
    if args.linear or not args.anticommute:
        payload["linear"] = linear_bound(n, k, m)
        print(f"linear {payload['linear']:.10g}")
    run.emit(args.out, payload)
    return EXIT_OK


def _print_verdict(verdict):
    print(f"lhs = <B>^2 + <B'>^2 = {verdict.lhs_quadratic:.10g} (se {verdict.lhs_se:.3g})")
    for label, value in verdict.thresholds.items():
        print(f"  {label}: {value:.10g}")
    excluded = ", ".join(f"(k={k},m={m})" for k, m in verdict.excluded) or "none"
    print(f"  excluded profiles: {excluded}")
    print(f"detected={str(verdict.full_entanglement_detected).lower()}")


def cmd_witness_eval(args, run: Run) -> int:
    rho = state_from_json(run.load(args.state, "state"))
    setup = _resolve_setup(run, args.setup, rho, args.anticommute, args.seed, args.restarts)
    pair = build_direct(setup)
    b, bp = expectation(rho, pair.B), expectation(rho, pair.Bp)
    inp = WitnessInput(setup.n, b, bp, anticommute_assumed=args.anticommute,
                       hypothesis=_parse_profile(args.hypothesis))
    verdict = evaluate_witness(inp, args.z)
    _print_verdict(verdict)
    run.emit(args.out, {"b": b, "bprime": bp, "verdict": verdict.to_dict()})
    return EXIT_OK


def cmd_witness_from_data(args, run: Run) -> int:
    record = correlations_from_json(run.load(args.correlations, "correlations"))
    est = evaluate_from_correlations(correlator_coefficients(record.n), record)
    inp = WitnessInput(record.n, est.b, est.bp, est.b_se, est.bp_se,
                       anticommute_assumed=args.anticommute,
                       hypothesis=_parse_profile(args.hypothesis))
    verdict = evaluate_witness(inp, args.z)
    print(f"<B> = {est.b:.6f} ± {est.b_se:.2g}, <B'> = {est.bp:.6f} ± {est.bp_se:.2g}")
    _print_verdict(verdict)
    run.emit(args.out, {"b": est.b, "b_se": est.b_se, "bprime": est.bp, "bprime_se": est.bp_se,
                        "verdict": verdict.to_dict()})
    return EXIT_OK


def cmd_simulate(args, run: Run) -> int:
    rho = state_from_json(run.load(args.state, "state"))
    setup = _resolve_setup(run, args.setup, rho, False, args.seed, args.restarts)
    run.seeds["sampling"] = args.seed
    record = sample_experiment(rho, setup, args.shots, args.seed)
    print(f"sampled {len(record.entries)} settings x {args.shots} shots")
    run.emit(args.out, record.to_dict())
    return EXIT_OK


def cmd_optimize(args, run: Run) -> int:
    rho = state_from_json(run.load(args.state, "state"))
    run.seeds["optimizer"] = args.seed
    res = maximize_witness(rho, args.anticommute, args.restarts, args.tol, args.seed)
    print(f"best <B>^2 + <B'>^2 = {res.best_value:.12g} (converged={str(res.converged).lower()})")
    payload = res.to_dict()
    payload["setup"] = bloch_setup_to_json(res.settings.a, res.settings.ap)
    run.emit(args.out, payload)
    return EXIT_OK


def cmd_scan(args, run: Run) -> int:
    grid = _parse_grid(args.x)
    run.seeds["optimizer"] = args.seed
    rows = scan_threshold_window(args.n, args.anticommute, grid, args.restarts, args.seed)
    thr = full_entanglement_threshold(args.n, args.anticommute)
    print(f"threshold {thr:g} ({'anticommuting' if args.anticommute else 'general'})")
    print(f"{'x':>6} {'max_lhs':>14} detected")
    for r in rows:
        print(f"{r.x:6.3f} {r.max_lhs:14.10f} {str(r.detected).lower()}")
    run.emit(args.out, {"n": args.n, "anticommute": args.anticommute, "threshold": thr,
                        "rows": [{"x": r.x, "max_lhs": r.max_lhs, "detected": r.detected}
                                 for r in rows]})
    return EXIT_OK


def _partitions_for(args, run: Run) -> list[Partition]:
    if args.partition:
        p = partition_from_json(run.load(args.partition, "partition"))
        if args.n is not None and p.n != args.n:
            raise ValidationError(f"partition covers {p.n} sites, --n is {args.n}", field="n")
        return [p]
    if args.n is None:
        raise ValidationError("give --n or --partition", field="n")
    return list(enumerate_partitions(args.n))


def cmd_verify(args, run: Run) -> int:
    run.seeds["trials"] = args.seed
    if args.check == "lemma":
        dims = tuple(int(t) for t in args.dims.split(","))
        reports = [verify_lemma(args.trials, dims, args.seed)]
    elif args.check == "lemma-internals":
        reports = [verify_lemma_internals(args.trials, args.seed)]
    elif args.check == "single-site":
        reports = [single_site_anticommuting(args.trials, args.seed)]
    elif args.check == "separable-bound":
        reports = [verify_separability_bound(p.n, p, args.trials, args.mixture_terms,
                                             args.anticommute, args.seed)
                   for p in _partitions_for(args, run)]
    else:
        parts = _partitions_for(args, run)
        reports = [verify_tightness(parts[0].n, parts, args.anticommute)]
    failed = 0
    for r in reports:
        label = r.details.get("partition", "")
        status = "ok" if r.ok else f"{len(r.violations)} VIOLATIONS"
        print(f"{r.check} {label} trials={r.trials} max={r.max_lhs:.10g} "
              f"bound={r.bound:.10g} margin={r.margin:.3g} {status}")
        failed += not r.ok
    run.extra["wall_times"] = [r.wall_time for r in reports]
    run.emit(args.out, {"reports": [r.to_dict() for r in reports]})
    return EXIT_VIOLATION if failed else EXIT_OK


def build_parser() -> Parser:
    p = Parser(prog="bellmark", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    bell = sub.add_parser("bell", help="Bell-Mermin operator construction")
    bell_sub = bell.add_subparsers(dest="action", required=True)
    build = bell_sub.add_parser("build", help="emit B, B' and the correlator coefficients")
    build.add_argument("--setup", required=True)
    build.add_argument("--subset", help="1-based comma list, default all sites")
    build.add_argument("--out")
    build.set_defaults(func=cmd_bell_build, name="bell build")

    bound = sub.add_parser("bound", help="closed-form separability bounds")
    bound.add_argument("--n", type=int, required=True)
    bound.add_argument("--k", type=int, required=True)
    bound.add_argument("--m", type=int, required=True)
    bound.add_argument("--anticommute", action="store_true")
    bound.add_argument("--linear", action="store_true", help="print only the |<B>| bound")
    bound.add_argument("--out")
    bound.set_defaults(func=cmd_bound, name="bound")

    witness = sub.add_parser("witness", help="entanglement witness verdicts")
    w_sub = witness.add_subparsers(dest="action", required=True)
    ev = w_sub.add_parser("eval", help="exact evaluation on a state")
    ev.add_argument("--state", required=True)
    ev.add_argument("--setup", required=True, help="setup JSON, path, or 'optimal'")
    ev.add_argument("--anticommute", action="store_true")
    ev.add_argument("--z", type=float, default=3.0)
    ev.add_argument("--hypothesis", help="K,M profile to test")
    ev.add_argument("--seed", type=int, help="optimizer seed for --setup optimal (default 0)")
    ev.add_argument("--restarts", type=int, default=DEFAULT_RESTARTS)
    ev.add_argument("--out")
    ev.set_defaults(func=cmd_witness_eval, name="witness eval")
    fd = w_sub.add_parser("from-data", help="verdict from a correlation record")
    fd.add_argument("--correlations", required=True)
    fd.add_argument("--anticommute", action="store_true")
    fd.add_argument("--z", type=float, default=3.0)
    fd.add_argument("--hypothesis")
    fd.add_argument("--out")
    fd.set_defaults(func=cmd_witness_from_data, name="witness from-data")

    sim = sub.add_parser("simulate", help="finite-shot correlation experiment")
    sim.add_argument("--state", required=True)
    sim.add_argument("--setup", required=True, help="setup JSON, path, or 'optimal'")
    sim.add_argument("--shots", type=int, required=True)
    sim.add_argument("--seed", type=int, required=True)
    sim.add_argument("--restarts", type=int, default=DEFAULT_RESTARTS)
    sim.add_argument("--out")
    sim.set_defaults(func=cmd_simulate, name="simulate")

    opt = sub.add_parser("optimize", help="maximize <B>^2 + <B'>^2 over qubit settings")
    opt.add_argument("--state", required=True)
    opt.add_argument("--anticommute", action="store_true")
    opt.add_argument("--restarts", type=int, default=DEFAULT_RESTARTS)
    opt.add_argument("--tol", type=float, default=DEFAULT_TOL)
    opt.add_argument("--seed", type=int, required=True)
    opt.add_argument("--out")
    opt.set_defaults(func=cmd_optimize, name="optimize")

    scan = sub.add_parser("scan", help="detection window on GHZ + white noise")
    scan.add_argument("--n", type=int, required=True)
    scan.add_argument("--x", default="0:1:0.01", help="START:STOP:STEP (inclusive)")
    scan.add_argument("--anticommute", action="store_true")
    scan.add_argument("--restarts", type=int, default=8)
    scan.add_argument("--seed", type=int, required=True)
    scan.add_argument("--out")
    scan.set_defaults(func=cmd_scan, name="scan")

    ver = sub.add_parser("verify", help="randomized verification suites")
    ver.add_argument("check", choices=["lemma", "lemma-internals", "separable-bound",
                                       "tightness", "single-site"])
    ver.add_argument("--n", type=int)
    ver.add_argument("--partition", help="partition JSON; default all partitions of --n")
    ver.add_argument("--trials", type=int, default=10_000)
    ver.add_argument("--seed", type=int, required=True)
    ver.add_argument("--dims", default="2,2", help="lemma local dimensions D1,D2")
    ver.add_argument("--mixture-terms", type=int, default=2)
    ver.add_argument("--anticommute", action="store_true")
    ver.add_argument("--out")
    ver.set_defaults(func=cmd_verify, name="verify")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError:
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    run = Run(args.name, args)
    try:
        return args.func(args, run)
    except (ValidationError, DimensionCapError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except BellmarkError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
