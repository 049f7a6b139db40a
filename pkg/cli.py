#!/usr/bin/env python3
"""special-cycles CLI"""
import argparse
import logging
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from special_cycles import densities, display_sim, hermitian_forms, lifting, reporter, strata, verification
from special_cycles.errors import (
    BudgetExceededError,
    ContextMismatchError,
    ParityError,
    PrecisionError,
    ProfileShapeError,
    SingularMatrixError,
    TruncationError,
    VerificationError,
)
from special_cycles.hermitian_forms import HermMatrix, JordanProfile
from special_cycles.padic_core import PrimeContext
from special_cycles.utils import parse_diagonal, parse_int_list

_LOG = logging.getLogger("special_cycles.cli")

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2
EXIT_BUDGET = 3


@dataclass(frozen=True)
class RunConfig:
    p: int = 3
    precision: int = 12
    epsilon: Optional[int] = None
    threads: int = 1
    budget: int = densities.DEFAULT_BUDGET
    output_format: str = "json"
    seed: int = 0

    @classmethod
    def from_args(cls, args) -> "RunConfig":
        return cls(args.p, args.precision, args.epsilon, args.threads, args.budget, args.format, args.seed)

    def context(self) -> PrimeContext:
        return PrimeContext.create(self.p, self.precision, self.epsilon)


def _budget(text: str) -> int:
    """Accept ``1000000000`` as well as ``1e9``."""
    try:
        return int(text)
    except ValueError:
        return int(float(text))


def _matrix(text: str, cfg: RunConfig) -> HermMatrix:
    """A JSON file path or diagonal shorthand such as ``1,p,p^3``."""
    path = Path(text)
    if text.endswith(".json") or path.is_file():
        return HermMatrix.load(path, epsilon=cfg.epsilon, precision=cfg.precision)
    return HermMatrix.from_terms(cfg.context(), parse_diagonal(text, cfg.p))


def cmd_jordan(args, cfg: RunConfig) -> int:
    T = _matrix(args.matrix, cfg)
    profile, U = hermitian_forms.jordan_decompose(T)
    payload = {
        "command": "jordan",
        "p": cfg.p,
        "profile": profile.to_json(),
        "det_valuation": profile.det_valuation,
        "invariants": hermitian_forms.geometric_invariants(profile).to_json(),
        "decomposition_checked": hermitian_forms.check_decomposition(T, U, profile),
        "U": [[x.to_json() for x in row] for row in U],
    }
    if args.scaled:
        i, j = parse_int_list(args.scaled)
        datum = hermitian_forms.scaled_fundamental(i, j, T)
        scaled = {"i": i, "j": j, "empty": datum.empty, "reason": datum.reason}
        if not datum.empty:
            tilde = hermitian_forms.profile_of(datum.T_tilde.integral())
            scaled["profile"] = tilde.to_json()
            scaled["invariants"] = hermitian_forms.geometric_invariants(tilde).to_json()
        payload["scaled"] = scaled
    reporter.emit(payload, "json")
    return EXIT_OK


def _profile(args, cfg: RunConfig) -> JordanProfile:
    if args.exponents:
        return JordanProfile.from_exponents(parse_int_list(args.exponents))
    return hermitian_forms.profile_of(_matrix(args.matrix, cfg))


def cmd_strata(args, cfg: RunConfig) -> int:
    ctx = cfg.context()
    profile = _profile(args, cfg)
    report = strata.verify_stratum_theorems(profile, ctx, cfg.threads, args.max_weight)
    payload = {"command": "strata", "p": cfg.p, "report": report.to_json()}
    if args.graph or args.list:
        D = strata.build_D(profile, ctx, args.max_weight)
        entries = strata.enumerate_grD(D, cfg.threads, cfg.budget)
        if args.list:
            payload["grd"] = [{"B": e.B.to_json(), "type": strata.vertex_type(e, D)} for e in entries]
        if args.graph:
            edges = strata.inclusion_poset(D, entries)
            out = Path(args.graph)
            out.parent.mkdir(parents=True, exist_ok=True)
            out.write_text(strata.poset_to_dot(entries, edges), encoding="utf-8")
            _LOG.info("wrote inclusion poset to %s", out)
    reporter.emit(payload, "json")
    return EXIT_OK


def cmd_density(args, cfg: RunConfig) -> int:
    S = _matrix(args.S, cfg)
    T = _matrix(args.T, cfg)
    payload = {"command": "density", "p": cfg.p, "m": S.n, "n": T.n}
    closed = densities.closed_form_density(S, T)
    if not args.brute:
        payload["closed_form"] = closed
    if not args.closed:
        k = args.k if args.k is not None else densities.ell(T) + 1
        req = densities.DensityRequest(S, T, k)
        count = densities.brute_count(req, cfg.budget, cfg.threads, args.method)
        payload.update({"k": k, "count": count})
        if k > densities.ell(T):
            value = densities.density_bruteforce(req, cfg.budget, cfg.threads, args.method,
                                                 check_stability=args.stability)
            payload["density"] = value
            if closed is not None and not args.brute and value != closed:
                raise VerificationError(f"brute-force density {value} != closed form {closed}")
        else:
            payload["unstable"] = True
            payload["density"] = count * densities.normalization(req)
    reporter.emit(payload, "json")
    return EXIT_OK


def cmd_density_table(args, cfg: RunConfig) -> int:
    rows = verification.density_rows(cfg.p, args.max_ab)
    return _table(rows, verification.DENSITY_COLUMNS, args.out, cfg)


def cmd_intersect(args, cfg: RunConfig) -> int:
    if args.T:
        T = _matrix(args.T, cfg)
        a, b = hermitian_forms.reduce_to_binary(T)
        n = T.n
    else:
        if args.a is None or args.b is None:
            raise ValueError("give --a and --b, or --T")
        a, b, n = args.a, args.b, args.n
    ledger = lifting.total_degree(a, b, cfg.p)
    ratio = densities.derivative_ratio(n, a, b, cfg.p)
    payload = {"command": "intersect", "n": n, "density_ratio": ratio,
               "all_equal": ledger.total == ledger.formula_total == ratio}
    payload.update(ledger.to_json())
    reporter.emit(payload, "json")
    return EXIT_OK if payload["all_equal"] else EXIT_FAILED


def cmd_display_sim(args, cfg: RunConfig) -> int:
    cfg.context()  # validates p
    run = display_sim.simulate(args.v, cfg.p, args.steps, args.t_max, cfg.budget)
    exponent = display_sim.exponent_from_run(run)
    pattern = display_sim.check_parity_pattern(run)
    terms = display_sim.leading_terms(run)
    payload = {
        "command": "display-sim",
        "p": cfg.p,
        "v": args.v,
        "t_max": run.t_max,
        "steps": len(run.states) - 1,
        "obstruction_exponent": exponent,
        "expected": run.expected,
        "truncated_monomials": run.truncated,
        "parity_pattern": all(ok for _, ok in pattern),
        "leading_terms": [{"step": t.step, "matrix": t.matrix, "degree": t.degree,
                           "valuation": t.valuation, "expected_valuation": t.expected_valuation}
                          for t in terms],
    }
    if args.dump_steps:
        reporter.write_json(display_sim.dump_steps(run), Path(args.dump_steps))
    reporter.emit(payload, "json")
    return EXIT_OK


def cmd_verify(args, cfg: RunConfig) -> int:
    primes = parse_int_list(args.primes) if args.primes else None
    results = verification.run_suite(args.suite, cfg.context(), cfg.budget, cfg.threads, cfg.seed, primes)
    summary = verification.summarize(results)
    if cfg.output_format == "json":
        reporter.emit({"command": "verify", "suite": args.suite, "p": cfg.p, "summary": summary,
                       "results": [r.to_json() for r in results]}, "json")
    else:
        rows = [r.to_json() for r in results]
        print(reporter.render_table(rows, ("name", "lhs", "rhs", "status", "detail"), cfg.output_format), end="")
    return EXIT_FAILED if summary[verification.FAIL] else EXIT_OK


def cmd_table(args, cfg: RunConfig) -> int:
    if args.kind == "main-identity":
        pairs = verification.odd_pairs(args.max_ab)
        rows = verification.main_identity_rows(cfg.p, pairs)
        columns = verification.MAIN_IDENTITY_COLUMNS
    elif args.kind == "e_s":
        rows = verification.e_s_rows(cfg.p, args.s_max)
        columns = verification.E_S_COLUMNS
    else:
        rows = verification.strata_rows(cfg.context(), args.max_weight, workers=cfg.threads)
        columns = verification.STRATA_COLUMNS
    return _table(rows, columns, args.out, cfg)


def _table(rows, columns, out: Optional[str], cfg: RunConfig) -> int:
    text = reporter.write_table(rows, columns, Path(out) if out else None, cfg.output_format)
    if out:
        print(f"Wrote {len(rows)} rows to {out}")
    else:
        print(text, end="")
    return EXIT_OK


def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--p", type=int, default=3, help="Odd prime")
    common.add_argument("--precision", type=int, default=12, help="Working precision N (arithmetic mod p^N)")
    common.add_argument("--epsilon", type=int, help="Nonresidue defining delta^2 = epsilon")
    common.add_argument("--threads", type=int, default=1, help="Worker threads for sharded enumerations")
    common.add_argument("--budget", type=_budget, default=densities.DEFAULT_BUDGET,
                        help="Maximum estimated elementary operations per enumeration")
    common.add_argument("--format", choices=reporter.FORMATS, default="json")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--verbose", action="store_true")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_options()
    parser = argparse.ArgumentParser(prog="special-cycles")
    sub = parser.add_subparsers(dest="cmd")

    p_jordan = sub.add_parser("jordan", parents=[common], help="Jordan profile of a hermitian matrix")
    p_jordan.add_argument("--matrix", "--diag", dest="matrix", required=True,
                          help="JSON file or diagonal shorthand such as 1,p,p^3")
    p_jordan.add_argument("--scaled", help="i,j: also report the scaled fundamental matrix p^(2i-j) T")
    p_jordan.set_defaults(func=cmd_jordan)

    p_strata = sub.add_parser("strata", parents=[common], help="GrD enumeration and the stratum theorems")
    group = p_strata.add_mutually_exclusive_group(required=True)
    group.add_argument("--exponents", help="Jordan exponents, e.g. 0,1,1,3")
    group.add_argument("--matrix", help="JSON file or diagonal shorthand")
    p_strata.add_argument("--graph", help="Write the GrD inclusion poset as Graphviz DOT")
    p_strata.add_argument("--list", action="store_true", help="Include every GrD element in the output")
    p_strata.add_argument("--max-weight", type=int, default=strata.DEFAULT_WEIGHT_BUDGET)
    p_strata.set_defaults(func=cmd_strata)

    p_density = sub.add_parser("density", parents=[common], help="Representation density alpha_p(S, T)")
    p_density.add_argument("--S", required=True)
    p_density.add_argument("--T", required=True)
    p_density.add_argument("--k", type=int, help="Level p^k (default ell(T) + 1)")
    mode = p_density.add_mutually_exclusive_group()
    mode.add_argument("--brute", action="store_true", help="Brute force only")
    mode.add_argument("--closed", action="store_true", help="Closed form only")
    p_density.add_argument("--method", choices=("auto", "rows", "columns"), default="auto")
    p_density.add_argument("--stability", action="store_true", help="Also count at k + 1 when the budget allows")
    p_density.set_defaults(func=cmd_density)

    p_dtable = sub.add_parser("density-table", parents=[common], help="Binary density polynomials and derivatives")
    p_dtable.add_argument("--max-ab", type=int, default=5)
    p_dtable.add_argument("--out")
    p_dtable.set_defaults(func=cmd_density_table)

    p_inter = sub.add_parser("intersect", parents=[common], help="Intersection ledger for diag(p^a, p^b)")
    p_inter.add_argument("--a", type=int)
    p_inter.add_argument("--b", type=int)
    p_inter.add_argument("--n", type=int, default=2, help="Size of T for the density ratio")
    p_inter.add_argument("--T", help="Hermitian matrix of shape 1_(n-2) + diag(p^a, p^b)")
    p_inter.set_defaults(func=cmd_intersect)

    p_disp = sub.add_parser("display-sim", parents=[common], help="Display recursion deformation length")
    p_disp.add_argument("--v", type=int, required=True)
    p_disp.add_argument("--t-max", type=int)
    p_disp.add_argument("--steps", type=int)
    p_disp.add_argument("--dump-steps", help="Write every X(n), Y(n) as JSON")
    p_disp.set_defaults(func=cmd_display_sim)

    p_verify = sub.add_parser("verify", parents=[common], help="Run the verification suites")
    p_verify.add_argument("--suite", choices=("all",) + verification.SUITES, default="all")
    p_verify.add_argument("--primes", help="Primes for the lifting suite, e.g. 3,5,7 (default: --p together with 3,5,7)")
    p_verify.set_defaults(func=cmd_verify)

    p_table = sub.add_parser("table", parents=[common], help="Emit a comparison table")
    p_table.add_argument("--kind", choices=("main-identity", "strata", "e_s"), required=True)
    p_table.add_argument("--max-ab", type=int, default=3)
    p_table.add_argument("--s-max", type=int, default=4)
    p_table.add_argument("--max-weight", type=int, default=4)
    p_table.add_argument("--out")
    p_table.set_defaults(func=cmd_table)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not args.cmd:
        parser.print_help()
        return EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = RunConfig.from_args(args)
        return args.func(args, cfg)
    except VerificationError as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return EXIT_FAILED
    except (BudgetExceededError, PrecisionError, TruncationError) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (ValueError, ProfileShapeError, ParityError, SingularMatrixError, ContextMismatchError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
