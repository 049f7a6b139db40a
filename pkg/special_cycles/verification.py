"""Verification suites: the cross-module identities, reported as PASS / FAIL / SKIPPED records."""
import logging
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Tuple

from sympy import isprime

from . import densities, display_sim, hermitian_forms, lifting, strata
from .errors import BudgetExceededError, SpecialCyclesError, VerificationError
from .hermitian_forms import HermMatrix, JordanProfile
from .padic_core import PrimeContext
from .reporter import fraction_to_json

_LOG = logging.getLogger(__name__)

PASS = "PASS"
FAIL = "FAIL"
SKIPPED = "SKIPPED"

SUITES = ("lifting", "densities", "strata", "display")


@dataclass(frozen=True)
class CheckResult:
    name: str
    lhs: Any
    rhs: Any
    status: str
    detail: str = ""

    def to_json(self) -> dict:
        def enc(x):
            if isinstance(x, (Fraction, int)) and not isinstance(x, bool):
                return fraction_to_json(x)
            return x
        return {"name": self.name, "lhs": enc(self.lhs), "rhs": enc(self.rhs),
                "status": self.status, "detail": self.detail}


def _compare(name: str, compute: Callable[[], Tuple[Any, Any]]) -> CheckResult:
    """Run ``compute`` and fold its outcome into a record; budget limits become SKIPPED."""
    try:
        lhs, rhs = compute()
    except BudgetExceededError as exc:
        return CheckResult(name, None, None, SKIPPED, str(exc))
    except SpecialCyclesError as exc:
        return CheckResult(name, None, None, FAIL, f"{type(exc).__name__}: {exc}")
    return CheckResult(name, lhs, rhs, PASS if lhs == rhs else FAIL)


def odd_pairs(max_ab: int) -> List[Tuple[int, int]]:
    return [(a, b) for b in range(max_ab + 1) for a in range(b) if (a + b) % 2 == 1]


LIFTING_PRIMES = (3, 5, 7)


def lifting_primes(p: int, primes: Optional[Sequence[int]] = None) -> Tuple[int, ...]:
    """The primes the lifting suite runs over: ``primes`` if given, else p together with 3, 5, 7."""
    if primes:
        bad = [q for q in primes if q == 2 or not isprime(q)]
        if bad:
            raise ValueError(f"lifting primes must be odd primes, got {bad}")
        return tuple(sorted(set(primes)))
    return tuple(sorted({p, *LIFTING_PRIMES}))


def suite_lifting(primes: Sequence[int] = LIFTING_PRIMES, max_ab: int = 9) -> List[CheckResult]:
    results = []
    for p in primes:
        for a, b in odd_pairs(max_ab):
            ledger_total = None
            try:
                ledger_total = lifting.total_degree(a, b, p).total
            except SpecialCyclesError as exc:
                results.append(CheckResult(f"ledger p={p} a={a} b={b}", None, None, FAIL, str(exc)))
                continue
            for n in (2, 3, 4):
                results.append(_compare(f"length=density' p={p} a={a} b={b} n={n}",
                                        lambda: (ledger_total, densities.derivative_ratio(n, a, b, p))))
        holds = [lifting.onestep_holds(l, r, s, p) for s in range(6) for r in range(s + 1) for l in range(13)]
        results.append(CheckResult(f"onestep p={p}", sum(holds), len(holds), PASS if all(holds) else FAIL))
        for a in range(9):
            parity = "even" if a % 2 == 0 else "odd"
            results.append(_compare(f"special fiber p={p} a={a}", lambda: (
                lifting.special_fiber_sums(a, parity, p), (p ** (a + 1) - 1) // (p - 1))))
            results.append(_compare(f"deformation locus p={p} a={a}", lambda: (
                lifting.deformation_locus_degree(a, p), lifting.gl2_correction_sums(a // 2, a % 2 == 1, p))))
    return results


def _density_cases(ctx: PrimeContext) -> List[Tuple[str, HermMatrix, HermMatrix]]:
    p = ctx.p
    targets = [("1_1", [0]), (f"({p})", [1]), ("1_2", [0, 0]), (f"diag(1,{p})", [0, 1]),
               (f"diag({p},{p})", [1, 1]), (f"diag(1,{p * p})", [0, 2])]
    cases = []
    for m in (1, 2, 3):
        for label, exps in targets:
            if len(exps) <= m:
                cases.append((f"1_{m} vs {label}", HermMatrix.identity(ctx, m), HermMatrix.from_exponents(ctx, exps)))
    return cases


def suite_densities(ctx: PrimeContext, budget: Optional[int] = densities.DEFAULT_BUDGET, workers: int = 1,
                    seed: int = 0) -> List[CheckResult]:
    p = ctx.p
    results = []
    for label, S, T in _density_cases(ctx):
        closed = densities.closed_form_density(S, T)
        name = f"brute=closed {label}"
        if closed is None:
            results.append(CheckResult(name, None, None, SKIPPED, "no closed form applies"))
            continue
        results.append(_compare(name, lambda: (
            densities.stable_density(S, T, budget, workers, check_stability=True), closed)))
    results.append(CheckResult("nagaoka(0,0)=shimura(2)", densities.nagaoka_poly(0, 0, p).coefficients,
                               densities.shimura_poly(2, p).coefficients,
                               PASS if densities.nagaoka_poly(0, 0, p) == densities.shimura_poly(2, p) else FAIL))
    for a, b in ((0, 1), (1, 2)):
        T = HermMatrix.from_exponents(ctx, [a, b])
        results.append(_compare(f"nagaoka at -1/p a={a} b={b}", lambda: (
            densities.stable_density(HermMatrix.identity(ctx, 3), T, budget, workers),
            densities.nagaoka_poly(a, b, p)(densities.evaluation_point(1, p)))))
    for r in (0, 1):
        def _reduction():
            check = densities.reduction_check([1], 2, r, ctx, budget, workers)
            return check.lhs, check.rhs
        results.append(_compare(f"reduction n=2 T'=({p}) r={r}", _reduction))
    results.append(_compare("GL_n invariance", lambda: gl_invariance(ctx, budget, workers, seed)))
    results.append(_compare("row method = column method", lambda: method_agreement(ctx, budget, workers)))
    if p == 5:
        results.append(_compare("epsilon invariance", lambda: epsilon_invariance(ctx, budget, workers)))
    return results


def _nonzero_count(req: densities.DensityRequest, budget: Optional[int], workers: int, method: str = "auto") -> int:
    count = densities.brute_count(req, budget, workers, method)
    if count == 0:
        raise VerificationError(f"count for m={req.m} n={req.n} k={req.k} is zero: nothing to compare")
    return count


def gl_invariance(ctx: PrimeContext, budget: Optional[int], workers: int, seed: int,
                  trials: int = 10) -> Tuple[List[int], List[int]]:
    """Brute counts after random GL_n(O_k) conjugation of T (1_3 vs diag(1, p)) and of S (1_2 vs 1_2).

    Returns the conjugated counts and the unconjugated ones, which are nonzero.
    """
    rng = random.Random(seed)
    got: List[int] = []
    want: List[int] = []
    for s_exps, t_exps, move in (([0, 0, 0], [0, 1], "T"), ([0, 0], [0, 0], "S")):
        S = HermMatrix.from_exponents(ctx, s_exps)
        T = HermMatrix.from_exponents(ctx, t_exps)
        base = _nonzero_count(densities.DensityRequest(S, T, 2), budget, workers)
        profile = JordanProfile.from_exponents(t_exps if move == "T" else s_exps)
        for _ in range(trials):
            other = hermitian_forms.random_hermitian(profile, ctx, rng)
            req = densities.DensityRequest(S, other, 2) if move == "T" else densities.DensityRequest(other, T, 2)
            got.append(densities.brute_count(req, budget, workers))
            want.append(base)
    return got, want


def method_agreement(ctx: PrimeContext, budget: Optional[int], workers: int) -> Tuple[List[int], List[int]]:
    """Row-method and column-method counts on cases with nonzero counts."""
    rows, columns = [], []
    for s_exps, t_exps, k in (([0, 0], [0, 0], 2), ([0, 0, 0], [0, 0], 1), ([0, 0, 0], [0, 1], 1)):
        S, T = HermMatrix.from_exponents(ctx, s_exps), HermMatrix.from_exponents(ctx, t_exps)
        req = densities.DensityRequest(S, T, k)
        rows.append(_nonzero_count(req, budget, workers, method="rows"))
        columns.append(densities.brute_count(req, budget, workers, method="columns"))
    return rows, columns


def epsilon_invariance(ctx: PrimeContext, budget: Optional[int], workers: int) -> Tuple[Fraction, Fraction]:
    """The same density computed with two different nonresidues."""
    values = []
    for eps in (2, 3):
        other = PrimeContext.create(ctx.p, ctx.precision, eps)
        values.append(densities.stable_density(HermMatrix.identity(other, 2),
                                               HermMatrix.from_exponents(other, [0, 1]), budget, workers))
    return values[0], values[1]


def suite_strata(ctx: PrimeContext, workers: int = 1, max_n: int = 4, max_exponent: int = 3,
                 max_weight: int = strata.DEFAULT_WEIGHT_BUDGET) -> List[CheckResult]:
    results = []
    for profile in strata.enumerate_profiles(max_n, max_exponent, max_weight):
        name = f"strata {profile}"
        try:
            report = strata.verify_stratum_theorems(profile, ctx, workers, max_weight)
        except BudgetExceededError as exc:
            results.append(CheckResult(name, None, None, SKIPPED, str(exc)))
            continue
        except VerificationError as exc:
            results.append(CheckResult(name, None, None, FAIL, str(exc)))
            continue
        detail = "" if report.applicable else "ord det even: theorem hypotheses not met"
        results.append(CheckResult(name, (report.max_type, report.irreducible_observed),
                                   (report.t0, report.irreducible_predicted), report.status, detail))
    return results


def display_range(p: int) -> range:
    return range(4) if p == 3 else range(3)


def suite_display(ctx: PrimeContext, budget: Optional[int] = None) -> List[CheckResult]:
    p = ctx.p
    results = []
    for v in display_range(p):
        try:
            run = display_sim.simulate(v, p, budget=budget)
        except BudgetExceededError as exc:
            results.append(CheckResult(f"display v={v}", None, None, SKIPPED, str(exc)))
            continue
        results.append(_compare(f"obstruction exponent v={v}", lambda: (
            display_sim.exponent_from_run(run), display_sim.expected_exponent(v, p))))
        pattern = display_sim.check_parity_pattern(run)
        results.append(CheckResult(f"parity pattern v={v}", sum(ok for _, ok in pattern), len(pattern),
                                   PASS if all(ok for _, ok in pattern) else FAIL))
        terms = display_sim.leading_terms(run)
        results.append(CheckResult(f"leading terms v={v}", [t.valuation for t in terms],
                                   [t.expected_valuation for t in terms],
                                   PASS if all(t.ok for t in terms) else FAIL))
        parity = "even" if v % 2 == 0 else "odd"
        results.append(_compare(f"exponent=special fiber v={v}", lambda: (
            display_sim.expected_exponent(v, p), lifting.special_fiber_sums(v, parity, p))))
    return results


def run_suite(name: str, ctx: PrimeContext, budget: Optional[int] = densities.DEFAULT_BUDGET,
              workers: int = 1, seed: int = 0, primes: Optional[Sequence[int]] = None) -> List[CheckResult]:
    """Run one suite or ``all`` of them, in a fixed order."""
    names = SUITES if name == "all" else (name,)
    results: List[CheckResult] = []
    for suite in names:
        if suite == "lifting":
            results.extend(suite_lifting(lifting_primes(ctx.p, primes)))
        elif suite == "densities":
            results.extend(suite_densities(ctx, budget, workers, seed))
        elif suite == "strata":
            results.extend(suite_strata(ctx, workers))
        elif suite == "display":
            results.extend(suite_display(ctx, budget))
        else:
            raise ValueError(f"unknown suite {suite!r}")
        _LOG.debug("suite %s: %d checks so far", suite, len(results))
    return results


def summarize(results: Iterable[CheckResult]) -> Dict[str, int]:
    counts = {PASS: 0, FAIL: 0, SKIPPED: 0}
    for r in results:
        counts[r.status] += 1
    return counts


# tables

MAIN_IDENTITY_COLUMNS = ("p", "a", "b", "length_formula", "ledger_total", "density_ratio", "agree")


def main_identity_rows(p: int, pairs: Sequence[Tuple[int, int]], n: int = 2) -> List[Dict[str, Any]]:
    rows = []
    for a, b in pairs:
        formula = densities.half_weighted_sum(a, b, p)
        ledger = lifting.total_degree(a, b, p).total
        ratio = densities.derivative_ratio(n, a, b, p)
        rows.append({"p": p, "a": a, "b": b, "length_formula": formula, "ledger_total": ledger,
                     "density_ratio": ratio, "agree": formula == ledger == ratio})
    return rows


E_S_COLUMNS = ("s", "e_s")


def e_s_rows(p: int, s_max: int) -> List[Dict[str, Any]]:
    return [{"s": s, "e_s": e} for s, e in lifting.e_s_table(p, s_max)]


STRATA_COLUMNS = ("profile", "m", "t0", "dim", "max_type", "maximal_vertex_count", "grd_size",
                  "irreducible_predicted", "irreducible_observed", "parity_ok", "status")


def strata_rows(ctx: PrimeContext, max_weight: int = 4, max_n: int = 4, max_exponent: int = 3,
                workers: int = 1) -> List[Dict[str, Any]]:
    rows = []
    for profile in strata.enumerate_profiles(max_n, max_exponent, max_weight):
        report = strata.verify_stratum_theorems(profile, ctx, workers, max_weight)
        row = report.to_json()
        row["profile"] = str(profile)
        rows.append(row)
    return rows


DENSITY_COLUMNS = ("p", "a", "b", "polynomial", "alpha_prime", "normalized", "length_formula")


def density_rows(p: int, max_ab: int) -> List[Dict[str, Any]]:
    rows = []
    for a, b in odd_pairs(max_ab):
        deriv = densities.alpha_derivative_binary(a, b, p)
        rows.append({"p": p, "a": a, "b": b,
                     "polynomial": densities.nagaoka_poly(a, b, p).to_json(),
                     "alpha_prime": deriv.alpha_prime, "normalized": deriv.normalized,
                     "length_formula": densities.half_weighted_sum(a, b, p)})
    return rows
