"""Equal-characteristic display recursion for the deformation length of a special endomorphism."""
import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Tuple

from .errors import BudgetExceededError, TruncationError, VerificationError
from .padic_core import PrimeContext, TruncatedSeriesMatrix, fraction_valuation

_LOG = logging.getLogger(__name__)


def expected_exponent(v: int, p: int) -> int:
    """(p^(v+1) - 1)/(p - 1)."""
    return (p ** (v + 1) - 1) // (p - 1)


def default_steps(v: int) -> int:
    return 2 * (v // 2) + 3


@dataclass(frozen=True)
class RecursionState:
    X: TruncatedSeriesMatrix
    Y: TruncatedSeriesMatrix
    step: int
    v: int
    p: int

    @property
    def t_max(self) -> int:
        return self.X.t_max

    def min_nonintegral_degree(self) -> Optional[int]:
        found = [d for d in (self.X.min_nonintegral_degree(self.p), self.Y.min_nonintegral_degree(self.p))
                 if d is not None]
        return min(found) if found else None


def _inverse_u(p: int, sign: int, t_max: int) -> TruncatedSeriesMatrix:
    """[[sign t/p, 1/p], [1, 0]]: sign -1 inverts U = [[0,1],[p,t]], sign +1 inverts [[0,1],[p,-t]]."""
    return TruncatedSeriesMatrix.from_rows(
        [[{1: Fraction(sign, p)}, {0: Fraction(1, p)}], [{0: 1}, {}]], t_max)


def initial_state(v: int, t_max: int, p: int) -> RecursionState:
    if v < 0:
        raise ValueError("v must be non-negative")
    if t_max < expected_exponent(v, p) + 1:
        raise ValueError(f"t_max={t_max} is below the expected exponent {expected_exponent(v, p)} + 1")
    r, odd = divmod(v, 2)
    if odd:
        X = TruncatedSeriesMatrix.constant([[0, 0], [p ** (r + 1), 0]], t_max)
        Y = TruncatedSeriesMatrix.constant([[0, p ** r], [0, 0]], t_max)
    else:
        X = TruncatedSeriesMatrix.constant([[p ** r, 0], [0, 0]], t_max)
        Y = TruncatedSeriesMatrix.constant([[0, 0], [0, p ** r]], t_max)
    return RecursionState(X, Y, 0, v, p)


def step_recursion(state: RecursionState) -> RecursionState:
    """Y(n+1) = U^-1 sigma(X(n)) S and X(n+1) = U'^-1 sigma(Y(n)) S."""
    p, t_max = state.p, state.t_max
    S = TruncatedSeriesMatrix.constant([[0, 1], [p, 0]], t_max)
    Y = _inverse_u(p, -1, t_max) @ state.X.frobenius_twist(p) @ S
    X = _inverse_u(p, 1, t_max) @ state.Y.frobenius_twist(p) @ S
    return RecursionState(X, Y, state.step + 1, state.v, p)


@dataclass(frozen=True)
class DisplayRun:
    v: int
    p: int
    t_max: int
    states: Tuple[RecursionState, ...]

    @property
    def expected(self) -> int:
        return expected_exponent(self.v, self.p)

    @property
    def truncated(self) -> int:
        last = self.states[-1]
        return last.X.truncated + last.Y.truncated

    def first_nonintegral_degree(self) -> Optional[int]:
        found = [d for d in (s.min_nonintegral_degree() for s in self.states) if d is not None]
        return min(found) if found else None


def simulate(v: int, p: int, steps: Optional[int] = None, t_max: Optional[int] = None,
             budget: Optional[int] = None) -> DisplayRun:
    steps = default_steps(v) if steps is None else steps
    t_max = expected_exponent(v, p) + p if t_max is None else t_max
    if budget is not None and steps * t_max * t_max > budget:
        raise BudgetExceededError("display recursion", steps * t_max * t_max, budget)
    state = initial_state(v, t_max, p)
    states = [state]
    for _ in range(steps):
        state = step_recursion(state)
        states.append(state)
    _LOG.debug("display recursion v=%d p=%d: %d steps below t^%d, %d monomials truncated",
               v, p, steps, t_max, state.X.truncated + state.Y.truncated)
    return DisplayRun(v, p, t_max, tuple(states))


def obstruction_exponent(v: int, ctx: PrimeContext, steps: Optional[int] = None,
                         t_max: Optional[int] = None, budget: Optional[int] = None) -> int:
    """Least t-degree carrying a non-integral coefficient in any X(n), Y(n).

    Products never lower degrees, so a degree found below t_max does not
    depend on the truncated monomials.
    """
    return exponent_from_run(simulate(v, ctx.p, steps, t_max, budget))


def exponent_from_run(run: DisplayRun) -> int:
    """The obstruction exponent of a finished run, checked against (p^(v+1) - 1)/(p - 1)."""
    for state in run.states:
        if not (state.X.has_p_power_denominators(run.p) and state.Y.has_p_power_denominators(run.p)):
            raise VerificationError(f"step {state.step} has a denominator prime to p")
    degree = run.first_nonintegral_degree()
    if degree is None:
        raise TruncationError(f"no non-integral coefficient below t^{run.t_max}; raise t_max")
    if degree != run.expected:
        raise VerificationError(f"v={run.v}: first non-integral degree {degree} != {run.expected}")
    return degree


def check_parity_pattern(run: DisplayRun) -> List[Tuple[int, bool]]:
    """X(2i) = X(2i+1), Y(2i+1) = Y(2i+2) for even v; shifted by one for odd v."""
    offset = run.v % 2
    out = []
    states = run.states
    for n in range(len(states) - 1):
        if (n + offset) % 2 == 0:
            out.append((n, states[n].X == states[n + 1].X))
        else:
            out.append((n, states[n].Y == states[n + 1].Y))
    return out


@dataclass(frozen=True)
class LeadingTerm:
    step: int
    matrix: str
    degree: int
    coefficient: Optional[Fraction]
    expected_valuation: int
    valuation: Optional[int]

    @property
    def ok(self) -> bool:
        return self.valuation == self.expected_valuation


def _predictions(v: int, p: int, step: int) -> Tuple[str, int, int]:
    """(matrix, degree, valuation) of the predicted top-left or top-right leading monomial."""
    r, odd = divmod(v, 2)
    s, rem = divmod(step, 2)
    if not odd:
        if rem == 0:
            return "X", expected_exponent(2 * s - 1, p) if s else 0, r - s
        return "Y", expected_exponent(2 * s, p), r - s - 1
    if rem == 1:
        return "X", expected_exponent(2 * s, p), r - s
    return "Y", expected_exponent(2 * s - 1, p) if s else 0, r - s


def leading_terms(run: DisplayRun) -> List[LeadingTerm]:
    """Leading monomials t^(p^(k-1)+...+p+1) and their p-valuations, for every step below t_max."""
    out = []
    for state in run.states:
        which, degree, val = _predictions(run.v, run.p, state.step)
        if degree >= run.t_max:
            continue
        matrix = state.X if which == "X" else state.Y
        column = 0 if which == "X" else 1
        coeff = matrix.entry(0, column).get(degree)
        measured = fraction_valuation(coeff, run.p) if coeff else None
        out.append(LeadingTerm(state.step, which, degree, coeff, val, measured))
    return out


def dump_steps(run: DisplayRun) -> dict:
    return {
        "v": run.v,
        "p": run.p,
        "t_max": run.t_max,
        "steps": [{"step": s.step, "X": s.X.to_json(), "Y": s.Y.to_json()} for s in run.states],
    }
