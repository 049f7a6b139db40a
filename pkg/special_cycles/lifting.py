"""Quasi-canonical lifting multiplicities and the intersection ledger.

All multiplicities are normalized lengths over W_s, i.e. they are the
brackets that get multiplied by e/e_s; the ambient e never appears.
"""
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple

from .densities import half_weighted_sum
from .errors import ParityError, PrecisionError, VerificationError
from .padic_core import PrecisionFlag, PrimeContext, QuatElement, OkElement, Valuation, int_valuation

_LOG = logging.getLogger(__name__)

# a component valuation: None is an exactly vanishing component
Component = Optional[Valuation]


def ramification_index(s: int, p: int, ramified: bool = False) -> int:
    """e_s = [M_s : M]: 1, p^(s-1)(p+1), ... ; the ramified variant is 2p^s."""
    if s < 0:
        raise ValueError("s must be non-negative")
    if ramified:
        return 2 * p ** s
    if s == 0:
        return 1
    return p ** (s - 1) * (p + 1)


@lru_cache(maxsize=None)
def _context(p: int, precision: int) -> PrimeContext:
    return PrimeContext.create(p, precision)


def _coordinate_valuation(x: int, ctx: PrimeContext) -> Valuation:
    n = ctx.precision
    v = int_valuation(x % ctx.modulus, ctx.p, n)
    return PrecisionFlag(n) if v >= n else v


def _combine(parts: Sequence[Component]) -> Component:
    """Valuation of a + b*delta from the coordinate valuations."""
    finite = [v for v in parts if isinstance(v, int)]
    flags = [v for v in parts if isinstance(v, PrecisionFlag)]
    if finite:
        return min(finite)
    if flags:
        return PrecisionFlag(min(f.bound for f in flags))
    return None


@dataclass(frozen=True)
class QuatValuationDatum:
    """Valuations of psi = alpha + beta*Pi.

    ``alpha_parts`` / ``beta_parts`` hold the valuations of the 1 and delta
    coordinates; they are needed for r >= 1.
    """

    ord_alpha: Component
    ord_beta: Component
    alpha_parts: Optional[Tuple[Component, Component]] = None
    beta_parts: Optional[Tuple[Component, Component]] = None

    @classmethod
    def from_quat(cls, x: QuatElement) -> "QuatValuationDatum":
        ctx = x.ctx
        alpha_parts = (_coordinate_valuation(x.alpha.a, ctx), _coordinate_valuation(x.alpha.b, ctx))
        beta_parts = (_coordinate_valuation(x.beta.a, ctx), _coordinate_valuation(x.beta.b, ctx))
        return cls(_combine(alpha_parts), _combine(beta_parts), alpha_parts, beta_parts)

    @property
    def v_D(self) -> Component:
        return _d_valuation(self.ord_alpha, self.ord_beta)

    def to_json(self) -> dict:
        def enc(v):
            return None if v is None else str(v) if isinstance(v, PrecisionFlag) else v
        out = {"ord_alpha": enc(self.ord_alpha), "ord_beta": enc(self.ord_beta)}
        if self.alpha_parts is not None:
            out["alpha_parts"] = [enc(v) for v in self.alpha_parts]
        if self.beta_parts is not None:
            out["beta_parts"] = [enc(v) for v in self.beta_parts]
        return out


def _at_least(v: Component, threshold: int) -> bool:
    if v is None:
        return True
    if isinstance(v, PrecisionFlag):
        if v.bound >= threshold:
            return True
        raise PrecisionError(f"component valuation {v} cannot be compared with {threshold}")
    return v >= threshold


def _d_valuation(alpha: Component, beta: Component) -> Optional[int]:
    """min(2 alpha, 2 beta + 1) with None as infinity."""
    terms = []
    if alpha is not None:
        terms.append(PrecisionFlag(2 * alpha.bound) if isinstance(alpha, PrecisionFlag) else 2 * alpha)
    if beta is not None:
        terms.append(PrecisionFlag(2 * beta.bound + 1) if isinstance(beta, PrecisionFlag) else 2 * beta + 1)
    finite = [t for t in terms if isinstance(t, int)]
    best = min(finite, default=None)
    for t in terms:
        if isinstance(t, PrecisionFlag) and (best is None or t.bound <= best):
            raise PrecisionError(f"D-valuation depends on a component known only as {t}")
    return best


def _remaining(parts: Tuple[Component, Component], first: int, second: int) -> Component:
    kept = [v for v, bound in zip(parts, (first, second)) if not _at_least(v, bound)]
    return _combine(kept)


def coset_valuation_l(psi: QuatValuationDatum, r: int, s: int) -> Optional[int]:
    """l_{r,s}(psi) = max v_D(psi + phi) over phi in H_{r,s} = Pi^(s-r) O_{k,r}.

    None stands for infinity (psi lies in H_{r,s}).
    """
    if not 0 <= r <= s:
        raise ValueError(f"need 0 <= r <= s, got r={r}, s={s}")
    if r == 0:
        if s % 2 == 0:
            if _at_least(psi.ord_alpha, s // 2):
                return _d_valuation(None, psi.ord_beta)
            return _d_valuation(psi.ord_alpha, psi.ord_beta)
        if _at_least(psi.ord_beta, (s - 1) // 2):
            return _d_valuation(psi.ord_alpha, None)
        return _d_valuation(psi.ord_alpha, psi.ord_beta)
    if psi.alpha_parts is None or psi.beta_parts is None:
        raise ValueError("coset valuations for r >= 1 need the coordinate valuations of alpha and beta")
    u, odd = divmod(s - r, 2)
    # H_{r,s} = p^u (Z_p + p^r Z_p delta), times Pi when s - r is odd
    if odd:
        return _d_valuation(psi.ord_alpha, _remaining(psi.beta_parts, u, u + r))
    return _d_valuation(_remaining(psi.alpha_parts, u, u + r), psi.ord_beta)


def _ratio(s: int, k: int, p: int) -> Fraction:
    return Fraction(ramification_index(s, p), ramification_index(k, p))


def lifting_bound_n0s(l: int, s: int, p: int) -> Fraction:
    """n_{0,s} in units of e/e_s."""
    if l < 0 or s < 0:
        raise ValueError("l and s must be non-negative")
    if l < s:
        return Fraction(p ** (l + 1) - 1, p - 1)
    return Fraction(p ** s - 1, p - 1) + Fraction(l + 1 - s, 2) * ramification_index(s, p)


def lifting_bound_nrr(l: int, r: int, p: int) -> Fraction:
    """n_{r,r} in units of e/e_r."""
    if l < 0 or r < 0:
        raise ValueError("l and r must be non-negative")
    if l % 2 == 0 and l <= 2 * r:
        return Fraction(2 * (p ** (l // 2 + 1) - 1), p - 1) - p ** (l // 2)
    if l % 2 == 1 and l <= 2 * r:
        return Fraction(2 * (p ** ((l + 1) // 2) - 1), p - 1)
    return Fraction(2 * (p ** r - 1), p - 1) + Fraction(l + 1 - 2 * r, 2) * ramification_index(r, p)


def lifting_bound_nrs(l: int, r: int, s: int, p: int) -> Fraction:
    """n_{r,s} in units of e/e_s, telescoped down to n_{r,r} or to a unit at level s-l."""
    if not 0 <= r <= s:
        raise ValueError(f"need 0 <= r <= s, got r={r}, s={s}")
    if l < 0:
        raise ValueError("l must be non-negative")
    if r == s:
        return lifting_bound_nrr(l, r, p)
    if l < s - r:
        head = sum((_ratio(s, k, p) for k in range(s - l + 1, s + 1)), Fraction(0))
        return head + _ratio(s, s - l, p) * ramification_index(r, p)
    head = sum((_ratio(s, k, p) for k in range(r + 1, s + 1)), Fraction(0))
    return head + _ratio(s, r, p) * lifting_bound_nrr(l - (s - r), r, p)


def onestep_holds(l: int, r: int, s: int, p: int) -> bool:
    """n_{r,s+1}(Pi psi) = n_{r,s}(psi) + e/e_{s+1}, written in units of e/e_{s+1}."""
    lhs = lifting_bound_nrs(l + 1, r, s + 1, p)
    rhs = lifting_bound_nrs(l, r, s, p) * _ratio(s + 1, s, p) + 1
    return lhs == rhs


def _check_mu_parity(a: int, b: int) -> None:
    if a < 0 or b < 0:
        raise ValueError("exponents must be non-negative")
    if a % 2 or not b % 2:
        raise ParityError(f"need a even and b odd, got ({a}, {b})")


def mu_matrix_entries(a: int, b: int, s: int, ctx: PrimeContext) -> Tuple[QuatElement, ...]:
    """The four entries of mu(y) in the 1, delta basis as elements of O_D.

    mu = 1/2 [[Pi^a - Pi^b, delta(Pi^b - Pi^a)], [(Pi^b - Pi^a) delta^-1, Pi^a + Pi^b]]
    for even s; for odd s the roles of Pi^a and Pi^b are exchanged.  The
    valuation data of both variants coincide entrywise.
    """
    _check_mu_parity(a, b)
    if s < 0:
        raise ValueError("s must be non-negative")
    if ctx.p == 2:
        raise ValueError("p = 2 is excluded")
    ctx = ctx.with_precision(max(ctx.precision, a + b + 2))
    half = pow(2, -1, ctx.modulus)
    pa = OkElement.from_int(ctx, half * ctx.p ** (a // 2))
    pb = OkElement.from_int(ctx, half * ctx.p ** ((b - 1) // 2))
    delta = OkElement.delta(ctx)
    delta_inv = delta * pow(ctx.epsilon, -1, ctx.modulus)
    sign = 1 if s % 2 == 0 else -1
    # Pi^a = p^(a/2) sits in alpha, Pi^b = p^((b-1)/2) Pi in beta; Pi delta^-1 = conj(delta^-1) Pi
    return (
        QuatElement(pa * sign, -pb * sign),
        QuatElement(-(delta * pa) * sign, (delta * pb) * sign),
        QuatElement(-(pa * delta_inv) * sign, (pb * delta_inv.conj()) * sign),
        QuatElement(pa, pb),
    )


def mu_matrix_l(a: int, b: int, s: int, ctx: Optional[PrimeContext] = None, p: int = 3) -> Tuple[Optional[int], ...]:
    """l_{0,s} of the four mu entries."""
    ctx = ctx or _context(p, a + b + 2)
    return tuple(coset_valuation_l(QuatValuationDatum.from_quat(x), 0, s)
                 for x in mu_matrix_entries(a, b, s, ctx))


def _min_l(values: Sequence[Optional[int]]) -> int:
    finite = [v for v in values if v is not None]
    if not finite:
        raise VerificationError("every mu entry lies in Pi^s O_k; m_s is undefined")
    return min(finite)


def is_extrapolated(a: int, b: int, s: int) -> bool:
    """True when the closed form uses its first branch, which needs an unordered (a, b)."""
    return (s % 2 == 0 and b < s) or (s % 2 == 1 and a < s)


def stratum_intersection(a: int, b: int, s: int, p: int, ctx: Optional[PrimeContext] = None) -> Fraction:
    """Z_s . Z(y_2) for a even, b odd; s even <= a or s odd <= b.

    The closed form is cross-checked against min_i n_{0,s}(mu_i).
    """
    _check_mu_parity(a, b)
    if s < 0 or (s % 2 == 0 and s > a) or (s % 2 == 1 and s > b):
        raise ValueError(f"s={s} outside the strata of (a, b) = ({a}, {b})")
    closed = lifting_bound_n0s(b if s % 2 == 0 else a, s, p)
    l = _min_l(mu_matrix_l(a, b, s, ctx, p))
    via_entries = lifting_bound_n0s(l, s, p)
    if closed != via_entries:
        raise VerificationError(f"stratum {s} of ({a},{b}): closed form {closed} != min over entries {via_entries}")
    if is_extrapolated(a, b, s):
        _LOG.warning("stratum %d of (%d, %d) uses the unordered-branch formula", s, a, b)
    return closed


def stratum_pair_intersection(s: int, t: int, p: int) -> int:
    """Z_s . Z_t = e_min(s,t) for s != t."""
    if s == t:
        raise ValueError("self-intersection is not defined here")
    if s < 0 or t < 0:
        raise ValueError("levels must be non-negative")
    return ramification_index(min(s, t), p)


def relabel_even_odd(a: int, b: int) -> Tuple[int, int]:
    if (a + b) % 2 == 0:
        raise ParityError(f"a + b = {a + b} must be odd")
    return (a, b) if a % 2 == 0 else (b, a)


@dataclass(frozen=True)
class IntersectionLedger:
    a: int
    b: int
    p: int
    per_stratum: Dict[int, Fraction]
    per_stratum_odd: Dict[int, Fraction]
    total: Fraction
    formula_total: Fraction
    extrapolated: Tuple[int, ...] = field(default_factory=tuple)

    def to_json(self) -> dict:
        from .reporter import fraction_to_json
        return {
            "a": self.a,
            "b": self.b,
            "p": self.p,
            "per_stratum": {str(s): fraction_to_json(v) for s, v in sorted(self.per_stratum.items())},
            "per_stratum_odd": {str(s): fraction_to_json(v) for s, v in sorted(self.per_stratum_odd.items())},
            "total": fraction_to_json(self.total),
            "formula_total": fraction_to_json(self.formula_total),
            "extrapolated": list(self.extrapolated),
            "log_p_factor": True,
        }


def total_degree(a: int, b: int, p: int) -> IntersectionLedger:
    """Both expansions of Z(y_1).Z(y_2), checked against 1/2 sum p^l (a+b+1-2l)."""
    if a < 0 or b < 0:
        raise ValueError("exponents must be non-negative")
    even, odd = relabel_even_odd(a, b)
    ctx = _context(p, even + odd + 2)
    per_even = {s: stratum_intersection(even, odd, s, p, ctx) for s in range(0, even + 1, 2)}
    per_odd = {s: stratum_intersection(even, odd, s, p, ctx) for s in range(1, odd + 1, 2)}
    total_even = sum(per_even.values(), Fraction(0))
    total_odd = sum(per_odd.values(), Fraction(0))
    if total_even != total_odd:
        raise VerificationError(f"even expansion {total_even} != odd expansion {total_odd} for ({a},{b})")
    formula = half_weighted_sum(a, b, p)
    if total_even != formula:
        raise VerificationError(f"ledger total {total_even} != formula {formula} for ({a},{b})")
    if total_even.denominator != 1:
        raise VerificationError(f"intersection number {total_even} is not an integer")
    extrapolated = tuple(s for s in sorted(list(per_even) + list(per_odd)) if is_extrapolated(even, odd, s))
    return IntersectionLedger(even, odd, p, per_even, per_odd, total_even, formula, extrapolated)


def special_fiber_sums(a: int, parity: str, p: int) -> int:
    """Sum of e_s over s <= a of the given parity; equals (p^(a+1)-1)/(p-1)."""
    if parity not in ("even", "odd"):
        raise ValueError(f"parity must be 'even' or 'odd', got {parity!r}")
    if (a % 2 == 0) != (parity == "even"):
        raise ParityError(f"a={a} is not {parity}")
    total = sum(ramification_index(s, p) for s in range(0 if parity == "even" else 1, a + 1, 2))
    expected = (p ** (a + 1) - 1) // (p - 1)
    if total != expected:
        raise VerificationError(f"special fiber sum {total} != {expected}")
    return total


def gl2_correction_sums(c: int, ramified: bool, p: int) -> int:
    """Degree of T = sum_{s<=c} W_s(phi) on the special fiber."""
    if c < 0:
        raise ValueError("c must be non-negative")
    if ramified:
        return 2 * sum(p ** i for i in range(c + 1))
    return 2 * sum(p ** i for i in range(c)) + p ** c


def deformation_locus_degree(a_val: int, p: int) -> int:
    """(T.M_p) for an endomorphism phi with v(phi) = a_val, summed stratum by stratum."""
    if a_val < 0:
        raise ValueError("a_val must be non-negative")
    c, ramified = divmod(a_val, 2)
    total = sum(ramification_index(s, p, ramified=bool(ramified)) for s in range(c + 1))
    expected = gl2_correction_sums(c, bool(ramified), p)
    if total != expected:
        raise VerificationError(f"deformation locus degree {total} != {expected}")
    return total


def e_s_table(p: int, s_max: int) -> List[Tuple[int, int]]:
    return [(s, ramification_index(s, p)) for s in range(s_max + 1)]
