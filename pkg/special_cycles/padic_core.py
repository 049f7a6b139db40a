"""Exact arithmetic in O_k = Z_p[delta], the quaternion order O_D and rational series.

All O_k arithmetic is carried out modulo p^N where N is the precision of the
shared :class:`PrimeContext`.  Rationals are ``fractions.Fraction`` throughout;
polynomial products, derivatives and interpolation go through sympy.
"""
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

from sympy import QQ, Poly, Rational, Symbol, interpolate, isprime, legendre_symbol, multiplicity, sqrt_mod

from .errors import ContextMismatchError, PrecisionError

_LOG = logging.getLogger(__name__)

X = Symbol("X")

Pair = Tuple[int, int]


def least_nonresidue(p: int) -> int:
    """Smallest positive quadratic nonresidue modulo the odd prime ``p``."""
    for e in range(2, p):
        if legendre_symbol(e, p) == -1:
            return e
    raise ValueError(f"no nonresidue modulo {p}")


@dataclass(frozen=True)
class PrimeContext:
    """The odd prime p, the nonresidue epsilon = delta^2 and the precision N."""

    p: int
    epsilon: int
    precision: int

    def __post_init__(self):
        if self.p < 3 or not isprime(self.p):
            raise ValueError(f"p must be an odd prime, got {self.p}")
        if self.precision < 1:
            raise ValueError(f"precision must be positive, got {self.precision}")
        if legendre_symbol(self.epsilon % self.p, self.p) != -1:
            raise ValueError(f"epsilon={self.epsilon} is not a nonresidue mod {self.p}")

    @classmethod
    def create(cls, p: int, precision: int = 12, epsilon: Optional[int] = None) -> "PrimeContext":
        if p < 3 or not isprime(p):
            raise ValueError(f"p must be an odd prime, got {p}")
        if epsilon is None:
            epsilon = least_nonresidue(p)
        return cls(p, epsilon, precision)

    @property
    def modulus(self) -> int:
        return self.p ** self.precision

    def with_precision(self, precision: int) -> "PrimeContext":
        return PrimeContext(self.p, self.epsilon, precision)


@dataclass(frozen=True)
class PrecisionFlag:
    """Valuation answer meaning "at least ``bound``": the value vanished at working precision."""

    bound: int

    def __str__(self) -> str:
        return f">={self.bound}"


Valuation = Union[int, PrecisionFlag]


# raw (a, b) pairs, used by the enumeration kernels

def pair_mul(x: Pair, y: Pair, epsilon: int, modulus: int) -> Pair:
    a1, b1 = x
    a2, b2 = y
    return ((a1 * a2 + epsilon * b1 * b2) % modulus, (a1 * b2 + a2 * b1) % modulus)


def pair_conj(x: Pair, modulus: int) -> Pair:
    return (x[0] % modulus, (-x[1]) % modulus)


def pair_scale(x: Pair, c: int, modulus: int) -> Pair:
    return ((x[0] * c) % modulus, (x[1] * c) % modulus)


def pair_inverse(x: Pair, epsilon: int, modulus: int) -> Pair:
    """Inverse of a unit a + b*delta modulo ``modulus``."""
    a, b = x
    inv = pow((a * a - epsilon * b * b) % modulus, -1, modulus)
    return ((a * inv) % modulus, (-b * inv) % modulus)


def int_valuation(n: int, p: int, cap: int) -> int:
    """v_p(n) capped at ``cap`` (n == 0 gives ``cap``)."""
    if n == 0:
        return cap
    return min(cap, multiplicity(p, abs(n)))


def pair_valuation(x: Pair, p: int, cap: int) -> int:
    return min(int_valuation(x[0], p, cap), int_valuation(x[1], p, cap))


def fraction_valuation(q: Union[Fraction, int], p: int) -> int:
    """Exact p-adic valuation of a nonzero rational."""
    q = Fraction(q)
    if q == 0:
        raise ValueError("valuation of zero is infinite")
    return multiplicity(p, abs(q.numerator)) - multiplicity(p, q.denominator)


@dataclass(frozen=True)
class OkElement:
    """a + b*delta in O_k / p^N."""

    ctx: PrimeContext
    a: int = 0
    b: int = 0

    def __post_init__(self):
        m = self.ctx.modulus
        object.__setattr__(self, "a", self.a % m)
        object.__setattr__(self, "b", self.b % m)

    @classmethod
    def from_int(cls, ctx: PrimeContext, n: int) -> "OkElement":
        return cls(ctx, n, 0)

    @classmethod
    def zero(cls, ctx: PrimeContext) -> "OkElement":
        return cls(ctx, 0, 0)

    @classmethod
    def one(cls, ctx: PrimeContext) -> "OkElement":
        return cls(ctx, 1, 0)

    @classmethod
    def delta(cls, ctx: PrimeContext) -> "OkElement":
        return cls(ctx, 0, 1)

    @classmethod
    def from_json(cls, ctx: PrimeContext, data) -> "OkElement":
        if isinstance(data, int):
            return cls(ctx, data, 0)
        return cls(ctx, int(data["a"]), int(data.get("b", 0)))

    def to_json(self) -> dict:
        return {"a": self.a, "b": self.b}

    @property
    def pair(self) -> Pair:
        return (self.a, self.b)

    def conj(self) -> "OkElement":
        return OkElement(self.ctx, self.a, -self.b)

    def norm(self) -> int:
        return (self.a * self.a - self.ctx.epsilon * self.b * self.b) % self.ctx.modulus

    def valuation(self) -> Valuation:
        return ok_valuation(self)

    def is_zero(self) -> bool:
        return self.a == 0 and self.b == 0

    def __add__(self, other: "OkElement") -> "OkElement":
        _check_same(self, other)
        return OkElement(self.ctx, self.a + other.a, self.b + other.b)

    def __sub__(self, other: "OkElement") -> "OkElement":
        _check_same(self, other)
        return OkElement(self.ctx, self.a - other.a, self.b - other.b)

    def __neg__(self) -> "OkElement":
        return OkElement(self.ctx, -self.a, -self.b)

    def __mul__(self, other) -> "OkElement":
        if isinstance(other, int):
            return OkElement(self.ctx, self.a * other, self.b * other)
        return ok_mul(self, other)

    __rmul__ = __mul__

    def __str__(self) -> str:
        if self.b == 0:
            return str(self.a)
        return f"{self.a}+{self.b}d"


def _check_same(x, y) -> None:
    if x.ctx != y.ctx:
        raise ContextMismatchError(f"{x.ctx} != {y.ctx}")


def ok_mul(x: OkElement, y: OkElement) -> OkElement:
    _check_same(x, y)
    a, b = pair_mul(x.pair, y.pair, x.ctx.epsilon, x.ctx.modulus)
    return OkElement(x.ctx, a, b)


def ok_valuation(x: OkElement) -> Valuation:
    """min(v_p(a), v_p(b)), or a :class:`PrecisionFlag` when x vanishes mod p^N."""
    n = x.ctx.precision
    v = pair_valuation(x.pair, x.ctx.p, n)
    if v >= n:
        return PrecisionFlag(n)
    return v


def require_finite(v: Valuation, what: str = "valuation") -> int:
    if isinstance(v, PrecisionFlag):
        raise PrecisionError(f"{what} is {v}; increase the precision")
    return v


def ok_inverse(x: OkElement) -> OkElement:
    if ok_valuation(x) != 0:
        raise ValueError(f"{x} is not a unit")
    inv = pow(x.norm(), -1, x.ctx.modulus)
    return x.conj() * inv


def ok_divide_by_p_power(x: OkElement, v: int) -> OkElement:
    """Exact quotient x / p^v of the integer representatives."""
    pv = x.ctx.p ** v
    if x.a % pv or x.b % pv:
        raise ValueError(f"{x} is not divisible by p^{v}")
    return OkElement(x.ctx, x.a // pv, x.b // pv)


def norm_preimage(c: int, ctx: PrimeContext) -> OkElement:
    """A unit u of O_k with N(u) = c mod p^N, for a unit c of Z_p."""
    p, m = ctx.p, ctx.modulus
    c %= m
    if c % p == 0:
        raise ValueError(f"{c} is not a p-adic unit")
    for b in range(p):
        t = (c + ctx.epsilon * b * b) % m
        if t % p == 0 or legendre_symbol(t % p, p) != 1:
            continue
        a = sqrt_mod(t, m)
        if a is not None:
            return OkElement(ctx, int(a), b)
    # the norm map on units is onto, so this is unreachable for valid input
    raise PrecisionError(f"no norm preimage for {c} mod {m}")


@dataclass(frozen=True)
class QuatElement:
    """alpha + beta*Pi in O_D, with Pi^2 = p and Pi*g = conj(g)*Pi."""

    alpha: OkElement
    beta: OkElement

    def __post_init__(self):
        _check_same(self.alpha, self.beta)

    @property
    def ctx(self) -> PrimeContext:
        return self.alpha.ctx

    @classmethod
    def from_ok(cls, x: OkElement) -> "QuatElement":
        return cls(x, OkElement.zero(x.ctx))

    @classmethod
    def pi(cls, ctx: PrimeContext) -> "QuatElement":
        return cls(OkElement.zero(ctx), OkElement.one(ctx))

    def valuation(self) -> Valuation:
        return quat_valuation(self)

    def __add__(self, other: "QuatElement") -> "QuatElement":
        return QuatElement(self.alpha + other.alpha, self.beta + other.beta)

    def __mul__(self, other: "QuatElement") -> "QuatElement":
        return quat_mul(self, other)

    def to_json(self) -> dict:
        return {"alpha": self.alpha.to_json(), "beta": self.beta.to_json()}


def quat_mul(x: QuatElement, y: QuatElement) -> QuatElement:
    _check_same(x.alpha, y.alpha)
    p = x.ctx.p
    alpha = x.alpha * y.alpha + (x.beta * y.beta.conj()) * p
    beta = x.alpha * y.beta + x.beta * y.alpha.conj()
    return QuatElement(alpha, beta)


def quat_valuation(x: QuatElement) -> Valuation:
    """v_D = min(2 v(alpha), 2 v(beta) + 1); flagged at 2N when both parts vanish."""
    candidates = []
    va = ok_valuation(x.alpha)
    vb = ok_valuation(x.beta)
    if not isinstance(va, PrecisionFlag):
        candidates.append(2 * va)
    if not isinstance(vb, PrecisionFlag):
        candidates.append(2 * vb + 1)
    if not candidates:
        return PrecisionFlag(2 * x.ctx.precision)
    return min(candidates)


Matrix = List[List[OkElement]]


def identity(ctx: PrimeContext, n: int) -> Matrix:
    return [[OkElement(ctx, 1 if i == j else 0, 0) for j in range(n)] for i in range(n)]


def mat_mul(a: Sequence[Sequence[OkElement]], b: Sequence[Sequence[OkElement]]) -> Matrix:
    if not a or not b:
        return []
    ctx = a[0][0].ctx
    inner = len(b)
    out = []
    for row in a:
        out_row = []
        for j in range(len(b[0])):
            acc = OkElement.zero(ctx)
            for k in range(inner):
                acc = acc + row[k] * b[k][j]
            out_row.append(acc)
        out.append(out_row)
    return out


def mat_transpose(a: Sequence[Sequence[OkElement]]) -> Matrix:
    return [list(col) for col in zip(*a)]


def mat_conj(a: Sequence[Sequence[OkElement]]) -> Matrix:
    return [[x.conj() for x in row] for row in a]


def chain_ring_kernel(matrix: Sequence[Sequence[OkElement]], ncols: int, ctx: PrimeContext) -> Matrix:
    """Generators of {x in R^ncols : M x = 0} over the chain ring R = O_k / p^N.

    M is brought to Smith form by row and column operations; the column
    transform Q is tracked and the kernel is read off column by column.
    """
    n = ctx.precision
    m = [list(row) for row in matrix]
    rows = len(m)
    q = identity(ctx, ncols)
    pivots: List[int] = []
    t = 0
    while t < min(rows, ncols):
        best = None
        for i in range(t, rows):
            for j in range(t, ncols):
                v = ok_valuation(m[i][j])
                if isinstance(v, PrecisionFlag):
                    continue
                if best is None or v < best[0]:
                    best = (v, i, j)
        if best is None:
            break
        v, i, j = best
        m[t], m[i] = m[i], m[t]
        if j != t:
            for row in m:
                row[t], row[j] = row[j], row[t]
            for row in q:
                row[t], row[j] = row[j], row[t]
        inv = ok_inverse(ok_divide_by_p_power(m[t][t], v))
        for row in m:
            row[t] = row[t] * inv
        for row in q:
            row[t] = row[t] * inv
        for r in range(rows):
            if r != t and not m[r][t].is_zero():
                f = ok_divide_by_p_power(m[r][t], v)
                m[r] = [m[r][c] - f * m[t][c] for c in range(ncols)]
        for c in range(ncols):
            if c != t and not m[t][c].is_zero():
                f = ok_divide_by_p_power(m[t][c], v)
                for row in m:
                    row[c] = row[c] - row[t] * f
                for row in q:
                    row[c] = row[c] - row[t] * f
        pivots.append(v)
        t += 1
    gens = []
    for c in range(ncols):
        if c < len(pivots):
            scale = ctx.p ** (n - pivots[c])
            gens.append([q[r][c] * scale for r in range(ncols)])
        else:
            gens.append([q[r][c] for r in range(ncols)])
    return gens


def _to_fraction(c) -> Fraction:
    return Fraction(int(c.p), int(c.q))


@dataclass(frozen=True)
class RationalPoly:
    """Polynomial in X with exact rational coefficients; index i holds the X^i coefficient."""

    coefficients: Tuple[Fraction, ...]

    def __post_init__(self):
        coeffs = [Fraction(c) for c in self.coefficients]
        while coeffs and coeffs[-1] == 0:
            coeffs.pop()
        object.__setattr__(self, "coefficients", tuple(coeffs))

    @classmethod
    def constant(cls, c) -> "RationalPoly":
        return cls((Fraction(c),))

    @classmethod
    def linear(cls, c0, c1) -> "RationalPoly":
        return cls((Fraction(c0), Fraction(c1)))

    @classmethod
    def from_sympy(cls, poly) -> "RationalPoly":
        poly = Poly(poly, X, domain=QQ)
        return cls(tuple(_to_fraction(c) for c in reversed(poly.all_coeffs())))

    @classmethod
    def interpolate(cls, points: Iterable[Tuple[Fraction, Fraction]]) -> "RationalPoly":
        data = [(Rational(x.numerator, x.denominator), Rational(y.numerator, y.denominator))
                for x, y in ((Fraction(a), Fraction(b)) for a, b in points)]
        return cls.from_sympy(interpolate(data, X))

    def to_sympy(self) -> Poly:
        rep = [Rational(c.numerator, c.denominator) for c in reversed(self.coefficients)] or [0]
        return Poly.from_list(rep, X, domain=QQ)

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def __add__(self, other: "RationalPoly") -> "RationalPoly":
        size = max(len(self.coefficients), len(other.coefficients))
        a = self.coefficients + (Fraction(0),) * (size - len(self.coefficients))
        b = other.coefficients + (Fraction(0),) * (size - len(other.coefficients))
        return RationalPoly(tuple(x + y for x, y in zip(a, b)))

    def __neg__(self) -> "RationalPoly":
        return RationalPoly(tuple(-c for c in self.coefficients))

    def __sub__(self, other: "RationalPoly") -> "RationalPoly":
        return self + (-other)

    def __mul__(self, other: "RationalPoly") -> "RationalPoly":
        return RationalPoly.from_sympy(self.to_sympy() * other.to_sympy())

    def derivative(self) -> "RationalPoly":
        return RationalPoly.from_sympy(self.to_sympy().diff(X))

    def __call__(self, x) -> Fraction:
        x = Fraction(x)
        acc = Fraction(0)
        for c in reversed(self.coefficients):
            acc = acc * x + c
        return acc

    def to_json(self) -> List[str]:
        return [str(c) for c in self.coefficients]


Series = Dict[int, Fraction]
_FrozenSeries = Tuple[Tuple[int, Fraction], ...]


def _freeze(series: Series) -> _FrozenSeries:
    return tuple(sorted((d, c) for d, c in series.items() if c != 0))


def series_mul(f: Series, g: Series, t_max: int) -> Tuple[Series, int]:
    """Product truncated below t_max, with the number of dropped terms."""
    out: Series = {}
    dropped = 0
    for d1, c1 in f.items():
        for d2, c2 in g.items():
            d = d1 + d2
            if d >= t_max:
                dropped += 1
                continue
            out[d] = out.get(d, Fraction(0)) + c1 * c2
    return {d: c for d, c in out.items() if c != 0}, dropped


def series_add(f: Series, g: Series) -> Series:
    out = dict(f)
    for d, c in g.items():
        out[d] = out.get(d, Fraction(0)) + c
    return {d: c for d, c in out.items() if c != 0}


@dataclass(frozen=True)
class TruncatedSeriesMatrix:
    """2x2 matrix of polynomials in t of degree < t_max with rational coefficients.

    ``truncated`` counts the monomials of degree >= t_max dropped while this
    matrix was produced; it does not take part in equality.
    """

    entries: Tuple[Tuple[_FrozenSeries, _FrozenSeries], Tuple[_FrozenSeries, _FrozenSeries]]
    t_max: int
    truncated: int = field(default=0, compare=False)

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[Dict[int, Union[int, Fraction]]]], t_max: int,
                  truncated: int = 0) -> "TruncatedSeriesMatrix":
        dropped = truncated
        frozen = []
        for row in rows:
            frozen_row = []
            for series in row:
                kept = {}
                for d, c in series.items():
                    if d >= t_max:
                        dropped += 1
                    elif c != 0:
                        kept[d] = Fraction(c)
                frozen_row.append(_freeze(kept))
            frozen.append(tuple(frozen_row))
        return cls(tuple(frozen), t_max, dropped)

    @classmethod
    def constant(cls, rows: Sequence[Sequence[Union[int, Fraction]]], t_max: int) -> "TruncatedSeriesMatrix":
        return cls.from_rows([[{0: c} if c else {} for c in row] for row in rows], t_max)

    def entry(self, i: int, j: int) -> Series:
        return dict(self.entries[i][j])

    def frobenius_twist(self, p: int) -> "TruncatedSeriesMatrix":
        """Substitute t -> t^p; coefficients are left fixed."""
        rows = [[{d * p: c for d, c in self.entries[i][j]} for j in range(2)] for i in range(2)]
        return TruncatedSeriesMatrix.from_rows(rows, self.t_max, self.truncated)

    def __matmul__(self, other: "TruncatedSeriesMatrix") -> "TruncatedSeriesMatrix":
        t_max = min(self.t_max, other.t_max)
        dropped = self.truncated + other.truncated
        rows = []
        for i in range(2):
            row = []
            for j in range(2):
                acc: Series = {}
                for k in range(2):
                    prod, lost = series_mul(self.entry(i, k), other.entry(k, j), t_max)
                    dropped += lost
                    acc = series_add(acc, prod)
                row.append(acc)
            rows.append(row)
        return TruncatedSeriesMatrix.from_rows(rows, t_max, dropped)

    def min_nonintegral_degree(self, p: int) -> Optional[int]:
        """Smallest t-degree carrying a coefficient of negative p-valuation."""
        best = None
        for row in self.entries:
            for series in row:
                for d, c in series:
                    if fraction_valuation(c, p) < 0 and (best is None or d < best):
                        best = d
        return best

    def has_p_power_denominators(self, p: int) -> bool:
        for row in self.entries:
            for series in row:
                for _, c in series:
                    den = c.denominator
                    if den != p ** multiplicity(p, den):
                        return False
        return True

    def to_json(self) -> List[List[Dict[str, Dict[str, int]]]]:
        return [[{str(d): {"num": c.numerator, "den": c.denominator} for d, c in series}
                 for series in row] for row in self.entries]
