"""Hermitian matrices over O_k, Jordan decomposition and the invariants read off it."""
import json
import logging
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, Optional, Sequence, Tuple, Union

from .errors import ContextMismatchError, ParityError, PrecisionError, ProfileShapeError, SingularMatrixError
from .padic_core import (
    Matrix,
    OkElement,
    PrecisionFlag,
    PrimeContext,
    identity,
    mat_conj,
    mat_mul,
    mat_transpose,
    norm_preimage,
    ok_divide_by_p_power,
    ok_valuation,
)

_LOG = logging.getLogger(__name__)

EntryLike = Union[int, Tuple[int, int], Dict[str, int], OkElement]


def _as_element(ctx: PrimeContext, x: EntryLike) -> OkElement:
    if isinstance(x, OkElement):
        return x
    if isinstance(x, tuple):
        return OkElement(ctx, x[0], x[1])
    return OkElement.from_json(ctx, x)


@dataclass(frozen=True)
class HermMatrix:
    """p^scale * entries, with entries a hermitian matrix over O_k / p^N.

    ``scale`` carries half-integral rescalings such as p^(2i-j) T with 2i < j
    without putting denominators into the entries.
    """

    ctx: PrimeContext
    entries: Tuple[Tuple[OkElement, ...], ...]
    scale: int = 0

    def __post_init__(self):
        rows = tuple(tuple(row) for row in self.entries)
        object.__setattr__(self, "entries", rows)
        n = len(rows)
        for i, row in enumerate(rows):
            if len(row) != n:
                raise ValueError("hermitian matrix must be square")
            for j, x in enumerate(row):
                if x.ctx != self.ctx:
                    raise ContextMismatchError(f"entry ({i},{j}) lives over {x.ctx}")
                if rows[j][i] != x.conj():
                    raise ValueError(f"entry ({i},{j}) breaks hermitian symmetry")

    @property
    def n(self) -> int:
        return len(self.entries)

    @classmethod
    def from_rows(cls, ctx: PrimeContext, rows: Sequence[Sequence[EntryLike]], scale: int = 0) -> "HermMatrix":
        return cls(ctx, tuple(tuple(_as_element(ctx, x) for x in row) for row in rows), scale)

    @classmethod
    def diagonal(cls, ctx: PrimeContext, values: Sequence[int], scale: int = 0) -> "HermMatrix":
        n = len(values)
        rows = [[values[i] if i == j else 0 for j in range(n)] for i in range(n)]
        return cls.from_rows(ctx, rows, scale)

    @classmethod
    def from_terms(cls, ctx: PrimeContext, terms: Sequence[Tuple[int, int]]) -> "HermMatrix":
        """diag(u_1 p^e_1, ...) from (unit, exponent) pairs; negative exponents go to ``scale``."""
        if not terms:
            return cls(ctx, (), 0)
        scale = min(0, min(e for _, e in terms))
        return cls.diagonal(ctx, [u * ctx.p ** (e - scale) for u, e in terms], scale)

    @classmethod
    def from_exponents(cls, ctx: PrimeContext, exponents: Sequence[int]) -> "HermMatrix":
        return cls.from_terms(ctx, [(1, e) for e in exponents])

    @classmethod
    def identity(cls, ctx: PrimeContext, n: int) -> "HermMatrix":
        return cls.diagonal(ctx, [1] * n)

    @classmethod
    def from_json(cls, data: dict, epsilon: Optional[int] = None, precision: Optional[int] = None) -> "HermMatrix":
        ctx = PrimeContext.create(int(data["p"]), precision or int(data.get("precision", 12)),
                                  epsilon if epsilon is not None else data.get("epsilon"))
        return cls.from_rows(ctx, data["entries"], int(data.get("scale", 0)))

    @classmethod
    def load(cls, path: Path, epsilon: Optional[int] = None, precision: Optional[int] = None) -> "HermMatrix":
        with Path(path).open("r", encoding="utf-8") as f:
            return cls.from_json(json.load(f), epsilon=epsilon, precision=precision)

    def to_json(self) -> dict:
        return {
            "p": self.ctx.p,
            "precision": self.ctx.precision,
            "epsilon": self.ctx.epsilon,
            "scale": self.scale,
            "entries": [[x.to_json() for x in row] for row in self.entries],
        }

    def is_diagonal(self) -> bool:
        return all(self.entries[i][j].is_zero() for i in range(self.n) for j in range(self.n) if i != j)

    def with_precision(self, precision: int) -> "HermMatrix":
        ctx = self.ctx.with_precision(precision)
        return HermMatrix(ctx, tuple(tuple(OkElement(ctx, x.a, x.b) for x in row) for row in self.entries),
                          self.scale)

    def min_entry_valuation(self) -> Optional[int]:
        vals = [ok_valuation(x) for row in self.entries for x in row]
        finite = [v for v in vals if not isinstance(v, PrecisionFlag)]
        return min(finite) if finite else None

    def is_integral(self) -> bool:
        if self.scale >= 0:
            return True
        v = self.min_entry_valuation()
        return v is None or v + self.scale >= 0

    def integral(self) -> "HermMatrix":
        """The same matrix with ``scale`` folded into the entries."""
        if self.scale >= 0:
            factor = self.ctx.p ** self.scale
            return HermMatrix(self.ctx, tuple(tuple(x * factor for x in row) for row in self.entries), 0)
        if not self.is_integral():
            raise ValueError("matrix is not integral")
        shift = -self.scale
        return HermMatrix(self.ctx, tuple(tuple(ok_divide_by_p_power(x, shift) for x in row)
                                          for row in self.entries), 0)

    def scaled(self, k: int) -> "HermMatrix":
        return HermMatrix(self.ctx, self.entries, self.scale + k)


@dataclass(frozen=True)
class JordanProfile:
    """Multiplicities n_i of the Jordan blocks p^i 1_{n_i}, stored as sorted (i, n_i) pairs."""

    multiplicities: Tuple[Tuple[int, int], ...]

    def __post_init__(self):
        merged: Dict[int, int] = {}
        items = self.multiplicities
        if isinstance(items, dict):
            items = items.items()
        for exponent, count in items:
            if count < 0:
                raise ValueError(f"negative multiplicity for exponent {exponent}")
            merged[int(exponent)] = merged.get(int(exponent), 0) + int(count)
        object.__setattr__(self, "multiplicities", tuple(sorted((e, c) for e, c in merged.items() if c > 0)))

    @classmethod
    def from_exponents(cls, exponents: Iterable[int]) -> "JordanProfile":
        counts: Dict[int, int] = {}
        for e in exponents:
            counts[e] = counts.get(e, 0) + 1
        return cls(tuple(counts.items()))

    @classmethod
    def from_mapping(cls, mapping: Dict[int, int]) -> "JordanProfile":
        return cls(tuple(mapping.items()))

    @property
    def exponents(self) -> Tuple[int, ...]:
        return tuple(e for e, c in self.multiplicities for _ in range(c))

    @property
    def n(self) -> int:
        return sum(c for _, c in self.multiplicities)

    @property
    def m(self) -> int:
        return sum(c for e, c in self.multiplicities if e >= 1)

    @property
    def t0(self) -> int:
        m = self.m
        if m == 0:
            return 1
        return m if m % 2 else m - 1

    @property
    def n_plus_even(self) -> int:
        return sum(c for e, c in self.multiplicities if e >= 2 and e % 2 == 0)

    @property
    def n_plus_odd(self) -> int:
        return sum(c for e, c in self.multiplicities if e >= 3 and e % 2 == 1)

    @property
    def det_valuation(self) -> int:
        return sum(e * c for e, c in self.multiplicities)

    @property
    def weight(self) -> int:
        """Sum of the positive exponents, i.e. the length of D."""
        return sum(e * c for e, c in self.multiplicities if e >= 1)

    def to_json(self) -> Dict[str, int]:
        return {str(e): c for e, c in self.multiplicities}

    def __str__(self) -> str:
        return "{" + ", ".join(f"{e}:{c}" for e, c in self.multiplicities) + "}"


@dataclass(frozen=True)
class GeometricInvariants:
    t0: int
    dim_red: int
    irreducible: bool
    is_point: bool
    parity_ok: bool

    def to_json(self) -> dict:
        return {
            "t0": self.t0,
            "dim_red": self.dim_red,
            "irreducible": self.irreducible,
            "is_point": self.is_point,
            "parity_ok": self.parity_ok,
        }


@dataclass(frozen=True)
class ScaledCycleDatum:
    i: int
    j: int
    T: HermMatrix
    T_tilde: HermMatrix
    empty: bool = False
    reason: str = ""


def _add_multiple(m: Matrix, u: Matrix, i: int, j: int, c: OkElement) -> None:
    """Basis change e_i <- e_i + c e_j applied to the Gram matrix and to U."""
    n = len(m)
    cc = c.conj()
    m[i] = [m[i][k] + c * m[j][k] for k in range(n)]
    for k in range(n):
        m[k][i] = m[k][i] + m[k][j] * cc
    for k in range(n):
        u[k][i] = u[k][i] + u[k][j] * c


def _scale_basis(m: Matrix, u: Matrix, i: int, lam: OkElement) -> None:
    n = len(m)
    lc = lam.conj()
    m[i] = [lam * x for x in m[i]]
    for k in range(n):
        m[k][i] = m[k][i] * lc
    for k in range(n):
        u[k][i] = u[k][i] * lam


def jordan_decompose(T: HermMatrix) -> Tuple[JordanProfile, Matrix]:
    """Return the Jordan profile of T and U with tU T sigma(U) = diag(p^a_1, ..., p^a_n).

    The exponents come out sorted.  ``T.scale`` shifts every exponent.
    Raises :class:`PrecisionError` when a remaining block vanishes mod p^N.
    """
    ctx = T.ctx
    n = T.n
    m = [list(row) for row in T.entries]
    u = identity(ctx, n)
    exponents: Dict[int, int] = {}
    remaining = list(range(n))
    while remaining:
        best = None
        for i in remaining:
            for j in remaining:
                v = ok_valuation(m[i][j])
                if isinstance(v, PrecisionFlag):
                    continue
                if best is None or v < best[0] or (v == best[0] and i == j and best[1] != best[2]):
                    best = (v, i, j)
        if best is None:
            raise PrecisionError(f"block of size {len(remaining)} vanishes mod p^{ctx.precision}")
        v, i, j = best
        if i != j:
            w = ok_divide_by_p_power(m[j][i], v)
            c = OkElement.one(ctx) if w.a % ctx.p else OkElement.delta(ctx)
            _add_multiple(m, u, i, j, c)
        unit = ok_divide_by_p_power(m[i][i], v)
        lam = norm_preimage(pow(unit.a, -1, ctx.modulus), ctx)
        _scale_basis(m, u, i, lam)
        for j in remaining:
            if j != i and not m[j][i].is_zero():
                c = ok_divide_by_p_power(m[j][i], v)
                _add_multiple(m, u, j, i, -c)
        exponents[i] = v
        remaining.remove(i)
    order = sorted(range(n), key=lambda k: (exponents[k], k))
    u_sorted = [[u[r][k] for k in order] for r in range(n)]
    profile = JordanProfile.from_exponents(exponents[k] + T.scale for k in order)
    _LOG.debug("jordan profile %s", profile)
    return profile, u_sorted


def conjugate(T: HermMatrix, U: Sequence[Sequence[OkElement]]) -> HermMatrix:
    """tU T sigma(U)."""
    entries = mat_mul(mat_transpose(U), mat_mul(T.entries, mat_conj(U)))
    return HermMatrix(T.ctx, tuple(tuple(row) for row in entries), T.scale)


def check_decomposition(T: HermMatrix, U: Sequence[Sequence[OkElement]], profile: JordanProfile) -> bool:
    expected = HermMatrix.from_exponents(T.ctx, [e - T.scale for e in profile.exponents])
    return conjugate(HermMatrix(T.ctx, T.entries, 0), U).entries == expected.entries


def profile_of(T: HermMatrix) -> JordanProfile:
    return jordan_decompose(T)[0]


def geometric_invariants(profile: JordanProfile) -> GeometricInvariants:
    t0 = profile.t0
    return GeometricInvariants(
        t0=t0,
        dim_red=(t0 - 1) // 2,
        irreducible=max(profile.n_plus_even, profile.n_plus_odd) <= 1,
        is_point=profile.m <= 2,
        parity_ok=profile.det_valuation % 2 == 1,
    )


def scaled_fundamental(i: int, j: int, T: HermMatrix) -> ScaledCycleDatum:
    try:
        jordan_decompose(T)
    except PrecisionError as exc:
        raise SingularMatrixError(f"fundamental matrix is singular at precision {T.ctx.precision}") from exc
    t_tilde = T.scaled(2 * i - j)
    if T.n % 2 == 1 and j % 2 == 1:
        return ScaledCycleDatum(i, j, T, t_tilde, True, "n and j are both odd")
    if not t_tilde.is_integral():
        return ScaledCycleDatum(i, j, T, t_tilde, True, "scaled fundamental matrix is not integral")
    return ScaledCycleDatum(i, j, T, t_tilde)


def binary_exponents(profile: JordanProfile) -> Tuple[int, int]:
    """(a, b) with a even and b odd for a profile {0: n-2} + {a: 1, b: 1}."""
    exps = sorted(profile.exponents)
    if len(exps) < 2 or any(e != 0 for e in exps[:-2]) or exps[-2] < 0:
        raise ProfileShapeError(f"profile {profile} is not of the form 1_(n-2) + diag(p^a, p^b)")
    x, y = exps[-2], exps[-1]
    if (x + y) % 2 == 0:
        raise ParityError(f"a + b = {x + y} is even")
    return (x, y) if x % 2 == 0 else (y, x)


def reduce_to_binary(T: Union[HermMatrix, JordanProfile]) -> Tuple[int, int]:
    profile = T if isinstance(T, JordanProfile) else profile_of(T)
    return binary_exponents(profile)


def _random_element(ctx: PrimeContext, rng: random.Random) -> OkElement:
    return OkElement(ctx, rng.randrange(ctx.modulus), rng.randrange(ctx.modulus))


def random_unimodular(ctx: PrimeContext, n: int, rng: random.Random) -> Matrix:
    """A random element of GL_n(O_k / p^N) as a product of unitriangular factors and a unit diagonal."""
    lower = identity(ctx, n)
    upper = identity(ctx, n)
    for i in range(n):
        for j in range(n):
            if i > j:
                lower[i][j] = _random_element(ctx, rng)
            elif i < j:
                upper[i][j] = _random_element(ctx, rng)
    diag = identity(ctx, n)
    for i in range(n):
        diag[i][i] = OkElement(ctx, rng.randrange(1, ctx.p), rng.randrange(ctx.modulus))
    return mat_mul(mat_mul(lower, diag), upper)


def random_hermitian(profile: JordanProfile, ctx: PrimeContext, rng: random.Random) -> HermMatrix:
    """tU diag(p^a_i) sigma(U) for a random U."""
    if any(e < 0 for e in profile.exponents):
        raise ValueError("random_hermitian needs an integral profile")
    d = HermMatrix.from_exponents(ctx, profile.exponents)
    return conjugate(d, random_unimodular(ctx, profile.n, rng))
