"""Finite-module model of the stratification: D = pL^v / L, its submodules and GrD.

Vectors of D = (+) O_k / p^(a_i) are tuples of raw (a, b) pairs, coordinate i
reduced mod p^(a_i).  The form is evaluated in the integral scaling
p^A h(x, y) mod p^A with A = max a_i, so h(x, y) lies in O_k exactly when the
scaled value vanishes.
"""
import itertools
import logging
from dataclasses import dataclass
from typing import Iterator, List, Optional, Sequence, Tuple

from .errors import BudgetExceededError, VerificationError
from .hermitian_forms import JordanProfile, geometric_invariants
from .padic_core import (
    OkElement,
    Pair,
    PrimeContext,
    chain_ring_kernel,
    pair_conj,
    pair_inverse,
    pair_mul,
    pair_scale,
    pair_valuation,
)
from .utils import map_shards

_LOG = logging.getLogger(__name__)

Vector = Tuple[Pair, ...]
Row = Tuple[int, int, Vector]

DEFAULT_WEIGHT_BUDGET = 5


@dataclass(frozen=True)
class FiniteHermModule:
    """D = (+) O_k / p^(a_i) with h(x, y) = sum p^(-a_i) x_i conj(y_i) in k / O_k."""

    ctx: PrimeContext
    exponents: Tuple[int, ...]

    @property
    def top(self) -> int:
        return max(self.exponents, default=0)

    @property
    def m(self) -> int:
        return len(self.exponents)

    @property
    def length(self) -> int:
        return sum(self.exponents)

    @property
    def order(self) -> int:
        return self.ctx.p ** (2 * self.length)

    def zero(self) -> Vector:
        return tuple((0, 0) for _ in self.exponents)

    def reduce(self, vec: Sequence[Pair]) -> Vector:
        p = self.ctx.p
        return tuple((x[0] % p ** a, x[1] % p ** a) for x, a in zip(vec, self.exponents))

    def is_zero(self, vec: Vector) -> bool:
        return all(x == (0, 0) for x in vec)

    def scale(self, vec: Vector, c: Pair) -> Vector:
        p, eps = self.ctx.p, self.ctx.epsilon
        return tuple(pair_mul(x, c, eps, p ** a) for x, a in zip(vec, self.exponents))

    def sub(self, x: Vector, y: Vector) -> Vector:
        p = self.ctx.p
        return tuple(((u[0] - v[0]) % p ** a, (u[1] - v[1]) % p ** a)
                     for u, v, a in zip(x, y, self.exponents))

    def form(self, x: Vector, y: Vector) -> Pair:
        """p^A h(x, y) mod p^A."""
        p, eps, top = self.ctx.p, self.ctx.epsilon, self.top
        modulus = p ** top
        acc0, acc1 = 0, 0
        for u, v, a in zip(x, y, self.exponents):
            w = pair_mul(u, pair_conj(v, modulus), eps, modulus)
            f = p ** (top - a)
            acc0 += w[0] * f
            acc1 += w[1] * f
        return (acc0 % modulus, acc1 % modulus)

    def orthogonal_vectors(self, x: Vector, y: Vector) -> bool:
        return self.form(x, y) == (0, 0)

    def elements(self) -> Iterator[Vector]:
        p = self.ctx.p
        coords = [[(s, t) for s in range(p ** a) for t in range(p ** a)] for a in self.exponents]
        return itertools.product(*coords)


@dataclass(frozen=True)
class Submodule:
    """Canonical echelon form: row i has p^e at its pivot, zeros before, and
    later coordinates j reduced mod p^(e_j) (mod p^(a_j) when j has no pivot)."""

    exponents: Tuple[int, ...]
    rows: Tuple[Row, ...]

    @property
    def length(self) -> int:
        """Length as O_k-module, i.e. log_{p^2} of the order."""
        return sum(self.exponents[i] - e for i, e, _ in self.rows)

    @property
    def generators(self) -> List[Vector]:
        return [r for _, _, r in self.rows]

    def pivot_exponents(self) -> Tuple[int, ...]:
        pivots = {i: e for i, e, _ in self.rows}
        return tuple(pivots.get(i, a) for i, a in enumerate(self.exponents))

    def to_json(self) -> dict:
        return {"pivots": [[i, e] for i, e, _ in self.rows],
                "rows": [[list(x) for x in r] for _, _, r in self.rows]}


@dataclass(frozen=True)
class GrDEntry:
    B: Submodule
    B_perp: Submodule
    type: int


@dataclass(frozen=True)
class StratumReport:
    profile: JordanProfile
    m: int
    t0: int
    max_type: int
    maximal_count: int
    entries: int
    irreducible_predicted: bool
    irreducible_observed: bool
    applicable: bool
    status: str

    @property
    def dim(self) -> int:
        return (self.max_type - 1) // 2

    def to_json(self) -> dict:
        return {
            "profile": self.profile.to_json(),
            "m": self.m,
            "t0": self.t0,
            "dim": self.dim,
            "max_type": self.max_type,
            "maximal_vertex_count": self.maximal_count,
            "grd_size": self.entries,
            "irreducible_predicted": self.irreducible_predicted,
            "irreducible_observed": self.irreducible_observed,
            "parity_ok": self.applicable,
            "status": self.status,
        }


def build_D(profile: JordanProfile, ctx: PrimeContext, weight_budget: Optional[int] = DEFAULT_WEIGHT_BUDGET
            ) -> FiniteHermModule:
    if any(e < 0 for e in profile.exponents):
        raise ValueError(f"profile {profile} is not integral")
    if weight_budget is not None and profile.weight > weight_budget:
        raise BudgetExceededError("build_D", profile.weight, weight_budget)
    exponents = tuple(e for e in profile.exponents if e > 0)
    return FiniteHermModule(ctx.with_precision(max(exponents, default=1)), exponents)


def contains(D: FiniteHermModule, S: Submodule, vec: Vector) -> bool:
    p = D.ctx.p
    pivots = {i: (e, r) for i, e, r in S.rows}
    vec = D.reduce(vec)
    for j in range(D.m):
        x = vec[j]
        if x == (0, 0):
            continue
        if j not in pivots:
            return False
        e, r = pivots[j]
        pe = p ** e
        if x[0] % pe or x[1] % pe:
            return False
        vec = D.sub(vec, D.scale(r, (x[0] // pe, x[1] // pe)))
    return True


def is_submodule_of(D: FiniteHermModule, small: Submodule, big: Submodule) -> bool:
    return all(contains(D, big, g) for g in small.generators)


def _back_reduce(D: FiniteHermModule, rows: List[Row]) -> List[Row]:
    p = D.ctx.p
    rows = sorted(rows)
    out: List[Row] = []
    for idx, (i, e, r) in enumerate(rows):
        for j, ej, rj in rows[idx + 1:]:
            pe = p ** ej
            x = r[j]
            q = ((x[0] - x[0] % pe) // pe, (x[1] - x[1] % pe) // pe)
            if q != (0, 0):
                r = D.sub(r, D.scale(rj, q))
        out.append((i, e, r))
    return out


def canonical_submodule(D: FiniteHermModule, generators: Sequence[Sequence[Pair]]) -> Submodule:
    """Canonical echelon form of the submodule spanned by ``generators``."""
    p, eps = D.ctx.p, D.ctx.epsilon
    modulus = p ** D.top if D.exponents else 1
    work = [w for w in (D.reduce(g) for g in generators) if not D.is_zero(w)]
    rows: List[Row] = []
    for i, a in enumerate(D.exponents):
        best = None
        for idx, w in enumerate(work):
            v = pair_valuation(w[i], p, a)
            if v < a and (best is None or v < best[0]):
                best = (v, idx)
        if best is None:
            continue
        v, idx = best
        pv = p ** v
        pivot = work.pop(idx)
        unit = (pivot[i][0] // pv, pivot[i][1] // pv)
        pivot = D.scale(pivot, pair_inverse(unit, eps, modulus))
        rest = []
        for w in work:
            if w[i] != (0, 0):
                w = D.sub(w, D.scale(pivot, (w[i][0] // pv, w[i][1] // pv)))
            rest.append(w)
        rest.append(D.scale(pivot, (p ** (a - v), 0)))
        work = [w for w in rest if not D.is_zero(w)]
        rows.append((i, v, pivot))
    return Submodule(D.exponents, tuple(_back_reduce(D, rows)))


def zero_submodule(D: FiniteHermModule) -> Submodule:
    return Submodule(D.exponents, ())


def whole_module(D: FiniteHermModule) -> Submodule:
    return canonical_submodule(D, [tuple((1, 0) if i == j else (0, 0) for j in range(D.m)) for i in range(D.m)])


def orthogonal(B: Submodule, D: FiniteHermModule) -> Submodule:
    """B^perp = {x : h(x, B) = 0 in k / O_k}."""
    if not D.exponents:
        return zero_submodule(D)
    ctx = D.ctx.with_precision(D.top)
    modulus = ctx.modulus
    matrix = []
    for g in B.generators:
        matrix.append([OkElement(ctx, *pair_scale(pair_conj(g[i], modulus), ctx.p ** (D.top - a), modulus))
                       for i, a in enumerate(D.exponents)])
    kernel = chain_ring_kernel(matrix, D.m, ctx)
    return canonical_submodule(D, [tuple(x.pair for x in col) for col in kernel])


def scale_submodule(D: FiniteHermModule, B: Submodule, c: int) -> Submodule:
    return canonical_submodule(D, [D.scale(g, (c, 0)) for g in B.generators])


def in_grd(D: FiniteHermModule, B: Submodule) -> bool:
    """pB in B^perp in B."""
    perp = orthogonal(B, D)
    return (is_submodule_of(D, scale_submodule(D, B, D.ctx.p), perp)
            and is_submodule_of(D, perp, B))


def duality_involution(B: Submodule, D: FiniteHermModule) -> Submodule:
    """B -> (pB)^perp."""
    return orthogonal(scale_submodule(D, B, D.ctx.p), D)


def _residues(p: int, e: int) -> List[Pair]:
    q = p ** e
    return [(s, t) for s in range(q) for t in range(q)]


def _extend(D: FiniteHermModule, i: int, rows: Tuple[Row, ...]) -> Iterator[Tuple[Row, ...]]:
    """Isotropic submodules whose rows with pivot > i are ``rows``, built downwards from coordinate i."""
    if i < 0:
        yield rows
        return
    p = D.ctx.p
    a = D.exponents[i]
    pivots = {j: e for j, e, _ in rows}
    tail_choices = [_residues(p, pivots.get(j, D.exponents[j])) for j in range(i + 1, D.m)]
    known = Submodule(D.exponents, tuple(sorted(rows)))
    for e in range(a + 1):
        if e == a:
            yield from _extend(D, i - 1, rows)
            continue
        head = ((0, 0),) * i + ((p ** e, 0),)
        for tail in itertools.product(*tail_choices):
            r = head + tail
            if D.form(r, r) != (0, 0):
                continue
            if any(D.form(r, other) != (0, 0) for _, _, other in rows):
                continue
            if not contains(D, known, D.scale(r, (p ** (a - e), 0))):
                continue
            yield from _extend(D, i - 1, rows + ((i, e, r),))


def isotropic_submodules(D: FiniteHermModule, workers: int = 1) -> List[Submodule]:
    """Every C in D with h(C, C) = 0, each exactly once, in canonical form."""
    if not D.exponents:
        return [zero_submodule(D)]
    p = D.ctx.p
    last = D.m - 1
    a = D.exponents[last]

    def _shard(e: int) -> List[Submodule]:
        if e == a:
            found = list(_extend(D, last - 1, ()))
        else:
            r = ((0, 0),) * last + ((p ** e, 0),)
            if D.form(r, r) != (0, 0):
                return []
            found = list(_extend(D, last - 1, ((last, e, r),)))
        return [Submodule(D.exponents, tuple(_back_reduce(D, list(rows)))) for rows in found]

    shards = map_shards(_shard, list(range(a + 1)), workers)
    return [c for shard in shards for c in shard]


def enumerate_grD(D: FiniteHermModule, workers: int = 1, budget: Optional[int] = None) -> List[GrDEntry]:
    """All B with pB in B^perp in B, sorted by decreasing type.

    Enumerates the isotropic C = B^perp with pC^perp in C and returns B = C^perp.
    The type dim B/B^perp is stored in D-coordinates (0 for D = 0).
    """
    if budget is not None and D.order > budget:
        raise BudgetExceededError("enumerate_grD", D.order, budget)
    p = D.ctx.p
    entries = []
    candidates = isotropic_submodules(D, workers)
    for c in candidates:
        b = orthogonal(c, D)
        if all(contains(D, c, D.scale(g, (p, 0))) for g in b.generators):
            entries.append(GrDEntry(b, c, D.length - 2 * c.length))
    _LOG.debug("D=%s: %d isotropic submodules, %d in GrD", D.exponents, len(candidates), len(entries))
    entries.sort(key=lambda x: (-x.type, x.B.rows))
    return entries


def vertex_type(entry: GrDEntry, D: FiniteHermModule) -> int:
    """Type of the vertex lattice attached to B; the unique vertex for D = 0 is superspecial."""
    return entry.type if D.exponents else 1


def verify_stratum_theorems(profile: JordanProfile, ctx: PrimeContext, workers: int = 1,
                            weight_budget: Optional[int] = DEFAULT_WEIGHT_BUDGET) -> StratumReport:
    """Compare maximal vertex type and its multiplicity over GrD with t0 and the irreducibility criterion.

    Profiles with even ord det cannot come from a nonempty cycle; they are
    reported with status SKIPPED.  A discrepancy on an applicable profile
    raises :class:`VerificationError`.
    """
    D = build_D(profile, ctx, weight_budget)
    entries = enumerate_grD(D, workers)
    types = [vertex_type(x, D) for x in entries]
    max_type = max(types)
    maximal = types.count(max_type)
    inv = geometric_invariants(profile)
    applicable = inv.parity_ok
    agrees = max_type == inv.t0 and (maximal == 1) == inv.irreducible
    status = "SKIPPED" if not applicable else ("PASS" if agrees else "FAIL")
    report = StratumReport(profile, profile.m, inv.t0, max_type, maximal, len(entries),
                           inv.irreducible, maximal == 1, applicable, status)
    if status == "FAIL":
        raise VerificationError(f"profile {profile}: max type {max_type} (t0={inv.t0}), "
                                f"{maximal} maximal vertices (irreducible predicted {inv.irreducible})")
    return report


def enumerate_profiles(max_n: int = 4, max_exponent: int = 3, max_weight: int = DEFAULT_WEIGHT_BUDGET
                       ) -> List[JordanProfile]:
    out = []
    for n in range(1, max_n + 1):
        for exps in itertools.combinations_with_replacement(range(max_exponent + 1), n):
            if sum(exps) <= max_weight:
                out.append(JordanProfile.from_exponents(exps))
    return out


def inclusion_poset(D: FiniteHermModule, entries: Sequence[GrDEntry]) -> List[Tuple[int, int]]:
    """Covering pairs (i, j) with B_i strictly inside B_j and nothing in between."""
    n = len(entries)
    below = [[i != j and is_submodule_of(D, entries[i].B, entries[j].B) for j in range(n)] for i in range(n)]
    edges = []
    for i in range(n):
        for j in range(n):
            if below[i][j] and not any(below[i][k] and below[k][j] for k in range(n)):
                edges.append((i, j))
    return edges


def poset_to_dot(entries: Sequence[GrDEntry], edges: Sequence[Tuple[int, int]]) -> str:
    lines = ["digraph GrD {", "  rankdir=BT;"]
    for idx, entry in enumerate(entries):
        lines.append(f'  b{idx} [label="B{idx} t={entry.type} len={entry.B.length}"];')
    for i, j in edges:
        lines.append(f"  b{i} -> b{j};")
    lines.append("}")
    return "\n".join(lines) + "\n"
