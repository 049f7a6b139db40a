"""Hermitian representation densities.

Two exhaustive counters for |{x in M_{m,n}(O_k/p^k) : S[x] = T mod p^k}|:

* the row method (diagonal S): S[x] = sum_i s_i r_i^t conj(r_i) over the rows
  r_i of x, so the count is a convolution of per-row histograms over the
  additive group Herm_n(O_k/p^k) = (Z/q)^(n^2).  All counts are exact int64.
* the column method (any S): columns are chosen left to right and every
  candidate column is filtered against the congruences it shares with the
  columns already fixed.

Closed forms (the Shimura product and Nagaoka's binary polynomial) are exact
RationalPolys evaluated at X = (-p)^(-r).
"""
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import (
    BudgetExceededError,
    ContextMismatchError,
    ParityError,
    PrecisionError,
    SingularMatrixError,
    VerificationError,
)
from .hermitian_forms import HermMatrix, profile_of
from .padic_core import PrimeContext, RationalPoly
from .utils import map_shards

_LOG = logging.getLogger(__name__)

DEFAULT_BUDGET = 10 ** 9
_INT64_LIMIT = 2 ** 63 - 1
_MAX_CELLS = 2 ** 22
_FFT_EXACT_MASS = 2 ** 40
_SHARD_SIZE = 512


@dataclass(frozen=True)
class DensityRequest:
    S: HermMatrix
    T: HermMatrix
    k: int

    def __post_init__(self):
        if self.S.ctx.p != self.T.ctx.p or self.S.ctx.epsilon != self.T.ctx.epsilon:
            raise ContextMismatchError("S and T must share p and epsilon")
        if self.S.n < self.T.n:
            raise ValueError(f"need m >= n, got m={self.S.n}, n={self.T.n}")
        if self.k < 1:
            raise ValueError("k must be positive")

    @property
    def p(self) -> int:
        return self.S.ctx.p

    @property
    def epsilon(self) -> int:
        return self.S.ctx.epsilon

    @property
    def m(self) -> int:
        return self.S.n

    @property
    def n(self) -> int:
        return self.T.n

    @property
    def q(self) -> int:
        return self.p ** self.k

    def with_k(self, k: int) -> "DensityRequest":
        return DensityRequest(self.S, self.T, k)


def _reduced_pairs(M: HermMatrix, k: int) -> List[List[Tuple[int, int]]]:
    if k > M.ctx.precision:
        raise PrecisionError(f"k={k} exceeds the matrix precision {M.ctx.precision}")
    q = M.ctx.p ** k
    return [[(x.a % q, x.b % q) for x in row] for row in M.integral().entries]


def _herm_code(T: Sequence[Sequence[Tuple[int, int]]], q: int) -> List[int]:
    """Digits of T in the (Z/q)^(n^2) encoding: diagonal real parts, then (re, im) above the diagonal."""
    n = len(T)
    digits = [T[j][j][0] for j in range(n)]
    for j in range(n):
        for l in range(j + 1, n):
            digits.extend([T[j][l][0], T[j][l][1]])
    return [d % q for d in digits]


def _vector_components(q: int, length: int) -> Tuple[List[np.ndarray], List[np.ndarray]]:
    """a- and b-components of every vector of (O_k/q)^length, indexed by one flat arange."""
    idx = np.arange(q ** (2 * length), dtype=np.int64)
    comps = [(idx // q ** t) % q for t in range(2 * length)]
    return comps[0::2], comps[1::2]


def _row_histogram(s: int, n: int, q: int, eps: int) -> np.ndarray:
    a, b = _vector_components(q, n)
    code = np.zeros_like(a[0])
    mult = 1
    for j in range(n):
        code += ((a[j] * a[j] - eps * b[j] * b[j]) * s % q) * mult
        mult *= q
    for j in range(n):
        for l in range(j + 1, n):
            re = (a[j] * a[l] - eps * b[j] * b[l]) * s % q
            im = (b[j] * a[l] - a[j] * b[l]) * s % q
            code += re * mult
            mult *= q
            code += im * mult
            mult *= q
    return np.bincount(code, minlength=q ** (n * n))


def _axis_shifts(flat: int, q: int, dims: int) -> Tuple[int, ...]:
    # C-order reshape: axis 0 carries the most significant digit
    return tuple((flat // q ** (dims - 1 - axis)) % q for axis in range(dims))


def _fft_convolve(h1: np.ndarray, h2: np.ndarray) -> Optional[np.ndarray]:
    """Circular convolution over (Z/q)^dims through rfftn, or None when it does not round exactly."""
    axes = tuple(range(h1.ndim))
    raw = np.fft.irfftn(np.fft.rfftn(h1, axes=axes) * np.fft.rfftn(h2, axes=axes), s=h1.shape, axes=axes)
    out = np.rint(raw).astype(np.int64)
    if float(np.max(np.abs(raw - out))) > 0.25 or int(out.sum()) != int(h1.sum()) * int(h2.sum()):
        return None
    return out


def _shift_convolve(h1: np.ndarray, h2: np.ndarray, q: int, workers: int) -> np.ndarray:
    dims = h1.ndim
    axes = tuple(range(dims))
    flat1 = h1.ravel()
    support = np.flatnonzero(flat1)
    chunks = [support[i:i + _SHARD_SIZE] for i in range(0, len(support), _SHARD_SIZE)]

    def _shard(chunk: np.ndarray) -> np.ndarray:
        local = np.zeros_like(h2)
        for g in chunk:
            local += flat1[g] * np.roll(h2, _axis_shifts(int(g), q, dims), axis=axes)
        return local

    out = np.zeros_like(h2)
    for part in map_shards(_shard, chunks, workers):
        out += part
    return out


def _convolve(h1: np.ndarray, h2: np.ndarray, q: int, workers: int) -> np.ndarray:
    if int(h1.sum()) * int(h2.sum()) <= _FFT_EXACT_MASS:
        out = _fft_convolve(h1, h2)
        if out is not None:
            return out
        _LOG.warning("fft convolution did not round to integers; using exact shifts")
    return _shift_convolve(h1, h2, q, workers)


def _convolution_estimate(hists: Sequence[np.ndarray], cells: int) -> int:
    """Work of folding hists[:-1] into one histogram, step by step as ``_convolve`` will."""
    fft_cost = 3 * cells * max(1, cells.bit_length())
    estimate = 0
    mass = int(hists[0].sum())
    support = int(np.count_nonzero(hists[0]))
    for h in hists[1:-1]:
        mass *= int(h.sum())
        estimate += fft_cost if mass <= _FFT_EXACT_MASS else support * cells
        support = cells
    return estimate


def _count_rows(req: DensityRequest, budget: Optional[int], workers: int) -> int:
    m, n, q, eps = req.m, req.n, req.q, req.epsilon
    cells = q ** (n * n)
    if cells > _MAX_CELLS:
        raise BudgetExceededError("row histogram cells", cells, _MAX_CELLS, limit="memory cap")
    if q ** (2 * n) > _MAX_CELLS:
        raise BudgetExceededError("row vector table", q ** (2 * n), _MAX_CELLS, limit="memory cap")
    if q ** (2 * n * m) > _INT64_LIMIT:
        raise BudgetExceededError("int64 count range", q ** (2 * n * m), _INT64_LIMIT, limit="int64 limit")
    scan = m * q ** (2 * n)
    if budget is not None and scan > budget:
        raise BudgetExceededError("row histograms", scan, budget)
    s_diag = [row[i][0] for i, row in enumerate(_reduced_pairs(req.S, req.k))]
    target = _herm_code(_reduced_pairs(req.T, req.k), q)
    cache = {}
    hists = []
    for s in s_diag:
        if s not in cache:
            cache[s] = _row_histogram(s, n, q, eps)
        hists.append(cache[s])
    dims = n * n
    shape = (q,) * dims
    if m == 1:
        flat = sum(d * q ** t for t, d in enumerate(target))
        return int(hists[0][flat])
    if m > 2:
        estimate = scan + _convolution_estimate(hists, cells)
        if budget is not None and estimate > budget:
            raise BudgetExceededError("row convolution", estimate, budget)
        _LOG.debug("row method m=%d n=%d q=%d: estimated %d operations", m, n, q, estimate)
    acc = hists[0].reshape(shape)
    for h in hists[1:-1]:
        acc = _convolve(acc, h.reshape(shape), q, workers)
    # target digits are little-endian, so axis a holds digit dims-1-a
    idxs = [(target[dims - 1 - axis] - np.arange(q)) % q for axis in range(dims)]
    reflected = hists[-1].reshape(shape)[np.ix_(*idxs)]
    return int(np.sum(acc * reflected))


def _count_columns(req: DensityRequest, budget: Optional[int], workers: int) -> int:
    m, n, q, eps = req.m, req.n, req.q, req.epsilon
    S = _reduced_pairs(req.S, req.k)
    T = _reduced_pairs(req.T, req.k)
    size = q ** (2 * m)
    if size > _MAX_CELLS:
        raise BudgetExceededError("column vector table", size, _MAX_CELLS, limit="memory cap")
    if budget is not None and size * m > budget:
        raise BudgetExceededError("column vectors", size * m, budget)
    a, b = _vector_components(q, m)

    def _apply(v_a: Sequence, v_b: Sequence) -> Tuple[list, list]:
        """S conj(v) componentwise."""
        out_a, out_b = [], []
        for i in range(m):
            ra, rb = 0, 0
            for l in range(m):
                sa, sb = S[i][l]
                ra = ra + sa * v_a[l] - eps * sb * v_b[l]
                rb = rb + sb * v_a[l] - sa * v_b[l]
            out_a.append(ra % q)
            out_b.append(rb % q)
        return out_a, out_b

    sv_a, sv_b = _apply(a, b)
    norm_re = sum(a[i] * sv_a[i] + eps * b[i] * sv_b[i] for i in range(m)) % q
    norm_im = sum(a[i] * sv_b[i] + b[i] * sv_a[i] for i in range(m)) % q
    buckets = []
    for c in range(n):
        buckets.append(np.flatnonzero((norm_re == T[c][c][0]) & (norm_im == T[c][c][1])))
    estimate = size * m
    depth = 1
    for c in range(1, n):
        depth *= max(1, len(buckets[c - 1]) // q ** (2 * (c - 1)))
        estimate += depth * len(buckets[c])
    if budget is not None and estimate > budget:
        raise BudgetExceededError("column enumeration", estimate, budget)
    _LOG.debug("column method m=%d n=%d q=%d: estimated %d operations", m, n, q, estimate)
    cand_a = [np.stack([a[i][buckets[c]] for i in range(m)]) if len(buckets[c]) else None for c in range(n)]
    cand_b = [np.stack([b[i][buckets[c]] for i in range(m)]) if len(buckets[c]) else None for c in range(n)]

    def _extend(c: int, chosen: List[Tuple[List[int], List[int]]]) -> int:
        if cand_a[c] is None:
            return 0
        ca, cb = cand_a[c], cand_b[c]
        mask = np.ones(ca.shape[1], dtype=bool)
        for j, (xa, xb) in enumerate(chosen):
            ya, yb = _apply(xa, xb)
            re = sum(ca[i] * ya[i] + eps * cb[i] * yb[i] for i in range(m)) % q
            im = sum(ca[i] * yb[i] + cb[i] * ya[i] for i in range(m)) % q
            mask &= (re == T[c][j][0]) & (im == T[c][j][1])
        if c == n - 1:
            return int(np.count_nonzero(mask))
        total = 0
        for col in np.flatnonzero(mask):
            vec = ([int(ca[i][col]) for i in range(m)], [int(cb[i][col]) for i in range(m)])
            total += _extend(c + 1, chosen + [vec])
        return total

    if n == 1:
        return len(buckets[0])
    first = range(len(buckets[0]))
    shards = [list(first[i:i + _SHARD_SIZE]) for i in range(0, len(buckets[0]), _SHARD_SIZE)]

    def _shard(cols: List[int]) -> int:
        total = 0
        for col in cols:
            vec = ([int(cand_a[0][i][col]) for i in range(m)], [int(cand_b[0][i][col]) for i in range(m)])
            total += _extend(1, [vec])
        return total

    return sum(map_shards(_shard, shards, workers))


def brute_count(req: DensityRequest, budget: Optional[int] = DEFAULT_BUDGET, workers: int = 1,
                method: str = "auto") -> int:
    """Exact |{x in M_{m,n}(O_k/p^k) : S[x] = T mod p^k}|.

    ``method`` is ``rows`` (diagonal S only), ``columns`` or ``auto``.
    """
    if method not in ("auto", "rows", "columns"):
        raise ValueError(f"unknown counting method {method!r}")
    if method == "rows" and not req.S.is_diagonal():
        raise ValueError("the row method needs a diagonal S")
    if method == "auto":
        if req.S.is_diagonal() and req.q ** (req.n * req.n) <= _MAX_CELLS:
            try:
                return _count_rows(req, budget, workers)
            except BudgetExceededError as exc:
                _LOG.debug("row method refused (%s); trying columns", exc)
        return _count_columns(req, budget, workers)
    if method == "rows":
        return _count_rows(req, budget, workers)
    return _count_columns(req, budget, workers)


def ell(T: HermMatrix) -> int:
    """Smallest l >= 0 with p^l T^-1 integral, i.e. the largest Jordan exponent."""
    try:
        profile = profile_of(T)
    except PrecisionError as exc:
        raise SingularMatrixError("T is singular at working precision") from exc
    return max(0, max(profile.exponents, default=0))


def normalization(req: DensityRequest) -> Fraction:
    return Fraction(1, req.p ** (req.k * req.n * (2 * req.m - req.n)))


def density_bruteforce(req: DensityRequest, budget: Optional[int] = DEFAULT_BUDGET, workers: int = 1,
                       method: str = "auto", check_stability: bool = True) -> Fraction:
    """(p^-k)^(n(2m-n)) * brute_count, with a stabilization check at k+1 when the budget allows."""
    level = ell(req.T)
    if req.k <= level:
        raise ValueError(f"k={req.k} must exceed ell(T)={level} for a stable value")
    value = brute_count(req, budget, workers, method) * normalization(req)
    if check_stability and req.k + 1 <= min(req.S.ctx.precision, req.T.ctx.precision):
        nxt = req.with_k(req.k + 1)
        try:
            later = brute_count(nxt, budget, workers, method) * normalization(nxt)
        except BudgetExceededError as exc:
            _LOG.debug("stabilization check skipped: %s", exc)
            return value
        if later != value:
            raise VerificationError(f"density not stable: k={req.k} gives {value}, k={req.k + 1} gives {later}")
    return value


def shimura_poly(n: int, p: int) -> RationalPoly:
    """F_p(1_n, 1_n; X) = prod_{l=1..n} (1 - (-1)^l p^-l X)."""
    if n < 0:
        raise ValueError("n must be non-negative")
    poly = RationalPoly.constant(1)
    for l in range(1, n + 1):
        poly = poly * RationalPoly.linear(1, -Fraction((-1) ** l, p ** l))
    return poly


def nagaoka_poly(a: int, b: int, p: int) -> RationalPoly:
    """F_p(1_2, diag(p^a, p^b); X) for 0 <= a <= b."""
    if not 0 <= a <= b:
        raise ValueError(f"need 0 <= a <= b, got ({a}, {b})")
    coeffs = [Fraction(0)] * (a + b + 1)
    for l in range(a + 1):
        for k in range(a + b - 2 * l + 1):
            coeffs[l + k] += Fraction(p ** l * (-1) ** k)
    return shimura_poly(2, p) * RationalPoly(tuple(coeffs))


def evaluation_point(r: int, p: int) -> Fraction:
    """X = (-p)^(-r)."""
    return Fraction(1, (-p) ** r)


def closed_form_density(S: HermMatrix, T: HermMatrix) -> Optional[Fraction]:
    """The closed-form value of alpha_p(S, T) when one applies, else None.

    Covers unimodular S with T unimodular (Shimura product) or T binary
    (Nagaoka), and the parity vanishing for m = n.
    """
    p = S.ctx.p
    ps, pt = profile_of(S), profile_of(T)
    m, n = ps.n, pt.n
    if m < n or any(e != 0 for e in ps.exponents) or any(e < 0 for e in pt.exponents):
        return None
    if m == n and (ps.det_valuation + pt.det_valuation) % 2 == 1:
        return Fraction(0)
    x = evaluation_point(m - n, p)
    if all(e == 0 for e in pt.exponents):
        return shimura_poly(n, p)(x)
    if n == 2:
        a, b = sorted(pt.exponents)
        return nagaoka_poly(a, b, p)(x)
    return None


def half_weighted_sum(a: int, b: int, p: int) -> Fraction:
    """1/2 sum_{l=0}^{min(a,b)} p^l (a + b + 1 - 2l)."""
    lo = min(a, b)
    return Fraction(sum(p ** l * (a + b + 1 - 2 * l) for l in range(lo + 1)), 2)


@dataclass(frozen=True)
class BinaryDerivative:
    a: int
    b: int
    alpha_prime: Fraction
    normalized: Fraction


def alpha_derivative_binary(a: int, b: int, p: int) -> BinaryDerivative:
    """alpha'_p(1_2, diag(p^a, p^b)) = -F'(1), and its normalization by alpha_p(1_2, 1_2)."""
    if (a + b) % 2 == 0:
        raise ParityError(f"a + b = {a + b} must be odd")
    a, b = sorted((a, b))
    alpha_prime = -nagaoka_poly(a, b, p).derivative()(1)
    normalized = alpha_prime / shimura_poly(2, p)(1)
    expected = half_weighted_sum(a, b, p)
    if normalized != expected:
        raise VerificationError(f"symbolic derivative {normalized} != {expected} for (a,b)=({a},{b}), p={p}")
    return BinaryDerivative(a, b, alpha_prime, normalized)


def derivative_ratio(n: int, a: int, b: int, p: int) -> Fraction:
    """alpha'_p(1_n, diag(1_{n-2}, p^a, p^b)) / alpha_p(1_n, 1_n), computed two ways."""
    if n < 2:
        raise ValueError("n must be at least 2")
    binary = alpha_derivative_binary(a, b, p)
    split = shimura_poly(n - 2, p)(evaluation_point(2, p))
    via_reduction = split * binary.alpha_prime / shimura_poly(n, p)(1)
    formula = half_weighted_sum(a, b, p)
    if via_reduction != formula:
        raise VerificationError(f"derivative ratio routes disagree: {via_reduction} != {formula}")
    return via_reduction


def _unimodular(ctx: PrimeContext, size: int) -> HermMatrix:
    return HermMatrix.identity(ctx, size)


def stable_density(S: HermMatrix, T: HermMatrix, budget: Optional[int] = DEFAULT_BUDGET, workers: int = 1,
                   check_stability: bool = False) -> Fraction:
    """density_bruteforce at k = ell(T) + 1."""
    if T.n == 0:
        return Fraction(1)
    return density_bruteforce(DensityRequest(S, T, ell(T) + 1), budget, workers, check_stability=check_stability)


@dataclass(frozen=True)
class ReductionCheck:
    lhs: Fraction
    unimodular_factor: Fraction
    small_factor: Fraction

    @property
    def rhs(self) -> Fraction:
        return self.unimodular_factor * self.small_factor

    @property
    def holds(self) -> bool:
        return self.lhs == self.rhs


def reduction_check(t_prime_exponents: Sequence[int], n: int, r: int, ctx: PrimeContext,
                    budget: Optional[int] = DEFAULT_BUDGET, workers: int = 1) -> ReductionCheck:
    """alpha(1_{n+r}, 1_{n-l} + T') = alpha(1_{n+r}, 1_{n-l}) * alpha(1_{l+r}, T') with l = len(T')."""
    l = len(t_prime_exponents)
    if l > n:
        raise ValueError("T' is larger than T")
    t = HermMatrix.from_exponents(ctx, [0] * (n - l) + list(t_prime_exponents))
    lhs = stable_density(_unimodular(ctx, n + r), t, budget, workers)
    unimodular = stable_density(_unimodular(ctx, n + r), _unimodular(ctx, n - l), budget, workers)
    small = stable_density(_unimodular(ctx, l + r), HermMatrix.from_exponents(ctx, t_prime_exponents),
                           budget, workers)
    return ReductionCheck(lhs, unimodular, small)


@dataclass(frozen=True)
class ProbeReport:
    a: int
    b: int
    degree_cap: int
    points: Tuple[Tuple[Fraction, Optional[Fraction]], ...]
    closed_values: Tuple[Fraction, ...]
    interpolated: Optional[RationalPoly] = None
    notes: Tuple[str, ...] = field(default_factory=tuple)

    @property
    def computed(self) -> List[Tuple[Fraction, Fraction]]:
        return [(x, y) for x, y in self.points if y is not None]

    @property
    def matches_closed_form(self) -> bool:
        return all(y is None or y == c for (_, y), c in zip(self.points, self.closed_values))

    @property
    def determined(self) -> bool:
        return len(self.computed) >= self.degree_cap + 1


def interpolation_probe(a: int, b: int, ctx: PrimeContext, ranks: Sequence[int] = (0, 1),
                        budget: Optional[int] = DEFAULT_BUDGET, workers: int = 1) -> ProbeReport:
    """Brute-force values of alpha(1_{2+r}, diag(p^a, p^b)) at X = (-p)^-r against Nagaoka's polynomial.

    The degree of F_p is only known to be at most a + b + 2 from the closed
    form, so the polynomial is interpolated only when that many points exist.
    """
    a, b = sorted((a, b))
    closed = nagaoka_poly(a, b, ctx.p)
    t = HermMatrix.from_exponents(ctx, [a, b])
    points = []
    notes = []
    for r in ranks:
        x = evaluation_point(r, ctx.p)
        try:
            y = stable_density(_unimodular(ctx, 2 + r), t, budget, workers)
        except BudgetExceededError as exc:
            notes.append(f"r={r}: {exc}")
            y = None
        points.append((x, y))
    cap = a + b + 2
    report = ProbeReport(a, b, cap, tuple(points), tuple(closed(x) for x, _ in points), notes=tuple(notes))
    if report.determined:
        poly = RationalPoly.interpolate(report.computed)
        return ProbeReport(a, b, cap, report.points, report.closed_values, poly, report.notes)
    return report
