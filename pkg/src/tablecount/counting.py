"""Counting non-negative integer matrices with prescribed row and column sums.

Entry points by family:

* exact oracles: ``exact_count_bruteforce`` (cell recursion), ``exact_count_dp``
  (column-by-column over sorted remaining row sums), ``exact_count_01``.
* closed forms: ``fisher_yates_count`` (the factorial-weighted count, which has
  an exact product formula) and ``bekessy_estimate`` (asymptotic).
* Monte Carlo: ``mc_estimate_count`` averages exact permanents of random
  block matrices whose cells are i.i.d. standard exponentials; the expected
  permanent equals the count times the product of margin factorials.
  ``mc_weighted_count`` scales each cell by a weight and estimates the
  weight-power sum over tables.  ``variance_ratio_report`` checks the
  second-moment ratio against its proven bounds.
* low-rank: ``lowrank_asymptotic_count`` and friends replace each row's
  symmetric polynomial by a small random family of linear forms and read the
  count off a scalar-product pairing, carrying a multiplicative (1 +/- eps)^N
  guarantee band.

All randomized paths are deterministic functions of their seed: sample i uses
the child seed derive_seed(seed, i), so chunked or parallel evaluation cannot
change results.
"""

from __future__ import annotations

import json
import math
import statistics
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations_with_replacement
from typing import Dict, Iterator, List, Sequence, Tuple

import numpy as np

from .errors import (
    DimensionMismatchError,
    EnumerationBudgetError,
    PermanentSizeError,
    RankBoundError,
    TermBudgetError,
    ValidationError,
)
from .lowrank import (
    build_e_tilde,
    build_h_tilde,
    choose_elementary_sample_count,
    choose_sample_count,
    exact_e,
    exact_h,
    solve_threshold,
)
from .permanent import (
    DEFAULT_SIZE_LIMIT,
    BlockStructure,
    build_block_matrix,
    permanent_exact,
    permanent_float_batch,
)
from .polynomial import (
    DEFAULT_TERM_CAP,
    Coeff,
    LinearForm,
    SparsePolynomial,
    factorial,
    parse_coeff,
    poly_mul,
    reduced_pairing,
)
from .rng import derive_seed, derive_seed_block, exponential_matrix, truncated_exponential_matrix

DEFAULT_NODE_BUDGET = 10**7
DEFAULT_CHUNK = 16384
# sampled forms per distinct margin value in the counting pipelines; the
# conservative concentration formula is used when it asks for fewer
DEFAULT_FORMS_PER_VALUE = 128
DEFAULT_WEIGHTED_FORMS_PER_ROW = 64
DEFAULT_RANK_BOUND = 4
DEFAULT_VECTOR_BUDGET = 10**5

Z_95 = 1.959963984540054  # two-sided 95% normal quantile


class Margins:
    """Validated row and column sums with a common total."""

    __slots__ = ("row_sums", "col_sums", "total")

    def __init__(self, row_sums: Sequence[int], col_sums: Sequence[int]):
        rows = tuple(int(v) for v in row_sums)
        cols = tuple(int(v) for v in col_sums)
        if not rows or not cols:
            raise ValidationError("margins need at least one row and one column")
        if any(v < 1 for v in rows):
            raise ValidationError("row sums must be positive integers")
        if any(v < 1 for v in cols):
            raise ValidationError("column sums must be positive integers")
        if sum(rows) != sum(cols):
            raise ValidationError(
                f"row sums total {sum(rows)} but column sums total {sum(cols)}"
            )
        self.row_sums = rows
        self.col_sums = cols
        self.total = sum(rows)

    @property
    def num_rows(self) -> int:
        return len(self.row_sums)

    @property
    def num_cols(self) -> int:
        return len(self.col_sums)

    @property
    def rho(self) -> int:
        """Largest marginal."""
        return max(max(self.row_sums), max(self.col_sums))

    def divisor(self) -> int:
        """Product of all margin factorials."""
        out = 1
        for v in self.row_sums:
            out *= factorial(v)
        for v in self.col_sums:
            out *= factorial(v)
        return out

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Margins):
            return NotImplemented
        return self.row_sums == other.row_sums and self.col_sums == other.col_sums

    def __repr__(self) -> str:
        return f"Margins(rows={list(self.row_sums)}, cols={list(self.col_sums)})"


class WeightMatrix:
    """Non-negative cell weights, exact or float entries."""

    __slots__ = ("entries",)

    def __init__(self, entries: Sequence[Sequence[Coeff]]):
        rows = tuple(tuple(v) for v in entries)
        if not rows or not rows[0]:
            raise ValidationError("weight matrix must be non-empty")
        width = len(rows[0])
        for row in rows:
            if len(row) != width:
                raise ValidationError("ragged weight matrix")
            for v in row:
                if isinstance(v, float) and not math.isfinite(v):
                    raise ValidationError("weights must be finite")
                if v < 0:
                    raise ValidationError("weights must be non-negative")
        self.entries = rows

    @property
    def num_rows(self) -> int:
        return len(self.entries)

    @property
    def num_cols(self) -> int:
        return len(self.entries[0])

    def is_exact(self) -> bool:
        return not any(isinstance(v, float) for row in self.entries for v in row)

    def to_numpy(self) -> np.ndarray:
        return np.array([[float(v) for v in row] for row in self.entries])

    def numerical_rank(self, tol: float = 1e-9) -> int:
        s = np.linalg.svd(self.to_numpy(), compute_uv=False)
        if s.size == 0 or s[0] == 0.0:
            return 0
        return int(np.sum(s > tol * s[0]))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, WeightMatrix):
            return NotImplemented
        return self.entries == other.entries

    def __repr__(self) -> str:
        return f"WeightMatrix({self.num_rows}x{self.num_cols})"


def _check_weight_shape(margins: Margins, weights: WeightMatrix) -> None:
    if weights.num_rows != margins.num_rows or weights.num_cols != margins.num_cols:
        raise DimensionMismatchError(
            f"weights are {weights.num_rows}x{weights.num_cols}, margins are "
            f"{margins.num_rows}x{margins.num_cols}"
        )


@dataclass(frozen=True)
class CountEstimate:
    """Monte Carlo point estimate with normal-approximation uncertainty."""

    mean: float
    std_err: float
    ci_low: float
    ci_high: float
    num_samples: int
    seed: int
    exact_divisor_applied: bool


@dataclass(frozen=True)
class VarianceReport:
    """Empirical second-moment ratio against the proven bounds."""

    empirical_ratio: float
    slack: float
    bound_part2: int
    rho: int
    bound_part3_exponent: int
    bound_part3: float | None
    within_part2: bool
    num_samples: int
    seed: int


@dataclass(frozen=True)
class LowRankResult:
    """Outcome of a low-rank pairing: value plus the multiplicative band."""

    value: object
    guarantee_factor: Tuple[float, float]
    epsilon: float
    seed: int
    method: str
    form_counts: Tuple[int, ...]
    term_count: int
    repeats: int


# ---------------------------------------------------------------------------
# exact oracles


def _bounded_compositions(total: int, bounds: Sequence[int]) -> Iterator[Tuple[int, ...]]:
    """All ways to write total as an ordered sum with 0 <= part_i <= bounds[i]."""
    k = len(bounds)
    suffix = [0] * (k + 1)
    for i in range(k - 1, -1, -1):
        suffix[i] = suffix[i + 1] + bounds[i]

    def rec(idx: int, remaining: int, prefix: Tuple[int, ...]) -> Iterator[Tuple[int, ...]]:
        if idx == k:
            if remaining == 0:
                yield prefix
            return
        lo = max(0, remaining - suffix[idx + 1])
        hi = min(bounds[idx], remaining)
        for v in range(lo, hi + 1):
            yield from rec(idx + 1, remaining - v, prefix + (v,))

    return rec(0, total, ())


class _NodeBudget:
    __slots__ = ("used", "limit")

    def __init__(self, limit: int):
        self.used = 0
        self.limit = limit

    def spend(self, amount: int = 1) -> None:
        self.used += amount
        if self.used > self.limit:
            raise EnumerationBudgetError(
                f"enumeration exceeded {self.limit} nodes", limit=self.limit
            )


def exact_count_bruteforce(margins: Margins, node_budget: int = DEFAULT_NODE_BUDGET) -> int:
    """Count tables by filling rows recursively; the last row is forced.

    Independent of the dynamic program: no memoization, so it cross-checks it.
    """
    budget = _NodeBudget(node_budget)
    m = margins.num_rows

    def rec(i: int, rem_cols: Tuple[int, ...]) -> int:
        if i == m - 1:
            # the last row must absorb the remaining column sums exactly
            return 1
        total = 0
        for comp in _bounded_compositions(margins.row_sums[i], rem_cols):
            budget.spend()
            total += rec(i + 1, tuple(a - b for a, b in zip(rem_cols, comp)))
        return total

    return rec(0, margins.col_sums)


def iter_tables(margins: Margins, node_budget: int = DEFAULT_NODE_BUDGET) -> Iterator[Tuple[Tuple[int, ...], ...]]:
    """Yield every table with the given margins (small instances only)."""
    budget = _NodeBudget(node_budget)
    m = margins.num_rows

    def rec(i: int, rem_cols: Tuple[int, ...], prefix: tuple) -> Iterator[tuple]:
        if i == m - 1:
            budget.spend()
            yield prefix + (rem_cols,)
            return
        for comp in _bounded_compositions(margins.row_sums[i], rem_cols):
            budget.spend()
            yield from rec(i + 1, tuple(a - b for a, b in zip(rem_cols, comp)), prefix + (comp,))

    return rec(0, margins.col_sums, ())


def exact_count_dp(margins: Margins, node_budget: int = DEFAULT_NODE_BUDGET) -> int:
    """Column-by-column count over memoized sorted remaining-row-sum states.

    Remaining columns treat rows symmetrically, so the completion count only
    depends on the multiset of remaining row sums; sorting the state collapses
    equivalent branches.
    """
    budget = _NodeBudget(node_budget)
    n = margins.num_cols
    memo: Dict[Tuple[int, Tuple[int, ...]], int] = {}

    def count(j: int, state: Tuple[int, ...]) -> int:
        if j == n:
            return 1 if not any(state) else 0
        key = (j, state)
        cached = memo.get(key)
        if cached is not None:
            return cached
        total = 0
        for comp in _bounded_compositions(margins.col_sums[j], state):
            budget.spend()
            total += count(j + 1, tuple(sorted(a - b for a, b in zip(state, comp))))
        memo[key] = total
        return total

    return count(0, tuple(sorted(margins.row_sums)))


def exact_count_01(margins: Margins, node_budget: int = DEFAULT_NODE_BUDGET) -> int:
    """Count 0-1 tables; infeasible margins give 0.

    Rows are placed in order; the state is the sorted multiset of remaining
    column sums, memoized as in the general dynamic program.
    """
    budget = _NodeBudget(node_budget)
    m = margins.num_rows
    n = margins.num_cols
    from itertools import combinations

    memo: Dict[Tuple[int, Tuple[int, ...]], int] = {}

    def count(i: int, state: Tuple[int, ...]) -> int:
        if i == m:
            return 1 if not any(state) else 0
        key = (i, state)
        cached = memo.get(key)
        if cached is not None:
            return cached
        r = margins.row_sums[i]
        open_cols = [j for j in range(n) if state[j] > 0]
        total = 0
        if r <= len(open_cols):
            for chosen in combinations(open_cols, r):
                budget.spend()
                nxt = list(state)
                for j in chosen:
                    nxt[j] -= 1
                total += count(i + 1, tuple(sorted(nxt)))
        memo[key] = total
        return total

    return count(0, tuple(sorted(margins.col_sums)))


def weighted_count_bruteforce(
    margins: Margins,
    weights: WeightMatrix,
    include_factorials: bool = True,
    node_budget: int = DEFAULT_NODE_BUDGET,
):
    """Sum over all tables of prod w_ij^d_ij, optionally divided by prod d_ij!.

    Exact when the weights are exact; this is the oracle the permanent-based
    and low-rank weighted paths are checked against.
    """
    _check_weight_shape(margins, weights)
    exact = weights.is_exact()
    total: Coeff = Fraction(0) if exact else 0.0
    for table in iter_tables(margins, node_budget=node_budget):
        term: Coeff = Fraction(1) if exact else 1.0
        for wrow, drow in zip(weights.entries, table):
            for w, d in zip(wrow, drow):
                if d:
                    term = term * w**d
                    if include_factorials:
                        term = term / factorial(d)
        total = total + term
    return total


# ---------------------------------------------------------------------------
# closed forms


def fisher_yates_count(margins: Margins) -> Fraction:
    """Weighted count under weight prod 1/d_ij!: exactly N! over margin factorials."""
    return Fraction(factorial(margins.total), margins.divisor())


def bekessy_estimate(margins: Margins) -> float:
    """Closed-form asymptotic count: the factorial ratio times an exponential
    correction in the pairwise margin statistics."""
    n_total = margins.total
    row_pairs = sum(math.comb(r, 2) for r in margins.row_sums)
    col_pairs = sum(math.comb(c, 2) for c in margins.col_sums)
    exponent = 2.0 * row_pairs * col_pairs / (n_total * n_total)
    return float(fisher_yates_count(margins)) * math.exp(exponent)


# ---------------------------------------------------------------------------
# Monte Carlo estimator


def mc_sample_values(
    margins: Margins,
    num_samples: int,
    seed: int,
    weights: WeightMatrix | None = None,
    chunk_size: int = DEFAULT_CHUNK,
    size_limit: int = DEFAULT_SIZE_LIMIT,
) -> np.ndarray:
    """Raw per-sample permanents of the random block matrix.

    Sample k draws its cell exponentials (row-major) from the child stream
    derive_seed(seed, k); with weights, cell (i, j) is scaled by w_ij.  Values
    are independent of chunk_size.
    """
    n_total = margins.total
    if n_total > size_limit:
        raise PermanentSizeError(
            f"margins total {n_total} exceeds permanent size limit {size_limit}",
            limit=size_limit,
        )
    if num_samples < 1:
        raise ValidationError("need at least one sample")
    if chunk_size < 1:
        raise ValidationError("chunk_size must be positive")
    m, n = margins.num_rows, margins.num_cols
    w = None
    if weights is not None:
        _check_weight_shape(margins, weights)
        w = weights.to_numpy()
    row_of = np.repeat(np.arange(m), margins.row_sums)
    col_of = np.repeat(np.arange(n), margins.col_sums)
    seeds = derive_seed_block(seed, num_samples)
    out = np.empty(num_samples)
    for start in range(0, num_samples, chunk_size):
        stop = min(start + chunk_size, num_samples)
        cells = exponential_matrix(seeds[start:stop], m * n).reshape(-1, m, n)
        if w is not None:
            cells = cells * w
        blocks = cells[:, row_of][:, :, col_of]
        out[start:stop] = permanent_float_batch(blocks, size_limit=size_limit)
    return out


def _estimate_from_values(values: np.ndarray, divisor: float, seed: int) -> CountEstimate:
    if values.size < 2:
        raise ValidationError("need at least two samples for a standard error")
    mean = float(np.mean(values)) / divisor
    std_err = float(np.std(values, ddof=1)) / (divisor * math.sqrt(values.size))
    return CountEstimate(
        mean=mean,
        std_err=std_err,
        ci_low=mean - Z_95 * std_err,
        ci_high=mean + Z_95 * std_err,
        num_samples=int(values.size),
        seed=seed,
        exact_divisor_applied=True,
    )


def mc_estimate_count(
    margins: Margins,
    num_samples: int,
    seed: int,
    chunk_size: int = DEFAULT_CHUNK,
    size_limit: int = DEFAULT_SIZE_LIMIT,
) -> CountEstimate:
    """Unbiased table-count estimate: average permanent over margin factorials."""
    values = mc_sample_values(
        margins, num_samples, seed, chunk_size=chunk_size, size_limit=size_limit
    )
    return _estimate_from_values(values, float(margins.divisor()), seed)


def mc_weighted_count(
    margins: Margins,
    weights: WeightMatrix,
    num_samples: int,
    seed: int,
    chunk_size: int = DEFAULT_CHUNK,
    size_limit: int = DEFAULT_SIZE_LIMIT,
) -> CountEstimate:
    """Unbiased estimate of the weight-power sum over tables.

    Each cell draw is scaled by w_ij; the exponential moments supply exactly
    the factorials that cancel the divisor's per-table surplus, so the target
    carries no 1/d! factor.
    """
    values = mc_sample_values(
        margins, num_samples, seed, weights=weights, chunk_size=chunk_size, size_limit=size_limit
    )
    return _estimate_from_values(values, float(margins.divisor()), seed)


def chebyshev_sample_count(margins: Margins, epsilon: float, failure: float = 1.0 / 3.0) -> int:
    """Samples guaranteeing relative error epsilon with the stated failure
    probability, using the proven worst-case second-moment ratio 2^(2N)."""
    if not 0 < epsilon:
        raise ValidationError("epsilon must be positive")
    if not 0 < failure < 1:
        raise ValidationError("failure probability must lie in (0, 1)")
    ratio_bound = 2 ** (2 * margins.total)
    return math.ceil((ratio_bound - 1) / (failure * epsilon * epsilon))


def variance_ratio_report(
    margins: Margins,
    num_samples: int,
    seed: int,
    chunk_size: int = DEFAULT_CHUNK,
    size_limit: int = DEFAULT_SIZE_LIMIT,
) -> VarianceReport:
    """Empirical E[perm^2]/E[perm]^2 with the proven bounds.

    The general bound is 2^(2N).  The bounded-margin bound exp(rho^2 (2 rho)!)
    overflows floats beyond rho = 2 and is then reported by its exponent only.
    """
    values = mc_sample_values(
        margins, num_samples, seed, chunk_size=chunk_size, size_limit=size_limit
    )
    if values.size < 2:
        raise ValidationError("need at least two samples")
    squares = values * values
    m1 = float(np.mean(values))
    m2 = float(np.mean(squares))
    ratio = m2 / (m1 * m1)
    se1 = float(np.std(values, ddof=1)) / math.sqrt(values.size)
    se2 = float(np.std(squares, ddof=1)) / math.sqrt(values.size)
    slack = 3.0 * (se2 / m2 + 2.0 * se1 / m1)
    bound2 = 2 ** (2 * margins.total)
    rho = margins.rho
    exponent = rho * rho * factorial(2 * rho)
    part3 = math.exp(exponent) if exponent <= 700 else None
    return VarianceReport(
        empirical_ratio=ratio,
        slack=slack,
        bound_part2=bound2,
        rho=rho,
        bound_part3_exponent=exponent,
        bound_part3=part3,
        within_part2=ratio <= bound2 * (1.0 + slack),
        num_samples=int(values.size),
        seed=seed,
    )


# ---------------------------------------------------------------------------
# deterministic weighted counting via one exact permanent


def weighted_fy_count(
    margins: Margins, weights: WeightMatrix, size_limit: int = DEFAULT_SIZE_LIMIT
):
    """Sum over tables of prod w_ij^d_ij / d_ij!, via one block-matrix permanent.

    The block at (row group i, column group j) is constant w_ij; the permanent
    divided by the margin factorials telescopes into the weighted sum.  Exact
    for exact weights.
    """
    _check_weight_shape(margins, weights)
    if margins.total > size_limit:
        raise PermanentSizeError(
            f"margins total {margins.total} exceeds permanent size limit {size_limit}",
            limit=size_limit,
        )
    structure = BlockStructure(margins.row_sums, margins.col_sums)
    matrix = build_block_matrix(structure, weights.entries)
    per = permanent_exact(matrix, size_limit=size_limit)
    if weights.is_exact():
        return Fraction(per) / margins.divisor()
    return per / float(margins.divisor())


# ---------------------------------------------------------------------------
# low-rank pipelines


@dataclass(frozen=True)
class _Family:
    """One factor family of the row product, shared by `mult` equal rows.

    kind "power": factor = scale * sum_s forms[s]^r  (forms: LinearForm list)
    kind "group": factor = scale * sum_g prod(group g)  (forms: tuple of groups)
    kind "exact": factor = poly, an exact polynomial in the ambient variables,
    transported through coordinate forms.
    """

    kind: str
    r: int
    mult: int
    scale: object
    forms: tuple | None
    poly: SparsePolynomial | None
    num_vars: int

    @property
    def choice_count(self) -> int:
        return len(self.forms) if self.forms is not None else 0

    @property
    def local_dim(self) -> int:
        if self.kind == "power":
            return len(self.forms)
        if self.kind == "group":
            return len(self.forms) * self.r
        return self.num_vars

    def local_factor(self) -> SparsePolynomial:
        """The factor polynomial in this family's local variables."""
        d = self.local_dim
        if self.kind == "power":
            terms = {}
            for s in range(len(self.forms)):
                expo = [0] * d
                expo[s] = self.r
                terms[tuple(expo)] = self.scale
            return SparsePolynomial(d, terms)
        if self.kind == "group":
            terms = {}
            for g in range(len(self.forms)):
                expo = [0] * d
                for t in range(self.r):
                    expo[g * self.r + t] = 1
                terms[tuple(expo)] = self.scale
            return SparsePolynomial(d, terms)
        return self.poly

    def transport_forms(self) -> List[LinearForm]:
        """Ambient linear forms, one per local variable."""
        if self.kind == "power":
            return list(self.forms)
        if self.kind == "group":
            return [form for group in self.forms for form in group]
        return [LinearForm.coordinate(self.num_vars, j) for j in range(self.num_vars)]


def _embed(poly: SparsePolynomial, offset: int, total_dim: int) -> SparsePolynomial:
    pad_right = total_dim - offset - poly.num_vars
    terms = {
        (0,) * offset + expo + (0,) * pad_right: coeff for expo, coeff in poly.terms.items()
    }
    return SparsePolynomial(total_dim, terms)


def _poly_power(poly: SparsePolynomial, power: int, term_cap: int) -> SparsePolynomial:
    out = SparsePolynomial.constant(poly.num_vars, 1)
    for _ in range(power):
        out = poly_mul(out, poly, term_cap=term_cap)
    return out


def _pair_expand(families: Sequence[_Family], col_vector: Sequence[int], term_cap: int):
    """Literal reduction route: build the product polynomial in the local
    variables of all families and pair it against the transported column
    factors.  Exact when all inputs are exact."""
    n = families[0].num_vars
    total_dim = sum(f.local_dim for f in families)
    all_forms: List[LinearForm] = []
    q_total = SparsePolynomial.constant(total_dim, 1)
    offset = 0
    for fam in families:
        all_forms.extend(fam.transport_forms())
        factor = _poly_power(fam.local_factor(), fam.mult, term_cap)
        q_total = poly_mul(q_total, _embed(factor, offset, total_dim), term_cap=term_cap)
        offset += fam.local_dim
    g_forms: List[LinearForm] = []
    for j, c in enumerate(col_vector):
        g_forms.extend([LinearForm.coordinate(n, j)] * c)
    return reduced_pairing(q_total, all_forms, g_forms, term_cap=term_cap)


def _family_choice_arrays(fam: _Family) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-family enumeration tables for the permanent route.

    Returns (slot_rows, multiplicities, table): choosing multiset i of factors
    contributes table rows slot_rows[i] (length r * mult) with combinatorial
    multiplicity multiplicities[i].
    """
    M = fam.choice_count
    combos = np.array(
        list(combinations_with_replacement(range(M), fam.mult)), dtype=np.int64
    ).reshape(-1, fam.mult)
    mult_coeffs = np.empty(len(combos))
    base = factorial(fam.mult)
    for i, combo in enumerate(combos):
        # multinomial coefficient of this multiset of choices
        counts: Dict[int, int] = {}
        for v in combo:
            counts[v] = counts.get(v, 0) + 1
        denom = 1
        for c in counts.values():
            denom *= factorial(c)
        mult_coeffs[i] = base // denom
    if fam.kind == "power":
        slot_rows = np.repeat(combos, fam.r, axis=1)
        table = np.array([f.coeffs for f in fam.forms], dtype=np.float64)
    else:
        slot_rows = (combos[:, :, None] * fam.r + np.arange(fam.r)[None, None, :]).reshape(
            len(combos), fam.mult * fam.r
        )
        table = np.array(
            [f.coeffs for group in fam.forms for f in group], dtype=np.float64
        )
    return slot_rows, mult_coeffs, table


def _pair_permanent(
    families: Sequence[_Family],
    col_vector: Sequence[int],
    term_cap: int,
    size_limit: int,
    chunk_size: int = 2048,
) -> float:
    """Permanent route: expand the product of factor families term by term;
    each term is a product of N linear forms, whose pairing with the column
    monomial is the permanent of an N x N coefficient matrix.  Terms are
    enumerated in a fixed order and batched, so results do not depend on the
    chunk size."""
    for fam in families:
        if fam.kind == "exact":
            raise ValidationError("permanent route requires sampled form families")
    N = sum(f.r * f.mult for f in families)
    if N != sum(col_vector):
        raise ValidationError("row degrees and column degrees disagree")
    if N > size_limit:
        raise PermanentSizeError(
            f"pairing size {N} exceeds permanent size limit {size_limit}", limit=size_limit
        )
    per_fam = [_family_choice_arrays(fam) for fam in families]
    shape = tuple(len(p[0]) for p in per_fam)
    total_terms = 1
    for s in shape:
        total_terms *= s
        if total_terms > term_cap:
            raise TermBudgetError(
                f"pairing needs {math.prod(shape)} terms, cap is {term_cap}; "
                "the cost grows as the product of per-value form-multiset counts",
                limit=term_cap,
            )
    # global table of slot rows, with per-family offsets
    offsets = np.cumsum([0] + [p[2].shape[0] for p in per_fam])[:-1]
    table = np.vstack([p[2] for p in per_fam])
    col_of = np.repeat(np.arange(len(col_vector)), col_vector)
    prefactor = 1.0
    for fam in families:
        prefactor *= float(fam.scale) ** fam.mult

    acc = 0.0
    for start in range(0, total_terms, chunk_size):
        stop = min(start + chunk_size, total_terms)
        flat = np.arange(start, stop)
        idx = np.unravel_index(flat, shape)
        rows_parts = []
        coeffs = np.ones(stop - start)
        for (slot_rows, mult_coeffs, _), off, ix in zip(per_fam, offsets, idx):
            rows_parts.append(slot_rows[ix] + off)
            coeffs *= mult_coeffs[ix]
        slots = np.hstack(rows_parts)  # (chunk, N) indices into table
        cells = table[slots]  # (chunk, N, n)
        blocks = cells[:, :, col_of]  # (chunk, N, N)
        perms = permanent_float_batch(blocks, size_limit=size_limit)
        acc += float(np.dot(coeffs, perms))
    return prefactor * acc


def _resolve_method(method: str, families: Sequence[_Family]) -> str:
    exact = any(f.kind == "exact" for f in families)
    if method == "auto":
        return "expand" if exact else "permanent"
    if method == "permanent" and exact:
        raise ValidationError("permanent route requires sampled form families")
    if method not in ("expand", "permanent"):
        raise ValidationError(f"unknown pairing method {method!r}")
    return method


def _column_divisor(col_vector: Sequence[int]) -> int:
    out = 1
    for c in col_vector:
        out *= factorial(c)
    return out


def _pair_value(
    families: Sequence[_Family],
    col_vector: Sequence[int],
    method: str,
    term_cap: int,
    size_limit: int,
):
    """Pairing of the family product against the column monomial, divided by
    the column factorials: approximately the table count for these margins."""
    if method == "expand":
        pairing = _pair_expand(families, col_vector, term_cap)
        divisor = _column_divisor(col_vector)
        if isinstance(pairing, (int, Fraction)):
            return Fraction(pairing, divisor)
        return pairing / divisor
    pairing = _pair_permanent(families, col_vector, term_cap, size_limit)
    return pairing / float(_column_divisor(col_vector))


def _band(epsilon: float, n_total: int) -> Tuple[float, float]:
    return ((1.0 - epsilon) ** n_total, (1.0 + epsilon) ** n_total)


def _median(values: list):
    return statistics.median(values)


def _h_families(
    rows: Tuple[int, ...],
    n: int,
    epsilon: float,
    seed: int,
    form_count: int | None,
    exact_surrogate: bool,
) -> List[_Family]:
    families = []
    for idx, r in enumerate(sorted(set(rows))):
        mult = rows.count(r)
        if exact_surrogate:
            families.append(
                _Family(
                    kind="exact", r=r, mult=mult, scale=1, forms=None,
                    poly=exact_h(n, r), num_vars=n,
                )
            )
        else:
            m_forms = form_count
            if m_forms is None:
                m_forms = min(choose_sample_count(r, epsilon, n), DEFAULT_FORMS_PER_VALUE)
            approx = build_h_tilde(r, n, epsilon, derive_seed(seed, idx), form_count=m_forms)
            families.append(
                _Family(
                    kind="power", r=r, mult=mult, scale=approx.scale, forms=approx.forms,
                    poly=None, num_vars=n,
                )
            )
    return families


def _e_families(
    rows: Tuple[int, ...],
    n: int,
    epsilon: float,
    seed: int,
    form_count: int | None,
    exact_surrogate: bool,
) -> List[_Family]:
    families = []
    for idx, r in enumerate(sorted(set(rows))):
        mult = rows.count(r)
        if exact_surrogate:
            families.append(
                _Family(
                    kind="exact", r=r, mult=mult, scale=1, forms=None,
                    poly=exact_e(n, r), num_vars=n,
                )
            )
        else:
            m_forms = form_count
            if m_forms is None:
                m_forms = min(
                    choose_elementary_sample_count(r, epsilon, n), DEFAULT_FORMS_PER_VALUE
                )
            approx = build_e_tilde(r, n, epsilon, derive_seed(seed, idx), form_count=m_forms)
            families.append(
                _Family(
                    kind="group", r=r, mult=mult, scale=approx.scale, forms=approx.forms,
                    poly=None, num_vars=n,
                )
            )
    return families


def _repeat_seeds(seed: int, repeats: int) -> List[int]:
    if repeats < 1:
        raise ValidationError("repeats must be at least 1")
    if repeats == 1:
        return [seed]
    return [derive_seed(seed, k) for k in range(repeats)]


def lowrank_asymptotic_count(
    margins: Margins,
    epsilon: float,
    seed: int,
    repeats: int = 1,
    form_count: int | None = None,
    method: str = "auto",
    term_cap: int = DEFAULT_TERM_CAP,
    exact_surrogate: bool = False,
    size_limit: int = DEFAULT_SIZE_LIMIT,
) -> LowRankResult:
    """Approximate table count via low-rank complete symmetric polynomials.

    One sampled family is built per distinct row-sum value and shared by equal
    rows.  The returned value carries a multiplicative guarantee band
    (1 +/- eps)^N.  With exact_surrogate=True the sampled families are replaced
    by the exact polynomials and the result is the exact count (a pipeline
    self-test, not an estimate).
    """
    if not 0 < epsilon < 1:
        raise ValidationError("epsilon must lie in (0, 1)")
    values = []
    last = None
    for sub_seed in _repeat_seeds(seed, repeats):
        families = _h_families(
            margins.row_sums, margins.num_cols, epsilon, sub_seed, form_count, exact_surrogate
        )
        resolved = _resolve_method(method, families)
        value = _pair_value(families, margins.col_sums, resolved, term_cap, size_limit)
        term_count = math.prod(
            math.comb(f.choice_count + f.mult - 1, f.mult) for f in families if f.forms
        )
        last = (families, resolved, term_count)
        values.append(value)
    families, resolved, term_count = last
    return LowRankResult(
        value=_median(values),
        guarantee_factor=_band(epsilon, margins.total),
        epsilon=epsilon,
        seed=seed,
        method=resolved,
        form_counts=tuple(f.choice_count for f in families),
        term_count=term_count,
        repeats=repeats,
    )


def lowrank_01_count(
    margins: Margins,
    epsilon: float,
    seed: int,
    repeats: int = 1,
    form_count: int | None = None,
    method: str = "auto",
    term_cap: int = DEFAULT_TERM_CAP,
    exact_surrogate: bool = False,
    size_limit: int = DEFAULT_SIZE_LIMIT,
) -> LowRankResult:
    """Approximate 0-1 table count via low-rank elementary symmetric polynomials.

    Rows with r_i > n admit no 0-1 filling; the count is exactly 0 and is
    returned without sampling.
    """
    if not 0 < epsilon < 1:
        raise ValidationError("epsilon must lie in (0, 1)")
    if any(r > margins.num_cols for r in margins.row_sums):
        return LowRankResult(
            value=0.0,
            guarantee_factor=_band(epsilon, margins.total),
            epsilon=epsilon,
            seed=seed,
            method="none",
            form_counts=(),
            term_count=0,
            repeats=repeats,
        )
    values = []
    last = None
    for sub_seed in _repeat_seeds(seed, repeats):
        families = _e_families(
            margins.row_sums, margins.num_cols, epsilon, sub_seed, form_count, exact_surrogate
        )
        resolved = _resolve_method(method, families)
        value = _pair_value(families, margins.col_sums, resolved, term_cap, size_limit)
        term_count = math.prod(
            math.comb(f.choice_count + f.mult - 1, f.mult) for f in families if f.forms
        )
        last = (families, resolved, term_count)
        values.append(value)
    families, resolved, term_count = last
    return LowRankResult(
        value=_median(values),
        guarantee_factor=_band(epsilon, margins.total),
        epsilon=epsilon,
        seed=seed,
        method=resolved,
        form_counts=tuple(f.choice_count for f in families),
        term_count=term_count,
        repeats=repeats,
    )


def _admissible_column_vectors(
    column_sets: Sequence[Sequence[int]], n_total: int, budget: int
) -> List[Tuple[int, ...]]:
    """All ways to pick one value per column summing to the row total."""
    sets = []
    for k, raw in enumerate(column_sets):
        values = sorted({int(v) for v in raw})
        if any(v < 0 for v in values):
            raise ValidationError(f"column set {k} contains a negative sum")
        sets.append([v for v in values if v <= n_total])
    suffix_max = [0] * (len(sets) + 1)
    for k in range(len(sets) - 1, -1, -1):
        best = max(sets[k], default=0)
        suffix_max[k] = suffix_max[k + 1] + best
    out: List[Tuple[int, ...]] = []
    nodes = 0

    def rec(k: int, remaining: int, prefix: Tuple[int, ...]):
        nonlocal nodes
        if k == len(sets):
            if remaining == 0:
                out.append(prefix)
            return
        for v in sets[k]:
            if v > remaining:
                break
            if remaining - v > suffix_max[k + 1]:
                continue
            nodes += 1
            if nodes > budget:
                raise EnumerationBudgetError(
                    f"column-set search exceeded {budget} nodes", limit=budget
                )
            rec(k + 1, remaining - v, prefix + (v,))

    rec(0, n_total, ())
    return out


def lowrank_column_sets_count(
    row_sums: Sequence[int],
    column_sets: Sequence[Sequence[int]],
    epsilon: float,
    seed: int,
    repeats: int = 1,
    form_count: int | None = None,
    method: str = "auto",
    term_cap: int = DEFAULT_TERM_CAP,
    exact_surrogate: bool = False,
    size_limit: int = DEFAULT_SIZE_LIMIT,
    vector_budget: int = DEFAULT_VECTOR_BUDGET,
) -> LowRankResult:
    """Approximate number of tables whose column sums each lie in a given set.

    The column query factors as a sum of column monomials, so the value is the
    sum over admissible column-sum vectors of the per-vector pairing; families
    are built once per repeat and shared across vectors.
    """
    rows = tuple(int(v) for v in row_sums)
    if not rows or any(v < 1 for v in rows):
        raise ValidationError("row sums must be positive integers")
    if not 0 < epsilon < 1:
        raise ValidationError("epsilon must lie in (0, 1)")
    if not column_sets:
        raise ValidationError("need at least one column set")
    n_total = sum(rows)
    n = len(column_sets)
    vectors = _admissible_column_vectors(column_sets, n_total, vector_budget)

    values = []
    last = None
    for sub_seed in _repeat_seeds(seed, repeats):
        families = _h_families(rows, n, epsilon, sub_seed, form_count, exact_surrogate)
        resolved = _resolve_method(method, families)
        per_term = math.prod(
            math.comb(f.choice_count + f.mult - 1, f.mult) for f in families if f.forms
        )
        total = Fraction(0) if exact_surrogate else 0.0
        for vec in vectors:
            total = total + _pair_value(families, vec, resolved, term_cap, size_limit)
        last = (families, resolved, per_term * len(vectors))
        values.append(total)
    families, resolved, term_count = last
    return LowRankResult(
        value=_median(values),
        guarantee_factor=_band(epsilon, n_total),
        epsilon=epsilon,
        seed=seed,
        method=resolved,
        form_counts=tuple(f.choice_count for f in families),
        term_count=term_count,
        repeats=repeats,
    )


def _weighted_families(
    margins: Margins,
    weights: WeightMatrix,
    epsilon: float,
    seed: int,
    form_count: int | None,
    exact_surrogate: bool,
) -> List[_Family]:
    n = margins.num_cols
    families = []
    w_np = weights.to_numpy()
    for i, r in enumerate(margins.row_sums):
        if exact_surrogate:
            base = exact_h(n, r)
            wrow = weights.entries[i]
            terms = {}
            for expo in base.terms:
                coeff: Coeff = 1
                for j, a in enumerate(expo):
                    if a:
                        coeff = coeff * wrow[j] ** a
                if coeff != 0:
                    terms[expo] = coeff
            families.append(
                _Family(kind="exact", r=r, mult=1, scale=1, forms=None,
                        poly=SparsePolynomial(n, terms), num_vars=n)
            )
        else:
            m_forms = form_count
            if m_forms is None:
                m_forms = min(
                    choose_sample_count(r, epsilon, n), DEFAULT_WEIGHTED_FORMS_PER_ROW
                )
            delta = 1.0 - math.sqrt(1.0 - epsilon)
            spec = solve_threshold(r, delta)
            seeds = derive_seed_block(derive_seed(seed, i), m_forms)
            gamma = truncated_exponential_matrix(seeds, n, spec.kappa) * w_np[i]
            forms = tuple(LinearForm([float(v) for v in row]) for row in gamma)
            families.append(
                _Family(kind="power", r=r, mult=1, scale=1.0 / (factorial(r) * m_forms),
                        forms=forms, poly=None, num_vars=n)
            )
    return families


def lowrank_weighted_count(
    margins: Margins,
    weights: WeightMatrix,
    epsilon: float,
    seed: int,
    repeats: int = 1,
    form_count: int | None = None,
    method: str = "auto",
    term_cap: int = DEFAULT_TERM_CAP,
    exact_surrogate: bool = False,
    size_limit: int = DEFAULT_SIZE_LIMIT,
    rank_bound: int = DEFAULT_RANK_BOUND,
) -> LowRankResult:
    """Approximate weight-power sum over tables (the mc_weighted_count target).

    Row i's forms carry coefficients w_ij times truncated exponential draws, so
    the pairing approximates sum over tables of prod w_ij^d_ij within the
    (1 +/- eps)^N band.  The weight matrix must have small numerical rank; the
    check guards the regime in which the low-rank guarantee is meaningful.
    """
    _check_weight_shape(margins, weights)
    if not 0 < epsilon < 1:
        raise ValidationError("epsilon must lie in (0, 1)")
    rank = weights.numerical_rank()
    if rank > rank_bound:
        raise RankBoundError(
            f"weight matrix rank {rank} exceeds bound {rank_bound}"
        )
    values = []
    last = None
    for sub_seed in _repeat_seeds(seed, repeats):
        families = _weighted_families(
            margins, weights, epsilon, sub_seed, form_count, exact_surrogate
        )
        resolved = _resolve_method(method, families)
        value = _pair_value(families, margins.col_sums, resolved, term_cap, size_limit)
        term_count = math.prod(
            math.comb(f.choice_count + f.mult - 1, f.mult) for f in families if f.forms
        )
        last = (families, resolved, term_count)
        values.append(value)
    families, resolved, term_count = last
    return LowRankResult(
        value=_median(values),
        guarantee_factor=_band(epsilon, margins.total),
        epsilon=epsilon,
        seed=seed,
        method=resolved,
        form_counts=tuple(f.choice_count for f in families),
        term_count=term_count,
        repeats=repeats,
    )


# ---------------------------------------------------------------------------
# file interchange


def margins_from_json_text(text: str) -> Margins:
    data = json.loads(text)
    try:
        return Margins(data["rows"], data["cols"])
    except KeyError as exc:
        raise ValidationError(f"margins JSON lacks key {exc}") from exc


def margins_from_csv_text(text: str) -> Margins:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if len(lines) < 2:
        raise ValidationError("margins CSV needs a row-sums line and a column-sums line")
    rows = [int(v) for v in lines[0].replace(",", " ").split()]
    cols = [int(v) for v in lines[1].replace(",", " ").split()]
    return Margins(rows, cols)


def weights_from_json_text(text: str) -> WeightMatrix:
    data = json.loads(text)
    grid = data["weights"] if isinstance(data, dict) else data
    decoded = [[parse_coeff(v) if isinstance(v, str) else v for v in row] for row in grid]
    return WeightMatrix(decoded)


def weights_from_csv_text(text: str) -> WeightMatrix:
    rows = []
    for ln in text.splitlines():
        ln = ln.strip()
        if not ln or ln.startswith("#"):
            continue
        rows.append([parse_coeff(cell.strip()) for cell in ln.split(",")])
    if not rows:
        raise ValidationError("empty weights CSV")
    return WeightMatrix(rows)
