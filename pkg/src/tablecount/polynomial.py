"""Sparse multivariate polynomials with a factorial-weighted scalar product.

The scalar product treats monomials as an orthogonal family: a monomial pairs
to zero with every other monomial, and with itself to the product of the
factorials of its exponents.  Products of linear forms can be paired without
ever expanding in the ambient variables; ``reduced_pairing`` transports the
computation to as many variables as there are distinct forms on the left.

Coefficients are dual-mode: ``int``/``Fraction`` for exact identities, plain
floats for randomized estimates.  Mixing exact and float operands silently
degrades to float, which is the intended behaviour.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import combinations_with_replacement
from math import comb, prod
from typing import Dict, Iterable, List, Sequence, Tuple, Union

from .errors import DimensionMismatchError, TermBudgetError, ValidationError

Exponent = Tuple[int, ...]
Coeff = Union[int, Fraction, float]

DEFAULT_TERM_CAP = 10**7

# factorials, extended on demand; index == argument
_FACTORIALS: List[int] = [1]


def factorial(n: int) -> int:
    if n < 0:
        raise ValidationError("factorial of negative argument")
    while len(_FACTORIALS) <= n:
        _FACTORIALS.append(_FACTORIALS[-1] * len(_FACTORIALS))
    return _FACTORIALS[n]


def monomial_weight(a: Sequence[int]) -> int:
    """Self-pairing of the monomial x^a: the product of factorials of exponents."""
    w = 1
    for e in a:
        if e < 0:
            raise ValidationError("negative exponent")
        w *= factorial(e)
    return w


class SparsePolynomial:
    """Finite map from exponent vectors to non-zero coefficients."""

    __slots__ = ("num_vars", "terms")

    def __init__(self, num_vars: int, terms: Dict[Exponent, Coeff] | None = None):
        if num_vars < 0:
            raise ValidationError("num_vars must be non-negative")
        self.num_vars = num_vars
        clean: Dict[Exponent, Coeff] = {}
        for expo, coeff in (terms or {}).items():
            if len(expo) != num_vars:
                raise DimensionMismatchError(
                    f"exponent vector of length {len(expo)}, expected {num_vars}"
                )
            if any(e < 0 for e in expo):
                raise ValidationError("negative exponent")
            if coeff != 0:
                clean[tuple(expo)] = coeff
        self.terms = clean

    @classmethod
    def zero(cls, num_vars: int) -> "SparsePolynomial":
        return cls(num_vars, {})

    @classmethod
    def constant(cls, num_vars: int, value: Coeff) -> "SparsePolynomial":
        return cls(num_vars, {(0,) * num_vars: value})

    @classmethod
    def variable(cls, num_vars: int, index: int) -> "SparsePolynomial":
        expo = [0] * num_vars
        expo[index] = 1
        return cls(num_vars, {tuple(expo): 1})

    def __len__(self) -> int:
        return len(self.terms)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SparsePolynomial):
            return NotImplemented
        return self.num_vars == other.num_vars and self.terms == other.terms

    def __hash__(self):
        return hash((self.num_vars, frozenset(self.terms.items())))

    def __repr__(self) -> str:
        return f"SparsePolynomial({self.num_vars}, {len(self.terms)} terms)"

    def coefficient(self, a: Sequence[int]) -> Coeff:
        return self.terms.get(tuple(a), 0)

    def degree(self) -> int:
        """Total degree; zero polynomial reports 0."""
        return max((sum(e) for e in self.terms), default=0)

    def is_homogeneous(self) -> bool:
        degrees = {sum(e) for e in self.terms}
        return len(degrees) <= 1

    def map_coefficients(self, fn) -> "SparsePolynomial":
        return SparsePolynomial(self.num_vars, {e: fn(c) for e, c in self.terms.items()})

    def add(self, other: "SparsePolynomial") -> "SparsePolynomial":
        if self.num_vars != other.num_vars:
            raise DimensionMismatchError("adding polynomials over different variables")
        out = dict(self.terms)
        for e, c in other.terms.items():
            out[e] = out.get(e, 0) + c
        return SparsePolynomial(self.num_vars, out)

    def scale(self, factor: Coeff) -> "SparsePolynomial":
        return SparsePolynomial(self.num_vars, {e: factor * c for e, c in self.terms.items()})

    def evaluate(self, point: Sequence[Coeff]) -> Coeff:
        if len(point) != self.num_vars:
            raise DimensionMismatchError("point length does not match num_vars")
        total: Coeff = 0
        for expo, coeff in self.terms.items():
            term = coeff
            for x, e in zip(point, expo):
                if e:
                    term *= x**e
            total += term
        return total


class LinearForm:
    """Dense degree-1 form c_1 x_1 + ... + c_n x_n."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Sequence[Coeff]):
        self.coeffs = tuple(coeffs)

    def __len__(self) -> int:
        return len(self.coeffs)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LinearForm):
            return NotImplemented
        return self.coeffs == other.coeffs

    def __repr__(self) -> str:
        return f"LinearForm({list(self.coeffs)})"

    def dot(self, other: "LinearForm") -> Coeff:
        """Scalar product of two forms: the plain dot product of coefficients."""
        if len(self.coeffs) != len(other.coeffs):
            raise DimensionMismatchError("forms over different numbers of variables")
        return sum(a * b for a, b in zip(self.coeffs, other.coeffs))

    def as_polynomial(self) -> SparsePolynomial:
        n = len(self.coeffs)
        terms: Dict[Exponent, Coeff] = {}
        for i, c in enumerate(self.coeffs):
            if c != 0:
                expo = [0] * n
                expo[i] = 1
                terms[tuple(expo)] = c
        return SparsePolynomial(n, terms)

    @classmethod
    def coordinate(cls, num_vars: int, index: int) -> "LinearForm":
        coeffs = [0] * num_vars
        coeffs[index] = 1
        return cls(coeffs)


def scalar_product(f: SparsePolynomial, g: SparsePolynomial) -> Coeff:
    """Factorial-weighted pairing: sum over shared monomials of weight * f_a * g_a.

    Exact when both operands carry exact coefficients.  Monomials present in
    only one operand contribute nothing, so iteration runs over the smaller
    term map.
    """
    if f.num_vars != g.num_vars:
        raise DimensionMismatchError("pairing polynomials over different variables")
    if len(g.terms) < len(f.terms):
        f, g = g, f
    total: Coeff = 0
    for expo, fc in f.terms.items():
        gc = g.terms.get(expo)
        if gc is not None:
            total += monomial_weight(expo) * fc * gc
    return total


def poly_mul(
    f: SparsePolynomial, g: SparsePolynomial, term_cap: int = DEFAULT_TERM_CAP
) -> SparsePolynomial:
    """Distributive product with zero-pruning; fails loudly past the term cap."""
    if f.num_vars != g.num_vars:
        raise DimensionMismatchError("multiplying polynomials over different variables")
    if len(f.terms) * len(g.terms) > term_cap:
        raise TermBudgetError(
            f"product could reach {len(f.terms) * len(g.terms)} terms, cap is {term_cap}",
            limit=term_cap,
        )
    out: Dict[Exponent, Coeff] = {}
    for ea, ca in f.terms.items():
        for eb, cb in g.terms.items():
            key = tuple(x + y for x, y in zip(ea, eb))
            acc = out.get(key, 0) + ca * cb
            if acc == 0:
                out.pop(key, None)
            else:
                out[key] = acc
    if len(out) > term_cap:
        raise TermBudgetError(f"product has {len(out)} terms, cap is {term_cap}", limit=term_cap)
    return SparsePolynomial(f.num_vars, out)


def expand_form_power(
    form: LinearForm, power: int, term_cap: int = DEFAULT_TERM_CAP
) -> SparsePolynomial:
    """Multinomial expansion of (c_1 x_1 + ... + c_n x_n)^power.

    The monomial x^a receives coefficient (power! / prod(a_i!)) * prod(c_i^a_i);
    only variables with non-zero form coefficient are enumerated.
    """
    if power < 0:
        raise ValidationError("power must be non-negative")
    n = len(form.coeffs)
    if power == 0:
        return SparsePolynomial.constant(n, 1)
    support = [(i, c) for i, c in enumerate(form.coeffs) if c != 0]
    if not support:
        return SparsePolynomial.zero(n)
    expected = comb(len(support) + power - 1, power)
    if expected > term_cap:
        raise TermBudgetError(
            f"expansion has {expected} terms, cap is {term_cap}", limit=term_cap
        )
    r_fact = factorial(power)
    out: Dict[Exponent, Coeff] = {}
    for combo in combinations_with_replacement(range(len(support)), power):
        counts = [0] * len(support)
        for idx in combo:
            counts[idx] += 1
        expo = [0] * n
        value: Coeff = 1
        for (var, c), k in zip(support, counts):
            expo[var] = k
            if k:
                value = value * c**k
        # multinomial coefficient is integral, so // is exact
        multi = r_fact // prod(factorial(k) for k in counts)
        out[tuple(expo)] = multi * value
    return SparsePolynomial(n, out)


def transport_form(forms: Sequence[LinearForm], g_factor: LinearForm) -> LinearForm:
    """Image of one right-hand factor under the change to form coordinates.

    Coefficient i of the result is the scalar product of forms[i] with the
    factor; variables beyond the listed forms are dropped, which is harmless
    because only the leading rows of the substitution survive the pairing.
    """
    return LinearForm([f.dot(g_factor) for f in forms])


def product_of_forms(
    factors: Sequence[LinearForm], term_cap: int = DEFAULT_TERM_CAP
) -> SparsePolynomial:
    """Expanded product of degree-1 forms (all over the same variables)."""
    if not factors:
        raise ValidationError("empty form product")
    acc = factors[0].as_polynomial()
    for factor in factors[1:]:
        acc = poly_mul(acc, factor.as_polynomial(), term_cap=term_cap)
    return acc


def reduced_pairing(
    q: SparsePolynomial,
    forms: Sequence[LinearForm],
    g_forms: Sequence[LinearForm],
    term_cap: int = DEFAULT_TERM_CAP,
) -> Coeff:
    """Pairing of q(l_1, ..., l_k) with a product of forms, in k variables.

    Each right-hand factor is replaced by the k-variate form whose i-th
    coefficient is the dot product of l_i with that factor; the replaced
    factors are multiplied out and paired with q directly.  Equivalent to
    expanding q(l_1, ..., l_k) in the ambient variables, but the work scales
    with k instead of n.
    """
    k = q.num_vars
    if len(forms) != k:
        raise DimensionMismatchError(f"expected {k} forms, got {len(forms)}")
    if forms:
        n = len(forms[0].coeffs)
        for f in forms:
            if len(f.coeffs) != n:
                raise DimensionMismatchError("forms of unequal length")
        for g in g_forms:
            if len(g.coeffs) != n:
                raise DimensionMismatchError("right-hand factor of unequal length")
    if not g_forms:
        # empty product is the constant 1; only q's constant term survives
        return q.coefficient((0,) * k)
    transported = [transport_form(forms, g) for g in g_forms]
    g_hat = product_of_forms(transported, term_cap=term_cap)
    return scalar_product(q, g_hat)


def sort_key(expo: Exponent) -> Tuple[int, Tuple[int, ...]]:
    """Graded-lex key: ascending degree, then descending lexicographic."""
    return (sum(expo), tuple(-e for e in expo))


def format_coeff(c: Coeff) -> str:
    if isinstance(c, float):
        return repr(c)
    if isinstance(c, Fraction):
        return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"
    return str(c)


def parse_coeff(token: str) -> Coeff:
    if "/" in token:
        return Fraction(token)
    try:
        return int(token)
    except ValueError:
        return float(token)


def poly_to_text(f: SparsePolynomial) -> str:
    """Canonical serialization: one "coeff e_1 ... e_n" line per term, graded-lex."""
    lines = []
    for expo in sorted(f.terms, key=sort_key):
        lines.append(" ".join([format_coeff(f.terms[expo])] + [str(e) for e in expo]))
    return "\n".join(lines)


def poly_from_text(text: str, num_vars: int | None = None) -> SparsePolynomial:
    terms: Dict[Exponent, Coeff] = {}
    n = num_vars
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        coeff = parse_coeff(tokens[0])
        expo = tuple(int(t) for t in tokens[1:])
        if n is None:
            n = len(expo)
        elif len(expo) != n:
            raise ValidationError("inconsistent exponent lengths in polynomial text")
        terms[expo] = terms.get(expo, 0) + coeff
    if n is None:
        raise ValidationError("empty polynomial text and no num_vars given")
    return SparsePolynomial(n, terms)
