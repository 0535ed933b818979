"""
The codimension polynomial ``h_m^(k)(p) = k! (N - M)`` and its positive roots.

Everything here is exact: polynomials carry ``Fraction`` coefficients, real
roots are counted with Sturm sequences and isolated by rational bisection, and
no-positive-root certificates are checked by exact multiplication.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from math import comb, factorial
from typing import Iterable, Sequence

from .exceptions import DomainError

__all__ = [
    "IntPolynomial",
    "elementary_symmetric",
    "h_poly",
    "h_poly_closed_form",
    "h_poly_symmetric",
    "u_coeff",
    "v_coeff",
    "nm_identity",
    "sturm_sequence",
    "count_positive_roots",
    "RootInterval",
    "positive_roots",
    "RegimeReport",
    "regime",
    "PolyaCertificate",
    "polya_certificate",
    "linear_multiplier_interval",
    "hk_poly",
    "multiplier_discriminant",
    "linear_certificate_threshold",
    "no_root_threshold",
]

ROOT_WIDTH = Fraction(1, 2**20)


class IntPolynomial:
    """Univariate polynomial with exact coefficients, lowest degree first.

    Coefficients are integers in most uses (``h``, ``f``); rational
    coefficients are allowed so the same type serves ``H_k(m)`` and Sturm
    remainders.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable = ()):
        c = [Fraction(x) for x in coeffs]
        while c and c[-1] == 0:
            c.pop()
        self.coeffs: tuple[Fraction, ...] = tuple(c)

    @classmethod
    def x(cls) -> "IntPolynomial":
        return cls([0, 1])

    @property
    def degree(self) -> int:
        """Degree; ``-1`` for the zero polynomial."""
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    @property
    def leading(self) -> Fraction:
        return self.coeffs[-1] if self.coeffs else Fraction(0)

    def __getitem__(self, i: int) -> Fraction:
        return self.coeffs[i] if 0 <= i < len(self.coeffs) else Fraction(0)

    def __call__(self, x):
        acc = Fraction(0)
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def __eq__(self, other) -> bool:
        if isinstance(other, IntPolynomial):
            return self.coeffs == other.coeffs
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self.coeffs)

    def __add__(self, other: "IntPolynomial") -> "IntPolynomial":
        n = max(len(self.coeffs), len(other.coeffs))
        return IntPolynomial(self[i] + other[i] for i in range(n))

    def __neg__(self) -> "IntPolynomial":
        return IntPolynomial(-c for c in self.coeffs)

    def __sub__(self, other: "IntPolynomial") -> "IntPolynomial":
        return self + (-other)

    def __mul__(self, other) -> "IntPolynomial":
        if not isinstance(other, IntPolynomial):
            return IntPolynomial(c * other for c in self.coeffs)
        if self.is_zero() or other.is_zero():
            return IntPolynomial()
        out = [Fraction(0)] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a:
                for j, b in enumerate(other.coeffs):
                    out[i + j] += a * b
        return IntPolynomial(out)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "IntPolynomial":
        out = IntPolynomial([1])
        for _ in range(n):
            out = out * self
        return out

    def divmod(self, other: "IntPolynomial") -> tuple["IntPolynomial", "IntPolynomial"]:
        if other.is_zero():
            raise ZeroDivisionError("polynomial division by zero")
        rem = list(self.coeffs)
        q = [Fraction(0)] * max(len(rem) - other.degree, 1)
        lead = other.leading
        while len(rem) - 1 >= other.degree and any(rem):
            shift = len(rem) - 1 - other.degree
            f = rem[-1] / lead
            q[shift] = f
            for j, c in enumerate(other.coeffs):
                rem[shift + j] -= f * c
            rem.pop()
            while rem and rem[-1] == 0:
                rem.pop()
        return IntPolynomial(q), IntPolynomial(rem)

    def derivative(self) -> "IntPolynomial":
        return IntPolynomial(i * c for i, c in enumerate(self.coeffs) if i)

    def monic(self) -> "IntPolynomial":
        return IntPolynomial(c / self.leading for c in self.coeffs)

    def gcd(self, other: "IntPolynomial") -> "IntPolynomial":
        a, b = self, other
        while not b.is_zero():
            a, b = b, a.divmod(b)[1]
        return a.monic() if not a.is_zero() else a

    def squarefree(self) -> "IntPolynomial":
        g = self.gcd(self.derivative())
        return self.divmod(g)[0] if g.degree > 0 else self

    def is_integral(self) -> bool:
        return all(c.denominator == 1 for c in self.coeffs)

    def int_coeffs(self) -> list[int]:
        if not self.is_integral():
            raise DomainError("polynomial has non-integer coefficients")
        return [int(c) for c in self.coeffs]

    def sign_changes(self) -> int:
        """Sign changes in the coefficient sequence (Descartes' bound)."""
        signs = [c > 0 for c in self.coeffs if c != 0]
        return sum(a != b for a, b in zip(signs, signs[1:]))

    def __repr__(self) -> str:
        return f"IntPolynomial({[str(c) for c in self.coeffs]})"

    def __str__(self) -> str:
        if self.is_zero():
            return "0"
        terms = []
        for i in range(self.degree, -1, -1):
            c = self.coeffs[i]
            if c == 0:
                continue
            mag = abs(c)
            coef = "" if (mag == 1 and i > 0) else str(mag)
            var = "" if i == 0 else ("x" if i == 1 else f"x^{i}")
            body = f"{coef}{'*' if coef and var else ''}{var}"
            terms.append(("-" if c < 0 else "+", body))
        head_sign, head = terms[0]
        out = ("-" if head_sign == "-" else "") + head
        for s, body in terms[1:]:
            out += f" {s} {body}"
        return out


# ---------------------------------------------------------------------------
# h_m^(k)


@functools.lru_cache(maxsize=None)
def elementary_symmetric(k: int) -> tuple[int, ...]:
    """``(e_0, ..., e_k)`` evaluated at ``(1, 2, ..., k)``.

    Read off from the expansion of ``prod_i (x + i) = sum_j e_j x^(k-j)``.
    """
    poly = [1]  # descending powers
    for i in range(1, k + 1):
        poly = [a + i * b for a, b in zip(poly + [0], [0] + poly)]
    return tuple(poly)


def u_coeff(k: int, m: int) -> int:
    """Linear coefficient of ``h``: ``e_{k-1} - k!(k+m)``."""
    return elementary_symmetric(k)[k - 1] - factorial(k) * (k + m)


def v_coeff(k: int, m: int) -> Fraction:
    """Constant coefficient of ``h``: ``k!/2 * m (m - 2k + 1)``."""
    return Fraction(factorial(k), 2) * m * (m - 2 * k + 1)


def h_poly_symmetric(k: int, m: int) -> IntPolynomial:
    """``sum_{j<=k-2} e_j p^(k-j) + u p + v`` from the elementary symmetric values."""
    e = elementary_symmetric(k)
    coeffs = [Fraction(0)] * (k + 1)
    for j in range(k - 1):
        coeffs[k - j] = Fraction(e[j])
    coeffs[1] = Fraction(u_coeff(k, m))
    coeffs[0] = v_coeff(k, m)
    return IntPolynomial(coeffs)


def _h_value_closed_form(k: int, m: int, p: int) -> int:
    kf = factorial(k)
    return kf * comb(p + k, k) - kf * (k + m) * p + kf * (comb(m, 2) - (k - 1) * m - 1)


def h_poly_closed_form(k: int, m: int) -> IntPolynomial:
    """Interpolate the binomial closed form of ``h`` through ``p = 0..k``.

    Newton forward differences over integer nodes; no use of the symmetric
    function expansion, so the two constructions check each other.
    """
    ys = [Fraction(_h_value_closed_form(k, m, p)) for p in range(k + 1)]
    diffs = [ys[0]]
    row = ys
    for _ in range(k):
        row = [b - a for a, b in zip(row, row[1:])]
        diffs.append(row[0])
    poly = IntPolynomial()
    basis = IntPolynomial([1])
    for j, d in enumerate(diffs):
        poly = poly + basis * (d / factorial(j))
        basis = basis * IntPolynomial([-j, 1])
    return poly


@functools.lru_cache(maxsize=None)
def h_poly(k: int, m: int) -> IntPolynomial:
    """The codimension polynomial ``h_m^(k)`` in the variable ``p``.

    Built twice (closed form and symmetric-function expansion); the two must
    agree coefficient by coefficient.
    """
    if k < 2 or m < 1:
        raise DomainError(f"need k >= 2 and m >= 1, got k={k}, m={m}")
    a = h_poly_closed_form(k, m)
    b = h_poly_symmetric(k, m)
    if a != b:
        raise AssertionError(f"h constructions disagree for k={k}, m={m}: {a} vs {b}")
    return b


def nm_identity(k: int, p: int, m: int) -> bool:
    """Whether ``k! (N - M) == h_m^(k)(p)`` with ``N, M`` from the model counts."""
    from .famodel import ModelSpec

    spec = ModelSpec(p, m, k)
    return factorial(k) * (spec.N - spec.M) == h_poly(k, m)(p)


# ---------------------------------------------------------------------------
# Sturm sequences and root isolation


def sturm_sequence(f: IntPolynomial) -> list[IntPolynomial]:
    if f.is_zero():
        raise DomainError("zero polynomial has no Sturm sequence")
    seq = [f, f.derivative()]
    while not seq[-1].is_zero():
        seq.append(-seq[-2].divmod(seq[-1])[1])
    seq.pop()
    return seq


def _variations(seq: Sequence[IntPolynomial], x: Fraction) -> int:
    signs = [v > 0 for v in (q(x) for q in seq) if v != 0]
    return sum(a != b for a, b in zip(signs, signs[1:]))


def _cauchy_bound(f: IntPolynomial) -> Fraction:
    lead = abs(f.leading)
    return 1 + max(abs(c) / lead for c in f.coeffs[:-1]) if f.degree > 0 else Fraction(1)


def _strip_zero_root(f: IntPolynomial) -> IntPolynomial:
    c = list(f.coeffs)
    while c and c[0] == 0:
        c.pop(0)
    return IntPolynomial(c)


def count_positive_roots(f: IntPolynomial) -> int:
    """Number of distinct real roots in ``(0, inf)``."""
    if f.is_zero():
        raise DomainError("zero polynomial")
    g = _strip_zero_root(f)
    if g.degree < 1:
        return 0
    seq = sturm_sequence(g)
    return _variations(seq, Fraction(0)) - _variations(seq, _cauchy_bound(g))


@dataclass(frozen=True)
class RootInterval:
    """A positive real root lies in ``(lo, hi]``; ``lo == hi`` marks an exact rational root."""

    lo: Fraction
    hi: Fraction

    @property
    def midpoint(self) -> Fraction:
        return (self.lo + self.hi) / 2

    @property
    def exact(self) -> bool:
        return self.lo == self.hi

    def __contains__(self, x) -> bool:
        return x == self.lo if self.exact else self.lo < x <= self.hi


def _isolate(f: IntPolynomial, lo: Fraction, hi: Fraction, width: Fraction) -> list[RootInterval]:
    """Roots of squarefree ``f`` (with ``f(lo) != 0``) in ``(lo, hi]``, ascending."""
    seq = sturm_sequence(f)
    out: list[RootInterval] = []
    stack = [(lo, hi, _variations(seq, lo) - _variations(seq, hi))]
    while stack:
        a, b, n = stack.pop()
        if n == 0:
            continue
        if f(b) == 0 and n == 1:
            out.append(RootInterval(b, b))
            continue
        if n == 1 and b - a <= width:
            out.append(RootInterval(a, b))
            continue
        mid = (a + b) / 2
        if f(mid) == 0:
            # split off the exact root and keep isolating the rest
            out.append(RootInterval(mid, mid))
            rest = f.divmod(IntPolynomial([-mid, 1]))[0]
            if rest.degree >= 1:
                out.extend(_isolate(rest, a, b, width))
            continue
        left = _variations(seq, a) - _variations(seq, mid)
        stack.append((mid, b, n - left))
        stack.append((a, mid, left))
    return sorted(out, key=lambda r: r.lo)


def positive_roots(poly: IntPolynomial, width: Fraction = ROOT_WIDTH) -> list[RootInterval]:
    """Isolating intervals of the distinct positive real roots of ``poly``.

    Each interval has width at most ``width`` (``2^-20`` by default) and
    contains exactly one root.
    """
    if poly.is_zero():
        raise DomainError("zero polynomial has no isolated roots")
    g = _strip_zero_root(poly)
    if g.degree < 1:
        return []
    g = g.squarefree()
    return _isolate(g, Fraction(0), _cauchy_bound(g), width)


# ---------------------------------------------------------------------------
# regimes


@dataclass(frozen=True)
class RegimeReport:
    k: int
    m: int
    positive_roots: tuple[RootInterval, ...]
    regime: str
    p0: int

    @property
    def root_count(self) -> int:
        return len(self.positive_roots)

    def to_json(self) -> dict:
        return {
            "k": self.k,
            "m": self.m,
            "regime": self.regime,
            "root_count": self.root_count,
            "roots": [
                {"lo": str(r.lo), "hi": str(r.hi), "midpoint": float(r.midpoint)} for r in self.positive_roots
            ],
            "p0": self.p0,
        }


_REGIME_NAMES = {0: "no-root", 1: "one-root", 2: "two-roots"}


def _first_integer_above(f: IntPolynomial, root: RootInterval) -> int:
    """Smallest integer strictly greater than the isolated root."""
    if root.exact:
        return math.floor(root.lo) + 1
    lo, hi = root.lo, root.hi
    seq = sturm_sequence(f)
    # shrink until no integer lies strictly inside (lo, hi)
    while math.floor(lo) + 1 < hi:
        mid = Fraction(math.floor(lo) + 1)
        if f(mid) == 0:
            return int(mid) + 1
        if _variations(seq, lo) - _variations(seq, mid) == 1:
            hi = mid
        else:
            lo = mid
    if hi.denominator == 1 and f(hi) == 0:
        return int(hi) + 1
    return math.floor(lo) + 1


def regime(k: int, m: int) -> RegimeReport:
    """Classify ``h_m^(k)`` by its number of positive roots.

    ``p0`` is the smallest integer such that ``h(p') > 0`` for every integer
    ``p' >= p0`` (1 when there is no positive root).
    """
    if k < 3:
        raise DomainError(f"regimes are classified for k >= 3, got k={k}")
    h = h_poly(k, m)
    constant_negative = h[0] < 0
    if constant_negative != (m < 2 * k - 1):
        raise AssertionError(f"constant term sign pattern broken for k={k}, m={m}")
    roots = tuple(positive_roots(h))
    if len(roots) > h.sign_changes():
        raise AssertionError(f"Sturm count {len(roots)} exceeds Descartes bound for k={k}, m={m}")
    name = _REGIME_NAMES.get(len(roots), f"{len(roots)}-roots")
    if roots:
        g = _strip_zero_root(h).squarefree()
        p0 = max(1, _first_integer_above(g, roots[-1]))
    else:
        p0 = 1
    return RegimeReport(k=k, m=m, positive_roots=roots, regime=name, p0=p0)


# ---------------------------------------------------------------------------
# certificates of "no positive root"


@dataclass(frozen=True)
class PolyaCertificate:
    """``h * (p + b)^exponent`` has only nonnegative coefficients.

    ``method`` is ``"linear"`` when ``exponent == 1`` and ``b`` came from the
    interval ``[-u / e_{k-2}, -v / u]``, ``"polya"`` when a higher power of a
    linear factor was needed.
    """

    k: int
    m: int
    b: Fraction
    exponent: int
    method: str

    @property
    def multiplier(self) -> IntPolynomial:
        return IntPolynomial([self.b, 1]) ** self.exponent

    def product(self) -> IntPolynomial:
        return h_poly(self.k, self.m) * self.multiplier

    def verify(self) -> bool:
        prod = self.product()
        return self.b > 0 and not prod.is_zero() and all(c >= 0 for c in prod.coeffs)

    def to_json(self) -> dict:
        return {"k": self.k, "m": self.m, "b": str(self.b), "exponent": self.exponent, "method": self.method}


def linear_multiplier_interval(k: int, m: int) -> tuple[Fraction, Fraction]:
    """``(lo, hi)`` with ``lo = -u/e_{k-2}``, ``hi = -v/u``; nonempty iff ``lo <= hi``.

    For ``b`` in this interval, and ``b >= 0``, every coefficient of
    ``h * (p + b)`` is nonnegative.
    """
    e = elementary_symmetric(k)
    u = u_coeff(k, m)
    v = v_coeff(k, m)
    return Fraction(-u, e[k - 2]), Fraction(-v) / u


def _nonnegative(coeffs: Sequence) -> bool:
    return all(c >= 0 for c in coeffs)


def _polya_search(h: IntPolynomial, max_exponent: int) -> tuple[Fraction, int] | None:
    # smallest exponent first; shifts b = 2^j span the coefficient scale of h
    top = max(abs(c) for c in h.coeffs)
    shifts = [Fraction(2**j) for j in range(0, max(1, int(top).bit_length()) + 1)]
    products = {b: list(h.coeffs) for b in shifts}
    for n in range(1, max_exponent + 1):
        for b in shifts:
            c = products[b]
            c = [b * x + y for x, y in zip(c + [0], [0] + c)]
            products[b] = c
            if _nonnegative(c):
                return b, n
    return None


def polya_certificate(k: int, m: int, max_exponent: int = 400) -> PolyaCertificate | None:
    """Exact certificate that ``h_m^(k)`` has no positive root, if one is found.

    First tries the single linear factor ``p + b`` with ``b`` the midpoint of
    :func:`linear_multiplier_interval`; if that interval is empty, searches
    ``(p + b)^n`` for ``n <= max_exponent`` (Polya's theorem guarantees one
    exists whenever ``h > 0`` on ``[0, inf)``).  Returns ``None`` when ``h``
    has a positive root or nothing was found.
    """
    if k < 3:
        raise DomainError(f"certificates are computed for k >= 3, got k={k}")
    if m < 2 * k - 1:
        return None
    h = h_poly(k, m)
    lo, hi = linear_multiplier_interval(k, m)
    if lo <= hi:
        b = (lo + hi) / 2
        cert = PolyaCertificate(k, m, b, 1, "linear")
        if b > 0 and cert.verify():
            return cert
    if h[0] <= 0 or count_positive_roots(h) > 0:
        # no multiplier can work when h has a positive root
        return None
    found = _polya_search(h, max_exponent)
    if found is None:
        return None
    cert = PolyaCertificate(k, m, found[0], found[1], "polya")
    if not cert.verify():
        raise AssertionError(f"certificate search returned an invalid multiplier for k={k}, m={m}")
    return cert


def hk_poly(k: int) -> IntPolynomial:
    """The quadratic ``H_k(m)`` in the form displayed with the linear-multiplier argument.

    ``(1 - e_{k-2}/2) m^2 + (2k + k e_{k-2} - 2 e_{k-1}) m
    + (k - 2k e_{k-1} + (2k-1)/2 e_{k-2} + k! H_k)`` with ``H_k`` the harmonic
    number.  Kept verbatim; see :func:`multiplier_discriminant` for the
    quadratic whose sign actually decides the linear multiplier.
    """
    if k < 3:
        raise DomainError(f"H_k is defined for k >= 3, got k={k}")
    e = elementary_symmetric(k)
    ek2, ek1 = Fraction(e[k - 2]), Fraction(e[k - 1])
    harmonic = sum(Fraction(1, i) for i in range(1, k + 1))
    return IntPolynomial(
        [
            k - 2 * k * ek1 + Fraction(2 * k - 1, 2) * ek2 + factorial(k) * harmonic,
            2 * k + k * ek2 - 2 * ek1,
            1 - ek2 / 2,
        ]
    )


def multiplier_discriminant(k: int) -> IntPolynomial:
    """``u(k,m)^2 - v(k,m) e_{k-2}`` as a polynomial in ``m``.

    Nonpositive exactly when :func:`linear_multiplier_interval` is nonempty.
    """
    kf = factorial(k)
    e = elementary_symmetric(k)
    u = IntPolynomial([e[k - 1] - kf * k, -kf])  # u(k, m)
    v = IntPolynomial([0, Fraction(kf, 2) * (1 - 2 * k), Fraction(kf, 2)])  # v(k, m)
    return u * u - v * e[k - 2]


def linear_certificate_threshold(k: int) -> int | None:
    """Smallest ``m >= 2k`` beyond which the linear multiplier always exists.

    ``None`` when the leading coefficient of :func:`multiplier_discriminant`
    is positive, i.e. the linear multiplier fails for all large ``m``.
    """
    q = multiplier_discriminant(k)
    if q.leading > 0:
        return None
    roots = positive_roots(q)
    start = max(2 * k, _first_integer_above(_strip_zero_root(q).squarefree(), roots[-1]) if roots else 1)
    return start


def no_root_threshold(k: int, horizon: int = 200) -> int:
    """Smallest ``m_hat`` such that ``h_m^(k)`` has no positive root for all ``m_hat <= m <= horizon``."""
    m_hat = horizon + 1
    for m in range(horizon, 0, -1):
        if count_positive_roots(h_poly(k, m)) != 0:
            break
        m_hat = m
    return m_hat
