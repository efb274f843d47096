"""Exact linear algebra and growth exponents.

Everything that decides a number is done in exact rationals; mpmath only
formats the final high-precision values and finds roots of small published
polynomials for comparison.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from typing import Iterable, Sequence

import mpmath
import numpy as np

DIGITS = 30
_DPS = 50


class RationalMatrix:
    """Dense square-or-rectangular matrix of :class:`fractions.Fraction`."""

    __slots__ = ("rows",)

    def __init__(self, rows: Iterable[Iterable]):
        self.rows = tuple(tuple(Fraction(x) for x in r) for r in rows)
        if self.rows and len({len(r) for r in self.rows}) != 1:
            raise ValueError("ragged matrix")

    @classmethod
    def identity(cls, n: int) -> RationalMatrix:
        return cls([[1 if i == j else 0 for j in range(n)] for i in range(n)])

    @classmethod
    def zeros(cls, n: int, k: int | None = None) -> RationalMatrix:
        return cls([[0] * (n if k is None else k) for _ in range(n)])

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.rows), len(self.rows[0]) if self.rows else 0

    def __getitem__(self, ij):
        i, j = ij
        return self.rows[i][j]

    def __eq__(self, other) -> bool:
        if not isinstance(other, RationalMatrix):
            other = RationalMatrix(other)
        return self.rows == other.rows

    def __hash__(self):
        return hash(self.rows)

    def __add__(self, other: RationalMatrix) -> RationalMatrix:
        return RationalMatrix([[a + b for a, b in zip(r, s)] for r, s in zip(self.rows, other.rows)])

    def __sub__(self, other: RationalMatrix) -> RationalMatrix:
        return RationalMatrix([[a - b for a, b in zip(r, s)] for r, s in zip(self.rows, other.rows)])

    def scale(self, c) -> RationalMatrix:
        c = Fraction(c)
        return RationalMatrix([[c * a for a in r] for r in self.rows])

    def __matmul__(self, other: RationalMatrix) -> RationalMatrix:
        cols = list(zip(*other.rows))
        return RationalMatrix([[sum((a * b for a, b in zip(r, c) if a and b), Fraction(0))
                                for c in cols] for r in self.rows])

    def __pow__(self, k: int) -> RationalMatrix:
        result = RationalMatrix.identity(self.shape[0])
        base = self
        while k:
            if k & 1:
                result = result @ base
            base = base @ base
            k >>= 1
        return result

    def trace(self) -> Fraction:
        return sum((self.rows[i][i] for i in range(len(self.rows))), Fraction(0))

    def row(self, i: int) -> tuple[Fraction, ...]:
        return self.rows[i]

    def is_integral(self) -> bool:
        return all(x.denominator == 1 for r in self.rows for x in r)

    def to_int_lists(self) -> list[list[int]]:
        if not self.is_integral():
            raise ValueError("matrix has non-integer entries")
        return [[int(x) for x in r] for r in self.rows]

    def to_lists(self) -> list[list[str]]:
        return [[str(x) for x in r] for r in self.rows]

    def inverse(self) -> RationalMatrix:
        """Gauss-Jordan inverse; raises ``ZeroDivisionError`` when singular."""
        n = self.shape[0]
        aug = [list(r) + [Fraction(int(i == j)) for j in range(n)] for i, r in enumerate(self.rows)]
        for col in range(n):
            piv = next((r for r in range(col, n) if aug[r][col] != 0), None)
            if piv is None:
                raise ZeroDivisionError("singular matrix")
            aug[col], aug[piv] = aug[piv], aug[col]
            p = aug[col][col]
            aug[col] = [x / p for x in aug[col]]
            for r in range(n):
                if r != col and aug[r][col] != 0:
                    f = aug[r][col]
                    aug[r] = [x - f * y for x, y in zip(aug[r], aug[col])]
        return RationalMatrix([r[n:] for r in aug])

    def __repr__(self) -> str:
        return f"RationalMatrix({self.to_lists()})"


def as_rational(M) -> RationalMatrix:
    if isinstance(M, RationalMatrix):
        return M
    return RationalMatrix(np.asarray(M).tolist() if isinstance(M, np.ndarray) else M)


def kronecker(A, B) -> RationalMatrix:
    A, B = as_rational(A), as_rational(B)
    (ra, ca), (rb, cb) = A.shape, B.shape
    return RationalMatrix([[A[i // rb, j // cb] * B[i % rb, j % cb] for j in range(ca * cb)]
                           for i in range(ra * rb)])


@dataclass(frozen=True)
class IntPolynomial:
    """Integer polynomial, coefficients highest degree first."""

    coeffs: tuple[int, ...]

    def __post_init__(self):
        c = tuple(int(x) for x in self.coeffs)
        while len(c) > 1 and c[0] == 0:
            c = c[1:]
        if not c:
            c = (0,)
        object.__setattr__(self, "coeffs", c)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, x):
        acc = 0 * x
        for c in self.coeffs:
            acc = acc * x + c
        return acc

    def divmod(self, other: IntPolynomial) -> tuple[list[Fraction], list[Fraction]]:
        """Long division over the rationals; returns (quotient, remainder)."""
        num = [Fraction(c) for c in self.coeffs]
        den = [Fraction(c) for c in other.coeffs]
        if other.degree == 0 and den[0] == 0:
            raise ZeroDivisionError("division by the zero polynomial")
        quot = []
        while len(num) >= len(den):
            f = num[0] / den[0]
            quot.append(f)
            for i, d in enumerate(den):
                num[i] -= f * d
            num.pop(0)
        return quot, num

    def divisible_by(self, other: IntPolynomial) -> bool:
        _, rem = self.divmod(other)
        return all(r == 0 for r in rem)

    def root_scaled(self, factor: int) -> IntPolynomial:
        """Polynomial whose roots are ``factor`` times the roots of ``self``."""
        return IntPolynomial(tuple(c * factor ** i for i, c in enumerate(self.coeffs)))

    def real_roots(self, dps: int = _DPS) -> list:
        with mpmath.workdps(dps):
            roots = mpmath.polyroots([int(c) for c in self.coeffs], maxsteps=500, extraprec=4 * dps)
            tol = mpmath.mpf(10) ** (-dps // 2)
            return sorted(mpmath.re(r) for r in roots if abs(mpmath.im(r)) < tol)

    def __str__(self) -> str:
        terms = []
        d = self.degree
        for i, c in enumerate(self.coeffs):
            if c == 0:
                continue
            p = d - i
            mag = abs(c)
            body = ("" if mag == 1 and p else str(mag)) + ("x" if p == 1 else f"x^{p}" if p else "")
            terms.append(("- " if c < 0 else "+ ") + body)
        if not terms:
            return "0"
        s = " ".join(terms)
        return s[2:] if s.startswith("+ ") else "-" + s[2:]


# characteristic polynomial --------------------------------------------------

def char_poly(M) -> IntPolynomial:
    """``det(xI - M)`` by Faddeev-LeVerrier in exact arithmetic.

    For rational ``M`` the monic result is scaled by the lcm of its
    denominators.  Integer matrices are handled with integer-only numpy
    object arrays, which keeps 64x64 Kronecker sums tractable.
    """
    R = as_rational(M)
    n = R.shape[0]
    if n == 0:
        return IntPolynomial((1,))
    if R.is_integral():
        A = np.array(R.to_int_lists(), dtype=object)
        zero = 0
        div = lambda a, k: _exact_div(a, k)
    else:
        A = np.array([list(r) for r in R.rows], dtype=object)
        zero = Fraction(0)
        div = lambda a, k: a / k
    coeffs = [1]
    Mk = np.full((n, n), zero, dtype=object)
    eye = np.identity(n, dtype=int).astype(object)
    for k in range(1, n + 1):
        Mk = A.dot(Mk) + eye * coeffs[-1]
        c = div(-np.trace(A.dot(Mk)), k)
        coeffs.append(c)
    fr = [Fraction(c) for c in coeffs]
    scale = reduce(math.lcm, (f.denominator for f in fr), 1)
    return IntPolynomial(tuple(int(f * scale) for f in fr))


def _exact_div(a: int, k: int) -> int:
    q, r = divmod(a, k)
    if r:
        raise ArithmeticError("non-integral Faddeev-LeVerrier coefficient")
    return q


def cayley_hamilton_residual(M, p: IntPolynomial | None = None) -> RationalMatrix:
    """``p(M)`` evaluated exactly (zero matrix when ``p`` is the char poly)."""
    R = as_rational(M)
    p = char_poly(R) if p is None else p
    n = R.shape[0]
    acc = RationalMatrix.zeros(n)
    for c in p.coeffs:
        acc = acc @ R + RationalMatrix.identity(n).scale(c)
    return acc


# Perron root ----------------------------------------------------------------

def _above_spectral_radius(M: list[list[int]], num: int, den: int) -> bool:
    """Exact test of ``num/den > rho(M)`` for a nonnegative integer matrix.

    ``xI - M`` is a nonsingular M-matrix exactly when ``x > rho(M)``, which
    holds iff every leading principal minor is positive.  Fraction-free
    (Bareiss) elimination on ``num*I - den*M`` exposes those minors.
    """
    n = len(M)
    A = [[(num if i == j else 0) - den * M[i][j] for j in range(n)] for i in range(n)]
    prev = 1
    for k in range(n):
        if A[k][k] <= 0:
            return False
        pk = A[k][k]
        for i in range(k + 1, n):
            aik = A[i][k]
            rowi, rowk = A[i], A[k]
            for j in range(k + 1, n):
                rowi[j] = (pk * rowi[j] - aik * rowk[j]) // prev
        prev = pk
    return True


@dataclass(frozen=True)
class PerronRoot:
    """Spectral radius bracketed by exact rationals ``lo < rho <= hi``."""

    lo: Fraction
    hi: Fraction
    value: mpmath.mpf
    power_iteration: float

    def __float__(self) -> float:
        return float(self.value)


def perron_root(M, digits: int = DIGITS) -> PerronRoot:
    """Spectral radius of a nonnegative matrix to ``digits`` significant digits.

    Bisection on the exact predicate ``x > rho`` (see
    :func:`_above_spectral_radius`); the float estimate only seeds the
    bracket and every bracket end is re-certified exactly.
    """
    R = as_rational(M)
    if any(x < 0 for r in R.rows for x in r):
        raise ValueError("perron_root needs a nonnegative matrix")
    n = R.shape[0]
    scale = reduce(math.lcm, (x.denominator for r in R.rows for x in r), 1)
    Mi = [[int(x * scale) for x in r] for r in R.rows]
    pi_est = _power_iteration(np.array(Mi, dtype=float)) / scale
    est = max(abs(np.linalg.eigvals(np.array(Mi, dtype=float))))
    if est < 1e-6 and char_poly(Mi).coeffs[1:] == (0,) * n:
        zero = Fraction(0)
        with mpmath.workdps(_DPS):
            return PerronRoot(zero, zero, mpmath.mpf(0), pi_est)

    # Refine the float estimate on the char poly, then certify a tight bracket
    # exactly; fall back to plain bisection if certification fails.
    rel = Fraction(1, 10 ** (digits + 2))
    lo = hi = None
    cand = _refine_root(char_poly(Mi), est)
    if cand is not None and cand > 0:
        bits = 4 * (digits + 4)
        a = Fraction(math.floor(cand * (1 - rel) * 2 ** bits), 2 ** bits)
        b = Fraction(math.ceil(cand * (1 + rel) * 2 ** bits), 2 ** bits)
        if not _above(Mi, a) and _above(Mi, b):
            lo, hi = a, b
    if lo is None:
        lo, hi = Fraction(0), Fraction(max(sum(r) for r in Mi) + 1)
        while hi - lo > rel * hi:
            mid = (lo + hi) / 2
            if _above(Mi, mid):
                hi = mid
            else:
                lo = mid
    with mpmath.workdps(_DPS):
        value = (mpmath.mpf(lo.numerator) / lo.denominator
                 + mpmath.mpf(hi.numerator) / hi.denominator) / 2 / scale
    return PerronRoot(lo / scale, hi / scale, value, pi_est)


def _refine_root(p: IntPolynomial, x0: float, steps: int = 60) -> Fraction | None:
    """Newton on ``p/p'`` (quadratic even at multiple roots) at high precision."""
    with mpmath.workdps(_DPS + 20):
        x = mpmath.mpf(x0)
        for _ in range(steps):
            f = df = d2f = mpmath.mpf(0)
            for c in p.coeffs:
                d2f = d2f * x + 2 * df
                df = df * x + f
                f = f * x + c
            denom = df * df - f * d2f
            if f == 0 or denom == 0:
                break
            step = f * df / denom
            x -= step
            if abs(step) < mpmath.mpf(10) ** (-(_DPS + 10)) * abs(x):
                break
        if not mpmath.isfinite(x):
            return None
        m, e = mpmath.frexp(x)
        return Fraction(int(mpmath.ldexp(m, _DPS * 4))) * Fraction(2) ** (e - _DPS * 4)


def _above(Mi, x: Fraction) -> bool:
    return _above_spectral_radius(Mi, x.numerator, x.denominator)


def _power_iteration(M: np.ndarray, iters: int = 5000) -> float:
    """Spectral radius estimate from power iteration on ``M + I``."""
    n = M.shape[0]
    A = M + np.eye(n)
    v = np.ones(n)
    lam = 0.0
    for _ in range(iters):
        u = A @ v
        norm = np.abs(u).max()
        if norm == 0:
            return 0.0
        u /= norm
        if np.allclose(u, v, rtol=0, atol=1e-15):
            v = u
            break
        v = u
    lam = (A @ v).max() / v.max()
    return float(lam - 1)


# exponents ------------------------------------------------------------------

def mixture_sum(a) -> RationalMatrix:
    D0, D1 = a.matrices()
    return as_rational(D0 + D1)


def kronecker_mixture(a) -> RationalMatrix:
    """``D0 (x) D0 + D1 (x) D1`` (twice the variance mixture)."""
    return kronecker(a.D0, a.D0) + kronecker(a.D1, a.D1)


def avg_growth_exponent(a) -> mpmath.mpf:
    """``log2(rho(D0 + D1)) - 1``."""
    rho = perron_root(mixture_sum(a)).value
    with mpmath.workdps(_DPS):
        return mpmath.log(rho) / mpmath.log(2) - 1


def variance_exponent(a) -> mpmath.mpf:
    """``log2(rho((D0 (x) D0 + D1 (x) D1) / 2))``."""
    rho = perron_root(kronecker_mixture(a)).value
    with mpmath.workdps(_DPS):
        return mpmath.log(rho / 2) / mpmath.log(2)


def _largest_real_root_matches(p: IntPolynomial, target, digits: int) -> bool:
    roots = p.real_roots()
    if not roots:
        return False
    with mpmath.workdps(_DPS):
        return abs(roots[-1] - target) <= mpmath.mpf(10) ** (-digits) * abs(target)


def verify_min_poly(a, p: IntPolynomial | Sequence[int], digits: int = 25) -> bool:
    """``p`` divides ``char_poly(D0 + D1)`` and its largest real root is the Perron root."""
    p = p if isinstance(p, IntPolynomial) else IntPolynomial(tuple(p))
    S = mixture_sum(a)
    if not char_poly(S).divisible_by(p):
        return False
    return _largest_real_root_matches(p, perron_root(S).value, digits)


def verify_variance_poly(a, p: IntPolynomial | Sequence[int], halved: bool = True,
                         digits: int = 25) -> bool:
    """Variance analogue of :func:`verify_min_poly`.

    With ``halved`` the polynomial is taken to vanish at half the Perron root
    of ``D0 (x) D0 + D1 (x) D1``; substituting ``x -> x/2`` keeps the
    divisibility test in integers.
    """
    p = p if isinstance(p, IntPolynomial) else IntPolynomial(tuple(p))
    K = kronecker_mixture(a)
    scaled = p.root_scaled(2) if halved else p
    if not char_poly(K).divisible_by(scaled):
        return False
    rho = perron_root(K).value
    with mpmath.workdps(_DPS):
        target = rho / 2 if halved else +rho
    return _largest_real_root_matches(p, target, digits)
