"""Polynomials over GF(2) and rows of generalized Pascal triangles mod 2.

A polynomial is packed into a Python ``int``: bit ``j`` is the coefficient of
``x**j``.  Python integers are already arbitrary-length arrays of machine
limbs, so addition is ``^`` and multiplication is carry-less shift-xor.

Two row rules are supported:

* order 1: ``p_n = q(x) * p_{n-1}``, ``p_0 = 1`` so ``p_n = q(x)**n``;
* order 2: ``p_n = q1(x) * p_{n-1} + q2(x) * p_{n-2}`` with given ``p_0, p_1``.

``odd_count`` (the popcount of a row) is the brute-force oracle against
which every automaton is checked.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Iterator

from .errors import ResourceLimitError

ORDER1_ROW_BUDGET = 1 << 20
ORDER2_ROW_BUDGET = 1 << 16
DEFAULT_CACHE_CAP = 1 << 14

# _SPREAD[b] has the bits of byte b moved to the even positions of 16 bits.
_SPREAD = [sum(((b >> i) & 1) << (2 * i) for i in range(8)) for b in range(256)]


def clmul(a: int, b: int) -> int:
    """Carry-less product of two packed polynomials."""
    if a.bit_count() < b.bit_count():
        a, b = b, a
    c = 0
    while b:
        low = b & -b
        c ^= a << (low.bit_length() - 1)
        b ^= low
    return c


def spread_bits(a: int) -> int:
    """Return ``a(x**2)``, i.e. ``a(x)**2`` over GF(2)."""
    if a < 256:
        return _SPREAD[a]
    raw = a.to_bytes((a.bit_length() + 7) // 8, "little")
    out = bytearray(2 * len(raw))
    for i, byte in enumerate(raw):
        s = _SPREAD[byte]
        out[2 * i] = s & 0xFF
        out[2 * i + 1] = s >> 8
    return int.from_bytes(out, "little")


@dataclass(frozen=True, order=True)
class ParityPoly:
    """Immutable polynomial over GF(2)."""

    bits: int = 0

    def __post_init__(self):
        if self.bits < 0:
            raise ValueError("bit vector must be nonnegative")

    @property
    def degree(self) -> int | None:
        """Degree, or ``None`` for the zero polynomial."""
        return self.bits.bit_length() - 1 if self.bits else None

    @property
    def is_zero(self) -> bool:
        return self.bits == 0

    def coefficient(self, j: int) -> int:
        if j < 0:
            raise ValueError(f"negative coefficient index {j}")
        return (self.bits >> j) & 1

    def popcount(self) -> int:
        return self.bits.bit_count()

    def __add__(self, other: ParityPoly) -> ParityPoly:
        return ParityPoly(self.bits ^ other.bits)

    __sub__ = __add__

    def __mul__(self, other: ParityPoly) -> ParityPoly:
        return ParityPoly(clmul(self.bits, other.bits))

    def __pow__(self, n: int) -> ParityPoly:
        return ParityPoly(power(self.bits, n))

    def shift(self, k: int) -> ParityPoly:
        """Multiply by ``x**k``."""
        return ParityPoly(self.bits << k)

    def frobenius(self) -> ParityPoly:
        """Square, which over GF(2) is ``p(x**2)``."""
        return ParityPoly(spread_bits(self.bits))

    # serialization -----------------------------------------------------

    @classmethod
    def from_coeffs(cls, text: str | list[int] | tuple[int, ...]) -> ParityPoly:
        """Parse ``"1,1,0,1"`` (constant term first) or a sequence of ints."""
        if isinstance(text, str):
            parts = [p.strip() for p in text.split(",") if p.strip()]
            coeffs = [int(p) for p in parts]
        else:
            coeffs = [int(c) for c in text]
        bits = 0
        for j, c in enumerate(coeffs):
            if c % 2:
                bits |= 1 << j
        return cls(bits)

    def to_coeffs(self) -> str:
        if not self.bits:
            return "0"
        return ",".join(str((self.bits >> j) & 1) for j in range(self.bits.bit_length()))

    @classmethod
    def from_hex(cls, text: str) -> ParityPoly:
        return cls(int(text, 16))

    def to_hex(self) -> str:
        return format(self.bits, "x")

    def __str__(self) -> str:
        if not self.bits:
            return "0"
        terms = []
        for j in range(self.bits.bit_length()):
            if (self.bits >> j) & 1:
                terms.append("1" if j == 0 else "x" if j == 1 else f"x^{j}")
        return " + ".join(terms)


def power(q: int, n: int) -> int:
    """``q**n`` over GF(2) by left-to-right square-and-multiply."""
    if n < 0:
        raise ValueError("negative exponent")
    result = 1
    for bit in bin(n)[2:]:
        result = spread_bits(result)
        if bit == "1":
            result = clmul(result, q)
    return result


def _as_poly(p) -> ParityPoly:
    if isinstance(p, ParityPoly):
        return p
    if isinstance(p, int):
        return ParityPoly(p)
    return ParityPoly.from_coeffs(p)


@dataclass(frozen=True)
class RecurrenceSpec:
    """Row-generation rule for a triangle (order 1) or rhombus (order 2).

    Use :meth:`first_order` / :meth:`second_order` rather than the raw
    constructor.
    """

    order: int
    ell: int
    q: ParityPoly | None = None
    q1: ParityPoly | None = None
    q2: ParityPoly | None = None
    p0: ParityPoly = field(default_factory=lambda: ParityPoly(1))
    p1: ParityPoly | None = None

    def __post_init__(self):
        if self.order not in (1, 2):
            raise ValueError(f"order must be 1 or 2, got {self.order}")
        if self.ell < 1:
            raise ValueError("window width ell must be >= 1")
        if self.order == 1:
            if self.q is None or self.q.is_zero:
                raise ValueError("order-1 spec needs a nonzero multiplier q")
            if self.q.coefficient(0) != 1:
                raise ValueError("multiplier must have constant term 1")
            if self.p0.bits != 1:
                raise ValueError("order-1 spec has p0 = 1")
        else:
            if None in (self.q1, self.q2, self.p1):
                raise ValueError("order-2 spec needs q1, q2, p0 and p1")
            if self.p0.is_zero:
                raise ValueError("p0 must be nonzero")

    @classmethod
    def first_order(cls, q, ell: int | None = None) -> RecurrenceSpec:
        q = _as_poly(q)
        if ell is None:
            ell = max(q.degree or 0, 1)
        return cls(order=1, ell=ell, q=q)

    @classmethod
    def second_order(cls, q1, q2, p0, p1, ell: int) -> RecurrenceSpec:
        return cls(order=2, ell=ell, q1=_as_poly(q1), q2=_as_poly(q2),
                   p0=_as_poly(p0), p1=_as_poly(p1))

    def to_dict(self) -> dict:
        if self.order == 1:
            return {"order": 1, "ell": self.ell, "q": self.q.to_coeffs()}
        return {"order": 2, "ell": self.ell, "q1": self.q1.to_coeffs(),
                "q2": self.q2.to_coeffs(), "p0": self.p0.to_coeffs(),
                "p1": self.p1.to_coeffs()}


def _default_budget(spec: RecurrenceSpec) -> int:
    return ORDER1_ROW_BUDGET if spec.order == 1 else ORDER2_ROW_BUDGET


def _check_budget(spec: RecurrenceSpec, n: int, budget: int | None) -> None:
    if n < 0:
        raise ValueError(f"row index must be nonnegative, got {n}")
    limit = _default_budget(spec) if budget is None else budget
    if n > limit:
        raise ResourceLimitError(f"row {n} exceeds the row budget {limit}")


def iter_rows(spec: RecurrenceSpec, n_max: int) -> Iterator[int]:
    """Yield packed rows ``p_0 .. p_n_max`` in order (cheap sequential sweep)."""
    if spec.order == 2:
        _check_budget(spec, n_max, None)
    if spec.order == 1:
        q = spec.q.bits
        r = 1
        for _ in range(n_max + 1):
            yield r
            r = clmul(r, q)
        return
    q1, q2 = spec.q1.bits, spec.q2.bits
    prev, cur = spec.p0.bits, spec.p1.bits
    yield prev
    for _ in range(n_max):
        yield cur
        prev, cur = cur, clmul(cur, q1) ^ clmul(prev, q2)


class RowSource:
    """Random-access row generator with a bounded cache.

    Order-2 rows are produced by iterating the recurrence; every
    ``checkpoint`` rows the pair ``(p_{n-1}, p_n)`` is kept so later requests
    resume from the nearest checkpoint below.  The cache is guarded by a lock,
    so one instance may be shared between threads.
    """

    def __init__(self, spec: RecurrenceSpec, cache_cap: int = DEFAULT_CACHE_CAP,
                 budget: int | None = None, checkpoint: int = 256):
        self.spec = spec
        self.cache_cap = cache_cap
        self.budget = budget
        self.checkpoint = checkpoint
        self._cache: dict[int, int] = {}
        self._pairs: dict[int, tuple[int, int]] = {}
        self._lock = threading.Lock()

    def __call__(self, n: int) -> int:
        _check_budget(self.spec, n, self.budget)
        with self._lock:
            hit = self._cache.get(n)
            if hit is not None:
                return hit
            r = self._compute(n)
            if len(self._cache) < self.cache_cap:
                self._cache[n] = r
            return r

    def _compute(self, n: int) -> int:
        spec = self.spec
        if spec.order == 1:
            return power(spec.q.bits, n)
        if n == 0:
            return spec.p0.bits
        # pairs[k] = (p_{k-1}, p_k)
        k = (n // self.checkpoint) * self.checkpoint
        while k > 0 and k not in self._pairs:
            k -= self.checkpoint
        if k == 0:
            prev, cur, k = spec.p0.bits, spec.p1.bits, 1
        else:
            prev, cur = self._pairs[k]
        q1, q2 = spec.q1.bits, spec.q2.bits
        while k < n:
            prev, cur = cur, clmul(cur, q1) ^ clmul(prev, q2)
            k += 1
            if k % self.checkpoint == 0:
                self._pairs[k] = (prev, cur)
        return cur

    def entry(self, i: int, j: int) -> int:
        if i < 0 or j < 0:
            raise ValueError(f"negative index ({i}, {j})")
        return (self(i) >> j) & 1


def row(spec: RecurrenceSpec, n: int, budget: int | None = None) -> ParityPoly:
    """Row ``p_n`` reduced mod 2."""
    _check_budget(spec, n, budget)
    if spec.order == 1:
        return ParityPoly(power(spec.q.bits, n))
    return ParityPoly(RowSource(spec, budget=budget)(n))


def odd_count(spec: RecurrenceSpec, n: int, budget: int | None = None) -> int:
    """Number of odd coefficients in ``p_n``."""
    return row(spec, n, budget).popcount()


def window(spec: RecurrenceSpec, row_base: int, row_stride: int, col_base: int,
           col_stride: int, source: RowSource | None = None):
    """Strided sample of the triangle.

    Order 1 gives the tuple ``(P(row_base, col_base + j*col_stride))_{j<ell}``;
    order 2 gives a pair of such tuples for rows ``row_base`` and
    ``row_base + row_stride``.  Columns past a row's degree read as 0.
    """
    if min(row_base, row_stride, col_base, col_stride) < 0:
        raise ValueError("window indices must be nonnegative")
    get = source if source is not None else (lambda n: row(spec, n).bits)
    cols = [col_base + j * col_stride for j in range(spec.ell)]
    top = get(row_base)
    first = tuple((top >> c) & 1 for c in cols)
    if spec.order == 1:
        return first
    bottom = get(row_base + row_stride)
    return first, tuple((bottom >> c) & 1 for c in cols)
