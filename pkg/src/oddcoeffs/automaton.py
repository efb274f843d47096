"""Linear representations ``(w, D0, D1, e0)`` of odd-coefficient counts.

The builder explores strided windows of the triangle mod 2.  A state at
depth ``d`` with address ``(row_base, col_base)`` stands for the pattern

    (o, j) -> P(row_base + 2**d * o, col_base + 2**d * j),   0 <= j < ell

read at ``o = 0``.  Reading one more binary digit ``s`` of the row index and
splitting the columns by parity ``t`` substitutes ``o -> 2o + s`` and
``j -> 2j + t``, so the child address is

    row_base + s * 2**d,  col_base + t * 2**d,  stride 2**(d + 1).

The new digit enters as the next *more* significant bit, which is what makes
``w^T D_{n_{k-1}} ... D_{n_0} e0`` consume ``n`` least significant bit first.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import StateExplosionError, ValidationError
from .gf2poly import RecurrenceSpec, RowSource, iter_rows, window

SCAN_ORDER = ((0, 0), (1, 0), (0, 1), (1, 1))
COUNT_LIMIT = 1 << 64

Matrix = tuple[tuple[int, ...], ...]


@dataclass(frozen=True)
class WindowState:
    index: int
    value: tuple
    depth: int
    row_base: int
    col_base: int

    @property
    def stride(self) -> int:
        return 1 << self.depth

    def to_dict(self) -> dict:
        value = [list(r) for r in self.value] if _is_matrix(self.value) else list(self.value)
        return {"value": value, "depth": self.depth, "row_base": self.row_base,
                "col_base": self.col_base}


def _is_matrix(value) -> bool:
    return bool(value) and isinstance(value[0], tuple)


@dataclass(frozen=True)
class Automaton:
    """A 2-automatic linear representation.

    ``D0[i][j]`` counts the children of state ``j`` under row digit 0 that
    equal state ``i``; ``zero_children[j][s]`` counts the all-zero ones.
    Automata given directly by matrices (the Stern preset) carry no states.
    """

    order: int
    ell: int
    D0: Matrix
    D1: Matrix
    w: tuple[int, ...]
    states: tuple[WindowState, ...] = ()
    zero_children: tuple[tuple[int, int], ...] = ()
    spec: RecurrenceSpec | None = field(default=None, compare=False)

    @property
    def m(self) -> int:
        return len(self.w)

    def D(self, s: int) -> Matrix:
        return self.D1 if s else self.D0

    def matrices(self) -> tuple[np.ndarray, np.ndarray]:
        return (np.array(self.D0, dtype=np.int64).reshape(self.m, self.m),
                np.array(self.D1, dtype=np.int64).reshape(self.m, self.m))

    def evaluate(self, n: int, bound: int | None = COUNT_LIMIT) -> int:
        return evaluate(self, n, bound)

    def to_dict(self) -> dict:
        return {
            "order": self.order,
            "ell": self.ell,
            "m": self.m,
            "states": [s.to_dict() for s in self.states],
            "D0": [list(r) for r in self.D0],
            "D1": [list(r) for r in self.D1],
            "w": list(self.w),
        }

    def to_json(self, indent: int | None = None) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    @classmethod
    def from_dict(cls, doc: dict, spec: RecurrenceSpec | None = None) -> Automaton:
        states = []
        for i, st in enumerate(doc.get("states", [])):
            v = st["value"]
            value = tuple(tuple(r) for r in v) if v and isinstance(v[0], list) else tuple(v)
            states.append(WindowState(i, value, st["depth"], st["row_base"], st["col_base"]))
        D0 = tuple(tuple(int(x) for x in r) for r in doc["D0"])
        D1 = tuple(tuple(int(x) for x in r) for r in doc["D1"])
        return cls(order=doc["order"], ell=doc["ell"], D0=D0, D1=D1,
                   w=tuple(int(x) for x in doc["w"]), states=tuple(states),
                   zero_children=_zero_children(D0, D1) if states else (), spec=spec)

    @classmethod
    def from_json(cls, text: str, spec: RecurrenceSpec | None = None) -> Automaton:
        return cls.from_dict(json.loads(text), spec)

    @classmethod
    def from_matrices(cls, D0, D1, w, order: int = 1, ell: int = 1,
                      spec: RecurrenceSpec | None = None) -> Automaton:
        return cls(order=order, ell=ell, D0=tuple(tuple(r) for r in D0),
                   D1=tuple(tuple(r) for r in D1), w=tuple(w), spec=spec)


def _zero_children(D0: Matrix, D1: Matrix) -> tuple[tuple[int, int], ...]:
    m = len(D0)
    return tuple((2 - sum(D0[i][j] for i in range(m)), 2 - sum(D1[i][j] for i in range(m)))
                 for j in range(m))


# construction ------------------------------------------------------------

def _mandate(value, order: int) -> bool:
    if order == 1:
        return value[0] == 1
    return value[0][0] == 1 or value[1][0] == 1


def _is_zero(value, order: int) -> bool:
    if order == 1:
        return not any(value)
    return not any(value[0]) and not any(value[1])


def _first_nonzero(value, order: int) -> int:
    if order == 1:
        return value.index(1)
    return next(j for j in range(len(value[0])) if value[0][j] or value[1][j])


def build(spec: RecurrenceSpec, max_states: int = 64, max_depth: int = 64,
          source: RowSource | None = None) -> Automaton:
    """Breadth-first construction of the linear representation.

    Raises :class:`StateExplosionError` when a limit is exceeded.
    """
    if max_states < 1 or max_depth < 1:
        raise ValueError("limits must be positive")
    rows = source if source is not None else RowSource(spec)
    order = spec.order

    def win(depth: int, row_base: int, col_base: int):
        stride = 1 << depth
        return window(spec, row_base, stride, col_base, stride, source=rows)

    seed = win(0, 0, 0)
    if not _mandate(seed, order):
        raise ValueError("initial window violates the leading-one mandate")
    states = [WindowState(0, seed, 0, 0, 0)]
    lookup = {seed: 0}
    children: list[dict[tuple[int, int], int | None]] = []

    i = 0
    while i < len(states):
        st = states[i]
        if st.depth + 1 > max_depth:
            raise StateExplosionError(f"depth limit {max_depth} exceeded", states)
        kids: dict[tuple[int, int], int | None] = {}
        for s, t in SCAN_ORDER:
            d = st.depth + 1
            row_base = st.row_base + s * st.stride
            col_base = st.col_base + t * st.stride
            value = win(d, row_base, col_base)
            if _is_zero(value, order):
                kids[s, t] = None
                continue
            if value not in lookup and not _mandate(value, order):
                col_base += _first_nonzero(value, order) << d
                value = win(d, row_base, col_base)
            k = lookup.get(value)
            if k is None:
                if len(states) >= max_states:
                    raise StateExplosionError(f"state limit {max_states} exceeded", states)
                k = len(states)
                lookup[value] = k
                states.append(WindowState(k, value, d, row_base, col_base))
            kids[s, t] = k
        children.append(kids)
        i += 1

    m = len(states)
    D = [[[0] * m for _ in range(m)] for _ in range(2)]
    zero = [[0, 0] for _ in range(m)]
    for j, kids in enumerate(children):
        for (s, _t), k in kids.items():
            if k is None:
                zero[j][s] += 1
            else:
                D[s][k][j] += 1
    if order == 1:
        w = tuple(sum(st.value) for st in states)
    else:
        w = tuple(sum(st.value[0]) for st in states)
    return Automaton(order=order, ell=spec.ell,
                     D0=tuple(map(tuple, D[0])), D1=tuple(map(tuple, D[1])), w=w,
                     states=tuple(states), zero_children=tuple(map(tuple, zero)),
                     spec=spec)


# evaluation --------------------------------------------------------------

def _apply(M: Matrix, v: Sequence[int]) -> list[int]:
    return [sum(a * b for a, b in zip(r, v) if a) for r in M]


def evaluate(a: Automaton, n: int, bound: int | None = COUNT_LIMIT) -> int:
    """``w^T D_{n_{k-1}} ... D_{n_0} e0``; ``n = 0`` gives ``w[0]``.

    Results at or above ``bound`` raise :class:`OverflowError`; pass
    ``bound=None`` for the exact value of any size.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    v = [0] * a.m
    v[0] = 1
    while n:
        v = _apply(a.D1 if n & 1 else a.D0, v)
        n >>= 1
    total = sum(x * y for x, y in zip(a.w, v))
    if bound is not None and not 0 <= total < bound:
        raise OverflowError(f"count {total} does not fit in 64 bits")
    return total


def residue_vector(a: Automaton, suffix_word: str) -> tuple[int, ...]:
    """``D_{b_1} ... D_{b_r} e0`` for ``suffix_word = b_1 ... b_r``.

    The word is written most significant digit first, so ``"01"`` is the
    residue ``4n + 1``.
    """
    if any(ch not in "01" for ch in suffix_word):
        raise ValueError(f"not a binary word: {suffix_word!r}")
    v = [0] * a.m
    v[0] = 1
    for ch in reversed(suffix_word):
        v = _apply(a.D(int(ch)), v)
    return tuple(v)


def count_table(a: Automaton, K: int) -> np.ndarray:
    """Vectorised :func:`evaluate` for every ``n < 2**K`` (int64 array)."""
    if K < 0:
        raise ValueError("K must be nonnegative")
    D0, D1 = a.matrices()
    w = np.array(a.w, dtype=np.int64)
    out = np.empty(1 << K, dtype=np.int64)
    out[0] = w[0]
    # X holds D_{r_{k-1}} ... D_{r_0} e0 for every k-bit r (leading zeros allowed).
    X = np.zeros((1, a.m), dtype=np.int64)
    X[0, 0] = 1
    for k in range(K):
        out[1 << k: 2 << k] = (X @ D1.T) @ w
        if k + 1 < K:
            X = np.concatenate([X @ D0.T, X @ D1.T])
    return out


def oracle_counts(spec: RecurrenceSpec, n_max: int) -> np.ndarray:
    """Brute-force odd counts for ``0 <= n <= n_max``."""
    return np.fromiter((r.bit_count() for r in iter_rows(spec, n_max)),
                       dtype=np.int64, count=n_max + 1)


@dataclass
class ValidationReport:
    n_max: int
    passed: bool
    first_mismatch: tuple[int, int, int] | None = None  # (n, oracle, automaton)

    def to_dict(self) -> dict:
        return {"n_max": self.n_max, "passed": self.passed,
                "first_mismatch": list(self.first_mismatch) if self.first_mismatch else None}


def validate(a: Automaton, spec: RecurrenceSpec, n_max: int = 1 << 14,
             reference: np.ndarray | None = None, raise_on_failure: bool = True) -> ValidationReport:
    """Check the automaton against the oracle for every ``n <= n_max``.

    ``reference`` replaces the GF(2) oracle (used for Stern, which is checked
    against its own recursion).
    """
    expected = oracle_counts(spec, n_max) if reference is None else np.asarray(reference)[: n_max + 1]
    K = max(n_max, 1).bit_length()
    got = count_table(a, K)[: n_max + 1]
    bad = np.nonzero(got != expected)[0]
    if bad.size == 0:
        return ValidationReport(n_max, True)
    n = int(bad[0])
    report = ValidationReport(n_max, False, (n, int(expected[n]), int(got[n])))
    if raise_on_failure:
        raise ValidationError(f"automaton gives {int(got[n])} at n={n}, oracle {int(expected[n])}",
                              n=n, expected=int(expected[n]), actual=int(got[n]))
    return report
