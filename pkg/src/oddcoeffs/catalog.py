"""Identity suites over the presets.

Every suite returns a :class:`SuiteReport` whose assertions are exact
integer equalities; the float-valued suites (digit-sum ratios, dispersion)
keep their numbers in ``metrics``.
"""

from __future__ import annotations

import json
import math
import sys
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np

from .automaton import count_table, evaluate, oracle_counts, residue_vector
from .gf2poly import RecurrenceSpec
from .presets import PRESET_NAMES, Preset, automaton_for, preset
from .spectral import variance_exponent

__all__ = [
    "PRESET_NAMES", "Preset", "SuiteReport", "automaton_for", "carlitz_count", "preset",
    "run_all_suites", "run_digitsum_suite", "run_dispersion_suite", "run_extreme_suite",
    "run_recursion_suite", "run_stern_suite", "stern_table", "stern_v",
]

MAX_FAILURES = 20
DOMINANCE_LIMIT = 1 << 21


@dataclass
class SuiteReport:
    suite: str
    preset: str | None
    range: dict
    failures: list = field(default_factory=list)
    metrics: dict = field(default_factory=dict)
    checked: int = 0

    @property
    def passed(self) -> bool:
        return not self.failures

    def check(self, label: str, lhs: int, rhs: int, **where) -> bool:
        self.checked += 1
        if lhs == rhs:
            return True
        if len(self.failures) < MAX_FAILURES:
            self.failures.append({"identity": label, **where,
                                  "lhs": _plain(lhs), "rhs": _plain(rhs)})
        return False

    def to_dict(self) -> dict:
        return {"suite": self.suite, "preset": self.preset, "range": self.range,
                "passed": self.passed, "checked": self.checked,
                "failures": self.failures, "metrics": self.metrics}

    def to_json(self, indent: int | None = None) -> str:
        return json.dumps(self.to_dict(), indent=indent)


def _plain(x):
    return [int(v) for v in x] if isinstance(x, (tuple, list)) else int(x)


# Stern -----------------------------------------------------------------------

@lru_cache(maxsize=None)
def _stern(n: int) -> int:
    if n == 0:
        return 1
    if n & 1:
        return _stern(n >> 1)
    return _stern(n >> 1) + _stern((n >> 1) - 1)


def stern_v(n: int) -> int:
    """Odd coefficients of the Fibonacci polynomial ``p_n``, with ``v(0) = 1``."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    if n.bit_length() > sys.getrecursionlimit() // 4:
        raise ValueError("n is too large for the recursive definition")
    return _stern(n)


def stern_table(n_max: int) -> np.ndarray:
    """``v(0) .. v(n_max)`` computed bottom-up with the same recursion."""
    v = np.empty(n_max + 1, dtype=np.int64)
    v[0] = 1
    for n in range(1, n_max + 1):
        v[n] = v[n >> 1] if n & 1 else v[n >> 1] + v[(n >> 1) - 1]
    return v


def carlitz_count(n: int) -> int:
    """Number of odd ``C(n - m, m)`` with ``0 <= 2m <= n`` (Lucas: ``m & (n - m) == m``)."""
    return sum(1 for m in range(n // 2 + 1) if (n - 2 * m) & m == 0)


def run_stern_suite(n_max: int = 512, k_max: int = 16) -> SuiteReport:
    """Recursion vs automaton, Carlitz's binomial characterisation and the partial sums."""
    rep = SuiteReport("stern", "stern", {"n_max": n_max, "k_max": k_max})
    a = automaton_for("stern")
    for n in range(n_max + 1):
        v = stern_v(n)
        rep.check("v(n) = w^T D e0", evaluate(a, n), v, n=n)
        rep.check("carlitz", carlitz_count(n), v, n=n)
    table = stern_table((1 << k_max) - 1)
    for k in range(k_max + 1):
        rep.check("sum_{j<2^k} v(j) = (3^k + 1)/2", int(table[: 1 << k].sum()), (3 ** k + 1) // 2, k=k)
    return rep


# derived recursions ------------------------------------------------------------

@lru_cache(maxsize=8)
def _oracle(spec: RecurrenceSpec, n_max: int) -> np.ndarray:
    return oracle_counts(spec, n_max)


Identity = tuple[str, Callable[[np.ndarray, int], int], Callable[[np.ndarray, int], int]]

_RECURSIONS: dict[str, tuple[int, list[Identity]]] = {
    # (largest multiplier + offset, identities); c is the count table
    "trinomial": (3, [
        ("g(4n+1) = 3g(n)", lambda c, n: c[4 * n + 1], lambda c, n: 3 * c[n]),
        ("g(4n+3) = g(2n+1) + 2g(n)", lambda c, n: c[4 * n + 3],
         lambda c, n: c[2 * n + 1] + 2 * c[n]),
        ("g(2n) = g(n)", lambda c, n: c[2 * n], lambda c, n: c[n]),
    ]),
    "quadrinomial": (7, [
        ("g3(2n) = g3(n)", lambda c, n: c[2 * n], lambda c, n: c[n]),
        ("g3(8n+1) = g3(4n+1)", lambda c, n: c[8 * n + 1], lambda c, n: c[4 * n + 1]),
        ("g3(8n+3) = g3(2n+1)", lambda c, n: c[8 * n + 3], lambda c, n: c[2 * n + 1]),
        ("g3(8n+5) = 4g3(2n+1)", lambda c, n: c[8 * n + 5], lambda c, n: 4 * c[2 * n + 1]),
        ("g3(8n+7) = 2g3(4n+3)", lambda c, n: c[8 * n + 7], lambda c, n: 2 * c[4 * n + 3]),
    ]),
    "trinomial2": (15, [
        ("h3(2n) = h3(n)", lambda c, n: c[2 * n], lambda c, n: c[n]),
        ("h3(4n+1) = 3h3(n)", lambda c, n: c[4 * n + 1], lambda c, n: 3 * c[n]),
        ("h3(8n+3) = h3(2n+1) + 4h3(n)", lambda c, n: c[8 * n + 3],
         lambda c, n: c[2 * n + 1] + 4 * c[n]),
        ("h3(16n+7) = h3(8n+3) + h3(2n+1) + 3h3(n)", lambda c, n: c[16 * n + 7],
         lambda c, n: c[8 * n + 3] + c[2 * n + 1] + 3 * c[n]),
        ("h3(16n+15) = 2h3(8n+7) + h3(2n+1) - 2h3(n)", lambda c, n: c[16 * n + 15],
         lambda c, n: 2 * c[8 * n + 7] + c[2 * n + 1] - 2 * c[n]),
    ]),
}

# residue-vector identities: (preset, word read most significant digit first, expected)
_RESIDUES = [
    ("quadrinomial", "101", (0, 8, 0)),
    ("quadrinomial", "0", (1, 0, 0)),
    ("binomial", "1", (2,)),
]

_MULTIPLIER = {"trinomial": 4, "quadrinomial": 8, "trinomial2": 16}


def run_recursion_suite(name: str, n_max: int = 1 << 12) -> SuiteReport:
    """Check the derived recursions of a preset against the brute-force oracle."""
    if name not in _RECURSIONS:
        raise ValueError(f"no recursion identities for {name!r}; "
                         f"choose from {', '.join(_RECURSIONS)}")
    if n_max < 0:
        raise ValueError("n_max must be nonnegative")
    _, identities = _RECURSIONS[name]
    top = _MULTIPLIER[name] * n_max + _RECURSIONS[name][0]
    counts = [int(x) for x in _oracle(preset(name).spec, top)]
    rep = SuiteReport("recursion", name, {"n_max": n_max, "oracle_rows": top + 1})
    for label, lhs, rhs in identities:
        for n in range(n_max + 1):
            rep.check(label, lhs(counts, n), rhs(counts, n), n=n)
    a = automaton_for(name)
    for pname, word, expected in _RESIDUES:
        if pname == name:
            rep.check(f"D-product for word {word}", residue_vector(a, word), expected, word=word)
    return rep


# extreme values ------------------------------------------------------------------

def _fib(j: int) -> int:
    a, b = 0, 1
    for _ in range(j):
        a, b = b, a + b
    return a


# name -> list of (label, index(k), value(k))
_EXTREMES: dict[str, list[tuple[str, Callable[[int], int], Callable[[int], int]]]] = {
    "binomial": [
        ("f(2^k - 1) = 2^k", lambda k: 2 ** k - 1, lambda k: 2 ** k),
    ],
    "trinomial": [
        ("g(2^k - 1)", lambda k: 2 ** k - 1, lambda k: (2 ** (k + 2) - (-1) ** k) // 3),
        ("g(3*2^(k+1) - 1)", lambda k: 3 * 2 ** (k + 1) - 1, lambda k: 2 ** (k + 3) + (-1) ** k),
        ("g(11*2^(k+1) - 1)", lambda k: 11 * 2 ** (k + 1) - 1,
         lambda k: 3 * (2 ** (k + 3) + (-1) ** k)),
    ],
    "rhombus": [
        ("u(2^k - 1)", lambda k: 2 ** k - 1, lambda k: (2 ** (k + 2) - (-1) ** k) // 3),
        # 5 (2^(k+3) + (-1)^k) / 3; the version without the second factor 5 is not an integer
        ("u(5*2^(k+1) - 1)", lambda k: 5 * 2 ** (k + 1) - 1,
         lambda k: 5 * (2 ** (k + 3) + (-1) ** k) // 3),
        ("u(2*4^(k+2) - 7)", lambda k: 2 * 4 ** (k + 2) - 7,
         lambda k: (5 * 4 ** (k + 2) + 12 * k + 1) // 3),
    ],
    "stern": [
        ("v(2(4^k - 1)/3) = a_{2k+1}", lambda k: 2 * (4 ** k - 1) // 3, lambda k: _fib(2 * k + 1)),
        ("v(4(4^k - 1)/3) = a_{2k+2}", lambda k: 4 * (4 ** k - 1) // 3, lambda k: _fib(2 * k + 2)),
    ],
}

_SPORADIC = {"rhombus": [("u(5) = 6", 5, 6), ("u(37) = 45", 37, 45)]}

_MINIMA = {
    "binomial": ("f(2^k) = 2", lambda k: 2 ** k, 2),
    "trinomial": ("g(2^k) = 3", lambda k: 2 ** k, 3),
    "stern": ("v(2^k - 1) = 1", lambda k: 2 ** k - 1, 1),
}


def _dominates(table: np.ndarray, idx: int) -> bool:
    """``table[idx]`` strictly exceeds every earlier entry."""
    return idx == 0 or bool(table[idx] > table[:idx].max())


def run_extreme_suite(name: str, k_max: int = 30, dominance_k: int = 14) -> SuiteReport:
    """Record-value subsequences, their dominance, and the minimum-growth anchors.

    Values are checked for ``k <= k_max`` by exact evaluation; dominance is
    checked by a full scan for ``k <= dominance_k`` as long as the index is
    below ``DOMINANCE_LIMIT``.  For the rhombus only the running minimum is
    reported.
    """
    if name not in _EXTREMES:
        raise ValueError(f"no extreme-value table for {name!r}; choose from {', '.join(_EXTREMES)}")
    if not 0 <= k_max <= 30:
        raise ValueError("k_max must be in [0, 30]")
    a = automaton_for(name)
    rep = SuiteReport("extreme", name, {"k_max": k_max, "dominance_k": dominance_k,
                                        "dominance_limit": DOMINANCE_LIMIT})
    families = _EXTREMES[name]
    for label, index, value in families:
        for k in range(k_max + 1):
            rep.check(label, evaluate(a, index(k), bound=None), value(k), k=k)
    for label, n, value in _SPORADIC.get(name, []):
        rep.check(label, evaluate(a, n), value, n=n)

    scan_idx = sorted({index(k) for _, index, _ in families for k in range(dominance_k + 1)
                       if index(k) < DOMINANCE_LIMIT}
                      | {n for _, n, _ in _SPORADIC.get(name, [])})
    table = count_table(a, max(scan_idx).bit_length())
    for n in scan_idx:
        rep.check("dominance", int(_dominates(table, n)), 1, n=n)
    rep.metrics["dominance_indices"] = len(scan_idx)

    if name in _MINIMA:
        label, index, value = _MINIMA[name]
        for k in range(k_max + 1):
            rep.check(label, evaluate(a, index(k)), value, k=k)
    else:
        # no closed form is claimed; emit the record minima of n >= 2^j for inspection
        K = 16
        t = count_table(a, K)
        rep.metrics["running_minimum"] = [int(t[1 << j:].min()) for j in range(K)]
    return rep


# digit sums ---------------------------------------------------------------------

def run_digitsum_suite(n_max: int = 1 << 16) -> SuiteReport:
    """``log2 g3(n) = #(3n)`` and ``log2 f(n) = #(n)``, plus the ternary-residue ratios."""
    if not 1 <= n_max <= 1 << 16:
        raise ValueError("n_max must be in [1, 2^16]")
    rep = SuiteReport("digitsum", None, {"n_max": n_max})
    g3 = _oracle(preset("quadrinomial").spec, n_max)
    f = _oracle(preset("binomial").spec, n_max)
    for n in range(n_max + 1):
        g, fn = int(g3[n]), int(f[n])
        rep.check("g3(n) = 2^#(3n)", g, 1 << (3 * n).bit_count(), n=n)
        rep.check("f(n) = 2^#(n)", fn, 1 << n.bit_count(), n=n)
    # sum_{k <= n/3} #(3k + r) / ((n/3) ln n / (2 ln 2)); the r = 0 sum uses log2 g3
    scale = (n_max / 3) * math.log(n_max) / (2 * math.log(2))
    ks = np.arange(n_max // 3 + 1)
    sums = {0: float(np.log2(g3[: n_max // 3 + 1].astype(float)).sum())}
    for r in (1, 2):
        sums[r] = float(sum(int(3 * k + r).bit_count() for k in ks))
    rep.metrics["ternary_ratios"] = {str(r): sums[r] / scale for r in (0, 1, 2)}
    return rep


# dispersion ------------------------------------------------------------------------

def run_dispersion_suite(name: str, K: int = 20) -> SuiteReport:
    """Empirical dispersion of ``count(N)`` for ``N`` uniform below ``n = 2^K``.

    Report only: ``Var(ln count) / ln n`` and ``ln Var(count) / ln n`` are
    compared with their limits (``ln 2 / 4`` for the binomial log-variance,
    the variance exponent otherwise) but never fail the suite, because both
    ratios carry an ``O(1/K)`` bias.  ``log_var_slope`` is the finite
    difference ``log2(Var_K / Var_{K-1})``, which cancels the constant factor.
    """
    if not 2 <= K <= 22:
        raise ValueError("K must be in [2, 22]")
    a = automaton_for(name)
    counts = count_table(a, K).astype(np.float64)
    ln_n = K * math.log(2)
    var = float(counts.var())
    var_prev = float(counts[: 1 << (K - 1)].var())
    var_log = float(np.log(counts).var()) / ln_n
    log_var = math.log(var) / ln_n
    target = float(variance_exponent(a))
    rep = SuiteReport("dispersion", name, {"K": K})
    rep.metrics.update({"var_log_over_ln_n": var_log, "log_var_over_ln_n": log_var,
                        "log_var_slope": math.log2(var / var_prev),
                        "variance_exponent": target,
                        "log_var_deviation": log_var - target})
    if name == "binomial":
        rep.metrics["var_log_target"] = math.log(2) / 4
        rep.metrics["var_log_deviation"] = var_log - math.log(2) / 4
    return rep


def run_all_suites() -> list[SuiteReport]:
    reports = [run_recursion_suite(n) for n in _RECURSIONS]
    reports += [run_extreme_suite(n) for n in _EXTREMES]
    reports.append(run_digitsum_suite())
    reports.append(run_stern_suite())
    reports += [run_dispersion_suite(n) for n in ("binomial", "stern")]
    return reports


def suites_for(name: str) -> list[Callable[[], SuiteReport]]:
    """Zero-argument callables for the suites that apply to one preset."""
    out: list[Callable[[], SuiteReport]] = []
    if name in _RECURSIONS:
        out.append(lambda: run_recursion_suite(name))
    if name in _EXTREMES:
        out.append(lambda: run_extreme_suite(name))
    if name == "stern":
        out.append(run_stern_suite)
    if name in ("binomial", "stern"):
        out.append(lambda: run_dispersion_suite(name))
    if name in ("binomial", "quadrinomial"):
        out.append(run_digitsum_suite)
    return out
