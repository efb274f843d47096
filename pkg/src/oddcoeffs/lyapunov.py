"""Lyapunov exponents of the fair random product of ``D0`` and ``D1``.

Three independent routes are provided:

* the exact word series over ``chi(0^q)`` (binary words without ``q``
  consecutive zeros that end in 1), optionally accelerated with Wynn's
  epsilon algorithm; it needs a power of ``D0`` of rank one;
* Monte Carlo averaging of ``(1/k) ln ||D_{z_0} ... D_{z_{k-1}}||``;
* the empirical mean of ``ln count(n)`` over ``n < 2**K``.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from typing import Iterator, Sequence

import numpy as np

from .automaton import Automaton, count_table
from .errors import ProofCheckError, RankConditionError, ZeroCornerError
from .spectral import RationalMatrix

LN2 = math.log(2)
DEFAULT_K_MAX = {1: 60, 2: 34, 3: 26}
WYNN_GUARD = 1e-14
_CHUNK = 1 << 16
_INT64_MAX = (1 << 63) - 1

METHODS = ("closed_series", "word_series", "word_series_wynn", "monte_carlo", "empirical_mean")


def log_abs(x) -> float:
    """``ln|x|`` for an int or Fraction of any size (about 16 correct digits)."""
    if isinstance(x, Fraction):
        return log_abs(x.numerator) - log_abs(x.denominator)
    x = abs(int(x))
    if x == 0:
        raise ValueError("log of zero")
    shift = x.bit_length() - 63
    if shift <= 0:
        return math.log(x)
    return math.log(x >> shift) + shift * LN2


@dataclass
class LyapunovEstimate:
    lam: float
    method: str
    horizon: int
    exponent: float = field(init=False)
    stderr: float | None = None
    seed: int | None = None
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        self.exponent = self.lam / LN2

    def to_dict(self) -> dict:
        d = {"lambda": self.lam, "exponent": self.exponent, "method": self.method,
             "horizon": self.horizon, "diagnostics": self.diagnostics}
        if self.stderr is not None:
            d["stderr"] = self.stderr
        if self.seed is not None:
            d["seed"] = self.seed
        return d


# coordinate change -------------------------------------------------------

@dataclass(frozen=True)
class CoordinateChange:
    q: int
    v: tuple[int, ...]
    Q: RationalMatrix
    Q_inv: RationalMatrix
    D0_prime: RationalMatrix
    D1_prime: RationalMatrix

    @property
    def m(self) -> int:
        return len(self.v)

    def D_prime(self, s: int) -> RationalMatrix:
        return self.D1_prime if s else self.D0_prime


def _rank_one_row(P: RationalMatrix) -> tuple[int, ...] | None:
    m = P.shape[0]
    if P[0, 0] != 1:
        return None
    if any(P[i, j] != 0 for i in range(1, m) for j in range(m)):
        return None
    return tuple(int(x) for x in P.row(0))


def find_coordinate_change(a: Automaton, q_max: int | None = None) -> CoordinateChange:
    """Smallest ``q`` with ``D0**q = e0 v^T`` and ``v[0] = 1``, plus the matching ``Q``.

    ``Q`` has columns ``e0`` and ``e_j - v[j] e0``; its inverse is
    ``I + e0 (v - e0)^T``.
    """
    m = a.m
    q_max = m + 2 if q_max is None else q_max
    if q_max < 1:
        raise ValueError("q_max must be >= 1")
    D0 = RationalMatrix(a.D0)
    D1 = RationalMatrix(a.D1)
    P = D0
    for q in range(1, q_max + 1):
        v = _rank_one_row(P)
        if v is not None:
            break
        P = P @ D0
    else:
        raise RankConditionError(
            f"no power D0^q (q <= {q_max}) has the form e0 v^T; the word series does not "
            "apply, use the Monte Carlo method instead")
    Q = RationalMatrix([[(1 if i == j else 0) - (v[j] if i == 0 and j > 0 else 0)
                         for j in range(m)] for i in range(m)])
    Q_inv = RationalMatrix([[(1 if i == j else 0) + (v[j] if i == 0 and j > 0 else 0)
                             for j in range(m)] for i in range(m)])
    eye = RationalMatrix.identity(m)
    e00 = RationalMatrix([[int(i == 0 and j == 0) for j in range(m)] for i in range(m)])
    if Q @ Q_inv != eye or Q_inv @ (D0 ** q) @ Q != e00:
        raise ArithmeticError("coordinate change failed its exact self-check")
    return CoordinateChange(q, v, Q, Q_inv, Q_inv @ D0 @ Q, Q_inv @ D1 @ Q)


# words --------------------------------------------------------------------

def enumerate_words(q: int, k: int) -> Iterator[str]:
    """Words of length exactly ``k`` in ``chi(0^q)``, in lexicographic order."""
    if q < 1 or k < 1:
        raise ValueError("q and k must be >= 1")
    buf: list[str] = []

    def rec(run: int) -> Iterator[str]:
        if len(buf) == k:
            if run == 0:
                yield "".join(buf)
            return
        if run + 1 < q:
            buf.append("0")
            yield from rec(run + 1)
            buf.pop()
        buf.append("1")
        yield from rec(0)
        buf.pop()

    yield from rec(0)


def word_counts(q: int, k_max: int) -> list[int]:
    """``c_1 .. c_{k_max}``: sizes of ``chi(0^q)`` by length (transfer-matrix count)."""
    # runs[r] = number of valid prefixes ending in exactly r zeros
    runs = [1] + [0] * (q - 1)
    out = []
    for _ in range(k_max):
        total = sum(runs)
        runs = [total] + runs[:-1]
        out.append(runs[0])
    return out


# Wynn epsilon -------------------------------------------------------------

@dataclass
class WynnResult:
    value: float
    column: int
    table: list[list[float]]
    unusable: int
    error_estimate: float


def wynn_epsilon(seq: Sequence[float], guard: float = WYNN_GUARD) -> WynnResult:
    """Wynn's epsilon algorithm.

    ``table[k][n]`` is ``eps_k^{(n)}`` with ``eps_0^{(n)} = S_n``.  The
    estimate is the newest entry of the highest usable even column; entries
    reached through a near-zero difference are marked unusable (``nan``).
    """
    s = [float(x) for x in seq]
    N = len(s)
    if N == 0:
        raise ValueError("empty sequence")
    prev = [0.0] * (N + 1)  # eps_{-1}
    cur = list(s)
    table = [list(cur)]
    unusable = 0
    for _ in range(1, N):
        nxt = []
        for n in range(len(cur) - 1):
            a, b = cur[n], cur[n + 1]
            diff = b - a
            if not (math.isfinite(a) and math.isfinite(b)) or abs(diff) <= guard * max(abs(a), abs(b)):
                nxt.append(math.nan)
                unusable += 1
            else:
                nxt.append(prev[n + 1] + 1.0 / diff)
        prev, cur = cur, nxt
        table.append(cur)
        if not cur:
            break
    best_col, best, err = 0, s[-1], abs(s[-1] - s[-2]) if N > 1 else math.inf
    for col in range(2, len(table), 2):
        column = table[col]
        if len(column) >= 2 and all(math.isfinite(x) for x in column[-2:]):
            best_col, best, err = col, column[-1], abs(column[-1] - column[-2])
        elif len(column) == 1 and math.isfinite(column[0]) and col >= 2:
            # a single entry only has the previous column's newest value to compare against
            before = table[col - 2][-1]
            if math.isfinite(before):
                best_col, best, err = col, column[0], abs(column[0] - before)
    return WynnResult(best, best_col, table, unusable, err)


# exact word series ----------------------------------------------------------

def _integer_factors(cc: CoordinateChange) -> tuple[np.ndarray, np.ndarray, int]:
    """Scale ``D0', D1'`` by the lcm ``L`` of their denominators."""
    L = reduce(math.lcm, (x.denominator for M in (cc.D0_prime, cc.D1_prime)
                          for r in M.rows for x in r), 1)
    mats = [np.array([[int(x * L) for x in r] for r in M.rows], dtype=object)
            for M in (cc.D0_prime, cc.D1_prime)]
    return mats[0], mats[1], L


def _word_string(bits: int, length: int) -> str:
    return format(bits, f"0{length}b") if length else ""


def series_level_sums(cc: CoordinateChange, k_max: int, strict: bool = True,
                      ) -> tuple[list[float], dict]:
    """Per-length sums ``T_L = sum_{|z| = L} ln|D'_z(0,0)|`` for ``1 <= L <= k_max``.

    Prefix row vectors ``e0^T D'_{prefix}`` are carried exactly: int64 numpy
    rows while their size provably cannot overflow, Python-int rows otherwise.
    """
    if k_max > 62:
        raise ValueError("k_max > 62 is not supported")
    q = cc.q
    D0o, D1o, L = _integer_factors(cc)
    D = (D0o, D1o)
    D64 = tuple(M.astype(np.int64) for M in D)
    col_abs = max(int(np.abs(M).sum(axis=0).max()) for M in D64) or 1
    safe = _INT64_MAX // col_abs
    logL = math.log(L)

    m = cc.m
    totals = [0.0] * (k_max + 1)
    skipped = 0
    promoted = 0
    # batch: (length, rows, runs, words); rows int64 or object
    root = np.zeros((1, m), dtype=np.int64)
    root[0, 0] = 1
    stack = [(0, root, np.zeros(1, dtype=np.int8), np.zeros(1, dtype=np.int64))]
    while stack:
        length, V, runs, words = stack.pop()
        if length:
            ends = runs == 0
            if ends.any():
                corner = V[ends, 0]
                zero = corner == 0
                if zero.any():
                    if strict:
                        w = int(words[ends][np.nonzero(zero)[0][0]])
                        raise ZeroCornerError(
                            f"D'_z(0,0) = 0 for z = {_word_string(w, length)}",
                            _word_string(w, length))
                    skipped += int(zero.sum())
                    corner = corner[~zero]
                if V.dtype == object:
                    s = math.fsum(log_abs(int(x)) for x in corner)
                else:
                    s = float(np.log(np.abs(corner).astype(np.float64)).sum())
                totals[length] += s - corner.size * length * logL
        if length == k_max:
            continue
        children = []
        for bit in (1, 0):
            sel = np.ones(len(runs), dtype=bool) if bit else runs < q - 1
            if not sel.any():
                continue
            Vs = V[sel]
            new_runs = np.zeros(int(sel.sum()), dtype=np.int8) if bit else runs[sel] + 1
            new_words = words[sel] * 2 + bit
            if Vs.dtype == object:
                children.append((Vs.dot(D[bit]), new_runs, new_words))
                continue
            small = np.abs(Vs).max(axis=1) <= safe
            if small.all():
                children.append((Vs @ D64[bit], new_runs, new_words))
            else:
                promoted += int((~small).sum())
                if small.any():
                    children.append((Vs[small] @ D64[bit], new_runs[small], new_words[small]))
                big = Vs[~small].astype(object)
                children.append((big.dot(D[bit]), new_runs[~small], new_words[~small]))
        # merge the int64 parts (and the object parts) so batches grow to _CHUNK
        merged = []
        for kind in (np.int64, object):
            parts = [c for c in children if c[0].dtype == kind]
            if parts:
                merged.append(tuple(np.concatenate(x) for x in zip(*parts)))
        # reversed push keeps a fixed depth-first order
        for Vc, rc, wc in reversed(merged):
            for start in range(((len(rc) - 1) // _CHUNK) * _CHUNK, -1, -_CHUNK):
                stack.append((length + 1, Vc[start:start + _CHUNK],
                              rc[start:start + _CHUNK], wc[start:start + _CHUNK]))
    return totals[1:], {"skipped_terms": skipped, "promoted_rows": promoted, "scale": L}


def moshe_series(cc: CoordinateChange, k_max: int | None = None, accelerate: bool = True,
                 strict: bool = True) -> LyapunovEstimate:
    """Lyapunov exponent from the word series over ``chi(0^q)``.

    ``lambda = sum_z 2^{-|z|} ln|D'_z(0,0)| / (2^{q+1} (2^q - 1))``.
    """
    q = cc.q
    k_max = DEFAULT_K_MAX.get(q, 20) if k_max is None else k_max
    if k_max < 2:
        raise ValueError("k_max must be >= 2")
    level, diag = series_level_sums(cc, k_max, strict=strict)
    pref = 1.0 / (2 ** (q + 1) * (2 ** q - 1))
    partial = []
    acc = 0.0
    for L, t in enumerate(level, start=1):
        acc += pref * t / 2 ** L
        partial.append(acc)
    diag.update({"q": q, "partial_sums": partial, "tail": partial[-1] - partial[-2]})
    if not accelerate:
        return LyapunovEstimate(partial[-1], "word_series", k_max, diagnostics=diag)
    wr = wynn_epsilon(partial)
    diag.update({"wynn_column": wr.column, "wynn_unusable": wr.unusable,
                 "wynn_error_estimate": wr.error_estimate,
                 "accelerated": [col[-1] for col in wr.table[::2] if col]})
    return LyapunovEstimate(wr.value, "word_series_wynn", k_max, diagnostics=diag)


def trinomial_corner(k: int) -> int:
    """``(D1')^k (0,0) = (2^{k+2} - (-1)^k) / 3`` for the trinomial."""
    return (2 ** (k + 2) - (-1) ** k) // 3


def closed_series_trinomial(k_max: int = 60, cc: CoordinateChange | None = None,
                            check_up_to: int = 20) -> LyapunovEstimate:
    """``lambda = 1/4 sum_k 2^{-k} ln((2^{k+2} - (-1)^k) / 3)`` summed directly.

    With ``cc`` (the trinomial coordinate change) the closed form of the
    corner entries is first checked against exact matrix powers.
    """
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    if cc is not None:
        P = RationalMatrix.identity(cc.m)
        for k in range(1, check_up_to + 1):
            P = P @ cc.D1_prime
            if P[0, 0] != trinomial_corner(k):
                raise ArithmeticError(f"(D1')^{k}(0,0) = {P[0, 0]}, expected {trinomial_corner(k)}")
    terms = [log_abs(trinomial_corner(k)) / 2 ** k for k in range(1, k_max + 1)]
    lam = math.fsum(terms) / 4
    return LyapunovEstimate(lam, "closed_series", k_max,
                            diagnostics={"last_term": terms[-1] / 4,
                                         "checked_powers": check_up_to if cc else 0})


# Monte Carlo ---------------------------------------------------------------

def _mc_block(D: np.ndarray, k: int, samples: int, seed_seq: np.random.SeedSequence,
              renorm_every: int, mid: int) -> tuple[np.ndarray, np.ndarray]:
    """``ln ||P_k||`` and ``ln ||P_mid||`` per sample (``mid`` is a renormalisation step)."""
    rng = np.random.Generator(np.random.PCG64(seed_seq))
    m = D.shape[1]
    P = np.broadcast_to(np.eye(m), (samples, m, m)).copy()
    logs = np.zeros(samples)
    at_mid = np.zeros(samples)
    for start in range(0, k, renorm_every):
        stop = min(k, start + renorm_every)
        bits = rng.integers(0, 2, size=(stop - start, samples), dtype=np.int8)
        for row in bits:
            P = np.where(row[:, None, None] == 1, P @ D[1], P @ D[0])
        norms = np.abs(P).sum(axis=2).max(axis=1)
        P /= norms[:, None, None]
        logs += np.log(norms)
        if stop == mid:
            at_mid = logs.copy()
    return logs, at_mid


def _mean_se(x: np.ndarray) -> tuple[float, float]:
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(len(x)))


def monte_carlo(a: Automaton, k: int = 10_000, samples: int = 1000, seed: int = 0,
                workers: int | None = None, block: int = 250, renorm_every: int = 8,
                estimator: str = "increment") -> LyapunovEstimate:
    """Monte Carlo estimate from random products ``D_{z_0} ... D_{z_{k-1}}``.

    ``estimator="raw"`` is the mean of ``(1/k) ln ||P_k||``; it carries an
    ``O(1/k)`` bias from the fixed start and end directions.  The default
    ``"increment"`` uses ``(ln ||P_k|| - ln ||P_h||) / (k - h)`` with ``h``
    near ``k/2``, which cancels that bias at the price of a slightly larger
    standard error.  The norm is the maximum absolute row sum.  Samples are
    split in blocks with seeds spawned from ``seed``, so the result does not
    depend on ``workers``.
    """
    if k < 2 * renorm_every or samples < 2:
        raise ValueError(f"need k >= {2 * renorm_every} and samples >= 2")
    if estimator not in ("increment", "raw"):
        raise ValueError(f"unknown estimator {estimator!r}")
    D = np.stack([np.array(a.D0, dtype=float), np.array(a.D1, dtype=float)])
    mid = (k // 2 // renorm_every) * renorm_every
    sizes = [min(block, samples - s) for s in range(0, samples, block)]
    seqs = np.random.SeedSequence(seed).spawn(len(sizes))
    workers = workers or int(os.environ.get("ODDCOEFFS_THREADS", "1"))
    jobs = list(zip(sizes, seqs))
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            parts = list(ex.map(lambda j: _mc_block(D, k, j[0], j[1], renorm_every, mid), jobs))
    else:
        parts = [_mc_block(D, k, n, sq, renorm_every, mid) for n, sq in jobs]
    logs = np.concatenate([p[0] for p in parts])
    at_mid = np.concatenate([p[1] for p in parts])
    raw, raw_se = _mean_se(logs / k)
    inc, inc_se = _mean_se((logs - at_mid) / (k - mid))
    lam, se = (inc, inc_se) if estimator == "increment" else (raw, raw_se)
    return LyapunovEstimate(lam, "monte_carlo", k, stderr=se, seed=seed,
                            diagnostics={"samples": samples, "generator": "numpy.PCG64",
                                         "estimator": estimator, "split_step": mid,
                                         "raw_mean": raw, "raw_stderr": raw_se,
                                         "increment_mean": inc, "increment_stderr": inc_se,
                                         "seed_blocks": len(sizes), "norm": "max_row_sum",
                                         "renorm_every": renorm_every})


# empirical mean ------------------------------------------------------------

def empirical_mean(a: Automaton, K: int = 20) -> LyapunovEstimate:
    """``sum_{n < 2^K} ln count(n) / (2^K K ln 2)``, an O(1/K)-biased estimate of lambda/ln 2."""
    if not 1 <= K <= 24:
        raise ValueError("K must be in [1, 24]")
    counts = count_table(a, K)
    if (counts <= 0).any():
        raise ValueError("count table has nonpositive entries")
    mean_log = float(np.log(counts.astype(np.float64)).mean())
    exponent = mean_log / (K * LN2)
    return LyapunovEstimate(exponent * LN2, "empirical_mean", K,
                            diagnostics={"mean_log_count": mean_log,
                                         "bias": "O(1/K); the constant term of E ln count is not removed"})


# the quadrinomial rewording --------------------------------------------------

@dataclass
class ProofReport:
    steps: dict = field(default_factory=dict)
    two_lambda_over_ln2: Fraction | None = None
    lam: float | None = None

    @property
    def passed(self) -> bool:
        return all(self.steps.values())

    def to_dict(self) -> dict:
        return {"steps": self.steps, "passed": self.passed,
                "two_lambda_over_ln2": str(self.two_lambda_over_ln2), "lambda": self.lam}


def _mat(M) -> np.ndarray:
    return np.array(M, dtype=object)


def verify_rewording_quadrinomial(a: Automaton, j_max: int = 20, k_max: int = 20) -> ProofReport:
    """Exact integer check that the quadrinomial has ``lambda = ln(2)/2``.

    Words are regrouped as ``D1 D0^j`` blocks (probability ``2^{-(j+1)}``),
    which collapse to three matrices whose lower-right 2x2 parts are
    ``a1 b1^T``, ``M`` and ``a2 b2^T``.
    """
    rep = ProofReport()
    D0, D1 = _mat(a.D0), _mat(a.D1)

    def need(step: str, ok: bool):
        rep.steps[step] = bool(ok)
        if not ok:
            raise ProofCheckError(f"proof step failed: {step}", step)

    need("shape", D0.shape == (3, 3))
    need("tilde_D0", (D1 == _mat([[0, 0, 0], [2, 0, 0], [0, 1, 2]])).all())
    need("tilde_D1", (D1.dot(D0) == _mat([[0, 0, 0], [2, 4, 0], [0, 0, 1]])).all())
    const = _mat([[0, 0, 0], [2, 4, 4], [0, 0, 0]])
    P = D0.dot(D0)
    ok = True
    for _ in range(2, j_max + 1):
        ok &= bool((D1.dot(P) == const).all())
        P = P.dot(D0)
    need("tilde_Dj_constant", ok)
    tildes = [D1, D1.dot(D0), D1.dot(D0).dot(D0)]
    need("first_rows_zero", all((T[0] == 0).all() for T in tildes))

    a1, b1 = _mat([0, 1]), _mat([1, 2])
    M = _mat([[4, 0], [0, 1]])
    a2, b2 = _mat([1, 0]), _mat([4, 4])
    need("rank_one_a1b1", (tildes[0][1:, 1:] == np.outer(a1, b1)).all())
    need("middle_M", (tildes[1][1:, 1:] == M).all())
    need("rank_one_a2b2", (tildes[2][1:, 1:] == np.outer(a2, b2)).all())

    expected = {(1, 1): lambda k: 2, (1, 2): lambda k: 4,
                (2, 1): lambda k: 2 ** (2 * k), (2, 2): lambda k: 2 ** (2 * (k + 1))}
    alphas, betas = {1: a1, 2: a2}, {1: b1, 2: b2}
    ok = True
    Mk = _mat([[1, 0], [0, 1]])
    for k in range(k_max + 1):
        for (i, j), f in expected.items():
            ok &= int(betas[j].dot(Mk.dot(alphas[i]))) == f(k)
        Mk = Mk.dot(M)
    need("power_table", ok)

    # 2 lambda / ln 2 = sum_{i,j} p_i p_j sum_k q^k log2(b_j^T M^k a_i), summed in closed form:
    # sum q^k = 1/(1-q), sum k q^k = q/(1-q)^2.
    p = {1: Fraction(1, 2), 2: Fraction(1, 4)}
    qw = Fraction(1, 4)
    geo, lin = 1 / (1 - qw), qw / (1 - qw) ** 2
    # log2 of the table entries as c0 + c1*k
    logs = {(1, 1): (1, 0), (1, 2): (2, 0), (2, 1): (0, 2), (2, 2): (2, 2)}
    total = sum(p[i] * p[j] * (c0 * geo + c1 * lin) for (i, j), (c0, c1) in logs.items())
    need("weighted_sum_is_one", total == 1)
    # direct partial sums of the same series agree with the closed form
    partial = sum(p[i] * p[j] * qw ** k * (c0 + c1 * k)
                  for (i, j), (c0, c1) in logs.items() for k in range(60))
    need("partial_sums_converge", abs(partial - total) < Fraction(1, 10 ** 30))
    rep.two_lambda_over_ln2 = total
    rep.lam = float(total) * LN2 / 2
    return rep

