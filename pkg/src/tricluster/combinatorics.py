"""Log-space combinatorial kernels: factorials, binomials, and
cumulative Stirling-number counts B(n,k) = sum_{j<=k} S(n,j).

Everything is exact (log-sum-exp over the standard recurrences) up to
EXACT_STIRLING_LIMIT set sizes; beyond that B(n,k) falls back to the
dominant-term bound sum_j j^n / j!, which is what the exact sum
converges to for n >> k. Tables are grown on demand and kept module
level; growth is guarded by a lock so concurrent readers are safe.
"""

from __future__ import annotations

import math
import threading

import numpy as np
from scipy.special import gammaln

# above this n, log B(n,k) switches to the dominant-term approximation
EXACT_STIRLING_LIMIT = 3000

_lock = threading.Lock()
_log_fact = np.zeros(1)                 # _log_fact[n] = log(n!)
_log_stirling_rows: list[np.ndarray] = []   # row n: log S(n, 0..n)
_log_cum_rows: list[np.ndarray] = []        # row n: log B(n, 0..n)


def _grow_factorials(nmax: int) -> None:
    global _log_fact
    if nmax < len(_log_fact):
        return
    with _lock:
        if nmax < len(_log_fact):
            return
        size = max(nmax + 1, 2 * len(_log_fact))
        _log_fact = gammaln(np.arange(size + 1, dtype=float) + 1.0)


def log_factorial(n: int) -> float:
    """log(n!) in nats, exact to machine precision."""
    if n < 0:
        raise ValueError(f"log_factorial of negative n={n}")
    if n < len(_log_fact):
        return float(_log_fact[n])
    return math.lgamma(n + 1.0)


def log_factorial_table(nmax: int) -> np.ndarray:
    """Read-only array t with t[n] = log(n!) for n = 0..nmax."""
    _grow_factorials(nmax)
    return _log_fact


_log_fact_list: list[float] = []


def log_factorial_list(nmax: int) -> list[float]:
    """Same table as a plain list; scalar indexing is much faster than
    on an ndarray, which matters in the optimizer's inner loops."""
    global _log_fact_list
    if nmax >= len(_log_fact_list):
        _grow_factorials(nmax)
        with _lock:
            if nmax >= len(_log_fact_list):
                _log_fact_list = _log_fact.tolist()
    return _log_fact_list


def log_binomial(n: int, k: int) -> float:
    """log C(n,k)."""
    if k < 0 or k > n:
        raise ValueError(f"binomial out of range: n={n}, k={k}")
    return log_factorial(n) - log_factorial(k) - log_factorial(n - k)


def _grow_stirling(nmax: int) -> None:
    with _lock:
        if not _log_stirling_rows:
            row0 = np.array([0.0])  # S(0,0) = 1
            _log_stirling_rows.append(row0)
            _log_cum_rows.append(np.array([-np.inf]))
        while len(_log_stirling_rows) <= nmax:
            n = len(_log_stirling_rows)
            prev = _log_stirling_rows[n - 1]
            row = np.full(n + 1, -np.inf)
            # S(n,k) = k S(n-1,k) + S(n-1,k-1)
            row[1:n] = np.logaddexp(np.log(np.arange(1, n)) + prev[1:n],
                                    prev[0:n - 1])
            row[n] = 0.0  # S(n,n) = 1
            if n == 1:
                row[1] = 0.0
            cum = np.full(n + 1, -np.inf)
            cum[1:] = np.logaddexp.accumulate(row[1:])
            _log_stirling_rows.append(row)
            _log_cum_rows.append(cum)


def log_cumulative_stirling(n: int, k: int) -> float:
    """log B(n,k), the log count of partitions of n items into at most
    k nonempty parts."""
    if n < 1 or k < 1:
        raise ValueError(f"cumulative Stirling out of range: n={n}, k={k}")
    k = min(k, n)  # parts beyond n are necessarily empty
    if n > EXACT_STIRLING_LIMIT:
        return _approx_log_cumulative_stirling(n, k)
    if len(_log_stirling_rows) <= n:
        _grow_stirling(n)
    return float(_log_cum_rows[n][k])


def uses_stirling_approximation(n: int) -> bool:
    return n > EXACT_STIRLING_LIMIT


def _approx_log_cumulative_stirling(n: int, k: int) -> float:
    # S(n,j) <= j^n / j!, tight for n >> j; B(n,k) ~ sum_j j^n / j!
    j = np.arange(1, k + 1, dtype=float)
    terms = n * np.log(j) - gammaln(j + 1.0)
    m = terms.max()
    return float(m + np.log(np.exp(terms - m).sum()))
