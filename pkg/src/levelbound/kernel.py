"""Bitwise-mutation transition probabilities between Hamming-weight classes.

Every bit of a length-``n`` string flips independently with probability
``1/n``.  A string of weight ``m`` becomes a string of weight ``w`` when
``j`` one-bits and ``w - m + j`` zero-bits flip, for some ``j``.  All terms
are evaluated in log space so that ``n`` in the low thousands stays finite.
"""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy.special import gammaln

#: probabilities below this are treated as absent
UNDERFLOW = 1e-300


def _log_comb(a: int, b: int) -> float:
    return math.lgamma(a + 1) - math.lgamma(b + 1) - math.lgamma(a - b + 1)


def _log_rates(n: int) -> tuple[float, float]:
    log_flip = -math.log(n)
    log_keep = math.log1p(-1.0 / n) if n > 1 else -math.inf
    return log_flip, log_keep


def weight_transition(n: int, m: int, w: int) -> float:
    """Probability that mutation maps a weight-``m`` string to weight ``w``.

    Parameters
    ----------
    n : int
        String length, ``n >= 1``.
    m, w : int
        Source and target Hamming weights, ``0 <= m, w <= n``.

    Returns
    -------
    float
        Probability in ``[0, 1]``; values below ``UNDERFLOW`` are returned as 0.
    """
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    if not (0 <= m <= n and 0 <= w <= n):
        raise ValueError(f"weights must lie in [0, {n}], got m={m}, w={w}")
    log_flip, log_keep = _log_rates(n)
    logs = []
    for j in range(max(0, m - w), min(m, n - w) + 1):
        b = w - m + j
        flips = j + b
        keeps = n - flips
        term = _log_comb(m, j) + _log_comb(n - m, b) + flips * log_flip
        if keeps:
            term += keeps * log_keep
        logs.append(term)
    if not logs:
        return 0.0
    # one exponentiation per summand, largest first
    terms = sorted((math.exp(t) for t in logs), reverse=True)
    total = math.fsum(terms)
    return total if total >= UNDERFLOW else 0.0


def transition_row(n: int, m: int) -> np.ndarray:
    """Vector of ``weight_transition(n, m, w)`` for ``w = 0..n``.

    Summands for a fixed target decrease with the number of flipped one-bits,
    so accumulating in ascending ``j`` sums largest-first.
    """
    if n < 1 or not 0 <= m <= n:
        raise ValueError(f"invalid row query n={n}, m={m}")
    log_flip, log_keep = _log_rates(n)
    j = np.arange(m + 1)
    b = np.arange(n - m + 1)
    flips = j[:, None] + b[None, :]
    keeps = n - flips
    logs = (
        (gammaln(m + 1) - gammaln(j + 1) - gammaln(m - j + 1))[:, None]
        + (gammaln(n - m + 1) - gammaln(b + 1) - gammaln(n - m - b + 1))[None, :]
        + flips * log_flip
    )
    with np.errstate(invalid="ignore"):
        keep_part = np.where(keeps > 0, keeps * log_keep, 0.0)
    terms = np.exp(logs + keep_part)
    row = np.zeros(n + 1)
    for jj in range(m + 1):
        # target weight of (jj, b) is m - jj + b
        row[m - jj : m - jj + n - m + 1] += terms[jj]
    row[row < UNDERFLOW] = 0.0
    return row


@lru_cache(maxsize=32)
def _matrix(n: int) -> np.ndarray:
    mat = np.vstack([transition_row(n, m) for m in range(n + 1)])
    mat.flags.writeable = False
    return mat


def transition_matrix(n: int) -> np.ndarray:
    """Full ``(n+1, n+1)`` weight-class kernel; row ``m`` is ``transition_row(n, m)``.

    The returned array is read-only and cached per ``n``.
    """
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    return _matrix(n)
