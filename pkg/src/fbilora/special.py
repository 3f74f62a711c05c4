"""Kummer's confluent hypergeometric function 1F1 in log space.

Only the real, non-negative-argument case is needed here. Terms are summed as
logarithms so that arguments in the thousands do not overflow.
"""
import math

import numpy as np

SERIES_RTOL = 1e-16
MAX_TERMS = 200_000


def _logsumexp(logs):
    logs = np.asarray(logs, dtype=float)
    top = logs.max()
    if not np.isfinite(top):
        return top
    return top + math.log(math.fsum(np.exp(logs - top)))


def _log_poch(x, j):
    """log of the rising factorial (x)_j for x > 0."""
    return math.lgamma(x + j) - math.lgamma(x)


def _kummer_terminating(kappa, b, z):
    """log 1F1(b + kappa; b; z) = z + log 1F1(-kappa; b; -z), a positive finite sum."""
    if z == 0:
        return 0.0
    j = np.arange(kappa + 1)
    logs = [
        math.lgamma(kappa + 1) - math.lgamma(jj + 1) - math.lgamma(kappa - jj + 1)
        + jj * math.log(z) - _log_poch(b, jj)
        for jj in j
    ]
    return z + _logsumexp(logs)


def log_hyp1f1_shifted(kappas, b, z):
    """Vectorised ``log 1F1(b + k; b; z)`` for integer ``k >= 0`` via Kummer's transformation.

    ``1F1(b+k; b; z) = exp(z) * sum_j C(k, j) z**j / (b)_j``, every term positive.
    """
    kappas = np.asarray(kappas, dtype=np.int64)
    if z == 0:
        return np.zeros(kappas.shape)
    top = int(kappas.max()) if kappas.size else 0
    j = np.arange(top + 1)
    lg = np.array([math.lgamma(x + 1) for x in range(top + 1)])
    log_poch = np.array([_log_poch(b, jj) for jj in j])
    k = kappas[..., None]
    with np.errstate(invalid="ignore"):
        log_binom = np.where(j <= k, lg[np.minimum(k, top)] - lg[j] - lg[np.maximum(k - j, 0)], -np.inf)
    logs = log_binom + j * math.log(z) - log_poch
    peak = logs.max(axis=-1, keepdims=True)
    return z + peak[..., 0] + np.log(np.exp(logs - peak).sum(axis=-1))


def _series(a, b, z):
    """Direct Maclaurin series; all terms positive for a >= 0, b > 0, z >= 0."""
    log_sum = 0.0
    log_term = 0.0
    j = 0
    while True:
        if a + j == 0:
            return log_sum
        log_term += math.log(a + j) + math.log(z) - math.log(b + j) - math.log(j + 1)
        j += 1
        log_sum = np.logaddexp(log_sum, log_term)
        if j > z and log_term - log_sum < math.log(SERIES_RTOL):
            return float(log_sum)
        if j >= MAX_TERMS:
            raise ArithmeticError(f"1F1({a}; {b}; {z}) series did not converge in {MAX_TERMS} terms")


def log_hyp1f1(a, b, z):
    """``log 1F1(a; b; z)`` for ``b > 0``, ``z >= 0`` and ``a >= 0`` or ``a`` a non-positive integer.

    When ``a - b`` is a non-negative integer the Kummer transformation turns the
    series into a finite sum of positive terms, which is exact up to rounding
    for any ``z``.
    """
    if b <= 0:
        raise ValueError("b must be positive")
    if z < 0:
        raise ValueError("only z >= 0 is supported")
    if z == 0:
        return 0.0
    diff = a - b
    if diff >= 0 and float(diff).is_integer():
        return _kummer_terminating(int(diff), b, z)
    if a < 0:
        if not float(a).is_integer():
            raise ValueError("negative non-integer a is not supported")
        # terminating series with alternating terms
        n = int(-a)
        total = math.fsum(
            math.exp(_log_poch_signed(a, j) - _log_poch(b, j) - math.lgamma(j + 1) + j * math.log(z))
            * (-1) ** j
            for j in range(n + 1)
        )
        if total <= 0:
            raise ArithmeticError("1F1 is non-positive here; log undefined")
        return math.log(total)
    return _series(a, b, z)


def _log_poch_signed(a, j):
    """log |(a)_j| for a non-positive integer a and j <= -a."""
    return math.lgamma(-a + 1) - math.lgamma(-a - j + 1)


def hyp1f1(a, b, z):
    return math.exp(log_hyp1f1(a, b, z))


__all__ = ["log_hyp1f1", "log_hyp1f1_shifted", "hyp1f1"]
