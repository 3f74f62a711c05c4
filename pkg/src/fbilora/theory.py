"""Closed-form error probabilities, Rayleigh averaging and throughput.

Conditional probabilities take ``snr = alpha * Es / N0``. Index-detection
errors are modelled per active bin (``p_ie``) and per active group
(``p_gie``); bit error rates combine them through pairwise weights
enumerated over the mapped codebook.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb

import mpmath
import numpy as np
from scipy.special import roots_laguerre

from .combinadic import codebook
from .core import Scheme
from .special import log_hyp1f1_shifted

ENUMERATION_CAP_BITS = 15
CHANNELS = ("awgn", "rayleigh")
# float evaluation is kept only while sum|terms| / |sum| stays below this
_MAX_CANCELLATION = 1e5


class EnumerationCapError(ValueError):
    """A codebook is too large for exact pairwise enumeration."""


class QuadratureError(ArithmeticError):
    def __init__(self, message, previous, current):
        super().__init__(f"{message}: previous={previous!r}, current={current!r}")
        self.previous = previous
        self.current = current


@dataclass(frozen=True)
class CondErrorContext:
    """Conditioning point for the detection error probabilities."""

    snr_es: float
    n_ac: int
    f_num: int
    g_num: int
    n_gs: int | None = None
    g_ac: int | None = None
    n_g: int | None = None

    def __post_init__(self):
        if not self.snr_es >= 0:
            raise ValueError("snr_es must be non-negative")

    @classmethod
    def from_config(cls, cfg, snr_es):
        return cls(float(snr_es), cfg.n_ac, cfg.f_num, cfg.g_num, cfg.n_gs, cfg.g_ac, cfg.n_g)

    @property
    def s_lambda_sq(self):
        """Per-bin peak power of scheme I in units of N0 (Rice K factor)."""
        return self.snr_es / (self.f_num * self.g_num)

    @property
    def group_noncentrality(self):
        """Noncentrality of an active scheme II group energy in units of N0."""
        return self.snr_es / self.n_gs


# ---------------------------------------------------------------- index errors

def p_ie_closed_form(snr_bin, n):
    """Probability that the largest of ``n`` noise bins beats one active bin.

    ``snr_bin`` is the active bin's peak power over N0. The alternating
    binomial sum cancels badly at low SNR, so it switches to ``mpmath``
    whenever float64 would lose more than five digits.
    """
    if n <= 0:
        return 0.0
    q = np.arange(1, n + 1)
    log_mag = (
        np.array([math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1) for k in q])
        - np.log(q + 1.0)
        - q / (q + 1.0) * snr_bin
    )
    mags = np.exp(log_mag)
    signed = np.where(q % 2 == 1, mags, -mags)
    total = math.fsum(signed)
    abs_total = math.fsum(mags)
    if abs_total == 0.0:
        return 0.0
    if total > 0 and abs_total / total < _MAX_CANCELLATION:
        return total
    # digits needed: cancellation depth plus a lower bound on the result's magnitude
    lost = math.log10(abs_total) + snr_bin / (2 * math.log(10)) + math.log10(n + 1)
    with mpmath.workdps(int(lost) + 30):
        x = mpmath.mpf(snr_bin)
        acc = mpmath.mpf(0)
        for k in range(1, n + 1):
            term = mpmath.binomial(n, k) / (k + 1) * mpmath.exp(-x * k / (k + 1))
            acc += term if k % 2 else -term
        return float(acc)


def p_ie_scheme1_cond(ctx):
    return p_ie_closed_form(ctx.snr_es / (ctx.f_num * ctx.g_num), ctx.n_ac - ctx.f_num)


def p_ie_scheme2_cond(ctx):
    return p_ie_closed_form(ctx.snr_es / (ctx.f_num * ctx.n_gs), ctx.n_ac - ctx.f_num)


@dataclass(frozen=True)
class SigmaTable:
    """Coefficients of ``(sum_{l<n_ac} v**l / l!) ** q1`` from the power-series recursion.

    Kept as exact fractions; entries can be far below the float range.
    """

    q1: int
    n_ac: int
    weights: tuple
    coefficients: tuple

    def as_float(self):
        return np.array([float(c) for c in self.coefficients])

    def log_coefficients(self):
        return np.array([math.log(c.numerator) - math.log(c.denominator) for c in self.coefficients])

    def evaluate(self, v):
        """The generating polynomial at ``v``, in floating point."""
        return math.fsum(float(c) * v ** k for k, c in enumerate(self.coefficients))


@lru_cache(maxsize=256)
def sigma_table(q1, n_ac):
    if q1 < 1 or n_ac < 1:
        raise ValueError("need q1 >= 1 and n_ac >= 1")
    top = q1 * (n_ac - 1)
    weights = tuple(Fraction(1, math.factorial(ell)) for ell in range(n_ac))
    sigma = [Fraction(1)]
    for kappa in range(1, top + 1):
        acc = Fraction(0)
        for ell in range(1, min(kappa, n_ac - 1) + 1):
            acc += (ell * q1 - kappa + ell) * weights[ell] * sigma[kappa - ell]
        sigma.append(acc / kappa)
    return SigmaTable(q1, n_ac, weights, tuple(sigma))


@lru_cache(maxsize=64)
def _gie_log_prefactors(q1, n_ac):
    """log(sigma_k * Gamma(k+N) / (Gamma(N) (1+q1)^(k+N))) for every k."""
    log_sigma = sigma_table(q1, n_ac).log_coefficients()
    kappa = np.arange(len(log_sigma))
    lg = np.array([math.lgamma(k + n_ac) for k in kappa]) - math.lgamma(n_ac)
    return log_sigma + lg - (kappa + n_ac) * math.log1p(q1)


def _gie_inner(q1, n_ac, s):
    """E[Q^q1] where Q is the upper-tail probability of a noise group energy
    evaluated at an active group's energy with noncentrality ``s``."""
    pre = _gie_log_prefactors(q1, n_ac)
    logs = pre - s + log_hyp1f1_shifted(np.arange(len(pre)), n_ac, s / (1 + q1))
    top = logs.max()
    if top == -math.inf:
        return 0.0
    return math.exp(top) * math.fsum(np.exp(logs - top))


def p_gie_closed_form(snr_group, n_ac, m):
    """Probability that the most energetic of ``m`` idle groups beats one active group.

    Energies are summed over ``n_ac`` bins; ``snr_group`` is the active group's
    noncentrality over N0.
    """
    if m <= 0:
        return 0.0
    inner = [_gie_inner(q1, n_ac, snr_group) for q1 in range(1, m + 1)]
    terms = [comb(m, q1) * (1 if q1 % 2 else -1) * t for q1, t in zip(range(1, m + 1), inner)]
    total = math.fsum(terms)
    abs_total = math.fsum(abs(t) for t in terms)
    if abs_total == 0.0:
        return 0.0
    if total > 0 and abs_total / total < _MAX_CANCELLATION:
        return total
    return _p_gie_mp(snr_group, n_ac, m, abs_total)


def _p_gie_mp(snr_group, n_ac, m, abs_total):
    lost = math.log10(abs_total) + snr_group / (2 * math.log(10)) + 10
    with mpmath.workdps(int(lost) + 30):
        s = mpmath.mpf(snr_group)
        acc = mpmath.mpf(0)
        for q1 in range(1, m + 1):
            table = sigma_table(q1, n_ac)
            inner = mpmath.mpf(0)
            for k, c in enumerate(table.coefficients):
                inner += (mpmath.mpf(c.numerator) / c.denominator * mpmath.gamma(k + n_ac)
                          / (mpmath.gamma(n_ac) * mpmath.power(1 + q1, k + n_ac))
                          * mpmath.exp(-s) * mpmath.hyp1f1(k + n_ac, n_ac, s / (1 + q1)))
            term = comb(m, q1) * inner
            acc += term if q1 % 2 else -term
        return float(acc)


def p_gie_scheme2_cond(ctx):
    if ctx.n_gs is None or ctx.g_ac is None:
        raise ValueError("p_gie needs a scheme II context")
    return p_gie_closed_form(ctx.group_noncentrality, ctx.n_ac, ctx.g_ac - ctx.n_gs)


# ------------------------------------------------------------------ quadrature

@lru_cache(maxsize=16)
def _laguerre_rule(n):
    nodes, weights = roots_laguerre(n)
    with np.errstate(divide="ignore"):
        log_w = np.log(weights)
    return nodes, log_w


def integrate_rayleigh(f, *, scale=1.0, tol=1e-9, min_nodes=16, max_nodes=256, atol=1e-300):
    """``int_0^inf f(a) exp(-a) da`` by Gauss-Laguerre with node doubling.

    ``f`` maps a 1-D array of fading powers to an array whose first axis
    matches. ``scale`` stretches the rule to ``a = scale * t``; pick it near
    ``1 / (1 + r)`` where ``r`` is the slowest exponential decay rate of ``f``
    so that sharply decaying integrands still get nodes where they live.
    """
    if not 0 < scale <= 1:
        raise ValueError("scale must lie in (0, 1]")
    previous = None
    n = min_nodes
    while True:
        nodes, log_w = _laguerre_rule(n)
        alpha = scale * nodes
        # weight exp(-t) becomes exp(-scale t); fold the ratio into the weights
        w = np.where(np.isfinite(log_w), np.exp(log_w + (1 - scale) * nodes), 0.0) * scale
        values = np.asarray(f(alpha), dtype=float)
        current = np.tensordot(w, values, axes=(0, 0))
        if previous is not None:
            err = np.abs(current - previous)
            if np.all(err <= tol * np.abs(current) + atol):
                return current if current.ndim else float(current)
        if n >= max_nodes:
            raise QuadratureError("Gauss-Laguerre did not converge", previous, current)
        previous = current
        n *= 2


def _decay_scale(rate):
    return 1.0 / (1.0 + rate)


# ---------------------------------------------------------------- pairwise sums

@lru_cache(maxsize=32)
@lru_cache(maxsize=32)
def pairwise_weights(m1, m2, n_bits, normalize=True):
    """Bit-error weights ``W[k]`` so that ``BER|p = sum_k W[k] p^k (1-p)^(m2-k)``.

    Enumerates every ordered pair of distinct codewords ``(f, f_hat)`` in the
    mapped codebook, where ``k = |f minus f_hat|`` and the bit-error count is
    the Hamming distance of the two labels. With ``normalize`` the
    probability of ``k`` wrong indices, ``C(m2,k) p^k (1-p)^(m2-k)``, is
    shared equally among the codebook neighbours of ``f`` at distance ``k``.
    Without it every neighbour receives the full ``p^k (1-p)^(m2-k)``, the
    literal pairwise sum, which over-counts and can exceed one.

    The result is cached and read-only. A 15-bit codebook takes ~25 s.
    """
    if n_bits > ENUMERATION_CAP_BITS:
        raise EnumerationCapError(
            f"{n_bits}-bit codebook exceeds the exact-enumeration cap of "
            f"{ENUMERATION_CAP_BITS} bits; use Monte Carlo")
    n_f = 1 << n_bits
    book = codebook(m1, m2, n_bits)
    labels = np.arange(n_f, dtype=np.int64)
    if m1 <= 64:
        # index sets as bitmasks: shared indices = popcount(a & b)
        masks = np.bitwise_or.reduce(np.left_shift(np.uint64(1), book.astype(np.uint64)), axis=1)

        def distance(rows):
            return m2 - np.bitwise_count(masks[rows, None] & masks[None, :]).astype(np.int64)
    else:
        def distance(rows):
            sub = book[rows]
            return m2 - (sub[:, None, :, None] == book[None, :, None, :]).sum(axis=(2, 3))

    err_sum = np.zeros((n_f, m2 + 1))
    count = np.zeros((n_f, m2 + 1))
    chunk = max(1, (1 << 24) // (n_f * (1 if m1 <= 64 else m2 * m2)))
    for start in range(0, n_f, chunk):
        rows = slice(start, min(n_f, start + chunk))
        k = distance(rows)
        n_er = np.bitwise_count(labels[rows, None] ^ labels[None, :])
        for kk in range(1, m2 + 1):
            mask = k == kk
            err_sum[rows, kk] = np.where(mask, n_er, 0).sum(axis=1)
            count[rows, kk] = mask.sum(axis=1)
    if normalize:
        mean = np.divide(err_sum, count, out=np.zeros_like(err_sum), where=count > 0)
        binoms = np.array([comb(m2, kk) for kk in range(m2 + 1)], dtype=float)
        weights = (mean * binoms).sum(axis=0)
    else:
        weights = err_sum.sum(axis=0)
    weights = weights / (n_f * n_bits)
    weights[0] = 0.0
    weights.setflags(write=False)
    return weights


def _pairwise_ber(weights, p, m2):
    p = np.asarray(p, dtype=float)
    k = np.arange(m2 + 1)
    return np.sum(weights * p[..., None] ** k * (1 - p[..., None]) ** (m2 - k), axis=-1)


# ------------------------------------------------------------------- BER / SER

@dataclass(frozen=True)
class ErrorReport:
    ebn0_db: float
    channel: str
    ber: float
    ser: float
    ber_group_field: float | None = None
    ber_in_group: float | None = None

    def __post_init__(self):
        for name in ("ber", "ser", "ber_group_field", "ber_in_group"):
            v = getattr(self, name)
            if v is not None and not -1e-12 <= v <= 1 + 1e-12:
                raise ValueError(f"{name}={v} is not a probability")


def _es_over_n0(cfg, ebn0_db):
    return cfg.n_tot * 10.0 ** (ebn0_db / 10.0)


def _check_channel(channel):
    if channel not in CHANNELS:
        raise ValueError(f"channel must be one of {CHANNELS}, got {channel!r}")


def _average(cond, channel, slowest_rate, max_nodes=256):
    """Evaluate ``cond(alpha)`` at alpha=1 (AWGN) or average it over Rayleigh fading."""
    if channel == "awgn":
        return np.asarray(cond(np.array([1.0])), dtype=float)[0]
    return integrate_rayleigh(cond, scale=_decay_scale(slowest_rate),
                              min_nodes=min(16, max_nodes), max_nodes=max_nodes)


def _vectorized(fn):
    return lambda xs: np.array([fn(float(x)) for x in np.atleast_1d(xs)])


def _clip(x):
    return float(min(max(x, 0.0), 1.0))


def ber_conventional(cfg, ebn0_db, channel="awgn", *, max_nodes=256):
    """Noncoherent orthogonal 2^sf-ary detection: exact SER and the matching BER."""
    _check_channel(channel)
    snr0 = _es_over_n0(cfg, ebn0_db)
    m = cfg.chips_per_symbol
    ser_at = _vectorized(lambda a: p_ie_closed_form(a * snr0, m - 1))
    ser = float(_average(ser_at, channel, snr0 / 2, max_nodes))
    ber = ser * (m / 2) / (m - 1)
    return ErrorReport(float(ebn0_db), channel, _clip(ber), _clip(ser))


def ber_scheme1(cfg, ebn0_db, channel="awgn", *, max_nodes=256):
    """BER and SER of scheme I from the per-bin error probability."""
    if cfg.scheme is not Scheme.SCHEME_I:
        raise ValueError("ber_scheme1 needs a scheme I config")
    _check_channel(channel)
    weights = pairwise_weights(cfg.n_ac, cfg.f_num, cfg.n_b_per)
    snr0 = _es_over_n0(cfg, ebn0_db)
    n = cfg.n_ac - cfg.f_num
    d = cfg.f_num * cfg.g_num

    def cond(alphas):
        p = np.array([p_ie_closed_form(a * snr0 / d, n) for a in np.atleast_1d(alphas)])
        ber = _pairwise_ber(weights, p, cfg.f_num)
        ser = 1 - (1 - p) ** (cfg.f_num * cfg.g_num)
        return np.stack([ber, ser], axis=-1)

    ber, ser = _average(cond, channel, snr0 / (2 * d), max_nodes)
    return ErrorReport(float(ebn0_db), channel, _clip(ber), _clip(ser))


def ber_scheme2(cfg, ebn0_db, channel="awgn", *, max_nodes=256):
    """Total, group-field and in-group BER plus SER of scheme II.

    Bits riding in a misdetected group are counted as coin flips; the
    expected fraction of misdetected groups given the fading is ``p_gie``.
    """
    if cfg.scheme is not Scheme.SCHEME_II:
        raise ValueError("ber_scheme2 needs a scheme II config")
    _check_channel(channel)
    w_in = pairwise_weights(cfg.n_ac, cfg.f_num, cfg.n_b_per)
    w_gi = pairwise_weights(cfg.g_ac, cfg.n_gs, cfg.n_b_gi)
    snr0 = _es_over_n0(cfg, ebn0_db)
    n = cfg.n_ac - cfg.f_num
    d = cfg.f_num * cfg.n_gs
    m = cfg.g_ac - cfg.n_gs

    def cond(alphas):
        rows = []
        for a in np.atleast_1d(alphas):
            pie = p_ie_closed_form(a * snr0 / d, n)
            pg = p_gie_closed_form(a * snr0 / cfg.n_gs, cfg.n_ac, m)
            rows.append((pie, pg))
        pie, pg = np.array(rows).T
        b_gi = _pairwise_ber(w_gi, pg, cfg.n_gs)
        b_in = _pairwise_ber(w_in, pie, cfg.f_num) * (1 - pg) + 0.5 * pg
        ser = 1 - (1 - pg) ** cfg.n_gs * (1 - pie) ** (cfg.f_num * cfg.n_gs)
        return np.stack([b_gi, b_in, ser], axis=-1)

    b_gi, b_in, ser = _average(cond, channel, snr0 / (2 * d), max_nodes)
    ber = (b_gi * cfg.n_b_gi + b_in * cfg.n_gs * cfg.n_b_per) / cfg.n_tot
    b_gi, b_in, ber, ser = map(_clip, (b_gi, b_in, ber, ser))
    return ErrorReport(float(ebn0_db), channel, ber, ser, b_gi, b_in)


def theory_report(cfg, ebn0_db, channel="awgn", *, max_nodes=256):
    """Dispatch to the BER/SER routine for ``cfg.scheme``.

    ``max_nodes`` caps the Gauss-Laguerre doubling on Rayleigh channels.
    """
    if cfg.scheme is Scheme.CONVENTIONAL:
        return ber_conventional(cfg, ebn0_db, channel, max_nodes=max_nodes)
    if cfg.scheme is Scheme.SCHEME_I:
        return ber_scheme1(cfg, ebn0_db, channel, max_nodes=max_nodes)
    return ber_scheme2(cfg, ebn0_db, channel, max_nodes=max_nodes)


def check_enumerable(cfg):
    """Raise :class:`EnumerationCapError` if ``cfg`` is beyond exact theory."""
    if cfg.scheme is Scheme.CONVENTIONAL:
        return
    for name, bits in (("n_b_per", cfg.n_b_per), ("n_b_gi", cfg.n_b_gi)):
        if bits > ENUMERATION_CAP_BITS:
            raise EnumerationCapError(
                f"{name}={bits} exceeds the exact-enumeration cap of {ENUMERATION_CAP_BITS} bits")


# ------------------------------------------------------------------ throughput

def packet_error_rate(p_s, f_pa=8):
    if not 0 <= p_s <= 1:
        raise ValueError("p_s must lie in [0, 1]")
    if f_pa < 1:
        raise ValueError("f_pa must be >= 1")
    return 1.0 - (1.0 - p_s) ** f_pa


def throughput(cfg, p_s, f_pa=8):
    """Correctly delivered bits per second for packets of ``f_pa`` symbols."""
    p_pa = packet_error_rate(p_s, f_pa)
    t_packet = f_pa * cfg.chips_per_symbol * cfg.base.t_chip_s
    return f_pa * cfg.n_tot * (1.0 - p_pa) / t_packet


__all__ = [
    "CondErrorContext", "SigmaTable", "ErrorReport", "EnumerationCapError", "QuadratureError",
    "p_ie_closed_form", "p_ie_scheme1_cond", "p_ie_scheme2_cond", "sigma_table",
    "p_gie_closed_form", "p_gie_scheme2_cond", "integrate_rayleigh", "pairwise_weights",
    "ber_conventional", "ber_scheme1", "ber_scheme2", "theory_report", "check_enumerable",
    "packet_error_rate", "throughput", "ENUMERATION_CAP_BITS",
]
