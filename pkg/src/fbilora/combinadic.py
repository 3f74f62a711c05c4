"""Combinatorial number system: integers <-> strictly decreasing index sequences.

A sequence ``(d_m2, ..., d_2, d_1)`` with ``d_m2 > ... > d_1 >= 0`` ranks to
``C(d_m2, m2) + ... + C(d_2, 2) + C(d_1, 1)``. Scalar functions use Python
integers and work for any size; the ``*_batch`` helpers operate on ``int64``
arrays and are limited to ranks below ``2**62``.
"""
from functools import lru_cache
from math import comb

import numpy as np

MAX_BATCH_BITS = 62
_INT64_MAX = np.iinfo(np.int64).max


def _check_sequence(seq, m1, m2):
    seq = tuple(int(d) for d in seq)
    if m2 is not None and len(seq) != m2:
        raise ValueError(f"expected {m2} indices, got {len(seq)}")
    if any(a <= b for a, b in zip(seq, seq[1:])):
        raise ValueError(f"sequence {seq} is not strictly decreasing")
    if seq and seq[-1] < 0:
        raise ValueError(f"sequence {seq} has a negative index")
    if m1 is not None and seq and seq[0] >= m1:
        raise ValueError(f"index {seq[0]} out of range for m1={m1}")
    return seq


def rank(seq, m1=None, m2=None):
    """Rank of a strictly decreasing sequence.

    >>> rank((7, 6, 5), 8, 3), rank((6, 3, 0), 8, 3), rank((2, 1, 0))
    (55, 23, 0)
    """
    seq = _check_sequence(seq, m1, m2)
    n = len(seq)
    return sum(comb(d, n - j) for j, d in enumerate(seq))


def unrank(z, m1, m2):
    """Inverse of :func:`rank` by the greedy largest-binomial rule.

    >>> unrank(22, 8, 3)
    (6, 2, 1)
    """
    z = int(z)
    if m2 < 0 or m2 > m1:
        raise ValueError(f"need 0 <= m2 <= m1, got m1={m1}, m2={m2}")
    total = comb(m1, m2)
    if not 0 <= z < total:
        raise ValueError(f"Z={z} outside [0, C({m1},{m2})-1={total - 1}]")
    out = []
    d = m1 - 1
    for i in range(m2, 0, -1):
        while comb(d, i) > z:
            d -= 1
        out.append(d)
        z -= comb(d, i)
        d -= 1
    return tuple(out)


def int_to_bits(value, n_bits):
    """MSB-first bits of ``value`` as a ``uint8`` array (broadcasts over arrays)."""
    value = np.asarray(value, dtype=np.int64)
    shifts = np.arange(n_bits - 1, -1, -1, dtype=np.int64)
    return ((value[..., None] >> shifts) & 1).astype(np.uint8)


def bits_to_int(bits):
    """MSB-first integer value along the last axis."""
    bits = np.asarray(bits, dtype=np.int64)
    n = bits.shape[-1]
    if n > MAX_BATCH_BITS:
        raise ValueError(f"{n} bits exceed the {MAX_BATCH_BITS}-bit batch limit")
    weights = np.left_shift(np.int64(1), np.arange(n - 1, -1, -1, dtype=np.int64))
    return bits @ weights


def bits_to_selection(bits, n_ac, f_num):
    """Map a bit slice to ``f_num`` distinct offsets in ``[0, n_ac)``, decreasing."""
    bits = np.asarray(bits).ravel()
    n_b = len(bits)
    if comb(n_ac, f_num) < (1 << n_b):
        raise ValueError(f"{n_b} bits do not fit in C({n_ac},{f_num})")
    z = int("".join(str(int(b)) for b in bits), 2) if n_b else 0
    sel = unrank(z, n_ac, f_num)
    assert not sel or sel[0] < n_ac
    return sel


def selection_to_bits(offsets, n_ac, f_num, n_b_per):
    """Demap detected offsets to ``n_b_per`` bits.

    Combinations ranking at or above ``2**n_b_per`` lie outside the mapped
    codebook and are clamped to the all-ones slice.
    """
    seq = tuple(sorted((int(o) for o in offsets), reverse=True))
    z = rank(seq, n_ac, f_num)
    z = min(z, (1 << n_b_per) - 1)
    return np.array([(z >> s) & 1 for s in range(n_b_per - 1, -1, -1)], dtype=np.uint8)


@lru_cache(maxsize=64)
def binomial_table(m1, m2):
    """``table[d, i] = C(d, i)`` for ``d < m1``, ``i <= m2``, saturated at int64 max."""
    table = np.zeros((max(m1, 1), m2 + 1), dtype=np.int64)
    for d in range(m1):
        for i in range(m2 + 1):
            table[d, i] = min(comb(d, i), _INT64_MAX)
    table.setflags(write=False)
    return table


def rank_batch(seqs, m1):
    """Vectorised :func:`rank`; ``seqs`` has shape ``(..., m2)``, rows decreasing."""
    seqs = np.asarray(seqs, dtype=np.int64)
    m2 = seqs.shape[-1]
    table = binomial_table(m1, m2)
    cols = np.arange(m2, 0, -1)
    return table[seqs, cols].sum(axis=-1)


def unrank_batch(z, m1, m2):
    """Vectorised :func:`unrank`; returns shape ``z.shape + (m2,)``."""
    z = np.array(z, dtype=np.int64)
    table = binomial_table(m1, m2)
    out = np.empty(z.shape + (m2,), dtype=np.int64)
    rem = z.copy()
    for j, i in enumerate(range(m2, 0, -1)):
        d = np.searchsorted(table[:, i], rem, side="right") - 1
        out[..., j] = d
        rem = rem - table[d, i]
    return out


def codebook(m1, m2, n_bits):
    """All mapped combinations, row ``z`` being ``unrank(z, m1, m2)``."""
    return unrank_batch(np.arange(1 << n_bits, dtype=np.int64), m1, m2)


__all__ = [
    "rank", "unrank", "bits_to_selection", "selection_to_bits", "int_to_bits",
    "bits_to_int", "rank_batch", "unrank_batch", "binomial_table", "codebook",
]
