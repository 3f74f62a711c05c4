"""Chirp synthesis and DFT detection for conventional LoRa and both FBI schemes.

Everything is batch-first: bit blocks of shape ``(..., n_tot)`` become frames of
shape ``(..., 2**sf)`` and back. Top-k selections break ties toward the lowest
index so that a zero input demodulates deterministically.
"""
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .combinadic import bits_to_int, int_to_bits, rank_batch, unrank_batch, MAX_BATCH_BITS
from .core import LoRaParams, Scheme, SchemeConfig


@lru_cache(maxsize=16)
def _unit_upchirp(m):
    k = np.arange(m)
    chirp = np.exp(2j * np.pi * k.astype(np.float64) ** 2 / (2 * m)) / np.sqrt(m)
    chirp.setflags(write=False)
    return chirp


@lru_cache(maxsize=16)
def _dechirp_ref(m):
    k = np.arange(m)
    ref = np.exp(-2j * np.pi * k.astype(np.float64) ** 2 / (2 * m))
    ref.setflags(write=False)
    return ref


def _params(obj):
    return obj.base if isinstance(obj, SchemeConfig) else obj


def chirps(bins, m):
    """Unit-energy upchirps cyclically shifted to ``bins`` (shape ``bins.shape + (m,)``)."""
    bins = np.asarray(bins, dtype=np.int64)
    k = np.arange(m)
    return _unit_upchirp(m)[(bins[..., None] + k) % m]


def lora_modulate(o, params):
    """Conventional LoRa symbol(s) ``o`` with energy ``es`` per symbol."""
    p = _params(params)
    m = p.chips_per_symbol
    o = np.asarray(o)
    if np.any(o < 0) or np.any(o >= m):
        raise ValueError(f"symbol out of range [0, {m - 1}]")
    return np.sqrt(p.es) * chirps(o, m)


def downchirp(params):
    p = _params(params)
    m = p.chips_per_symbol
    return _dechirp_ref(m) / np.sqrt(m)


def dechirp_dft(frame, params):
    """Unitary DFT of the dechirped frame(s); a unit chirp at ``o`` maps to bin ``o``."""
    p = _params(params)
    m = p.chips_per_symbol
    frame = np.asarray(frame)
    if frame.shape[-1] != m:
        raise ValueError(f"frame length {frame.shape[-1]} != 2^sf = {m}")
    return np.fft.fft(frame * _dechirp_ref(m), axis=-1, norm="ortho")


def lora_demodulate(frame, params):
    spectrum = dechirp_dft(frame, params)
    # np.argmax returns the first maximum: ties go to the lowest bin
    return np.argmax(np.abs(spectrum), axis=-1)


def top_k(values, k):
    """Indices of the ``k`` largest entries along the last axis, ties to lower index."""
    order = np.argsort(-values, axis=-1, kind="stable")
    return order[..., :k]


@dataclass(frozen=True)
class IndexSelection:
    """Active groups and per-group offsets for a batch of symbols.

    ``group_indices`` is increasing along its last axis; ``per_group_offsets``
    row ``j`` belongs to ``group_indices[..., j]`` and is decreasing.
    """

    group_indices: np.ndarray
    per_group_offsets: np.ndarray

    def absolute_bins(self, n_g):
        return (self.group_indices[..., None] * n_g + self.per_group_offsets).reshape(
            self.group_indices.shape[:-1] + (-1,))


def _check_bits(bits, cfg):
    bits = np.asarray(bits)
    if bits.shape[-1] != cfg.n_tot:
        raise ValueError(f"bit block length {bits.shape[-1]} != n_tot = {cfg.n_tot}")
    if cfg.n_b_per > MAX_BATCH_BITS or cfg.n_b_gi > MAX_BATCH_BITS:
        raise ValueError("configs with more than 62 bits per field are not supported")
    return bits


def _split_fields(bits, cfg):
    """(in-group slices ``(..., n_slices, n_b_per)``, group-index field or None)."""
    if cfg.scheme is Scheme.SCHEME_II:
        body = bits[..., : cfg.n_gs * cfg.n_b_per]
        return body.reshape(bits.shape[:-1] + (cfg.n_gs, cfg.n_b_per)), bits[..., cfg.n_gs * cfg.n_b_per:]
    return bits.reshape(bits.shape[:-1] + (cfg.g_num, cfg.n_b_per)), None


def map_bits(bits, cfg):
    """Index mapper: bit blocks -> :class:`IndexSelection`."""
    bits = _check_bits(bits, cfg)
    slices, gi_field = _split_fields(bits, cfg)
    offsets = unrank_batch(bits_to_int(slices), cfg.n_ac, cfg.f_num)
    if gi_field is None:
        groups = np.broadcast_to(np.arange(cfg.g_num), bits.shape[:-1] + (cfg.g_num,))
    else:
        groups = unrank_batch(bits_to_int(gi_field), cfg.g_ac, cfg.n_gs)[..., ::-1]
    return IndexSelection(np.ascontiguousarray(groups), offsets)


def modulate(bits, cfg):
    """Frames for bit blocks under any scheme (conventional uses ``sf`` MSB-first bits)."""
    if cfg.scheme is Scheme.CONVENTIONAL:
        bits = _check_bits(bits, cfg)
        return lora_modulate(bits_to_int(bits), cfg.base)
    sel = map_bits(bits, cfg)
    bins = sel.absolute_bins(cfg.n_g)
    amp = np.sqrt(cfg.es / cfg.active_bins)
    return amp * chirps(bins, cfg.chips_per_symbol).sum(axis=-2)


def scheme1_modulate(bits, cfg):
    if cfg.scheme is not Scheme.SCHEME_I:
        raise ValueError("scheme1_modulate needs a scheme I config")
    return modulate(bits, cfg)


def scheme2_modulate(bits, cfg):
    if cfg.scheme is not Scheme.SCHEME_II:
        raise ValueError("scheme2_modulate needs a scheme II config")
    return modulate(bits, cfg)


def _clamped_bits(seqs, m1, n_bits):
    z = np.minimum(rank_batch(seqs, m1), (1 << n_bits) - 1)
    return int_to_bits(z, n_bits)


def detect(spectrum, cfg):
    """Estimate the :class:`IndexSelection` from a dechirped spectrum."""
    mag = np.abs(spectrum)
    lead = mag.shape[:-1]
    per_group = mag.reshape(lead + (cfg.g_num, cfg.n_g))[..., : cfg.g_ac, : cfg.n_ac]
    if cfg.scheme is Scheme.SCHEME_II:
        energy = np.sum(per_group ** 2, axis=-1)
        groups = np.sort(top_k(energy, cfg.n_gs), axis=-1)
        per_group = np.take_along_axis(per_group, groups[..., None], axis=-2)
    else:
        groups = np.broadcast_to(np.arange(cfg.g_num), lead + (cfg.g_num,))
    offsets = -np.sort(-top_k(per_group, cfg.f_num), axis=-1)
    return IndexSelection(groups, offsets)


def demap(sel, cfg):
    """Index demapper: :class:`IndexSelection` -> bit blocks, clamping off-codebook picks."""
    body = _clamped_bits(sel.per_group_offsets, cfg.n_ac, cfg.n_b_per)
    body = body.reshape(body.shape[:-2] + (-1,))
    if cfg.scheme is not Scheme.SCHEME_II:
        return body
    gi = _clamped_bits(sel.group_indices[..., ::-1], cfg.g_ac, cfg.n_b_gi)
    return np.concatenate([body, gi], axis=-1)


def demodulate(frame, cfg):
    """Bit decisions for frame(s) under any scheme."""
    if cfg.scheme is Scheme.CONVENTIONAL:
        return int_to_bits(lora_demodulate(frame, cfg.base), cfg.n_tot)
    return demap(detect(dechirp_dft(frame, cfg.base), cfg), cfg)


def scheme1_demodulate(frame, cfg):
    if cfg.scheme is not Scheme.SCHEME_I:
        raise ValueError("scheme1_demodulate needs a scheme I config")
    return demodulate(frame, cfg)


def scheme2_demodulate(frame, cfg):
    if cfg.scheme is not Scheme.SCHEME_II:
        raise ValueError("scheme2_demodulate needs a scheme II config")
    return demodulate(frame, cfg)


def write_iq(path, frames):
    """Dump frames as interleaved little-endian float64 I/Q, one symbol per record."""
    frames = np.atleast_2d(np.asarray(frames, dtype=np.complex128))
    out = np.empty(frames.shape[:-1] + (2 * frames.shape[-1],), dtype="<f8")
    out[..., 0::2] = frames.real
    out[..., 1::2] = frames.imag
    out.tofile(path)


def read_iq(path, params):
    m = _params(params).chips_per_symbol
    raw = np.fromfile(path, dtype="<f8")
    if raw.size % (2 * m):
        raise ValueError(f"file size is not a whole number of {m}-chip records")
    raw = raw.reshape(-1, 2 * m)
    return raw[:, 0::2] + 1j * raw[:, 1::2]


__all__ = [
    "chirps", "lora_modulate", "downchirp", "dechirp_dft", "lora_demodulate", "top_k",
    "IndexSelection", "map_bits", "modulate", "scheme1_modulate", "scheme2_modulate",
    "detect", "demap", "demodulate", "scheme1_demodulate", "scheme2_demodulate",
    "write_iq", "read_iq", "LoRaParams",
]
