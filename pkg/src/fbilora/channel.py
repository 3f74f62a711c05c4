"""AWGN and quasi-static Rayleigh channels plus Eb/N0 calibration.

Fading is flat and constant over one symbol; only the power ``alpha`` is
applied since the detectors are noncoherent. ``alpha`` has density
``exp(-alpha)`` (unit mean).
"""
from dataclasses import dataclass

import numpy as np

MIN_EBN0_DB = -50.0


@dataclass(frozen=True)
class ChannelRealization:
    alpha: float
    n0: float

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError("alpha must be non-negative")
        if self.n0 < 0:
            raise ValueError("n0 must be non-negative")

    @property
    def noise_var_per_dim(self):
        return self.n0 / 2


def ebn0_to_n0(ebn0_db, cfg, es=None):
    """Noise density for a given Eb/N0 in dB, with ``Eb = Es / n_tot``.

    ``cfg`` may be a :class:`~fbilora.core.SchemeConfig` or a plain bit count.
    """
    ebn0_db = np.asarray(ebn0_db, dtype=float)
    if np.any(~np.isfinite(ebn0_db)) or np.any(ebn0_db < MIN_EBN0_DB):
        raise ValueError(f"Eb/N0 must be finite and >= {MIN_EBN0_DB} dB")
    if isinstance(cfg, (int, np.integer)):
        n_tot, es = int(cfg), 1.0 if es is None else es
    else:
        n_tot, es = cfg.n_tot, cfg.es if es is None else es
    n0 = (es / n_tot) / 10.0 ** (ebn0_db / 10.0)
    return float(n0) if n0.ndim == 0 else n0


def complex_noise(shape, n0, rng):
    """Circular complex Gaussian samples with variance ``n0/2`` per dimension."""
    z = rng.standard_normal(tuple(shape) + (2,)).view(np.complex128)[..., 0]
    return np.sqrt(n0 / 2) * z


def apply_awgn(frame, n0, rng):
    if n0 < 0:
        raise ValueError("n0 must be non-negative")
    frame = np.asarray(frame)
    if n0 == 0:
        return frame.astype(np.complex128, copy=True)
    return frame + complex_noise(frame.shape, n0, rng)


def draw_alpha(shape, rng):
    """Unit-mean exponential fading powers by inverse CDF."""
    return -np.log1p(-rng.random(shape))


def apply_rayleigh(frame, n0, rng, alpha=None):
    """Scale each symbol by ``sqrt(alpha)`` then add AWGN; returns ``(frame, alpha)``.

    Passing ``alpha`` skips the fading draw, so ``alpha=1`` consumes the
    generator exactly as :func:`apply_awgn` does.
    """
    frame = np.asarray(frame)
    if alpha is None:
        alpha = draw_alpha(frame.shape[:-1], rng)
    alpha = np.asarray(alpha, dtype=float)
    faded = np.sqrt(alpha)[..., None] * frame
    out = apply_awgn(faded, n0, rng)
    return out, (float(alpha) if alpha.ndim == 0 else alpha)


def apply_channel(frame, n0, rng, channel):
    if channel == "awgn":
        return apply_awgn(frame, n0, rng)
    if channel == "rayleigh":
        return apply_rayleigh(frame, n0, rng)[0]
    raise ValueError(f"unknown channel {channel!r}")


__all__ = [
    "ChannelRealization", "ebn0_to_n0", "complex_noise", "apply_awgn",
    "draw_alpha", "apply_rayleigh", "apply_channel", "MIN_EBN0_DB",
]
