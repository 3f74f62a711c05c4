"""Parameter bundles and derived quantities shared by every other module.

A symbol spans ``2**sf`` chips. Frames are plain complex ``numpy`` arrays of
that length and bit blocks are ``uint8`` arrays of length ``n_tot``; both may
carry a leading batch axis.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from math import comb

import numpy as np

MIN_SF = 2


class ConfigError(ValueError):
    """Raised when a parameter combination violates a configuration invariant."""

    def __init__(self, message, parameter=None):
        super().__init__(message)
        self.parameter = parameter


class Scheme(enum.Enum):
    CONVENTIONAL = "conventional"
    SCHEME_I = "s1"
    SCHEME_II = "s2"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        aliases = {
            "conventional": cls.CONVENTIONAL, "lora": cls.CONVENTIONAL,
            "s1": cls.SCHEME_I, "i": cls.SCHEME_I, "scheme1": cls.SCHEME_I,
            "s2": cls.SCHEME_II, "ii": cls.SCHEME_II, "scheme2": cls.SCHEME_II,
        }
        try:
            return aliases[str(value).strip().lower()]
        except KeyError:
            raise ConfigError(f"unknown scheme {value!r}", "scheme") from None


@dataclass(frozen=True)
class LoRaParams:
    sf: int
    bw_hz: float = 125e3
    es: float = 1.0

    def __post_init__(self):
        if int(self.sf) != self.sf or self.sf < MIN_SF:
            raise ConfigError(f"sf must be an integer >= {MIN_SF}, got {self.sf}", "sf")
        if not self.bw_hz > 0:
            raise ConfigError("bw_hz must be positive", "bw_hz")
        if not self.es > 0:
            raise ConfigError("es must be positive", "es")

    @property
    def chips_per_symbol(self):
        return 1 << self.sf

    @property
    def t_chip_s(self):
        return 1.0 / self.bw_hz

    @property
    def t_sym_s(self):
        return self.chips_per_symbol * self.t_chip_s


def floor_log2(n):
    """Exact ``floor(log2(n))`` for a positive integer."""
    if n < 1:
        raise ValueError("floor_log2 needs a positive integer")
    return int(n).bit_length() - 1


def minimal_alphabet(n_bits, k, upper):
    """Smallest ``m`` with ``2**n_bits <= C(m, k)``, searched in ``[k, upper]``."""
    target = 1 << n_bits
    m = k
    while comb(m, k) < target:
        m += 1
        if m > upper:
            raise ConfigError(f"no alphabet <= {upper} holds {n_bits} bits with {k} picks")
    return m


@dataclass(frozen=True)
class SchemeConfig:
    """Validated modulation parameters plus everything derived from them.

    For the conventional scheme the index fields degenerate to ``f_num=1``,
    ``g_num=1`` and ``n_tot=sf``.
    """

    base: LoRaParams
    scheme: Scheme
    f_num: int = 1
    g_num: int = 1
    n_gs: int | None = None
    n_g: int = field(init=False)
    n_b_per: int = field(init=False)
    n_b_gi: int = field(init=False)
    n_ac: int = field(init=False)
    g_ac: int = field(init=False)
    n_tot: int = field(init=False)

    def __post_init__(self):
        m = self.base.chips_per_symbol
        scheme = self.scheme
        f_num, g_num, n_gs = self.f_num, self.g_num, self.n_gs
        if scheme is Scheme.CONVENTIONAL:
            if f_num != 1 or g_num != 1 or n_gs is not None:
                raise ConfigError("conventional LoRa takes no f_num/g_num/n_gs")
        if g_num < 1 or m % g_num:
            raise ConfigError(f"g_num={g_num} does not divide 2^sf={m}", "g_num")
        n_g = m // g_num
        if not 1 <= f_num <= n_g:
            raise ConfigError(f"f_num={f_num} must lie in [1, n_g={n_g}]", "f_num")
        if scheme is Scheme.SCHEME_II:
            if n_gs is None:
                raise ConfigError("scheme II requires n_gs", "n_gs")
            if not 1 <= n_gs < g_num:
                raise ConfigError(f"n_gs={n_gs} must satisfy 1 <= n_gs < g_num={g_num}", "n_gs")
        elif scheme is Scheme.SCHEME_I and n_gs is not None:
            raise ConfigError("n_gs only applies to scheme II", "n_gs")

        if scheme is Scheme.CONVENTIONAL:
            n_b_per = self.base.sf
            n_ac = m
        else:
            n_b_per = floor_log2(comb(n_g, f_num))
            if n_b_per == 0:
                raise ConfigError(
                    f"C(n_g={n_g}, f_num={f_num}) < 2 carries no information", "f_num")
            n_ac = minimal_alphabet(n_b_per, f_num, n_g)

        if scheme is Scheme.SCHEME_II:
            n_b_gi = floor_log2(comb(g_num, n_gs))
            if n_b_gi == 0:
                raise ConfigError(f"C(g_num={g_num}, n_gs={n_gs}) < 2 carries no group bits", "n_gs")
            g_ac = minimal_alphabet(n_b_gi, n_gs, g_num)
            n_tot = n_gs * n_b_per + n_b_gi
        else:
            n_b_gi = 0
            g_ac = g_num
            n_tot = n_b_per if scheme is Scheme.CONVENTIONAL else g_num * n_b_per

        for name, value in dict(n_g=n_g, n_b_per=n_b_per, n_b_gi=n_b_gi,
                                n_ac=n_ac, g_ac=g_ac, n_tot=n_tot).items():
            object.__setattr__(self, name, value)

    @property
    def sf(self):
        return self.base.sf

    @property
    def chips_per_symbol(self):
        return self.base.chips_per_symbol

    @property
    def es(self):
        return self.base.es

    @property
    def active_groups(self):
        """Number of groups carrying energy in every symbol."""
        if self.scheme is Scheme.SCHEME_II:
            return self.n_gs
        return self.g_num

    @property
    def active_bins(self):
        return self.f_num * self.active_groups

    def label(self):
        if self.scheme is Scheme.CONVENTIONAL:
            return f"conventional(sf={self.sf})"
        if self.scheme is Scheme.SCHEME_I:
            return f"s1({self.sf},{self.f_num},{self.g_num})"
        return f"s2({self.sf},{self.f_num},{self.g_num},{self.n_gs})"


def make_config(sf, scheme="s1", f_num=1, g_num=1, n_gs=None, *, bw_hz=125e3, es=1.0):
    """Build a :class:`SchemeConfig`, raising :class:`ConfigError` on bad input.

    >>> cfg = make_config(7, "s1", f_num=2, g_num=2)
    >>> cfg.n_g, cfg.n_b_per, cfg.n_ac, cfg.n_tot
    (64, 10, 46, 20)
    """
    return SchemeConfig(LoRaParams(sf, bw_hz, es), Scheme.parse(scheme), f_num, g_num, n_gs)


def frame_energy(frame):
    """Sum of squared magnitudes along the last axis."""
    frame = np.asarray(frame)
    return np.sum(frame.real ** 2 + frame.imag ** 2, axis=-1)


_CONFIG_KEYS = ("sf", "scheme", "fnum", "gnum", "ngs", "bw_hz", "es")


def config_to_dict(cfg):
    return {
        "sf": cfg.sf,
        "scheme": cfg.scheme.value,
        "fnum": cfg.f_num,
        "gnum": cfg.g_num,
        "ngs": cfg.n_gs,
        "bw_hz": cfg.base.bw_hz,
        "es": cfg.base.es,
    }


def config_to_text(cfg):
    """Flat ``key=value`` lines; ``ngs`` is omitted when unused."""
    lines = []
    for key, value in config_to_dict(cfg).items():
        if value is None:
            continue
        lines.append(f"{key}={value!r}" if isinstance(value, float) else f"{key}={value}")
    return "\n".join(lines) + "\n"


def parse_key_values(text):
    """Parse ``key=value`` lines, ignoring blanks and ``#`` comments."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        out[key.replace("-", "_").lower()] = value
    return out


def config_from_dict(values):
    values = {k.replace("-", "_").lower(): v for k, v in values.items()}
    unknown = set(values) - set(_CONFIG_KEYS)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if "sf" not in values:
        raise ConfigError("config needs sf", "sf")
    scheme = Scheme.parse(values.get("scheme", "s1"))

    def _int(key, default):
        v = values.get(key)
        return default if v in (None, "", "None") else int(v)

    return make_config(
        int(values["sf"]),
        scheme,
        f_num=_int("fnum", 1),
        g_num=_int("gnum", 1),
        n_gs=_int("ngs", None),
        bw_hz=float(values.get("bw_hz", 125e3)),
        es=float(values.get("es", 1.0)),
    )


def config_from_text(text):
    return config_from_dict(parse_key_values(text))


__all__ = [
    "ConfigError", "Scheme", "LoRaParams", "SchemeConfig", "make_config",
    "frame_energy", "floor_log2", "minimal_alphabet", "config_to_text",
    "config_from_text", "config_to_dict", "config_from_dict", "parse_key_values",
]
