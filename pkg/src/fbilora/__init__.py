"""Frequency-bin-index LoRa: modulation, channels, closed-form error rates and a Monte Carlo harness."""
__version__ = "0.1.0"

from .core import ConfigError, LoRaParams, Scheme, SchemeConfig, make_config  # noqa: E402
from .combinadic import rank, unrank  # noqa: E402
from .modem import demodulate, modulate  # noqa: E402
from .theory import theory_report  # noqa: E402

__all__ = [
    "__version__", "ConfigError", "LoRaParams", "Scheme", "SchemeConfig", "make_config",
    "rank", "unrank", "modulate", "demodulate", "theory_report",
]
