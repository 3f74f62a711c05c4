"""Seeded Monte Carlo BER/SER engine with error-count stopping.

Symbols are simulated in fixed-size batches. Batch ``b`` of an Eb/N0 point
draws from its own generator seeded by ``(seed, point, b)``, and batches are
accumulated strictly in index order, so results do not depend on how many
worker processes computed them.
"""
from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import theory
from .channel import apply_channel, ebn0_to_n0
from .core import Scheme
from .modem import demodulate, modulate

BATCH_CHIPS = 1 << 18


@dataclass(frozen=True)
class StopRule:
    min_bit_errors: int = 200
    max_symbols: int = 100_000_000

    def __post_init__(self):
        if self.min_bit_errors < 1:
            raise ValueError("min_bit_errors must be >= 1")
        if self.max_symbols < 1:
            raise ValueError("max_symbols must be >= 1")


@dataclass(frozen=True)
class SweepPlan:
    cfg: object
    channel: str
    ebn0_grid_db: tuple
    stop: StopRule = field(default_factory=StopRule)
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        grid = tuple(float(x) for x in self.ebn0_grid_db)
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("Eb/N0 grid must be strictly increasing")
        if self.channel not in theory.CHANNELS:
            raise ValueError(f"unknown channel {self.channel!r}")
        object.__setattr__(self, "ebn0_grid_db", grid)


@dataclass
class BerRecord:
    ebn0_db: float
    bits_sent: int
    bit_errors: int
    symbols_sent: int
    symbol_errors: int
    ber: float
    ser: float
    theory_ber: float | None = None
    theory_ser: float | None = None
    ber_group_field: float | None = None
    ber_in_group: float | None = None
    wall_time_s: float | None = None
    group_field_errors: int | None = None
    in_group_errors: int | None = None
    censored: bool = False

    def to_dict(self):
        return asdict(self)


@dataclass
class _Counts:
    symbols: int = 0
    bit_errors: int = 0
    symbol_errors: int = 0
    group_field_errors: int = 0
    in_group_errors: int = 0

    def add(self, other):
        self.symbols += other.symbols
        self.bit_errors += other.bit_errors
        self.symbol_errors += other.symbol_errors
        self.group_field_errors += other.group_field_errors
        self.in_group_errors += other.in_group_errors


def batch_symbols(cfg):
    return max(16, BATCH_CHIPS // cfg.chips_per_symbol)


def _point_key(ebn0_db):
    # millidecibel resolution, shifted to stay non-negative
    return int(round((float(ebn0_db) + 1000.0) * 1000.0))


def batch_rng(seed, ebn0_db, index):
    ss = np.random.SeedSequence([int(seed) % (1 << 64), _point_key(ebn0_db), int(index)])
    return np.random.Generator(np.random.PCG64(ss))


def simulate_batch(cfg, channel, n0, n_symbols, rng):
    """Run ``n_symbols`` random blocks through modulator, channel and detector."""
    bits = rng.integers(0, 2, size=(n_symbols, cfg.n_tot), dtype=np.uint8)
    rx = apply_channel(modulate(bits, cfg), n0, rng, channel)
    wrong = demodulate(rx, cfg) != bits
    counts = _Counts(
        symbols=n_symbols,
        bit_errors=int(wrong.sum()),
        symbol_errors=int(wrong.any(axis=1).sum()),
    )
    if cfg.scheme is Scheme.SCHEME_II:
        split = cfg.n_gs * cfg.n_b_per
        counts.in_group_errors = int(wrong[:, :split].sum())
        counts.group_field_errors = int(wrong[:, split:].sum())
    return counts


def _run_batch(args):
    cfg, channel, n0, n_symbols, seed, ebn0_db, index = args
    return simulate_batch(cfg, channel, n0, n_symbols, batch_rng(seed, ebn0_db, index))


def run_point(cfg, channel, ebn0_db, stop=StopRule(), seed=0, *, workers=1,
              n0=None, executor=None, with_theory=False, timing=True):
    """Simulate one Eb/N0 point until ``stop`` is met.

    ``n0`` overrides the noise density implied by ``ebn0_db`` (``0`` gives a
    noiseless channel). A record that hits ``max_symbols`` before
    ``min_bit_errors`` is flagged ``censored``.
    """
    start = time.perf_counter()
    if n0 is None:
        n0 = ebn0_to_n0(ebn0_db, cfg)
    per_batch = batch_symbols(cfg)
    total = _Counts()
    index = 0
    own_pool = None
    if workers > 1 and executor is None:
        executor = own_pool = ProcessPoolExecutor(max_workers=workers)
    try:
        while total.bit_errors < stop.min_bit_errors and total.symbols < stop.max_symbols:
            wave = max(1, workers)
            jobs = []
            planned = total.symbols
            for j in range(wave):
                n = min(per_batch, stop.max_symbols - planned)
                if n <= 0:
                    break
                jobs.append((cfg, channel, n0, n, seed, ebn0_db, index + j))
                planned += n
            if executor is None:
                results = map(_run_batch, jobs)
            else:
                results = executor.map(_run_batch, jobs)
            for counts in results:
                index += 1
                total.add(counts)
                if total.bit_errors >= stop.min_bit_errors:
                    break
    finally:
        if own_pool is not None:
            own_pool.shutdown(cancel_futures=True)

    bits_sent = total.symbols * cfg.n_tot
    record = BerRecord(
        ebn0_db=float(ebn0_db),
        bits_sent=bits_sent,
        bit_errors=total.bit_errors,
        symbols_sent=total.symbols,
        symbol_errors=total.symbol_errors,
        ber=total.bit_errors / bits_sent,
        ser=total.symbol_errors / total.symbols,
        censored=total.bit_errors < stop.min_bit_errors,
    )
    if cfg.scheme is Scheme.SCHEME_II:
        record.group_field_errors = total.group_field_errors
        record.in_group_errors = total.in_group_errors
        record.ber_group_field = total.group_field_errors / (total.symbols * cfg.n_b_gi)
        record.ber_in_group = total.in_group_errors / (total.symbols * cfg.n_gs * cfg.n_b_per)
    if with_theory:
        attach_theory(record, cfg, channel)
    if timing:
        record.wall_time_s = time.perf_counter() - start
    return record


def attach_theory(record, cfg, channel):
    """Fill theory columns when the config is within the enumeration cap."""
    try:
        theory.check_enumerable(cfg)
    except theory.EnumerationCapError:
        return record
    report = theory.theory_report(cfg, record.ebn0_db, channel)
    record.theory_ber = report.ber
    record.theory_ser = report.ser
    return record


class SweepError(RuntimeError):
    def __init__(self, message, partial):
        super().__init__(message)
        self.partial = partial


def run_sweep(plan, *, on_record=None, with_theory=True, timing=True, ber_floor=None):
    """Run every grid point of ``plan``; records are passed to ``on_record`` as they finish.

    With ``ber_floor`` the sweep ends after the first point whose measured BER
    falls below it.
    """
    records = []
    executor = ProcessPoolExecutor(max_workers=plan.workers) if plan.workers > 1 else None
    try:
        for ebn0_db in plan.ebn0_grid_db:
            try:
                rec = run_point(plan.cfg, plan.channel, ebn0_db, plan.stop, plan.seed,
                                workers=plan.workers, executor=executor,
                                with_theory=with_theory, timing=timing)
            except Exception as exc:
                raise SweepError(f"point {ebn0_db} dB failed: {exc}", records) from exc
            records.append(rec)
            if on_record is not None:
                on_record(rec)
            if ber_floor is not None and rec.ber < ber_floor:
                break
    finally:
        if executor is not None:
            executor.shutdown()
    return records


def compare_throughput(cfgs, channel, ebn0_grid, f_pa=8, *, sim_stop=StopRule(1000, 200_000), seed=0):
    """Throughput of each config against conventional LoRa at the same ``sf``.

    SER comes from theory where the codebooks are enumerable, otherwise from
    a Monte Carlo run with ``sim_stop``.
    """
    from .core import make_config

    rows = []
    for cfg in cfgs:
        ref = make_config(cfg.sf, "conventional", bw_hz=cfg.base.bw_hz, es=cfg.es)
        for ebn0_db in ebn0_grid:
            p_s = _ser(cfg, channel, ebn0_db, sim_stop, seed)
            p_ref = _ser(ref, channel, ebn0_db, sim_stop, seed)
            t = theory.throughput(cfg, p_s, f_pa)
            t_ref = theory.throughput(ref, p_ref, f_pa)
            rows.append({
                "config": cfg.label(),
                "ebn0_db": float(ebn0_db),
                "ser": p_s,
                "throughput_bps": t,
                "conventional_bps": t_ref,
                "ratio": t / t_ref if t_ref > 0 else math.nan,
            })
    return rows


def _ser(cfg, channel, ebn0_db, stop, seed):
    try:
        theory.check_enumerable(cfg)
        return theory.theory_report(cfg, ebn0_db, channel).ser
    except theory.EnumerationCapError:
        return run_point(cfg, channel, ebn0_db, stop, seed).ser


def wilson_interval(k, n, z=1.959963984540054):
    """Wilson score interval for a binomial proportion."""
    if n <= 0:
        return 0.0, 1.0
    p = k / n
    denom = 1 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


def ebn0_at_ber(ebn0_db, ber, target):
    """Eb/N0 where a decreasing BER curve first crosses ``target``.

    Interpolates ``log10(ber)`` linearly between neighbouring grid points;
    returns ``nan`` if the curve never brackets the target.
    """
    x = np.asarray(ebn0_db, dtype=float)
    y = np.asarray(ber, dtype=float)
    for i in range(len(x) - 1):
        y0, y1 = y[i], y[i + 1]
        if y0 >= target >= y1 and y0 > 0:
            if y1 <= 0:
                return float(x[i + 1])
            l0, l1, lt = math.log10(y0), math.log10(y1), math.log10(target)
            if l0 == l1:
                return float(x[i])
            return float(x[i] + (lt - l0) * (x[i + 1] - x[i]) / (l1 - l0))
    return math.nan


__all__ = [
    "StopRule", "SweepPlan", "BerRecord", "SweepError", "run_point", "run_sweep",
    "compare_throughput", "simulate_batch", "batch_rng", "attach_theory",
    "wilson_interval", "ebn0_at_ber", "batch_symbols",
]
