"""Acceptance checks, one test per criterion.

Each test records a PASS/FAIL line that pytest prints in an
"acceptance criteria" section at the end of the run. Crossing points are
measured by simulating two points that bracket the theoretical crossing and
interpolating ``log10(BER)`` between them.
"""
import math
import subprocess
import sys
import time
from fractions import Fraction

import numpy as np
import pytest
from scipy import optimize

from fbilora import theory
from fbilora.combinadic import rank, rank_batch, unrank, unrank_batch
from fbilora.core import make_config
from fbilora.harness import StopRule, SweepPlan, compare_throughput, ebn0_at_ber, run_point, run_sweep, wilson_interval
from oracles import p_gie_monte_carlo, p_gie_quadrature, p_ie_monte_carlo, p_ie_quadrature

S1 = make_config(7, "s1", 2, 2)
S2 = make_config(7, "s2", 3, 8, 2)
CONV = make_config(7, "conventional")

# simulation effort for crossing estimates; Rayleigh errors arrive in bursts
MIN_ERRORS = {"awgn": 2000, "rayleigh": 20000}
BRACKET_DB = {"awgn": 0.3, "rayleigh": 1.0}
SEED = 2024

_crossings = {}


def theory_crossing(cfg, channel, target):
    lo, hi = (-5.0, 20.0) if channel == "awgn" else (5.0, 60.0)
    return optimize.brentq(lambda e: math.log(theory.theory_report(cfg, e, channel).ber / target),
                           lo, hi, xtol=1e-4)


def sim_crossing(cfg, channel, target):
    key = (cfg, channel, target)
    if key in _crossings:
        return _crossings[key]
    guess = theory_crossing(cfg, channel, target)
    half = BRACKET_DB[channel]
    stop = StopRule(MIN_ERRORS[channel], 10**9)
    pts = [guess - half, guess + half]
    recs = [run_point(cfg, channel, e, stop, seed=SEED) for e in pts]
    # widen until the two points bracket the target
    for _ in range(6):
        if recs[0].ber >= target >= recs[-1].ber:
            break
        if recs[0].ber < target:
            pts.insert(0, pts[0] - half)
            recs.insert(0, run_point(cfg, channel, pts[0], stop, seed=SEED))
        else:
            pts.append(pts[-1] + half)
            recs.append(run_point(cfg, channel, pts[-1], stop, seed=SEED))
    sim = ebn0_at_ber(pts, [r.ber for r in recs], target)
    _crossings[key] = (guess, sim)
    return guess, sim


# ---------------------------------------------------------------------- 1

WORKED = [(55, (7, 6, 5)), (54, (7, 6, 4)), (23, (6, 3, 0)), (22, (6, 2, 1)), (1, (3, 1, 0)), (0, (2, 1, 0))]


def test_c01_combinadic_fidelity(criterion):
    t0 = time.perf_counter()
    worked = all(rank(s, 8, 3) == z and unrank(z, 8, 3) == s for z, s in WORKED)
    exhaustive = True
    for m1 in range(1, 17):
        for m2 in range(1, m1 + 1):
            z = np.arange(math.comb(m1, m2), dtype=np.int64)
            seqs = unrank_batch(z, m1, m2)
            exhaustive &= bool(np.array_equal(rank_batch(seqs, m1), z))
            exhaustive &= all(rank(unrank(int(k), m1, m2), m1, m2) == k for k in z[:: max(1, len(z) // 64)])
    elapsed = time.perf_counter() - t0
    ok = worked and exhaustive and elapsed < 5
    criterion(1, ok, f"worked examples {worked}, exhaustive m1<=16 {exhaustive}, {elapsed:.2f} s")
    assert ok


# ---------------------------------------------------------------------- 2

def test_c02_noiseless_loopback(criterion):
    t0 = time.perf_counter()
    cfgs = [CONV, S1, make_config(7, "s1", 2, 4), make_config(7, "s2", 2, 8, 2), S2]
    errors = {}
    for cfg in cfgs:
        rec = run_point(cfg, "awgn", 0.0, StopRule(1, 100_000), seed=1, n0=0.0)
        errors[cfg.label()] = (rec.bit_errors, rec.symbols_sent)
    elapsed = time.perf_counter() - t0
    ok = all(e == 0 and n == 100_000 for e, n in errors.values()) and elapsed < 120
    criterion(2, ok, f"bit errors {({k: v[0] for k, v in errors.items()})}, {elapsed:.1f} s")
    assert ok


# ---------------------------------------------------------------------- 3

def test_c03_closed_form_vs_quadrature(criterion):
    t0 = time.perf_counter()
    worst_ie = worst_gie = 0.0
    for cfg in (S1, make_config(7, "s2", 2, 8, 2), S2):
        d = cfg.f_num * (cfg.g_num if cfg.n_gs is None else cfg.n_gs)
        n = cfg.n_ac - cfg.f_num
        for ebn0 in np.arange(-20.0, 40.01, 1.0):
            es = cfg.n_tot * 10 ** (ebn0 / 10)
            got, ref = theory.p_ie_closed_form(es / d, n), p_ie_quadrature(es / d, n)
            if ref > 1e-300:
                worst_ie = max(worst_ie, abs(got - ref) / ref)
            else:
                assert got < 1e-290
            if cfg.n_gs is not None:
                s, m = es / cfg.n_gs, cfg.g_ac - cfg.n_gs
                got, ref = theory.p_gie_closed_form(s, cfg.n_ac, m), p_gie_quadrature(s, cfg.n_ac, m)
                if ref > 1e-300:
                    worst_gie = max(worst_gie, abs(got - ref) / ref)
                else:
                    assert got < 1e-290
    elapsed = time.perf_counter() - t0
    ok = worst_ie <= 1e-8 and worst_gie <= 1e-6 and elapsed < 300
    criterion(3, ok, f"max rel err p_ie {worst_ie:.1e} (<=1e-8), p_gie {worst_gie:.1e} (<=1e-6), {elapsed:.0f} s")
    assert ok


# ---------------------------------------------------------------------- 4

def test_c04_closed_form_vs_event_monte_carlo(criterion):
    t0 = time.perf_counter()
    rng = np.random.default_rng(44)
    trials = 10_000_000
    s2 = make_config(7, "s2", 2, 8, 2)
    worst = 0.0
    details = []
    for snr in (10.0, 50.0, 100.0):
        cases = [
            ("p_ie", theory.p_ie_closed_form(snr / 4, S1.n_ac - 2),
             lambda: p_ie_monte_carlo(snr / 4, S1.n_ac - 2, trials, rng)),
            ("p_gie", theory.p_gie_closed_form(snr / 2, s2.n_ac, s2.g_ac - 2),
             lambda: p_gie_monte_carlo(snr / 2, s2.n_ac, s2.g_ac - 2, trials, rng)),
        ]
        for name, p, draw in cases:
            p_hat = draw()
            se = math.sqrt(max(p * (1 - p), 1e-300) / trials)
            z = abs(p_hat - p) / se
            worst = max(worst, z)
            details.append(f"{name}@{snr:g}:{z:.2f}")
    elapsed = time.perf_counter() - t0
    ok = worst <= 3 and elapsed < 600
    criterion(4, ok, f"max |z| {worst:.2f} (<=3) [{' '.join(details)}], {elapsed:.0f} s")
    assert ok


# ---------------------------------------------------------------------- 5

@pytest.mark.parametrize("channel,tol", [("awgn", 0.3), ("rayleigh", 0.5)])
def test_c05_theory_simulation_agreement(channel, tol, criterion):
    t0 = time.perf_counter()
    gaps = {}
    for cfg in (S1, S2):
        for target in (1e-3, 1e-4):
            th, sim = sim_crossing(cfg, channel, target)
            gaps[f"{cfg.label()}@{target:g}"] = sim - th
    worst = max(abs(g) for g in gaps.values())
    ok = worst <= tol
    text = ", ".join(f"{k} {v:+.2f}" for k, v in gaps.items())
    criterion(5, ok, part=channel, detail=f"max gap {worst:.2f} dB (<= {tol}) [{text}], {time.perf_counter() - t0:.0f} s")
    assert ok


# ---------------------------------------------------------------------- 6

@pytest.mark.parametrize("channel,expected", [("awgn", 1.4), ("rayleigh", 1.0)])
def test_c06_loss_against_conventional(channel, expected, criterion):
    _, conv = sim_crossing(CONV, channel, 1e-4)
    _, s1 = sim_crossing(S1, channel, 1e-4)
    loss = s1 - conv
    th_loss = theory_crossing(S1, channel, 1e-4) - theory_crossing(CONV, channel, 1e-4)
    ok = abs(loss - expected) <= 0.4
    criterion(6, ok, part=channel, detail=f"simulated loss {loss:.2f} dB (target {expected} +/- 0.4), "
                                          f"theory {th_loss:.2f} dB")
    assert ok


# ---------------------------------------------------------------------- 7

def test_c07_throughput_ratios(criterion):
    s1 = make_config(7, "s1", 2, 4)
    s2 = make_config(7, "s2", 2, 8, 2)
    exact = (Fraction(s1.n_tot, CONV.n_tot), Fraction(s2.n_tot, CONV.n_tot))
    plateau = [theory.throughput(c, 0.0, 8) / theory.throughput(CONV, 0.0, 8) for c in (s1, s2)]
    table = compare_throughput([s1, s2], "awgn", [40.0], f_pa=8)
    ok = (exact == (Fraction(32, 7), Fraction(16, 7))
          and abs(plateau[0] - 4.571) <= 1e-3 and abs(plateau[1] - 2.286) <= 1e-3
          and all(abs(r["ratio"] - p) < 1e-9 for r, p in zip(table, plateau)))
    criterion(7, ok, f"ratios {plateau[0]:.4f} ({exact[0]}), {plateau[1]:.4f} ({exact[1]})")
    assert ok


# ---------------------------------------------------------------------- 8

def test_c08_priority_bits(criterion):
    plan = SweepPlan(S2, "awgn", np.arange(0.0, 9.0, 1.0), StopRule(400, 10**8), seed=SEED)
    recs = run_sweep(plan, with_theory=False, timing=False)
    in_range = [r for r in recs if 1e-4 <= r.ber <= 1e-1]
    lower = separated = 0
    for r in in_range:
        gf = wilson_interval(r.group_field_errors, r.symbols_sent * S2.n_b_gi)
        ig = wilson_interval(r.in_group_errors, r.symbols_sent * S2.n_gs * S2.n_b_per)
        lower += r.ber_group_field < r.ber_in_group
        separated += gf[1] < ig[0]
    ok = len(in_range) > 0 and lower == len(in_range) and separated >= 3
    criterion(8, ok, f"{len(in_range)} grid points in range, group-field lower at {lower}, "
                     f"Wilson-separated at {separated} (>=3)")
    assert ok


# ---------------------------------------------------------------------- 9

def test_c09_parameter_trend(criterion):
    ber = {(f, g): theory.ber_scheme1(make_config(7, "s1", f, g), 6.0).ber for f in (1, 2, 3) for g in (2, 4, 8)}
    in_f = all(ber[(1, g)] <= ber[(2, g)] <= ber[(3, g)] for g in (2, 4, 8))
    in_g = all(ber[(f, 2)] <= ber[(f, 4)] <= ber[(f, 8)] for f in (1, 2, 3))
    ok = in_f and in_g
    criterion(9, ok, f"non-decreasing in f_num {in_f}, in g_num {in_g}")
    assert ok


# --------------------------------------------------------------------- 10

def test_c10_worker_determinism(tmp_path, criterion):
    outputs = []
    for workers in (1, 3):
        out = tmp_path / f"w{workers}.csv"
        cmd = [sys.executable, "-m", "fbilora", "simulate", "--sf", "7", "--scheme", "s2", "--fnum", "3",
               "--gnum", "8", "--ngs", "2", "--channel", "rayleigh", "--ebn0", "10:5:25", "--seed", "42",
               "--min-errors", "1000", "--workers", str(workers), "--out", str(out)]
        assert subprocess.run(cmd, capture_output=True).returncode == 0
        outputs.append(out.read_bytes())
    ok = outputs[0] == outputs[1]
    criterion(10, ok, f"--workers 1 vs 3 byte-identical: {ok} ({len(outputs[0])} bytes)")
    assert ok
