"""Simulated against theoretical BER for scheme I (7,2,2) and conventional LoRa.

Prints a small table; pass ``rayleigh`` as the first argument to switch
channels. Each point runs to 200 bit errors.
"""
import sys

import numpy as np

from fbilora.core import make_config
from fbilora.harness import StopRule, SweepPlan, ebn0_at_ber, run_sweep

channel = sys.argv[1] if len(sys.argv) > 1 else "awgn"
grid = np.arange(0, 9, 1.0) if channel == "awgn" else np.arange(10, 41, 5.0)

for args in [(7, "conventional"), (7, "s1", 2, 2)]:
    cfg = make_config(*args)
    plan = SweepPlan(cfg, channel, grid, StopRule(200, 2_000_000), seed=1)
    recs = run_sweep(plan, ber_floor=2e-5)
    print(f"\n{cfg.label()} over {channel}")
    print(" Eb/N0    sim BER      theory BER")
    for r in recs:
        print(f"{r.ebn0_db:6.1f}  {r.ber:10.3e}  {r.theory_ber:10.3e}")
    x = [r.ebn0_db for r in recs]
    print("1e-3 crossing (sim) %.2f dB" % ebn0_at_ber(x, [r.ber for r in recs], 1e-3))
