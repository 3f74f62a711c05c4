"""Throughput against conventional LoRa with eight-symbol packets.

At high SNR the ratio settles at the ratio of bits per symbol.
"""
from fbilora.core import make_config
from fbilora.harness import compare_throughput

cfgs = [make_config(7, "s1", 2, 4), make_config(7, "s2", 2, 8, 2), make_config(7, "s1", 2, 2)]
rows = compare_throughput(cfgs, "awgn", [0.0, 4.0, 8.0, 20.0], f_pa=8)
print(f"{'config':<14}{'Eb/N0':>6}{'kbit/s':>10}{'ratio':>8}")
for row in rows:
    print(f"{row['config']:<14}{row['ebn0_db']:6.1f}{row['throughput_bps'] / 1e3:10.2f}{row['ratio']:8.3f}")
