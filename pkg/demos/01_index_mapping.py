"""Walk one bit block through the index mapper and back.

Scheme I splits the spreading-factor band into groups and lets every group
carry a combination of active bins. Scheme II first picks which groups are
active, then fills only those.
"""
import numpy as np

from fbilora.combinadic import rank, unrank
from fbilora.core import make_config
from fbilora.modem import dechirp_dft, demodulate, map_bits, modulate

# the combinadic in isolation: 3-of-8 index sets
for z in (55, 22, 0):
    seq = unrank(z, 8, 3)
    print(f"Z={z:2d} -> {seq} -> {rank(seq, 8, 3)}")

rng = np.random.default_rng(1)
for args in [(7, "s1", 2, 2), (7, "s2", 2, 8, 2)]:
    cfg = make_config(*args)
    bits = rng.integers(0, 2, size=cfg.n_tot, dtype=np.uint8)
    sel = map_bits(bits, cfg)
    frame = modulate(bits, cfg)
    spec = np.abs(dechirp_dft(frame, cfg.base))
    print()
    print(cfg.label(), f"n_g={cfg.n_g} n_ac={cfg.n_ac} n_tot={cfg.n_tot}")
    print("  bits          ", "".join(map(str, bits)))
    print("  groups        ", sel.group_indices.tolist())
    print("  active bins   ", sorted(sel.absolute_bins(cfg.n_g).tolist()))
    print("  spectrum peaks", sorted(np.argsort(spec)[-cfg.active_bins:].tolist()))
    print("  round trip ok ", bool(np.array_equal(demodulate(frame, cfg), bits)))
