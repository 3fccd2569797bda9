"""
Cross-checking the analytical reference by simulation
=====================================================

The embedded-chain solution assumes deterministic transfer and recovery
delays. The state-level simulator realizes exactly those delays event by
event; the packet-level simulator goes further and models every receiver
and every message, without using the closed-form rates at all.
"""
import numpy as np

from sdds_consistency import (SimConfig, macro_steady_state, preset, reference_steady_state,
                              simulate_packet_level, simulate_state_level)

for name in ("case1", "case2"):
    p = preset(name)
    ref = reference_steady_state(p)
    markov = macro_steady_state(p, "markov")
    sim = simulate_state_level(SimConfig(p, horizon=2e5, seed=1))
    z = (sim.occupancy - ref) / sim.stderr
    print(f"\n{name}")
    print("  reference  ", np.round(ref, 5))
    print("  markov     ", np.round(markov, 5))
    print("  simulated  ", np.round(sim.occupancy, 5), "+/-", np.round(sim.half_width, 5))
    print("  z-scores   ", np.round(z, 2))

p = preset("case1").replace(receiver_timeout=15.0)
packet = simulate_packet_level(SimConfig(p, horizon=1e5, seed=1, mode="packet"))
print("\ncase1 packet level", np.round(packet.occupancy, 5), packet.counts)
