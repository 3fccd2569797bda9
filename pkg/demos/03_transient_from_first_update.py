"""
State probabilities after the first IR generation
=================================================

Case 2, unreliable transmission, simplified model with k = 10. The system
starts at the entry of state 3 (an update has just been sent) and the
distribution is propagated by uniformization.
"""
import numpy as np

from sdds_consistency import aggregate, build_generator, preset, steady_state, transient
from sdds_consistency.chains import S2, S3

p = preset("case2")
gen = build_generator(p, "erlang-simplified", 10)
times = np.concatenate([np.arange(0.0, 10.0, 0.5), [20, 50, 100, 200, 400, 600]])
traj = [aggregate(pi, gen.space) for pi in transient(gen, gen.space.point_mass(S3), times)]
steady = aggregate(steady_state(gen), gen.space)

print(f"{'t (s)':>7} {'S1':>9} {'S2':>9} {'S3':>9} {'S4':>9}")
for t, pi in zip(times, traj):
    print(f"{t:7.1f} " + " ".join(f"{x:9.6f}" for x in pi))
print("steady  " + " ".join(f"{x:9.6f}" for x in steady))

t90 = next(t for t, pi in zip(times, traj) if pi[S2] >= 0.9 * steady[S2])
print(f"\nS2 reaches 90% of its steady value by t = {t90} s")
