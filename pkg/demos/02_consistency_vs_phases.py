"""
Probability of consistency against the number of Erlang phases
==============================================================

Steady-state S2 probability of model 1 (full Erlang) and model 2
(simplified Erlang) for growing k, with the exact semi-Markov value as
reference. Both sweeps start from the Markov value at k = 1.

Writes ``consistency_vs_k.csv`` next to this script; pass it to any
plotting tool.
"""
import csv
from pathlib import Path

from sdds_consistency import converged_steady_state, preset, reference_steady_state, sweep_k
from sdds_consistency.chains import S2

KS = [1, 2, 3, 5, 7, 10, 15, 20, 30, 50, 70, 100]
out = Path(__file__).with_name("consistency_vs_k.csv")

with out.open("w", newline="") as fh:
    writer = csv.writer(fh)
    writer.writerow(["case", "reliable", "model", "k", "pi_s2"])
    for name in ("case1", "case2"):
        for reliable in (False, True):
            p = preset(name, reliable)
            ref = reference_steady_state(p)[S2]
            full = sweep_k(p, "erlang-full", KS).consistency
            simp = sweep_k(p, "erlang-simplified", KS).consistency
            conv = converged_steady_state(p, "erlang-full")
            print(f"\n{name}, {'reliable' if reliable else 'unreliable'}: reference {ref:.6f}, "
                  f"model 1 converged {conv.consistency:.6f} at k={conv.k}")
            print(f"{'k':>5} {'model 1':>10} {'model 2':>10}")
            for k, a, b in zip(KS, full, simp):
                print(f"{k:>5} {a:10.6f} {b:10.6f}")
                writer.writerow([name, reliable, "erlang-full", k, repr(float(a))])
                writer.writerow([name, reliable, "erlang-simplified", k, repr(float(b))])
            writer.writerow([name, reliable, "reference", "", repr(float(ref))])

print(f"\nwrote {out}")
