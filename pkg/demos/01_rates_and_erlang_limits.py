"""
Transition rates and the Erlang-k limit
=======================================

The four-state model needs three rates derived from the loss process, and
the Erlang expansion trades a deterministic delay for k exponential phases.
This script prints both for the two reference configurations.
"""
import math

from sdds_consistency import (CASE_1, CASE_2, TransitionRates, erlang_no_event_prob,
                              rate_erroneous_removal, simplified_no_event_prob)

for name, p in (("Case 1", CASE_1), ("Case 2", CASE_2)):
    for reliable in (False, True):
        r = TransitionRates.from_params(p.replace(reliable=reliable))
        mode = "reliable" if reliable else "unreliable"
        print(f"{name} {mode:>10}: E2={r.e2:.6g}/s  E4={r.e4:.6g}/s  E6={r.e6:.6g}/s")

# Erroneous removal needs a receiver timeout; the presets give lambda_f directly
# instead, so this is for a timeout of three refresh periods.
print("\nlambda_f from the loss process, X = 3T:",
      rate_erroneous_removal(CASE_1.p_loss, CASE_1.n_receivers, 5.0, 15.0))

# Probability that no update/removal interrupts a transfer of mean D = 1 s
# at rate 0.105/s: the full model approaches exp(-0.105), the simplified one
# drifts towards 1.
lam, D = 0.105, 1.0
print(f"\n{'k':>6} {'full':>10} {'simplified':>11}   exp(-lam D) = {math.exp(-lam * D):.6f}")
for k in (1, 2, 5, 10, 100, 1000):
    print(f"{k:>6} {erlang_no_event_prob(lam, D, k):10.6f} {simplified_no_event_prob(lam, D, k):11.6f}")
