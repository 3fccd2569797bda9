"""
Exact stationary distribution of the four-state semi-Markov process with
deterministic transfer and recovery delays, via the embedded Markov chain.

In S3 and S4 a deterministic timer of length ``delta`` races an exponential
interruption clock of rate ``L = lambda_u + lambda_d``. The holding time is
``min(delta, Exp(L))`` so

    h = (1 - exp(-L delta)) / L,    P(timer wins) = exp(-L delta).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .chains import S1, S2, S3, S4
from .params import SddsParams
from .solvers import SolverError, solve_stationary

HOLDING_MODES = ("deterministic", "exponential")


@dataclass(frozen=True)
class EmbeddedChain:
    P: np.ndarray  # 4x4 jump probabilities, self-loops allowed
    holding: np.ndarray  # mean holding time per macro-state (s)


def _race(rate: float, delay: float, holding: str):
    """(mean holding time, probability that the timer completes first)."""
    if holding == "exponential":
        mu = 1.0 / delay
        return 1.0 / (mu + rate), mu / (mu + rate)
    if rate == 0.0:
        return delay, 1.0
    return -math.expm1(-rate * delay) / rate, math.exp(-rate * delay)


def embedded_chain(params: SddsParams, holding: str = "deterministic") -> EmbeddedChain:
    """
    Jump chain and mean holding times of the semi-Markov model.

    ``holding="exponential"`` swaps the deterministic delays for exponential
    ones of equal mean; the result then describes the Markov approximation
    and is used only as a cross-check.
    """
    if holding not in HOLDING_MODES:
        raise ValueError(f"holding must be one of {HOLDING_MODES}")
    lu, ld, lf = params.lambda_u, params.lambda_d, params.lambda_f
    lam = lu + ld
    q = params.update_success_prob
    p6 = params.refresh_success_prob

    P = np.zeros((4, 4))
    h = np.zeros(4)

    h[S1] = 1.0 / lu
    P[S1, S3] = 1.0

    total2 = lu + ld + lf
    h[S2] = 1.0 / total2
    P[S2, S3] = lu / total2
    P[S2, S1] = ld / total2
    P[S2, S4] = lf / total2

    for state, delay, success in ((S3, params.transfer_delay, q),
                                  (S4, params.recovery_period, p6)):
        h[state], c = _race(lam, delay, holding)
        P[state, S2] = c * success
        P[state, S4] += c * (1.0 - success)
        if lam > 0:
            P[state, S3] += (lu / lam) * (1.0 - c)
            P[state, S1] += (ld / lam) * (1.0 - c)
    return EmbeddedChain(P, h)


def reference_steady_state(params: SddsParams, holding: str = "deterministic") -> np.ndarray:
    """Time-stationary macro-state distribution ``pi_i ~ nu_i h_i``."""
    chain = embedded_chain(params, holding)
    # nu P = nu  <=>  nu (P - I) = 0
    nu = solve_stationary(chain.P - np.eye(4), S1)
    if nu.min() < -1e-12:
        raise SolverError(f"negative embedded-chain probability {nu.min():.3e}")
    nu = np.clip(nu, 0.0, None)
    w = nu * chain.holding
    total = w.sum()
    if not (total > 0 and math.isfinite(total)):
        raise SolverError("degenerate time weighting in embedded chain")
    return w / total
