"""
Protocol parameters and the closed-form rate formulas of the soft-state
consistency model.

Macro-states are numbered as in the classic four-state SDDS diagram:

    S1  (-,-)      no valid IR at the sender
    S2  (x,x)      sender and all receivers hold the same valid IR
    S3  (x,-)      an IR update is being transferred
    S4  (x,-)_2    valid IR at the sender, some receivers are missing it
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional


@dataclass(frozen=True)
class SddsParams:
    """
    All parameters of a sensor data distribution system.

    Parameters
    ----------
    lambda_u : float
        IR generation/update rate (1/s).
    lambda_d : float
        IR removal rate at the sender (1/s).
    lambda_f : float
        Erroneous IR removal rate at the receivers (1/s).
    p_loss : float
        Per-message, per-receiver loss probability.
    n_receivers : int
        Number of receivers.
    transfer_delay : float
        Maximum end-to-end message transfer time (s).
    refresh_period : float
        IR refresh period (s).
    receiver_timeout : float, optional
        Receiver-side IR timeout (s). Only needed to derive `lambda_f`
        from the loss process and by the packet-level simulator.
    reliable : bool
        Confirmed-message mode: refreshes are replaced by retransmissions
        every round trip time ``2 * transfer_delay``.
    """

    lambda_u: float
    lambda_d: float
    lambda_f: float
    p_loss: float
    n_receivers: int
    transfer_delay: float
    refresh_period: float
    receiver_timeout: Optional[float] = None
    reliable: bool = False

    def __post_init__(self):
        for name in ("lambda_u", "lambda_d", "lambda_f", "transfer_delay", "refresh_period"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise ValueError(f"{name} must be finite and >= 0, got {value!r}")
        if self.lambda_u <= 0:
            raise ValueError("lambda_u must be > 0")
        if self.transfer_delay <= 0:
            raise ValueError("transfer_delay must be > 0")
        if self.refresh_period <= 0:
            raise ValueError("refresh_period must be > 0")
        if not 0.0 <= self.p_loss <= 1.0:
            raise ValueError(f"p_loss must lie in [0, 1], got {self.p_loss!r}")
        if int(self.n_receivers) != self.n_receivers or self.n_receivers < 1:
            raise ValueError(f"n_receivers must be a positive integer, got {self.n_receivers!r}")
        if self.receiver_timeout is not None:
            if not math.isfinite(self.receiver_timeout):
                raise ValueError("receiver_timeout must be finite")
            if self.receiver_timeout < self.refresh_period:
                raise ValueError("receiver_timeout must be >= refresh_period")

    def replace(self, **changes) -> "SddsParams":
        return replace(self, **changes)

    def with_computed_lambda_f(self) -> "SddsParams":
        """Return a copy whose `lambda_f` is derived from the loss process."""
        if self.receiver_timeout is None:
            raise ValueError("receiver_timeout is required to compute lambda_f")
        lam = rate_erroneous_removal(
            self.p_loss, self.n_receivers, self.refresh_period, self.receiver_timeout
        )
        return replace(self, lambda_f=lam)

    @property
    def update_success_prob(self) -> float:
        """Probability that every receiver gets an update."""
        return (1.0 - self.p_loss) ** self.n_receivers

    @property
    def refresh_success_prob(self) -> float:
        """Probability that a refresh (or retransmission) reaches the expected stragglers."""
        return (1.0 - self.p_loss) ** (self.n_receivers * self.p_loss)

    @property
    def recovery_period(self) -> float:
        """Mean length of one recovery cycle in S4."""
        return 2.0 * self.transfer_delay if self.reliable else self.refresh_period


# Reference configurations. Presets live in code so they stay authoritative.
CASE_1 = SddsParams(
    lambda_u=1.0,
    lambda_d=5e-3,
    lambda_f=2e-8,
    p_loss=1e-3,
    n_receivers=100,
    transfer_delay=0.01,
    refresh_period=5.0,
)

CASE_2 = SddsParams(
    lambda_u=0.1,
    lambda_d=5e-3,
    lambda_f=2e-8,
    p_loss=1e-3,
    n_receivers=100,
    transfer_delay=1.0,
    refresh_period=10.0,
)

PRESETS = {"case1": CASE_1, "case2": CASE_2}


def preset(name: str, reliable: bool = False) -> SddsParams:
    key = name.lower().replace(" ", "").replace("_", "")
    if key in ("1", "2"):
        key = "case" + key
    try:
        base = PRESETS[key]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; expected one of {sorted(PRESETS)}") from None
    return replace(base, reliable=reliable)


@dataclass(frozen=True)
class TransitionRates:
    """Rates of the four-state Markov approximation."""

    e2: float
    e4: float
    e6: float
    lambda_u: float
    lambda_d: float
    lambda_f: float

    @classmethod
    def from_params(cls, params: SddsParams) -> "TransitionRates":
        if params.reliable:
            e6 = rate_refresh_success_reliable(params)
        else:
            e6 = rate_refresh_success(params)
        return cls(
            e2=rate_update_success(params),
            e4=rate_update_loss(params),
            e6=e6,
            lambda_u=params.lambda_u,
            lambda_d=params.lambda_d,
            lambda_f=params.lambda_f,
        )


def rate_update_success(params: SddsParams) -> float:
    """Rate S3 -> S2: all update messages received, ``(1 - p)^N / D``."""
    return params.update_success_prob / params.transfer_delay


def rate_update_loss(params: SddsParams) -> float:
    """Rate S3 -> S4: at least one update lost, ``(1 - (1 - p)^N) / D``."""
    return (1.0 - params.update_success_prob) / params.transfer_delay


def rate_refresh_success(params: SddsParams) -> float:
    """Rate S4 -> S2 with periodic refreshes, ``(1 - p)^(N p) / T``.

    The exponent ``N * p`` is the expected number of stragglers and is kept
    as a real number.
    """
    return params.refresh_success_prob / params.refresh_period


def rate_refresh_success_reliable(params: SddsParams) -> float:
    """Rate S4 -> S2 with confirmed messages, ``(1 - p)^(N p) / (2 D)``."""
    return params.refresh_success_prob / (2.0 * params.transfer_delay)


def rate_erroneous_removal(p_loss: float, n: int, T: float, X: float) -> float:
    """
    Erroneous IR removal rate at the receivers.

    Evaluates ``prod_{i=0}^{floor(X/T)} (1 - (1 - p)^(N p^i)) / X`` term by
    term. Each factor is computed as ``-expm1(N p^i log1p(-p))`` so that
    tiny exponents keep full relative precision.
    """
    if not (T > 0 and X >= T):
        raise ValueError(f"need X >= T > 0, got T={T!r}, X={X!r}")
    if not 0.0 <= p_loss <= 1.0:
        raise ValueError(f"p_loss must lie in [0, 1], got {p_loss!r}")
    log_keep = math.log1p(-p_loss) if p_loss < 1.0 else -math.inf
    prod = 1.0
    for i in range(int(math.floor(X / T)) + 1):
        exponent = n * p_loss**i
        if exponent == 0.0:
            factor = 0.0
        else:
            factor = -math.expm1(exponent * log_keep)
        prod *= factor
        if prod == 0.0:
            break
    return prod / X


def erlang_no_event_prob(lam: float, delta: float, k: int) -> float:
    """Probability that no Poisson(lam) event fires during an Erlang-k time of mean delta.

    Equals ``(1 + lam * delta / k)^(-k)``; tends to ``exp(-lam * delta)``.
    """
    _check_k(k)
    if lam < 0 or delta <= 0:
        raise ValueError("need lam >= 0 and delta > 0")
    return math.exp(-k * math.log1p(lam * delta / k))


def simplified_no_event_prob(lam: float, D: float, k: int) -> float:
    """Survival probability over a single Erlang phase of mean ``D / k``."""
    _check_k(k)
    if lam < 0 or D <= 0:
        raise ValueError("need lam >= 0 and D > 0")
    return 1.0 / (1.0 + lam * D / k)


def erlang_mgf(delta: float, k: int, s: float) -> float:
    """Moment generating function ``(1 + delta s / k)^(-k)`` of Erlang-k with mean delta."""
    _check_k(k)
    base = 1.0 + delta * s / k
    if base <= 0:
        raise ValueError(f"pole: 1 + delta*s/k = {base!r} <= 0")
    return math.exp(-k * math.log1p(delta * s / k))


def _check_k(k):
    if int(k) != k or k < 1:
        raise ValueError(f"phase count k must be an integer >= 1, got {k!r}")
