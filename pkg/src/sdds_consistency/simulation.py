"""
Discrete-event simulation of the soft-state distribution system.

Two levels of detail are available:

* state level: the four macro-states with deterministic transfer and
  recovery delays racing exponential update/removal clocks, and Bernoulli
  branching with the aggregate success probabilities;
* packet level: a sender and N receivers with independent per-message
  losses, receiver timeouts and (in reliable mode) acknowledged
  retransmissions. It does not use any of the closed-form rates.

Occupancy estimates come with batch-means confidence intervals.

Random streams: ``SeedSequence(seed).spawn(2)`` gives one stream for the
exponential event clocks and one for the loss/branch draws, so changing a
loss probability leaves the update and removal epochs unchanged.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np
from scipy import stats

from .chains import S1, S2, S3, S4
from .params import SddsParams

MODES = ("state", "packet")


class SimulationError(RuntimeError):
    pass


@dataclass(frozen=True)
class SimConfig:
    params: SddsParams
    horizon: float
    warmup: Optional[float] = None
    seed: int = 0
    mode: str = "state"
    batches: int = 20

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.batches < 2:
            raise ValueError("batches must be >= 2")
        if not (math.isfinite(self.horizon) and self.horizon > self.effective_warmup >= 0):
            raise ValueError("need horizon > warmup >= 0")

    @property
    def effective_warmup(self) -> float:
        if self.warmup is not None:
            return float(self.warmup)
        p = self.params
        slowest = min(p.lambda_d, 1.0 / p.refresh_period)
        if slowest <= 0:
            slowest = 1.0 / p.refresh_period
        return 5.0 / slowest


@dataclass
class SimReport:
    occupancy: np.ndarray
    half_width: np.ndarray
    stderr: np.ndarray
    counts: Dict[str, int]
    sim_time: float
    batches: int
    batch_occupancy: np.ndarray = field(repr=False)

    def agrees_with(self, pi, n_sigma: float = 3.0, floor: float = 0.0) -> np.ndarray:
        """Per-state check ``|occupancy - pi| <= n_sigma * stderr + floor``."""
        return np.abs(self.occupancy - np.asarray(pi)) <= n_sigma * self.stderr + floor


class _Occupancy:
    """Time spent per macro-state, split into equal batches of [warmup, horizon]."""

    def __init__(self, warmup, horizon, batches):
        self.warmup = warmup
        self.horizon = horizon
        self.batches = batches
        self.length = (horizon - warmup) / batches
        self.occ = np.zeros((batches, 4))
        self.events = np.zeros(batches, dtype=np.int64)

    def add(self, state, t0, t1):
        t0 = max(t0, self.warmup)
        t1 = min(t1, self.horizon)
        if t1 <= t0:
            return
        b = min(int((t0 - self.warmup) / self.length), self.batches - 1)
        occ = self.occ
        while t0 < t1:
            end = min(t1, self.warmup + (b + 1) * self.length)
            if b == self.batches - 1:
                end = t1
            occ[b, state] += end - t0
            t0 = end
            b += 1

    def mark_event(self, t):
        if self.warmup <= t < self.horizon:
            b = min(int((t - self.warmup) / self.length), self.batches - 1)
            self.events[b] += 1

    def in_window(self, t):
        return self.warmup <= t < self.horizon

    def report(self, counts) -> SimReport:
        if np.any(self.events == 0):
            empty = int(np.sum(self.events == 0))
            raise SimulationError(
                f"{empty} of {self.batches} batches saw no events; increase the horizon"
            )
        total = self.occ.sum()
        occupancy = self.occ.sum(axis=0) / total
        fractions = self.occ / self.occ.sum(axis=1, keepdims=True)
        stderr = fractions.std(axis=0, ddof=1) / math.sqrt(self.batches)
        half = stats.t.ppf(0.975, self.batches - 1) * stderr
        return SimReport(occupancy, half, stderr, dict(counts), float(total),
                         self.batches, fractions)


class _Stream:
    """Block-buffered scalar draws from a numpy Generator."""

    BLOCK = 1 << 16

    def __init__(self, seed_seq):
        self.rng = np.random.default_rng(seed_seq)
        self._exp = self.rng.standard_exponential(self.BLOCK)
        self._unif = self.rng.random(self.BLOCK)
        self._ie = 0
        self._iu = 0

    def exp(self, rate):
        if self._ie == self.BLOCK:
            self._exp = self.rng.standard_exponential(self.BLOCK)
            self._ie = 0
        x = self._exp[self._ie]
        self._ie += 1
        return x / rate if rate > 0 else math.inf

    def uniform(self):
        if self._iu == self.BLOCK:
            self._unif = self.rng.random(self.BLOCK)
            self._iu = 0
        u = self._unif[self._iu]
        self._iu += 1
        return u


def _streams(seed):
    clocks, losses = np.random.SeedSequence(seed).spawn(2)
    return clocks, losses


def simulate(cfg: SimConfig) -> SimReport:
    if cfg.mode == "state":
        return simulate_state_level(cfg)
    return simulate_packet_level(cfg)


def simulate_state_level(cfg: SimConfig) -> SimReport:
    """Simulate the four-state semi-Markov process event by event."""
    if cfg.mode != "state":
        raise ValueError("simulate_state_level needs mode='state'")
    p = cfg.params
    warmup, horizon = cfg.effective_warmup, cfg.horizon
    clock_seq, branch_seq = _streams(cfg.seed)
    clock, branch = _Stream(clock_seq), _Stream(branch_seq)
    acc = _Occupancy(warmup, horizon, cfg.batches)

    lu, ld, lf = p.lambda_u, p.lambda_d, p.lambda_f
    total2 = lu + ld + lf
    q = p.update_success_prob
    p6 = p.refresh_success_prob
    D = p.transfer_delay
    cycle = p.recovery_period
    counts = {"updates": 0, "deletions": 0, "losses": 0,
              "failed_recoveries": 0, "erroneous_removals": 0}

    t = 0.0
    state = S1
    while t < horizon:
        if state == S1:
            dt = clock.exp(lu)
            nxt, event = S3, "updates"
        elif state == S2:
            dt = clock.exp(total2)
            u = clock.uniform() * total2
            if u < lu:
                nxt, event = S3, "updates"
            elif u < lu + ld:
                nxt, event = S1, "deletions"
            else:
                nxt, event = S4, "erroneous_removals"
        else:
            delay = D if state == S3 else cycle
            eu = clock.exp(lu)
            ed = clock.exp(ld)
            if delay <= eu and delay <= ed:
                dt = delay
                if state == S3:
                    ok = branch.uniform() < q
                    nxt, event = (S2, None) if ok else (S4, "losses")
                else:
                    ok = branch.uniform() < p6
                    nxt, event = (S2, None) if ok else (S4, "failed_recoveries")
            elif eu < ed:
                dt, nxt, event = eu, S3, "updates"
            else:
                dt, nxt, event = ed, S1, "deletions"
        acc.add(state, t, t + dt)
        t += dt
        if t < horizon:
            acc.mark_event(t)
            if event is not None and acc.in_window(t):
                counts[event] += 1
        state = nxt
    return acc.report(counts)


# packet-level event kinds; the integer doubles as a tie-breaker at equal times
_ARRIVAL, _TIMEOUT, _REFRESH, _RETX, _UPDATE, _DELETE = range(6)


def simulate_packet_level(cfg: SimConfig) -> SimReport:
    """
    Simulate the sender and the N receivers message by message.

    Every message takes exactly `transfer_delay` and is lost independently
    per receiver. Unreliable mode: the sender refreshes every
    `refresh_period` after the latest update; a receiver drops its IR when
    nothing arrives for `receiver_timeout`. Reliable mode: receivers ack,
    the sender retransmits to unacknowledged receivers every round trip
    ``2 * transfer_delay``, acks are lost with the same probability and no
    receiver timeout is armed.

    Macro-state: S1 sender holds no IR; S3 an update is in flight;
    otherwise S2 if every receiver holds the current IR, else S4.
    """
    if cfg.mode != "packet":
        raise ValueError("simulate_packet_level needs mode='packet'")
    p = cfg.params
    if p.receiver_timeout is None and not p.reliable:
        raise ValueError("packet-level simulation needs receiver_timeout")
    warmup, horizon = cfg.effective_warmup, cfg.horizon
    clock_seq, loss_seq = _streams(cfg.seed)
    clock = _Stream(clock_seq)
    loss_rng = np.random.default_rng(loss_seq)
    acc = _Occupancy(warmup, horizon, cfg.batches)

    n = p.n_receivers
    D = p.transfer_delay
    X = p.receiver_timeout
    held = np.full(n, -1, dtype=np.int64)
    expiry = np.full(n, math.inf)
    acked = np.zeros(n, dtype=bool)
    counts = {"updates": 0, "deletions": 0, "losses": 0,
              "failed_recoveries": 0, "erroneous_removals": 0}

    version = 0
    has_ir = False
    in_flight_until = -math.inf
    timer_token = 0  # invalidates stale refresh/retransmission events
    timeout_at = math.inf

    queue = []
    seq = 0

    def push(time, kind, payload=None):
        nonlocal seq
        heapq.heappush(queue, (time, kind, seq, payload))
        seq += 1

    def send(now, targets):
        delivered = targets & (loss_rng.random(n) >= p.p_loss)
        push(now + D, _ARRIVAL, (version, delivered))
        return delivered

    def macro(now):
        if not has_ir:
            return S1
        if now < in_flight_until:
            return S3
        return S2 if np.all(held == version) else S4

    def arm_timeout(now):
        nonlocal timeout_at
        if X is None or p.reliable:
            return
        nxt = expiry.min()
        if nxt < timeout_at or timeout_at <= now:
            timeout_at = nxt
            if math.isfinite(nxt):
                push(nxt, _TIMEOUT)

    push(clock.exp(p.lambda_u), _UPDATE)
    push(clock.exp(p.lambda_d), _DELETE)

    t = 0.0
    state = S1
    all_receivers = np.ones(n, dtype=bool)
    while queue:
        now, kind, _, payload = heapq.heappop(queue)
        if now >= horizon:
            break
        acc.add(state, t, now)
        t = now
        in_window = acc.in_window(now)

        if kind == _UPDATE:
            version += 1
            has_ir = True
            in_flight_until = now + D
            timer_token += 1
            acked[:] = False
            delivered = send(now, all_receivers)
            if not delivered.all() and in_window:
                counts["losses"] += 1
            if p.reliable:
                acked |= delivered & (loss_rng.random(n) >= p.p_loss)
                push(now + 2.0 * D, _RETX, timer_token)
            else:
                push(now + p.refresh_period, _REFRESH, timer_token)
            if in_window:
                counts["updates"] += 1
            push(now + clock.exp(p.lambda_u), _UPDATE)
        elif kind == _DELETE:
            if has_ir:
                has_ir = False
                timer_token += 1
                if in_window:
                    counts["deletions"] += 1
            push(now + clock.exp(p.lambda_d), _DELETE)
        elif kind == _ARRIVAL:
            msg_version, delivered = payload
            accept = delivered & (held <= msg_version)
            held[accept] = msg_version
            if not p.reliable:
                expiry[accept] = now + X
                arm_timeout(now)
        elif kind == _REFRESH:
            if payload == timer_token and has_ir:
                stragglers_before = held != version
                delivered = send(now, all_receivers)
                if (stragglers_before & ~delivered).any() and in_window:
                    counts["failed_recoveries"] += 1
                push(now + p.refresh_period, _REFRESH, timer_token)
        elif kind == _RETX:
            if payload == timer_token and has_ir and not acked.all():
                delivered = send(now, ~acked)
                if (~acked & ~delivered).any() and in_window:
                    counts["failed_recoveries"] += 1
                acked |= delivered & (loss_rng.random(n) >= p.p_loss)
                push(now + 2.0 * D, _RETX, timer_token)
        elif kind == _TIMEOUT:
            if now >= timeout_at:
                expired = expiry <= now
                if expired.any():
                    if has_ir and in_window:
                        counts["erroneous_removals"] += int(np.sum(expired & (held == version)))
                    held[expired] = -1
                    expiry[expired] = math.inf
                timeout_at = math.inf
                arm_timeout(now)

        acc.mark_event(now)
        state = macro(now)
    acc.add(state, t, horizon)
    return acc.report(counts)
