"""
State spaces and infinitesimal generators for the three analytical models.

Micro-state ordering is fixed: ``[S1, S2, 3_1..3_k, 4_1..4_k]``. The Markov
model uses ``[S1, S2, S3, S4]``, which is the ``k = 1`` case of both Erlang
models after relabeling.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Dict, Iterator, List, Tuple

import numpy as np

from .params import SddsParams, TransitionRates

MACRO_STATES = ("S1", "S2", "S3", "S4")
S1, S2, S3, S4 = range(4)


class ModelKind(enum.Enum):
    MARKOV = "markov"
    ERLANG_FULL = "erlang-full"
    ERLANG_SIMPLIFIED = "erlang-simplified"

    @classmethod
    def parse(cls, value) -> "ModelKind":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("_", "-")
        aliases = {"model1": "erlang-full", "model2": "erlang-simplified",
                   "full": "erlang-full", "simplified": "erlang-simplified"}
        key = aliases.get(key, key)
        for kind in cls:
            if kind.value == key:
                return kind
        raise ValueError(f"unknown model kind {value!r}")


@dataclass(frozen=True)
class StateSpace:
    kind: ModelKind
    k: int
    labels: Tuple[str, ...]
    macro_of: Tuple[int, ...]
    entry_of: Dict[int, int]

    def __len__(self):
        return len(self.labels)

    @property
    def macro_index(self) -> np.ndarray:
        return np.asarray(self.macro_of, dtype=int)

    def phases(self, macro: int) -> List[int]:
        """Micro indices belonging to `macro`, in chain order."""
        return [i for i, m in enumerate(self.macro_of) if m == macro]

    def point_mass(self, macro: int) -> np.ndarray:
        """Distribution concentrated on the entry micro-state of `macro`."""
        pi = np.zeros(len(self))
        pi[self.entry_of[macro]] = 1.0
        return pi


@dataclass(frozen=True)
class Generator:
    """Dense infinitesimal generator over a `StateSpace`. Treat as immutable."""

    matrix: np.ndarray
    space: StateSpace

    def __post_init__(self):
        self.matrix.setflags(write=False)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def transitions(self) -> Iterator[Tuple[int, int, float]]:
        """Yield ``(i, j, rate)`` for every nonzero off-diagonal entry."""
        rows, cols = np.nonzero(self.matrix)
        for i, j in zip(rows, cols):
            if i != j:
                yield int(i), int(j), float(self.matrix[i, j])

    def exit_rates(self) -> np.ndarray:
        return -np.diag(self.matrix)


def build_state_space(kind, k: int = 1) -> StateSpace:
    kind = ModelKind.parse(kind)
    if int(k) != k or k < 1:
        raise ValueError(f"phase count k must be an integer >= 1, got {k!r}")
    k = int(k)
    if kind is ModelKind.MARKOV:
        return StateSpace(kind, 1, MACRO_STATES, (S1, S2, S3, S4),
                          {S1: 0, S2: 1, S3: 2, S4: 3})
    labels = ["S1", "S2"] + [f"3_{j}" for j in range(1, k + 1)] + [f"4_{j}" for j in range(1, k + 1)]
    macro = [S1, S2] + [S3] * k + [S4] * k
    return StateSpace(kind, k, tuple(labels), tuple(macro), {S1: 0, S2: 1, S3: 2, S4: 2 + k})


def build_generator(params: SddsParams, kind, k: int = 1) -> Generator:
    """
    Infinitesimal generator of the chosen model.

    Erlang models replace the transfer time of S3 (mean D) and the recovery
    cycle of S4 (mean T, or 2D in reliable mode) by Erlang-k chains. The
    chain completions split with the update/refresh success probabilities;
    a failed recovery cycle restarts the S4 chain. In the full model every
    phase can be interrupted by an update or a removal; in the simplified
    model only the entry phases can.
    """
    space = build_state_space(kind, k)
    if space.kind is ModelKind.MARKOV:
        return Generator(_markov_matrix(params), space)

    k = space.k
    n = len(space)
    A = np.zeros((n, n))
    lu, ld, lf = params.lambda_u, params.lambda_d, params.lambda_f
    D = params.transfer_delay
    q = params.update_success_prob
    p6 = params.refresh_success_prob
    # recovery chain completion; written so that k = 1 reproduces the
    # Markov rate expressions bit for bit
    if params.reliable:
        cycle = 2.0 * D
    else:
        cycle = params.refresh_period

    three = space.phases(S3)
    four = space.phases(S4)
    in3, in4 = three[0], four[0]

    A[S1, in3] = lu
    A[S2, S1] = ld
    A[S2, in3] = lu
    A[S2, in4] += lf

    mu3 = k / D
    mu4 = k / cycle
    for j in range(k - 1):
        A[three[j], three[j + 1]] = mu3
        A[four[j], four[j + 1]] = mu4
    A[three[-1], S2] += (k * q) / D
    A[three[-1], in4] += (k * (1.0 - q)) / D
    A[four[-1], S2] += (k * p6) / cycle
    A[four[-1], in4] += (k * (1.0 - p6)) / cycle

    if space.kind is ModelKind.ERLANG_FULL:
        interruptible = three + four
    else:
        interruptible = [in3, in4]
    for i in interruptible:
        A[i, in3] += lu
        A[i, S1] += ld

    np.fill_diagonal(A, 0.0)
    A[np.diag_indices(n)] = -A.sum(axis=1)
    return Generator(A, space)


def _markov_matrix(params: SddsParams) -> np.ndarray:
    r = TransitionRates.from_params(params)
    A = np.zeros((4, 4))
    A[S1, S3] = r.lambda_u
    A[S2, S1] = r.lambda_d
    A[S2, S3] = r.lambda_u
    A[S2, S4] = r.lambda_f
    A[S3, S2] = r.e2
    A[S3, S4] = r.e4
    A[S3, S1] = r.lambda_d
    A[S4, S2] = r.e6
    A[S4, S3] = r.lambda_u
    A[S4, S1] = r.lambda_d
    A[np.diag_indices(4)] = -A.sum(axis=1)
    return A


def aggregate(dist, space: StateSpace) -> np.ndarray:
    """Sum a micro-state distribution into the four macro-states."""
    dist = np.asarray(dist, dtype=float)
    if dist.shape != (len(space),):
        raise ValueError(f"distribution has shape {dist.shape}, state space has {len(space)} states")
    return np.bincount(space.macro_index, weights=dist, minlength=4)
