"""
Steady-state and transient solution of a generator, plus sweeps over the
Erlang phase count.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats
from scipy.sparse.csgraph import breadth_first_order

from .chains import S1, S2, Generator, ModelKind, aggregate, build_generator
from .params import SddsParams

STEADY_RESIDUAL_TOL = 1e-10
TRANSIENT_TOL = 1e-10
STATIONARY_DETECT = 1e-15


class SolverError(RuntimeError):
    """Numerical failure of a solver. Carries the offending k when known."""

    def __init__(self, message, k: Optional[int] = None):
        super().__init__(message if k is None else f"k={k}: {message}")
        self.k = k


def reachable_from(adjacency: np.ndarray, start: int) -> np.ndarray:
    """Boolean mask of nodes reachable from `start` along positive off-diagonal entries."""
    graph = (adjacency > 0).astype(np.int8)
    np.fill_diagonal(graph, 0)
    order = breadth_first_order(graph, start, directed=True, return_predecessors=False)
    mask = np.zeros(adjacency.shape[0], dtype=bool)
    mask[order] = True
    return mask


def solve_stationary(Q: np.ndarray, start: int = 0) -> np.ndarray:
    """
    Stationary vector of the rate matrix `Q` restricted to the states
    reachable from `start`; all other states get exactly 0.

    Solves ``pi Q = 0`` with ``sum(pi) = 1`` by replacing one balance
    equation with the normalization.
    """
    n = Q.shape[0]
    mask = reachable_from(Q, start)
    idx = np.flatnonzero(mask)
    R = Q[np.ix_(idx, idx)]
    M = R.T.copy()
    M[-1, :] = 1.0
    rhs = np.zeros(len(idx))
    rhs[-1] = 1.0
    try:
        x = np.linalg.solve(M, rhs)
    except np.linalg.LinAlgError as exc:
        raise SolverError(f"singular reduced system: {exc}") from None
    if not np.all(np.isfinite(x)):
        raise SolverError("non-finite stationary vector")
    pi = np.zeros(n)
    pi[idx] = x
    return pi


def _clean(pi: np.ndarray) -> np.ndarray:
    if pi.min() < -1e-12:
        raise SolverError(f"negative probability {pi.min():.3e}")
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


def steady_state(gen: Generator) -> np.ndarray:
    """Stationary micro-state distribution of `gen`."""
    A = gen.matrix
    pi = _clean(solve_stationary(A, S1))
    residual = np.abs(pi @ A).max()
    if residual > STEADY_RESIDUAL_TOL:
        # one step of iterative refinement before giving up
        mask = pi > 0
        idx = np.flatnonzero(mask)
        M = A[np.ix_(idx, idx)].T.copy()
        M[-1, :] = 1.0
        r = -(pi[idx] @ A[np.ix_(idx, idx)])
        r[-1] = 0.0
        pi[idx] += np.linalg.solve(M, r)
        pi = _clean(pi)
        residual = np.abs(pi @ A).max()
        if residual > STEADY_RESIDUAL_TOL:
            raise SolverError(f"steady-state residual {residual:.3e} exceeds {STEADY_RESIDUAL_TOL}")
    return pi


def _poisson_window(rate_t: float, tol: float) -> Tuple[int, np.ndarray]:
    """Left truncation point and weights covering all but `tol` of Poisson(rate_t)."""
    if rate_t == 0.0:
        return 0, np.ones(1)
    dist = stats.poisson(rate_t)
    # ppf returns the smallest n with cdf(n) >= tol/2, so cdf(left - 1) < tol/2
    left = int(dist.ppf(tol / 2.0))
    right = int(dist.isf(tol / 2.0)) + 1
    while dist.sf(right) > tol / 2.0:
        right += 1
    n = np.arange(left, right + 1)
    w = np.exp(dist.logpmf(n))
    return left, w


def transient(gen: Generator, pi0, times: Sequence[float], tol: float = TRANSIENT_TOL) -> List[np.ndarray]:
    """
    Distributions ``pi0 exp(A t)`` at each of `times`, by uniformization.

    Times are processed in increasing order and each step starts from the
    previous result; the per-step truncation budget is ``tol / len(times)``
    so the accumulated truncation error stays below `tol`.
    """
    times = [float(t) for t in times]
    if not times:
        return []
    if not all(math.isfinite(t) for t in times):
        raise ValueError("times must be finite")
    if times[0] < 0 or any(b < a for a, b in zip(times, times[1:])):
        raise ValueError("times must be sorted and >= 0")
    pi = np.asarray(pi0, dtype=float).copy()
    if pi.shape != (gen.n,):
        raise ValueError(f"pi0 has shape {pi.shape}, generator has {gen.n} states")
    if pi.min() < 0 or abs(pi.sum() - 1.0) > 1e-10:
        raise ValueError("pi0 is not a probability vector")

    A = gen.matrix
    q = float(gen.exit_rates().max())
    if q == 0.0:
        return [pi.copy() for _ in times]
    q *= 1.02
    P = np.eye(gen.n) + A / q
    step_tol = tol / len(times)

    out = []
    t_prev = 0.0
    for t in times:
        dt = t - t_prev
        if dt > 0:
            pi = _uniformized_step(pi, P, q * dt, step_tol)
        out.append(pi.copy())
        t_prev = t
    return out


def _uniformized_step(pi, P, rate_t, tol):
    """``sum_n Poisson(n; rate_t) pi P^n`` truncated to all but `tol` of the mass.

    Powering stops early once ``pi P^n`` is stationary to within
    `STATIONARY_DETECT`; the remaining Poisson mass then goes to that
    vector. This keeps very long horizons affordable.
    """
    left, w = _poisson_window(rate_t, tol)
    v = pi
    for _ in range(left):
        nv = v @ P
        if np.abs(nv - v).max() < STATIONARY_DETECT:
            return _normalize(nv)
        v = nv
    acc = w[0] * v
    for i in range(1, len(w)):
        nv = v @ P
        if np.abs(nv - v).max() < STATIONARY_DETECT:
            acc += w[i:].sum() * nv
            break
        v = nv
        acc += w[i] * v
    return _normalize(acc)


def _normalize(v):
    v = np.clip(v, 0.0, None)
    return v / v.sum()


@dataclass(frozen=True)
class SweepResult:
    kind: ModelKind
    params: SddsParams
    ks: Tuple[int, ...]
    macro: np.ndarray  # shape (len(ks), 4)

    def __iter__(self):
        return iter(zip(self.ks, self.macro))

    @property
    def consistency(self) -> np.ndarray:
        return self.macro[:, S2]


def macro_steady_state(params: SddsParams, kind, k: int = 1) -> np.ndarray:
    gen = build_generator(params, kind, k)
    return aggregate(steady_state(gen), gen.space)


def sweep_k(params: SddsParams, kind, ks: Sequence[int], workers: int = 1) -> SweepResult:
    """Macro-state steady state for each phase count in `ks`."""
    kind = ModelKind.parse(kind)
    ks = tuple(int(k) for k in ks)
    if not ks:
        raise ValueError("ks must be non-empty")
    if any(k < 1 for k in ks):
        raise ValueError("every k must be >= 1")
    if any(b <= a for a, b in zip(ks, ks[1:])):
        raise ValueError("ks must be strictly increasing")

    def one(k):
        try:
            return macro_steady_state(params, kind, k)
        except SolverError as exc:
            raise SolverError(str(exc), k=k) from None

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(one, ks))
    else:
        rows = [one(k) for k in ks]
    return SweepResult(kind, params, ks, np.vstack(rows))


@dataclass(frozen=True)
class ConvergedValue:
    k: int  # the doubled phase count whose value is reported
    macro: np.ndarray
    history: Tuple[Tuple[int, float], ...]

    @property
    def consistency(self) -> float:
        return float(self.macro[S2])


def converged_steady_state(params: SddsParams, kind=ModelKind.ERLANG_FULL,
                           atol: float = 1e-4, k_max: int = 4096) -> ConvergedValue:
    """
    Steady state at the smallest doubling ``k`` with ``|pi2(2k) - pi2(k)| < atol``.

    Phase counts are tried as 1, 2, 4, ...; the value at ``2k`` is reported.
    """
    k = 1
    prev = macro_steady_state(params, kind, k)
    history = [(k, float(prev[S2]))]
    while 2 * k <= k_max:
        cur = macro_steady_state(params, kind, 2 * k)
        history.append((2 * k, float(cur[S2])))
        if abs(cur[S2] - prev[S2]) < atol:
            return ConvergedValue(2 * k, cur, tuple(history))
        k *= 2
        prev = cur
    raise SolverError(f"no convergence to {atol} up to k={k_max}", k=k_max)
