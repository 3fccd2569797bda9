import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings, strategies as st

from sdds_consistency import (CASE_1, CASE_2, ModelKind, aggregate, build_generator,
                              converged_steady_state, macro_steady_state, reference_steady_state,
                              steady_state, sweep_k, transient)
from sdds_consistency.chains import S2, S4, Generator, StateSpace
from sdds_consistency.solvers import SolverError, solve_stationary

# verified independently: exponential-holding embedded chain and the simulator
MARKOV_PI2_CASE1 = 0.9068985516853553


def two_state(a, b):
    space = StateSpace(ModelKind.MARKOV, 1, ("x", "y"), (0, 1), {0: 0, 1: 1})
    return Generator(np.array([[-a, a], [b, -b]]), space)


@given(a=st.floats(1e-3, 1e3), b=st.floats(1e-3, 1e3))
def test_two_state_balance(a, b):
    pi = steady_state(two_state(a, b))
    np.testing.assert_allclose(pi, [b / (a + b), a / (a + b)], rtol=1e-12)


@pytest.mark.parametrize("a,b,t", [(1.0, 2.0, 0.3), (0.5, 0.1, 7.0), (10.0, 3.0, 2.0)])
def test_two_state_transient_analytic(a, b, t):
    (pi,) = transient(two_state(a, b), [1.0, 0.0], [t])
    expected_x = b / (a + b) + a / (a + b) * np.exp(-(a + b) * t)
    assert abs(pi[0] - expected_x) <= 1e-10
    assert abs(pi.sum() - 1) <= 1e-10


def test_markov_case1_golden():
    pi = macro_steady_state(CASE_1, "markov")
    assert pi[S2] == pytest.approx(MARKOV_PI2_CASE1, abs=1e-12)
    np.testing.assert_allclose(pi, reference_steady_state(CASE_1, holding="exponential"), atol=1e-12)


@pytest.mark.parametrize("kind", list(ModelKind))
def test_steady_residual_and_sum(table_params, kind):
    gen = build_generator(table_params, kind, 20)
    pi = steady_state(gen)
    assert np.abs(pi @ gen.matrix).max() <= 1e-10
    assert abs(pi.sum() - 1) <= 1e-10
    assert pi.min() >= 0


def test_unreachable_state_gets_zero():
    p = CASE_2.replace(p_loss=0.0, lambda_f=0.0)
    for kind in ModelKind:
        macro = macro_steady_state(p, kind, 5)
        assert macro[S4] == 0.0
        assert abs(macro.sum() - 1) <= 1e-12


def test_singular_system_reported():
    Q = np.zeros((2, 2))
    Q[0, 1], Q[0, 0] = 1.0, -1.0  # state 1 is absorbing, but solve still defined
    pi = solve_stationary(Q, 0)
    np.testing.assert_allclose(pi, [0, 1])
    # two closed classes reachable from the start: no unique stationary vector
    Q = np.array([[-2.0, 1.0, 1.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
    with pytest.raises(SolverError):
        solve_stationary(Q, 0)


def test_transient_edge_cases():
    gen = build_generator(CASE_2, "erlang-full", 3)
    pi0 = gen.space.point_mass(2)
    assert transient(gen, pi0, []) == []
    (first,) = transient(gen, pi0, [0.0])
    assert np.array_equal(first, pi0)
    with pytest.raises(ValueError):
        transient(gen, pi0, [float("nan")])
    with pytest.raises(ValueError):
        transient(gen, pi0, [2.0, 1.0])
    with pytest.raises(ValueError):
        transient(gen, np.ones(3), [1.0])


@pytest.mark.parametrize("kind,k", [("markov", 1), ("erlang-full", 4), ("erlang-simplified", 6)])
def test_transient_matches_expm(kind, k):
    gen = build_generator(CASE_2, kind, k)
    pi0 = gen.space.point_mass(2)
    times = [0.5, 1.0, 3.0, 12.0, 40.0]
    for t, pi in zip(times, transient(gen, pi0, times)):
        oracle = pi0 @ scipy.linalg.expm(gen.matrix * t)
        assert np.abs(pi - oracle).max() <= 1e-9
        assert abs(pi.sum() - 1) <= 1e-10


def test_transient_long_run_matches_steady_state():
    gen = build_generator(CASE_2, "erlang-full", 5)
    off = gen.matrix[~np.eye(gen.n, dtype=bool)]
    t_end = 50.0 / off[off > 0].min()
    (pi,) = transient(gen, gen.space.point_mass(0), [t_end])
    assert np.abs(pi - steady_state(gen)).max() <= 1e-6


def test_sweep_k1_models_agree():
    a = sweep_k(CASE_2, "erlang-full", [1]).macro
    b = sweep_k(CASE_2, "erlang-simplified", [1]).macro
    assert np.array_equal(a, b)


def test_sweep_monotone_case2():
    ks = [1, 2, 5, 10, 20, 50]
    full = sweep_k(CASE_2, "erlang-full", ks).consistency
    simp = sweep_k(CASE_2, "erlang-simplified", ks).consistency
    assert np.all(np.diff(full) <= 0)
    assert np.all(np.diff(simp) <= 0)
    assert simp.max() <= full[0]


def test_sweep_validation_and_parallel():
    with pytest.raises(ValueError):
        sweep_k(CASE_1, "erlang-full", [])
    with pytest.raises(ValueError):
        sweep_k(CASE_1, "erlang-full", [2, 1])
    ks = [1, 3, 7, 15]
    serial = sweep_k(CASE_1, "erlang-full", ks)
    parallel = sweep_k(CASE_1, "erlang-full", ks, workers=4)
    assert serial.ks == parallel.ks
    assert np.array_equal(serial.macro, parallel.macro)


def test_steady_state_deterministic():
    a = macro_steady_state(CASE_2, "erlang-full", 30)
    b = macro_steady_state(CASE_2, "erlang-full", 30)
    assert np.array_equal(a, b)


@pytest.mark.parametrize("params", [CASE_1, CASE_2], ids=["case1", "case2"])
def test_markov_upper_bound_and_cauchy(params):
    markov = macro_steady_state(params, "markov")[S2]
    ks = [2, 4, 8, 16, 32, 64, 128]
    pi2 = sweep_k(params, "erlang-full", ks).consistency
    assert np.all(pi2 <= markov)
    steps = np.abs(np.diff(pi2))
    assert np.all(np.diff(steps) < 0)


def test_converged_rule():
    conv = converged_steady_state(CASE_2, "erlang-full")
    (k_prev, v_prev), (k_last, v_last) = conv.history[-2:]
    assert k_last == 2 * k_prev == conv.k
    assert abs(v_last - v_prev) < 1e-4
    for (_, a), (_, b) in zip(conv.history[:-2], conv.history[1:-1]):
        assert abs(b - a) >= 1e-4
    with pytest.raises(SolverError):
        converged_steady_state(CASE_2, "erlang-full", atol=1e-12, k_max=8)


def test_aggregate_of_steady_state_sums_to_one():
    gen = build_generator(CASE_1, "erlang-simplified", 9)
    assert abs(aggregate(steady_state(gen), gen.space).sum() - 1) <= 1e-12
