import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sdds_consistency import (CASE_1, ModelKind, SddsParams, aggregate, build_generator,
                              build_state_space, rate_update_loss, rate_update_success)
from sdds_consistency.chains import S1, S2, S3, S4

KINDS = list(ModelKind)

params_st = st.builds(
    SddsParams,
    lambda_u=st.floats(1e-3, 10),
    lambda_d=st.floats(0, 1),
    lambda_f=st.floats(0, 1),
    p_loss=st.floats(0, 1),
    n_receivers=st.integers(1, 500),
    transfer_delay=st.floats(1e-3, 10),
    refresh_period=st.floats(1e-2, 100),
    reliable=st.booleans(),
)


def test_state_space_sizes():
    assert len(build_state_space("markov", 17)) == 4
    assert len(build_state_space("erlang-full", 1)) == 4
    assert len(build_state_space("erlang-full", 10)) == 22
    assert len(build_state_space("erlang-simplified", 10)) == 22
    with pytest.raises(ValueError):
        build_state_space("erlang-full", 0)


def test_state_space_layout():
    space = build_state_space(ModelKind.ERLANG_FULL, 3)
    assert space.labels == ("S1", "S2", "3_1", "3_2", "3_3", "4_1", "4_2", "4_3")
    assert space.macro_of == (S1, S2, S3, S3, S3, S4, S4, S4)
    assert space.entry_of[S3] == 2 and space.entry_of[S4] == 5
    assert space.phases(S1) == [0] and space.phases(S2) == [1]


def test_model_kind_parse():
    assert ModelKind.parse("Erlang_Full") is ModelKind.ERLANG_FULL
    assert ModelKind.parse("model2") is ModelKind.ERLANG_SIMPLIFIED
    with pytest.raises(ValueError):
        ModelKind.parse("gsmp")


@pytest.mark.parametrize("reliable", [False, True])
def test_k1_generators_identical(reliable):
    p = CASE_1.replace(reliable=reliable)
    ref = build_generator(p, "markov").matrix
    for kind in ("erlang-full", "erlang-simplified"):
        assert np.array_equal(build_generator(p, kind, 1).matrix, ref)


def test_markov_entries_case1():
    A = build_generator(CASE_1, "markov").matrix
    assert A[S3, S2] == rate_update_success(CASE_1)
    assert A[S3, S4] == rate_update_loss(CASE_1)
    assert A[S3, S2] == pytest.approx(90.47921471137090, rel=1e-13)
    assert A[S3, S4] == pytest.approx(9.520785288629096, rel=1e-12)
    assert A[S1, S3] == CASE_1.lambda_u
    assert A[S2, S4] == CASE_1.lambda_f


@settings(max_examples=60, deadline=None)
@given(p=params_st, kind=st.sampled_from(KINDS), k=st.integers(1, 40))
def test_generator_is_conservative(p, kind, k):
    A = build_generator(p, kind, k).matrix
    off = A - np.diag(np.diag(A))
    assert off.min() >= 0
    assert np.abs(A.sum(axis=1)).max() <= 1e-12 * max(1.0, np.abs(A).max())


def test_generator_is_read_only():
    gen = build_generator(CASE_1, "erlang-full", 3)
    with pytest.raises(ValueError):
        gen.matrix[0, 0] = 1.0


@pytest.mark.parametrize("k", [2, 5])
def test_exit_rates_by_model(k):
    p = CASE_1
    mu3 = k / p.transfer_delay
    mu4 = k / p.refresh_period
    lam = p.lambda_u + p.lambda_d
    full = build_generator(p, "erlang-full", k)
    simp = build_generator(p, "erlang-simplified", k)
    three = full.space.phases(S3)
    four = full.space.phases(S4)
    for j in three[1:-1]:
        assert full.exit_rates()[j] == pytest.approx(mu3 + lam)
        assert simp.exit_rates()[j] == pytest.approx(mu3)
    for j in four[1:-1]:
        assert simp.exit_rates()[j] == pytest.approx(mu4)
    # in the full model the update exit from the first phase is a self-loop
    assert full.exit_rates()[three[0]] == pytest.approx(mu3 + p.lambda_d)


@pytest.mark.parametrize("reliable", [False, True])
def test_completion_split_conserves_rate(reliable):
    p = CASE_1.replace(reliable=reliable)
    k = 4
    A = build_generator(p, "erlang-simplified", k).matrix
    space = build_state_space("erlang-simplified", k)
    last3, last4 = space.phases(S3)[-1], space.phases(S4)[-1]
    in4 = space.entry_of[S4]
    assert A[last3, S2] + A[last3, in4] == pytest.approx(k / p.transfer_delay)
    assert A[last4, S2] + A[last4, in4] == pytest.approx(k / p.recovery_period)


def test_s4_unreachable_without_losses():
    p = CASE_1.replace(p_loss=0.0, lambda_f=0.0)
    gen = build_generator(p, "erlang-full", 3)
    into_s4 = gen.matrix[:, gen.space.phases(S4)]
    outside = [i for i in range(gen.n) if gen.space.macro_of[i] != S4]
    assert np.all(into_s4[outside] == 0)


def test_aggregate():
    space = build_state_space("erlang-full", 10)
    assert np.array_equal(aggregate(space.point_mass(S3), space), [0, 0, 1, 0])
    uniform = np.full(22, 1 / 22)
    np.testing.assert_allclose(aggregate(uniform, space), [1 / 22, 1 / 22, 10 / 22, 10 / 22])
    assert abs(aggregate(uniform, space).sum() - 1) <= 1e-12
    with pytest.raises(ValueError):
        aggregate(np.ones(5) / 5, space)
