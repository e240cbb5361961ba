from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import naive_tau, two_state_tau
from mixtime.chains import make_chain
from mixtime.errors import LengthMismatch, SizeCapExceeded
from mixtime.mixing import (
    matmul,
    matmul_reference,
    max_tv,
    mixing_time_naive,
    total_mixing_time,
    tv_distance,
)
from mixtime.state_graph import StateGraph, build, loop_reduce


def test_tv_distance_basics():
    assert tv_distance([1, 0], [0, 1]) == 1.0
    assert tv_distance([0.5, 0.5], [0.5, 0.5]) == 0.0
    assert tv_distance([0.2, 0.8], [0.5, 0.5]) == pytest.approx(0.3)
    with pytest.raises(LengthMismatch):
        tv_distance([1.0], [0.5, 0.5])


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=3, max_size=3), st.lists(st.floats(0, 1), min_size=3, max_size=3))
def test_tv_distance_is_a_bounded_metric(x, y):
    x = np.array(x) + 1e-9
    y = np.array(y) + 1e-9
    x /= x.sum()
    y /= y.sum()
    d = tv_distance(x, y)
    assert 0 <= d <= 1 + 1e-12
    assert d == pytest.approx(tv_distance(y, x))


def test_two_state_tau_closed_form(two_state_pair):
    g = build(make_chain("switch1", two_state_pair))
    expected = two_state_tau(Fraction(1, 441), Fraction(1, 1000))
    assert expected == 1368
    assert total_mixing_time(g, 1e-3).tau == expected
    assert mixing_time_naive(g, 1e-3).tau == expected


@pytest.mark.parametrize("p", [Fraction(1, 3), Fraction(1, 7), Fraction(2, 5), Fraction(1, 100)])
@pytest.mark.parametrize("eps", [Fraction(1, 100), Fraction(1, 1000)])
def test_synthetic_two_state(p, eps):
    fp = float(p)
    g = StateGraph.from_matrix(np.array([[1 - fp, fp], [fp, 1 - fp]]))
    assert total_mixing_time(g, float(eps)).tau == two_state_tau(p, eps)


def test_loop_reduced_two_state(two_state_pair):
    g = loop_reduce(build(make_chain("switch1", two_state_pair)))
    assert total_mixing_time(g, 1e-3).tau == 14
    assert mixing_time_naive(g, 1e-3).tau == 14


@pytest.mark.parametrize(
    "kind,inst",
    [("switch1", "2,2,1;2,2,1"), ("switch2", "3,2,2,1;3,2,2,1"), ("matching1", "111;111;111"), ("matching2", "110;111;011")],
)
@pytest.mark.parametrize("eps", [1e-2, 1e-3, 1e-4])
def test_fast_equals_naive_and_independent_oracle(kind, inst, eps):
    g = build(make_chain(kind, inst))
    tau = total_mixing_time(g, eps).tau
    assert tau == mixing_time_naive(g, eps).tau
    assert tau == naive_tau(g.dense(), g.pi, eps)


def test_single_precision_agrees_on_small_graph():
    g = build(make_chain("matching1", "111;111;111"))
    assert total_mixing_time(g, 1e-3, precision="single").tau == total_mixing_time(g, 1e-3).tau


def test_thread_count_does_not_change_tau():
    g = build(make_chain("switch1", "3,3,2,2;3,3,2,2"))
    taus = {total_mixing_time(g, 1e-3, threads=t).tau for t in (1, 2, 3)}
    assert len(taus) == 1


def test_tau_zero_when_already_mixed():
    g = StateGraph.from_matrix(np.full((3, 3), 1 / 3))
    assert total_mixing_time(g, 0.7).tau == 0
    assert total_mixing_time(g, 0.1).tau == 1


def test_mixing_cap():
    g = build(make_chain("switch1", "2,2,1;2,2,1"))
    with pytest.raises(SizeCapExceeded):
        total_mixing_time(g, 1e-3, max_states=2)
    with pytest.raises(ValueError):
        total_mixing_time(g, 1.5)


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 40), st.integers(1, 40), st.integers(1, 4), st.integers(0, 2**31))
def test_blocked_matmul_matches_reference(n, m, threads, seed):
    rng = np.random.default_rng(seed)
    A = rng.random((n, m))
    B = rng.random((m, n))
    np.testing.assert_allclose(matmul(A, B, threads), matmul_reference(A, B), rtol=1e-12)


def test_tv_monotone_in_t():
    g = build(make_chain("switch2", "2,2,2,1;3,2,2"))
    P = g.dense()
    M = np.eye(g.n_states)
    prev = 1.0
    for _ in range(60):
        M = M @ P
        d = max_tv(M, g.pi)
        assert d <= prev + 1e-15
        prev = d
