import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sqmean.core import FiniteDistribution, Query, exact_moments
from sqmean.oracles import (
    DOWN,
    HONEST,
    POLICIES,
    RANDOM_SIGN,
    UP,
    CommOracle,
    CommVstatOracle,
    OracleContractError,
    StatOracle,
    VstatOracle,
    comm_query,
    comm_schedule,
    oracle_factory,
    randomized_rounding_bit,
    resolve_policy,
    stat_query,
    vstat_query,
    vstat_tolerance,
    vstat_via_comm,
)


@pytest.mark.parametrize("p, n, expected", [(0, 100, 0.01), (0.5, 100, 0.05), (1, 16, 0.0625)])
def test_vstat_tolerance_examples(p, n, expected):
    assert vstat_tolerance(p, n) == pytest.approx(expected)


@pytest.mark.parametrize("p", [-0.1, 1.5])
def test_vstat_tolerance_rejects_bad_p(p):
    with pytest.raises(ValueError):
        vstat_tolerance(p, 10)


def test_vstat_query_examples(fair_coin):
    q = Query.identity(fair_coin)
    assert vstat_query(VstatOracle(fair_coin, 100, HONEST), q) == 0.5
    assert vstat_query(VstatOracle(fair_coin, 100, UP), q) == pytest.approx(0.55)
    zero = FiniteDistribution.point_mass(0)
    assert vstat_query(VstatOracle(zero, 50, UP), Query.identity(zero)) == pytest.approx(0.02)


def test_vstat_rejects_out_of_range_values():
    d = FiniteDistribution.point_mass(2.0)
    with pytest.raises(OracleContractError):
        VstatOracle(d, 10).query(Query.identity(d))


def test_stat_query_examples(fair_coin):
    q = Query.identity(fair_coin)
    assert stat_query(StatOracle(fair_coin, 0.1, HONEST), q) == 0.5
    assert stat_query(StatOracle(fair_coin, 0.1, DOWN), q) == pytest.approx(0.4)
    d = FiniteDistribution.from_dict({0: 0.05, 1: 0.95})
    assert stat_query(StatOracle(d, 0.1, UP), Query.identity(d)) == 1.0


@st.composite
def unit_queries(draw):
    size = draw(st.integers(1, 20))
    values = draw(st.lists(st.floats(0, 1), min_size=size, max_size=size))
    raw = draw(st.lists(st.floats(0.01, 1), min_size=size, max_size=size))
    dist = FiniteDistribution(np.arange(size), np.asarray(raw) / math.fsum(raw))
    return Query(dist, values, 0.0, 1.0)


@settings(max_examples=300)
@given(unit_queries(), st.integers(1, 10_000), st.sampled_from(POLICIES), st.integers(0, 2**32))
def test_vstat_contract_fuzz(q, n, policy, seed):
    oracle = VstatOracle(q.dist, n, policy, seed=seed)
    p = exact_moments(q.dist, q).mean
    v = oracle.query(q)
    assert 0.0 <= v <= 1.0
    assert abs(v - p) <= vstat_tolerance(min(max(p, 0), 1), n) + 1e-12


@given(unit_queries(), st.integers(1, 10_000))
def test_directional_policies_saturate(q, n):
    p = exact_moments(q.dist, q).mean
    tol = vstat_tolerance(min(max(p, 0), 1), n)
    assert VstatOracle(q.dist, n, UP).query(q) == pytest.approx(min(p + tol, 1.0), abs=1e-12)
    assert VstatOracle(q.dist, n, DOWN).query(q) == pytest.approx(max(p - tol, 0.0), abs=1e-12)


def test_random_sign_determinism(rng):
    d = FiniteDistribution.uniform(range(10))
    queries = [Query(d, rng.random(10), 0, 1) for _ in range(50)]
    a = VstatOracle(d, 100, RANDOM_SIGN, seed=9)
    b = VstatOracle(d, 100, RANDOM_SIGN, seed=9)
    answers = [a.query(q) for q in queries]
    assert answers == [b.query(q) for q in queries]
    assert a.ledger.queries_asked == 50
    c = VstatOracle(d, 100, RANDOM_SIGN, seed=10)
    assert answers != [c.query(q) for q in queries]


def test_policy_aliases():
    assert resolve_policy("up") == UP
    with pytest.raises(ValueError):
        resolve_policy("sideways")


def test_comm_query_constant():
    d = FiniteDistribution.uniform(range(5))
    oracle = CommOracle(d, seed=1)
    assert comm_query(oracle, Query(d, np.ones(5))) == 1
    assert comm_query(oracle, Query(d, np.zeros(5))) == 0
    assert oracle.ledger.bits_consumed == oracle.ledger.samples_drawn == 2
    with pytest.raises(ValueError):
        comm_query(oracle, Query(d, np.full(5, 0.5)))


def test_comm_sample_mean(fair_coin):
    oracle = CommOracle(fair_coin, seed=3)
    q = Query.identity(fair_coin)
    bits = [oracle.query(q) for _ in range(100_000)]
    assert 0.49 <= np.mean(bits) <= 0.51


def test_rounding_bit_edges(fair_coin):
    oracle = CommOracle(fair_coin, seed=4)
    assert all(randomized_rounding_bit(oracle, Query(fair_coin, [1.0, 1.0])) == 1 for _ in range(200))
    assert all(randomized_rounding_bit(oracle, Query(fair_coin, [0.0, 0.0])) == 0 for _ in range(200))


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_rounding_bits_unbiased(seed):
    d = FiniteDistribution.from_dict({0: 0.2, 1: 0.3, 2: 0.5})
    q = Query(d, [0.9, 0.1, 0.35])
    p = exact_moments(d, q).mean
    N = 100_000
    mean = CommOracle(d, seed=seed).rounding_bits(q, N) / N
    assert abs(mean - p) <= 4 * math.sqrt(1 / N)


def test_rounding_constant_point_three():
    d = FiniteDistribution.uniform(range(4))
    mean = CommOracle(d, seed=5).rounding_bits(Query(d, np.full(4, 0.3)), 100_000) / 100_000
    assert 0.29 <= mean <= 0.31


def test_vstat_via_comm_edges_and_ledger(fair_coin):
    comm = CommOracle(fair_coin, seed=6)
    r, m = comm_schedule(100, 20, 0.1)
    assert vstat_via_comm(comm, Query(fair_coin, [1.0, 1.0]), 100, 20, 0.1) == 1.0
    before = comm.ledger.bits_consumed
    assert vstat_via_comm(comm, Query(fair_coin, [0.0, 0.0]), 100, 20, 0.1) == 0.0
    assert comm.ledger.bits_consumed - before == r * m
    with pytest.raises(ValueError):
        vstat_via_comm(comm, Query.identity(fair_coin), 100, 20, 1.0)


def test_vstat_via_comm_two_point(fair_coin):
    q = Query.identity(fair_coin)
    bad = 0
    for seed in range(200):
        v = vstat_via_comm(CommOracle(fair_coin, seed=seed), q, 100, 20, 0.1)
        bad += abs(v - 0.5) > 0.05
    # delta/q_total = 0.005; allow binomial slack over 200 runs
    assert bad / 200 <= 0.005 + 3 * math.sqrt(0.005 / 200)


def test_comm_vstat_oracle_ledger(fair_coin):
    oracle = CommVstatOracle(CommOracle(fair_coin, seed=1), 50, 10, 0.1)
    r, m = comm_schedule(50, 10, 0.1)
    for _ in range(3):
        oracle.query(Query.identity(fair_coin))
    assert oracle.ledger.queries_asked == 3
    assert oracle.ledger.bits_consumed == 3 * r * m == oracle.comm.ledger.bits_consumed


def test_comm_schedule_cap():
    r, m = comm_schedule(100, 20, 0.1)
    assert r * m <= 64 * 100 * math.log(2 * 20 / 0.1)


@pytest.mark.parametrize("model", ["vstat", "stat", "comm-sim"])
def test_factory_reproducible(model, fair_coin):
    q = Query.identity(fair_coin)
    runs = []
    for _ in range(2):
        make = oracle_factory(model, RANDOM_SIGN, seed=42, q_total=5)
        runs.append([make(fair_coin, 64).query(q) for _ in range(4)])
        assert len(make.created) == 4
    assert runs[0] == runs[1]


def test_stat_model_is_at_least_as_accurate(fair_coin):
    make = oracle_factory("stat", UP, seed=0)
    oracle = make(fair_coin, 100)
    assert oracle.n == 100
    assert abs(oracle.query(Query.identity(fair_coin)) - 0.5) <= vstat_tolerance(0.5, 100)
