import numpy as np
import pytest
from hypothesis import given, strategies as st

from fdofdma.allocator import allocate, rank_subchannels
from fdofdma.core import (UNASSIGNED, ChannelRealization, NetworkScenario, check_feasible)
from fdofdma.pairwise import EXCLUSIVE, CANDIDATES, PairInstance, solve_pair

from helpers import synthetic_drop


def channels_from_best(best):
    g = np.asarray(best, float)[None, :]
    return ChannelRealization(g, np.zeros((1, 1, g.shape[1])))


def test_rank_example():
    assert rank_subchannels(channels_from_best([1, 3, 2])).tolist() == [1, 2, 0]


def test_rank_ties_keep_index_order():
    assert rank_subchannels(channels_from_best([2, 2, 2, 2])).tolist() == [0, 1, 2, 3]


@given(st.integers(0, 2**32 - 1))
def test_rank_is_sorted_permutation(seed):
    rng = np.random.default_rng(seed)
    _, ch = synthetic_drop(rng, 4, 64)
    order = rank_subchannels(ch)
    assert sorted(order.tolist()) == list(range(64))
    best = ch.bs_gain.max(axis=0)[order]
    assert np.all(np.diff(best) <= 0)


def test_single_fd_user_takes_both_links():
    sc = NetworkScenario(1, [True], 10.0, 2.0, 1.0, 1.0, 0.0, 1e-3, 1e-3)
    ch = ChannelRealization(np.ones((1, 1)), np.zeros((1, 1, 1)))
    res = allocate(sc, ch)
    assert res.assignment.pairs() == [(0, 0)]
    assert res.powers.p_dl[0] == 10.0 and res.powers.p_ul[0] == 2.0


def test_single_hd_user_takes_one_direction():
    sc = NetworkScenario(3, [False], 10.0, 2.0, 1.0, 1.0, 0.0, 1e-3, 1e-3)
    ch = ChannelRealization(np.ones((1, 3)), np.zeros((1, 1, 3)))
    res = allocate(sc, ch)
    for k, j in res.assignment.pairs():
        assert (k is None) != (j is None)


def test_downlink_only_network_matches_capped_rule():
    rng = np.random.default_rng(2)
    sc, ch = synthetic_drop(rng, 2, 8, fd=[False, False])
    sc = sc.replace(ul_weight=np.zeros(2))
    res = allocate(sc, ch)
    assert np.all(res.powers.p_ul == 0) and np.all(res.assignment.ul_user == UNASSIGNED)
    for step, n in enumerate(res.order):
        cap = sc.bs_power / (step + 1)
        rate = sc.dl_weight * np.log2(1 + ch.bs_gain[:, n] * cap / sc.user_noise)
        assert res.assignment.dl_user[n] == int(np.argmax(rate))


def scalar_greedy(sc, ch, exclusive=False):
    """The greedy loop re-run pair by pair through the scalar solver."""
    K, N = sc.num_users, sc.num_subchannels
    order = np.argsort(-ch.bs_gain.max(axis=0), kind="stable")
    d0, d = 1, np.ones(K, int)
    dl, ul = [UNASSIGNED] * N, [UNASSIGNED] * N
    for n in order:
        best = None
        for k in range(K):
            for j in range(K):
                self_pair = k == j
                excl = exclusive or (self_pair and not sc.full_duplex[k])
                inst = PairInstance(sc.dl_weight[k], sc.ul_weight[j], ch.bs_gain[k, n],
                                    ch.bs_gain[j, n],
                                    sc.beta if self_pair else ch.user_gain[k, j, n],
                                    sc.user_noise[k], sc.bs_noise, sc.bs_power / d0,
                                    sc.user_power[j] / d[j], sc.beta)
                s = solve_pair(inst, EXCLUSIVE if excl else CANDIDATES)
                if best is None or s.objective > best[0]:
                    best = (s.objective, k, j, s)
        _, k, j, s = best
        if s.p_dl > 0:
            dl[n] = k
            d0 += 1
        if s.p_ul > 0:
            ul[n] = j
            d[j] += 1
    return dl, ul


@pytest.mark.parametrize("exclusive", [False, True])
@given(seed=st.integers(0, 2**32 - 1))
def test_matches_pairwise_enumeration(exclusive, seed):
    rng = np.random.default_rng(seed)
    sc, ch = synthetic_drop(rng, int(rng.integers(2, 4)), int(rng.integers(2, 5)))
    res = allocate(sc, ch, exclusive=exclusive)
    dl, ul = scalar_greedy(sc, ch, exclusive)
    assert res.assignment.dl_user.tolist() == dl
    assert res.assignment.ul_user.tolist() == ul


@given(st.integers(0, 2**32 - 1))
def test_allocation_invariants(seed):
    rng = np.random.default_rng(seed)
    K, N = int(rng.integers(1, 8)), int(rng.integers(1, 20))
    sc, ch = synthetic_drop(rng, K, N)
    res = allocate(sc, ch)
    a, p = res.assignment, res.powers
    # caps in force at each visited step
    for step, n in enumerate(res.order):
        assert p.p_dl[n] <= sc.bs_power / res.bs_divisor[step] * (1 + 1e-12)
        if a.ul_user[n] != UNASSIGNED:
            j = a.ul_user[n]
            assert p.p_ul[n] <= sc.user_power[j] / res.user_divisor[step, j] * (1 + 1e-12)
    assert np.all(np.diff(res.bs_divisor) >= 0)
    assert np.all(np.diff(res.user_divisor, axis=0) >= 0)
    assert res.bs_divisor[0] == 1 and np.all(res.user_divisor[0] == 1)
    # assignment-level constraints hold; provisional powers may overrun budgets
    tags = {t for t, _ in check_feasible(sc, a, p).violations}
    assert tags <= {"bs_power_budget", "user_power_budget"}
    hd_both = (a.dl_user == a.ul_user) & (a.dl_user != UNASSIGNED)
    assert not np.any(hd_both & ~sc.full_duplex[np.maximum(a.dl_user, 0)])


def test_exclusive_never_shares_a_subchannel():
    rng = np.random.default_rng(12)
    sc, ch = synthetic_drop(rng, 6, 32, fd=np.ones(6, bool), beta=0.0)
    a = allocate(sc, ch, exclusive=True).assignment
    assert not np.any((a.dl_user != UNASSIGNED) & (a.ul_user != UNASSIGNED))


def test_dimension_mismatch_rejected():
    sc = NetworkScenario(1, [False], 10.0, 2.0, 1.0, 1.0, 0.0, 1e-3, 1e-3)
    with pytest.raises(ValueError):
        allocate(sc, ChannelRealization(np.ones((1, 3)), np.zeros((1, 1, 3))))
