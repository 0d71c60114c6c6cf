"""Greedy sub-channel assignment of (downlink, uplink) user pairs.

Sub-channels are visited strongest first. On each one every legal pair is
solved in closed form under power caps that shrink with the number of
sub-channels the BS (downlink) and each user (uplink) have already won, and
the pair with the largest two-link rate takes the sub-channel.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import UNASSIGNED, Assignment, ChannelRealization, NetworkScenario, PowerAllocation
from .pairwise import solve_pairs
from .validation import check_channels


@dataclass(frozen=True)
class AllocationResult:
    assignment: Assignment
    powers: PowerAllocation      # provisional, per-iteration capped powers
    order: np.ndarray            # visiting order of the sub-channels
    bs_divisor: np.ndarray       # BS divisor in force at each visited step
    user_divisor: np.ndarray     # (steps, K) user divisors in force at each step


def rank_subchannels(channels: ChannelRealization) -> np.ndarray:
    """Sub-channel indices by decreasing best user gain, ties by index."""
    best = channels.bs_gain.max(axis=0)
    return np.argsort(-best, kind="stable")


def pair_grid(scenario: NetworkScenario):
    """Flattened (k, j) pairs in lexicographic order plus the exclusive-only mask.

    A half-duplex user paired with itself stands for "this user alone, in
    one direction", so only the one-sided candidates are kept for it.
    """
    K = scenario.num_users
    k, j = np.divmod(np.arange(K * K), K)
    self_hd = (k == j) & ~scenario.full_duplex[k]
    return k, j, self_hd


def allocate(scenario: NetworkScenario, channels: ChannelRealization,
             exclusive: bool = False) -> AllocationResult:
    """Assign each sub-channel to its best pair.

    With ``exclusive`` every sub-channel is used in one direction only
    (hybrid half-duplex BS).
    """
    check_channels(scenario, channels)
    K, N = scenario.num_users, scenario.num_subchannels
    gains, cross = channels.bs_gain, channels.user_gain
    k, j, self_hd = pair_grid(scenario)
    excl = self_hd | exclusive
    interf_self = np.where(k == j, scenario.beta, 0.0)
    is_self = k == j

    order = rank_subchannels(channels)
    dl_user = np.full(N, UNASSIGNED)
    ul_user = np.full(N, UNASSIGNED)
    p_dl = np.zeros(N)
    p_ul = np.zeros(N)
    d0 = 1
    d = np.ones(K, dtype=np.int64)
    bs_div = np.empty(N, dtype=np.int64)
    user_div = np.empty((N, K), dtype=np.int64)

    for step, n in enumerate(order):
        bs_div[step] = d0
        user_div[step] = d
        cap_dl = scenario.bs_power / d0
        cap_ul = scenario.user_power / d
        interf = np.where(is_self, interf_self, cross[k, j, n])
        pd, pu, L, _ = solve_pairs(scenario.dl_weight[k], scenario.ul_weight[j],
                                   gains[k, n], gains[j, n], interf,
                                   scenario.user_noise[k], scenario.bs_noise, scenario.beta,
                                   cap_dl, cap_ul[j], exclusive_only=excl)
        best = int(np.argmax(L))  # first maximum = lowest (k, j)
        if pd[best] > 0:
            dl_user[n] = k[best]
            p_dl[n] = pd[best]
            d0 += 1
        if pu[best] > 0:
            ul_user[n] = j[best]
            p_ul[n] = pu[best]
            d[j[best]] += 1

    return AllocationResult(Assignment(dl_user, ul_user), PowerAllocation(p_dl, p_ul),
                            order, bs_div, user_div)
