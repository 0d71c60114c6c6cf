"""Comparison schemes: the proposed two-step method, half-duplex baselines,
the hybrid half-duplex BS, the overlay upper bound and a brute-force oracle.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .allocator import allocate, rank_subchannels
from .core import (UNASSIGNED, Assignment, ChannelRealization, NetworkScenario,
                   PowerAllocation, RateReport, weighted_sum_rate)
from .dcpower import DcProblem, DcSettings, dc_iterate, feasible_start, objective, waterfill

ORACLE_MAX_USERS = 3
ORACLE_MAX_SUBCHANNELS = 4


@dataclass(frozen=True)
class SchemeResult:
    assignment: Assignment
    powers: PowerAllocation
    report: RateReport

    @property
    def sum_rate(self) -> float:
        return self.report.sum_rate


def _finish(scenario, channels, assignment, powers, trace=()):
    report = weighted_sum_rate(scenario, channels, assignment, powers, trace)
    return SchemeResult(assignment, powers, report)


def scheme_fd(scenario: NetworkScenario, channels: ChannelRealization,
              settings: DcSettings = DcSettings()) -> SchemeResult:
    """Greedy pair assignment followed by DC power allocation.

    Which users may self-pair follows ``scenario.full_duplex``, so the same
    call covers a full-duplex BS with half-duplex or full-duplex users.
    """
    alloc = allocate(scenario, channels)
    problem = DcProblem.from_assignment(scenario, channels, alloc.assignment)
    res = dc_iterate(problem, settings, alloc.powers.vector)
    return _finish(scenario, channels, alloc.assignment, res.powers, res.objective_trace)


def hd_downlink_rule(scenario: NetworkScenario, channels: ChannelRealization) -> np.ndarray:
    """Best weighted channel SNR per sub-channel, read as the weighted rate at
    an equal power split of the BS budget."""
    p_eq = scenario.bs_power / scenario.num_subchannels
    score = scenario.dl_weight[:, None] * np.log2(
        1.0 + channels.bs_gain * p_eq / scenario.user_noise[:, None])
    return np.argmax(score, axis=0)


def _downlink_waterfill(scenario, channels, dl_user):
    n = np.flatnonzero(dl_user != UNASSIGNED)
    k = dl_user[n]
    p = np.zeros(scenario.num_subchannels)
    p[n] = waterfill(scenario.dl_weight[k], channels.bs_gain[k, n], scenario.user_noise[k],
                     scenario.bs_power)
    return p


def _uplink_waterfill(scenario, channels, ul_user):
    p = np.zeros(scenario.num_subchannels)
    for j in np.unique(ul_user[ul_user != UNASSIGNED]):
        n = np.flatnonzero(ul_user == j)
        p[n] = waterfill(np.full(n.size, scenario.ul_weight[j]), channels.bs_gain[j, n],
                         np.full(n.size, scenario.bs_noise), scenario.user_power[j])
    return p


def scheme_hd_downlink(scenario: NetworkScenario, channels: ChannelRealization) -> SchemeResult:
    N = scenario.num_subchannels
    dl_user = hd_downlink_rule(scenario, channels)
    assignment = Assignment(dl_user, np.full(N, UNASSIGNED))
    powers = PowerAllocation(_downlink_waterfill(scenario, channels, dl_user), np.zeros(N))
    return _finish(scenario, channels, assignment, powers)


def hd_uplink_rule(scenario: NetworkScenario, channels: ChannelRealization) -> np.ndarray:
    """Greedy uplink assignment.

    Sub-channels are visited strongest first; each goes to the user whose
    weighted rate on it is largest when that user's budget is split equally
    over the sub-channels it would then hold.
    """
    K = scenario.num_users
    held = np.zeros(K)
    ul_user = np.full(scenario.num_subchannels, UNASSIGNED)
    for n in rank_subchannels(channels):
        p = scenario.user_power / (held + 1.0)
        gain = scenario.ul_weight * np.log2(1.0 + channels.bs_gain[:, n] * p / scenario.bs_noise)
        j = int(np.argmax(gain))
        ul_user[n] = j
        held[j] += 1
    return ul_user


def scheme_hd_uplink(scenario: NetworkScenario, channels: ChannelRealization) -> SchemeResult:
    N = scenario.num_subchannels
    ul_user = hd_uplink_rule(scenario, channels)
    assignment = Assignment(np.full(N, UNASSIGNED), ul_user)
    powers = PowerAllocation(np.zeros(N), _uplink_waterfill(scenario, channels, ul_user))
    return _finish(scenario, channels, assignment, powers)


def scheme_hhd(scenario: NetworkScenario, channels: ChannelRealization) -> SchemeResult:
    """Hybrid half-duplex BS: each sub-channel carries downlink or uplink, never both."""
    alloc = allocate(scenario, channels, exclusive=True)
    a = alloc.assignment
    powers = PowerAllocation(_downlink_waterfill(scenario, channels, a.dl_user),
                             _uplink_waterfill(scenario, channels, a.ul_user))
    return _finish(scenario, channels, a, powers)


def scheme_upper_bound(scenario: NetworkScenario, channels: ChannelRealization) -> RateReport:
    """HD downlink rate plus HD uplink rate, as if two networks shared the band freely."""
    dl = scheme_hd_downlink(scenario, channels).report
    ul = scheme_hd_uplink(scenario, channels).report
    return RateReport(dl.downlink, ul.uplink)


def legal_slot_options(scenario: NetworkScenario):
    """Every (dl, ul) choice for one sub-channel, ``UNASSIGNED`` meaning idle."""
    users = [UNASSIGNED, *range(scenario.num_users)]
    return [(k, j) for k in users for j in users
            if not (k == j and k != UNASSIGNED and not scenario.full_duplex[k])]


def interference_free_bound(scenario: NetworkScenario, channels: ChannelRealization,
                            assignment: Assignment) -> float:
    """Weighted sum-rate of an assignment with all interference removed.

    Interference only lowers rates, so this caps every power allocation on
    the assignment; the cap itself is two water-fillings.
    """
    dl, ul = assignment.dl_user, assignment.ul_user
    p_dl = _downlink_waterfill(scenario, channels, dl)
    p_ul = _uplink_waterfill(scenario, channels, ul)
    n = np.arange(scenario.num_subchannels)
    total = 0.0
    on = dl != UNASSIGNED
    k = dl[on]
    total += np.sum(scenario.dl_weight[k] * np.log2(
        1.0 + channels.bs_gain[k, n[on]] * p_dl[on] / scenario.user_noise[k]))
    on = ul != UNASSIGNED
    j = ul[on]
    total += np.sum(scenario.ul_weight[j] * np.log2(
        1.0 + channels.bs_gain[j, n[on]] * p_ul[on] / scenario.bs_noise))
    return float(total)


def exhaustive_oracle(scenario: NetworkScenario, channels: ChannelRealization,
                      settings: DcSettings = DcSettings()) -> SchemeResult:
    """Best allocation over every legal assignment of a tiny network.

    Each assignment gets DC power allocation from three starts (zero power,
    equal split of every budget, the greedy allocator's provisional powers)
    and the best objective found overall is returned. Assignments are
    visited by decreasing interference-free bound; once that bound cannot
    beat the best value found, the rest are skipped.
    """
    K, N = scenario.num_users, scenario.num_subchannels
    if K > ORACLE_MAX_USERS or N > ORACLE_MAX_SUBCHANNELS:
        raise ValueError(f"exhaustive search is limited to K <= {ORACLE_MAX_USERS} "
                         f"and N <= {ORACLE_MAX_SUBCHANNELS}, got K={K}, N={N}")
    warm = allocate(scenario, channels).powers.vector
    options = legal_slot_options(scenario)
    assignments = [Assignment([k for k, _ in combo], [j for _, j in combo])
                   for combo in itertools.product(options, repeat=N)]
    bounds = np.array([interference_free_bound(scenario, channels, a) for a in assignments])
    best_value, best = -np.inf, None
    for i in np.argsort(-bounds, kind="stable"):
        if bounds[i] <= best_value:
            break
        assignment = assignments[i]
        problem = DcProblem.from_assignment(scenario, channels, assignment)
        for start in (feasible_start(problem, rule="zero"), feasible_start(problem),
                      feasible_start(problem, warm)):
            res = dc_iterate(problem, settings, start)
            value = objective(problem, res.powers.vector)
            if value > best_value:
                best_value, best = value, (assignment, res)
    assignment, res = best
    return _finish(scenario, channels, assignment, res.powers, res.objective_trace)
