"""Shared domain types and exact evaluation of the weighted sum-rate.

All quantities are linear scale: powers and noises in Watts, gains
dimensionless. Rates are in bits per channel use (log base 2).
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

UNASSIGNED = -1
POWER_ATOL = 1e-9


class ConstraintViolation(ValueError):
    """Raised when an operation is asked to do something the model forbids."""


class DuplexMode(enum.Enum):
    HALF = "HD"
    FULL = "FD"


def _frozen(a, dtype=float) -> np.ndarray:
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class NetworkScenario:
    """Static single-cell description.

    Per-user arrays have length ``num_users``. ``positions`` holds the user
    coordinates in meters with the BS at the origin.
    """

    num_subchannels: int
    full_duplex: np.ndarray
    bs_power: float
    user_power: np.ndarray
    dl_weight: np.ndarray
    ul_weight: np.ndarray
    beta: float
    bs_noise: float
    user_noise: np.ndarray
    positions: np.ndarray | None = None

    def __post_init__(self):
        K = len(np.atleast_1d(self.full_duplex))
        set_ = object.__setattr__
        set_(self, "full_duplex", _frozen(np.atleast_1d(self.full_duplex), bool))
        for name in ("user_power", "dl_weight", "ul_weight", "user_noise"):
            value = np.broadcast_to(np.asarray(getattr(self, name), float), (K,))
            set_(self, name, _frozen(value))
        if self.positions is not None:
            set_(self, "positions", _frozen(self.positions).reshape(K, 2))
        set_(self, "num_subchannels", int(self.num_subchannels))
        set_(self, "bs_power", float(self.bs_power))
        set_(self, "beta", float(self.beta))
        set_(self, "bs_noise", float(self.bs_noise))
        if K < 1 or self.num_subchannels < 1:
            raise ValueError("need at least one user and one sub-channel")
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError(f"beta must lie in [0, 1], got {self.beta}")
        for name in ("user_power", "dl_weight", "ul_weight", "user_noise"):
            if np.any(getattr(self, name) < 0) or not np.all(np.isfinite(getattr(self, name))):
                raise ValueError(f"{name} must be finite and nonnegative")
        if self.bs_power < 0 or self.bs_noise < 0:
            raise ValueError("bs_power and bs_noise must be nonnegative")

    @property
    def num_users(self) -> int:
        return self.full_duplex.size

    def duplex_mode(self, k: int) -> DuplexMode:
        return DuplexMode.FULL if self.full_duplex[k] else DuplexMode.HALF

    def replace(self, **changes) -> "NetworkScenario":
        values = {f: getattr(self, f) for f in self.__dataclass_fields__}
        values.update(changes)
        return NetworkScenario(**values)


@dataclass(frozen=True)
class ChannelRealization:
    """Power gains of one drop: ``bs_gain[k, n]`` and ``user_gain[k, j, n]``."""

    bs_gain: np.ndarray
    user_gain: np.ndarray

    def __post_init__(self):
        bs = _frozen(self.bs_gain)
        uu = _frozen(self.user_gain)
        if bs.ndim != 2:
            raise ValueError("bs_gain must be (num_users, num_subchannels)")
        K, N = bs.shape
        if uu.shape != (K, K, N):
            raise ValueError(f"user_gain must have shape {(K, K, N)}, got {uu.shape}")
        if np.any(bs < 0) or np.any(uu < 0):
            raise ValueError("channel gains must be nonnegative")
        object.__setattr__(self, "bs_gain", bs)
        object.__setattr__(self, "user_gain", uu)

    @property
    def num_users(self) -> int:
        return self.bs_gain.shape[0]

    @property
    def num_subchannels(self) -> int:
        return self.bs_gain.shape[1]


@dataclass(frozen=True)
class Assignment:
    """Per sub-channel downlink and uplink user, ``UNASSIGNED`` when idle."""

    dl_user: np.ndarray
    ul_user: np.ndarray

    def __post_init__(self):
        dl = _frozen(self.dl_user, np.int64)
        ul = _frozen(self.ul_user, np.int64)
        if dl.shape != ul.shape or dl.ndim != 1:
            raise ValueError("dl_user and ul_user must be 1-D of equal length")
        object.__setattr__(self, "dl_user", dl)
        object.__setattr__(self, "ul_user", ul)

    @classmethod
    def empty(cls, num_subchannels: int) -> "Assignment":
        idle = np.full(num_subchannels, UNASSIGNED)
        return cls(idle, idle)

    @classmethod
    def from_pairs(cls, pairs: Sequence[tuple[int | None, int | None]]) -> "Assignment":
        dl = [UNASSIGNED if k is None else k for k, _ in pairs]
        ul = [UNASSIGNED if j is None else j for _, j in pairs]
        return cls(dl, ul)

    @property
    def num_subchannels(self) -> int:
        return self.dl_user.size

    def dl_set(self, k: int) -> np.ndarray:
        return np.flatnonzero(self.dl_user == k)

    def ul_set(self, j: int) -> np.ndarray:
        return np.flatnonzero(self.ul_user == j)

    def pairs(self) -> list[tuple[int | None, int | None]]:
        def opt(i):
            return None if i == UNASSIGNED else int(i)

        return [(opt(k), opt(j)) for k, j in zip(self.dl_user, self.ul_user)]


@dataclass(frozen=True)
class PowerAllocation:
    """Downlink (BS) and uplink (user) transmit power per sub-channel."""

    p_dl: np.ndarray
    p_ul: np.ndarray

    def __post_init__(self):
        dl = _frozen(self.p_dl)
        ul = _frozen(self.p_ul)
        if dl.shape != ul.shape or dl.ndim != 1:
            raise ValueError("p_dl and p_ul must be 1-D of equal length")
        object.__setattr__(self, "p_dl", dl)
        object.__setattr__(self, "p_ul", ul)

    @classmethod
    def zeros(cls, num_subchannels: int) -> "PowerAllocation":
        return cls(np.zeros(num_subchannels), np.zeros(num_subchannels))

    @classmethod
    def from_vector(cls, p) -> "PowerAllocation":
        p = np.asarray(p, float)
        n = p.size // 2
        return cls(p[:n], p[n:])

    @property
    def vector(self) -> np.ndarray:
        return np.concatenate([self.p_dl, self.p_ul])


@dataclass(frozen=True)
class RateReport:
    downlink: float
    uplink: float
    objective_trace: tuple[float, ...] = field(default=())

    @property
    def sum_rate(self) -> float:
        return self.downlink + self.uplink


class Feasibility(NamedTuple):
    ok: bool
    violations: list[tuple[str, str]]

    def __bool__(self):
        return self.ok


def effective_interference_gain(scenario: NetworkScenario, channels: ChannelRealization,
                                k: int, j: int, n: int) -> float:
    """Gain from uplink user ``j`` into downlink user ``k`` on sub-channel ``n``.

    For a full-duplex user paired with itself this is the residual
    self-interference coefficient.
    """
    if k == j:
        if not scenario.full_duplex[k]:
            raise ConstraintViolation(f"half-duplex user {k} cannot transmit and receive on one sub-channel")
        return scenario.beta
    return float(channels.user_gain[k, j, n])


def _check_dims(scenario, channels, assignment, powers):
    K, N = scenario.num_users, scenario.num_subchannels
    if channels.bs_gain.shape != (K, N):
        raise ValueError(f"channel shape {channels.bs_gain.shape} does not match scenario {(K, N)}")
    if assignment.num_subchannels != N:
        raise ValueError("assignment length does not match num_subchannels")
    if powers is not None and powers.p_dl.size != N:
        raise ValueError("power vector length does not match num_subchannels")


def link_terms(scenario: NetworkScenario, channels: ChannelRealization, assignment: Assignment):
    """Per sub-channel link coefficients of a fixed assignment.

    Returns a dict of length-N arrays: signal gains ``g_dl``/``g_ul``,
    cross gains ``interf`` (uplink into downlink receiver) and ``si``
    (BS transmitter into BS receiver), noises and weights. Slots without a
    user carry zero gain and weight; coupling terms are zero unless both
    directions of the sub-channel are in use.
    """
    _check_dims(scenario, channels, assignment, None)
    N = scenario.num_subchannels
    n = np.arange(N)
    k = assignment.dl_user
    j = assignment.ul_user
    has_dl = k != UNASSIGNED
    has_ul = j != UNASSIGNED
    kk = np.where(has_dl, k, 0)
    jj = np.where(has_ul, j, 0)
    both = has_dl & has_ul
    self_pair = both & (kk == jj)
    if np.any(self_pair & ~scenario.full_duplex[kk]):
        raise ConstraintViolation("a half-duplex user is paired with itself")
    interf = np.where(self_pair, scenario.beta, channels.user_gain[kk, jj, n])
    return {
        "has_dl": has_dl,
        "has_ul": has_ul,
        "g_dl": np.where(has_dl, channels.bs_gain[kk, n], 0.0),
        "g_ul": np.where(has_ul, channels.bs_gain[jj, n], 0.0),
        "interf": np.where(both, interf, 0.0),
        "si": np.where(both, scenario.beta, 0.0),
        "noise_dl": scenario.user_noise[kk],
        "noise_ul": np.full(N, scenario.bs_noise),
        "w": np.where(has_dl, scenario.dl_weight[kk], 0.0),
        "v": np.where(has_ul, scenario.ul_weight[jj], 0.0),
    }


def weighted_sum_rate(scenario: NetworkScenario, channels: ChannelRealization,
                      assignment: Assignment, powers: PowerAllocation,
                      objective_trace=()) -> RateReport:
    _check_dims(scenario, channels, assignment, powers)
    t = link_terms(scenario, channels, assignment)
    pd, pu = powers.p_dl, powers.p_ul
    sinr_dl = t["g_dl"] * pd / (t["noise_dl"] + t["interf"] * pu)
    sinr_ul = t["g_ul"] * pu / (t["noise_ul"] + t["si"] * pd)
    r_dl = np.where(t["has_dl"], t["w"] * np.log2(1.0 + sinr_dl), 0.0)
    r_ul = np.where(t["has_ul"], t["v"] * np.log2(1.0 + sinr_ul), 0.0)
    return RateReport(float(r_dl.sum()), float(r_ul.sum()), tuple(objective_trace))


def check_feasible(scenario: NetworkScenario, assignment: Assignment,
                   powers: PowerAllocation) -> Feasibility:
    """Check every constraint of the joint problem; never raises."""
    out: list[tuple[str, str]] = []
    K, N = scenario.num_users, scenario.num_subchannels
    dl, ul = assignment.dl_user, assignment.ul_user
    if dl.size != N or powers.p_dl.size != N:
        out.append(("subchannel_range", f"expected {N} sub-channels"))
        return Feasibility(False, out)
    for name, users in (("dl", dl), ("ul", ul)):
        bad = (users != UNASSIGNED) & ((users < 0) | (users >= K))
        if bad.any():
            out.append(("subchannel_range", f"{name} user index out of range on {np.flatnonzero(bad).tolist()}"))
    if out:
        return Feasibility(False, out)
    pd, pu = powers.p_dl, powers.p_ul
    if np.any(pd < 0) or np.any(pu < 0) or not np.all(np.isfinite(powers.vector)):
        out.append(("nonnegative_power", "negative or non-finite power"))
    if np.any(pd[dl == UNASSIGNED] != 0) or np.any(pu[ul == UNASSIGNED] != 0):
        out.append(("idle_power", "power on a sub-channel with no assigned user"))
    total = float(pd.sum())
    if total > scenario.bs_power + POWER_ATOL:
        out.append(("bs_power_budget", f"BS power {total:.6g} W exceeds {scenario.bs_power:.6g} W"))
    for j in range(K):
        used = float(pu[ul == j].sum())
        if used > scenario.user_power[j] + POWER_ATOL:
            out.append(("user_power_budget",
                        f"user {j} power {used:.6g} W exceeds {scenario.user_power[j]:.6g} W"))
    clash = (dl == ul) & (dl != UNASSIGNED)
    hd_clash = clash & ~scenario.full_duplex[np.where(clash, dl, 0)]
    if hd_clash.any():
        out.append(("half_duplex", f"HD user on both links of {np.flatnonzero(hd_clash).tolist()}"))
    return Feasibility(not out, out)
