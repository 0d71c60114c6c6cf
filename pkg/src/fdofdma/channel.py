"""Topologies, pathloss and Rayleigh block fading for indoor/outdoor cells."""
from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np

from .core import ChannelRealization, NetworkScenario


class Environment(enum.Enum):
    OUTDOOR = "outdoor"
    INDOOR = "indoor"


@dataclass(frozen=True)
class ScenarioTemplate:
    name: str
    environment: Environment
    cell_radius: float           # m
    bs_power_dbm: float
    ue_power_dbm: float = 23.0
    carrier_mhz: float = 2000.0
    num_subchannels: int = 64
    subchannel_bandwidth: float = 150e3  # Hz
    noise_density_dbm_hz: float = -170.0
    bs_height: float = 30.0
    ue_height: float = 1.5
    ue_ue_height: float = 1.5     # transmitter height used for UE-UE Hata links
    itu_distance_coeff: float = 22.0
    itu_floor_loss: float = 9.0
    min_distance: float = 10.0    # m, link distances are clamped to this

    def __post_init__(self):
        if self.cell_radius <= 0 or self.carrier_mhz <= 0:
            raise ValueError("cell_radius and carrier_mhz must be positive")

    @property
    def noise_power_dbm(self) -> float:
        return self.noise_density_dbm_hz + 10 * np.log10(self.subchannel_bandwidth)

    @property
    def noise_power(self) -> float:
        return dbm_to_watt(self.noise_power_dbm)

    def replace(self, **changes) -> "ScenarioTemplate":
        return replace(self, **changes)


OUTDOOR = ScenarioTemplate("outdoor", Environment.OUTDOOR, cell_radius=1000.0,
                           bs_power_dbm=43.0, min_distance=10.0)
INDOOR = ScenarioTemplate("indoor", Environment.INDOOR, cell_radius=20.0,
                          bs_power_dbm=24.0, min_distance=1.0)
TEMPLATES = {t.name: t for t in (OUTDOOR, INDOOR)}


def dbm_to_watt(dbm):
    return 10.0 ** ((np.asarray(dbm, float) - 30.0) / 10.0)


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, float) / 10.0)


def linear_to_db(x):
    return 10.0 * np.log10(x)


def pathloss_hata_urban(f_mhz, h_b, h_m, d_km):
    """COST-231 Hata loss in dB for a metropolitan (urban) area."""
    d_km = np.asarray(d_km, float)
    if np.any(d_km <= 0):
        raise ValueError("Hata distance must be positive")
    lf = np.log10(f_mhz)
    a_hm = (1.1 * lf - 0.7) * h_m - (1.56 * lf - 0.8)
    return (46.3 + 33.9 * lf - 13.82 * np.log10(h_b) - a_hm
            + (44.9 - 6.55 * np.log10(h_b)) * np.log10(d_km) + 3.0)


def pathloss_itu_indoor(f_mhz, d_m, n_itu=22.0, floor_loss=9.0):
    """ITU indoor attenuation in dB; distances below 1 m are treated as 1 m."""
    d_m = np.maximum(np.asarray(d_m, float), 1.0)
    return 20 * np.log10(f_mhz) + n_itu * np.log10(d_m) + floor_loss - 28.0


def _rng(seed, stream):
    return np.random.default_rng([int(seed) & 0xFFFFFFFFFFFFFFFF, stream])


def sample_topology(template: ScenarioTemplate, num_users: int, seed) -> np.ndarray:
    """Users i.i.d. uniform on the cell disk; the BS sits at the origin."""
    if num_users < 1:
        raise ValueError("need at least one user")
    rng = _rng(seed, 0)
    r = template.cell_radius * np.sqrt(rng.random(num_users))
    theta = 2 * np.pi * rng.random(num_users)
    return np.column_stack([r * np.cos(theta), r * np.sin(theta)])


def link_pathloss(template: ScenarioTemplate, positions):
    """Pathloss in dB for BS-UE links (K,) and UE-UE links (K, K)."""
    positions = np.asarray(positions, float)
    d_bs = np.maximum(np.hypot(positions[:, 0], positions[:, 1]), template.min_distance)
    diff = positions[:, None, :] - positions[None, :, :]
    d_uu = np.maximum(np.hypot(diff[..., 0], diff[..., 1]), template.min_distance)
    if template.environment is Environment.OUTDOOR:
        f = template.carrier_mhz
        pl_bs = pathloss_hata_urban(f, template.bs_height, template.ue_height, d_bs / 1e3)
        pl_uu = pathloss_hata_urban(f, template.ue_ue_height, template.ue_height, d_uu / 1e3)
    else:
        args = (template.itu_distance_coeff, template.itu_floor_loss)
        pl_bs = pathloss_itu_indoor(template.carrier_mhz, d_bs, *args)
        pl_uu = pathloss_itu_indoor(template.carrier_mhz, d_uu, *args)
    return pl_bs, pl_uu


def sample_channels(template: ScenarioTemplate, positions, seed, fading: bool = True) -> ChannelRealization:
    positions = np.asarray(positions, float)
    K, N = positions.shape[0], template.num_subchannels
    pl_bs, pl_uu = link_pathloss(template, positions)
    bs_gain = np.repeat(db_to_linear(-pl_bs)[:, None], N, axis=1)
    user_gain = np.repeat(db_to_linear(-pl_uu)[:, :, None], N, axis=2)
    if fading:
        rng = _rng(seed, 1)
        bs_gain = bs_gain * rng.exponential(1.0, size=(K, N))
        x = rng.exponential(1.0, size=(K, K, N))
        upper = np.triu(np.ones((K, K), bool), 1)[:, :, None]
        x = np.where(upper, x, np.transpose(x, (1, 0, 2)))
        user_gain = user_gain * x
    idx = np.arange(K)
    user_gain[idx, idx, :] = 0.0
    return ChannelRealization(bs_gain, user_gain)


def fd_mask(num_users: int, fd_fraction: float) -> np.ndarray:
    """The first ``round(fd_fraction * K)`` users are full-duplex."""
    if not 0.0 <= fd_fraction <= 1.0:
        raise ValueError("fd_fraction must lie in [0, 1]")
    n_fd = int(round(fd_fraction * num_users))
    return np.arange(num_users) < n_fd


def build_scenario(template: ScenarioTemplate, positions, full_duplex, beta: float,
                   dl_weights=1.0, ul_weights=1.0) -> NetworkScenario:
    positions = np.asarray(positions, float)
    noise = template.noise_power
    return NetworkScenario(
        num_subchannels=template.num_subchannels,
        full_duplex=np.asarray(full_duplex, bool),
        bs_power=float(dbm_to_watt(template.bs_power_dbm)),
        user_power=dbm_to_watt(template.ue_power_dbm),
        dl_weight=dl_weights,
        ul_weight=ul_weights,
        beta=beta,
        bs_noise=noise,
        user_noise=noise,
        positions=positions,
    )


def sample_drop(template: ScenarioTemplate, num_users: int, seed, *, fd_fraction: float = 1.0,
                beta: float = 0.0, dl_weights=1.0, ul_weights=1.0, fading: bool = True):
    """One Monte-Carlo drop: scenario plus channel realization."""
    positions = sample_topology(template, num_users, seed)
    scenario = build_scenario(template, positions, fd_mask(num_users, fd_fraction), beta,
                              dl_weights, ul_weights)
    return scenario, sample_channels(template, positions, seed, fading=fading)
