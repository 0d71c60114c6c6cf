"""Input checks shared by the estimator and the CLI."""
from __future__ import annotations

from .core import ChannelRealization, NetworkScenario


def check_scenario(scenario) -> NetworkScenario:
    if not isinstance(scenario, NetworkScenario):
        raise TypeError(f"expected a NetworkScenario, got {type(scenario).__name__}")
    return scenario


def check_channels(scenario: NetworkScenario, channels) -> ChannelRealization:
    if not isinstance(channels, ChannelRealization):
        raise TypeError(f"expected a ChannelRealization, got {type(channels).__name__}")
    if channels.num_users != scenario.num_users:
        raise ValueError(f"channels describe {channels.num_users} users, "
                         f"scenario has {scenario.num_users}")
    if channels.num_subchannels != scenario.num_subchannels:
        raise ValueError(f"channels describe {channels.num_subchannels} sub-channels, "
                         f"scenario has {scenario.num_subchannels}")
    return channels


def check_is_fitted(estimator, attribute: str = "assignment_") -> None:
    if not hasattr(estimator, attribute):
        raise RuntimeError(f"{type(estimator).__name__} is not fitted; call fit first")
