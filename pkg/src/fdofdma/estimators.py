"""Estimator-style wrapper: ``fit`` allocates resources for one drop, ``score``
re-evaluates the fitted allocation on (possibly different) channels."""
from __future__ import annotations

from sklearn.base import BaseEstimator

from .core import check_feasible, weighted_sum_rate
from .dcpower import DcSettings
from .schemes import (exhaustive_oracle, scheme_fd, scheme_hd_downlink, scheme_hd_uplink,
                      scheme_hhd)
from .validation import check_channels, check_is_fitted, check_scenario

SCHEMES = ("FD", "HD-D", "HD-U", "HHD", "OPT")


class ResourceAllocator(BaseEstimator):
    """Sub-channel assignment plus power allocation for one network drop.

    ``scheme`` picks the method: "FD" is the greedy pairing followed by DC
    power allocation (duplex flags come from the scenario), "HHD" the hybrid
    half-duplex BS, "HD-D"/"HD-U" the one-direction baselines and "OPT" the
    exhaustive search for tiny networks.
    """

    def __init__(self, scheme="FD", max_iter=50, rel_tol=1e-6, kkt_tol=1e-8):
        self.scheme = scheme
        self.max_iter = max_iter
        self.rel_tol = rel_tol
        self.kkt_tol = kkt_tol

    def _settings(self):
        return DcSettings(max_iterations=self.max_iter, rel_tol=self.rel_tol, kkt_tol=self.kkt_tol)

    def fit(self, scenario, channels):
        scenario = check_scenario(scenario)
        channels = check_channels(scenario, channels)
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; choose from {SCHEMES}")
        if self.scheme == "FD":
            res = scheme_fd(scenario, channels, self._settings())
        elif self.scheme == "OPT":
            res = exhaustive_oracle(scenario, channels, self._settings())
        else:
            res = {"HD-D": scheme_hd_downlink, "HD-U": scheme_hd_uplink,
                   "HHD": scheme_hhd}[self.scheme](scenario, channels)
        self.assignment_ = res.assignment
        self.powers_ = res.powers
        self.report_ = res.report
        self.objective_trace_ = res.report.objective_trace
        self.n_iter_ = max(len(self.objective_trace_) - 1, 0)
        self.feasibility_ = check_feasible(scenario, res.assignment, res.powers)
        return self

    def score(self, scenario, channels):
        """Weighted sum-rate of the fitted allocation."""
        check_is_fitted(self)
        scenario = check_scenario(scenario)
        channels = check_channels(scenario, channels)
        return weighted_sum_rate(scenario, channels, self.assignment_, self.powers_).sum_rate
