"""Closed-form power pair for one sub-channel shared by a downlink and an uplink user.

For a fixed (downlink k, uplink j) pair the two-link weighted rate

    L = w log2(1 + g_k p_dl / (N_k + I p_ul)) + v log2(1 + g_j p_ul / (N0 + beta p_dl))

over the box [0, P1] x [0, P2] is maximized at one of five candidates: the
three corners with at least one full-power side, and the two points where
one power is at its cap and the other sits at the stationary point given by
the smaller root of a quadratic.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

CANDIDATES = ("ul_only", "dl_only", "both_full", "dl_interior", "ul_interior")
EXCLUSIVE = ("ul_only", "dl_only")
IDLE = "idle"
_TIE_RTOL = 1e-12


@dataclass(frozen=True)
class PairInstance:
    w: float        # downlink weight of user k
    v: float        # uplink weight of user j
    g_dl: float     # BS-k gain
    g_ul: float     # BS-j gain
    interf: float   # j -> k gain (beta when j == k)
    noise_dl: float
    noise_ul: float
    p_max_dl: float
    p_max_ul: float
    beta: float

    def __post_init__(self):
        vals = [getattr(self, f) for f in self.__dataclass_fields__]
        if any(x < 0 for x in vals):
            raise ValueError("pair instance fields must be nonnegative")
        if self.p_max_dl <= 0 or self.p_max_ul <= 0:
            raise ValueError("power caps must be positive")


@dataclass(frozen=True)
class PairSolution:
    p_dl: float
    p_ul: float
    objective: float
    candidate: str


def pair_objective(inst: PairInstance, p_dl, p_ul):
    return _objective(inst.w, inst.v, inst.g_dl, inst.g_ul, inst.interf, inst.noise_dl,
                      inst.noise_ul, inst.beta, np.asarray(p_dl, float), np.asarray(p_ul, float))


def _objective(w, v, gk, gj, I, Nk, N0, beta, pd, pu):
    with np.errstate(divide="ignore", invalid="ignore"):
        r_dl = w * np.log2(1.0 + gk * pd / (Nk + I * pu))
        r_ul = v * np.log2(1.0 + gj * pu / (N0 + beta * pd))
    return np.nan_to_num(r_dl) + np.nan_to_num(r_ul)


def _dl_coefficients(w, v, gk, gj, I, Nk, N0, beta, pu):
    A = w * gk * beta**2
    B = 2 * w * N0 * gk * beta + (w - v) * beta * gk * gj * pu
    C = w * gk * N0**2 + w * gk * gj * N0 * pu - v * Nk * gj * pu * beta - v * gj * beta * I * pu**2
    return A, B, C


def _ul_coefficients(w, v, gk, gj, I, Nk, N0, beta, pd):
    D = v * gj * I**2
    E = 2 * v * Nk * gj * I + (v - w) * I * gk * gj * pd
    F = v * gj * Nk**2 + v * gk * gj * Nk * pd - w * N0 * gk * pd * I - w * gk * beta * I * pd**2
    return D, E, F


def quadratic_coefficients_dl(inst: PairInstance, p_ul: float):
    """(A, B, C) with dL/dp_dl = 0  <=>  A p^2 + B p + C = 0 at fixed ``p_ul``."""
    return _dl_coefficients(inst.w, inst.v, inst.g_dl, inst.g_ul, inst.interf,
                            inst.noise_dl, inst.noise_ul, inst.beta, p_ul)


def quadratic_coefficients_ul(inst: PairInstance, p_dl: float):
    """(D, E, F) with dL/dp_ul = 0  <=>  D p^2 + E p + F = 0 at fixed ``p_dl``."""
    return _ul_coefficients(inst.w, inst.v, inst.g_dl, inst.g_ul, inst.interf,
                            inst.noise_dl, inst.noise_ul, inst.beta, p_dl)


def _smaller_root(A, B, C, upper):
    """Vectorized interior root; NaN where there is none in (0, upper)."""
    A, B, C, upper = np.broadcast_arrays(*(np.asarray(x, float) for x in (A, B, C, upper)))
    disc = B * B - 4 * A * C
    with np.errstate(divide="ignore", invalid="ignore"):
        # cancellation-free roots: q/A and C/q
        q = -0.5 * (B + np.where(B >= 0, 1.0, -1.0) * np.sqrt(np.maximum(disc, 0.0)))
        r1 = q / A
        r2 = C / q
        quad = np.fmin(r1, r2)
        lin = -C / B
    root = np.where(A > 0, np.where(disc >= 0, quad, np.nan), np.where(B != 0, lin, np.nan))
    ok = (root > 0) & (root < upper)
    return np.where(ok, root, np.nan)


def interior_root(A: float, B: float, C: float, upper_bound: float):
    """Smaller root of ``A p^2 + B p + C`` inside (0, upper_bound), else None."""
    r = float(_smaller_root(A, B, C, upper_bound))
    return None if np.isnan(r) else r


def solve_pairs(w, v, g_dl, g_ul, interf, noise_dl, noise_ul, beta, p_max_dl, p_max_ul,
                exclusive_only=False):
    """Vectorized pair solver.

    All arguments broadcast together. ``exclusive_only`` (bool or boolean
    array) restricts the candidates to one-direction use of the sub-channel.
    Returns ``(p_dl, p_ul, L, tag_index)``; ``tag_index`` indexes
    ``CANDIDATES`` and equals -1 for an idle sub-channel (both gains zero).
    """
    arrays = np.broadcast_arrays(*(np.asarray(x, float) for x in
                                   (w, v, g_dl, g_ul, interf, noise_dl, noise_ul, beta,
                                    p_max_dl, p_max_ul)))
    w, v, gk, gj, I, Nk, N0, beta, P1, P2 = arrays
    excl = np.broadcast_to(np.asarray(exclusive_only, bool), w.shape)
    args = (w, v, gk, gj, I, Nk, N0, beta)

    pa_dl = _smaller_root(*_dl_coefficients(*args, P2), P1)
    pa_ul = _smaller_root(*_ul_coefficients(*args, P1), P2)
    zero = np.zeros_like(w)
    cand_dl = np.stack([zero, P1, P1, pa_dl, P1])
    cand_ul = np.stack([P2, zero, P2, P2, pa_ul])
    L = _objective(*args, cand_dl, cand_ul)
    valid = ~(np.isnan(cand_dl) | np.isnan(cand_ul))
    valid[2:] &= ~excl
    L = np.where(valid, L, -np.inf)

    best = L.max(axis=0)
    tied = L >= best - _TIE_RTOL * np.maximum(1.0, np.abs(best))
    total = np.where(tied, np.nan_to_num(cand_dl) + np.nan_to_num(cand_ul), np.inf)
    # candidates are already in tag order, so argmin of total power keeps the first tag
    tag = np.argmin(total, axis=0)
    pick = np.take_along_axis
    p_dl = pick(np.nan_to_num(cand_dl), tag[None], 0)[0]
    p_ul = pick(np.nan_to_num(cand_ul), tag[None], 0)[0]
    L_best = pick(L, tag[None], 0)[0]

    # dominance shortcuts: a side with no channel never transmits
    dead_dl = (gk == 0)
    dead_ul = (gj == 0)
    only_ul = dead_dl & ~dead_ul
    only_dl = dead_ul & ~dead_dl
    idle = dead_dl & dead_ul
    p_dl = np.where(only_ul | idle, 0.0, np.where(only_dl, P1, p_dl))
    p_ul = np.where(only_dl | idle, 0.0, np.where(only_ul, P2, p_ul))
    tag = np.where(only_ul, 0, np.where(only_dl, 1, np.where(idle, -1, tag)))
    L_best = np.where(only_ul | only_dl | idle, _objective(*args, p_dl, p_ul), L_best)
    return p_dl, p_ul, L_best, tag


def solve_pair(inst: PairInstance, candidates=CANDIDATES) -> PairSolution:
    exclusive = tuple(candidates) == EXCLUSIVE
    if not exclusive and tuple(candidates) != CANDIDATES:
        raise ValueError(f"unsupported candidate set {candidates!r}")
    p_dl, p_ul, L, tag = solve_pairs(inst.w, inst.v, inst.g_dl, inst.g_ul, inst.interf,
                                     inst.noise_dl, inst.noise_ul, inst.beta,
                                     inst.p_max_dl, inst.p_max_ul, exclusive_only=exclusive)
    tag = int(tag)
    return PairSolution(float(p_dl), float(p_ul), float(L), IDLE if tag < 0 else CANDIDATES[tag])
