"""Power allocation over a fixed assignment by difference-of-concave iterations.

The weighted sum-rate is written as f(p) - h(p) with both f and h concave
(sums of weighted logs of received power and of noise-plus-interference).
Each outer iteration replaces h by its tangent plane at the current point
and maximizes the resulting concave surrogate under the power budgets, so
the true objective never decreases.

The concave subproblem is solved by exact block-coordinate ascent in
budget-normalized variables: the downlink powers form one block (the BS
budget) and each user's uplink powers form another. Every block update is
a weighted water-filling whose per-coordinate stationarity condition is a
quadratic with a closed-form positive root; the block multiplier is found
by bisection. Block ascent crawls along the ridge of a strongly coupled
pair (a full-duplex user served in both directions with weak
self-interference cancellation); when it stalls, a log-barrier Newton
method finishes the job.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .core import (UNASSIGNED, Assignment, ChannelRealization, NetworkScenario,
                   PowerAllocation, link_terms)

LN2 = math.log(2.0)


class InnerSolverError(RuntimeError):
    """The concave subproblem did not reach the KKT tolerance.

    ``best`` holds the best feasible iterate found (a power vector of length 2N).
    """

    def __init__(self, message, best, residual):
        super().__init__(message)
        self.best = best
        self.residual = residual


@dataclass(frozen=True)
class DcSettings:
    max_iterations: int = 50
    rel_tol: float = 1e-6          # stop when the gain drops below rel_tol * |initial objective|
    kkt_tol: float = 1e-8          # scaled projected-gradient residual of the subproblem
    max_sweeps: int = 200          # block-coordinate sweeps before switching to Newton
    max_newton: int = 500          # barrier Newton steps per subproblem
    initial: str = "uniform"       # start used when no initial powers are given: uniform | zero
    accelerate: bool = True        # linearize at an extrapolated point when it is no worse

    def __post_init__(self):
        if self.rel_tol <= 0 or self.kkt_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_iterations < 1 or self.max_sweeps < 1 or self.max_newton < 1:
            raise ValueError("iteration caps must be positive")
        if self.initial not in ("uniform", "zero"):
            raise ValueError(f"unknown initial point rule {self.initial!r}")


@dataclass(frozen=True)
class DcProblem:
    """Per sub-channel coefficients of the power allocation over a fixed assignment."""

    dl_user: np.ndarray
    ul_user: np.ndarray
    g_dl: np.ndarray
    g_ul: np.ndarray
    interf: np.ndarray   # uplink user into downlink user (beta for a self pair)
    si: np.ndarray       # BS self-interference, beta where both links are in use
    noise_dl: np.ndarray
    noise_ul: np.ndarray
    w: np.ndarray
    v: np.ndarray
    bs_power: float
    user_power: np.ndarray

    @classmethod
    def from_assignment(cls, scenario: NetworkScenario, channels: ChannelRealization,
                        assignment: Assignment) -> "DcProblem":
        t = link_terms(scenario, channels, assignment)
        return cls(assignment.dl_user, assignment.ul_user, t["g_dl"], t["g_ul"], t["interf"],
                   t["si"], t["noise_dl"], t["noise_ul"], t["w"], t["v"],
                   scenario.bs_power, scenario.user_power)

    @property
    def num_subchannels(self) -> int:
        return self.dl_user.size

    @property
    def has_dl(self) -> np.ndarray:
        return self.dl_user != UNASSIGNED

    @property
    def has_ul(self) -> np.ndarray:
        return self.ul_user != UNASSIGNED

    def ul_budget(self) -> np.ndarray:
        """Budget of the uplink user on each sub-channel (0 when idle)."""
        return np.where(self.has_ul, self.user_power[np.where(self.has_ul, self.ul_user, 0)], 0.0)

    @property
    def coupled(self) -> bool:
        return bool(np.any((self.interf > 0) & (self.w > 0)) or np.any((self.si > 0) & (self.v > 0)))


@dataclass(frozen=True)
class DcResult:
    powers: PowerAllocation
    objective_trace: tuple[float, ...]
    iterations: int
    converged: bool
    inner_sweeps: tuple[int, ...] = field(default=())


def _split(p, n):
    p = np.asarray(p, float)
    if p.shape != (2 * n,):
        raise ValueError(f"power vector must have length {2 * n}")
    return p[:n], p[n:]


def objective(problem: DcProblem, p) -> float:
    """Weighted sum-rate f(p) - h(p) evaluated in SINR form."""
    pd, pu = _split(p, problem.num_subchannels)
    r_dl = problem.w * np.log2(1.0 + problem.g_dl * pd / (problem.noise_dl + problem.interf * pu))
    r_ul = problem.v * np.log2(1.0 + problem.g_ul * pu / (problem.noise_ul + problem.si * pd))
    return float(np.sum(np.where(problem.has_dl, r_dl, 0.0)) + np.sum(np.where(problem.has_ul, r_ul, 0.0)))


def split_dc(problem: DcProblem, p) -> tuple[float, float]:
    """The concave pair (f, h) whose difference is the weighted sum-rate."""
    pd, pu = _split(p, problem.num_subchannels)
    dl, ul = problem.has_dl, problem.has_ul
    dl_floor = problem.noise_dl + problem.interf * pu
    ul_floor = problem.noise_ul + problem.si * pd
    f = (np.sum(np.where(dl, problem.w * np.log2(dl_floor + problem.g_dl * pd), 0.0))
         + np.sum(np.where(ul, problem.v * np.log2(ul_floor + problem.g_ul * pu), 0.0)))
    h = (np.sum(np.where(dl, problem.w * np.log2(dl_floor), 0.0))
         + np.sum(np.where(ul, problem.v * np.log2(ul_floor), 0.0)))
    return float(f), float(h)


def grad_h(problem: DcProblem, p) -> np.ndarray:
    pd, pu = _split(p, problem.num_subchannels)
    g_pd = np.where(problem.has_ul, problem.v * problem.si / (LN2 * (problem.noise_ul + problem.si * pd)), 0.0)
    g_pu = np.where(problem.has_dl, problem.w * problem.interf / (LN2 * (problem.noise_dl + problem.interf * pu)), 0.0)
    return np.concatenate([g_pd, g_pu])


def surrogate(problem: DcProblem, p, p_t) -> float:
    """f(p) minus the tangent of h at ``p_t``; a global lower bound of f - h."""
    f, _ = split_dc(problem, p)
    _, h_t = split_dc(problem, p_t)
    return f - h_t - float(grad_h(problem, p_t) @ (np.asarray(p, float) - np.asarray(p_t, float)))


def project_capped_simplex(z, budget: float = 1.0) -> np.ndarray:
    """Euclidean projection onto {x >= 0, sum(x) <= budget}."""
    return _project(np.asarray(z, float), float(budget))


@njit(cache=True)
def _project(z, budget):
    u = np.maximum(z, 0.0)
    if u.sum() <= budget:
        return u
    s = np.sort(z)[::-1]
    css = 0.0
    tau = 0.0
    for i in range(s.size):
        css += s[i]
        t = (css - budget) / (i + 1)
        if i + 1 == s.size or s[i + 1] <= t:
            tau = t
            break
    return np.maximum(z - tau, 0.0)


# ---------------------------------------------------------------- kernels

@njit(cache=True)
def _coord(w1, a1, d1, w2, a2, d2, mu):
    """argmax_{t >= 0} w1 log(d1 + a1 t) + w2 log(d2 + a2 t) - mu t."""
    s1 = w1 * a1
    s2 = w2 * a2
    if s1 <= 0.0 and s2 <= 0.0:
        return 0.0
    if mu <= 0.0:
        return np.inf
    if s1 / d1 + s2 / d2 <= mu:
        return 0.0
    q2 = mu * a1 * a2
    q1 = mu * (a1 * d2 + a2 * d1) - a1 * a2 * (w1 + w2)
    q0 = mu * d1 * d2 - s1 * d2 - s2 * d1
    if q2 == 0.0:
        return -q0 / q1
    sq = math.sqrt(q1 * q1 - 4.0 * q2 * q0)
    if q1 >= 0.0:
        return -2.0 * q0 / (q1 + sq)
    return (-q1 + sq) / (2.0 * q2)


@njit(cache=True)
def _block(idx, w1, a1, d1, w2, a2, d2, lin, out):
    """Exact maximization of one budget block (sum <= 1) in place."""
    total = 0.0
    hi = 0.0
    for i in idx:
        t = _coord(w1[i], a1[i], d1[i], w2[i], a2[i], d2[i], lin[i])
        out[i] = t
        total += t
        slope = w1[i] * a1[i] / d1[i] + w2[i] * a2[i] / d2[i] - lin[i]
        if slope > hi:
            hi = slope
    if total <= 1.0:
        return
    lo = 0.0
    for _ in range(2000):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        s = 0.0
        for i in idx:
            s += _coord(w1[i], a1[i], d1[i], w2[i], a2[i], d2[i], lin[i] + mid)
            if s > 1.0:
                break
        if s > 1.0:
            lo = mid
        else:
            hi = mid
    total = 0.0
    for i in idx:
        t = _coord(w1[i], a1[i], d1[i], w2[i], a2[i], d2[i], lin[i] + hi)
        out[i] = t
        total += t
    if total > 1.0:
        for i in idx:
            out[i] /= total


@njit(cache=True)
def _gradients(x, y, w, v, a, b, c, e, lx, ly):
    den_dl = 1.0 + a * x + c * y
    den_ul = 1.0 + b * x + e * y
    gx = w * a / den_dl + v * b / den_ul - lx
    gy = w * c / den_dl + v * e / den_ul - ly
    return gx, gy


@njit(cache=True)
def _residual(x, y, idx_x, idx_y, ptr_y, w, v, a, b, c, e, lx, ly):
    # Scaled by the size of the terms that cancel in each gradient entry, not
    # by the net gradient, which is pure round-off at an interior optimum.
    gx, gy = _gradients(x, y, w, v, a, b, c, e, lx, ly)
    scale = 0.0
    for i in idx_x:
        scale = max(scale, gx[i] + 2.0 * lx[i])
    for i in idx_y:
        scale = max(scale, gy[i] + 2.0 * ly[i])
    if scale == 0.0:
        return 0.0
    r = 0.0
    if idx_x.size:
        zx = x[idx_x]
        px = _project(zx + gx[idx_x] / scale, 1.0)
        r = max(r, np.max(np.abs(px - zx)))
    for u in range(ptr_y.size - 1):
        sel = idx_y[ptr_y[u]:ptr_y[u + 1]]
        if sel.size:
            zy = y[sel]
            py = _project(zy + gy[sel] / scale, 1.0)
            r = max(r, np.max(np.abs(py - zy)))
    return r


@njit(cache=True)
def _bca(x, y, idx_x, idx_y, ptr_y, w, v, a, b, c, e, lx, ly, tol, max_sweeps):
    one = np.ones_like(x)
    r = _residual(x, y, idx_x, idx_y, ptr_y, w, v, a, b, c, e, lx, ly)
    sweeps = 0
    while r > tol and sweeps < max_sweeps:
        sweeps += 1
        _block(idx_x, w, a, one + c * y, v, b, one + e * y, lx, x)
        d1 = one + b * x
        d2 = one + a * x
        for u in range(ptr_y.size - 1):
            _block(idx_y[ptr_y[u]:ptr_y[u + 1]], v, e, d1, w, c, d2, ly, y)
        r = _residual(x, y, idx_x, idx_y, ptr_y, w, v, a, b, c, e, lx, ly)
    return sweeps, r



@njit(cache=True)
def _cholesky_solve(H, rhs):
    """Solve H z = rhs for symmetric positive definite H."""
    m = rhs.size
    L = np.zeros((m, m))
    for i in range(m):
        for j in range(i + 1):
            acc = H[i, j]
            for t in range(j):
                acc -= L[i, t] * L[j, t]
            if i == j:
                L[i, i] = math.sqrt(max(acc, 1e-300))
            else:
                L[i, j] = acc / L[j, j]
    z = rhs.copy()
    for i in range(m):
        for t in range(i):
            z[i] -= L[i, t] * z[t]
        z[i] /= L[i, i]
    for i in range(m - 1, -1, -1):
        for t in range(i + 1, m):
            z[i] -= L[t, i] * z[t]
        z[i] /= L[i, i]
    return z


@njit(cache=True)
def _barrier_value(x, y, idx_x, idx_y, ptr_y, w, v, a, b, c, e, lx, ly, mu, nx):
    val = 0.0
    for n in range(x.size):
        val -= w[n] * math.log(1.0 + a[n] * x[n] + c[n] * y[n])
        val -= v[n] * math.log(1.0 + b[n] * x[n] + e[n] * y[n])
        val += lx[n] * x[n] + ly[n] * y[n]
    s = 1.0
    for i in idx_x:
        if x[i] <= 0.0:
            return np.inf
        val -= mu * math.log(x[i])
        s -= x[i]
    if nx > 0:
        if s <= 0.0:
            return np.inf
        val -= mu * math.log(s)
    for u in range(ptr_y.size - 1):
        s = 1.0
        for t in range(ptr_y[u], ptr_y[u + 1]):
            i = idx_y[t]
            if y[i] <= 0.0:
                return np.inf
            val -= mu * math.log(y[i])
            s -= y[i]
        if ptr_y[u + 1] > ptr_y[u]:
            if s <= 0.0:
                return np.inf
            val -= mu * math.log(s)
    return val


@njit(cache=True)
def _barrier_newton(x, y, idx_x, idx_y, ptr_y, w, v, a, b, c, e, lx, ly, tol, max_steps):
    """Log-barrier Newton maximization of the surrogate, in place; returns steps taken."""
    N = x.size
    nx = idx_x.size
    m = nx + idx_y.size
    if m == 0:
        return 0
    n_blocks = ptr_y.size
    sub = np.empty(m, np.int64)
    is_x = np.zeros(m, np.bool_)
    blk = np.empty(m, np.int64)
    pos_x = np.full(N, -1)
    pos_y = np.full(N, -1)
    for i in range(nx):
        sub[i] = idx_x[i]
        is_x[i] = True
        blk[i] = 0
        pos_x[idx_x[i]] = i
    for u in range(n_blocks - 1):
        for t in range(ptr_y[u], ptr_y[u + 1]):
            sub[nx + t] = idx_y[t]
            blk[nx + t] = 1 + u
            pos_y[idx_y[t]] = nx + t

    # strictly interior start near the given point
    floor = 1e-6 / m
    for i in range(m):
        n = sub[i]
        if is_x[i]:
            x[n] = max(x[n], floor)
        else:
            y[n] = max(y[n], floor)
    for bb in range(n_blocks):
        tot = 0.0
        for i in range(m):
            if blk[i] == bb:
                tot += x[sub[i]] if is_x[i] else y[sub[i]]
        if tot > 1.0 - 1e-4:
            f = (1.0 - 1e-4) / tot
            for i in range(m):
                if blk[i] == bb:
                    if is_x[i]:
                        x[sub[i]] *= f
                    else:
                        y[sub[i]] *= f

    gx, gy = _gradients(x, y, w, v, a, b, c, e, lx, ly)
    scale = 1e-300
    for i in range(m):
        scale = max(scale, abs(gx[sub[i]]) if is_x[i] else abs(gy[sub[i]]))
    mu = 1e-3 * scale
    mu_end = 1e-6 * tol * scale
    grad = np.empty(m)
    H = np.empty((m, m))
    slack = np.empty(n_blocks)
    steps = 0
    while steps < max_steps:
        for bb in range(n_blocks):
            slack[bb] = 1.0
        for i in range(m):
            slack[blk[i]] -= x[sub[i]] if is_x[i] else y[sub[i]]
        gx, gy = _gradients(x, y, w, v, a, b, c, e, lx, ly)
        H[:, :] = 0.0
        for i in range(m):
            n = sub[i]
            d1 = 1.0 + a[n] * x[n] + c[n] * y[n]
            d2 = 1.0 + b[n] * x[n] + e[n] * y[n]
            k1 = w[n] / (d1 * d1)
            k2 = v[n] / (d2 * d2)
            if is_x[i]:
                zi = x[n]
                grad[i] = -gx[n]
                H[i, i] = k1 * a[n] * a[n] + k2 * b[n] * b[n]
                j = pos_y[n]
                if j >= 0:
                    H[i, j] = k1 * a[n] * c[n] + k2 * b[n] * e[n]
            else:
                zi = y[n]
                grad[i] = -gy[n]
                H[i, i] = k1 * c[n] * c[n] + k2 * e[n] * e[n]
                j = pos_x[n]
                if j >= 0:
                    H[i, j] = k1 * a[n] * c[n] + k2 * b[n] * e[n]
            grad[i] += -mu / zi + mu / slack[blk[i]]
            H[i, i] += mu / (zi * zi)
        for i in range(m):
            for j in range(m):
                if blk[i] == blk[j]:
                    H[i, j] += mu / (slack[blk[i]] * slack[blk[i]])
        step = _cholesky_solve(H, -grad)
        dec = -np.dot(grad, step)
        if dec <= 1e-14 * max(1.0, mu):
            if mu <= mu_end:
                break
            mu *= 0.1
            continue
        # fraction to the boundary
        t = 1.0
        for i in range(m):
            zi = x[sub[i]] if is_x[i] else y[sub[i]]
            if step[i] < 0.0:
                t = min(t, -0.99 * zi / step[i])
        for bb in range(n_blocks):
            ds = 0.0
            for i in range(m):
                if blk[i] == bb:
                    ds += step[i]
            if ds > 0.0:
                t = min(t, 0.99 * slack[bb] / ds)
        f0 = _barrier_value(x, y, idx_x, idx_y, ptr_y, w, v, a, b, c, e, lx, ly, mu, nx)
        x0 = x.copy()
        y0 = y.copy()
        for _ in range(60):
            for i in range(m):
                if is_x[i]:
                    x[sub[i]] = x0[sub[i]] + t * step[i]
                else:
                    y[sub[i]] = y0[sub[i]] + t * step[i]
            f1 = _barrier_value(x, y, idx_x, idx_y, ptr_y, w, v, a, b, c, e, lx, ly, mu, nx)
            if f1 <= f0 - 0.25 * t * dec:
                break
            t *= 0.5
        else:
            x[:] = x0
            y[:] = y0
            if mu <= mu_end:
                break
            mu *= 0.1
        steps += 1
    return steps


# ---------------------------------------------------------------- solvers

class _Normalized:
    """Budget-normalized view of a problem: x = p_dl / P0, y = p_ul / P_j."""

    def __init__(self, problem: DcProblem):
        P0 = problem.bs_power
        Pj = problem.ul_budget()
        self.scale_x = np.full(problem.num_subchannels, P0)
        self.scale_y = Pj
        act_x = problem.has_dl & (P0 > 0)
        act_y = problem.has_ul & (Pj > 0)
        self.act_x, self.act_y = act_x, act_y
        self.w = np.where(act_x, problem.w, 0.0)
        self.v = np.where(act_y, problem.v, 0.0)
        self.a = np.where(act_x, problem.g_dl * P0 / problem.noise_dl, 0.0)
        self.c = np.where(act_x & act_y, problem.interf * Pj / problem.noise_dl, 0.0)
        self.e = np.where(act_y, problem.g_ul * Pj / problem.noise_ul, 0.0)
        self.b = np.where(act_x & act_y, problem.si * P0 / problem.noise_ul, 0.0)
        self.idx_x = np.flatnonzero(act_x)
        users = np.where(act_y, problem.ul_user, -1)
        order = np.argsort(users, kind="stable")
        order = order[users[order] >= 0]
        self.idx_y = order
        counts = np.bincount(users[order], minlength=problem.user_power.size)
        self.ptr_y = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)

    def to_unit(self, p, n):
        pd, pu = _split(p, n)
        x = np.where(self.act_x, pd / np.where(self.act_x, self.scale_x, 1.0), 0.0)
        y = np.where(self.act_y, pu / np.where(self.act_y, self.scale_y, 1.0), 0.0)
        return x, y

    def to_power(self, x, y):
        return np.concatenate([np.where(self.act_x, x * self.scale_x, 0.0),
                               np.where(self.act_y, y * self.scale_y, 0.0)])

    def tangent(self, x_t, y_t):
        lx = self.v * self.b / (1.0 + self.b * x_t)
        ly = self.w * self.c / (1.0 + self.c * y_t)
        return lx, ly


def kkt_residual(problem: DcProblem, p, p_t) -> float:
    """Scaled projected-gradient residual of the surrogate at ``p`` (0 at a KKT point)."""
    nz = _Normalized(problem)
    n = problem.num_subchannels
    x, y = nz.to_unit(p, n)
    lx, ly = nz.tangent(*nz.to_unit(p_t, n))
    return float(_residual(x, y, nz.idx_x, nz.idx_y, nz.ptr_y, nz.w, nz.v, nz.a, nz.b,
                           nz.c, nz.e, lx, ly))


def feasible_start(problem: DcProblem, p=None, rule: str = "uniform") -> np.ndarray:
    """A feasible power vector: ``p`` scaled down into the budgets, or a default."""
    n = problem.num_subchannels
    has_dl = problem.has_dl & (problem.bs_power > 0)
    Pj = problem.ul_budget()
    has_ul = problem.has_ul & (Pj > 0)
    if p is None:
        if rule == "zero":
            return np.zeros(2 * n)
        pd = np.where(has_dl, problem.bs_power / max(has_dl.sum(), 1), 0.0)
        counts = np.bincount(problem.ul_user[has_ul], minlength=problem.user_power.size)
        pu = np.where(has_ul, Pj / np.maximum(counts[np.where(has_ul, problem.ul_user, 0)], 1), 0.0)
        return np.concatenate([pd, pu])
    pd, pu = _split(p, n)
    pd = np.where(has_dl, np.maximum(pd, 0.0), 0.0)
    pu = np.where(has_ul, np.maximum(pu, 0.0), 0.0)
    if pd.sum() > problem.bs_power:
        pd = pd * (problem.bs_power / pd.sum())
    used = np.bincount(problem.ul_user[has_ul], weights=pu[has_ul], minlength=problem.user_power.size)
    factor = np.where(used > problem.user_power, problem.user_power / np.where(used > 0, used, 1.0), 1.0)
    pu = np.where(has_ul, pu * factor[np.where(has_ul, problem.ul_user, 0)], 0.0)
    return np.concatenate([pd, pu])


def _inner(problem, nz, p_t, settings):
    n = problem.num_subchannels
    x, y = nz.to_unit(p_t, n)
    x = np.minimum(x, 1.0)
    y = np.minimum(y, 1.0)
    lx, ly = nz.tangent(x, y)
    args = (nz.idx_x, nz.idx_y, nz.ptr_y, nz.w, nz.v, nz.a, nz.b, nz.c, nz.e, lx, ly,
            settings.kkt_tol)
    sweeps, r = _bca(x, y, *args, settings.max_sweeps)
    if r > settings.kkt_tol:
        xb, yb = x.copy(), y.copy()
        sweeps += _barrier_newton(x, y, *args, settings.max_newton)
        polish, r_newton = _bca(x, y, *args, settings.max_sweeps)
        sweeps += polish
        if r_newton > r:
            x, y = xb, yb
        else:
            r = r_newton
    p = feasible_start(problem, nz.to_power(x, y))
    # both solvers ascend from p_t; guard against last-ulp losses
    if surrogate(problem, p, p_t) < surrogate(problem, p_t, p_t):
        p = np.asarray(p_t, float)
    if r > settings.kkt_tol:
        raise InnerSolverError(f"subproblem residual {r:.3g} after {sweeps} steps", p, r)
    return p, sweeps


def inner_solve(problem: DcProblem, p_t, settings: DcSettings = DcSettings()) -> np.ndarray:
    """Maximizer of the tangent surrogate at ``p_t`` under the power budgets."""
    p, _ = _inner(problem, _Normalized(problem), np.asarray(p_t, float), settings)
    return p


def dc_iterate(problem: DcProblem, settings: DcSettings = DcSettings(), p0=None) -> DcResult:
    """Successive tangent-surrogate maximization from a feasible start.

    With ``settings.accelerate`` the tangent point is the momentum
    extrapolation of the last two iterates whenever its objective is at
    least the current one, which keeps every step an ascent step.
    """
    nz = _Normalized(problem)
    p = feasible_start(problem, p0, settings.initial)
    prev = p
    theta = 1.0
    trace = [objective(problem, p)]
    sweeps = []
    coupled = problem.coupled
    converged = False
    tol = settings.rel_tol * abs(trace[0])
    for _ in range(settings.max_iterations):
        anchor = p
        if settings.accelerate:
            theta_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * theta * theta))
            z = feasible_start(problem, p + ((theta - 1.0) / theta_next) * (p - prev))
            theta = theta_next
            if objective(problem, z) >= trace[-1]:
                anchor = z
        p_new, s = _inner(problem, nz, anchor, settings)
        sweeps.append(s)
        value = objective(problem, p_new)
        if value < trace[-1]:
            # surrogate ascent cannot lose; only rounding noise lands here
            value, p_new = trace[-1], p
        gain = value - trace[-1]
        prev, p = p, p_new
        trace.append(value)
        if tol == 0.0:
            tol = settings.rel_tol * abs(value)
        if not coupled or gain < tol:
            converged = True
            break
    return DcResult(PowerAllocation.from_vector(p), tuple(trace), len(trace) - 1, converged, tuple(sweeps))


def waterfill(weights, gains, noises, budget: float) -> np.ndarray:
    """Weighted water-filling: maximize sum w log2(1 + g p / N) with sum p <= budget.

    ``p_i = max(0, w_i / lam - N_i / g_i)``; the level is bracketed, bisected
    until the active set settles, and then solved exactly on that set.
    """
    w = np.asarray(weights, float)
    g = np.asarray(gains, float)
    N = np.asarray(noises, float)
    w, g, N = np.broadcast_arrays(w, g, N)
    p = np.zeros(w.shape)
    if w.size == 0 or budget <= 0:
        return p
    live = (w > 0) & (g > 0)
    if not live.any():
        return p
    wl, floor = w[live], N[live] / g[live]

    def alloc(lam):
        return np.maximum(wl / lam - floor, 0.0)

    lo = float(np.min(wl / (floor + budget)))
    hi = float(np.max(wl / floor))
    for _ in range(200):
        lam = math.sqrt(lo * hi)
        if alloc(lam).sum() > budget:
            lo = lam
        else:
            hi = lam
        if hi - lo <= 1e-15 * hi:
            break
    active = alloc(hi) > 0
    if not active.any():
        active = wl / floor >= hi * (1 - 1e-12)
    # exact level on the settled active set
    for _ in range(wl.size + 1):
        lam = wl[active].sum() / (budget + floor[active].sum())
        q = wl / lam - floor
        grow = (~active) & (q > 0)
        shrink = active & (q < 0)
        if not grow.any() and not shrink.any():
            break
        active = (active | grow) & ~shrink
    pl = np.where(active, np.maximum(wl / lam - floor, 0.0), 0.0)
    s = pl.sum()
    if s > budget:
        pl *= budget / s
    p[live] = pl
    return p
