"""Independent oracles and instance generators for the test suite.

Nothing here calls into the solver code paths it is used to check.
"""
import math

import numpy as np

from fdofdma.core import NetworkScenario, ChannelRealization, UNASSIGNED

ACCEPTANCE_LINES = {}


def record_acceptance(number, ok, detail):
    """Keep one PASS/FAIL line per acceptance criterion for the run summary."""
    ACCEPTANCE_LINES[number] = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(ACCEPTANCE_LINES[number])


BETAS = (0.0, 1e-9, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0)


def random_pair_arrays(rng, n):
    """Random pair instances as arrays: log-uniform gains and noises, U[0,1] weights."""
    lg = lambda lo, hi: 10.0 ** rng.uniform(lo, hi, n)
    return dict(
        w=rng.random(n), v=rng.random(n),
        g_dl=lg(-6, 0), g_ul=lg(-6, 0), interf=lg(-6, 0),
        noise_dl=lg(-4, 0), noise_ul=lg(-4, 0),
        beta=rng.choice(BETAS, n),
        p_max_dl=rng.uniform(0.1, 10.0, n), p_max_ul=rng.uniform(0.1, 10.0, n),
    )


def pair_L(inst, pd, pu):
    """Two-link weighted rate, written out directly."""
    dl = inst["w"] * np.log2(1.0 + inst["g_dl"] * pd / (inst["noise_dl"] + inst["interf"] * pu))
    ul = inst["v"] * np.log2(1.0 + inst["g_ul"] * pu / (inst["noise_ul"] + inst["beta"] * pd))
    return dl + ul


def grid_best(inst, points=2001, chunk=64):
    """Largest pair objective over a uniform ``points x points`` grid of the power box.

    Evaluated in float32, rows in chunks. A row (fixed p_dl) can score at
    most its interference-free downlink term plus its uplink term at full
    uplink power, so rows are visited by decreasing bound and the scan
    stops once no remaining row can beat the best value seen.
    """
    f = np.float32
    pd = np.linspace(0.0, inst["p_max_dl"], points)
    pu = np.linspace(0.0, inst["p_max_ul"], points).astype(f)
    w, v = inst["w"], inst["v"]
    Nk, N0 = inst["noise_dl"], inst["noise_ul"]
    gk, gj, I, b = inst["g_dl"], inst["g_ul"], inst["interf"], inst["beta"]
    row_bound = (w * np.log2(1 + gk * pd / Nk)
                 + v * np.log2(1 + gj * inst["p_max_ul"] / (N0 + b * pd)))
    order = np.argsort(-row_bound, kind="stable")
    pd = pd.astype(f)
    wf, vf = f(w / math.log(2)), f(v / math.log(2))
    dl_floor = f(Nk) + f(I) * pu
    ul_floor = f(N0) + f(b) * pd
    base = -wf * np.log(dl_floor)
    best = -np.inf
    for s in range(0, points, chunk):
        rows = order[s:s + chunk]
        if row_bound[rows[0]] <= best - 1e-6:
            break
        x = pd[rows, None]
        val = wf * np.log(dl_floor[None, :] + f(gk) * x) + base[None, :]
        val += vf * (np.log(ul_floor[rows, None] + f(gj) * pu[None, :]) - np.log(ul_floor[rows, None]))
        best = max(best, float(val.max()))
    return best


def grid_best_dense(inst, points=2001):
    """Same grid maximum in float64 with no pruning (slow; for spot checks)."""
    pd = np.linspace(0.0, inst["p_max_dl"], points)[:, None]
    pu = np.linspace(0.0, inst["p_max_ul"], points)[None, :]
    return float(pair_L(inst, pd, pu).max())


def central_diff(fun, x, i, h):
    e = np.zeros_like(x)
    e[i] = h
    return (fun(x + e) - fun(x - e)) / (2 * h)


def direct_sum_rate(scenario, channels, assignment, powers):
    """Loop-by-loop evaluation of the weighted downlink and uplink rates."""
    rd = ru = 0.0
    for n in range(scenario.num_subchannels):
        k, j = int(assignment.dl_user[n]), int(assignment.ul_user[n])
        pd, pu = float(powers.p_dl[n]), float(powers.p_ul[n])
        if k != UNASSIGNED:
            if j == UNASSIGNED:
                I = 0.0
            elif j == k:
                I = scenario.beta
            else:
                I = channels.user_gain[k, j, n]
            rd += scenario.dl_weight[k] * math.log2(
                1 + channels.bs_gain[k, n] * pd / (scenario.user_noise[k] + I * pu))
        if j != UNASSIGNED:
            si = scenario.beta if k != UNASSIGNED else 0.0
            ru += scenario.ul_weight[j] * math.log2(
                1 + channels.bs_gain[j, n] * pu / (scenario.bs_noise + si * pd))
    return rd, ru


def synthetic_drop(rng, K, N, fd=None, beta=None, P0=10.0, Pk=1.0, noise=1e-3):
    """A random scenario with normalized gains (no geometry)."""
    if fd is None:
        fd = rng.random(K) < 0.5
    if beta is None:
        beta = float(rng.choice(BETAS))
    sc = NetworkScenario(num_subchannels=N, full_duplex=fd, bs_power=P0, user_power=Pk,
                         dl_weight=rng.uniform(0.1, 1.0, K), ul_weight=rng.uniform(0.1, 1.0, K),
                         beta=beta, bs_noise=noise, user_noise=noise)
    g = 10.0 ** rng.uniform(-3, 0, (K, N))
    x = 10.0 ** rng.uniform(-5, -1, (K, K, N))
    x = np.triu(np.ones((K, K)), 1)[:, :, None] * x
    x = x + np.transpose(x, (1, 0, 2))
    return sc, ChannelRealization(g, x)


def waterfill_kkt(w, g, N, budget, p, tol=1e-9):
    """Complementary slackness of weighted water-filling at ``p``.

    Returns the largest violation relative to the water level: active
    channels share one marginal value lam, inactive ones sit below it.
    """
    w, g, N, p = map(np.asarray, (w, g, N, p))
    live = (w > 0) & (g > 0)
    marg = np.where(live, w * g / (N + g * p), 0.0)   # d/dp of w ln(1 + g p / N)
    on = p > tol * max(budget, 1.0)
    if not on.any():
        return 0.0, 0.0
    lam = float(np.median(marg[on]))
    spread = float(np.max(np.abs(marg[on] - lam)) / lam)
    above = float(np.max(np.where(~on & live, marg - lam, 0.0)) / lam)
    return spread, max(above, 0.0)


def subtracted_term_mp(scenario, channels, assignment, p, digits=50):
    """Central differences of the interference part of the DC split, in
    ``digits``-digit arithmetic.

    That part sums, over links in use, weight * log2(noise + interference):
    the co-channel uplink user (or beta for a self pair) on the downlink and
    beta * p_dl on a shared uplink. Returns ``central(i, step)``.
    """
    import mpmath as m

    N = scenario.num_subchannels

    def h(q):
        total = m.mpf(0)
        for n in range(N):
            k, j = int(assignment.dl_user[n]), int(assignment.ul_user[n])
            if k != UNASSIGNED:
                if j == UNASSIGNED:
                    I = 0.0
                elif j == k:
                    I = scenario.beta
                else:
                    I = float(channels.user_gain[k, j, n])
                total += float(scenario.dl_weight[k]) * m.log(
                    m.mpf(float(scenario.user_noise[k])) + I * q[N + n], 2)
            if j != UNASSIGNED:
                si = scenario.beta if k != UNASSIGNED else 0.0
                total += float(scenario.ul_weight[j]) * m.log(
                    m.mpf(float(scenario.bs_noise)) + si * q[n], 2)
        return total

    def central(i, step):
        with m.workdps(digits):
            q = [m.mpf(float(x)) for x in p]
            s = m.mpf(float(step))
            up, dn = list(q), list(q)
            up[i] += s
            dn[i] -= s
            return float((h(up) - h(dn)) / (2 * s))

    return central
