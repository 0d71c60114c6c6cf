import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fdofdma.pairwise import (CANDIDATES, EXCLUSIVE, PairInstance, interior_root, pair_objective,
                              quadratic_coefficients_dl, quadratic_coefficients_ul, solve_pair,
                              solve_pairs)

from helpers import grid_best, grid_best_dense, pair_L, random_pair_arrays


def inst(**kw):
    base = dict(w=1.0, v=1.0, g_dl=1.0, g_ul=1.0, interf=0.2, noise_dl=1.0, noise_ul=1.0,
                p_max_dl=10.0, p_max_ul=10.0, beta=0.1)
    base.update(kw)
    return PairInstance(**base)


def as_dict(x: PairInstance):
    return {k: getattr(x, k) for k in x.__dataclass_fields__}


def random_instance(rng):
    a = random_pair_arrays(rng, 1)
    return PairInstance(**{k: float(v[0]) for k, v in a.items()})


def test_objective_zero_power():
    assert pair_objective(inst(), 0.0, 0.0) == 0.0


def test_objective_separable_without_coupling():
    x = inst(interf=0.0, beta=0.0)
    assert pair_objective(x, 2.0, 3.0) == pytest.approx(math.log2(3) + math.log2(4))


def test_objective_hand_value():
    x = inst(g_dl=2.0, g_ul=2.0, interf=1.0, beta=1.0)
    assert pair_objective(x, 1.0, 1.0) == pytest.approx(2.0)


def test_dl_coefficients_without_si():
    x = inst(beta=0.0, g_dl=2.0, g_ul=3.0, noise_ul=0.5, w=0.7)
    A, B, C = quadratic_coefficients_dl(x, 4.0)
    assert A == 0 and B == 0
    assert C == pytest.approx(0.7 * 2 * 0.25 + 0.7 * 2 * 3 * 0.5 * 4)


def test_dl_coefficients_without_uplink():
    x = inst(noise_ul=0.5, w=0.7, g_dl=2.0)
    assert quadratic_coefficients_dl(x, 0.0)[2] == pytest.approx(0.7 * 2 * 0.25)


def test_ul_coefficients_special_cases():
    x = inst(interf=0.0)
    D, E, _ = quadratic_coefficients_ul(x, 3.0)
    assert D == 0 and E == 0
    y = inst(v=0.4, g_ul=3.0, noise_dl=0.5)
    assert quadratic_coefficients_ul(y, 0.0)[2] == pytest.approx(0.4 * 3 * 0.25)


def _stationarity_sign_check(rng, which):
    """The quadratic's sign matches dL/dp's sign: both vanish at the same points."""
    x = random_instance(rng)
    if which == "dl":
        other = rng.uniform(0, x.p_max_ul)
        A, B, C = quadratic_coefficients_dl(x, other)
        fn = lambda p: float(pair_objective(x, p, other))
        top = x.p_max_dl
    else:
        other = rng.uniform(0, x.p_max_dl)
        A, B, C = quadratic_coefficients_ul(x, other)
        fn = lambda p: float(pair_objective(x, other, p))
        top = x.p_max_ul
    p = rng.uniform(0.05, 0.95) * top
    h = 1e-6 * top
    deriv = (fn(p + h) - fn(p - h)) / (2 * h)
    q = A * p * p + B * p + C
    scale = abs(A * p * p) + abs(B * p) + abs(C)
    if abs(deriv) > 1e-7 and abs(q) > 1e-9 * scale:
        assert np.sign(deriv) == np.sign(q)
    return x, A, B, C


@given(st.integers(0, 2**32 - 1))
def test_dl_quadratic_sign_matches_derivative(seed):
    _stationarity_sign_check(np.random.default_rng(seed), "dl")


@given(st.integers(0, 2**32 - 1))
def test_ul_quadratic_sign_matches_derivative(seed):
    _stationarity_sign_check(np.random.default_rng(seed), "ul")


def analytic_partials(x, pd, pu):
    """dL/dp_dl and dL/dp_ul written out by hand."""
    den_dl = x.noise_dl + x.interf * pu
    den_ul = x.noise_ul + x.beta * pd
    d_dl = (x.w * x.g_dl / (den_dl + x.g_dl * pd)
            - x.v * x.g_ul * pu * x.beta / (den_ul * (den_ul + x.g_ul * pu)))
    d_ul = (x.v * x.g_ul / (den_ul + x.g_ul * pu)
            - x.w * x.g_dl * pd * x.interf / (den_dl * (den_dl + x.g_dl * pd)))
    return d_dl / math.log(2), d_ul / math.log(2)


@pytest.mark.parametrize("which", ["dl", "ul"])
def test_interior_roots_are_stationary(which):
    # Two routes: the closed-form partial, and a central difference with
    # step 1e-6 * P_max plus one Richardson step (roots near p = 0 have
    # enough curvature that the plain difference's h^2 error shows).
    rng = np.random.default_rng(3)
    found = fd_checked = 0
    for _ in range(20000):
        x = random_instance(rng)
        if which == "dl":
            root = interior_root(*quadratic_coefficients_dl(x, x.p_max_ul), x.p_max_dl)
            fn = lambda p: float(pair_objective(x, p, x.p_max_ul))
            top = x.p_max_dl
            exact = lambda p: analytic_partials(x, p, x.p_max_ul)[0]
        else:
            root = interior_root(*quadratic_coefficients_ul(x, x.p_max_dl), x.p_max_ul)
            fn = lambda p: float(pair_objective(x, x.p_max_dl, p))
            top = x.p_max_ul
            exact = lambda p: analytic_partials(x, x.p_max_dl, p)[1]
        if root is None:
            continue
        found += 1
        assert abs(exact(root)) <= 1e-6
        h = 1e-6 * top
        if h < root < top - h:
            d1 = (fn(root + h) - fn(root - h)) / (2 * h)
            d2 = (fn(root + h / 2) - fn(root - h / 2)) / h
            assert abs((4 * d2 - d1) / 3) <= 1e-6
            fd_checked += 1
    assert found >= 50 and fd_checked >= 0.9 * found


def test_interior_root_examples():
    assert interior_root(1.0, -3.0, 2.0, 10.0) == pytest.approx(1.0)
    assert interior_root(1.0, 0.0, 1.0, 10.0) is None
    assert interior_root(0.0, 1.0, 1.0, 10.0) is None
    assert interior_root(0.0, -2.0, 1.0, 10.0) == pytest.approx(0.5)
    assert interior_root(1.0, -3.0, 2.0, 0.5) is None


def test_uncoupled_pair_takes_both_caps():
    s = solve_pair(inst(interf=0.0, beta=0.0))
    assert (s.p_dl, s.p_ul, s.candidate) == (10.0, 10.0, "both_full")


def test_dead_downlink_goes_uplink_only():
    s = solve_pair(inst(g_dl=0.0))
    assert (s.p_dl, s.p_ul, s.candidate) == (0.0, 10.0, "ul_only")


def test_dead_uplink_goes_downlink_only():
    s = solve_pair(inst(g_ul=0.0))
    assert (s.p_dl, s.p_ul, s.candidate) == (10.0, 0.0, "dl_only")


def test_idle_when_both_links_dead():
    s = solve_pair(inst(g_dl=0.0, g_ul=0.0))
    assert (s.p_dl, s.p_ul, s.objective, s.candidate) == (0.0, 0.0, 0.0, "idle")


def test_spec_instance_matches_grid():
    x = inst()
    s = solve_pair(x)
    assert s.objective >= grid_best_dense(as_dict(x)) - 1e-3


def test_exclusive_candidates_only():
    x = inst(interf=0.0, beta=0.0)
    s = solve_pair(x, candidates=EXCLUSIVE)
    assert s.candidate in EXCLUSIVE and (s.p_dl == 0.0 or s.p_ul == 0.0)
    with pytest.raises(ValueError):
        solve_pair(x, candidates=("both_full",))


def test_ties_prefer_less_power():
    # symmetric instance: dl-only and ul-only tie exactly; the lower-power one wins
    x = inst(interf=1e3, beta=1e3, p_max_dl=1.0, p_max_ul=2.0, g_dl=2.0, g_ul=1.0)
    s = solve_pair(x)
    assert s.candidate == "dl_only"


def test_instance_validation():
    with pytest.raises(ValueError):
        inst(w=-1.0)
    with pytest.raises(ValueError):
        inst(p_max_dl=0.0)


def test_vectorized_matches_scalar():
    rng = np.random.default_rng(8)
    a = random_pair_arrays(rng, 200)
    pd, pu, L, tag = solve_pairs(**a)
    for i in range(0, 200, 17):
        s = solve_pair(PairInstance(**{k: float(v[i]) for k, v in a.items()}))
        assert (s.p_dl, s.p_ul, s.objective) == (pd[i], pu[i], L[i])
        assert s.candidate == CANDIDATES[tag[i]]


def test_grid_oracle_random():
    rng = np.random.default_rng(21)
    a = random_pair_arrays(rng, 150)
    _, _, L, _ = solve_pairs(**a)
    for i in range(150):
        assert L[i] >= grid_best({k: v[i] for k, v in a.items()}) - 1e-3


def test_dominated_one_sided_points():
    rng = np.random.default_rng(4)
    for _ in range(500):
        x = random_instance(rng)
        d = as_dict(x)
        ul_root = interior_root(*quadratic_coefficients_ul(x, 0.0), x.p_max_ul)
        if ul_root is not None:
            assert pair_L(d, 0.0, ul_root) <= pair_L(d, 0.0, x.p_max_ul) + 1e-12
        dl_root = interior_root(*quadratic_coefficients_dl(x, 0.0), x.p_max_dl)
        if dl_root is not None:
            assert pair_L(d, dl_root, 0.0) <= pair_L(d, x.p_max_dl, 0.0) + 1e-12


@given(st.integers(0, 2**32 - 1), st.floats(1.0, 5.0), st.sampled_from(["w", "v"]))
def test_objective_monotone_in_weights(seed, factor, which):
    x = random_instance(np.random.default_rng(seed))
    d = as_dict(x)
    d[which] = d[which] * factor
    assert solve_pair(PairInstance(**d)).objective >= solve_pair(x).objective - 1e-12


@given(st.integers(0, 2**32 - 1))
def test_solution_in_box(seed):
    x = random_instance(np.random.default_rng(seed))
    s = solve_pair(x)
    assert 0 <= s.p_dl <= x.p_max_dl and 0 <= s.p_ul <= x.p_max_ul
    assert s.objective == pytest.approx(float(pair_objective(x, s.p_dl, s.p_ul)), rel=1e-12)
