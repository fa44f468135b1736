"""Removable-singularity kernels, cutoffs and the pointwise nonlinearity."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from faddeevlab.kernels import (DEFAULT_PARAMS, DEFAULT_PROFILE, CutoffProfile,
                                KernelParams, cutoff_arrays, dA1_dt, dA1_dtt,
                                eval_A, eval_cutoff, eval_F_rhs, eval_Ftilde,
                                eval_N, laplacian_phi_2d, laplacian_phi_4d)

LIMITS = {
    0: lambda a: a ** 2,
    1: lambda a: 2.0 / 3.0,
    2: lambda a: -(a ** 2) / 3.0,
    3: lambda a: -(a ** 2),
    4: lambda a: -2.0 * a ** 2 / 3.0,
}


# ---------------------------------------------------------------------------
# Ftilde kernels


@pytest.mark.parametrize("alpha", [1.0, 0.7])
@pytest.mark.parametrize("j", range(5))
def test_kernel_limit_at_zero(j, alpha):
    p = KernelParams(alpha=alpha)
    assert eval_Ftilde(j, 0.0, p) == pytest.approx(LIMITS[j](alpha), rel=1e-12)


@pytest.mark.parametrize("j", range(5))
def test_series_and_direct_branches_agree(j):
    # Widening x_switch flips the evaluator to the series branch on points
    # the default parameters evaluate directly; the two must coincide.
    p_narrow = KernelParams(x_switch=1e-2)
    p_wide = KernelParams(x_switch=0.45)
    xs = np.linspace(0.02, 0.4, 77)
    a = eval_Ftilde(j, xs, p_narrow)
    b = eval_Ftilde(j, xs, p_wide)
    assert np.max(np.abs(a - b) / np.abs(a)) <= 1e-12


@settings(max_examples=200, deadline=None)
@given(j=st.integers(0, 4), x=st.floats(-100.0, 100.0))
def test_kernels_are_even(j, x):
    left = eval_Ftilde(j, -x, DEFAULT_PARAMS)
    right = eval_Ftilde(j, x, DEFAULT_PARAMS)
    assert left == right or abs(left - right) <= 1e-15 * abs(right)


@pytest.mark.parametrize("j", range(5))
def test_far_field_envelope_decays(j):
    xs = np.linspace(0.0, 100.0, 8001)
    vals = np.abs(eval_Ftilde(j, xs, DEFAULT_PARAMS))
    near = vals[xs <= 10.0].max()
    blocks = [vals[(xs >= a) & (xs < 2.0 * a)].max() for a in (10.0, 20.0, 40.0)]
    assert near >= blocks[0] >= blocks[1] >= blocks[2]


def test_kernel_params_validation():
    with pytest.raises(ValueError):
        KernelParams(alpha=0.0)
    with pytest.raises(ValueError):
        KernelParams(x_switch=0.0)
    with pytest.raises(ValueError):
        KernelParams(series_terms=3)


# ---------------------------------------------------------------------------
# cutoffs


def test_cutoff_plateaus(profile):
    assert eval_cutoff("phi", 0.0, 0, profile) == math.pi
    assert eval_cutoff("phi", 1.0, 0, profile) == math.pi
    assert eval_cutoff("phi", 2.0, 0, profile) == 0.0
    assert eval_cutoff("phi", 3.0, 0, profile) == 0.0
    assert eval_cutoff("lt1", 0.5, 0, profile) == 1.0
    assert eval_cutoff("lt1", 1.0, 0, profile) == 0.0
    assert eval_cutoff("gt1", 0.25, 0, profile) == 0.0
    assert eval_cutoff("gt1", 3.0, 0, profile) == 1.0
    for which in ("phi", "lt1", "gt1"):
        assert eval_cutoff(which, 0.2, 1, profile) == 0.0
        assert eval_cutoff(which, 5.0, 2, profile) == 0.0


def test_cutoff_monotone_and_bounded(profile):
    r = np.linspace(0.0, 3.0, 601)
    phi = eval_cutoff("phi", r, 0, profile)
    assert np.all(np.diff(phi) <= 0.0)
    assert np.all((phi >= 0.0) & (phi <= math.pi))
    lt1 = eval_cutoff("lt1", r, 0, profile)
    gt1 = eval_cutoff("gt1", r, 0, profile)
    assert np.array_equal(lt1 + gt1, np.ones_like(r))


def test_cutoff_rejects_bad_arguments(profile):
    with pytest.raises(ValueError):
        eval_cutoff("phi", 1.0, 3, profile)
    with pytest.raises(ValueError):
        eval_cutoff("psi", 1.0, 0, profile)
    with pytest.raises(ValueError):
        CutoffProfile(kind=6)
    with pytest.raises(ValueError):
        CutoffProfile(kind=3)


def _fd4(f, r, h):
    return (f(r - 2 * h) - 8 * f(r - h) + 8 * f(r + h) - f(r + 2 * h)) / (12 * h)


@pytest.mark.parametrize("which,rs", [("phi", (1.2, 1.5, 1.8)),
                                      ("lt1", (0.6, 0.75, 0.9))])
def test_cutoff_derivatives_match_finite_differences(which, rs, profile):
    h = 1e-3
    for r in rs:
        d1 = eval_cutoff(which, r, 1, profile)
        fd1 = _fd4(lambda x: eval_cutoff(which, x, 0, profile), r, h)
        assert abs(d1 - fd1) <= 1e-8
        d2 = eval_cutoff(which, r, 2, profile)
        fd2 = _fd4(lambda x: eval_cutoff(which, x, 1, profile), r, h)
        assert abs(d2 - fd2) <= 1e-8 * max(1.0, abs(d2))


def test_laplacian_phi_supported_on_transition_shell(profile):
    r = np.array([0.0, 0.5, 0.999, 2.001, 4.0])
    assert np.array_equal(laplacian_phi_2d(r, profile), np.zeros(5))
    assert np.array_equal(laplacian_phi_4d(r, profile), np.zeros(5))
    r = 1.5
    d1 = _fd4(lambda x: eval_cutoff("phi", x, 0, profile), r, 1e-3)
    d2 = _fd4(lambda x: eval_cutoff("phi", x, 1, profile), r, 1e-3)
    assert laplacian_phi_2d(r, profile) == pytest.approx(d2 + d1 / r, abs=1e-8)
    assert laplacian_phi_4d(r, profile) == pytest.approx(d2 + 3 * d1 / r, abs=1e-8)


# ---------------------------------------------------------------------------
# quasilinear coefficients


@settings(max_examples=200, deadline=None)
@given(y=st.floats(-50.0, 50.0), r=st.floats(0.0, 100.0))
def test_A4_A5_at_least_one(y, r):
    assert eval_A(4, y, r) >= 1.0
    assert eval_A(5, y, r) >= 1.0


def test_A1_A3_require_positive_radius():
    with pytest.raises(ValueError):
        eval_A(1, 0.3, 0.0)
    with pytest.raises(ValueError):
        eval_A(3, 0.3, -1.0)
    with pytest.raises(ValueError):
        eval_A(2, 0.3, 1.0)


def test_A5_matches_A1_on_reconstructed_u(params, profile):
    r = np.linspace(0.05, 6.0, 301)
    v = 0.4 * np.exp(-r ** 2) + 0.1
    u = r * v + eval_cutoff("phi", r, 0, profile)
    a5 = eval_A(5, v, r, params, profile)
    a1 = eval_A(1, u, r, params)
    assert np.max(np.abs(a5 - a1)) <= 1e-12


def test_dA1_dt_matches_path_derivative(params, profile):
    r = np.array([0.3, 0.7, 1.5, 3.0])
    v, vt = np.array([0.4, -0.2, 0.3, 0.1]), np.array([0.5, 0.3, -0.4, 0.2])
    eps = 1e-5
    fd = (eval_A(5, v + eps * vt, r, params, profile)
          - eval_A(5, v - eps * vt, r, params, profile)) / (2 * eps)
    assert np.max(np.abs(dA1_dt(v, vt, r, params, profile) - fd)) <= 2e-8


def test_dA1_dtt_matches_path_derivative(params, profile):
    r = np.array([0.3, 0.7, 1.5, 3.0])
    v = np.array([0.4, -0.2, 0.3, 0.1])
    vt = np.array([0.5, 0.3, -0.4, 0.2])
    vtt = np.array([-0.3, 0.6, 0.2, -0.5])
    eps = 1e-4

    def along(t):
        return eval_A(5, v + t * vt + 0.5 * t * t * vtt, r, params, profile)

    fd = (along(eps) - 2.0 * along(0.0) + along(-eps)) / eps ** 2
    assert np.max(np.abs(dA1_dtt(v, vt, vtt, r, params, profile) - fd)) <= 1e-6


# ---------------------------------------------------------------------------
# the 2D nonlinearity and the lifted right-hand side


def test_N_closed_form_points(params):
    assert eval_N(math.pi, 0.0, 0.0, 1.0, params) == pytest.approx(0.0, abs=1e-15)
    assert eval_N(math.pi / 2, 0.0, 0.0, 2.0, params) == pytest.approx(0.0, abs=1e-15)
    # A_1 = 3/2 at u = pi/4, r = 1, so N = -(sin u cos u)/A_1 = -1/3
    assert eval_N(math.pi / 4, 0.0, 0.0, 1.0, params) == pytest.approx(-1.0 / 3.0,
                                                                       rel=1e-12)


def test_N_rejects_origin(params):
    with pytest.raises(ValueError):
        eval_N(1.0, 0.0, 0.0, 0.0, params)


def test_two_path_identity_spot(params, profile):
    v, r = 0.3, 0.25
    f = eval_F_rhs(v, 0.0, 0.0, r, params, profile)
    direct = v / r ** 2 + eval_N(r * v + math.pi, 0.0, v, r, params) / r
    assert abs(f - direct) <= 1e-10


def test_two_path_identity_random(params, profile):
    rng = np.random.default_rng(7)
    n = 500
    v, vt, vr = (rng.uniform(-2.0, 2.0, n) for _ in range(3))
    r = rng.uniform(0.05, 0.45, n)
    f = eval_F_rhs(v, vt, vr, r, params, profile)
    direct = v / r ** 2 + eval_N(r * v + math.pi, r * vt, v + r * vr, r, params) / r
    assert np.all(np.abs(f - direct) <= 1e-9 * (1.0 + np.abs(f)))


def test_F_vanishes_off_transition_shell(params, profile):
    z = np.zeros(4)
    r_exact = np.array([0.0, 0.3, 0.5, 2.0])
    assert np.array_equal(eval_F_rhs(z, z, z, r_exact, params, profile), z)
    r_near = np.array([0.6, 0.9, 0.999, 5.0])
    f = eval_F_rhs(z, z, z, r_near, params, profile)
    assert np.max(np.abs(f)) <= 1e-14  # sin(pi) roundoff through N(phi)
    r_shell = np.linspace(1.05, 1.95, 7)
    f_shell = eval_F_rhs(np.zeros(7), np.zeros(7), np.zeros(7), r_shell,
                         params, profile)
    assert np.min(np.abs(f_shell)) > 0.1


def test_F_origin_limit_closed_form(params, profile):
    v, vt, vr = 0.4, 0.3, -0.2
    a = params.alpha
    expected = (2.0 / 3.0 * v ** 3 - a ** 2 / 3.0 * v ** 5
                - a ** 2 * v * (vt ** 2 - vr ** 2)) / (1.0 + a ** 2 * v ** 2)
    f0 = eval_F_rhs(v, vt, vr, 0.0, params, profile)
    assert f0 == pytest.approx(expected, rel=1e-13)
    assert eval_F_rhs(v, vt, vr, 1e-4, params, profile) == pytest.approx(
        f0, abs=1e-3)


def test_F_hot_path_matches_wrapper(params, profile):
    from faddeevlab.kernels import eval_F_given_cutoffs
    rng = np.random.default_rng(3)
    r = np.sort(rng.uniform(0.0, 5.0, 64))
    v, vt, vr = (rng.uniform(-1.0, 1.0, 64) for _ in range(3))
    cut = cutoff_arrays(r, profile)
    assert np.array_equal(eval_F_given_cutoffs(v, vt, vr, r, cut, params),
                          eval_F_rhs(v, vt, vr, r, params, profile))
