import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize_scalar

from oracles import FROZEN, truncated_closed_form
from sigmafinite import stone
from sigmafinite.exceptions import DomainError
from sigmafinite.measures import condition, lebesgue, sup_distance, total_mass
from sigmafinite.numerics import Domain1D, integrate

GRID = stone.THETA_GRID


def test_joint_init_values():
    assert stone.joint_init(1, 1, 1, 1) == pytest.approx(math.exp(-3), rel=1e-14)
    assert stone.joint_init(1, 1, 1, 1, lebesgue(stone.POSITIVE)) == pytest.approx(math.exp(-2), rel=1e-14)


@pytest.mark.parametrize("bad", [(0, 1, 1, 1), (1, -1, 1, 1), (1, 1, 0, 1), (1, 1, 1, -2)])
def test_joint_init_rejects_nonpositive(bad):
    with pytest.raises(DomainError):
        stone.joint_init(*bad)


def test_xz_is_sigma_finite_at_one_one():
    # integrating the joint over (theta, phi) at (x, z) = (1, 1) is finite
    xzt = stone.StoneModel().xzt_kernel()
    assert 0 < integrate(lambda t: xzt(1.0, 1.0, t), stone.POSITIVE) < math.inf


def test_cross_normalizer_and_value():
    post = stone.posterior_given_xz(1.0)
    assert post.normalizer == pytest.approx(FROZEN["c0"], rel=1e-9)
    assert post(1.0) * post.normalizer == pytest.approx(math.exp(-1) / 8, rel=1e-12)
    assert post.mass() == pytest.approx(1.0, abs=1e-9)


def test_cross_mode_matches_grid_oracle():
    post = stone.posterior_given_xz(1.0)
    res = minimize_scalar(lambda t: -float(post(t)), bounds=(0.01, 2), method="bounded", options={"xatol": 1e-8})
    assert abs(res.x - FROZEN["cross_mode"]) < 1e-4


def test_naive_value_and_freq_case():
    naive = stone.naive_fz(1.0)
    assert naive.normalizer == pytest.approx(FROZEN["naive_normalizer"], rel=1e-9)
    assert naive(1.0) * naive.normalizer == pytest.approx(math.exp(-1) / 4, rel=1e-12)
    freq = stone.naive_fz(1.0, stone.inverse_prior())
    assert freq(1.0) == pytest.approx(0.25, rel=1e-9)


@pytest.mark.parametrize("z", [0.1, 1.0, 7.5])
def test_freq_normalization(z):
    assert integrate(lambda t: z / (t + z) ** 2, stone.POSITIVE) == pytest.approx(1.0, abs=1e-9)
    freq = stone.naive_fz(z, stone.inverse_prior())
    assert np.allclose(freq(GRID), z / (GRID + z) ** 2, atol=1e-9)


def test_grid_holds_almost_all_mass():
    for d in (stone.posterior_given_xz(1.0), stone.naive_fz(1.0), stone.truncated_posterior(0.001, 1.0, 500.0)):
        inside = integrate(d, Domain1D.bounded(0.0, 10.0))
        assert inside > 0.999


def test_flat_h_equals_cross():
    got = stone.posterior_general_h(1.0, 1.0, h=stone.flat_h())
    assert sup_distance(got, stone.posterior_given_xz(1.0), GRID) < 1e-8


def test_scale_h_equals_naive():
    got = stone.posterior_general_h(1.0, 1.0, h=stone.scale_h())
    assert sup_distance(got, stone.naive_fz(1.0), GRID) < 1e-8


@pytest.mark.parametrize("x", [1.0, 0.001])
def test_truncated_h_matches_closed_form(x):
    quad = stone.posterior_general_h(x, 1.0, h=stone.truncated_h(500.0))
    closed = stone.truncated_posterior(x, 1.0, 500.0)
    assert sup_distance(quad, closed, GRID) < 1e-8
    # the production bracket agrees with the expanded formula
    raw = truncated_closed_form(GRID, x, 1.0, 500.0)
    assert np.allclose(closed(GRID) * closed.normalizer, raw, rtol=1e-9, atol=1e-15)


def test_bracket_limits():
    assert stone.truncation_bracket(0.0) == 0.0
    assert abs(stone.truncation_bracket(41.0) - 2) < 1e-6
    small = 1e-4
    assert stone.truncation_bracket(small) == pytest.approx(small ** 3 / 3, rel=1e-3)


def test_truncated_tends_to_cross_as_M_grows():
    cross = stone.posterior_given_xz(1.0)
    Ms = (500, 2e3, 5e3, 2e4, 5e5)
    dists = [sup_distance(stone.truncated_posterior(0.001, 1.0, M), cross, GRID) for M in Ms]
    # strictly decreasing until the bracket saturates at 2 in double precision
    assert all(b < a or b == a == 0 for a, b in zip(dists, dists[1:]))
    assert dists[-1] < 1e-6


def test_uniformity_failure():
    cross = stone.posterior_given_xz(1.0)
    near = sup_distance(stone.truncated_posterior(1.0, 1.0, 500.0), cross, GRID)
    far = sup_distance(stone.truncated_posterior(0.001, 1.0, 500.0), cross, GRID)
    assert far > 10 * near
    assert far > 1e-2 and near < 1e-3


def test_x_independence_through_full_joint():
    joint = stone.StoneModel().xzt_kernel()
    grid = np.linspace(0.05, 10, 60)
    a = condition(joint, ("x", "z"), (1.0, 1.0), n_probes=16)
    b = condition(joint, ("x", "z"), (3.0, 1.0), n_probes=16)
    assert sup_distance(a, b, grid) < 1e-6


# ---- paradox detector -------------------------------------------------------------

def test_detect_flat_h_forbidden():
    rep = stone.detect_paradox(1.0, 1.0)
    assert not rep.z_sigma_finite
    assert rep.verdict is stone.Verdict.CONDITIONING_FORBIDDEN
    assert rep.sup_distance > 1e-2


def test_detect_scale_h_forbidden_though_shapes_agree():
    rep = stone.detect_paradox(1.0, 1.0, h=stone.scale_h())
    assert rep.verdict is stone.Verdict.CONDITIONING_FORBIDDEN
    assert rep.sup_distance < 1e-8


def test_detect_proper_h_consistent():
    rep = stone.detect_paradox(1.0, 1.0, h=stone.truncated_h(500.0))
    assert rep.z_sigma_finite
    assert rep.verdict is stone.Verdict.CONSISTENT
    assert sup_distance(rep.cross_density, stone.naive_fz(1.0), GRID) < 1e-6


def test_improper_theta_prior_must_be_flagged():
    with pytest.raises(DomainError):
        stone.StoneModel(prior_theta=stone.inverse_prior())
    assert stone.StoneModel(prior_theta=stone.inverse_prior(), improper_theta=True)


def test_proper_priors_have_unit_mass():
    assert total_mass(stone.exponential_prior()) == pytest.approx(1.0, rel=1e-9)
    assert total_mass(stone.truncated_h(3.0)) == pytest.approx(1.0, rel=1e-9)


def test_figure_caption_properties():
    fig = stone.stone_figure()
    d1 = np.max(np.abs(fig.truncated[1.0] - fig.cross))
    d2 = np.max(np.abs(fig.truncated[0.001] - fig.cross))
    dd = np.max(np.abs(fig.dd - fig.cross))
    assert d1 < 1e-3 and d2 > 1e-2 and dd > 1e-2


@settings(max_examples=40, deadline=None)
@given(st.floats(1e-3, 10.0), st.floats(0.0, 10.0), st.floats(1.0, 1e4), st.floats(1.0, 100.0))
def test_bracket_monotone_in_M_and_bounded(x, theta, M, factor):
    z = 1.0
    lo = stone.truncation_bracket(x * M * (theta + z))
    hi = stone.truncation_bracket(x * M * factor * (theta + z))
    assert lo <= hi <= 2.0


@settings(max_examples=15, deadline=None)
@given(st.floats(0.05, 20.0))
def test_cross_is_normalized_for_any_z(z):
    assert stone.posterior_given_xz(z).mass() == pytest.approx(1.0, abs=1e-8)
