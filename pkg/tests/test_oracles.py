"""Recompute every brute-force oracle and check it against its frozen value."""

import math

import numpy as np
import pytest

import oracles
from oracles import FROZEN


def test_c0_riemann():
    assert oracles.c0_oracle() == pytest.approx(FROZEN["c0"], rel=1e-12)


def test_naive_normalizer_riemann():
    assert oracles.naive_normalizer_oracle() == pytest.approx(FROZEN["naive_normalizer"], rel=1e-12)


def test_cross_mode_grid():
    assert oracles.cross_mode_oracle() == FROZEN["cross_mode"]
    # the grid argmax sits within a step of the stationary point 1 - 3t - t^2 = 0
    assert abs(FROZEN["cross_mode"] - (math.sqrt(13) - 3) / 2) < 1e-4


def test_q4_dense_eigensolver():
    got = oracles.q4_eigen_oracle()
    assert np.allclose(got, FROZEN["eig_q4"], atol=1e-14)
    assert np.allclose(got, [0, 2 - math.sqrt(2), 2, 2 + math.sqrt(2)], atol=1e-14)


@pytest.mark.parametrize("key", sorted(FROZEN["lindley_mixture"]))
def test_lindley_mixture_quadpack(key):
    n, x = key
    assert oracles.lindley_mixture_oracle(x, n) == pytest.approx(FROZEN["lindley_mixture"][key], abs=1e-12)


def test_lindley_improper_quadpack():
    assert oracles.lindley_improper_oracle(2.0) == pytest.approx(FROZEN["lindley_improper_x2"], abs=1e-14)


def test_pair_integral_quadpack():
    assert oracles.pair_lindley_oracle() == pytest.approx(FROZEN["pair_lindley_100"], abs=1e-14)


def test_gamma_closed_forms():
    assert oracles.gamma_integral_oracle(1.5, 1.0) == pytest.approx(FROZEN["gamma_2_5"], rel=1e-14)
    assert oracles.gamma_integral_oracle(0.5, 0.5) == pytest.approx(FROZEN["inv_kappa_evidence"], rel=1e-14)


def test_monte_carlo_increment_variance():
    assert oracles.mc_increment_variance(4.0, 20, 10_000, seed=3) == pytest.approx(0.25, rel=0.02)
