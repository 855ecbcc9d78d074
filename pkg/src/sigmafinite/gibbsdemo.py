"""Gibbs sampling when the joint posterior does not exist.

``Y | theta1, theta2 ~ N(theta1 + theta2, 1)`` with a flat prior has no
posterior, yet both full conditionals are proper normals and a Gibbs chain
runs happily.  The chain for ``theta1`` is a random walk, while
``delta = theta1 + theta2`` looks like an i.i.d. ``N(y, 1)`` sample.  A proper
Gaussian prior restores a stationary chain; a diffuse one is indistinguishable
from the flat case in practice.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

from .measures import Kernel, ProperDensity, marginal
from .numerics import DEFAULT_CONFIG, Domain1D, QuadratureConfig

DRIFT_FLAG_SLOPE = 0.5
KS_ALPHA = 0.01


@dataclass(frozen=True)
class GaussianPrior:
    """Independent ``N(0, tau2)`` and ``N(0, kappa2)`` priors on ``theta1`` and ``theta2``."""

    tau2: float
    kappa2: float

    def __post_init__(self):
        if not (self.tau2 > 0 and self.kappa2 > 0):
            raise ValueError("tau2 and kappa2 must be positive")


@dataclass(frozen=True)
class GibbsConfig:
    """Settings for one chain; ``prior=None`` is the flat (improper) prior."""

    y: float = 0.0
    n_iter: int = 10_000
    seed: int = 0
    init_theta1: float = 0.0
    init_theta2: float = 0.0
    prior: GaussianPrior | None = None

    def __post_init__(self):
        if int(self.n_iter) != self.n_iter or self.n_iter < 1:
            raise ValueError("n_iter must be a positive integer")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 unsigned bits")
        for name in ("y", "init_theta1", "init_theta2"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    @property
    def flat(self) -> bool:
        return self.prior is None


@dataclass(frozen=True)
class ChainTrace:
    theta1: np.ndarray
    theta2: np.ndarray
    delta: np.ndarray
    config: GibbsConfig

    def __len__(self):
        return self.theta1.size

    def to_csv(self, path) -> None:
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "theta1", "theta2", "delta"])
            for t, row in enumerate(zip(self.theta1, self.theta2, self.delta), start=1):
                w.writerow([t, *map(repr, map(float, row))])


def run_gibbs(cfg: GibbsConfig) -> ChainTrace:
    """Run ``cfg.n_iter`` sweeps, updating ``theta1`` then ``theta2``.

    The two updates draw from independent streams spawned from ``cfg.seed``,
    so a trace is a deterministic function of the config.
    """
    s1, s2 = np.random.SeedSequence(cfg.seed).spawn(2)
    e1 = np.random.default_rng(s1).standard_normal(cfg.n_iter)
    e2 = np.random.default_rng(s2).standard_normal(cfg.n_iter)
    if cfg.flat:
        a1 = a2 = 1.0
    else:
        a1 = cfg.prior.tau2 / (1.0 + cfg.prior.tau2)
        a2 = cfg.prior.kappa2 / (1.0 + cfg.prior.kappa2)
    e1 *= math.sqrt(a1)
    e2 *= math.sqrt(a2)
    y = cfg.y
    t1 = np.empty(cfg.n_iter)
    t2 = np.empty(cfg.n_iter)
    th1, th2 = cfg.init_theta1, cfg.init_theta2
    for i in range(cfg.n_iter):
        th1 = a1 * (y - th2) + e1[i]
        th2 = a2 * (y - th1) + e2[i]
        t1[i] = th1
        t2[i] = th2
    return ChainTrace(t1, t2, t1 + t2, cfg)


@dataclass(frozen=True)
class DriftReport:
    """Window variances of ``theta1`` and the growth rate of its spread.

    ``msd`` holds the mean squared displacement ``E (theta1[t+L] - theta1[t])^2``
    for lags ``L = 1 .. window``; ``slope`` is its least-squares slope in
    ``L``.  A random walk with ``N(0, 2)`` steps has slope 2; a stationary
    chain has slope near 0.
    """

    window: int
    window_variances: np.ndarray
    msd: np.ndarray
    slope: float
    flagged: bool = field(default=False)


def drift_diagnostic(trace: ChainTrace, window: int = 50) -> DriftReport:
    n = len(trace)
    if window < 2 or window > n // 4:
        raise ValueError(f"window must be in [2, n_iter/4] = [2, {n // 4}]")
    x = trace.theta1
    nwin = n // window
    window_var = x[: nwin * window].reshape(nwin, window).var(axis=1, ddof=1)
    lags = np.arange(1, window + 1)
    msd = np.array([np.mean((x[L:] - x[:-L]) ** 2) for L in lags])
    slope = float(np.polyfit(lags, msd, 1)[0])
    return DriftReport(window, window_var, msd, slope, slope > DRIFT_FLAG_SLOPE)


@dataclass(frozen=True)
class KSReport:
    statistic: float
    pvalue: float
    loc: float
    series: str
    alpha: float = KS_ALPHA

    @property
    def passed(self) -> bool:
        return self.pvalue >= self.alpha


def embedded_delta_test(
    trace: ChainTrace, loc: float | None = None, series: str = "delta", alpha: float = KS_ALPHA
) -> KSReport:
    """Kolmogorov-Smirnov test of a trace series against ``N(loc, 1)``; ``loc`` defaults to ``y``."""
    if series not in ("delta", "theta1", "theta2"):
        raise ValueError(f"unknown series {series!r}")
    loc = trace.config.y if loc is None else loc
    res = stats.kstest(getattr(trace, series), "norm", args=(loc, 1.0))
    return KSReport(float(res.statistic), float(res.pvalue), float(loc), series, alpha)


def embedded_delta_posterior(
    y: float, g: Kernel | None = None, cfg: QuadratureConfig = DEFAULT_CONFIG
) -> ProperDensity:
    """Posterior of ``delta`` under the prior ``g(theta1)`` and flat ``theta2``.

    After ``(theta1, theta2) -> (rho, delta)`` the joint at ``y`` is
    ``phi(y - delta) g(rho)``; ``rho`` is integrated out by quadrature.
    """
    R = Domain1D.real_line()
    if g is None:
        g = Kernel(lambda r: np.exp(-0.5 * r * r) / math.sqrt(2 * math.pi), R, "N(0,1)")

    def joint(delta, rho):
        return np.exp(-0.5 * (y - delta) ** 2) / math.sqrt(2 * math.pi) * g(rho)

    m = marginal(Kernel(joint, (R, g.domain[0]), "f(y,rho,delta)", ("delta", "rho")), "delta", cfg=cfg)
    if not m.sigma_finite or not 0 < m.mass < math.inf:
        raise ValueError("embedded posterior of delta is not proper; is g proper?")
    return ProperDensity(m.density, R, m.mass, f"f(delta|y={y:g})")
