"""First-order random walk as an intrinsic GMRF.

The density ``c(kappa) exp(-kappa/2 x'Qx)`` only involves the increments
``x[i+1] - x[i]``; it is flat along the all-ones direction and therefore
improper.  This module builds ``Q``, evaluates the density, samples given the
mean, checks posterior propriety for ``kappa`` and contrasts the two limits
that come from flattening a Gaussian on ``mean(x)`` versus on
``mean(x) * (x[1] - x[0])``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .exceptions import DimensionMismatch, DomainError, InvalidSize, ZeroFirstIncrement
from .measures import Kernel
from .numerics import DEFAULT_CONFIG, QuadratureConfig, integrate


def build_Q(n: int) -> np.ndarray:
    """Structure matrix with ``x'Qx = sum((x[i+1] - x[i])**2)``.

    >>> build_Q(3)
    array([[ 1., -1.,  0.],
           [-1.,  2., -1.],
           [ 0., -1.,  1.]])
    """
    if int(n) != n or n < 2:
        raise InvalidSize(f"need n >= 2, got {n}")
    D = np.diff(np.eye(int(n)), axis=0)
    return D.T @ D


def quad_form(x) -> np.ndarray:
    """``x'Qx`` via the increments; works along the last axis."""
    d = np.diff(np.asarray(x, dtype=float), axis=-1)
    return np.sum(d * d, axis=-1)


@dataclass(frozen=True)
class RW1Model:
    """``c(kappa) = kappa ** c_exponent``; the exponent defaults to ``(n - 1) / 2``."""

    n: int
    kappa: float = 1.0
    c_exponent: float | None = None

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise InvalidSize(f"need n >= 2, got {self.n}")
        if not self.kappa > 0:
            raise DomainError("kappa must be positive")
        if self.c_exponent is None:
            object.__setattr__(self, "c_exponent", (self.n - 1) / 2)


def log_unnormalized_density(x, model: RW1Model) -> float:
    """``e log(kappa) - kappa/2 x'Qx``.

    >>> log_unnormalized_density([0, 1, 0, 1], RW1Model(4, 1.0, 1.5))
    -1.5
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (model.n,):
        raise DimensionMismatch(f"expected a vector of length {model.n}, got shape {x.shape}")
    return float(model.c_exponent * math.log(model.kappa) - 0.5 * model.kappa * quad_form(x))


def sample_given_mean(n: int, kappa: float, mu: float = 0.0, seed=None, size: int | None = None) -> np.ndarray:
    """Draw the random walk with ``N(0, 1/kappa)`` increments, shifted to have mean ``mu``.

    Returns shape ``(n,)``, or ``(size, n)`` when ``size`` is given.
    """
    if int(n) != n or n < 2:
        raise InvalidSize(f"need n >= 2, got {n}")
    if not kappa > 0:
        raise DomainError("kappa must be positive")
    rng = np.random.default_rng(seed)
    rows = 1 if size is None else int(size)
    inc = rng.normal(0.0, 1.0 / math.sqrt(kappa), size=(rows, int(n) - 1))
    x = np.concatenate([np.zeros((rows, 1)), np.cumsum(inc, axis=1)], axis=1)
    x += mu - x.mean(axis=1, keepdims=True)
    return x[0] if size is None else x


class Propriety(str, enum.Enum):
    SUFFICIENT_CONDITION_MET = "sufficient_condition_met"
    PROPER = "proper"
    IMPROPER = "improper"


@dataclass(frozen=True)
class ProprietyReport:
    """``sufficient`` is ``int pi(k) k^e dk``; ``evidence`` adds the factor ``exp(-k s / 2)``."""

    verdict: Propriety
    sufficient: float
    evidence: float


def propriety_check(
    prior_kappa: Kernel, c_exponent: float, quad_form_value: float, cfg: QuadratureConfig = DEFAULT_CONFIG
) -> ProprietyReport:
    """Is the posterior of ``kappa`` proper given ``x'Qx = quad_form_value``?"""
    if not quad_form_value > 0:
        raise DomainError("quad_form_value must be positive (x must not be constant)")
    if prior_kappa.ndim != 1 or prior_kappa.domain[0].a < 0:
        raise DomainError("prior_kappa must live on the positive half line")
    d = prior_kappa.domain[0]
    e, s = c_exponent, quad_form_value
    sufficient = integrate(lambda k: prior_kappa(k) * k ** e, d, cfg)
    evidence = integrate(lambda k: prior_kappa(k) * k ** e * np.exp(-0.5 * k * s), d, cfg)
    if math.isfinite(sufficient):
        verdict = Propriety.SUFFICIENT_CONDITION_MET
    elif math.isfinite(evidence):
        verdict = Propriety.PROPER
    else:
        verdict = Propriety.IMPROPER
    return ProprietyReport(verdict, sufficient, evidence)


@dataclass(frozen=True)
class LimitPair:
    limit_a: float
    limit_b: float

    @property
    def ratio(self) -> float:
        return self.limit_b / self.limit_a


def _checked(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise InvalidSize("x must be a vector of length >= 2")
    return x


def limit_pair_demo(x, kappa: float, c_exponent: float | None = None) -> LimitPair:
    """Limits of the flattened proper densities under the two parameterizations.

    Flattening a Gaussian on ``mean(x)`` gives back the unnormalized density;
    flattening it on ``mean(x) * dx1`` adds the Jacobian factor ``1/|dx1|``.

    >>> limit_pair_demo([0, 2, 2, 2], 1.0).ratio
    0.5
    """
    x = _checked(x)
    dx1 = x[1] - x[0]
    if dx1 == 0:
        raise ZeroFirstIncrement("the second parameterization needs x[1] != x[0]")
    a = math.exp(log_unnormalized_density(x, RW1Model(x.size, kappa, c_exponent)))
    return LimitPair(a, float(a / abs(dx1)))


def k_indexed_density(x, kappa: float, gamma: float, parameterization: str = "a", c_exponent: float | None = None) -> float:
    """Proper density with an ``N(0, 1/gamma)`` factor, rescaled by ``sqrt(2 pi / gamma)``.

    The rescaling keeps the flattening factor in ``(0, 1]``, so the value
    tends to the matching member of :func:`limit_pair_demo` as ``gamma -> 0``.
    """
    x = _checked(x)
    if not gamma > 0:
        raise DomainError("gamma must be positive")
    f = math.exp(log_unnormalized_density(x, RW1Model(x.size, kappa, c_exponent)))
    xbar = float(x.mean())
    if parameterization == "a":
        return f * math.exp(-0.5 * gamma * xbar * xbar)
    if parameterization == "b":
        dx1 = x[1] - x[0]
        if dx1 == 0:
            raise ZeroFirstIncrement("the second parameterization needs x[1] != x[0]")
        u = xbar / dx1
        return f * math.exp(-0.5 * gamma * u * u) / abs(dx1)
    raise ValueError(f"unknown parameterization {parameterization!r}")
