"""The marginalization paradox for two exponential observations.

``X ~ Exp(rate theta*phi)`` and ``Y ~ Exp(rate phi)`` with ``Z = Y / X``.  The
prior is ``pi(theta) * h(phi)``.  With ``h`` improper the law of ``Z`` is not
sigma-finite, so "f(theta | x, z) does not depend on x" says nothing about
``f(theta | z)``.  This module provides the densities involved, a detector
that compares the two reduction routes, and the truncated-``h`` family that
approaches the improper case.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammainc

from .exceptions import DivergentSlice, DomainError, ZeroSlice
from .measures import (
    Kernel,
    ProperDensity,
    condition,
    is_sigma_finite,
    normalize,
    sup_distance,
    total_mass,
)
from .numerics import DEFAULT_CONFIG, Domain1D, QuadratureConfig, integrate_nested

POSITIVE = Domain1D.half_line()

# comparison grid: every density used here keeps > 0.999 of its mass on (0, 10]
THETA_GRID = np.linspace(10.0 / 2000, 10.0, 2000)

PARADOX_TOL = 1e-6


def exponential_prior() -> Kernel:
    return Kernel(lambda t: np.exp(-t), POSITIVE, "exp(-theta)", ("theta",))


def inverse_prior(axis: str = "theta") -> Kernel:
    """Improper scale prior ``1/t`` on the positive half line."""
    return Kernel(lambda t: 1.0 / t, POSITIVE, f"1/{axis}", (axis,))


def flat_h() -> Kernel:
    return Kernel(lambda p: np.ones_like(p), POSITIVE, "1", ("phi",))


def scale_h() -> Kernel:
    return inverse_prior("phi")


def truncated_h(M: float) -> Kernel:
    """Uniform density on ``(0, M]``."""
    if not M > 0:
        raise DomainError("M must be positive")
    return Kernel(lambda p: np.full_like(p, 1.0 / M), Domain1D.bounded(0.0, M), f"h_{M:g}", ("phi",))


@dataclass(frozen=True)
class StoneModel:
    """Prior ``pi(theta) * h(phi)`` for the exponential-rates model.

    ``pi`` must be proper unless ``improper_theta`` is set explicitly; ``h``
    may be anything nonnegative on a subset of the positive half line.
    """

    prior_theta: Kernel = None
    prior_phi: Kernel = None
    improper_theta: bool = False

    def __post_init__(self):
        if self.prior_theta is None:
            object.__setattr__(self, "prior_theta", exponential_prior())
        if self.prior_phi is None:
            object.__setattr__(self, "prior_phi", flat_h())
        for k in (self.prior_theta, self.prior_phi):
            if k.ndim != 1 or k.domain[0].a < 0:
                raise DomainError(f"{k.label or 'prior'} must live on the positive half line")
        if self.prior_phi.domain[0].kind == "real_line":
            raise DomainError("h must live on the positive half line")
        if not self.improper_theta and math.isinf(total_mass(self.prior_theta)):
            raise DomainError("pi(theta) is improper; pass improper_theta=True to allow it")

    def _w_map(self):
        """Substitution for ``int w^2 e^-w h(w / r) dw`` over the support of ``h``.

        Returns ``(domain_v, phi_of, w_of)`` with ``phi = phi_of(v, r)`` and
        ``w, dw/dv = w_of(v, r)``.
        """
        d = self.prior_phi.domain[0]
        if d.kind == "bounded":
            a, span = d.a, d.b - d.a

            def phi_of(v, r):
                return a + span * v

            def w_of(v, r):
                return r * (a + span * v), r * span

            return Domain1D.bounded(0.0, 1.0), phi_of, w_of
        a = d.a

        def phi_of(v, r):
            return a + v / r

        def w_of(v, r):
            return r * a + v, 1.0

        return Domain1D.half_line(), phi_of, w_of

    def inner_integrand(self):
        """``(domain_v, g)`` with ``g(r, v)`` integrating over ``v`` to ``J(r)``."""
        dom, phi_of, w_of = self._w_map()
        h = self.prior_phi

        def g(r, v):
            w, jac = w_of(v, r)
            return w * w * np.exp(-w) * h(phi_of(v, r)) * jac

        return dom, g

    def xzt_lifted(self) -> Kernel:
        """The joint of ``(x, z, theta)`` with the inner ``phi`` integral as a fourth axis."""
        dom, g = self.inner_integrand()
        prior = self.prior_theta

        def func(x, z, theta, v):
            s = theta + z
            return theta * prior(theta) / (x * x * s ** 3) * g(x * s, v)

        return Kernel(func, (POSITIVE, POSITIVE, POSITIVE, dom), "f(x,z,theta,.)", ("x", "z", "theta", "v"))

    def xzt_kernel(self, cfg: QuadratureConfig = DEFAULT_CONFIG) -> Kernel:
        """Joint density of ``(x, z, theta)`` with ``phi`` integrated out."""
        dom, g = self.inner_integrand()
        prior = self.prior_theta

        def func(x, z, theta):
            s = theta + z
            J = integrate_nested(g, (dom,), [np.ravel(x * s)], cfg).reshape(np.shape(s))
            return theta * prior(theta) / (x * x * s ** 3) * J

        return Kernel(func, (POSITIVE, POSITIVE, POSITIVE), "f(x,z,theta)", ("x", "z", "theta"))

    def z_theta_phi_kernel(self) -> Kernel:
        """Joint of ``(z, theta, phi)``: ``x`` integrated out in closed form."""
        prior, h = self.prior_theta, self.prior_phi

        def func(z, theta, phi):
            return theta * prior(theta) * h(phi) / (theta + z) ** 2

        return Kernel(func, (POSITIVE, POSITIVE, self.prior_phi.domain[0]), "f(z,theta,phi)", ("z", "theta", "phi"))


def _check_positive(**kw):
    for name, v in kw.items():
        if not np.all(np.asarray(v) > 0):
            raise DomainError(f"{name} must be positive")


def joint_init(theta, phi, x, z, prior: Kernel | None = None):
    """Joint density of ``(theta, phi, x, z)`` under ``pi(theta)`` and flat ``h``.

    >>> round(float(joint_init(1, 1, 1, 1)), 6)
    0.049787
    """
    _check_positive(theta=theta, phi=phi, x=x, z=z)
    prior = prior or exponential_prior()
    theta, phi, x, z = (np.asarray(a, dtype=float) for a in (theta, phi, x, z))
    return theta * phi ** 2 * x * np.exp(-phi * x * (theta + z)) * prior(theta)


def _shape_posterior(z, prior, power, label, cfg):
    _check_positive(z=z)
    prior = prior or exponential_prior()

    def func(theta):
        return theta * prior(theta) / (theta + z) ** power

    return normalize(func, POSITIVE, label, cfg)


def posterior_given_xz(z: float, prior: Kernel | None = None, cfg: QuadratureConfig = DEFAULT_CONFIG) -> ProperDensity:
    """Posterior of ``theta`` given ``(x, z)`` under flat ``h``: proportional to ``theta pi / (theta+z)^3``."""
    return _shape_posterior(z, prior, 3, f"f(theta|x,z={z:g})", cfg)


def naive_fz(z: float, prior: Kernel | None = None, cfg: QuadratureConfig = DEFAULT_CONFIG) -> ProperDensity:
    """Proportional to ``theta pi / (theta+z)^2``, the density obtained by treating ``theta/(theta+z)^2`` as ``f(z|theta)``."""
    return _shape_posterior(z, prior, 2, f"naive f(theta|z={z:g})", cfg)


def posterior_general_h(
    x: float,
    z: float,
    prior: Kernel | None = None,
    h: Kernel | None = None,
    cfg: QuadratureConfig = DEFAULT_CONFIG,
    improper_theta: bool = False,
) -> ProperDensity:
    """Posterior of ``theta`` given ``(x, z)`` for an arbitrary ``h``.

    Proportional to ``theta pi(theta) / (theta+z)^3 * J(x (theta+z))`` with
    ``J(r) = int w^2 e^-w h(w/r) dw``, computed by quadrature.
    """
    _check_positive(x=x, z=z)
    model = StoneModel(prior, h, improper_theta=improper_theta)
    dom, g = model.inner_integrand()
    pi = model.prior_theta

    def lifted(theta, v):
        s = theta + z
        return theta * pi(theta) / s ** 3 * g(x * s, v)

    def func(theta):
        theta = np.asarray(theta, dtype=float)
        flat = theta.ravel()
        out = np.zeros(flat.size)
        ok = flat > 0
        if ok.any():
            out[ok] = integrate_nested(lifted, (dom,), [flat[ok]], cfg)
        return out.reshape(theta.shape)

    mass = float(integrate_nested(lifted, (POSITIVE, dom), (), cfg)[0])
    label = f"f(theta|x={x:g},z={z:g}; h={model.prior_phi.label})"
    if mass == 0:
        raise ZeroSlice(f"{label} has zero mass")
    if math.isinf(mass):
        raise DivergentSlice(f"{label} has infinite mass")
    return ProperDensity(func, POSITIVE, mass, label)


def truncation_bracket(A):
    """``2 - e^-A (A^2 + 2A + 2)``, the integral of ``w^2 e^-w`` over ``(0, A)``.

    Evaluated as ``2 P(3, A)`` to avoid cancellation at small ``A``.

    >>> float(truncation_bracket(0.0))
    0.0
    """
    return 2.0 * gammainc(3.0, np.asarray(A, dtype=float))


def truncated_posterior(
    x: float, z: float, M: float, prior: Kernel | None = None, cfg: QuadratureConfig = DEFAULT_CONFIG
) -> ProperDensity:
    """Posterior of ``theta`` given ``(x, z)`` when ``h`` is uniform on ``(0, M]``."""
    _check_positive(x=x, z=z, M=M)
    prior = prior or exponential_prior()

    def func(theta):
        s = theta + z
        return theta * prior(theta) / s ** 3 * truncation_bracket(x * M * s)

    return normalize(func, POSITIVE, f"f(theta|x={x:g},z={z:g}; M={M:g})", cfg)


class Verdict(str, enum.Enum):
    CONSISTENT = "consistent"
    PARADOX = "paradox"
    CONDITIONING_FORBIDDEN = "conditioning_forbidden"


@dataclass(frozen=True)
class ParadoxReport:
    cross_density: ProperDensity
    naive_density: ProperDensity
    sup_distance: float
    z_sigma_finite: bool
    verdict: Verdict


def detect_paradox(
    x: float,
    z: float,
    prior: Kernel | None = None,
    h: Kernel | None = None,
    grid: np.ndarray = THETA_GRID,
    cfg: QuadratureConfig = DEFAULT_CONFIG,
    improper_theta: bool = False,
) -> ParadoxReport:
    """Compare the two ways of reducing to ``Z`` and judge whether either is allowed.

    The naive route always uses ``theta pi / (theta+z)^2``.  When ``Z`` is
    sigma-finite the other route is the genuine ``f(theta | z)``, conditioned
    from the joint of ``(z, theta, phi)``.  When it is not, no ``f(theta | z)``
    exists and the other route is the one that reads ``f(theta | x, z)`` as if
    it were ``f(theta | z)``.
    """
    _check_positive(x=x, z=z)
    model = StoneModel(prior, h, improper_theta=improper_theta)
    zjoint = model.z_theta_phi_kernel()
    z_sf = is_sigma_finite(zjoint, "z", cfg=cfg)
    naive = naive_fz(z, model.prior_theta, cfg)
    if z_sf:
        zt = Kernel(
            _phi_integrated(zjoint, cfg), (POSITIVE, POSITIVE), "f(z,theta)", ("z", "theta"))
        cross = condition(zt, "z", z, cfg=cfg)
    else:
        cross = posterior_general_h(x, z, model.prior_theta, model.prior_phi, cfg, improper_theta)
    dist = sup_distance(cross, naive, grid)
    if not z_sf:
        verdict = Verdict.CONDITIONING_FORBIDDEN
    elif dist > PARADOX_TOL:
        verdict = Verdict.PARADOX
    else:
        verdict = Verdict.CONSISTENT
    return ParadoxReport(cross, naive, dist, z_sf, verdict)


def _phi_integrated(zjoint: Kernel, cfg: QuadratureConfig):
    dom = zjoint.domain[2]

    def func(z, theta):
        z, theta = np.broadcast_arrays(np.asarray(z, dtype=float), np.asarray(theta, dtype=float))
        vals = integrate_nested(zjoint, (dom,), [z.ravel(), theta.ravel()], cfg)
        return vals.reshape(z.shape)

    return func


@dataclass(frozen=True)
class StoneFigure:
    """Normalized posterior curves on a common theta grid."""

    theta: np.ndarray
    truncated: dict[float, np.ndarray]
    cross: np.ndarray
    dd: np.ndarray
    z: float
    M: float


def stone_figure(
    z: float = 1.0,
    M: float = 500.0,
    xs=(1.0, 0.001),
    prior: Kernel | None = None,
    grid: np.ndarray = THETA_GRID,
    cfg: QuadratureConfig = DEFAULT_CONFIG,
) -> StoneFigure:
    """Truncated-``h`` posteriors at each ``x`` alongside the flat-``h`` and ``1/phi`` curves."""
    truncated = {float(x): truncated_posterior(x, z, M, prior, cfg)(grid) for x in xs}
    cross = posterior_given_xz(z, prior, cfg)(grid)
    dd = naive_fz(z, prior, cfg)(grid)
    return StoneFigure(np.asarray(grid), truncated, cross, dd, float(z), float(M))
