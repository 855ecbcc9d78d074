"""Densities that may integrate to infinity, and the operations that respect them.

A :class:`Kernel` is a nonnegative function on a product of intervals.  Its
marginals are computed by integrating the other axes out, and may be
infinite at every point; a quantity is sigma-finite exactly when its
marginal density is finite (almost everywhere).  Conditioning, and hence
Bayes' rule, is only offered for sigma-finite conditioning quantities, and
always returns a unit-mass density.

Sigma-finiteness is checked on a deterministic probe grid (see
:func:`sigmafinite.numerics.probe_points`), not proved.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from itertools import product
from typing import Callable, Sequence, Union

import numpy as np

from .exceptions import DivergentSlice, NotSigmaFinite, ZeroEvidence, ZeroSlice
from .numerics import (
    DEFAULT_CONFIG,
    Domain1D,
    QuadratureConfig,
    integrate,
    integrate_nested,
    probe_points,
)

AxisId = Union[int, str]

N_PROBES = 101
_PROBE_BATCH = 8


@dataclass(frozen=True)
class Kernel:
    """Nonnegative function of one or more real arguments with declared support.

    ``func`` must accept numpy arrays (one per axis) and broadcast.  Outside
    ``domain`` the kernel is zero, so ``func`` need not be defined there.
    """

    func: Callable[..., np.ndarray]
    domain: tuple[Domain1D, ...]
    label: str = ""
    axes: tuple[str, ...] = ()

    def __post_init__(self):
        if isinstance(self.domain, Domain1D):
            object.__setattr__(self, "domain", (self.domain,))
        else:
            object.__setattr__(self, "domain", tuple(self.domain))
        if not self.axes:
            object.__setattr__(self, "axes", tuple(f"x{i}" for i in range(len(self.domain))))
        if len(self.axes) != len(self.domain):
            raise ValueError("one axis name per domain is required")

    @property
    def ndim(self) -> int:
        return len(self.domain)

    def __call__(self, *args):
        if len(args) != self.ndim:
            raise TypeError(f"{self.label or 'kernel'} takes {self.ndim} arguments, got {len(args)}")
        args = np.broadcast_arrays(*[np.asarray(a, dtype=float) for a in args])
        inside = np.ones(args[0].shape, dtype=bool)
        for a, d in zip(args, self.domain):
            inside &= d.contains(a)
        with np.errstate(all="ignore"):
            vals = np.asarray(self.func(*args), dtype=float)
        vals = np.broadcast_to(vals, inside.shape)
        return np.where(inside, vals, 0.0)

    def axis_index(self, axis: AxisId) -> int:
        if isinstance(axis, str):
            return self.axes.index(axis)
        if not -self.ndim <= axis < self.ndim:
            raise IndexError(f"axis {axis} out of range")
        return axis % self.ndim

    def scaled(self, c: float) -> "Kernel":
        if c <= 0:
            raise ValueError("scale must be positive")
        func = self.func
        return Kernel(lambda *a: c * func(*a), self.domain, self.label, self.axes)


def lebesgue(domain: Domain1D, label: str = "Lebesgue") -> Kernel:
    return Kernel(lambda t: np.ones_like(t), domain, label)


def product_kernel(*kernels: Kernel, label: str = "", axes: Sequence[str] = ()) -> Kernel:
    """Independent joint ``k1(a) * k2(b) * ...`` of one-dimensional kernels."""
    for k in kernels:
        if k.ndim != 1:
            raise ValueError("product_kernel takes one-dimensional kernels")

    def func(*args):
        out = np.ones(np.broadcast(*args).shape)
        for k, a in zip(kernels, args):
            out = out * k.func(a)
        return out

    domain = tuple(k.domain[0] for k in kernels)
    return Kernel(func, domain, label or " * ".join(k.label for k in kernels), tuple(axes))


@dataclass(frozen=True)
class ProperDensity:
    """Unit-mass density ``func(t) / normalizer`` on ``domain``."""

    func: Callable[[np.ndarray], np.ndarray]
    domain: Domain1D
    normalizer: float
    label: str = ""

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        with np.errstate(all="ignore"):
            vals = np.broadcast_to(np.asarray(self.func(t), dtype=float), t.shape)
        return np.where(self.domain.contains(t), vals / self.normalizer, 0.0)

    def mass(self, cfg: QuadratureConfig = DEFAULT_CONFIG) -> float:
        return integrate(self, self.domain, cfg)

    def expect(self, g: Callable[[np.ndarray], np.ndarray], cfg: QuadratureConfig = DEFAULT_CONFIG) -> float:
        """Expectation of a nonnegative function ``g``."""
        return integrate(lambda t: g(t) * self(t), self.domain, cfg)

    def mean(self, cfg: QuadratureConfig = DEFAULT_CONFIG) -> float:
        if self.domain.a >= 0:
            return self.expect(lambda t: t, cfg)
        # split into positive and negative parts so the integrands stay nonnegative
        pos = integrate(lambda t: np.maximum(t, 0.0) * self(t), self.domain, cfg)
        neg = integrate(lambda t: np.maximum(-t, 0.0) * self(t), self.domain, cfg)
        return pos - neg


def normalize(
    func: Callable[[np.ndarray], np.ndarray],
    domain: Domain1D,
    label: str = "",
    cfg: QuadratureConfig = DEFAULT_CONFIG,
) -> ProperDensity:
    """Renormalize a one-dimensional kernel to unit mass."""
    mass = integrate(func, domain, cfg)
    if mass == 0:
        raise ZeroSlice(f"{label or 'kernel'} has zero mass")
    if math.isinf(mass):
        raise DivergentSlice(f"{label or 'kernel'} has infinite mass")
    return ProperDensity(func, domain, mass, label)


@dataclass
class MarginalResult:
    """Marginal density on the kept axes, with its probe-based verdict."""

    density: Callable[..., np.ndarray]
    sigma_finite: bool
    probes: tuple[np.ndarray, ...]
    probe_values: np.ndarray
    _domains: tuple[Domain1D, ...] = field(repr=False, default=())
    _cfg: QuadratureConfig = field(repr=False, default=DEFAULT_CONFIG)

    @cached_property
    def mass(self) -> float:
        if not self.sigma_finite:
            return math.inf
        density = self.density
        return float(integrate_nested(lambda *a: density(*a), self._domains, (), self._cfg)[0])


def total_mass(k: Kernel, cfg: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """Integral of ``k`` over its whole domain (possibly ``inf``).

    >>> round(total_mass(Kernel(lambda t: np.exp(-t), Domain1D.half_line())), 8)
    1.0
    """
    return float(integrate_nested(k, k.domain, (), cfg)[0])


def _batched(f, domains, pts, cfg, size=_PROBE_BATCH):
    """``integrate_nested`` over ``pts`` in small batches.

    Rows whose inner integrals peak in different places force a shared
    subdivision onto every row, so large batches cost more than they save.
    """
    total = pts[0].size
    out = np.empty(total)
    for start in range(0, total, size):
        out[start:start + size] = integrate_nested(f, domains, [p[start:start + size] for p in pts], cfg)
    return out


def _resolve(joint: Kernel, axis) -> tuple[int, ...]:
    if isinstance(axis, (tuple, list)):
        idx = tuple(joint.axis_index(a) for a in axis)
    else:
        idx = (joint.axis_index(axis),)
    if len(set(idx)) != len(idx):
        raise ValueError("repeated axis")
    return idx


def _integrator(joint: Kernel, keep: tuple[int, ...]):
    """Return ``(rest_domains, f)`` with ``f(*kept, *rest)`` calling the joint in its own order."""
    rest = tuple(i for i in range(joint.ndim) if i not in keep)
    if not rest:
        raise ValueError("nothing left to integrate out")
    order = keep + rest

    def f(*args):
        full = [None] * joint.ndim
        for pos, a in zip(order, args):
            full[pos] = a
        return joint(*full)

    return tuple(joint.domain[i] for i in rest), f


def _probe_grid(joint: Kernel, keep: tuple[int, ...], n_probes: int) -> tuple[np.ndarray, ...]:
    per_axis = n_probes if len(keep) == 1 else math.ceil(n_probes ** (1.0 / len(keep)))
    grids = [probe_points(joint.domain[i], per_axis) for i in keep]
    if len(grids) == 1:
        return (grids[0],)
    pts = np.array(list(product(*grids)))
    return tuple(pts[:, k] for k in range(len(keep)))


def marginal(
    joint: Kernel,
    keep_axis: AxisId | Sequence[AxisId],
    n_probes: int = N_PROBES,
    cfg: QuadratureConfig = DEFAULT_CONFIG,
) -> MarginalResult:
    """Integrate every other axis out of ``joint``.

    The returned density may be ``inf``.  ``sigma_finite`` records whether
    it is finite at every probe point; with several kept axes the probes
    form a product grid of about ``n_probes`` points.
    """
    keep = _resolve(joint, keep_axis)
    rest_domains, f = _integrator(joint, keep)

    def density(*pts):
        pts = np.broadcast_arrays(*[np.asarray(p, dtype=float) for p in pts])
        shape = pts[0].shape
        vals = _batched(f, rest_domains, [p.ravel() for p in pts], cfg)
        return vals.reshape(shape)

    probes = _probe_grid(joint, keep, n_probes)
    values = _batched(f, rest_domains, probes, cfg)
    return MarginalResult(
        density=density,
        sigma_finite=bool(np.isfinite(values).all()),
        probes=probes,
        probe_values=values,
        _domains=tuple(joint.domain[i] for i in keep),
        _cfg=cfg,
    )


def is_sigma_finite(
    joint: Kernel,
    axis: AxisId | Sequence[AxisId],
    n_probes: int = N_PROBES,
    cfg: QuadratureConfig = DEFAULT_CONFIG,
) -> bool:
    """Whether the marginal density on ``axis`` is finite at every probe.

    Probes are evaluated in growing batches and the check stops at the first
    infinite value.
    """
    keep = _resolve(joint, axis)
    rest_domains, f = _integrator(joint, keep)
    probes = _probe_grid(joint, keep, n_probes)
    start, size = 0, 1
    total = probes[0].size
    while start < total:
        batch = [p[start:start + size] for p in probes]
        if not np.isfinite(integrate_nested(f, rest_domains, batch, cfg)).all():
            return False
        start += size
        size = min(2 * size, _PROBE_BATCH)
    return True


def condition(
    joint: Kernel,
    given_axis: AxisId | Sequence[AxisId],
    given_value: float | Sequence[float],
    n_probes: int = N_PROBES,
    cfg: QuadratureConfig = DEFAULT_CONFIG,
) -> ProperDensity:
    """Conditional density of the single remaining axis given the others.

    Raises :class:`NotSigmaFinite` when the conditioning quantity is not
    sigma-finite, whatever the slice looks like.
    """
    given = _resolve(joint, given_axis)
    values = np.atleast_1d(np.asarray(given_value, dtype=float))
    if values.size != len(given):
        raise ValueError("one given value per conditioning axis")
    free = [i for i in range(joint.ndim) if i not in given]
    if len(free) != 1:
        raise ValueError("conditioning must leave exactly one free axis")
    if not is_sigma_finite(joint, given, n_probes, cfg):
        names = ", ".join(joint.axes[i] for i in given)
        raise NotSigmaFinite(f"({names}) is not sigma-finite; its conditional law does not exist")
    (j,) = free

    def slice_(t):
        args = [None] * joint.ndim
        for i, v in zip(given, values):
            args[i] = np.full(np.shape(t), v)
        args[j] = t
        return joint(*args)

    label = f"{joint.label}({joint.axes[j]} | " + ", ".join(
        f"{joint.axes[i]}={v:g}" for i, v in zip(given, values)) + ")"
    return normalize(slice_, joint.domain[j], label, cfg)


def bayes_posterior(
    prior: Kernel,
    likelihood: Callable[[float, np.ndarray], np.ndarray],
    x_obs: float,
    cfg: QuadratureConfig = DEFAULT_CONFIG,
) -> ProperDensity:
    """Posterior ``f(x_obs | theta) prior(theta) / f(x_obs)``.

    ``likelihood(x, theta)`` must be vectorised in ``theta``.  The prior may
    be improper; the posterior exists iff the evidence ``f(x_obs)`` is finite
    and positive.
    """
    if prior.ndim != 1:
        raise ValueError("prior must be one-dimensional")

    def unnorm(theta):
        return likelihood(x_obs, theta) * prior(theta)

    evidence = integrate(unnorm, prior.domain[0], cfg)
    if math.isinf(evidence):
        raise NotSigmaFinite(f"marginal density of the data is infinite at x={x_obs:g}")
    if evidence == 0:
        raise ZeroEvidence(f"marginal density of the data is zero at x={x_obs:g}")
    return ProperDensity(unnorm, prior.domain[0], evidence, f"posterior | x={x_obs:g}")


def sup_distance(p: Callable, q: Callable, grid: np.ndarray) -> float:
    return float(np.max(np.abs(np.asarray(p(grid)) - np.asarray(q(grid)))))
