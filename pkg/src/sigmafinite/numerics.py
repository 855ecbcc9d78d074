"""Adaptive quadrature for nonnegative, possibly improper, kernels.

Integrals are returned as extended reals: a nonnegative float, or ``math.inf``
when the integral is judged divergent.

Every domain is split at an interior point into two *ends*, each
parameterised by ``s`` in ``(0, 1/2]`` so that ``s -> 0`` runs towards the
endpoint (finite or infinite).  An end is cut into geometric shells
``[2**-(j+1), 2**-j]``; on a half line the substitution ``u = t / (1 + t)``
turns every shell at the infinite end into a doubling of the truncation
radius.  Shells are integrated with an adaptive Gauss-Legendre rule and
summed outwards until two consecutive shells are negligible.  An end yields
``inf`` when it never reaches that state, when the running total passes the
divergence threshold, or when shell contributions keep growing through
several doublings out to a radius of about ``2**10`` (infinite ends only).  The last rule is what
catches divergence of iterated integrals whose inner mass drifts out of
numerical reach; its price is that a proper kernel spread flatly over more
than about three decades is also reported as ``inf``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .exceptions import InvalidDomain, NegativeDensity

__all__ = [
    "Domain1D",
    "QuadratureConfig",
    "DEFAULT_CONFIG",
    "integrate",
    "integrate2d",
    "integrate_many",
    "integrate_nested",
    "is_infinite",
    "probe_points",
]

logger = logging.getLogger(__name__)

_GAUSS_NODES, _GAUSS_WEIGHTS = np.polynomial.legendre.leggauss(8)
_MIN_SHELLS = 12
_MAX_SHELLS = 100
_SHELL_CHUNK = 4
_GROWTH_RUN = 5
_MAX_BLOCK = 4_000_000
_GROWTH_SHELL = 10
_STALL_PASSES = 6


@dataclass(frozen=True)
class QuadratureConfig:
    rel_tol: float = 1e-9
    abs_tol: float = 1e-12
    max_subdivisions: int = 2000
    divergence_threshold: float = 1e12

    def __post_init__(self):
        if not (0 < self.rel_tol < 1):
            raise ValueError("rel_tol must lie in (0, 1)")
        if self.abs_tol <= 0 or self.max_subdivisions <= 0 or self.divergence_threshold <= 0:
            raise ValueError("abs_tol, max_subdivisions and divergence_threshold must be positive")


DEFAULT_CONFIG = QuadratureConfig()


@dataclass(frozen=True)
class Domain1D:
    """An interval of the real line: ``(a, b)``, ``(a, inf)`` or ``(-inf, inf)``.

    Use the :meth:`bounded`, :meth:`half_line` and :meth:`real_line`
    constructors rather than the raw initializer.
    """

    kind: str
    a: float = -math.inf
    b: float = math.inf

    def __post_init__(self):
        if self.kind == "bounded":
            if not (math.isfinite(self.a) and math.isfinite(self.b)):
                raise InvalidDomain("bounded domain needs finite endpoints")
            if not self.a < self.b:
                raise InvalidDomain(f"degenerate interval ({self.a}, {self.b})")
        elif self.kind == "half_line":
            if not math.isfinite(self.a) or self.b != math.inf:
                raise InvalidDomain("half line needs a finite left endpoint")
        elif self.kind == "real_line":
            if self.a != -math.inf or self.b != math.inf:
                raise InvalidDomain("real line takes no endpoints")
        else:
            raise InvalidDomain(f"unknown domain kind {self.kind!r}")

    @classmethod
    def bounded(cls, a: float, b: float) -> "Domain1D":
        return cls("bounded", float(a), float(b))

    @classmethod
    def half_line(cls, a: float = 0.0) -> "Domain1D":
        return cls("half_line", float(a), math.inf)

    @classmethod
    def real_line(cls) -> "Domain1D":
        return cls("real_line")

    def contains(self, t):
        t = np.asarray(t, dtype=float)
        return (t >= self.a) & (t <= self.b)

    def intersect(self, a: float, b: float) -> "Domain1D | None":
        """Bounded intersection with ``[a, b]``, or None when it is empty."""
        lo, hi = max(self.a, a), min(self.b, b)
        if not lo < hi:
            return None
        return Domain1D.bounded(lo, hi)

    def from_unit(self, u):
        """Map ``u`` in ``(0, 1)`` onto the domain (monotone)."""
        u = np.asarray(u, dtype=float)
        if self.kind == "bounded":
            return self.a + (self.b - self.a) * u
        if self.kind == "half_line":
            return self.a + u / (1.0 - u)
        return (u - 0.5) / (u * (1.0 - u))

    def _ends(self):
        """Pairs ``(map, unbounded)``; ``map(s)`` returns nodes and Jacobian."""
        a, b = self.a, self.b
        if self.kind == "bounded":
            w = b - a
            return (
                (lambda s: (a + w * s, np.full_like(s, w)), False),
                (lambda s: (b - w * s, np.full_like(s, w)), False),
            )
        if self.kind == "half_line":
            return (
                (lambda s: (a + s / (1.0 - s), 1.0 / (1.0 - s) ** 2), False),
                (lambda s: (a + (1.0 - s) / s, 1.0 / (s * s)), True),
            )

        def left(s):
            q = s * (1.0 - s)
            return (s - 0.5) / q, (s * s - s + 0.5) / (q * q)

        def right(s):
            t, jac = left(s)
            return -t, jac

        return (left, True), (right, True)


def probe_points(domain: Domain1D, n: int = 101) -> np.ndarray:
    """Deterministic probe grid: ``n`` equally spaced quantiles of the unit map."""
    u = np.arange(1, n + 1) / (n + 1)
    return domain.from_unit(u)


def is_infinite(mass) -> bool:
    return math.isinf(mass)


def _rule(g, end, lo, hi, rows):
    """Gauss-Legendre estimate on each ``[lo_k, hi_k]``; returns (values, infinite_rows)."""
    nrows = rows.size
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    s = (mid[:, None] + half[:, None] * _GAUSS_NODES[None, :]).ravel()
    t, jac = end(s)
    vals = np.asarray(g(t, rows), dtype=float)
    if vals.ndim == 1:
        vals = vals[None, :]
    vals = np.broadcast_to(vals, (nrows, s.size))
    if np.isnan(vals).any():
        raise ValueError("kernel returned NaN at a quadrature node")
    if (vals < 0).any():
        raise NegativeDensity(f"kernel is negative at t={t[np.nonzero((vals < 0).any(axis=0))[0][0]]!r}")
    with np.errstate(over="ignore"):
        weighted = vals * jac
    # an overflowing product counts as an infinite node value
    bad = np.isinf(weighted)
    inf_rows = bad.any(axis=1)
    if inf_rows.any():
        weighted = np.where(bad, 0.0, weighted)
    weighted = weighted.reshape(nrows, lo.size, _GAUSS_NODES.size)
    return (weighted @ _GAUSS_WEIGHTS) * half, inf_rows


def _shells(g, end, j0, j1, rows, base, cfg, noisy=False):
    """Adaptively integrate shells ``j0 .. j1-1`` of one end for ``rows``.

    Returns per-shell contributions of shape ``(rows.size, j1 - j0)`` and
    the rows that produced an infinite node value.
    """
    nrows = rows.size
    nshell = j1 - j0
    hi = 2.0 ** -np.arange(j0, j1, dtype=float)
    lo = 0.5 * hi
    owner = np.arange(nshell)
    coarse, inf_rows = _rule(g, end, lo, hi, rows)
    splits = 0
    best, stalled = math.inf, 0
    while True:
        mid = 0.5 * (lo + hi)
        both, bad = _rule(g, end, np.concatenate([lo, mid]), np.concatenate([mid, hi]), rows)
        inf_rows |= bad
        k = lo.size
        left, right = both[:, :k], both[:, k:]
        fine = left + right
        err = np.abs(fine - coarse)
        err[inf_rows] = 0.0
        tol = np.maximum(cfg.rel_tol * (base + fine.sum(axis=1)), cfg.abs_tol)
        unsatisfied = err.sum(axis=1) > tol
        if not unsatisfied.any():
            break
        score = (err[unsatisfied] / tol[unsatisfied, None]).max(axis=0)
        ratio = (err.sum(axis=1) / tol).max()
        # refinement no longer pays off, typically noise from an inner quadrature
        stalled = stalled + 1 if ratio > 0.9 * best else 0
        best = min(best, ratio)
        if noisy and stalled >= _STALL_PASSES:
            logger.debug("quadrature refinement stalled; error ratio %.3g", ratio)
            break
        pick = np.nonzero(score > 1.0 / k)[0]
        # the next pass evaluates 2 * _GAUSS_NODES.size nodes per interval for every row
        fit = _MAX_BLOCK // (2 * _GAUSS_NODES.size * nrows) - k
        room = min(cfg.max_subdivisions - splits, fit)
        if room <= 0:
            logger.debug("quadrature subdivision budget exhausted; error estimate %.3g", err.sum(axis=1).max())
            break
        if pick.size > room:
            pick = pick[np.argsort(score[pick])[::-1][:room]]
        splits += pick.size
        keep = np.ones(k, dtype=bool)
        keep[pick] = False
        # split intervals inherit their half-interval estimates as the new coarse values
        lo = np.concatenate([lo[keep], lo[pick], mid[pick]])
        hi = np.concatenate([hi[keep], mid[pick], hi[pick]])
        owner = np.concatenate([owner[keep], owner[pick], owner[pick]])
        coarse = np.concatenate([fine[:, keep], left[:, pick], right[:, pick]], axis=1)
    onehot = np.zeros((owner.size, nshell))
    onehot[np.arange(owner.size), owner] = 1.0
    return fine @ onehot, inf_rows


def integrate_many(
    g: Callable[[np.ndarray, np.ndarray], np.ndarray],
    domain: Domain1D,
    cfg: QuadratureConfig = DEFAULT_CONFIG,
    nrows: int = 1,
    noisy: bool = False,
) -> np.ndarray:
    """Integrate ``nrows`` kernels at once.

    ``g(t, rows)`` receives a 1-D array of nodes and an index array of the
    rows still being integrated, and returns an array of shape
    ``(rows.size, t.size)``.  Subdivision is shared between rows; divergence is
    decided per row.  Set ``noisy`` when ``g`` is itself computed by
    quadrature: refinement then stops once it no longer reduces the error.
    Returns an array of extended reals.
    """
    total = np.zeros(nrows)
    infinite = np.zeros(nrows, dtype=bool)
    for end, unbounded in domain._ends():
        done = infinite.copy()
        end_sum = np.zeros(nrows)
        run = np.zeros(nrows, dtype=int)
        growth = np.zeros(nrows, dtype=int)
        prev = np.zeros(nrows)
        j = 1
        while j <= _MAX_SHELLS and not done.all():
            j1 = min(max(j + _SHELL_CHUNK, _MIN_SHELLS + 1), _MAX_SHELLS + 1)
            rows = np.nonzero(~done)[0]
            part, bad = _shells(g, end, j, j1, rows, total[rows] + end_sum[rows], cfg, noisy)
            contrib = np.zeros((nrows, j1 - j))
            contrib[rows] = part
            infinite[rows[bad]] = True
            done[rows[bad]] = True
            for k in range(j1 - j):
                shell = j + k
                c = contrib[:, k]
                active = ~done
                end_sum[active] += c[active]
                est = total + end_sum
                small = c <= cfg.rel_tol * est
                run = np.where(small, run + 1, 0)
                growth = np.where(~small & (c >= prev * (1.0 - 1e-6)), growth + 1, 0)
                prev = c
                over = active & (est > cfg.divergence_threshold)
                # shell mass that keeps growing out to a large radius: no decay under doubling
                grows = active & (growth >= _GROWTH_RUN) & (shell >= _GROWTH_SHELL) & unbounded
                # an all-zero row keeps looking for mass further out
                settled = active & (run >= 2) & (shell >= _MIN_SHELLS) & (est > 0)
                infinite |= over | grows
                done |= over | grows | settled
            j = j1
        # the tail never decayed within the shell budget
        infinite |= ~done & (end_sum > 0)
        total += end_sum
    return np.where(infinite, math.inf, total)


def integrate(
    f: Callable[[np.ndarray], np.ndarray],
    d: Domain1D,
    cfg: QuadratureConfig = DEFAULT_CONFIG,
) -> float:
    """Integral of a vectorised nonnegative function over ``d``.

    >>> round(integrate(lambda t: np.exp(-t), Domain1D.half_line()), 8)
    1.0
    >>> integrate(lambda t: np.ones_like(t), Domain1D.half_line())
    inf
    """

    def g(t, rows):
        return np.broadcast_to(np.asarray(f(t), dtype=float), t.shape)

    return float(integrate_many(g, d, cfg)[0])


def integrate_nested(
    f: Callable[..., np.ndarray],
    domains: Sequence[Domain1D],
    fixed: Sequence[np.ndarray] = (),
    cfg: QuadratureConfig = DEFAULT_CONFIG,
) -> np.ndarray:
    """Iterated integral of ``f(*fixed, t_1, ..., t_k)`` over ``domains``.

    ``fixed`` holds equal-length 1-D arrays of coordinates that are not
    integrated; the result has one entry per fixed row (one entry when
    ``fixed`` is empty).  The first domain is the outermost integral, and an
    infinite inner integral at any outer node makes the row infinite.
    """
    fixed = [np.asarray(c, dtype=float) for c in fixed]
    nrows = fixed[0].size if fixed else 1
    head, rest = domains[0], domains[1:]

    def g(t, rows):
        m = t.size
        args = [np.repeat(c[rows], m) for c in fixed] + [np.tile(t, rows.size)]
        if rest:
            vals = integrate_nested(f, rest, args, cfg)
        else:
            vals = np.broadcast_to(np.asarray(f(*args), dtype=float), args[-1].shape)
        return vals.reshape(rows.size, m)

    return integrate_many(g, head, cfg, nrows, noisy=bool(rest))


def integrate2d(
    f: Callable[[np.ndarray, np.ndarray], np.ndarray],
    dx: Domain1D,
    dy: Domain1D,
    cfg: QuadratureConfig = DEFAULT_CONFIG,
) -> float:
    """Iterated integral of ``f(x, y)``: inner over ``dy``, outer over ``dx``."""
    return float(integrate_nested(f, (dx, dy), (), cfg)[0])
