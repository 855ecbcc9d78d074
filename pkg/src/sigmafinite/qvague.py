"""q-vague convergence: vague convergence up to a positive rescaling.

A sequence of measures ``Pi_n`` converges q-vaguely to ``Pi`` when some
``a_n Pi_n`` converges vaguely, that is against every continuous compactly
supported test function.  Here the test functions are a finite battery of
triangular bumps, the scales are fixed by one reference bump, and a
"verdict" is a numerical certificate on a list of indices, not a proof.

The Jeffreys-Lindley example lives here too: ``1/2 delta_0 + 1/2 N(0, n^2)``
converges to ``delta_0``, not to ``1/2 delta_0 + Lebesgue``, which is why the
posterior mass at 0 tends to 1 rather than staying below 0.285.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.special import expit

from .exceptions import ReferenceDegenerate
from .measures import Kernel
from .numerics import DEFAULT_CONFIG, Domain1D, QuadratureConfig, integrate

QV_TOL = 1e-3
# slack when deciding that an error sequence does not increase
MONOTONE_SLACK = 1e-9


@dataclass(frozen=True)
class MixedMeasure:
    """Finitely many atoms plus an absolutely continuous part (either may be absent)."""

    atoms: tuple[tuple[float, float], ...] = ()
    ac_part: Kernel | None = None
    label: str = ""

    def __post_init__(self):
        atoms = tuple((float(loc), float(w)) for loc, w in self.atoms)
        object.__setattr__(self, "atoms", atoms)
        if any(not w > 0 for _, w in atoms):
            raise ValueError("atom weights must be positive")
        if len({loc for loc, _ in atoms}) != len(atoms):
            raise ValueError("atom locations must be distinct")
        if self.ac_part is not None and self.ac_part.ndim != 1:
            raise ValueError("the absolutely continuous part must be one-dimensional")

    @classmethod
    def from_kernel(cls, k: Kernel, label: str = "") -> "MixedMeasure":
        return cls((), k, label or k.label)

    def scaled(self, c: float) -> "MixedMeasure":
        if not c > 0:
            raise ValueError("scale must be positive")
        ac = self.ac_part.scaled(c) if self.ac_part is not None else None
        return MixedMeasure(tuple((loc, c * w) for loc, w in self.atoms), ac, self.label)

    def reweighted(self, weight: Callable[[np.ndarray], np.ndarray], label: str = "") -> "MixedMeasure":
        """The measure with density ``weight`` against this one (``weight >= 0``)."""
        atoms = tuple((loc, w * float(weight(np.asarray(loc)))) for loc, w in self.atoms)
        atoms = tuple(a for a in atoms if a[1] > 0)
        ac = None
        if self.ac_part is not None:
            k = self.ac_part
            ac = Kernel(lambda t: weight(t) * k.func(t), k.domain, label, k.axes)
        return MixedMeasure(atoms, ac, label or self.label)


@dataclass(frozen=True)
class TestFunction:
    """Continuous compactly supported function, piecewise smooth between ``breakpoints``."""

    __test__ = False  # not a pytest class

    func: Callable[[np.ndarray], np.ndarray]
    breakpoints: tuple[float, ...]

    def __call__(self, t):
        return self.func(np.asarray(t, dtype=float))

    def __add__(self, other: "TestFunction") -> "TestFunction":
        f, g = self.func, other.func
        return TestFunction(lambda t: f(t) + g(t), tuple(sorted(set(self.breakpoints + other.breakpoints))))

    def __rmul__(self, c: float) -> "TestFunction":
        if c < 0:
            raise ValueError("test functions must stay nonnegative")
        f = self.func
        return TestFunction(lambda t: c * f(t), self.breakpoints)


def bump(center: float, half_width: float) -> TestFunction:
    """Triangle of height 1 on ``[center - half_width, center + half_width]``.

    >>> float(bump(0.0, 1.0)(0.5))
    0.5
    """
    if not half_width > 0:
        raise ValueError("half_width must be positive")
    return TestFunction(
        lambda t: np.maximum(0.0, 1.0 - np.abs(t - center) / half_width),
        (center - half_width, center, center + half_width),
    )


@dataclass(frozen=True)
class TestFunctionFamily:
    __test__ = False

    centers: tuple[float, ...]
    half_width: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "centers", tuple(float(c) for c in self.centers))
        if not self.centers:
            raise ValueError("a family needs at least one bump")
        if not self.half_width > 0:
            raise ValueError("half_width must be positive")

    @classmethod
    def real_line(cls, n: int = 25, lo: float = -10.0, hi: float = 10.0, half_width: float = 0.5):
        return cls(tuple(np.linspace(lo, hi, n)), half_width)

    @classmethod
    def half_line(cls, n: int = 25, lo: float = 1.0, hi: float = 20.0, half_width: float = 0.5):
        return cls(tuple(np.linspace(lo, hi, n)), half_width)

    def with_centers(self, extra: Sequence[float]) -> "TestFunctionFamily":
        """Add bumps at ``extra`` (e.g. atom locations) that are not already centers."""
        new = [c for c in extra if not any(math.isclose(c, d, abs_tol=1e-12) for d in self.centers)]
        return TestFunctionFamily(tuple(sorted(self.centers + tuple(new))), self.half_width)

    def __len__(self):
        return len(self.centers)

    def __iter__(self):
        return (bump(c, self.half_width) for c in self.centers)


def pair_integral(m: MixedMeasure, phi: TestFunction, cfg: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """``int phi dm``: exact sum over atoms plus quadrature over each smooth piece of ``phi``.

    >>> pair_integral(MixedMeasure(atoms=((0.0, 1.0),)), bump(0.0, 0.5))
    1.0
    """
    total = sum(w * float(phi(loc)) for loc, w in m.atoms)
    if m.ac_part is None:
        return total
    k = m.ac_part
    dom = k.domain[0]
    pts = phi.breakpoints
    for a, b in zip(pts[:-1], pts[1:]):
        piece = dom.intersect(a, b)
        if piece is not None:
            total += integrate(lambda t: k(t) * phi(t), piece, cfg)
    return total


@dataclass(frozen=True)
class QVagueVerdict:
    """Outcome of :func:`check_qvague`.

    ``errors[i]`` is the worst bump error at ``indices[i]``, relative to the
    candidate's integral of the reference bump; ``worst_error`` is the last.
    """

    converges: bool
    scale_sequence: tuple[float, ...]
    worst_error: float
    limit_label: str
    errors: tuple[float, ...] = ()
    indices: tuple = ()
    reference: float = math.nan


def check_qvague(
    seq: Callable[[object], MixedMeasure],
    candidate: MixedMeasure,
    family: TestFunctionFamily,
    indices: Sequence,
    reference: float | None = None,
    tol: float = QV_TOL,
    cfg: QuadratureConfig = DEFAULT_CONFIG,
) -> QVagueVerdict:
    """Does ``seq(n)`` converge q-vaguely to ``candidate`` along ``indices``?

    ``a_n`` matches ``seq(n)`` to the candidate on the reference bump, by
    default the family member the candidate weighs most (first on ties).
    Convergence means the worst error over the family never increases along
    ``indices`` and ends below ``tol``.
    """
    if not indices:
        raise ValueError("need at least one index")
    bumps = list(family)
    target = np.array([pair_integral(candidate, phi, cfg) for phi in bumps])
    if reference is None:
        # first bump within rounding of the largest candidate integral
        ref = int(np.argmax(target >= target.max() * (1 - 1e-9)))
    else:
        ref = int(np.argmin(np.abs(np.asarray(family.centers) - reference)))
        if not math.isclose(family.centers[ref], reference, abs_tol=1e-12):
            raise ValueError(f"no bump centered at {reference}")
    if not target[ref] > 0 or math.isinf(target[ref]):
        raise ReferenceDegenerate(f"candidate integrates the bump at {family.centers[ref]:g} to {target[ref]:g}")
    scales, errors = [], []
    for n in indices:
        m = seq(n)
        vals = np.array([pair_integral(m, phi, cfg) for phi in bumps])
        if not vals[ref] > 0:
            raise ReferenceDegenerate(f"sequence member {n!r} integrates the reference bump to 0")
        a = target[ref] / vals[ref]
        with np.errstate(invalid="ignore"):
            diff = np.abs(a * vals - target)
        diff = np.where(np.isinf(vals) | np.isinf(target), math.inf, diff)
        scales.append(float(a))
        errors.append(float(diff.max() / target[ref]))
    monotone = all(e1 <= e0 + MONOTONE_SLACK for e0, e1 in zip(errors, errors[1:]))
    return QVagueVerdict(
        converges=bool(monotone and errors[-1] < tol),
        scale_sequence=tuple(scales),
        worst_error=errors[-1],
        limit_label=candidate.label,
        errors=tuple(errors),
        indices=tuple(indices),
        reference=family.centers[ref],
    )


def posterior_convergence_check(
    prior_seq: Callable[[object], MixedMeasure],
    likelihood: Callable[[float, np.ndarray], np.ndarray],
    x_obs: float,
    candidate_prior: MixedMeasure,
    family: TestFunctionFamily,
    indices: Sequence,
    reference: float | None = None,
    tol: float = QV_TOL,
    cfg: QuadratureConfig = DEFAULT_CONFIG,
) -> QVagueVerdict:
    """q-vague check of the unnormalized posteriors ``f(x_obs | theta) pi_n(theta)``."""

    def weight(t):
        return np.asarray(likelihood(x_obs, np.asarray(t, dtype=float)), dtype=float)

    post = candidate_prior.reweighted(weight, f"posterior from {candidate_prior.label}")
    return check_qvague(lambda n: prior_seq(n).reweighted(weight), post, family, indices, reference, tol, cfg)


def atom_posterior_mass(
    prior: MixedMeasure,
    likelihood: Callable[[float, np.ndarray], np.ndarray],
    x_obs: float,
    loc: float,
    cfg: QuadratureConfig = DEFAULT_CONFIG,
) -> float:
    """Posterior probability of the atom at ``loc``, by explicit evidence quadrature."""
    weights = dict(prior.atoms)
    if loc not in weights:
        raise ValueError(f"no atom at {loc}")
    atom_mass = sum(w * float(likelihood(x_obs, np.asarray(a))) for a, w in prior.atoms)
    ac_mass = 0.0
    if prior.ac_part is not None:
        k = prior.ac_part
        ac_mass = integrate(lambda t: likelihood(x_obs, t) * k(t), k.domain[0], cfg)
    if math.isinf(ac_mass):
        return 0.0
    return weights[loc] * float(likelihood(x_obs, np.asarray(loc))) / (atom_mass + ac_mass)


def normal_likelihood(x, theta):
    """``N(theta, 1)`` density at ``x``."""
    return np.exp(-0.5 * (x - theta) ** 2) / math.sqrt(2 * math.pi)


def lindley_posterior_improper(x):
    """Posterior mass at 0 under ``1/2 delta_0 + 1/2 Lebesgue``: ``(1 + sqrt(2 pi) e^{x^2/2})^-1``.

    >>> round(float(lindley_posterior_improper(0.0)), 3)
    0.285
    """
    x = np.asarray(x, dtype=float)
    return expit(-(0.5 * math.log(2 * math.pi) + 0.5 * x * x))


def lindley_posterior_proper(x, n):
    """Posterior mass at 0 under ``1/2 delta_0 + 1/2 N(0, n^2)``.

    >>> round(float(lindley_posterior_proper(0.0, math.sqrt(3))), 12)
    0.666666666667
    """
    n = np.asarray(n, dtype=float)
    if np.any(n <= 0):
        raise ValueError("n must be positive")
    x = np.asarray(x, dtype=float)
    n2 = n * n
    return expit(-(-0.5 * np.log1p(n2) + n2 * x * x / (2 * (1 + n2))))


def normal_kernel(sd: float) -> Kernel:
    return Kernel(
        lambda t: np.exp(-0.5 * (t / sd) ** 2) / (sd * math.sqrt(2 * math.pi)),
        Domain1D.real_line(),
        f"N(0,{sd:g}^2)",
        ("theta",),
    )


def lebesgue_measure(domain: Domain1D | None = None, weight: float = 1.0) -> MixedMeasure:
    domain = domain or Domain1D.real_line()
    k = Kernel(lambda t: np.full_like(t, weight), domain, "Lebesgue", ("theta",))
    label = "Lebesgue" if weight == 1.0 else f"{weight:g} Lebesgue"
    return MixedMeasure((), k, label)


def lindley_prior(n: float | None) -> MixedMeasure:
    """``1/2 delta_0 + 1/2 N(0, n^2)``, or ``1/2 delta_0 + 1/2 Lebesgue`` when ``n`` is None."""
    if n is None:
        ac = lebesgue_measure(weight=0.5).ac_part
        return MixedMeasure(((0.0, 0.5),), ac, "1/2 delta_0 + 1/2 Lebesgue")
    return MixedMeasure(((0.0, 0.5),), normal_kernel(n).scaled(0.5), f"1/2 delta_0 + 1/2 N(0,{n:g}^2)")


def dirac(loc: float = 0.0) -> MixedMeasure:
    return MixedMeasure(((loc, 1.0),), None, f"delta_{loc:g}")
