"""Closed-form 1-D Gaussian distances and the Ornstein-Uhlenbeck flow.

This is the exact curvature-one testbed: the OU adjoint flow maps Gaussians
to Gaussians, so the regularization estimates can be checked without any
spatial discretization.  The closed forms below are certified against an
adaptive-Simpson quadrature oracle before the verification harness trusts
them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .transport import MassMismatch


@dataclass(frozen=True)
class Gaussian1D:
    mean: float
    var: float
    mass: float = 1.0

    def __post_init__(self):
        if self.var <= 0:
            raise ValueError(f"variance must be positive, got {self.var}")
        if self.mass <= 0:
            raise ValueError(f"mass must be positive, got {self.mass}")

    @property
    def std(self) -> float:
        return math.sqrt(self.var)

    def density(self, x):
        x = np.asarray(x, dtype=float)
        return (
            self.mass
            * np.exp(-((x - self.mean) ** 2) / (2.0 * self.var))
            / math.sqrt(2.0 * math.pi * self.var)
        )


STANDARD_NORMAL = Gaussian1D(0.0, 1.0, 1.0)


def ou_flow(g: Gaussian1D, t: float) -> Gaussian1D:
    """Adjoint OU heat flow: mean decays like e^{-t}, variance relaxes to 1."""
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    return Gaussian1D(
        mean=g.mean * math.exp(-t),
        var=1.0 - (1.0 - g.var) * math.exp(-2.0 * t),
        mass=g.mass,
    )


def w2_gauss(g0: Gaussian1D, g1: Gaussian1D) -> float:
    """W_2 between equal-mass Gaussians: hypot of mean and std-dev gaps."""
    if abs(g0.mass - g1.mass) > 1e-12 * max(g0.mass, g1.mass):
        raise MassMismatch(f"total masses differ: {g0.mass!r} vs {g1.mass!r}")
    return math.sqrt(g0.mass) * math.hypot(g0.mean - g1.mean, g0.std - g1.std)


def he2_gauss(g0: Gaussian1D, g1: Gaussian1D) -> float:
    """He_2 via the Gaussian overlap integral; organized around
    1 - overlap = -expm1(log(overlap)) so nearly identical inputs do not
    lose precision to cancellation."""
    vsum = g0.var + g1.var
    # log of sqrt(2 s0 s1 / vsum) through 1 - (s0-s1)^2/vsum
    log_shape = 0.5 * math.log1p(-((g0.std - g1.std) ** 2) / vsum)
    log_overlap = log_shape - ((g0.mean - g1.mean) ** 2) / (4.0 * vsum)
    sq = (math.sqrt(g0.mass) - math.sqrt(g1.mass)) ** 2 - 2.0 * math.sqrt(
        g0.mass * g1.mass
    ) * math.expm1(log_overlap)
    return math.sqrt(max(sq, 0.0))


def kl_gauss(g0: Gaussian1D, g1: Gaussian1D) -> float:
    shape = (
        math.log(g1.std / g0.std)
        + (g0.var + (g0.mean - g1.mean) ** 2) / (2.0 * g1.var)
        - 0.5
    )
    mass = g0.mass * math.log(g0.mass / g1.mass) - g0.mass + g1.mass
    return g0.mass * shape + mass


# ---------------------------------------------------------------------------
# Quadrature oracle


def adaptive_simpson(f, a: float, b: float, tol: float = 1e-9, max_depth: int = 40) -> float:
    """Classic adaptive composite Simpson with Richardson correction."""

    def simpson(fa, fm, fb, left, right):
        return (right - left) / 6.0 * (fa + 4.0 * fm + fb)

    def recurse(left, right, fl, fm, fr, whole, tol, depth):
        mid = 0.5 * (left + right)
        lm = 0.5 * (left + mid)
        rm = 0.5 * (mid + right)
        flm = f(lm)
        frm = f(rm)
        s_left = simpson(fl, flm, fm, left, mid)
        s_right = simpson(fm, frm, fr, mid, right)
        delta = s_left + s_right - whole
        if depth <= 0 or abs(delta) <= 15.0 * tol:
            return s_left + s_right + delta / 15.0
        return recurse(left, mid, fl, flm, fm, s_left, 0.5 * tol, depth - 1) + recurse(
            mid, right, fm, frm, fr, s_right, 0.5 * tol, depth - 1
        )

    fa, fm, fb = f(a), f(0.5 * (a + b)), f(b)
    whole = simpson(fa, fm, fb, a, b)
    return recurse(a, b, fa, fm, fb, whole, tol, max_depth)


def _support(g0: Gaussian1D, g1: Gaussian1D):
    lo = min(g0.mean, g1.mean) - 10.0 * max(g0.std, g1.std)
    hi = max(g0.mean, g1.mean) + 10.0 * max(g0.std, g1.std)
    return lo, hi


def he2_quadrature(g0: Gaussian1D, g1: Gaussian1D, tol: float = 1e-9) -> float:
    lo, hi = _support(g0, g1)

    def integrand(x):
        return (math.sqrt(float(g0.density(x))) - math.sqrt(float(g1.density(x)))) ** 2

    return math.sqrt(max(adaptive_simpson(integrand, lo, hi, tol), 0.0))


def kl_quadrature(g0: Gaussian1D, g1: Gaussian1D, tol: float = 1e-9) -> float:
    lo, hi = _support(g0, g1)

    def integrand(x):
        p = float(g0.density(x))
        q = float(g1.density(x))
        if p == 0.0:
            return q
        return p * math.log(p / q) - p + q

    return adaptive_simpson(integrand, lo, hi, tol)


def w2_quadrature(g0: Gaussian1D, g1: Gaussian1D, tol: float = 1e-9) -> float:
    """W_2 by integrating the quantile coupling; the optimal map between
    Gaussians is the increasing affine one, so in the standard-normal
    variable u the squared displacement is (dm + ds*u)^2."""
    dm = g1.mean - g0.mean
    ds = g1.std - g0.std

    def integrand(u):
        return (dm + ds * u) ** 2 * math.exp(-0.5 * u * u) / math.sqrt(2.0 * math.pi)

    val = adaptive_simpson(integrand, -12.0, 12.0, tol)
    return math.sqrt(max(g0.mass * val, 0.0))


def certification_grid():
    means = (-1.0, 0.0, 0.7, 1.5)
    variances = (0.25, 1.0, 2.5)
    return [Gaussian1D(m, v) for m in means for v in variances]


def certify_closed_forms(tol: float = 1e-9):
    """Compare each closed form against quadrature on a fixed Gaussian grid.

    Returns a list of (label, closed_value, oracle_value, abs_error).
    """
    out = []
    grid = certification_grid()
    for i, g0 in enumerate(grid):
        for g1 in grid[i:]:
            tag = f"N({g0.mean:g},{g0.var:g})|N({g1.mean:g},{g1.var:g})"
            out.append((f"he2[{tag}]", he2_gauss(g0, g1), he2_quadrature(g0, g1, tol)))
            out.append((f"kl[{tag}]", kl_gauss(g0, g1), kl_quadrature(g0, g1, tol)))
            out.append((f"w2[{tag}]", w2_gauss(g0, g1), w2_quadrature(g0, g1, tol)))
    return [(name, a, b, abs(a - b)) for name, a, b in out]
