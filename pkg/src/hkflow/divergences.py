"""Csiszar divergences, Hellinger distances, and their dual formulations.

Entropy functions F are convex with F(1) = 0 and come bundled with their
Legendre conjugate and recession constant F'(inf) = lim F(r)/r, so that the
divergence of a pair of measures can be evaluated both through the primal
integral and through pointwise scalar maximization of the dual.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from scipy.special import xlogy

from .spaces import DiscreteMeasure, lebesgue_decompose


class NonDominating(ValueError):
    """The proposed dominating measure misses part of the support."""


def signed_power(x, a):
    """x^a with the odd extension sign(x)|x|^a used for dual potentials."""
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.abs(x) ** a


@dataclass(frozen=True)
class EntropyFunction:
    """Convex density function with conjugate and recession constant.

    F maps [0, inf) to [0, inf] with F(1) = 0; `conjugate` realizes
    F*(phi) = sup_{s>=0} (s*phi - F(s)); `recession` is F'(inf).
    All callables accept numpy arrays.
    """

    name: str
    F: Callable
    dF: Callable
    conjugate: Callable
    recession: float


@dataclass(frozen=True)
class PerspectiveFunction:
    """Positively 1-homogeneous perspective H(r, s) of an entropy function."""

    name: str
    H: Callable


def perspective_of(F: EntropyFunction) -> PerspectiveFunction:
    """H(r, s) = s F(r/s) for s > 0, extended by r F'(inf) on {s = 0}."""

    def H(r, s):
        r = np.asarray(r, dtype=float)
        s = np.asarray(s, dtype=float)
        r, s = np.broadcast_arrays(r, s)
        out = np.zeros(r.shape)
        pos = s > 0
        out[pos] = s[pos] * F.F(r[pos] / s[pos])
        edge = (~pos) & (r > 0)
        out[edge] = F.recession * r[edge]
        return out

    return PerspectiveFunction(name=f"perspective[{F.name}]", H=H)


def power_entropy(p: float) -> EntropyFunction:
    """Power-like entropy: (r^p - p(r-1) - 1)/(p(p-1)), with the limit cases
    r log r - r + 1 at p = 1 and r - 1 - log r at p = 0."""
    if p == 1:

        def F(r):
            r = np.asarray(r, dtype=float)
            return xlogy(r, r) - r + 1.0

        def dF(r):
            return np.log(np.asarray(r, dtype=float))

        def conj(phi):
            with np.errstate(over="ignore"):
                return np.expm1(np.asarray(phi, dtype=float))

        return EntropyFunction("E1", F, dF, conj, np.inf)

    if p == 0:

        def F(r):
            r = np.asarray(r, dtype=float)
            with np.errstate(divide="ignore"):
                return r - 1.0 - np.log(r)

        def dF(r):
            return 1.0 - 1.0 / np.asarray(r, dtype=float)

        def conj(phi):
            phi = np.asarray(phi, dtype=float)
            out = np.full(phi.shape, np.inf)
            ok = phi < 1.0
            out[ok] = -np.log1p(-phi[ok])
            return out

        return EntropyFunction("E0", F, dF, conj, 1.0)

    c = p * (p - 1.0)
    rec = np.inf if p > 1 else 1.0 / (1.0 - p)

    def F(r):
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore"):
            rp = r**p
        return (rp - p * (r - 1.0) - 1.0) / c

    def dF(r):
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore"):
            return (r ** (p - 1.0) - 1.0) / (p - 1.0)

    def conj(phi):
        phi = np.asarray(phi, dtype=float)
        theta = 1.0 + (p - 1.0) * phi
        out = np.empty(phi.shape)
        pos = theta > 0
        with np.errstate(over="ignore"):
            out[pos] = (theta[pos] ** (p / (p - 1.0)) - 1.0) / p
        if p > 1:
            out[~pos] = -1.0 / p
        elif p < 0:
            # theta <= 0 means phi >= recession; the sup stays finite only
            # exactly at the recession slope
            out[~pos] = np.where(theta[~pos] == 0.0, -1.0 / p, np.inf)
        else:
            out[~pos] = np.inf
        return out

    return EntropyFunction(f"E{p:g}", F, dF, conj, rec)


def hellinger_conjugate(p: float, psi):
    """Conjugate of |r^{1/p} - 1|^p: psi / (1 - psi^{q-1})^{p-1} below 1,
    +inf from 1 on, with signed powers."""
    if p <= 1:
        raise ValueError(f"p must be > 1, got {p}")
    q = p / (p - 1.0)
    psi = np.asarray(psi, dtype=float)
    out = np.full(psi.shape, np.inf)
    ok = psi < 1.0
    out[ok] = psi[ok] / (1.0 - signed_power(psi[ok], q - 1.0)) ** (p - 1.0)
    if out.ndim == 0:
        return float(out)
    return out


def hellinger_entropy(p: float) -> EntropyFunction:
    """Entropy function F_p(r) = |r^{1/p} - 1|^p generating He_p^p."""
    if p <= 1:
        raise ValueError(f"p must be > 1, got {p}")

    def F(r):
        r = np.asarray(r, dtype=float)
        return np.abs(r ** (1.0 / p) - 1.0) ** p

    def dF(r):
        r = np.asarray(r, dtype=float)
        u = r ** (1.0 / p) - 1.0
        with np.errstate(divide="ignore"):
            return signed_power(u, p - 1.0) * r ** ((1.0 - p) / p)

    def conj(psi):
        psi = np.asarray(psi, dtype=float)
        out = hellinger_conjugate(p, psi)
        return np.asarray(out, dtype=float)

    return EntropyFunction(f"F{p:g}", F, dF, conj, 1.0)


def _check_pair(mu0: DiscreteMeasure, mu1: DiscreteMeasure):
    if mu0.n != mu1.n:
        raise ValueError(f"length mismatch: {mu0.n} vs {mu1.n}")


def csiszar(F: EntropyFunction, mu0: DiscreteMeasure, mu1: DiscreteMeasure) -> float:
    """Primal divergence: integral of F(density) against mu1 plus the
    recession price of the singular part. 0 * inf is resolved to 0."""
    _check_pair(mu0, mu1)
    dec = lebesgue_decompose(mu0, mu1)
    pos = mu1.weights > 0
    total = float(np.sum(F.F(dec.density[pos]) * mu1.weights[pos]))
    sing = dec.singular.total()
    if sing > 0:
        total += F.recession * sing
    return total


def perspective_divergence(
    H: PerspectiveFunction,
    mu0: DiscreteMeasure,
    mu1: DiscreteMeasure,
    lam: DiscreteMeasure,
) -> float:
    """Integral of H(densities) against any common dominating measure."""
    _check_pair(mu0, mu1)
    _check_pair(mu0, lam)
    bad = (lam.weights <= 0) & (mu0.weights + mu1.weights > 0)
    if np.any(bad):
        i = int(np.argmax(bad))
        raise NonDominating(f"lambda vanishes at point {i} inside the support")
    pos = lam.weights > 0
    r = mu0.weights[pos] / lam.weights[pos]
    s = mu1.weights[pos] / lam.weights[pos]
    return float(np.sum(H.H(r, s) * lam.weights[pos]))


def hellinger(p: float, mu0: DiscreteMeasure, mu1: DiscreteMeasure) -> float:
    """p-Hellinger distance; p = 1 is the total variation distance."""
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    _check_pair(mu0, mu1)
    a = mu0.weights ** (1.0 / p)
    b = mu1.weights ** (1.0 / p)
    return float(np.sum(np.abs(a - b) ** p) ** (1.0 / p))


def he2_via_kl(mu0: DiscreteMeasure, mu1: DiscreteMeasure):
    """He_2^2 as min_mu KL(mu|mu0) + KL(mu|mu1), attained at the pointwise
    geometric mean. Returns (value, argmin)."""
    _check_pair(mu0, mu1)
    value = float(np.sum((np.sqrt(mu0.weights) - np.sqrt(mu1.weights)) ** 2))
    argmin = DiscreteMeasure(np.sqrt(mu0.weights * mu1.weights))
    return value, argmin


def kl_divergence(mu0: DiscreteMeasure, mu1: DiscreteMeasure) -> float:
    """Kullback-Leibler divergence for general nonnegative measures;
    +inf unless mu0 << mu1."""
    _check_pair(mu0, mu1)
    a, b = mu0.weights, mu1.weights
    if np.any((a > 0) & (b == 0)):
        return np.inf
    return float(np.sum(xlogy(a, np.where(b > 0, a, 1.0)) - xlogy(a, np.where(b > 0, b, 1.0)) - a + b))


# ---------------------------------------------------------------------------
# Pointwise scalar maximization for the dual formulas.  The per-point
# objectives are concave, so a coarse log-stretched grid scan followed by a
# bracketed ternary refinement locates the supremum; a maximizer sitting on
# the edge of the grid is reported as not attained.


class RowwiseMax(NamedTuple):
    values: np.ndarray
    args: np.ndarray
    attained: np.ndarray


def _rowwise_concave_max_matrix(grid, gvals, objective, iters: int = 90) -> RowwiseMax:
    """Refine per-row maxima given precomputed grid values gvals (n, G).

    `objective(z)` maps a vector with one entry per row to the per-row
    objective values; entries may be -inf.  A maximizer on the edge of the
    grid is kept as-is and flagged not attained.
    """
    grid = np.asarray(grid, dtype=float)
    n, G = gvals.shape
    k = np.argmax(gvals, axis=1)
    best_val = gvals[np.arange(n), k]
    best_arg = grid[k]
    attained = (k > 0) & (k < G - 1)
    lo = grid[np.maximum(k - 1, 0)]
    hi = grid[np.minimum(k + 1, G - 1)]
    inv_phi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo.copy(), hi.copy()
    for _ in range(iters):
        x1 = b - inv_phi * (b - a)
        x2 = a + inv_phi * (b - a)
        f1 = objective(x1)
        f2 = objective(x2)
        take1 = f1 > best_val
        best_val = np.where(take1, f1, best_val)
        best_arg = np.where(take1, x1, best_arg)
        take2 = f2 > best_val
        best_val = np.where(take2, f2, best_val)
        best_arg = np.where(take2, x2, best_arg)
        shrink_right = f1 >= f2
        b = np.where(shrink_right, x2, b)
        a = np.where(shrink_right, a, x1)
    return RowwiseMax(values=best_val, args=best_arg, attained=attained)


def _log_stretched_grid(lo_exp=-13, hi_exp=16, per_side=117):
    e = np.linspace(lo_exp, hi_exp, per_side)
    pos = 10.0**e
    return np.concatenate([-pos[::-1], [0.0], pos])


class DualStatic(NamedTuple):
    value: float
    phi: np.ndarray
    psi: np.ndarray
    attained: bool


def dual_static(F: EntropyFunction, mu0: DiscreteMeasure, mu1: DiscreteMeasure) -> DualStatic:
    """Dual value sup { <phi, mu0> + <psi, mu1> : psi <= -F*(phi) pointwise }.

    On a finite space the supremum splits into independent scalar problems
    sup_phi (mu0[i] phi - mu1[i] F*(phi)); each is solved numerically.  The
    result never exceeds the primal and matches it when the primal is finite.
    A supremum only approached (singular parts, finite recession) is flagged
    attained=False; an unbounded supremum is reported as +inf.
    """
    _check_pair(mu0, mu1)
    a, b = mu0.weights, mu1.weights
    n = a.shape[0]
    rec = F.recession

    # analytically unbounded points: no mass to pay for the conjugate and an
    # infinite recession slope
    if np.isinf(rec) and np.any((b == 0) & (a > 0)):
        phi = np.zeros(n)
        return DualStatic(np.inf, phi, -np.asarray(F.conjugate(phi), dtype=float), False)

    grid = _log_stretched_grid()
    if np.isfinite(rec):
        approach = rec - 10.0 ** np.linspace(1.5, -13, 59)
        grid = np.concatenate([grid[grid < rec], approach, [rec]])
        grid = np.unique(grid)

    cg = np.asarray(F.conjugate(grid), dtype=float)
    with np.errstate(invalid="ignore"):
        gvals = a[:, None] * grid[None, :] - b[:, None] * cg[None, :]
    gvals[:, np.isinf(cg) & (cg > 0)] = -np.inf

    def objective(z):
        c = np.asarray(F.conjugate(z), dtype=float)
        out = a * z - b * c
        out[np.isinf(c) & (c > 0)] = -np.inf
        return out

    res = _rowwise_concave_max_matrix(grid, gvals, objective)
    phi = res.args
    psi = -np.asarray(F.conjugate(phi), dtype=float)
    return DualStatic(float(np.sum(res.values)), phi, psi, bool(np.all(res.attained)))


def hellinger_dual_flow(p: float, zeta0):
    """Closed-form time-one map zeta -> zeta / (1 + zeta^{q-1})^{p-1} of the
    decay equation d/dt zeta + (p-1) zeta^q = 0, with signed powers."""
    if p <= 1:
        raise ValueError(f"p must be > 1, got {p}")
    z = np.asarray(zeta0, dtype=float)
    if np.any(z <= -1):
        raise ValueError("flow map requires all entries > -1")
    q = p / (p - 1.0)
    out = z / (1.0 + signed_power(z, q - 1.0)) ** (p - 1.0)
    if out.ndim == 0:
        return float(out)
    return out


class HellingerDual(NamedTuple):
    value: float
    zeta0: np.ndarray
    attained: bool


def hellinger_dual(p: float, mu0: DiscreteMeasure, mu1: DiscreteMeasure) -> HellingerDual:
    """Dynamic dual of He_p^p: per point, sup over z > -1 of
    mu1 * flow(z) - mu0 * z."""
    if p <= 1:
        raise ValueError(f"p must be > 1, got {p}")
    _check_pair(mu0, mu1)
    a, b = mu0.weights, mu1.weights

    left = -1.0 + 10.0 ** np.linspace(-13, 0, 53)
    right = 10.0 ** np.linspace(-13, 16, 117)
    grid = np.unique(np.concatenate([left, [0.0], right]))
    fg = np.asarray(hellinger_dual_flow(p, grid), dtype=float)
    gvals = b[:, None] * fg[None, :] - a[:, None] * grid[None, :]

    def objective(z):
        return b * np.asarray(hellinger_dual_flow(p, z), dtype=float) - a * z

    res = _rowwise_concave_max_matrix(grid, gvals, objective)
    return HellingerDual(float(np.sum(res.values)), res.args, bool(np.all(res.attained)))


def hellinger_dual_value(p: float, mu0: DiscreteMeasure, mu1: DiscreteMeasure) -> float:
    return hellinger_dual(p, mu0, mu1).value
