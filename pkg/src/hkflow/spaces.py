"""Finite metric-measure spaces, discrete measures and Lebesgue decomposition."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

# Relative slack used when validating metric axioms; distances assembled from
# floating-point arithmetic (arc lengths, embedded coordinates) can miss exact
# triangle equality by a few ulps.
_METRIC_RTOL = 1e-12


class MetricViolation(ValueError):
    """Distance matrix is not a metric (asymmetry, diagonal, or triangle failure)."""


class NonpositiveReference(ValueError):
    """Reference weights must be strictly positive (full support)."""


def _as_vector(x, name="vector"):
    a = np.asarray(x, dtype=float)
    if a.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {a.shape}")
    return a


@dataclass(frozen=True)
class MetricMeasureSpace:
    """Finite point set with a distance matrix and strictly positive weights."""

    n: int
    dist: np.ndarray
    m: np.ndarray

    def __post_init__(self):
        self.dist.flags.writeable = False
        self.m.flags.writeable = False

    def total_mass(self) -> float:
        return float(self.m.sum())

    def to_json(self) -> str:
        return json.dumps(
            {"n": self.n, "dist": self.dist.tolist(), "m": self.m.tolist()}
        )


@dataclass(frozen=True)
class DiscreteMeasure:
    """Nonnegative mass per point; not necessarily a probability measure."""

    weights: np.ndarray

    def __post_init__(self):
        self.weights.flags.writeable = False

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    def total(self) -> float:
        return float(self.weights.sum())

    def to_json(self) -> str:
        return json.dumps({"weights": self.weights.tolist()})


@dataclass(frozen=True)
class LebesgueDecomposition:
    """mu0 = density * mu1 + singular, with the singular part carried by {mu1 = 0}."""

    density: np.ndarray
    singular: DiscreteMeasure


def measure(weights) -> DiscreteMeasure:
    w = _as_vector(weights, "weights").copy()
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ValueError("measure weights must be finite and nonnegative")
    return DiscreteMeasure(w)


def new_space(dist, m) -> MetricMeasureSpace:
    """Validate and build a finite metric-measure space.

    Raises MetricViolation on asymmetry, nonzero diagonal, nonpositive
    off-diagonal entries or a triangle-inequality failure (reporting the
    violating triple), and NonpositiveReference if any weight is <= 0.
    """
    d = np.asarray(dist, dtype=float)
    w = _as_vector(m, "m")
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise ValueError(f"dist must be square, got shape {d.shape}")
    n = d.shape[0]
    if w.shape[0] != n:
        raise ValueError(f"m has length {w.shape[0]}, expected {n}")
    if not np.all(np.isfinite(d)):
        raise MetricViolation("dist contains non-finite entries")
    scale = float(d.max(initial=0.0))
    tol = _METRIC_RTOL * max(scale, 1.0)
    asym = np.abs(d - d.T)
    if asym.max(initial=0.0) > tol:
        i, j = np.unravel_index(int(np.argmax(asym)), d.shape)
        raise MetricViolation(
            f"asymmetry at ({i},{j}): d[{i}][{j}]={float(d[i, j])!r} vs d[{j}][{i}]={float(d[j, i])!r}"
        )
    diag = np.abs(np.diag(d))
    if diag.max(initial=0.0) > tol:
        i = int(np.argmax(diag))
        raise MetricViolation(f"nonzero diagonal at {i}: {float(d[i, i])!r}")
    off = d + np.eye(n)  # shift diagonal so the positivity check skips it
    if off.min() <= 0.0:
        i, j = np.unravel_index(int(np.argmin(off)), d.shape)
        raise MetricViolation(f"nonpositive distance at ({i},{j}): {float(d[i, j])!r}")
    # d[i,k] <= d[i,j] + d[j,k] for all i, j, k
    excess = d[:, None, :] - d[:, :, None] - d[None, :, :]
    worst = excess.max()
    if worst > tol:
        i, j, k = np.unravel_index(int(np.argmax(excess)), excess.shape)
        raise MetricViolation(
            f"triangle inequality fails for ({i},{j},{k}): "
            f"d[{i}][{k}]={float(d[i, k])!r} > d[{i}][{j}]+d[{j}][{k}]={float(d[i, j] + d[j, k])!r}"
        )
    if np.any(w <= 0) or not np.all(np.isfinite(w)):
        i = int(np.argmin(w))
        raise NonpositiveReference(f"m[{i}]={float(w[i])!r} is not strictly positive")
    d = d.copy()
    np.fill_diagonal(d, 0.0)
    d = 0.5 * (d + d.T)
    return MetricMeasureSpace(n=n, dist=d, m=w.copy())


def cycle_space(n: int, length: float) -> MetricMeasureSpace:
    """n equispaced points on a circle of the given circumference.

    Distances are arc lengths; the reference measure is uniform with total
    mass one.
    """
    if n < 3:
        raise ValueError(f"cycle needs n >= 3, got {n}")
    if length <= 0:
        raise ValueError("length must be positive")
    h = length / n
    idx = np.arange(n)
    steps = np.abs(idx[:, None] - idx[None, :])
    steps = np.minimum(steps, n - steps)
    dist = steps * h
    m = np.full(n, 1.0 / n)
    return new_space(dist, m)


def line_space(positions, m) -> MetricMeasureSpace:
    """Points on the real line with |x_i - x_j| distances."""
    x = _as_vector(positions, "positions")
    if np.any(np.diff(x) <= 0):
        raise ValueError("positions must be strictly increasing")
    dist = np.abs(x[:, None] - x[None, :])
    return new_space(dist, m)


def lebesgue_decompose(mu0: DiscreteMeasure, mu1: DiscreteMeasure) -> LebesgueDecomposition:
    """Split mu0 into its mu1-absolutely-continuous and singular parts."""
    if mu0.n != mu1.n:
        raise ValueError(f"length mismatch: {mu0.n} vs {mu1.n}")
    pos = mu1.weights > 0
    density = np.zeros(mu0.n)
    density[pos] = mu0.weights[pos] / mu1.weights[pos]
    singular = np.where(pos, 0.0, mu0.weights)
    return LebesgueDecomposition(density=density, singular=DiscreteMeasure(singular))


# ---------------------------------------------------------------------------
# JSON file formats: {"n": int, "dist": [[...]], "m": [...]} and
# {"weights": [...]}; reals are plain IEEE-754 doubles in decimal.


def space_from_dict(obj) -> MetricMeasureSpace:
    try:
        n = int(obj["n"])
        dist = obj["dist"]
        m = obj["m"]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"space object needs keys n, dist, m: {exc}") from exc
    sp = new_space(dist, m)
    if sp.n != n:
        raise ValueError(f"declared n={n} but dist is {sp.n}x{sp.n}")
    return sp


def load_space(path) -> MetricMeasureSpace:
    with open(path) as f:
        return space_from_dict(json.load(f))


def save_space(space: MetricMeasureSpace, path) -> None:
    with open(path, "w") as f:
        f.write(space.to_json())


def measure_from_dict(obj) -> DiscreteMeasure:
    try:
        w = obj["weights"]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"measure object needs key weights: {exc}") from exc
    return measure(w)


def load_measure(path) -> DiscreteMeasure:
    with open(path) as f:
        return measure_from_dict(json.load(f))


def save_measure(mu: DiscreteMeasure, path) -> None:
    with open(path, "w") as f:
        f.write(mu.to_json())
