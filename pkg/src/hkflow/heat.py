"""Reversible Markov generators, heat semigroups and Gamma-calculus.

A generator L is reversible w.r.t. the reference weights m (detailed
balance), so D^{1/2} L D^{-1/2} is symmetric and the semigroup exp(tL) is
evaluated through an m-orthonormal eigendecomposition.  The carre du champ
Gamma(f,g) = (L(fg) - f Lg - g Lf)/2 replaces the metric slope throughout:
on a finite space every point is isolated and the slope of the ambient
metric degenerates, while Gamma carries the full Bakry-Emery structure.
"""

from __future__ import annotations

import json

import numpy as np
from scipy.linalg import eigh

from .spaces import (
    DiscreteMeasure,
    MetricMeasureSpace,
    cycle_space,
    line_space,
    load_space,
)

_REV_RTOL = 1e-12


class Generator:
    """Markov generator matrix with zero row sums, reversible w.r.t. space.m."""

    def __init__(self, space: MetricMeasureSpace, L):
        L = np.asarray(L, dtype=float)
        if L.shape != (space.n, space.n):
            raise ValueError(f"L must be {space.n}x{space.n}, got {L.shape}")
        off = L - np.diag(np.diag(L))
        if off.min() < 0:
            i, j = np.unravel_index(int(np.argmin(off)), L.shape)
            raise ValueError(f"negative off-diagonal rate L[{i}][{j}]={float(L[i, j])!r}")
        scale = max(float(np.abs(L).max()), 1.0)
        rowsums = np.abs(L.sum(axis=1))
        if rowsums.max() > 1e-10 * scale:
            raise ValueError(f"row sums must vanish, worst {float(rowsums.max())!r}")
        flux = space.m[:, None] * L
        asym = np.abs(flux - flux.T)
        if asym.max() > _REV_RTOL * max(float(np.abs(flux).max()), 1.0):
            i, j = np.unravel_index(int(np.argmax(asym)), L.shape)
            raise ValueError(
                f"detailed balance fails at ({i},{j}): "
                f"m[i]L[i][j]={float(flux[i, j])!r} vs m[j]L[j][i]={float(flux[j, i])!r}"
            )
        L = L.copy()
        np.fill_diagonal(L, 0.0)
        np.fill_diagonal(L, -L.sum(axis=1))
        L.flags.writeable = False
        self.space = space
        self.L = L
        self._cache = None

    @property
    def n(self) -> int:
        return self.space.n

    def eigensystem(self):
        """m-orthonormal eigendecomposition (eigenvalues, basis, sqrt m)."""
        if self._cache is None:
            s = np.sqrt(self.space.m)
            sym = (self.L * s[:, None]) / s[None, :]
            sym = 0.5 * (sym + sym.T)
            w, Q = eigh(sym)
            self._cache = (w, Q, s)
        return self._cache

    def to_json(self, space_ref: str) -> str:
        return json.dumps({"L": self.L.tolist(), "space": space_ref})


def load_generator(path) -> Generator:
    import os

    with open(path) as f:
        obj = json.load(f)
    try:
        L = obj["L"]
        ref = obj["space"]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"generator object needs keys L, space: {exc}") from exc
    space_path = ref
    if not os.path.isabs(space_path):
        space_path = os.path.join(os.path.dirname(os.path.abspath(path)), ref)
    return Generator(load_space(space_path), L)


def cycle_generator(n: int, length: float) -> Generator:
    """Second-difference generator on the discretized circle."""
    space = cycle_space(n, length)
    h = length / n
    L = np.zeros((n, n))
    idx = np.arange(n)
    L[idx, (idx + 1) % n] = 1.0 / h**2
    L[idx, (idx - 1) % n] = 1.0 / h**2
    L[idx, idx] = -2.0 / h**2
    return Generator(space, L)


def ou_generator(h: float, radius: float = 5.0) -> Generator:
    """Birth-death discretization of the Ornstein-Uhlenbeck generator
    f'' - x f' on a uniform grid over [-radius, radius].

    Jump rates use geometric means of the Gaussian weights so detailed
    balance holds to machine precision; consistency with the continuum
    generator is O(h^2) on smooth functions.
    """
    if h <= 0:
        raise ValueError("h must be positive")
    if radius < 3:
        raise ValueError(f"radius must be >= 3, got {radius}")
    half = int(round(radius / h))
    x = (np.arange(2 * half + 1) - half) * h
    logw = -0.5 * x**2
    m = np.exp(logw)
    m /= m.sum()
    n = x.shape[0]
    L = np.zeros((n, n))
    # rate(i -> i+1) = sqrt(w_{i+1}/w_i)/h^2, similarly to the left
    up = np.exp(0.5 * (logw[1:] - logw[:-1])) / h**2
    down = np.exp(0.5 * (logw[:-1] - logw[1:])) / h**2
    idx = np.arange(n - 1)
    L[idx, idx + 1] = up
    L[idx + 1, idx] = down
    d = np.zeros(n)
    d[:-1] += up
    d[1:] += down
    L[np.arange(n), np.arange(n)] = -d
    return Generator(line_space(x, m), L)


def heat_apply(G: Generator, t: float, f) -> np.ndarray:
    """exp(tL) f through the cached eigendecomposition."""
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    f = np.asarray(f, dtype=float)
    w, Q, s = G.eigensystem()
    coeff = Q.T @ (s * f)
    return (Q @ (np.exp(t * w) * coeff)) / s


def heat_dual(G: Generator, t: float, mu: DiscreteMeasure) -> DiscreteMeasure:
    """Adjoint flow on measures: integral of f against the result equals the
    integral of exp(tL) f against mu."""
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    w, Q, s = G.eigensystem()
    coeff = Q.T @ (mu.weights / s)
    out = s * (Q @ (np.exp(t * w) * coeff))
    return DiscreteMeasure(np.maximum(out, 0.0))


def gamma(G: Generator, f, g=None) -> np.ndarray:
    """Carre du champ Gamma(f,g) = (L(fg) - f Lg - g Lf)/2.

    Constants are in the kernel of Gamma, so both arguments are centered by
    their m-mean first; this leaves the value unchanged but avoids the
    cancellation noise floor when f is close to equilibrium.
    """
    m = G.space.m
    total = m.sum()
    f = np.asarray(f, dtype=float)
    f = f - float(m @ f) / total
    if g is None:
        g = f
    else:
        g = np.asarray(g, dtype=float)
        g = g - float(m @ g) / total
    L = G.L
    return 0.5 * (L @ (f * g) - f * (L @ g) - g * (L @ f))


def gamma2(G: Generator, f) -> np.ndarray:
    """Iterated operator Gamma_2(f) = L(Gamma(f,f))/2 - Gamma(f, Lf)."""
    f = np.asarray(f, dtype=float)
    return 0.5 * (G.L @ gamma(G, f)) - gamma(G, f, G.L @ f)


def dirichlet_energy(G: Generator, f) -> float:
    """Discrete Cheeger energy: <-Lf, f>_m / 2 = sum Gamma(f,f) m / 2."""
    f = np.asarray(f, dtype=float)
    return float(-0.5 * np.sum(G.space.m * f * (G.L @ f)))


def r_k(K: float, t: float) -> float:
    """Regularization rate (e^{2Kt} - 1)/K, extended by 2t at K = 0."""
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    if K == 0.0:
        return 2.0 * t
    if np.isinf(K) and K < 0:
        return 0.0
    return float(np.expm1(2.0 * K * t) / K)


def _gamma_form(L, LL, x):
    """Matrix A with f.A.f = Gamma(f,f)(x)."""
    Lx = L[x]
    A = 0.5 * np.diag(Lx)
    A[x, :] -= 0.5 * Lx
    A[:, x] -= 0.5 * Lx
    return A


def _gamma2_form(L, LL, x):
    """Matrix B with f.B.f = Gamma_2(f)(x)."""
    Lx = L[x]
    DxL = Lx[:, None] * L
    # sum_y L[x,y] A_y
    S = 0.5 * (np.diag(LL[x]) - DxL - DxL.T)
    # A_x @ L, using the diagonal plus rank-two structure of A_x
    AxL = 0.5 * DxL.copy()
    AxL[x, :] -= 0.5 * LL[x]
    AxL -= 0.5 * np.outer(Lx, Lx)
    B = 0.5 * S - 0.5 * (AxL + AxL.T)
    return 0.5 * (B + B.T)


def curvature_lower_bound(G: Generator) -> float:
    """Largest K with Gamma_2(f) >= K Gamma(f) pointwise for every f.

    At each point the two quadratic forms are symmetric matrices B, A with A
    positive semidefinite.  The optimal K restricted to range(A) is the
    smallest generalized Rayleigh quotient; directions in ker(A) must carry
    nonnegative Gamma_2 and any coupling between the two blocks is absorbed
    by a generalized Schur complement.  Returns -inf when no finite K works.
    """
    L = G.L
    n = G.n
    LL = L @ L
    # both forms at x live on the radius-2 graph ball around x, so the
    # eigenproblems can be restricted there without changing the result
    adj = (L != 0.0) | np.eye(n, dtype=bool)
    ball2 = (adj.astype(np.int64) @ adj.astype(np.int64)) > 0
    best = np.inf
    for x in range(n):
        sub = ball2[x]
        A = _gamma_form(L, LL, x)[np.ix_(sub, sub)]
        B = _gamma2_form(L, LL, x)[np.ix_(sub, sub)]
        lam, V = eigh(A)
        norm_a = max(lam[-1], 0.0)
        if norm_a == 0.0:
            continue  # isolated point, Gamma vanishes identically
        rng = lam > 1e-10 * norm_a
        Vr = V[:, rng]
        Vk = V[:, ~rng]
        lam_r = lam[rng]
        Bt_rr = Vr.T @ B @ Vr
        norm_b = max(float(np.linalg.norm(B)), 1e-300)
        if Vk.shape[1] > 0:
            Bt_kk = Vk.T @ B @ Vk
            Bt_rk = Vr.T @ B @ Vk
            kev, kV = eigh(Bt_kk)
            if kev.min() < -1e-9 * norm_b:
                return -np.inf
            pos = kev > 1e-10 * max(kev.max(), 0.0) + 1e-13 * norm_b
            # component of the coupling outside range(B_kk) makes the
            # quotient unbounded below
            proj = kV[:, pos] @ kV[:, pos].T
            resid = Bt_rk.T - proj @ Bt_rk.T
            if np.linalg.norm(resid) > 1e-6 * norm_b:
                return -np.inf
            if np.any(pos):
                pinv = kV[:, pos] @ np.diag(1.0 / kev[pos]) @ kV[:, pos].T
                Bt_rr = Bt_rr - Bt_rk @ pinv @ Bt_rk.T
        scal = 1.0 / np.sqrt(lam_r)
        M = Bt_rr * scal[:, None] * scal[None, :]
        kx = float(eigh(0.5 * (M + M.T), eigvals_only=True)[0])
        best = min(best, kx)
    return best
