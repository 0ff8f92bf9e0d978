import math

import numpy as np
import pytest

from hkflow import (
    NonDominating,
    csiszar,
    dual_static,
    he2_via_kl,
    hellinger,
    hellinger_conjugate,
    hellinger_dual,
    hellinger_dual_flow,
    hellinger_dual_value,
    kl_divergence,
    measure,
    perspective_divergence,
    perspective_of,
    power_entropy,
)
from hkflow.divergences import hellinger_entropy, signed_power

from conftest import random_measure

ENTROPIES = [power_entropy(p) for p in (0.0, 0.5, 1.0, 2.0)] + [
    hellinger_entropy(p) for p in (1.5, 2.0, 3.0)
]


# ---------------------------------------------------------------------------
# independent oracles


def kl_point(s, m):
    """KL integrand with the usual 0 log 0 = 0 convention."""
    if s == 0.0:
        return m
    if m == 0.0:
        return math.inf
    return s * math.log(s / m) - s + m


def csiszar_direct(F, w0, w1):
    """Direct per-point summation, bypassing the library decomposition."""
    total = 0.0
    for a, b in zip(w0, w1):
        if b > 0:
            total += b * float(F.F(np.array(a / b)))
        elif a > 0:
            total += F.recession * a
    return total


def fenchel_double(F, r, phis):
    vals = r * phis - np.asarray(F.conjugate(phis), dtype=float)
    return float(np.max(vals[np.isfinite(vals)]))


def ode_flow_oracle(p, z0, steps=200000):
    """RK4 integration of dz/dt + (p-1)|z|^q = 0 over unit time.

    |z|^q (not the signed power) is the reading under which the closed-form
    map solves the equation; at p = q = 2 it is the plain square of the
    dynamic dual.
    """
    q = p / (p - 1.0)

    def rhs(z):
        return -(p - 1.0) * abs(z) ** q

    z = z0
    h = 1.0 / steps
    for _ in range(steps):
        k1 = rhs(z)
        k2 = rhs(z + 0.5 * h * k1)
        k3 = rhs(z + 0.5 * h * k2)
        k4 = rhs(z + h * k3)
        z = z + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    return z


# ---------------------------------------------------------------------------
# entropy functions


def test_power_entropy_values():
    E1 = power_entropy(1.0)
    assert float(E1.F(np.array(1.0))) == 0.0
    assert float(E1.F(np.array(2.0))) == pytest.approx(2 * math.log(2) - 1, abs=1e-12)
    E0 = power_entropy(0.0)
    assert float(E0.F(np.array(2.0))) == pytest.approx(1 - math.log(2), abs=1e-12)
    assert float(E0.F(np.array(0.0))) == math.inf
    E2 = power_entropy(2.0)
    assert float(E2.F(np.array(3.0))) == pytest.approx(2.0, abs=1e-12)


@pytest.mark.parametrize("F", ENTROPIES, ids=lambda F: F.name)
def test_fenchel_moreau_roundtrip(F):
    phis = np.concatenate(
        [
            -np.geomspace(1e-8, 1e16, 321),
            np.linspace(-40.0, 40.0, 400001),
            np.geomspace(1e-8, 1e16, 321),
        ]
    )
    if math.isfinite(F.recession):
        phis = np.concatenate([phis[phis < F.recession], F.recession - np.geomspace(1e-12, 1.0, 49)])
    phis = np.sort(phis)
    for r in (0.0, 0.25, 0.5, 1.0, 1.5, 2.0, 5.0):
        direct = float(F.F(np.array(r)))
        if not math.isfinite(direct):
            continue
        rebuilt = fenchel_double(F, r, phis)
        assert rebuilt == pytest.approx(direct, abs=2e-5, rel=1e-5)
        assert rebuilt <= direct + 1e-12


@pytest.mark.parametrize("F", ENTROPIES, ids=lambda F: F.name)
def test_recession_matches_divergent_grid(F):
    grid = np.geomspace(10.0, 1e14, 60)
    ratios = np.asarray(F.F(grid), dtype=float) / (grid - 1.0)
    estimate = ratios[-1]
    if math.isinf(F.recession):
        # superlinear or log-divergent growth; the ratio must keep climbing
        assert estimate > 10.0 * ratios[0]
    else:
        assert estimate == pytest.approx(F.recession, rel=1e-3)
    # convexity makes the ratio nondecreasing
    assert np.all(np.diff(ratios) >= -1e-12 * np.maximum(np.abs(ratios[:-1]), 1.0))


def test_entropy_derivative_consistency(rng):
    for F in ENTROPIES:
        r = rng.uniform(0.2, 4.0, 40)
        h = 1e-6
        fd = (np.asarray(F.F(r + h)) - np.asarray(F.F(r - h))) / (2 * h)
        assert np.allclose(fd, np.asarray(F.dF(r)), atol=1e-6, rtol=1e-5)


# ---------------------------------------------------------------------------
# primal divergences


def test_kl_examples():
    E1 = power_entropy(1.0)
    assert csiszar(E1, measure([0.5, 0.5]), measure([0.5, 0.5])) == 0.0
    expected = 0.25 * (2 * math.log(2) - 1) + 0.75 * ((2 / 3) * math.log(2 / 3) + 1 / 3)
    got = csiszar(E1, measure([0.5, 0.5]), measure([0.25, 0.75]))
    assert got == pytest.approx(expected, abs=1e-14)
    assert got == pytest.approx(0.143841, abs=1e-6)
    assert csiszar(E1, measure([1, 1]), measure([1, 0])) == math.inf


def test_csiszar_matches_direct_summation(rng):
    for _ in range(120):
        n = int(rng.integers(1, 10))
        mu0 = random_measure(rng, n, zeros=0.3)
        mu1 = random_measure(rng, n, zeros=0.3)
        F = ENTROPIES[int(rng.integers(0, len(ENTROPIES)))]
        direct = csiszar_direct(F, mu0.weights, mu1.weights)
        got = csiszar(F, mu0, mu1)
        if math.isinf(direct):
            assert math.isinf(got)
        else:
            assert got == pytest.approx(direct, rel=1e-12, abs=1e-12)


def test_zero_times_infinity_convention():
    # no singular mass: the infinite recession constant must not pollute
    E1 = power_entropy(1.0)
    assert math.isfinite(csiszar(E1, measure([1.0, 0.0]), measure([1.0, 2.0])))


def test_kl_divergence_helper(rng):
    E1 = power_entropy(1.0)
    for _ in range(60):
        n = int(rng.integers(1, 8))
        mu0 = random_measure(rng, n, zeros=0.2)
        mu1 = random_measure(rng, n, zeros=0.2)
        a = csiszar(E1, mu0, mu1)
        b = kl_divergence(mu0, mu1)
        if math.isinf(a):
            assert math.isinf(b)
        else:
            assert b == pytest.approx(a, rel=1e-12, abs=1e-12)


def test_perspective_lambda_independence(rng):
    H2 = perspective_of(hellinger_entropy(2.0))
    mu0 = measure([1.0, 0.0])
    mu1 = measure([0.0, 1.0])
    lam1 = measure([1.0, 1.0])
    lam2 = measure([2.0, 2.0])
    v1 = perspective_divergence(H2, mu0, mu1, lam1)
    v2 = perspective_divergence(H2, mu0, mu1, lam2)
    assert v1 == pytest.approx(2.0, abs=1e-12)
    assert v2 == pytest.approx(2.0, abs=1e-12)

    HKL = perspective_of(power_entropy(1.0))
    mu0 = measure([0.5, 0.5])
    mu1 = measure([0.25, 0.75])
    vals = []
    for lam in (measure([0.75, 1.25]), measure([1.0, 1.0]), measure([0.5, 3.0])):
        vals.append(perspective_divergence(HKL, mu0, mu1, lam))
    assert vals[0] == pytest.approx(csiszar(power_entropy(1.0), mu0, mu1), rel=1e-12)
    assert max(vals) - min(vals) <= 1e-12 * max(vals)


def test_perspective_equals_csiszar_random(rng):
    for F in ENTROPIES:
        H = perspective_of(F)
        for _ in range(25):
            n = int(rng.integers(1, 8))
            mu0 = random_measure(rng, n, zeros=0.25)
            mu1 = random_measure(rng, n, zeros=0.25)
            lam = measure(mu0.weights + mu1.weights + rng.uniform(0, 0.5, n))
            a = perspective_divergence(H, mu0, mu1, lam)
            b = csiszar(F, mu0, mu1)
            if math.isinf(b):
                assert math.isinf(a)
            else:
                assert a == pytest.approx(b, rel=1e-11, abs=1e-11)


def test_perspective_rejects_nondominating():
    H = perspective_of(power_entropy(1.0))
    with pytest.raises(NonDominating):
        perspective_divergence(H, measure([1, 0]), measure([0, 1]), measure([1, 0]))


# ---------------------------------------------------------------------------
# Hellinger distances


def test_hellinger_examples():
    assert hellinger(2, measure([1, 0]), measure([0, 1])) == pytest.approx(math.sqrt(2), abs=1e-15)
    got = hellinger(2, measure([0.5, 0.5]), measure([0.25, 0.75]))
    expected = math.sqrt((math.sqrt(0.5) - 0.5) ** 2 + (math.sqrt(0.5) - math.sqrt(0.75)) ** 2)
    assert got == pytest.approx(expected, abs=1e-15)
    assert got == pytest.approx(0.261052, abs=1e-6)
    assert hellinger(1, measure([0.5, 0.5]), measure([0.25, 0.75])) == pytest.approx(0.5, abs=1e-15)


def test_hellinger_rejects_small_p():
    with pytest.raises(ValueError):
        hellinger(0.5, measure([1]), measure([1]))


def test_hellinger_uniform_bound(rng):
    for _ in range(80):
        n = int(rng.integers(1, 10))
        mu0 = random_measure(rng, n, zeros=0.2)
        mu1 = random_measure(rng, n, zeros=0.2)
        p = float(rng.uniform(1.0, 4.0))
        assert hellinger(p, mu0, mu1) ** p <= mu0.total() + mu1.total() + 1e-12


def test_he2_via_kl_examples():
    v, am = he2_via_kl(measure([1, 1]), measure([1, 1]))
    assert v == 0.0 and np.array_equal(am.weights, [1, 1])

    v, am = he2_via_kl(measure([1, 0]), measure([0, 1]))
    assert v == pytest.approx(2.0) and np.array_equal(am.weights, [0, 0])

    v, am = he2_via_kl(measure([4, 1]), measure([1, 1]))
    assert v == pytest.approx(1.0, abs=1e-14)
    assert np.allclose(am.weights, [2, 1])


def test_he2_via_kl_scalar_minimization_oracle(rng):
    # per point, min_r kl_point(r, a) + kl_point(r, b) should match the
    # geometric-mean minimizer
    for _ in range(40):
        a, b = rng.uniform(0.01, 3.0, 2)
        grid = np.linspace(1e-6, 4.0, 200001)
        vals = [kl_point(r, a) + kl_point(r, b) for r in grid]
        k = int(np.argmin(vals))
        assert grid[k] == pytest.approx(math.sqrt(a * b), abs=1e-4)
        assert vals[k] == pytest.approx((math.sqrt(a) - math.sqrt(b)) ** 2, abs=1e-8)


def test_he2_via_kl_consistency(rng):
    for _ in range(60):
        n = int(rng.integers(1, 10))
        mu0 = random_measure(rng, n, zeros=0.2)
        mu1 = random_measure(rng, n, zeros=0.2)
        v, am = he2_via_kl(mu0, mu1)
        assert v == pytest.approx(hellinger(2, mu0, mu1) ** 2, abs=1e-10)
        total = sum(kl_point(s, m) for s, m in zip(am.weights, mu0.weights))
        total += sum(kl_point(s, m) for s, m in zip(am.weights, mu1.weights))
        assert total == pytest.approx(v, rel=1e-10, abs=1e-12)


def test_sandwich_inequality(rng):
    for _ in range(120):
        n = int(rng.integers(1, 10))
        mu0 = random_measure(rng, n, zeros=0.2)
        mu1 = random_measure(rng, n, zeros=0.2)
        p = float(rng.choice([1.5, 2.0, 3.0, 4.0]))
        q = p / (p - 1.0)
        cp = max(p / 2.0, 1.0)
        hep = hellinger(p, mu0, mu1)
        he1 = hellinger(1, mu0, mu1)
        assert he1 - hep**p >= -1e-12
        bound = cp * (mu0.total() ** (1 / q) + mu1.total() ** (1 / q)) * hep
        assert bound - he1 >= -1e-12


def test_he2_below_kl(rng):
    for _ in range(120):
        n = int(rng.integers(1, 10))
        mu0 = random_measure(rng, n)
        mu1 = random_measure(rng, n)
        kl = kl_divergence(mu0, mu1)
        if math.isfinite(kl):
            assert hellinger(2, mu0, mu1) ** 2 <= kl + 1e-12


def test_hellinger_metric_axioms(rng):
    for _ in range(100):
        n = int(rng.integers(1, 8))
        mus = [random_measure(rng, n, zeros=0.2) for _ in range(3)]
        p = float(rng.choice([1.0, 1.5, 2.0, 3.0]))
        d01 = hellinger(p, mus[0], mus[1])
        d10 = hellinger(p, mus[1], mus[0])
        assert d01 == d10
        assert hellinger(p, mus[0], mus[0]) == 0.0
        d02 = hellinger(p, mus[0], mus[2])
        d12 = hellinger(p, mus[1], mus[2])
        assert d01 + d12 - d02 >= -1e-12


# ---------------------------------------------------------------------------
# dual formulations


def test_dual_static_identical_measures():
    F = power_entropy(1.0)
    res = dual_static(F, measure([0.4, 0.6]), measure([0.4, 0.6]))
    assert abs(res.value) <= 1e-12
    assert np.all(np.abs(res.phi) <= 1e-5)


def test_dual_static_kl_example():
    F = power_entropy(1.0)
    mu0 = measure([0.5, 0.5])
    mu1 = measure([0.25, 0.75])
    res = dual_static(F, mu0, mu1)
    assert res.value == pytest.approx(csiszar(F, mu0, mu1), rel=1e-9)
    assert np.allclose(res.phi, np.log(mu0.weights / mu1.weights), atol=1e-6)


def test_dual_static_hellinger_singular():
    res = dual_static(hellinger_entropy(2.0), measure([1, 0]), measure([0, 1]))
    assert res.value == pytest.approx(2.0, rel=1e-9)
    assert not res.attained


def test_dual_static_never_exceeds_primal(rng):
    for _ in range(150):
        n = int(rng.integers(1, 10))
        mu0 = random_measure(rng, n, zeros=0.3)
        mu1 = random_measure(rng, n, zeros=0.3)
        F = ENTROPIES[int(rng.integers(0, len(ENTROPIES)))]
        primal = csiszar(F, mu0, mu1)
        res = dual_static(F, mu0, mu1)
        assert res.value <= primal + 1e-9 * max(1.0, abs(res.value))
        if math.isfinite(primal):
            assert res.value == pytest.approx(primal, rel=1e-7, abs=1e-7)


def test_hellinger_conjugate_values():
    assert hellinger_conjugate(2.0, 0.0) == 0.0
    assert hellinger_conjugate(2.0, 0.5) == pytest.approx(1.0, abs=1e-15)
    assert hellinger_conjugate(2.0, 1.0) == math.inf
    with pytest.raises(ValueError):
        hellinger_conjugate(1.0, 0.5)


def test_hellinger_conjugate_is_conjugate(rng):
    # numeric sup over s of (s psi - F_p(s)) must reproduce the formula
    for p in (1.5, 2.0, 3.0):
        F = hellinger_entropy(p)
        s = np.geomspace(1e-12, 1e12, 400001)
        for psi in (-3.0, -0.5, 0.0, 0.3, 0.8, 0.95):
            direct = float(np.max(s * psi - np.asarray(F.F(s))))
            direct = max(direct, -float(F.F(np.array(0.0))))
            assert direct == pytest.approx(hellinger_conjugate(p, psi), rel=1e-5, abs=1e-6)


def test_flow_map_examples():
    assert hellinger_dual_flow(2.0, 0.0) == 0.0
    assert hellinger_dual_flow(2.0, 1.0) == pytest.approx(0.5, abs=1e-15)
    assert hellinger_dual_flow(2.0, -0.5) == pytest.approx(-1.0, abs=1e-12)
    with pytest.raises(ValueError):
        hellinger_dual_flow(2.0, -1.0)


@pytest.mark.parametrize("p,z0", [(2.0, -0.5), (2.0, 1.7), (1.5, 0.8), (3.0, -0.3)])
def test_flow_map_against_ode(p, z0):
    assert hellinger_dual_flow(p, z0) == pytest.approx(ode_flow_oracle(p, z0), abs=1e-9)


def test_flow_map_range(rng):
    z = rng.uniform(0.0, 10.0, 200)
    for p in (1.5, 2.0, 3.0):
        out = hellinger_dual_flow(p, z)
        assert np.all(out >= 0.0) and np.all(out <= z)


def test_hellinger_dual_value_examples():
    assert hellinger_dual_value(2.0, measure([1, 1]), measure([1, 1])) == pytest.approx(0.0, abs=1e-12)
    mu0 = measure([0.5, 0.5])
    mu1 = measure([0.25, 0.75])
    assert hellinger_dual_value(2.0, mu0, mu1) == pytest.approx(
        hellinger(2, mu0, mu1) ** 2, rel=1e-9
    )
    res = hellinger_dual(2.0, measure([1, 0]), measure([0, 1]))
    assert res.value == pytest.approx(2.0, rel=1e-9)
    assert not res.attained


def test_hellinger_dual_matches_primal(rng):
    for _ in range(120):
        n = int(rng.integers(1, 10))
        mu0 = random_measure(rng, n, zeros=0.25)
        mu1 = random_measure(rng, n, zeros=0.25)
        p = float(rng.choice([1.5, 2.0, 3.0]))
        primal = hellinger(p, mu0, mu1) ** p
        dual = hellinger_dual_value(p, mu0, mu1)
        assert dual == pytest.approx(primal, rel=1e-7, abs=1e-9)


def test_csiszar_of_hellinger_entropy_is_hep(rng):
    for _ in range(60):
        n = int(rng.integers(1, 10))
        mu0 = random_measure(rng, n, zeros=0.25)
        mu1 = random_measure(rng, n, zeros=0.25)
        p = float(rng.choice([1.5, 2.0, 3.0]))
        assert csiszar(hellinger_entropy(p), mu0, mu1) == pytest.approx(
            hellinger(p, mu0, mu1) ** p, rel=1e-12, abs=1e-12
        )
