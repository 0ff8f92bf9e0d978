import json
import math

import numpy as np
import pytest

from hkflow import (
    MetricViolation,
    NonpositiveReference,
    cycle_space,
    lebesgue_decompose,
    measure,
    new_space,
)
from hkflow.spaces import load_measure, load_space, save_measure, save_space

from conftest import random_measure


def test_two_point_space():
    sp = new_space([[0, 1], [1, 0]], [0.5, 0.5])
    assert sp.n == 2
    assert sp.dist[0, 1] == 1.0
    assert sp.total_mass() == 1.0


def test_asymmetry_rejected():
    with pytest.raises(MetricViolation, match="asymmetry"):
        new_space([[0, 1], [2, 0]], [1, 1])


def test_triangle_violation_reports_triple():
    with pytest.raises(MetricViolation, match=r"\(0,1,2\)"):
        new_space([[0, 1, 3], [1, 0, 1], [3, 1, 0]], [1, 1, 1])


def test_nonzero_diagonal_rejected():
    with pytest.raises(MetricViolation, match="diagonal"):
        new_space([[0.5, 1], [1, 0]], [1, 1])


def test_zero_offdiagonal_rejected():
    with pytest.raises(MetricViolation, match="nonpositive"):
        new_space([[0, 0], [0, 0]], [1, 1])


def test_nonpositive_reference_rejected():
    with pytest.raises(NonpositiveReference):
        new_space([[0, 1], [1, 0]], [1.0, 0.0])


def test_cycle_space_distances():
    sp = cycle_space(4, 4.0)
    assert sp.dist[0, 1] == 1.0
    assert sp.dist[0, 2] == 2.0
    assert sp.dist[0, 3] == 1.0
    assert np.allclose(sp.m, 0.25)

    sp3 = cycle_space(3, 3.0)
    off = sp3.dist[~np.eye(3, dtype=bool)]
    assert np.all(off == 1.0)

    sp8 = cycle_space(8, 2 * math.pi)
    assert sp8.dist[0, 4] == pytest.approx(math.pi, abs=1e-15)


def test_cycle_space_rejects_small_n():
    with pytest.raises(ValueError):
        cycle_space(2, 1.0)


@pytest.mark.parametrize("n", range(3, 65))
def test_cycle_triangle_inequality_exhaustive(n):
    # construction already validates the triangle inequality on all triples
    cycle_space(n, 2 * math.pi)


def test_lebesgue_examples():
    dec = lebesgue_decompose(measure([1, 1]), measure([2, 0]))
    assert np.array_equal(dec.density, [0.5, 0.0])
    assert np.array_equal(dec.singular.weights, [0.0, 1.0])

    dec = lebesgue_decompose(measure([1, 1]), measure([1, 1]))
    assert np.array_equal(dec.density, [1.0, 1.0])
    assert np.array_equal(dec.singular.weights, [0.0, 0.0])

    dec = lebesgue_decompose(measure([0, 3]), measure([1, 0]))
    assert np.array_equal(dec.density, [0.0, 0.0])
    assert np.array_equal(dec.singular.weights, [0.0, 3.0])


def test_lebesgue_length_mismatch():
    with pytest.raises(ValueError, match="mismatch"):
        lebesgue_decompose(measure([1, 1]), measure([1, 1, 1]))


def test_lebesgue_reconstruction_random(rng):
    for _ in range(100):
        n = int(rng.integers(1, 12))
        mu0 = random_measure(rng, n, zeros=0.3)
        mu1 = random_measure(rng, n, zeros=0.3)
        dec = lebesgue_decompose(mu0, mu1)
        rebuilt = dec.density * mu1.weights + dec.singular.weights
        assert np.all(np.abs(rebuilt - mu0.weights) <= 1e-15 * np.maximum(mu0.weights, 1.0))
        assert np.all(dec.singular.weights[mu1.weights > 0] == 0.0)


def test_space_json_roundtrip(tmp_path):
    sp = cycle_space(5, 2.5)
    path = tmp_path / "space.json"
    save_space(sp, path)
    back = load_space(path)
    assert back.n == sp.n
    assert np.array_equal(back.dist, sp.dist)
    assert np.array_equal(back.m, sp.m)


def test_measure_json_roundtrip(tmp_path):
    mu = measure([0.25, 0.0, 1.75])
    path = tmp_path / "mu.json"
    save_measure(mu, path)
    back = load_measure(path)
    assert np.array_equal(back.weights, mu.weights)


def test_space_json_rejects_bad_n(tmp_path):
    path = tmp_path / "space.json"
    path.write_text(json.dumps({"n": 3, "dist": [[0, 1], [1, 0]], "m": [1, 1]}))
    with pytest.raises(ValueError, match="declared"):
        load_space(path)


def test_measures_are_immutable():
    mu = measure([1.0, 2.0])
    with pytest.raises(ValueError):
        mu.weights[0] = 5.0
