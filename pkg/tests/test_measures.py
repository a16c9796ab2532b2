import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from riesztrace.errors import PreconditionError
from riesztrace.measures import (ArcPiece, BoxPiece, Segment, TestMeasure, Transform, VectorMeasure,
                                 apply_transform, diameter, dilate_preserving_mass, divergence_pairing,
                                 is_solenoidal, mean, rotation_matrix, support_radius, total_variation)
from riesztrace.smirnov import random_grid_flow

SQUARE = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], float)


def square():
    return VectorMeasure.polyline(SQUARE)


def random_soup(rng, k, d=2):
    return VectorMeasure(d, rng.normal(size=(k, d)), rng.normal(size=(k, d)), rng.uniform(0.1, 3, k))


def test_total_variation_examples(rng):
    assert total_variation(square()) == 4.0
    seg = VectorMeasure.from_segments([Segment([0, 0], [3, 4], 2.0)])
    assert total_variation(seg) == 10.0
    F = random_soup(rng, 50)
    oracle = sum(w * np.sqrt(np.sum((h - t) ** 2)) for t, h, w in zip(F.tails, F.heads, F.weights))
    assert total_variation(F) == pytest.approx(oracle, rel=1e-14)


def test_mean_examples():
    assert np.array_equal(mean(square()), np.zeros(2))
    one = VectorMeasure.from_segments([Segment([0, 0], [1, 0], 1.0)])
    assert np.array_equal(mean(one), [1.0, 0.0])
    anti = VectorMeasure(2, [[0, 0], [1, 0]], [[1, 0], [0, 0]], [1.0, 1.0])
    assert np.array_equal(mean(anti), [0.0, 0.0])


def test_segment_rejects_degenerate():
    with pytest.raises(PreconditionError):
        Segment([0, 0], [0, 0], 1.0)
    with pytest.raises(PreconditionError):
        Segment([0, 0], [1, 0], -1.0)


def test_divergence_pairing_examples(rng):
    assert divergence_pairing(square(), lambda X: np.sin(X[:, 0]) * np.exp(X[:, 1])) == pytest.approx(0, abs=1e-15)
    seg = VectorMeasure.from_segments([Segment([0.2, 0], [1.7, 3], 2.0)])
    assert divergence_pairing(seg, lambda X: X[:, 0]) == pytest.approx(2.0 * 1.5)


def bump(rng, d):
    c = rng.uniform(-1, 8, d)
    s = rng.uniform(0.5, 4)
    return lambda X: np.exp(-np.sum((X - c) ** 2, axis=1) / s**2)


def test_divergence_pairing_grid_flow(rng):
    G = random_grid_flow((8, 8), rng)
    F = G.to_measure()
    scale = total_variation(F)
    for _ in range(50):
        assert abs(divergence_pairing(F, bump(rng, 2))) <= 1e-12 * scale


def test_divergence_detects_imbalance(rng):
    seg = VectorMeasure.from_segments([Segment([0, 0], [1, 0], 1.0)])
    assert not is_solenoidal(seg)
    values = [divergence_pairing(seg, bump(rng, 2)) for _ in range(50)]
    assert max(abs(v) for v in values) > 1e-6


def test_is_solenoidal_examples(rng):
    assert is_solenoidal(square())
    G = random_grid_flow((6, 6), rng)
    assert is_solenoidal(G.to_measure())


def test_is_solenoidal_snaps_close_endpoints():
    pts = SQUARE.copy()
    F = VectorMeasure(2, pts, np.roll(pts, -1, axis=0) + 1e-13, np.ones(4))
    assert is_solenoidal(F)
    assert not is_solenoidal(F, tol=1e-15)


def test_support_radius_examples(rng):
    c, R = support_radius(square())
    assert np.array_equal(c, [0, 0]) and R == pytest.approx(np.sqrt(2))
    c, R = support_radius(VectorMeasure.from_segments([Segment([0, 0], [1, 0], 1.0)]))
    assert R == 1.0
    F = random_soup(rng, 10)
    c, R = support_radius(F)
    t = np.linspace(0, 1, 2001)
    dense = np.concatenate([F.tails[i] + t[:, None] * (F.heads[i] - F.tails[i]) for i in range(len(F))])
    assert R == pytest.approx(np.max(np.linalg.norm(dense - c, axis=1)), rel=1e-12)
    assert R <= 2 * diameter(np.vstack([F.tails, F.heads]))
    with pytest.raises(PreconditionError):
        support_radius(VectorMeasure(2, np.zeros((0, 2)), np.zeros((0, 2)), np.zeros(0)))


def test_transform_examples(rng):
    F = square()
    assert apply_transform(F, Transform.identity(2)).structurally_equal(F)
    seg = VectorMeasure.from_segments([Segment([0, 0], [1, 0], 1.0)])
    assert total_variation(apply_transform(seg, Transform(np.zeros(2), 2.0))) == 2.0
    rot = np.array([[0.0, -1.0], [1.0, 0.0]])
    assert total_variation(apply_transform(F, Transform(np.zeros(2), 1.0, rot))) == pytest.approx(4.0, rel=1e-12)


def test_transform_rejects_bad_rotation():
    with pytest.raises(PreconditionError):
        Transform(np.zeros(2), 1.0, np.array([[1.0, 0.1], [0.0, 1.0]]))
    with pytest.raises(PreconditionError):
        Transform(np.zeros(2), 0.0)


def test_test_measure_masses():
    nu = TestMeasure(2, (ArcPiece([0, 0], [3, 4], 2.0), BoxPiece([0, 0], [2, 0.5], 3.0)))
    assert nu.total_mass == pytest.approx(10.0 + 3.0)
    assert nu.scaled(0.5).total_mass == pytest.approx(6.5)
    with pytest.raises(PreconditionError):
        ArcPiece([0, 0], [1, 0], -1.0)


def test_dilate_preserving_mass():
    nu = TestMeasure(2, (ArcPiece([0, 0], [1, 0], 1.0), BoxPiece([0, 0], [1, 1], 2.0)))
    nu3 = dilate_preserving_mass(nu, 3.0)
    assert nu3.total_mass == pytest.approx(nu.total_mass, rel=1e-14)


@settings(max_examples=60)
@given(st.integers(3, 12), st.floats(0.01, 100), st.integers(0, 2**31))
def test_loops_zero_mean_and_solenoidal(n, scale, seed):
    rng = np.random.default_rng(seed)
    pts = rng.normal(size=(n, 3)) * scale
    F = VectorMeasure.polyline(pts, weight=rng.uniform(0.1, 5))
    assert np.allclose(mean(F), 0, atol=1e-12 * scale * F.weights[0])
    assert is_solenoidal(F)


@settings(max_examples=80)
@given(st.integers(2, 4), st.floats(1e-3, 1e3), st.integers(0, 2**31))
def test_total_variation_transform_laws(d, lam, seed):
    rng = np.random.default_rng(seed)
    F = random_soup(rng, 7, d)
    tv = total_variation(F)
    t = rng.normal(size=d) * 10
    R = rotation_matrix(d, rng)
    assert total_variation(apply_transform(F, Transform(t, lam))) == pytest.approx(lam * tv, rel=1e-12)
    assert total_variation(apply_transform(F, Transform(t, 1.0, R))) == pytest.approx(tv, rel=1e-12)
