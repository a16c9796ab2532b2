import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import dense_arc_pairing, hyp_potential, segment_integral_mp
from riesztrace.errors import PreconditionError, SingularPointError
from riesztrace.measures import (ArcPiece, BoxPiece, Segment, TestMeasure, Transform, VectorMeasure,
                                 apply_transform, rotation_matrix)
from riesztrace.quadrature import QuadratureBudget
from riesztrace.riesz import (RieszContext, eval_vector_potential, pair_with_test_measure, potential,
                              segment_kernel_integral)

SQUARE = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], float)

# frozen from a 30-digit mpmath evaluation split at the foot point
FROZEN = [
    (0.5, [0, 0, 0], [1, 0, 0], [0.5, 0.3, 0.0], 1.5937630769610796),
    (1.0, [0, 0], [1, 0], [0.5, 0.5], 1.762747174039086),
    (0.5, [0, 0], [1, 0], [0.5, 0.5], 1.3258107200920897),
    (0.2, [0, 0], [2, 1], [3.0, -1.0], 1.8544937136118511),
]


@pytest.mark.parametrize("q,tail,head,x,value", FROZEN)
def test_frozen_segment_values(q, tail, head, x, value):
    d = len(tail)
    ctx = RieszContext(d, d - q)
    got = segment_kernel_integral(ctx, Segment(tail, head, 1.0), x)
    assert got == pytest.approx(value, rel=1e-10)
    assert segment_integral_mp(q, tail, head, x) == pytest.approx(value, rel=1e-14)


def test_asinh_closed_form():
    ctx = RieszContext(2, 1.0)
    assert segment_kernel_integral(ctx, Segment([0, 0], [1, 0], 1.0), [0.5, 0.5]) == pytest.approx(
        2 * np.arcsinh(1.0), rel=1e-14)


def test_far_field_limit():
    ctx = RieszContext(3, 2.5)
    R = 1e6
    v = segment_kernel_integral(ctx, Segment([0, 0, 0], [1, 0, 0], 1.0), [0.5, R, 0])
    assert v * R**0.5 == pytest.approx(1.0, rel=1e-8)


def test_on_segment_is_singular():
    ctx = RieszContext(2, 1.0)
    with pytest.raises(SingularPointError):
        segment_kernel_integral(ctx, Segment([0, 0], [1, 0], 1.0), [0.5, 0.0])


def test_context_ranges():
    with pytest.raises(PreconditionError):
        RieszContext(2, 0.5)
    with pytest.raises(PreconditionError):
        RieszContext(2, 1.0).require_trace_range()
    with pytest.raises(PreconditionError):
        RieszContext(2, 2.0).require_evaluable()
    assert RieszContext(2, 1.5).constant == 1.0
    assert RieszContext(2, 1.5, normalize=True).constant > 0


def test_square_loop_potential_matches_hypergeometric(rng):
    F = VectorMeasure.polyline(SQUARE)
    X = rng.uniform(-1, 2, (40, 2))
    X = X[np.min(np.abs(np.stack([X[:, 0], X[:, 0] - 1, X[:, 1], X[:, 1] - 1])), axis=0) > 1e-3]
    got = potential(RieszContext(2, 1.5), F, X)
    assert np.allclose(got, hyp_potential(0.5, F, X), rtol=1e-10, atol=1e-12)


def test_quadrature_agrees_with_closed_form(rng):
    ctx = RieszContext(3, 2.0)
    F = VectorMeasure.polyline(rng.normal(size=(5, 3)))
    X = rng.normal(size=(30, 3)) * 2
    a = potential(ctx, F, X)
    b = potential(ctx, F, X, force_quadrature=True)
    assert np.allclose(a, b, rtol=1e-10, atol=1e-12)


@settings(max_examples=60)
@given(st.integers(2, 4), st.floats(0.05, 0.95), st.floats(1e-3, 1e3), st.integers(0, 2**31))
def test_dilation_law(d, q, lam, seed):
    rng = np.random.default_rng(seed)
    alpha = d - q
    ctx = RieszContext(d, alpha)
    F = VectorMeasure.polyline(rng.normal(size=(4, d)))
    x = rng.normal(size=d) * 3
    base = eval_vector_potential(ctx, F, x)
    scaled = eval_vector_potential(ctx, apply_transform(F, Transform(np.zeros(d), lam)), lam * x)
    k = lam ** (alpha - d + 1)
    assert np.allclose(scaled, k * base, rtol=1e-9, atol=1e-12 * k * np.abs(base).max())


@settings(max_examples=40)
@given(st.integers(2, 4), st.integers(0, 2**31))
def test_rigid_motion_equivariance(d, seed):
    rng = np.random.default_rng(seed)
    ctx = RieszContext(d, d - 0.4)
    F = VectorMeasure.polyline(rng.normal(size=(5, d)))
    x = rng.normal(size=d) * 3
    R = rotation_matrix(d, rng)
    t = rng.normal(size=d)
    moved = apply_transform(F, Transform(t, 1.0, R))
    a = eval_vector_potential(ctx, moved, R @ x + t)
    b = R @ eval_vector_potential(ctx, F, x)
    assert np.allclose(a, b, rtol=1e-9, atol=1e-12 * np.abs(b).max())


def test_linearity(rng):
    ctx = RieszContext(2, 1.3)
    F = VectorMeasure.polyline(SQUARE)
    G = VectorMeasure.polyline(rng.normal(size=(5, 2)) + 5)
    X = rng.normal(size=(10, 2)) - 3
    both = VectorMeasure(2, np.vstack([F.tails, G.tails]), np.vstack([F.heads, G.heads]),
                         np.concatenate([2 * F.weights, G.weights]))
    assert np.allclose(potential(ctx, both, X), 2 * potential(ctx, F, X) + potential(ctx, G, X), rtol=1e-12)


def test_pairing_arc_matches_dense_midpoint():
    ctx = RieszContext(2, 1.5)
    F = VectorMeasure.polyline(SQUARE)
    nu = TestMeasure(2, (ArcPiece([-0.5, 0.4], [2.0, 0.7], 1.0),))
    got = pair_with_test_measure(ctx, F, nu)
    dense = dense_arc_pairing(lambda P: potential(ctx, F, P), [-0.5, 0.4], [2.0, 0.7], n=200000)
    assert got == pytest.approx(dense, rel=1e-6)


def test_pairing_disjoint_box_matches_tensor_grid():
    ctx = RieszContext(2, 1.5)
    F = VectorMeasure.polyline(SQUARE)
    nu = TestMeasure(2, (BoxPiece([2.0, 0.0], [3.0, 1.0], 1.0),))
    got = pair_with_test_measure(ctx, F, nu)
    g, w = np.polynomial.legendre.leggauss(40)
    xs = 2.5 + g / 2
    ys = 0.5 + g / 2
    P = np.array([[x, y] for x in xs for y in ys])
    W = np.outer(w, w).ravel() / 4
    assert got == pytest.approx(np.sum(W * np.linalg.norm(potential(ctx, F, P), axis=1)), rel=1e-12)


def test_pairing_frozen_square_loop():
    ctx = RieszContext(2, 1.5)
    F = VectorMeasure.polyline(SQUARE)
    nu = TestMeasure(2, (ArcPiece([0, -0.5], [1, -0.5], 1.0),))
    # 2F1 closed-form potential on a dense midpoint grid
    assert pair_with_test_measure(ctx, F, nu, QuadratureBudget(1e-11)) == pytest.approx(0.4921977635712885, rel=1e-9)


def test_pairing_additive_over_pieces():
    ctx = RieszContext(2, 1.5)
    F = VectorMeasure.polyline(SQUARE)
    a = TestMeasure(2, (ArcPiece([0, -0.3], [1, -0.3], 1.0),))
    b = TestMeasure(2, (BoxPiece([2.0, 0.0], [2.5, 0.5], 2.0),))
    whole = pair_with_test_measure(ctx, F, a.concat(b))
    parts = pair_with_test_measure(ctx, F, a) + pair_with_test_measure(ctx, F, b)
    assert whole == pytest.approx(parts, rel=1e-9)
