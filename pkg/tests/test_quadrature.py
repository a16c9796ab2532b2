import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from riesztrace.quadrature import QuadratureBudget, adaptive_cubature, smoothstep_panels


def test_polynomial_exact():
    f = lambda x, o: x[..., 0] ** 7
    tot, err, ok = adaptive_cubature(f, [0.0], [2.0])
    assert tot[0] == pytest.approx(2**8 / 8, rel=1e-14) and ok[0]


def test_owners_sum_panels():
    f = lambda x, o: np.cos(x[..., 0])
    lo = np.array([0.0, 1.0, 2.0])
    hi = np.array([1.0, 2.0, 3.0])
    tot, _, ok = adaptive_cubature(f, lo, hi, [0, 0, 1], 2)
    assert tot == pytest.approx([np.sin(2.0), np.sin(3.0) - np.sin(2.0)], rel=1e-13)
    assert ok.all()


def test_endpoint_singularity_converges():
    f = lambda x, o: x[..., 0] ** -0.5
    tot, _, ok = adaptive_cubature(f, [0.0], [1.0], budget=QuadratureBudget(1e-10, max_depth=200))
    assert ok[0] and tot[0] == pytest.approx(2.0, rel=1e-9)


def test_smoothstep_kinks():
    f = lambda x, o: np.abs(x[..., 0] - 0.3) ** 0.25
    tot, _, ok = smoothstep_panels(f, [0.0, 0.3], [0.3, 1.0], [0, 0], 1)
    exact = (0.3**1.25 + 0.7**1.25) / 1.25
    assert ok[0] and tot[0] == pytest.approx(exact, rel=1e-11)


def test_depth_exhaustion_flags():
    f = lambda x, o: np.sign(np.sin(1e6 * x[..., 0])) / x[..., 0] ** 0.999
    _, _, ok = adaptive_cubature(f, [0.0], [1.0], budget=QuadratureBudget(1e-14, 1e-30, max_depth=3))
    assert not ok[0]


def test_two_dimensional():
    f = lambda x, o: np.exp(x[..., 0] + 2 * x[..., 1])
    tot, _, ok = adaptive_cubature(f, np.array([[0.0, 0.0]]), np.array([[1.0, 1.0]]))
    assert tot[0] == pytest.approx((np.e - 1) * (np.e**2 - 1) / 2, rel=1e-12)


@settings(max_examples=40)
@given(st.floats(-3, 3), st.floats(0.1, 4), st.integers(0, 6))
def test_monomials(a, w, k):
    f = lambda x, o: x[..., 0] ** k
    tot, _, _ = adaptive_cubature(f, [a], [a + w])
    exact = ((a + w) ** (k + 1) - a ** (k + 1)) / (k + 1)
    assert tot[0] == pytest.approx(exact, rel=1e-12, abs=1e-12)


def test_budget_validation():
    with pytest.raises(ValueError):
        QuadratureBudget(rel_tol=0)
    assert QuadratureBudget().tightened(10).rel_tol == pytest.approx(1e-11)
