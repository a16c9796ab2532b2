import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import segment_integral_mp
from riesztrace.counterexample import (CounterexampleConfig, blowup_table, build_square_loop, default_t_ladder,
                                       first_component_closed_form, segment_measure, verify_lower_bound, x1_grid)
from riesztrace.errors import PreconditionError, SingularPointError
from riesztrace.measures import is_solenoidal, mean, total_variation
from riesztrace.morrey import morrey_norm
from riesztrace.riesz import RieszContext, eval_vector_potential


def test_square_loop_shape():
    F = build_square_loop(3)
    assert F.dim == 3 and len(F) == 4
    assert total_variation(F) == 4.0
    assert is_solenoidal(F) and np.array_equal(mean(F), np.zeros(3))


def test_closed_form_frozen_value():
    assert first_component_closed_form(0.5, -0.1, 0.0) == pytest.approx(3.7444942118401388, rel=1e-14)


def test_closed_form_against_mpmath():
    x = np.array([0.3, -0.2, 0.4])
    want = segment_integral_mp(1.0, [0, 0, 0], [1, 0, 0], x) - segment_integral_mp(1.0, [0, 1, 0], [1, 1, 0], x)
    assert first_component_closed_form(0.3, -0.2, 0.4) == pytest.approx(float(want), rel=1e-13)


def test_closed_form_outside_strip():
    for x1 in (-2.0, 1e-9 - 1e-3, 3.0):
        x = np.array([x1, 0.3])
        want = segment_integral_mp(1.0, [0, 0], [1, 0], x) - segment_integral_mp(1.0, [0, 1], [1, 1], x)
        assert first_component_closed_form(x1, 0.3, 0.0) == pytest.approx(float(want), rel=1e-12)
    # on the line of an edge but off the segment
    want = segment_integral_mp(1.0, [0, 0], [1, 0], [2.0, 0.0]) - segment_integral_mp(1.0, [0, 1], [1, 1], [2.0, 0.0])
    assert first_component_closed_form(2.0, 0.0, 0.0) == pytest.approx(float(want), rel=1e-12)


def test_tiny_offset_far_from_edge():
    want = np.log(2.0) - (np.arcsinh(2.0) - np.arcsinh(1.0))
    for tiny in (3e-264, 2.2250738585e-313, 0.0):
        assert first_component_closed_form(2.0, tiny, 0.0) == pytest.approx(want, rel=1e-13)


def test_on_edge_singular():
    with pytest.raises(SingularPointError):
        first_component_closed_form(0.5, 0.0, 0.0)


@settings(max_examples=60)
@given(st.floats(-2, 3), st.floats(-2, 3), st.floats(0, 2), st.integers(2, 5))
def test_closed_form_matches_potential(x1, x2, xp, d):
    if d == 2:
        xp = 0.0
    if xp < 1e-6:
        # the full potential is singular on every edge of the square
        on_horizontal = min(abs(x2), abs(x2 - 1)) < 1e-6 and -1e-6 < x1 < 1 + 1e-6
        on_vertical = min(abs(x1), abs(x1 - 1)) < 1e-6 and -1e-6 < x2 < 1 + 1e-6
        if on_horizontal or on_vertical:
            return
    x = np.zeros(d)
    x[0], x[1] = x1, x2
    if d > 2:
        x[2] = xp
    got = eval_vector_potential(RieszContext(d, d - 1.0), build_square_loop(d), x)[0]
    assert first_component_closed_form(x1, x2, xp) == pytest.approx(got, rel=1e-10, abs=1e-13)


def test_lower_bound_all_s():
    rows = verify_lower_bound()
    assert [r.s for r in rows] == [1e-2, 1e-4, 1e-6, 1e-8]
    for r in rows:
        assert r.pass_flag and r.min_margin >= 0
        assert r.min_value >= r.intermediate - 1e-12 or r.min_value >= r.bound


def test_x1_grid_open():
    g = x1_grid(999)
    assert len(g) == 999 and g[0] > 0 and g[-1] < 1


def test_config_validation():
    with pytest.raises(PreconditionError):
        CounterexampleConfig(s_values=(1.5,))
    with pytest.raises(PreconditionError):
        CounterexampleConfig(d=1)
    with pytest.raises(PreconditionError):
        CounterexampleConfig(t_values=(-1.0,))


def test_segment_measure_norm():
    res = morrey_norm(segment_measure(1e-4), 1.0)
    assert res.certified and res.upper_bound == pytest.approx(2.0, abs=1e-12)


def test_blowup_linear():
    rows = blowup_table(t_values=(1.0, 5.0, 10.0, 20.0))
    assert [r.dual_lower_bound for r in rows] == pytest.approx([0.5, 2.5, 5.0, 10.0], rel=1e-12)
    for r in rows:
        assert r.superlevel_mass == 1.0 and r.potential_bound > r.t and r.min_sampled > r.t


def test_default_ladder():
    t = default_t_ladder(7)
    assert np.allclose(np.diff(t), np.log(10))
    rows = blowup_table(t_values=t)
    assert np.all(np.diff([r.dual_lower_bound for r in rows]) >= np.log(10) / 2 - 0.01)


def test_blowup_higher_dimension():
    rows = blowup_table(CounterexampleConfig(d=4), t_values=(3.0,))
    assert rows[0].dual_lower_bound == pytest.approx(1.5)
