import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from riesztrace.content import GridField
from riesztrace.corpus import test_measures as corpus_measures
from riesztrace.errors import FormatError
from riesztrace.formats import (dumps_grid_field, dumps_grid_flow, dumps_segments, dumps_test_measure, fmt,
                                loads_grid_field, loads_grid_flow, loads_segments, loads_test_measure,
                                read_segments, write_csv)
from riesztrace.measures import VectorMeasure
from riesztrace.smirnov import random_grid_flow


def test_fmt():
    assert fmt(True) == "true" and fmt(np.int64(3)) == "3"
    assert float(fmt(0.1)) == 0.1


@settings(max_examples=40)
@given(st.integers(2, 4), st.integers(1, 10), st.integers(0, 2**31))
def test_segments_roundtrip(d, n, seed):
    rng = np.random.default_rng(seed)
    F = VectorMeasure(d, rng.normal(size=(n, d)), rng.normal(size=(n, d)), rng.uniform(0.1, 5, n))
    assert loads_segments(dumps_segments(F)).structurally_equal(F)


def test_segments_loop_separators():
    F = VectorMeasure.polyline(np.eye(3)).concat(VectorMeasure.polyline(np.eye(3) + 5))
    text = dumps_segments(F, [3, 3])
    assert text.count("# loop") == 2
    assert loads_segments(text).structurally_equal(F)


def test_segments_errors(tmp_path):
    with pytest.raises(FormatError, match=":3:"):
        loads_segments("dim=2\n0 0 1 0 1\n0 0 1\n", "x.txt")
    with pytest.raises(FormatError, match=":1:"):
        loads_segments("dimension 2\n", "x.txt")
    with pytest.raises(FormatError, match=":2:"):
        loads_segments("dim=2\n0 0 a 0 1\n", "x.txt")
    with pytest.raises(FormatError):
        read_segments(tmp_path / "missing.txt")


def test_test_measure_roundtrip():
    for nu in corpus_measures():
        assert loads_test_measure(dumps_test_measure(nu)).structurally_equal(nu)


def test_test_measure_errors():
    with pytest.raises(FormatError, match=":2:"):
        loads_test_measure("dim=2\nblob 0 0 1 1 1\n", "m.txt")


def test_grid_field_roundtrip(rng):
    for vals in (rng.normal(size=(3, 4)), rng.normal(size=(3, 4, 2))):
        g = GridField(2, [0.5, -1.0], 0.25, (3, 4), vals)
        back = loads_grid_field(dumps_grid_field(g))
        assert np.array_equal(back.values, g.values) and np.array_equal(back.origin, g.origin)
        assert back.spacing == g.spacing


def test_grid_field_errors():
    with pytest.raises(FormatError, match="expected 4 cells"):
        loads_grid_field("2 1.0 2 2\n1\n2\n3\n")
    with pytest.raises(FormatError, match=":3:"):
        loads_grid_field("2 1.0 2 2\n1\n2 3\n", "g.txt")


def test_grid_flow_roundtrip(rng):
    G = random_grid_flow((5, 6), rng)
    from riesztrace.smirnov import grid_edges
    tails, heads, _ = grid_edges((5, 6))
    flows = np.zeros(len(tails), dtype=np.int64)
    for t, h, f in zip(G.tails, G.heads, G.flows):
        idx = np.flatnonzero((tails == min(t, h)) & (heads == max(t, h)))[0]
        flows[idx] = f if t < h else -f
    back = loads_grid_flow(dumps_grid_flow((5, 6), flows))
    assert back.total_variation() == G.total_variation()
    assert np.array_equal(back.tails, G.tails) and np.array_equal(back.flows, G.flows)


def test_grid_flow_errors():
    with pytest.raises(FormatError, match=":2:"):
        loads_grid_flow("grid 2 3 3 1.0\n8 0 1\n", "f.txt")
    with pytest.raises(FormatError, match=":1:"):
        loads_grid_flow("mesh 2 3 3\n", "f.txt")


def test_csv(tmp_path):
    write_csv(tmp_path / "a.csv", ["x", "ok"], [[0.1, True]])
    assert (tmp_path / "a.csv").read_text() == "x,ok\n0.10000000000000001,true\n"
