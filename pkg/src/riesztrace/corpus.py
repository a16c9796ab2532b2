"""Measure families for sweeps: grid-flow loops, parametric loops, test measures."""

from __future__ import annotations

import numpy as np

from .measures import BoxPiece, TestMeasure, VectorMeasure
from .smirnov import decompose, loops_to_measures, random_grid_flow


def grid_flow_loops(rng: np.random.Generator, count: int, shape=(8, 8), min_edges: int = 4) -> list:
    """Simple loops taken from decompositions of random balanced grid flows.

    Node coordinates are rescaled so every loop lies in the unit square, and
    loop weights are reset to 1.
    """
    out = []
    scale = 1.0 / (max(shape) - 1)
    while len(out) < count:
        G = random_grid_flow(shape, rng, max_value=2, density=0.4)
        for mu in loops_to_measures(G, decompose(G)):
            if len(mu) >= min_edges:
                out.append(VectorMeasure(mu.dim, mu.tails * scale, mu.heads * scale, np.ones(len(mu))))
                if len(out) == count:
                    break
    return out


def square(side: float = 1.0, corner=(0.0, 0.0)) -> VectorMeasure:
    c = np.asarray(corner, dtype=float)
    return VectorMeasure.polyline(c + side * np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=float))


def rectangle(width: float, height: float, corner=(0.0, 0.0)) -> VectorMeasure:
    c = np.asarray(corner, dtype=float)
    return VectorMeasure.polyline(c + np.array([[0, 0], [width, 0], [width, height], [0, height]]))


def regular_polygon(n: int, radius: float = 0.5, center=(0.5, 0.5), phase: float = 0.0) -> VectorMeasure:
    ang = phase + 2 * np.pi * np.arange(n) / n
    return VectorMeasure.polyline(np.asarray(center) + radius * np.stack([np.cos(ang), np.sin(ang)], axis=1))


def parametric_loops() -> list:
    """Ten planar families: squares, rectangles up to aspect 100, n-gons."""
    return [
        square(1.0),
        square(0.25, (0.4, 0.4)),
        rectangle(1.0, 0.5),
        rectangle(1.0, 0.1),
        rectangle(1.0, 0.01),
        rectangle(0.02, 1.0, (0.5, 0.0)),
        regular_polygon(3),
        regular_polygon(5),
        regular_polygon(8, 0.3),
        regular_polygon(24, 0.5, phase=0.1),
    ]


def segment(a, b, density: float = 1.0) -> TestMeasure:
    return TestMeasure.polyline(np.array([a, b], dtype=float), density)


def test_measures() -> list:
    """Twenty planar test measures: segments at varying distance and boxes."""
    out = []
    for s in (0.5, 0.1, 1e-2, 1e-3):
        out.append(segment((0.0, -s), (1.0, -s)))
    out += [
        segment((0.5, -1.0), (0.5, 2.0)),
        segment((-0.5, -0.5), (1.5, 1.5)),
        segment((0.0, 0.5), (1.0, 0.5)),
        segment((2.0, 0.0), (3.0, 0.0)),
        segment((0.0, 0.0), (1.0, 0.0)),
        segment((0.25, 0.25), (0.75, 0.25), 3.0),
        TestMeasure.polyline(np.array([[0.0, 1.2], [0.5, 1.6], [1.0, 1.2]])),
        TestMeasure.polyline(np.array([[0.1, 0.1], [0.9, 0.1], [0.9, 0.9], [0.1, 0.9]]), closed=True),
    ]
    boxes = [
        ((0.0, 0.0), (1.0, 1.0)),
        ((0.2, 0.2), (0.3, 0.3)),
        ((-1.0, -1.0), (2.0, 2.0)),
        ((0.4, -0.1), (0.6, 0.1)),
        ((3.0, 3.0), (4.0, 4.0)),
        ((0.0, -0.01), (1.0, 0.01)),
        ((0.45, 0.45), (0.55, 0.55)),
    ]
    for lo, hi in boxes:
        out.append(TestMeasure(2, (BoxPiece(np.array(lo), np.array(hi), 1.0),)))
    out.append(segment((0.0, 0.0), (0.0, 1.0)).concat(
        TestMeasure(2, (BoxPiece(np.array([0.6, 0.6]), np.array([0.8, 0.8]), 2.0),))))
    return out


def default_corpus(rng: np.random.Generator, n_grid_loops: int = 50):
    """(loops, test measures): grid-flow loops plus parametric families, and 20 test measures."""
    return grid_flow_loops(rng, n_grid_loops) + parametric_loops(), test_measures()
