"""The endpoint counterexample at alpha = d - 1.

The boundary of the unit square, embedded in the (x1, x2)-plane of R^d, is a
closed loop whose potential with kernel 1/|x| grows like ln(1/s) on the
segment I_s = {(x1, -s, 0) : 0 < x1 < 1}.  Normalized arclength on I_s has
Morrey norm exactly 2, so duality turns the pointwise growth into an
unbounded lower bound for t * H^1_inf({|I F| > t}).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import PreconditionError, SingularPointError
from .measures import TestMeasure, VectorMeasure
from .morrey import morrey_norm

DEFAULT_S = (1e-2, 1e-4, 1e-6, 1e-8)


@dataclass(frozen=True)
class CounterexampleConfig:
    d: int = 2
    s_values: tuple = DEFAULT_S
    x1_samples: int = 999
    t_values: tuple | None = None

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 2:
            raise PreconditionError("d must be an integer >= 2")
        if self.x1_samples < 3:
            raise PreconditionError("x1_samples must be at least 3")
        if any(not (0 < s < 1) for s in self.s_values):
            raise PreconditionError("every s must lie in (0, 1)")
        object.__setattr__(self, "s_values", tuple(float(s) for s in self.s_values))
        if self.t_values is not None:
            if any(t <= 0 for t in self.t_values):
                raise PreconditionError("t values must be positive")
            object.__setattr__(self, "t_values", tuple(float(t) for t in self.t_values))


def build_square_loop(d: int = 2) -> VectorMeasure:
    """Counterclockwise boundary of (0,1)^2 in the first two coordinates."""
    if int(d) != d or d < 2:
        raise PreconditionError("d must be an integer >= 2")
    corners = np.zeros((4, int(d)))
    corners[:, :2] = [[0, 0], [1, 0], [1, 1], [0, 1]]
    return VectorMeasure.polyline(corners, closed=True)


def _edge_integral(p, c):
    """A(p, c) = int_0^1 (|p - y|^2 + c^2)^{-1/2} dy, stable for all p."""
    p, c = np.broadcast_arrays(np.asarray(p, dtype=float), np.asarray(c, dtype=float))
    out = np.empty(p.shape)
    inside = (p >= 0) & (p <= 1)
    if np.any(inside & (c == 0)):
        raise SingularPointError("evaluation point lies on a horizontal edge of the square")
    before = p < 0
    after = p > 1
    m = inside
    out[m] = np.arcsinh(p[m] / c[m]) + np.arcsinh((1 - p[m]) / c[m])
    for mask, near, far in ((before, -p, 1 - p), (after, p - 1, p)):
        n, f, cc = near[mask], far[mask], c[mask]
        hn, hf = np.hypot(n, cc), np.hypot(f, cc)
        # asinh(f/c) - asinh(n/c) = log((f + hf) / (n + hn)), all terms positive
        out[mask] = np.log1p((f - n) * (1.0 + (f + n) / (hf + hn)) / (n + hn))
    return out


def first_component_closed_form(x1, x2, x_perp_norm):
    """First component of I_{d-1} of the square loop at (x1, x2, x').

    Only the two horizontal edges contribute; ``x_perp_norm`` is |x'| over
    the coordinates beyond the first two.
    """
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    xp = np.asarray(x_perp_norm, dtype=float)
    c0 = np.hypot(x2, xp)
    c1 = np.hypot(x2 - 1.0, xp)
    val = _edge_integral(x1, c0) - _edge_integral(x1, c1)
    return val if val.ndim else float(val)


def x1_grid(n: int) -> np.ndarray:
    """Uniform open grid of (0, 1), endpoints excluded by half a step."""
    return (np.arange(n) + 0.5) / n


@dataclass(frozen=True)
class LowerBoundRow:
    s: float
    min_value: float
    bound: float
    intermediate: float
    pass_flag: bool
    min_margin: float


def verify_lower_bound(config: CounterexampleConfig = CounterexampleConfig()) -> list:
    """Check |first component| >= ln(1/s) - 1 along I_s for every s."""
    x1 = x1_grid(config.x1_samples)
    rows = []
    for s in config.s_values:
        vals = np.abs(first_component_closed_form(x1, -s, 0.0))
        bound = np.log(1.0 / s) - 1.0
        intermediate = float(np.arcsinh(1.0 / (2.0 * s)) - 1.0)
        rows.append(
            LowerBoundRow(s, float(vals.min()), float(bound), intermediate,
                          bool(np.all(vals >= bound)), float((vals - bound).min()))
        )
    return rows


def segment_measure(s: float, d: int = 2) -> TestMeasure:
    """mu_s: unit-density arclength on I_s."""
    a = np.zeros(d)
    b = np.zeros(d)
    a[1] = b[1] = -s
    b[0] = 1.0
    return TestMeasure.polyline(np.array([a, b]))


def default_t_ladder(n: int = 9) -> tuple:
    """t = 1 + k ln 10: each step is one decade of 1/s."""
    return tuple(1.0 + k * np.log(10.0) for k in range(n))


@dataclass(frozen=True)
class BlowupRow:
    t: float
    s: float
    potential_bound: float
    min_sampled: float
    morrey_norm: float
    superlevel_mass: float
    dual_lower_bound: float


def blowup_table(config: CounterexampleConfig = CounterexampleConfig(), t_values=None) -> list:
    """Dual lower bounds for t * H^1_inf({|I_{d-1} F| > t}) along a t ladder.

    For each t, s = exp(-t-1)/2 so that ln(1/s) - 1 > t; then every point of
    I_s lies in the superlevel set, mu_s of it is 1, and mu_s / ||mu_s||
    certifies H^1_inf >= 1 / ||mu_s||.
    """
    ts = t_values if t_values is not None else (config.t_values or default_t_ladder())
    x1 = x1_grid(config.x1_samples)
    rows = []
    for t in ts:
        s = float(np.exp(-t - 1.0) / 2.0)
        bound = float(np.log(1.0 / s) - 1.0)
        sampled = np.abs(first_component_closed_form(x1, -s, 0.0))
        res = morrey_norm(segment_measure(s, config.d), 1.0)
        if not res.certified:
            raise PreconditionError("segment Morrey norm was not certified")
        if bound > t and np.all(sampled > t):
            mass = 1.0
        else:
            mass = float(np.mean(sampled > t))
        rows.append(BlowupRow(float(t), s, bound, float(sampled.min()), res.upper_bound, mass,
                              float(t) * mass / res.upper_bound))
    return rows
