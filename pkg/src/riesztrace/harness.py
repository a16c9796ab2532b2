"""Verification suites: two-regime pointwise bounds, trace ratios, kernel tests."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import sympy

from .errors import PreconditionError
from .measures import TestMeasure, VectorMeasure, is_solenoidal, mean, total_variation
from .morrey import morrey_norm
from .quadrature import QuadratureBudget
from .riesz import RieszContext, pair_with_test_measure, potential

DEFAULT_SHELLS = (2.0, 5.0) + tuple(float(f) for f in 10.0 ** np.linspace(1.0, 3.0, 7))


def loop_center(mu: VectorMeasure):
    """Centroid of |mu| and the radius of the smallest ball about it holding the support."""
    if len(mu) == 0:
        raise PreconditionError("empty measure")
    w = mu.weights * mu.lengths
    center = (w @ ((mu.tails + mu.heads) / 2)) / w.sum()
    pts = np.vstack([mu.tails, mu.heads])
    return center, float(np.max(np.linalg.norm(pts - center, axis=1)))


def sphere_directions(d: int, n: int, rng: np.random.Generator) -> np.ndarray:
    if d == 2:
        ang = 2 * np.pi * (np.arange(n) + 0.5) / n
        return np.stack([np.cos(ang), np.sin(ang)], axis=1)
    v = rng.standard_normal((n, d))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


@dataclass(frozen=True)
class RegimeFit:
    inner: float
    outer: float
    shell_factors: tuple
    shell_constants: tuple
    morrey_norm: float
    radius: float
    center: np.ndarray

    def outer_variation(self, from_factor: float = 10.0) -> float:
        """max/min - 1 of the shell constants at |x - center| >= from_factor * R."""
        c = np.array([v for f, v in zip(self.shell_factors, self.shell_constants) if f >= from_factor])
        return float(c.max() / c.min() - 1.0) if len(c) else 0.0


def verify_proposition_bounds(mu: VectorMeasure, alpha: float, n_inner: int = 400, n_directions: int = 360,
                              shells: Sequence[float] = DEFAULT_SHELLS, seed: int = 0,
                              budget: QuadratureBudget = QuadratureBudget()) -> RegimeFit:
    """Fit the near and far constants of |I_alpha mu| for a zero-mean loop.

    Near: sup over x in B(c, 2R) of |I mu(x)| R^{d-alpha-1}.  Far: sup over
    shells |x - c| = f R of |I mu(x)| |x - c|^{d-alpha+1} / R^2.  Both are
    divided by the measured M^1 norm of |mu|, which makes them scale free.
    The center c is the centroid of |mu| and R the support radius about it.
    """
    d = mu.dim
    ctx = RieszContext(d, alpha)
    ctx.require_trace_range()
    tv = total_variation(mu)
    if np.linalg.norm(mean(mu)) > 1e-12 * max(tv, np.finfo(float).tiny):
        raise PreconditionError("measure must have zero mean")
    rng = np.random.default_rng(seed)
    center, R = loop_center(mu)
    q = ctx.exponent

    dirs = sphere_directions(d, n_inner, rng)
    rad = 2.0 * R * rng.random(n_inner) ** (1.0 / d)
    inner_pts = center + rad[:, None] * dirs
    inner_pts = np.vstack([inner_pts, (mu.tails + mu.heads) / 2])
    inner = np.max(np.linalg.norm(potential(ctx, mu, inner_pts, budget), axis=1)) * R ** (q - 1)

    dirs = sphere_directions(d, n_directions, rng)
    consts = []
    for f in shells:
        pts = center + f * R * dirs
        val = np.linalg.norm(potential(ctx, mu, pts, budget), axis=1)
        consts.append(float(np.max(val) * (f * R) ** (q + 1) / R**2))

    m = morrey_norm(TestMeasure.arclength_of(mu), 1.0).upper_bound
    return RegimeFit(float(inner / m), float(max(consts) / m), tuple(float(f) for f in shells),
                     tuple(c / m for c in consts), float(m), R, center)


@dataclass(frozen=True)
class RatioReport:
    alpha: float
    pair_ids: tuple
    ratios: np.ndarray
    sup: float
    mean: float
    argmax: str


def trace_ratio_sweep(Fs: Sequence[VectorMeasure], nus: Sequence[TestMeasure], alphas: Sequence[float],
                      budget: QuadratureBudget = QuadratureBudget(), r_min: float = 0.0,
                      refinement: int = 4) -> list:
    """Ratios int |I_alpha F| dnu / (|F| ||nu||_{M^{d-alpha}}) over every pair."""
    if not Fs or not nus:
        raise PreconditionError("sweep needs at least one F and one nu")
    d = Fs[0].dim
    ctxs = [RieszContext(d, a) for a in alphas]
    for ctx in ctxs:
        ctx.require_trace_range()
    for i, F in enumerate(Fs):
        if F.dim != d or not is_solenoidal(F):
            raise PreconditionError(f"F{i} is not a solenoidal measure in dimension {d}")
    tvs = [total_variation(F) for F in Fs]
    reports = []
    for ctx in ctxs:
        norms = [morrey_norm(nu, ctx.exponent, r_min, refinement).upper_bound for nu in nus]
        ids, ratios = [], []
        for i, F in enumerate(Fs):
            for j, nu in enumerate(nus):
                ids.append(f"F{i:03d}:nu{j:03d}")
                ratios.append(pair_with_test_measure(ctx, F, nu, budget) / (tvs[i] * norms[j]))
        ratios = np.array(ratios)
        k = int(np.argmax(ratios))
        reports.append(RatioReport(ctx.alpha, tuple(ids), ratios, float(ratios[k]),
                                   float(ratios.mean()), ids[k]))
    return reports


class HomogeneousKernel:
    """Vector kernel K = (K_1, ..., K_d), each homogeneous of order -1.

    Components are callables on ``(n, d)`` arrays or sympy-parsable strings in
    ``x1..xd`` (``r`` stands for the Euclidean norm).
    """

    def __init__(self, d: int, components: Sequence, check: bool = True):
        if len(components) != d:
            raise PreconditionError(f"need {d} kernel components, got {len(components)}")
        self.d = d
        self._fns = [self._compile(c) for c in components]
        if check:
            defect = self.homogeneity_defect(np.random.default_rng(0))
            if defect > 1e-9:
                raise PreconditionError(f"kernel is not homogeneous of order -1 (defect {defect:.3g})")

    def _compile(self, comp) -> Callable:
        if callable(comp):
            return comp
        xs = sympy.symbols(" ".join(f"x{i + 1}" for i in range(self.d)))
        expr = sympy.sympify(comp, locals={"r": sympy.sqrt(sum(x**2 for x in xs))})
        fn = sympy.lambdify(xs, expr, "numpy")
        return lambda X: np.broadcast_to(np.asarray(fn(*X.T), dtype=float), (len(X),))

    def __call__(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.stack([np.asarray(f(X), dtype=float) for f in self._fns], axis=1)

    def homogeneity_defect(self, rng: np.random.Generator, n: int = 200) -> float:
        xi = rng.standard_normal((n, self.d))
        lam = np.exp(rng.uniform(-3, 3, n))
        base = self(xi)
        scaled = self(xi * lam[:, None]) * lam[:, None]
        scale = max(float(np.max(np.abs(base))), np.finfo(float).tiny)
        return float(np.max(np.abs(scaled - base)) / scale)


def rotation_kernel() -> HomogeneousKernel:
    """(-xi_2, xi_1) / |xi|^2 in the plane: sum_j K_j xi_j = 0."""
    return HomogeneousKernel(2, ["-x2/(x1**2 + x2**2)", "x1/(x1**2 + x2**2)"])


def gradient_kernel(d: int = 2) -> HomogeneousKernel:
    """xi_j / |xi|^2, for which sum_j K_j xi_j = 1."""
    return HomogeneousKernel(d, [f"x{j + 1}/r**2" for j in range(d)])


def zero_kernel(d: int = 2) -> HomogeneousKernel:
    return HomogeneousKernel(d, [lambda X: np.zeros(len(X))] * d)


@dataclass(frozen=True)
class ConjectureReport:
    residual: float
    pairing: float
    resolutions: tuple
    pairings: tuple
    growth: tuple
    verdict: str


def _segment_pairing(K: HomogeneousKernel, n: int) -> float:
    """int |K[F]| dnu for F = e_1 ds and nu = ds on [0, 1] e_1.

    Symmetric midpoint sums with the self cell left out, which is the
    principal-value discretization of the singular integral.
    """
    k = np.arange(1, n)
    e1 = np.zeros((n - 1, K.d))
    e1[:, 0] = k / n
    right = K(e1)[:, 0] / n
    left = K(-e1)[:, 0] / n
    g = np.concatenate([left[::-1], [0.0], right])
    # v_i = sum_j g[(i - j) + n - 1]: a window sum over a prefix sum of g
    c = np.cumsum(np.concatenate([[0.0], g]))
    i = np.arange(n)
    v = c[i + n] - c[i]
    return float(np.mean(np.abs(v)))


def conjecture_segment_test(K: HomogeneousKernel, resolution: int = 1024, n_sphere: int = 720,
                            seed: int = 0, threshold: float = 0.25 * np.log(2.0)) -> ConjectureReport:
    """Cancellation residual and same-segment pairing growth for a kernel."""
    if resolution < 4:
        raise PreconditionError("resolution must be at least 4")
    xi = sphere_directions(K.d, n_sphere, np.random.default_rng(seed))
    if K.d > 2:
        xi = np.vstack([xi, np.eye(K.d), -np.eye(K.d)])
    vals = K(xi)
    if not np.all(np.isfinite(vals)):
        raise PreconditionError("kernel is singular on the unit sphere sample")
    residual = float(np.max(np.abs(np.sum(vals * xi, axis=1))))
    res = (resolution, 2 * resolution, 4 * resolution)
    pairings = tuple(_segment_pairing(K, n) for n in res)
    growth = (pairings[1] - pairings[0], pairings[2] - pairings[1])
    verdict = "flagged" if min(growth) >= threshold else "consistent"
    return ConjectureReport(residual, pairings[0], res, pairings, growth, verdict)
