"""Riesz potentials of segment-carried measures.

The kernel is ``|x - y|^{-(d - alpha)}``, optionally multiplied by the
standard normalization ``c_{d,alpha}``.  For ``d - alpha = 1`` each segment
integral has an asinh closed form; for ``d - alpha < 1`` it is computed by
adaptive Gauss quadrature on panels graded geometrically toward the foot of
the perpendicular from the evaluation point.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gamma

from .errors import PreconditionError, SingularPointError, ToleranceNotMet
from .measures import ArcPiece, Segment, TestMeasure, VectorMeasure
from .quadrature import QuadratureBudget, adaptive_cubature, smoothstep_panels

ON_SEGMENT_TOL = 1e-13
INNER_TIGHTEN = 100.0
SPLITS = 5


@dataclass(frozen=True)
class RieszContext:
    d: int
    alpha: float
    normalize: bool = False

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 2:
            raise PreconditionError("dimension d must be an integer >= 2")
        if not (self.d - 1 <= self.alpha <= self.d):
            raise PreconditionError(f"alpha={self.alpha} outside [d-1, d] = [{self.d - 1}, {self.d}]")
        object.__setattr__(self, "d", int(self.d))
        object.__setattr__(self, "alpha", float(self.alpha))

    @property
    def exponent(self) -> float:
        """Kernel decay exponent d - alpha."""
        return self.d - self.alpha

    @property
    def constant(self) -> float:
        if not self.normalize:
            return 1.0
        d, a = self.d, self.alpha
        return float(gamma((d - a) / 2) / (2**a * np.pi ** (d / 2) * gamma(a / 2)))

    def require_evaluable(self):
        if self.alpha >= self.d:
            raise PreconditionError(
                "alpha = d is the L-infinity case handled in the literature; "
                "potential evaluation needs d - 1 <= alpha < d"
            )

    def require_trace_range(self):
        if not (self.d - 1 < self.alpha < self.d):
            raise PreconditionError(
                f"trace estimates need d-1 < alpha < d (got alpha={self.alpha}, d={self.d}); "
                "the endpoint alpha = d-1 is covered by the counterexample subcommand"
            )


def asinh_difference(a, b):
    """asinh(b) - asinh(a) for 0 <= a <= b without cancellation."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    # (b - a)(b + a) / (b sqrt(1 + a^2) + a sqrt(1 + b^2)), divided through by b
    r = np.divide(a, b, out=np.zeros(np.broadcast(a, b).shape), where=b > 0)
    arg = (b - a) * (1.0 + r) / (np.hypot(1.0, a) + r * np.hypot(1.0, b))
    return np.arcsinh(arg)


def _foot_geometry(tail, head, X):
    tail = np.asarray(tail, dtype=float)
    diff = np.asarray(head, dtype=float) - tail
    L = float(np.linalg.norm(diff))
    u = diff / L
    rel = X - tail
    p = rel @ u
    rho = np.linalg.norm(rel - p[:, None] * u, axis=1)
    return L, p, rho


def _halves(L, p):
    """Split [0, L] at the foot p into one or two distance-from-foot intervals.

    Returns (point index, near distance, far distance) per half-interval.
    """
    n = len(p)
    idx = np.arange(n)
    inside = (p >= 0) & (p <= L)
    before = p < 0
    after = p > L
    ua = np.empty(n)
    ub = np.empty(n)
    ua[inside], ub[inside] = 0.0, p[inside]
    ua[before], ub[before] = -p[before], L - p[before]
    ua[after], ub[after] = p[after] - L, p[after]
    second = np.flatnonzero(inside)
    owner = np.concatenate([idx, second])
    near = np.concatenate([ua, np.zeros(len(second))])
    far = np.concatenate([ub, L - p[second]])
    return owner, near, far


def _graded_panels(near, far, rho):
    """Panels on [near, far] graded geometrically from the kernel's peak scale rho."""
    start = np.maximum(near, rho)
    single = start >= far
    n_geo = np.where(single, 0, np.ceil(np.log2(np.where(single, 1.0, far / start))).astype(int))
    n_geo = np.maximum(n_geo, np.where(single, 0, 1))
    lead = (near < start) & ~single
    counts = np.where(single, 1, n_geo + lead.astype(int))
    half_id = np.repeat(np.arange(len(near)), counts)
    first = np.repeat(np.cumsum(counts) - counts, counts)
    k = np.arange(len(half_id)) - first
    # position within the geometric ladder; the leading [near, rho] panel gets -1
    j = k - lead[half_id].astype(int)
    s = start[half_id]
    a = np.where(j < 0, near[half_id], s * np.exp2(np.maximum(j, 0)))
    b = np.where(j < 0, s, np.minimum(s * np.exp2(np.maximum(j, 0) + 1), far[half_id]))
    single_h = single[half_id]
    a = np.where(single_h, near[half_id], a)
    b = np.where(single_h, far[half_id], b)
    # the last geometric panel always ends exactly at far
    last = k == counts[half_id] - 1
    b = np.where(last, far[half_id], b)
    return half_id, a, b


def _power_integral(near, far, q):
    """Integral of u^{-q} over [near, far] (collinear points)."""
    if q == 1.0:
        return np.log1p((far - near) / near)
    return (far ** (1 - q) - near ** (1 - q)) / (1 - q)


def segment_integrals(ctx: RieszContext, tail, head, X, budget=QuadratureBudget(),
                      force_quadrature=False, segment_index=None):
    """Unweighted, unnormalized kernel integrals over one segment at many points.

    Returns ``int_seg |x - y|^{-(d-alpha)} ds(y)`` for every row ``x`` of X.
    """
    ctx.require_evaluable()
    q = ctx.exponent
    X = np.atleast_2d(np.asarray(X, dtype=float))
    L, p, rho = _foot_geometry(tail, head, X)
    tol = ON_SEGMENT_TOL * L
    collinear = rho <= tol
    rho = np.where(collinear, 0.0, rho)
    on_segment = collinear & (p >= -tol) & (p <= L + tol)
    if q >= 1.0 and np.any(on_segment):
        raise SingularPointError(
            f"singular evaluation point: {int(np.sum(on_segment))} point(s) on segment "
            f"{segment_index} with d - alpha = {q:g}",
            segment_index=segment_index,
        )
    p = np.where(on_segment, np.clip(p, 0.0, L), p)
    owner, near, far = _halves(L, p)
    keep = far > near
    owner, near, far = owner[keep], near[keep], far[keep]
    rho_h = rho[owner]

    result_h = np.zeros(len(owner))
    coll_h = rho_h == 0.0
    if np.any(coll_h):
        result_h[coll_h] = _power_integral(near[coll_h], far[coll_h], q)

    smooth = ~coll_h
    if q == 1.0 and not force_quadrature:
        r = rho_h[smooth]
        result_h[smooth] = asinh_difference(near[smooth] / r, far[smooth] / r)
    elif np.any(smooth):
        sid = np.flatnonzero(smooth)
        half_id, a, b = _graded_panels(near[sid], far[sid], rho_h[sid])
        rho2 = rho_h[sid] ** 2

        def integrand(u, o):
            u = u[..., 0]
            return (u * u + rho2[o][:, None]) ** (-q / 2)

        totals, _, ok = adaptive_cubature(integrand, a, b, half_id, len(sid), budget)
        result_h[sid] = totals
        if not np.all(ok):
            est = np.bincount(owner, weights=result_h, minlength=len(X))
            raise ToleranceNotMet(
                f"segment {segment_index}: tolerance {budget.rel_tol:g} not met at "
                f"{int(np.sum(~ok))} half-interval(s)",
                estimate=est,
            )
    return np.bincount(owner, weights=result_h, minlength=len(X))


def segment_kernel_integral(ctx: RieszContext, seg: Segment, x, budget=QuadratureBudget(),
                            force_quadrature=False) -> float:
    """Weighted kernel integral ``w * int_seg k(x - y) ds(y)`` at one point."""
    val = segment_integrals(ctx, seg.tail, seg.head, np.asarray(x, dtype=float)[None, :],
                            budget, force_quadrature)
    return float(seg.weight * ctx.constant * val[0])


def potential(ctx: RieszContext, F: VectorMeasure, X, budget=QuadratureBudget(),
              force_quadrature=False) -> np.ndarray:
    """Vector Riesz potential I_alpha F at each row of ``X``; shape ``(n, d)``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != F.dim or ctx.d != F.dim:
        raise PreconditionError("dimension mismatch between context, measure and points")
    out = np.zeros((len(X), F.dim))
    for i in range(len(F)):
        vals = segment_integrals(ctx, F.tails[i], F.heads[i], X, budget, force_quadrature, segment_index=i)
        out += np.outer(F.weights[i] * vals, F.directions[i])
    return ctx.constant * out


def eval_vector_potential(ctx: RieszContext, F: VectorMeasure, x, budget=QuadratureBudget(),
                          force_quadrature=False) -> np.ndarray:
    return potential(ctx, F, np.asarray(x, dtype=float)[None, :], budget, force_quadrature)[0]


def _closest_params(a0, a1, b0, b1):
    """Parameter on [a0, a1] of the closest approach to segment [b0, b1]."""
    u = a1 - a0
    v = b1 - b0
    w = a0 - b0
    uu, uv, vv, uw, vw = u @ u, u @ v, v @ v, u @ w, v @ w
    den = uu * vv - uv * uv
    if den <= 1e-14 * uu * vv:
        s = 0.0
    else:
        s = np.clip((uv * vw - vv * uw) / den, 0.0, 1.0)
    t = np.clip((uv * s + vw) / vv, 0.0, 1.0)
    return float(np.clip((t * uv - uw) / uu, 0.0, 1.0))


def _arc_breakpoints(F: VectorMeasure, arc: ArcPiece, n_uniform=4):
    a0, a1 = arc.tail, arc.head
    u = a1 - a0
    uu = u @ u
    pts = np.vstack([F.tails, F.heads])
    t = list(np.clip((pts - a0) @ u / uu, 0.0, 1.0))
    t += [_closest_params(a0, a1, F.tails[i], F.heads[i]) for i in range(len(F))]
    t += list(np.linspace(0.0, 1.0, n_uniform + 1))
    return np.unique(np.round(np.array(t), 15))


def _box_pairing_2d(ctx: RieszContext, F: VectorMeasure, box, budget):
    """Iterated integral of |I F| over a planar box.

    |I F| has kinks along the support of F.  Each vertical line is split
    where it meets F and at the heights of F's vertices; the outer integral
    over x is split at the vertices' x coordinates.
    """
    (x0, y0), (x1, y1) = box.lo, box.hi
    inner = budget.tightened(INNER_TIGHTEN)
    mid = budget.tightened(np.sqrt(INNER_TIGHTEN))
    ta, tb = F.tails, F.heads
    verts_y = np.concatenate([ta[:, 1], tb[:, 1]])

    def column(xs):
        xs = xs.ravel()
        dx = tb[:, 0] - ta[:, 0]
        with np.errstate(divide="ignore", invalid="ignore"):
            lam = (xs[:, None] - ta[None, :, 0]) / dx[None, :]
        cross = np.where((lam >= 0) & (lam <= 1), ta[None, :, 1] + lam * (tb - ta)[None, :, 1], np.nan)
        cand = np.concatenate([cross, np.broadcast_to(verts_y, (len(xs), len(verts_y))),
                               np.linspace(y0, y1, SPLITS)[None, :].repeat(len(xs), 0)], axis=1)
        cand = np.where(np.isnan(cand), y0, np.clip(cand, y0, y1))
        cand.sort(axis=1)
        n_p = cand.shape[1] - 1
        owner = np.repeat(np.arange(len(xs)), n_p)
        lo = cand[:, :-1].ravel()
        hi = cand[:, 1:].ravel()

        def f(y, o):
            pts = np.stack([np.broadcast_to(xs[o][:, None], y.shape[:2]), y[..., 0]], axis=-1).reshape(-1, 2)
            return np.linalg.norm(potential(ctx, F, pts, inner), axis=1).reshape(y.shape[:2])

        vals, _, ok = smoothstep_panels(f, lo, hi, owner, len(xs), mid)
        if not np.all(ok):
            raise ToleranceNotMet("trace pairing: inner line integral did not converge", estimate=float(vals.sum()))
        return vals

    xb = np.concatenate([np.clip(np.concatenate([ta[:, 0], tb[:, 0]]), x0, x1), np.linspace(x0, x1, SPLITS)])
    xb = np.unique(xb)
    val, _, ok = smoothstep_panels(lambda x, o: column(x[..., 0]).reshape(x.shape[:2]),
                                   xb[:-1], xb[1:], np.zeros(len(xb) - 1, int), 1, budget)
    return val, ok


def pair_with_test_measure(ctx: RieszContext, F: VectorMeasure, nu: TestMeasure,
                           budget=QuadratureBudget()) -> float:
    """Return the trace pairing ``int |I_alpha F| d nu``.

    Each arc or box piece of ``nu`` is integrated adaptively until the
    estimated relative error of its contribution is within ``budget``; the
    potential values feeding it are computed to a tighter tolerance.
    """
    ctx.require_trace_range()
    if nu.dim != F.dim:
        raise PreconditionError("dimension mismatch between F and nu")
    inner = budget.tightened(INNER_TIGHTEN)
    total = 0.0
    for piece in nu.pieces:
        if piece.mass == 0:
            continue
        if isinstance(piece, ArcPiece):
            brk = _arc_breakpoints(F, piece)
            a0, du = piece.tail, piece.head - piece.tail
            scale = piece.density * piece.length

            def integrand(t, _o, a0=a0, du=du):
                pts = a0 + t.reshape(-1, 1) * du
                return np.linalg.norm(potential(ctx, F, pts, inner), axis=1).reshape(t.shape[:2])

            val, _, ok = smoothstep_panels(integrand, brk[:-1], brk[1:], np.zeros(len(brk) - 1, int), 1, budget)
        elif F.dim == 2:
            scale = piece.density
            val, ok = _box_pairing_2d(ctx, F, piece, budget)
        else:
            scale = piece.density

            def integrand(x, _o):
                pts = x.reshape(-1, F.dim)
                return np.linalg.norm(potential(ctx, F, pts, inner), axis=1).reshape(x.shape[:2])

            val, _, ok = adaptive_cubature(integrand, piece.lo[None, :], piece.hi[None, :], None, 1, budget)
        contribution = scale * float(val[0])
        total += contribution
        if not ok[0]:
            raise ToleranceNotMet(
                f"trace pairing: tolerance {budget.rel_tol:g} not met on a {type(piece).__name__}",
                estimate=total,
            )
    return total
