"""Morrey norms sup_{x,r} nu(B(x,r)) / r^beta of arc/box test measures.

Balls are closed throughout.  The lower bound is the best quotient found on
a candidate set of centers and radii (plus a golden-section polish between
candidate radii); the upper bound combines an additive per-piece analytic
bound with the doubling-cover factor 2^beta.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations, product

import numpy as np
from scipy import integrate
from scipy.special import gamma

from .errors import PreconditionError
from .measures import ArcPiece, TestMeasure

GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0
N_DYADIC_RADII = 32
N_GOLDEN_ITER = 48
TIE_RTOL = 1e-12
DEDUP_RTOL = 1e-12


@dataclass(frozen=True)
class MorreyResult:
    value: float
    lower_bound: float
    upper_bound: float
    witness_center: np.ndarray
    witness_radius: float
    # True when the upper bound comes from the additive analytic bound rather
    # than the 2**beta covering factor applied to the candidate search
    certified: bool = False


def unit_ball_volume(d: int) -> float:
    return float(np.pi ** (d / 2) / gamma(d / 2 + 1))


def _arc_chords(piece: ArcPiece, centers, radii):
    a = piece.tail
    diff = piece.head - a
    L = float(np.linalg.norm(diff))
    if L == 0.0:
        return np.zeros_like(radii)
    u = diff / L
    rel = centers - a
    p = rel @ u
    rho = np.linalg.norm(rel - p[:, None] * u, axis=1)
    gap = (radii - rho[:, None]) * (radii + rho[:, None])
    half = np.sqrt(np.maximum(gap, 0.0))
    pc = p[:, None]
    # overlap of [p - half, p + half] with [0, L], written so that an
    # unclipped chord comes out as exactly 2 * half
    chord = np.minimum(half, L - pc) + np.minimum(half, pc)
    return np.where(gap >= 0, np.clip(chord, 0.0, L), 0.0)


def _disk_rect_area(cx, cy, r, x0, x1, y0, y1):
    """Exact area of the disk B((cx, cy), r) intersected with a rectangle."""
    x0, x1 = x0 - cx, x1 - cx
    y0, y1 = y0 - cy, y1 - cy
    lo = np.maximum(x0, -r)
    hi = np.minimum(x1, r)
    r2 = r * r

    def h(x):
        return np.sqrt(np.maximum(r2 - x * x, 0.0))

    def prim(x):
        xs = np.clip(x, -r, r)
        ratio = np.divide(xs, r, out=np.zeros_like(xs), where=r > 0)
        return 0.5 * (xs * h(xs) + r2 * np.arcsin(np.clip(ratio, -1.0, 1.0)))

    cuts = [lo, hi]
    for y in (y0, y1):
        root = np.sqrt(np.maximum(r2 - y * y, 0.0))
        cuts += [np.clip(-root, lo, hi), np.clip(root, lo, hi)]
    cuts = np.sort(np.stack(np.broadcast_arrays(*cuts)), axis=0)
    area = np.zeros(np.broadcast(lo, hi).shape)
    for k in range(len(cuts) - 1):
        a, b = cuts[k], cuts[k + 1]
        width = b - a
        mid = 0.5 * (a + b)
        hm = h(mid)
        top_is_h = hm < y1
        bot_is_h = -hm > y0
        pos = np.minimum(y1, hm) - np.maximum(y0, -hm) > 0
        harea = prim(b) - prim(a)
        top = np.where(top_is_h, harea, y1 * width)
        bot = np.where(bot_is_h, -harea, y0 * width)
        area = area + np.where((width > 0) & pos, top - bot, 0.0)
    return np.where(hi > lo, area, 0.0)


def _box_ball_volume(lo, hi, c, r):
    """Volume of box [lo, hi] intersected with the closed ball B(c, r); any d >= 1."""
    d = len(lo)
    if r <= 0:
        return 0.0
    if d == 1:
        return max(0.0, min(hi[0], c[0] + r) - max(lo[0], c[0] - r))
    if d == 2:
        return float(_disk_rect_area(c[0], c[1], r, lo[0], hi[0], lo[1], hi[1]))
    a = max(lo[0], c[0] - r)
    b = min(hi[0], c[0] + r)
    if b <= a:
        return 0.0
    rest_lo, rest_hi, rest_c = lo[1:], hi[1:], c[1:]
    kinks = []
    choices = [(li - ci, hi_ - ci) for li, hi_, ci in zip(rest_lo, rest_hi, rest_c)]
    for k in range(1, d):
        for sub in combinations(range(d - 1), k):
            for ends in product(*[choices[i] for i in sub]):
                dist2 = sum(e * e for e in ends)
                if dist2 < r * r:
                    root = np.sqrt(r * r - dist2)
                    kinks += [c[0] - root, c[0] + root]
    kinks = sorted({x for x in kinks if a < x < b})

    def slice_volume(x):
        return _box_ball_volume(rest_lo, rest_hi, rest_c, np.sqrt(max(r * r - (x - c[0]) ** 2, 0.0)))

    edges = [a] + kinks + [b]
    total = 0.0
    for s, t in zip(edges[:-1], edges[1:]):
        val, _ = integrate.quad(slice_volume, s, t, epsabs=0.0, epsrel=1e-12, limit=200)
        total += val
    return total


def ball_masses(nu: TestMeasure, centers, radii) -> np.ndarray:
    """nu(B(c_k, r_km)) for centers ``(k, d)`` and radii ``(k, m)``."""
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    radii = np.asarray(radii, dtype=float)
    if radii.ndim == 1:
        radii = radii[:, None]
    out = np.zeros(radii.shape)
    for piece in nu.pieces:
        if piece.density == 0:
            continue
        if isinstance(piece, ArcPiece):
            out += piece.density * _arc_chords(piece, centers, radii)
        elif nu.dim == 2:
            cx = centers[:, 0:1]
            cy = centers[:, 1:2]
            out += piece.density * _disk_rect_area(
                cx, cy, radii, piece.lo[0], piece.hi[0], piece.lo[1], piece.hi[1]
            )
        else:
            vol = np.vectorize(lambda k, r: _box_ball_volume(piece.lo, piece.hi, centers[k], r))
            idx = np.broadcast_to(np.arange(len(centers))[:, None], radii.shape)
            out += piece.density * vol(idx, radii)
    return out


def ball_mass(nu: TestMeasure, center, r: float) -> float:
    """Mass of the closed ball B(center, r)."""
    if not r > 0:
        raise PreconditionError("ball radius must be positive")
    return float(ball_masses(nu, np.asarray(center, dtype=float)[None, :], np.array([[r]]))[0, 0])


def additive_upper_bound(nu: TestMeasure, beta: float, r_min: float = 0.0) -> float:
    """Sum over pieces of each piece's own sup_{r >= r_min} mass(B)/r^beta bound."""
    total = 0.0
    d = nu.dim
    omega = unit_ball_volume(d)
    for piece in nu.pieces:
        if piece.mass == 0:
            continue
        if isinstance(piece, ArcPiece):
            L = piece.length

            def cap(r):
                return np.minimum(2 * r, L)

            r_star = L / 2
        else:
            V = piece.volume

            def cap(r):
                return np.minimum(omega * r**d, V)

            r_star = (V / omega) ** (1.0 / d)
        # cap(r)/r^beta rises (or is flat) up to r_star and falls after it
        rising_exp = 1.0 if isinstance(piece, ArcPiece) else float(d)
        if beta > rising_exp:
            if r_min <= 0:
                return np.inf
            best = cap(r_min) / r_min**beta
        elif beta == rising_exp and r_min < r_star:
            best = (2.0 if isinstance(piece, ArcPiece) else omega) * 1.0
        else:
            r = max(r_star, r_min)
            best = cap(r) / r**beta
        total += piece.density * float(best)
    return total


def _candidate_centers(nu: TestMeasure, refinement: int) -> np.ndarray:
    verts = nu.vertices()
    pts = [verts]
    for p in nu.pieces:
        if isinstance(p, ArcPiece):
            pts.append(((p.tail + p.head) / 2)[None, :])
        else:
            pts.append(((p.lo + p.hi) / 2)[None, :])
    lo = verts.min(axis=0)
    hi = verts.max(axis=0)
    n = 2 ** max(int(refinement), 0) + 1
    axes = [np.linspace(a, b, n) if b > a else np.array([a]) for a, b in zip(lo, hi)]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, nu.dim)
    pts.append(grid)
    return np.unique(np.vstack(pts), axis=0)


def _candidate_radii(nu: TestMeasure, centers: np.ndarray, r_min: float) -> np.ndarray:
    verts = nu.vertices()
    cols = [np.linalg.norm(centers[:, None, :] - verts[None, :, :], axis=2)]
    for p in nu.pieces:
        if isinstance(p, ArcPiece):
            diff = p.head - p.tail
            L2 = diff @ diff
            if L2 == 0:
                continue
            s = np.clip((centers - p.tail) @ diff / L2, 0.0, 1.0)
            foot = p.tail + s[:, None] * diff
            cols.append(np.linalg.norm(centers - foot, axis=1)[:, None])
        else:
            cols.append(np.abs(centers - p.lo))
            cols.append(np.abs(centers - p.hi))
    span = float(np.max(np.linalg.norm(verts - verts.mean(axis=0), axis=1)))
    span = max(span, 1e-300)
    dyadic = 2.0 * span * np.exp2(-np.arange(N_DYADIC_RADII))
    cols.append(np.broadcast_to(dyadic, (len(centers), len(dyadic))))
    if r_min > 0:
        cols.append(np.full((len(centers), 1), r_min))
    radii = np.hstack(cols)
    radii = np.where(radii >= max(r_min, 0.0), radii, np.nan)
    radii = np.where(radii > 0, radii, np.nan)
    radii = np.sort(radii, axis=1)
    # coincident radii would leave empty polish brackets; keep one of each
    dup = np.zeros(radii.shape, dtype=bool)
    dup[:, 1:] = radii[:, 1:] <= radii[:, :-1] * (1 + DEDUP_RTOL)
    return np.sort(np.where(dup, np.nan, radii), axis=1)


def _polish(nu, beta, centers, radii, quot, n_best=3):
    """Golden-section search between neighbouring candidate radii of the best few."""
    k, m = radii.shape
    q = np.where(np.isnan(quot), -np.inf, quot)
    top = np.argsort(-q, axis=1, kind="stable")[:, :n_best]
    rows, los, his = [], [], []
    for j in range(top.shape[1]):
        idx = top[:, j]
        for shift in (-1, 1):
            nb = np.clip(idx + shift, 0, m - 1)
            a = radii[np.arange(k), np.minimum(idx, nb)]
            b = radii[np.arange(k), np.maximum(idx, nb)]
            ok = np.isfinite(a) & np.isfinite(b) & (b > a)
            rows.append(np.flatnonzero(ok))
            los.append(a[ok])
            his.append(b[ok])
    rows = np.concatenate(rows)
    if len(rows) == 0:
        return np.zeros((0,)), np.zeros((0,)), np.zeros((0,), int)
    a = np.concatenate(los)
    b = np.concatenate(his)
    c = centers[rows]

    def f(r, mask):
        return ball_masses(nu, c[mask], r[:, None])[:, 0] / r**beta

    x1 = b - GOLDEN * (b - a)
    x2 = a + GOLDEN * (b - a)
    everything = np.ones(len(a), dtype=bool)
    f1, f2 = f(x1, everything), f(x2, everything)
    for _ in range(N_GOLDEN_ITER):
        left = f1 >= f2
        b = np.where(left, x2, b)
        a = np.where(left, a, x1)
        x2n = np.where(left, x1, a + GOLDEN * (b - a))
        x1n = np.where(left, b - GOLDEN * (b - a), x2)
        f2n = np.where(left, f1, np.nan)
        f1n = np.where(left, np.nan, f2)
        need1 = np.isnan(f1n)
        need2 = np.isnan(f2n)
        f1n[need1] = f(x1n[need1], need1)
        f2n[need2] = f(x2n[need2], need2)
        x1, x2, f1, f2 = x1n, x2n, f1n, f2n
    best_r = np.where(f1 >= f2, x1, x2)
    best_q = np.maximum(f1, f2)
    return best_q, best_r, rows


def morrey_norm(nu: TestMeasure, beta: float, r_min: float = 0.0, refinement: int = 4) -> MorreyResult:
    """Morrey norm ||nu||_{M^beta} with lower/upper bounds and a witness ball."""
    d = nu.dim
    if not (0 < beta <= d):
        raise PreconditionError(f"beta={beta} must lie in (0, d] = (0, {d}]")
    if r_min < 0:
        raise PreconditionError("r_min must be non-negative")
    live = TestMeasure(d, tuple(p for p in nu.pieces if p.mass > 0))
    if not live.pieces:
        zero = np.zeros(d)
        return MorreyResult(0.0, 0.0, 0.0, zero, 0.0, True)
    if r_min == 0 and beta > 1 and live.arcs:
        raise PreconditionError(
            f"arc pieces have infinite M^{beta:g} norm as r -> 0; pass r_min > 0"
        )
    centers = _candidate_centers(live, refinement)
    radii = _candidate_radii(live, centers, r_min)
    safe = np.where(np.isnan(radii), 1.0, radii)
    quot = ball_masses(live, centers, safe) / safe**beta
    quot = np.where(np.isnan(radii), np.nan, quot)

    pq, pr, prow = _polish(live, beta, centers, radii, quot)
    all_q = np.concatenate([quot[np.isfinite(quot)], pq])
    all_r = np.concatenate([radii[np.isfinite(quot)], pr])
    all_c = np.concatenate([np.nonzero(np.isfinite(quot))[0], prow])
    best = np.max(all_q)
    ties = np.flatnonzero(all_q >= best * (1 - TIE_RTOL))
    pick = ties[np.lexsort((all_c[ties], all_r[ties]))[0]]
    w_center = centers[all_c[pick]].copy()
    w_radius = float(all_r[pick])
    lower = ball_mass(live, w_center, w_radius) / w_radius**beta

    additive = additive_upper_bound(live, beta, r_min)
    cover = 2.0**beta * lower
    upper = max(lower, min(additive, cover))
    return MorreyResult(lower, lower, upper, w_center, w_radius, bool(additive <= cover))


def certify_unit_morrey(nu: TestMeasure, beta: float, r_min: float = 0.0, refinement: int = 4) -> TestMeasure:
    """Scale ``nu`` by its Morrey upper bound so the result has norm <= 1."""
    res = morrey_norm(nu, beta, r_min, refinement)
    if res.upper_bound <= 0:
        raise PreconditionError("cannot normalize the zero measure")
    return nu.scaled(1.0 / res.upper_bound)
