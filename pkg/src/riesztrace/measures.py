"""Segment-carried vector measures and non-negative test measures.

A :class:`VectorMeasure` is a finite sum of weighted oriented segments,
``F = sum_e w_e * tau_e * H^1|_{[tail_e, head_e]}``, which is the form taken
by loop measures and by anything produced from a decomposed grid flow.
A :class:`TestMeasure` is a finite sum of uniform densities on segments
(arc pieces) and on axis-aligned boxes (box pieces).

All objects are immutable; every function here is pure.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence, Union

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .errors import PreconditionError


def _frozen(a, dtype=float):
    arr = np.array(a, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Segment:
    tail: np.ndarray
    head: np.ndarray
    weight: float = 1.0

    def __post_init__(self):
        tail = _frozen(self.tail)
        head = _frozen(self.head)
        if tail.shape != head.shape or tail.ndim != 1:
            raise PreconditionError("segment endpoints must be points of equal dimension")
        if not (np.all(np.isfinite(tail)) and np.all(np.isfinite(head))):
            raise PreconditionError("segment endpoints must be finite")
        if np.array_equal(tail, head):
            raise PreconditionError("degenerate segment: tail == head")
        if not self.weight > 0:
            raise PreconditionError("segment weight must be strictly positive")
        object.__setattr__(self, "tail", tail)
        object.__setattr__(self, "head", head)
        object.__setattr__(self, "weight", float(self.weight))

    @property
    def length(self) -> float:
        return float(np.linalg.norm(self.head - self.tail))


@dataclass(frozen=True, eq=False)
class VectorMeasure:
    """Weighted oriented segment soup in R^d.

    Stored column-wise: ``tails`` and ``heads`` are ``(n, d)`` arrays and
    ``weights`` is ``(n,)``.  Orientation lives in the (tail, head) order.
    """

    dim: int
    tails: np.ndarray
    heads: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        d = int(self.dim)
        if d < 2:
            raise PreconditionError("ambient dimension must be at least 2")
        tails = _frozen(np.reshape(self.tails, (-1, d)))
        heads = _frozen(np.reshape(self.heads, (-1, d)))
        weights = _frozen(np.reshape(self.weights, (-1,)))
        if not (len(tails) == len(heads) == len(weights)):
            raise PreconditionError("tails, heads and weights must have equal length")
        if not (np.all(np.isfinite(tails)) and np.all(np.isfinite(heads))):
            raise PreconditionError("segment endpoints must be finite")
        if np.any(weights <= 0) or not np.all(np.isfinite(weights)):
            raise PreconditionError("segment weights must be finite and strictly positive")
        if np.any(np.all(tails == heads, axis=1)):
            raise PreconditionError("degenerate segment: tail == head")
        object.__setattr__(self, "dim", d)
        object.__setattr__(self, "tails", tails)
        object.__setattr__(self, "heads", heads)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def from_segments(cls, segments: Sequence[Segment], dim: int | None = None) -> "VectorMeasure":
        segments = list(segments)
        if dim is None:
            if not segments:
                raise PreconditionError("dimension required for an empty measure")
            dim = len(segments[0].tail)
        if any(len(s.tail) != dim for s in segments):
            raise PreconditionError("all segments must live in the same dimension")
        return cls(
            dim,
            np.array([s.tail for s in segments], dtype=float).reshape(-1, dim),
            np.array([s.head for s in segments], dtype=float).reshape(-1, dim),
            np.array([s.weight for s in segments], dtype=float),
        )

    @classmethod
    def polyline(cls, points, weight: float = 1.0, closed: bool = True) -> "VectorMeasure":
        """Tangent measure of the polyline through ``points`` (closed by default)."""
        pts = np.asarray(points, dtype=float)
        heads = np.roll(pts, -1, axis=0) if closed else pts[1:]
        tails = pts if closed else pts[:-1]
        return cls(pts.shape[1], tails, heads, np.full(len(tails), float(weight)))

    def __len__(self):
        return len(self.weights)

    @cached_property
    def segments(self) -> tuple:
        return tuple(Segment(t, h, w) for t, h, w in zip(self.tails, self.heads, self.weights))

    @cached_property
    def lengths(self) -> np.ndarray:
        return np.linalg.norm(self.heads - self.tails, axis=1)

    @cached_property
    def directions(self) -> np.ndarray:
        return (self.heads - self.tails) / self.lengths[:, None]

    def concat(self, other: "VectorMeasure") -> "VectorMeasure":
        if other.dim != self.dim:
            raise PreconditionError("dimension mismatch")
        return VectorMeasure(
            self.dim,
            np.vstack([self.tails, other.tails]),
            np.vstack([self.heads, other.heads]),
            np.concatenate([self.weights, other.weights]),
        )

    def scaled(self, factor: float) -> "VectorMeasure":
        return VectorMeasure(self.dim, self.tails, self.heads, self.weights * factor)

    def structurally_equal(self, other: "VectorMeasure") -> bool:
        return (
            self.dim == other.dim
            and np.array_equal(self.tails, other.tails)
            and np.array_equal(self.heads, other.heads)
            and np.array_equal(self.weights, other.weights)
        )


@dataclass(frozen=True)
class ArcPiece:
    """Uniform linear density on the segment [tail, head]."""

    tail: np.ndarray
    head: np.ndarray
    density: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "tail", _frozen(self.tail))
        object.__setattr__(self, "head", _frozen(self.head))
        object.__setattr__(self, "density", float(self.density))
        if self.tail.shape != self.head.shape:
            raise PreconditionError("arc endpoints must have equal dimension")
        if not self.density >= 0:
            raise PreconditionError("densities must be non-negative")

    @property
    def length(self) -> float:
        return float(np.linalg.norm(self.head - self.tail))

    @property
    def mass(self) -> float:
        return self.density * self.length


@dataclass(frozen=True)
class BoxPiece:
    """Uniform volume density on the closed box prod_i [lo_i, hi_i]."""

    lo: np.ndarray
    hi: np.ndarray
    density: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "lo", _frozen(self.lo))
        object.__setattr__(self, "hi", _frozen(self.hi))
        object.__setattr__(self, "density", float(self.density))
        if self.lo.shape != self.hi.shape or np.any(self.hi < self.lo):
            raise PreconditionError("box needs lo <= hi componentwise")
        if not self.density >= 0:
            raise PreconditionError("densities must be non-negative")

    @property
    def volume(self) -> float:
        return float(np.prod(self.hi - self.lo))

    @property
    def mass(self) -> float:
        return self.density * self.volume


Piece = Union[ArcPiece, BoxPiece]


@dataclass(frozen=True, eq=False)
class TestMeasure:
    """Non-negative measure made of arc and box pieces."""

    __test__ = False  # keep pytest from collecting this class

    dim: int
    pieces: tuple = field(default_factory=tuple)

    def __post_init__(self):
        pieces = tuple(self.pieces)
        for p in pieces:
            n = len(p.tail) if isinstance(p, ArcPiece) else len(p.lo)
            if n != self.dim:
                raise PreconditionError("piece dimension does not match measure dimension")
        object.__setattr__(self, "pieces", pieces)

    @classmethod
    def polyline(cls, points, density: float = 1.0, closed: bool = False) -> "TestMeasure":
        pts = np.asarray(points, dtype=float)
        nxt = np.roll(pts, -1, axis=0) if closed else pts[1:]
        base = pts if closed else pts[:-1]
        return cls(pts.shape[1], tuple(ArcPiece(a, b, density) for a, b in zip(base, nxt)))

    @classmethod
    def arclength_of(cls, F: VectorMeasure) -> "TestMeasure":
        """Total-variation measure |F| as a test measure (density = weight)."""
        return cls(F.dim, tuple(ArcPiece(t, h, w) for t, h, w in zip(F.tails, F.heads, F.weights)))

    @property
    def arcs(self) -> tuple:
        return tuple(p for p in self.pieces if isinstance(p, ArcPiece))

    @property
    def boxes(self) -> tuple:
        return tuple(p for p in self.pieces if isinstance(p, BoxPiece))

    @property
    def total_mass(self) -> float:
        return float(sum(p.mass for p in self.pieces))

    def scaled(self, factor: float) -> "TestMeasure":
        out = []
        for p in self.pieces:
            if isinstance(p, ArcPiece):
                out.append(ArcPiece(p.tail, p.head, p.density * factor))
            else:
                out.append(BoxPiece(p.lo, p.hi, p.density * factor))
        return TestMeasure(self.dim, tuple(out))

    def concat(self, other: "TestMeasure") -> "TestMeasure":
        if other.dim != self.dim:
            raise PreconditionError("dimension mismatch")
        return TestMeasure(self.dim, self.pieces + other.pieces)

    def vertices(self) -> np.ndarray:
        """Arc endpoints and box corners, shape ``(m, d)``."""
        pts = []
        for p in self.pieces:
            if isinstance(p, ArcPiece):
                pts.extend([p.tail, p.head])
            else:
                grids = np.meshgrid(*[[a, b] for a, b in zip(p.lo, p.hi)], indexing="ij")
                pts.extend(np.stack([g.ravel() for g in grids], axis=1))
        return np.unique(np.array(pts, dtype=float).reshape(-1, self.dim), axis=0)

    def structurally_equal(self, other: "TestMeasure") -> bool:
        if self.dim != other.dim or len(self.pieces) != len(other.pieces):
            return False
        for p, q in zip(self.pieces, other.pieces):
            if type(p) is not type(q) or p.density != q.density:
                return False
            a = (p.tail, p.head) if isinstance(p, ArcPiece) else (p.lo, p.hi)
            b = (q.tail, q.head) if isinstance(q, ArcPiece) else (q.lo, q.hi)
            if not all(np.array_equal(x, y) for x, y in zip(a, b)):
                return False
        return True


@dataclass(frozen=True)
class Transform:
    """x -> rotation @ (dilation * x) + translation."""

    translation: np.ndarray
    dilation: float = 1.0
    rotation: np.ndarray | None = None

    def __post_init__(self):
        t = _frozen(self.translation)
        object.__setattr__(self, "translation", t)
        if not self.dilation > 0:
            raise PreconditionError("dilation must be positive")
        rot = np.eye(len(t)) if self.rotation is None else np.asarray(self.rotation, dtype=float)
        if rot.shape != (len(t), len(t)):
            raise PreconditionError("rotation must be a d x d matrix")
        if np.max(np.abs(rot @ rot.T - np.eye(len(t)))) > 1e-12:
            raise PreconditionError("rotation must be orthogonal to 1e-12")
        object.__setattr__(self, "rotation", _frozen(rot))
        object.__setattr__(self, "dilation", float(self.dilation))

    @classmethod
    def identity(cls, d: int) -> "Transform":
        return cls(np.zeros(d))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return (self.dilation * x) @ self.rotation.T + self.translation


def total_variation(F: VectorMeasure) -> float:
    """|F|(R^d) = sum of weight * length."""
    return float(np.dot(F.weights, F.lengths))


def mean(F: VectorMeasure) -> np.ndarray:
    """The vector integral of dF, i.e. sum of weight * (head - tail)."""
    return F.weights @ (F.heads - F.tails)


def divergence_pairing(F: VectorMeasure, phi: Callable[[np.ndarray], np.ndarray]) -> float:
    """Return sum_e w_e (phi(head_e) - phi(tail_e)) = <grad phi, F>.

    ``phi`` is evaluated on ``(n, d)`` arrays of points.  For segment measures
    this equals the integral of grad(phi) against F exactly.
    """
    if len(F) == 0:
        return 0.0
    return float(np.dot(F.weights, np.asarray(phi(F.heads)) - np.asarray(phi(F.tails))))


def node_labels(points: np.ndarray, tol: float) -> np.ndarray:
    """Group points closer than ``tol`` (transitively) and label the groups."""
    n = len(points)
    if n == 0:
        return np.zeros(0, dtype=int)
    pairs = cKDTree(points).query_pairs(r=tol, output_type="ndarray") if tol > 0 else np.zeros((0, 2), int)
    if tol == 0:
        _, labels = np.unique(points, axis=0, return_inverse=True)
        return labels.ravel()
    adj = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n, n))
    _, labels = connected_components(adj, directed=False)
    return labels


def node_imbalance(F: VectorMeasure, tol: float | None = None) -> np.ndarray:
    """Net (incoming - outgoing) weight at each coalesced node."""
    if len(F) == 0:
        return np.zeros(0)
    if tol is None:
        tol = 1e-9 * max(support_radius(F)[1], np.finfo(float).tiny)
    pts = np.vstack([F.tails, F.heads])
    labels = node_labels(pts, tol)
    n = len(F)
    out_w = np.bincount(labels[:n], weights=F.weights, minlength=labels.max() + 1)
    in_w = np.bincount(labels[n:], weights=F.weights, minlength=labels.max() + 1)
    return in_w - out_w


def is_solenoidal(F: VectorMeasure, tol: float | None = None) -> bool:
    """True iff incoming and outgoing weights balance at every node.

    Endpoints within ``tol`` of each other are the same node; the default
    snap is 1e-9 times the support radius.
    """
    if len(F) == 0:
        return True
    imbalance = node_imbalance(F, tol)
    return bool(np.all(np.abs(imbalance) <= 1e-12 * F.weights.sum()))


def support_radius(F: VectorMeasure):
    """Anchor the support at its first point and return ``(center, R)``.

    ``center`` is the tail of the first segment, so after translating it to
    the origin the measure is carried by B(0, R) with R <= diam(supp F).
    """
    if len(F) == 0:
        raise PreconditionError("support radius of an empty measure")
    center = F.tails[0]
    pts = np.vstack([F.tails, F.heads])
    return center.copy(), float(np.max(np.linalg.norm(pts - center, axis=1)))


def diameter(points: np.ndarray) -> float:
    pts = np.asarray(points, dtype=float)
    if len(pts) < 2:
        return 0.0
    diff = pts[:, None, :] - pts[None, :, :]
    return float(np.sqrt(np.max(np.einsum("ijk,ijk->ij", diff, diff))))


def apply_transform(measure, T: Transform):
    """Push a VectorMeasure or TestMeasure forward under ``T``.

    Weights and densities are left alone, so |F| scales by the dilation and
    a test measure's arc (box) masses scale by dilation (dilation**d).
    """
    if isinstance(measure, VectorMeasure):
        if len(T.translation) != measure.dim:
            raise PreconditionError("transform dimension mismatch")
        return VectorMeasure(measure.dim, T(measure.tails), T(measure.heads), measure.weights)
    if isinstance(measure, TestMeasure):
        pieces = []
        for p in measure.pieces:
            if isinstance(p, ArcPiece):
                pieces.append(ArcPiece(T(p.tail), T(p.head), p.density))
            else:
                if not _is_signed_permutation(T.rotation):
                    raise PreconditionError("box pieces only map to boxes under axis-aligned rotations")
                a, b = T(p.lo), T(p.hi)
                pieces.append(BoxPiece(np.minimum(a, b), np.maximum(a, b), p.density))
        return TestMeasure(measure.dim, tuple(pieces))
    raise TypeError(f"cannot transform {type(measure).__name__}")


def dilate_preserving_mass(nu: TestMeasure, factor: float) -> TestMeasure:
    """Dilate about the origin, rescaling densities so each piece keeps its mass."""
    pieces = []
    for p in nu.pieces:
        if isinstance(p, ArcPiece):
            pieces.append(ArcPiece(factor * p.tail, factor * p.head, p.density / factor))
        else:
            pieces.append(BoxPiece(factor * p.lo, factor * p.hi, p.density / factor**nu.dim))
    return TestMeasure(nu.dim, tuple(pieces))


def _is_signed_permutation(m: np.ndarray) -> bool:
    a = np.abs(m)
    return bool(np.all((np.abs(a - 1) < 1e-12) | (a < 1e-12)) and np.all(np.sum(a > 0.5, axis=0) == 1))


def rotation_matrix(d: int, rng: np.random.Generator) -> np.ndarray:
    """Random orthogonal matrix (Haar via QR)."""
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    return q * np.sign(np.diag(r))
