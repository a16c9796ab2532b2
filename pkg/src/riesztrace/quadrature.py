"""Vectorized adaptive Gauss quadrature over batches of boxes.

Every panel is integrated with a tensor Gauss-Legendre rule and compared
against the same rule applied to its 2**dim children; panels whose
estimate disagrees with the refined value are split and retried.  Many
independent integrals ("owners") advance through the same loop, which is
what keeps potential evaluation over thousands of points cheap.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import product

import numpy as np

CHAIN_SHARE = 64.0

@dataclass(frozen=True)
class QuadratureBudget:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-14
    max_depth: int = 40

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("quadrature tolerances must be positive")
        if self.max_depth < 1:
            raise ValueError("max_depth must be at least 1")

    def tightened(self, factor: float) -> "QuadratureBudget":
        return QuadratureBudget(self.rel_tol / factor, self.abs_tol / factor, self.max_depth)


@lru_cache(maxsize=None)
def gauss_legendre(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


@lru_cache(maxsize=None)
def _tensor_rule(order: int, dim: int):
    x, w = gauss_legendre(order)
    nodes = np.array(list(product(x, repeat=dim)))
    weights = np.prod(np.array(list(product(w, repeat=dim))), axis=1)
    corners = np.array(list(product((0, 1), repeat=dim)), dtype=float)
    return (nodes + 1.0) / 2.0, weights / 2.0**dim, corners


def _rule(f, lo, hi, owner, order):
    nodes, weights, _ = _tensor_rule(order, lo.shape[1])
    width = hi - lo
    pts = lo[:, None, :] + nodes[None, :, :] * width[:, None, :]
    vals = np.asarray(f(pts, owner))
    return (vals @ weights) * np.prod(width, axis=1)


def adaptive_cubature(f, lo, hi, owner=None, n_owners=None, budget=QuadratureBudget(), order=None):
    """Integrate ``f`` over the boxes ``[lo_k, hi_k]`` and sum per owner.

    Parameters
    ----------
    f : callable
        ``f(points, owner)`` with ``points`` of shape ``(k, m, dim)`` and
        ``owner`` of shape ``(k,)``; returns values of shape ``(k, m)``.
    lo, hi : array_like, shape (k, dim) or (k,)
        Panel corners.  One-dimensional panels may be given as flat arrays.
    owner : array_like of int, optional
        Which integral each panel contributes to (default: one per panel).

    Returns
    -------
    totals, errors, converged : ndarray
        Per-owner value, summed error estimate and convergence flag.
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if lo.ndim == 1:
        lo, hi = lo[:, None], hi[:, None]
    dim = lo.shape[1]
    if owner is None:
        owner = np.arange(len(lo))
    owner = np.asarray(owner, dtype=int)
    if n_owners is None:
        n_owners = int(owner.max()) + 1 if len(owner) else 0
    if order is None:
        order = {1: 15, 2: 7}.get(dim, 5)
    _, _, corners = _tensor_rule(order, dim)
    n_child = len(corners)

    vol = np.prod(hi - lo, axis=1)
    owner_vol = np.bincount(owner, weights=vol, minlength=n_owners)
    totals = np.zeros(n_owners)
    errors = np.zeros(n_owners)
    converged = np.ones(n_owners, dtype=bool)

    keep = vol > 0
    lo, hi, owner = lo[keep], hi[keep], owner[keep]
    depth = np.zeros(len(lo), dtype=int)
    coarse = _rule(f, lo, hi, owner, order) if len(lo) else np.zeros(0)
    # panels also pass once their error is a small share of the owner's total;
    # a tolerance proportional to width alone never ends at endpoint singularities
    scale = np.abs(np.bincount(owner, weights=coarse, minlength=n_owners)) * budget.rel_tol / CHAIN_SHARE

    while len(lo):
        half = (hi - lo) / 2.0
        c_lo = (lo[:, None, :] + corners[None, :, :] * half[:, None, :]).reshape(-1, dim)
        c_hi = c_lo + np.repeat(half, n_child, axis=0)
        c_owner = np.repeat(owner, n_child)
        child = _rule(f, c_lo, c_hi, c_owner, order)
        fine = child.reshape(-1, n_child).sum(axis=1)
        err = np.abs(fine - coarse)
        share = np.prod(hi - lo, axis=1) / np.where(owner_vol[owner] > 0, owner_vol[owner], 1.0)
        tol = np.maximum(np.maximum(budget.rel_tol * np.abs(fine), budget.abs_tol * share), scale[owner])
        done = err <= tol
        exhausted = ~done & (depth >= budget.max_depth)
        accept = done | exhausted | ~np.isfinite(fine)
        np.add.at(totals, owner[accept], fine[accept])
        np.add.at(errors, owner[accept], err[accept])
        converged[owner[exhausted | ~np.isfinite(fine)]] = False
        split = np.repeat(~accept, n_child)
        lo, hi = c_lo[split], c_hi[split]
        owner = c_owner[split]
        coarse = child[split]
        depth = np.repeat(depth[~accept] + 1, n_child)
    return totals, errors, converged


def smoothstep_panels(f, a, b, owner=None, n_owners=None, budget=QuadratureBudget(), order=None):
    """1D adaptive integration with the substitution x = a + (b - a) phi(u).

    phi(u) = u^3 (10 - 15u + 6u^2) has phi' = 30 u^2 (1 - u)^2, which flattens
    algebraic kinks at panel ends (x - a)^g into u^{3g + 2}.  Breakpoints
    placed at the kinks then need only a short bisection chain.  ``f`` has
    the signature of :func:`adaptive_cubature` integrands.
    """
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if owner is None:
        owner = np.arange(len(a))
    owner = np.asarray(owner, dtype=int)
    if n_owners is None:
        n_owners = int(owner.max()) + 1 if len(owner) else 0
    width = b - a

    def g(u, panel):
        uu = u[..., 0]
        x = a[panel][:, None] + width[panel][:, None] * (uu**3 * (10 - 15 * uu + 6 * uu**2))
        jac = width[panel][:, None] * 30 * uu**2 * (1 - uu) ** 2
        return np.asarray(f(x[..., None], owner[panel])) * jac

    live = width > 0
    idx = np.flatnonzero(live)
    tot, err, ok = adaptive_cubature(g, np.zeros(len(idx)), np.ones(len(idx)), idx, len(a), budget, order)
    totals = np.bincount(owner, weights=tot, minlength=n_owners)
    errors = np.bincount(owner, weights=err, minlength=n_owners)
    converged = np.ones(n_owners, dtype=bool)
    converged[owner[~ok]] = False
    return totals, errors, converged
