"""Quadrature building blocks: composite Gauss-Legendre panels, geometric
grading toward singular points, and periodic rules on the unit circle."""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy import integrate

from .errors import NumericError

TWO_PI = 2.0 * math.pi


@lru_cache(maxsize=64)
def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of the ``n``-point Gauss-Legendre rule on [-1, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def panel_rule(breaks, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Composite ``n``-point Gauss rule on consecutive intervals of ``breaks``."""
    b = np.asarray(breaks, dtype=float)
    if b.size < 2:
        return np.empty(0), np.empty(0)
    lo, hi = b[:-1], b[1:]
    keep = hi > lo
    lo, hi = lo[keep], hi[keep]
    x, w = gauss_legendre(n)
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def graded_breaks(a: float, b: float, focus=(), hmin: float = 1e-12,
                  ratio: float = 2.0, grade_ends: bool = False) -> np.ndarray:
    """Breakpoints on ``[a, b]`` refined geometrically toward focus points.

    Each focus point inside ``[a, b]`` becomes a breakpoint; on both sides of
    it panels shrink by ``ratio`` until they reach ``hmin``.  With
    ``grade_ends`` the interval endpoints are treated as focus points too.
    """
    if not b > a:
        return np.array([a, b], dtype=float)
    pts = [p for p in focus if a < p < b]
    if grade_ends:
        pts += [a, b]
    pts = sorted(set([a, b] + pts))
    out = set(pts)
    for p in pts:
        for side in (-1.0, 1.0):
            # distance to the neighbouring breakpoint on this side
            nbrs = [q for q in pts if (q - p) * side > 0]
            if not nbrs:
                continue
            span = min(abs(q - p) for q in nbrs)
            h = span / ratio
            while h > hmin:
                out.add(p + side * h)
                h /= ratio
    return np.array(sorted(out))


def trapezoid_circle(f, tol: float = 1e-10, n0: int = 64, nmax: int = 1 << 20):
    """Mean value ``(1/2pi) int_0^{2pi} f(t) dt`` by the periodic trapezoid rule.

    The node count doubles until the relative change drops below ``tol``.
    ``f`` is vectorised over ``t`` and may return arrays of shape
    ``(len(t), ...)``; the reduction is over the first axis.

    Returns
    -------
    value, nodes_used, last_relative_change
    """
    n = n0
    t = TWO_PI * np.arange(n) / n
    prev = np.mean(np.asarray(f(t)), axis=0)
    while n < nmax:
        t_new = TWO_PI * (np.arange(n) + 0.5) / n
        cur = 0.5 * (prev + np.mean(np.asarray(f(t_new)), axis=0))
        n *= 2
        scale = max(np.max(np.abs(cur)), 1e-300)
        change = float(np.max(np.abs(cur - prev)) / scale)
        prev = cur
        if change < tol:
            return prev, n, change
    raise NumericError(f"trapezoid rule did not reach tol={tol} with {nmax} nodes",
                       residuals=[change])


def circle_mean(f, focus=(), tol: float = 1e-10, limit: int = 2000) -> float:
    """Adaptive ``(1/2pi) int_0^{2pi} f(t) dt`` for peaked scalar integrands.

    ``focus`` lists parameters where ``f`` is sharply peaked; they are passed
    to the adaptive integrator as breakpoints together with a geometric
    cluster around each of them.
    """
    brk = []
    for p in focus:
        p = float(p) % TWO_PI
        brk.append(p)
    brk = sorted(set(brk))
    cuts = np.unique(np.concatenate([[0.0, TWO_PI], brk]))
    total = 0.0
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        if hi - lo <= 0:
            continue
        local = graded_breaks(lo, hi, focus=[], hmin=1e-13 * TWO_PI, ratio=4.0,
                              grade_ends=True)
        for a, b in zip(local[:-1], local[1:]):
            val, _ = integrate.quad(lambda t: float(np.ravel(f(t))[0]), a, b, epsabs=0.0,
                                    epsrel=tol, limit=limit)
            total += val
    return total / TWO_PI
