"""Level domains ``{|theta| < delta}`` traced as closed polylines.

The boundary ``{|theta| = delta}`` is followed by arc-length continuation:
an Euler predictor along the tangent ``i * grad log|theta|`` and a Newton
corrector on ``log|theta| - log(delta)``.  The step is capped by the target
resolution, by a quarter of the distance to the spectrum, and by a turning
angle limit.  When the spectrum is nonempty the curve is traced gap by gap
between consecutive spectrum points, which become vertices of the polyline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize
from scipy.spatial import cKDTree

from .errors import GeometryError, ParameterError, SpectrumError
from .inner import InnerFunction, distance_to_spectrum, kernel_diag, spectrum

MAX_TURN = 0.1  # radians per step
CIRCLE_TOL = 1e-9  # relative deviation below which the polyline is treated as a circle


@dataclass(frozen=True, eq=False)
class LevelDomain:
    """Polyline approximation of the boundary of ``D_delta``.

    ``vertices`` is the closed polyline without repeating the first vertex.
    ``on_spectrum`` flags vertices that are spectrum points (not level points).
    ``segment_error`` bounds the gap between each chord and the true curve.

    When the vertices lie on a circle to within ``CIRCLE_TOL`` (relative),
    distances are measured to that circle; otherwise to the polyline.
    """

    delta: float
    vertices: np.ndarray
    on_spectrum: np.ndarray
    resolution: float
    tolerance: float
    segment_error: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=complex)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "_tree", cKDTree(np.column_stack([v.real, v.imag])))
        circ = None
        if v.size >= 8:
            c, r, dev = self.circle_fit()
            if dev <= CIRCLE_TOL * r:
                circ = (c, r, dev)
        object.__setattr__(self, "_circle", circ)

    @property
    def segments(self):
        v = self.vertices
        return v, np.roll(v, -1)

    @property
    def length(self) -> float:
        a, b = self.segments
        return float(np.sum(np.abs(b - a)))

    def distance(self, z, conservative: bool = False, k: int = 8, chunk: int = 100_000):
        """Euclidean distance from points to the polyline.

        With ``conservative`` the chord error of the nearest segment is
        subtracted, giving a lower bound for the distance to the true curve.
        """
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        if self._circle is not None:
            c, r, dev = self._circle
            d = np.abs(r - np.abs(z - c))
            return d - dev if conservative else d
        shape = z.shape
        z = z.ravel()
        out = np.empty(z.size)
        for lo in range(0, z.size, chunk):
            out[lo:lo + chunk] = self._distance_block(z[lo:lo + chunk], conservative, k)
        return out.reshape(shape)

    def _distance_block(self, z, conservative, k):
        n = self.vertices.size
        k = min(k, n)
        _, idx = self._tree.query(np.column_stack([z.real, z.imag]), k=k)
        idx = np.asarray(idx).reshape(z.size, k)
        cand = np.concatenate([idx, (idx - 1) % n], axis=1)  # segments starting at i
        a = self.vertices[cand]
        b = self.vertices[(cand + 1) % n]
        ab = b - a
        L2 = np.abs(ab) ** 2
        t = np.real((z[:, None] - a) * np.conj(ab)) / np.where(L2 > 0, L2, 1.0)
        t = np.clip(t, 0.0, 1.0)
        d = np.abs(z[:, None] - (a + t * ab))
        j = np.argmin(d, axis=1)
        dist = d[np.arange(z.size), j]
        if conservative:
            dist = dist - self.segment_error[cand[np.arange(z.size), j]]
        return dist

    def contains(self, z):
        """Even-odd point-in-polygon test."""
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        a, b = self.segments
        x, y = z.real[:, None], z.imag[:, None]
        ay, by = a.imag[None, :], b.imag[None, :]
        ax, bx = a.real[None, :], b.real[None, :]
        cond = (ay > y) != (by > y)
        with np.errstate(divide="ignore", invalid="ignore"):
            xint = ax + (y - ay) * (bx - ax) / (by - ay)
        hits = cond & (x < xint)
        return (np.sum(hits, axis=1) % 2) == 1

    def circle_fit(self):
        """Least-squares circle ``(center, radius, max_deviation)`` through the vertices."""
        v = self.vertices
        A = np.column_stack([v.real, v.imag, np.ones(v.size)])
        rhs = np.abs(v) ** 2
        sol, *_ = np.linalg.lstsq(A, rhs, rcond=None)
        c = complex(sol[0] / 2, sol[1] / 2)
        r = math.sqrt(sol[2] + abs(c) ** 2)
        dev = float(np.max(np.abs(np.abs(v - c) - r)))
        return c, r, dev


def _seed_on_ray(g, angle: float, box: float) -> complex:
    u = complex(math.cos(angle), math.sin(angle))
    lo = 1.0
    if g(lo * u) >= 0:
        raise GeometryError(f"|theta| >= delta already on the unit circle at angle {angle:.4g}")
    step = 1e-6
    hi = lo + step
    while g(hi * u) < 0:
        lo = hi
        step *= 2.0
        hi = 1.0 + step
        if hi > box:
            raise GeometryError(f"no solution of |theta| = delta on the ray at angle {angle:.4g}")
    r = optimize.brentq(lambda r: g(r * u), lo, hi, xtol=1e-15, rtol=1e-15)
    return r * u


def _trace(f, g, grad, seed, sense, resolution, tol, targets, box, max_steps):
    """Follow the level curve from ``seed``; stop at a target point or on closing."""
    z = seed
    pts = [z]
    h = resolution
    travelled = 0.0
    targets = np.asarray(targets, dtype=complex)
    for _ in range(max_steps):
        n = grad(z)
        n = n / abs(n)
        tang = sense * 1j * n
        dspec = float(np.min(np.abs(targets - z))) if targets.size else math.inf
        h_eff = min(h, resolution, 0.25 * dspec)
        zc = z + h_eff * tang
        ok = False
        for _ in range(20):
            gz = g(zc)
            gr = grad(zc)
            dz = -gz * gr / abs(gr) ** 2
            zc = zc + dz
            if abs(dz) <= 1e-14 * max(1.0, abs(zc)) or (abs(gz) <= tol and abs(dz) <= 1e-12 * h_eff):
                ok = True
                break
        if ok:
            nn = grad(zc)
            new_tang = sense * 1j * nn / abs(nn)
            turn = abs(np.angle(new_tang / tang))
            step_len = abs(zc - z)
            ok = turn <= MAX_TURN and step_len <= 2.0 * h_eff and step_len > 0.1 * h_eff
        if not ok:
            h = 0.5 * h_eff
            if h < 1e-15:
                raise GeometryError(f"continuation stalled near {z:.6g}")
            continue
        if abs(zc) > box:
            raise GeometryError(f"level curve left the bounding box near {zc:.6g}")
        travelled += abs(zc - z)
        z = zc
        h = min(resolution, 1.5 * h_eff)
        if targets.size and np.min(np.abs(targets - z)) < max(1e-9, 1e-3 * resolution):
            return pts, "target"
        if travelled > 10 * resolution and abs(z - seed) < 1.01 * h_eff:
            return pts, "closed"
        pts.append(z)
    raise GeometryError(f"continuation exceeded {max_steps} steps")


def level_boundary(f: InnerFunction, delta: float, resolution: float = 1e-3,
                   tol: float = 1e-11, box: float = 1e4,
                   max_steps: int = 5_000_000) -> LevelDomain:
    """Trace ``{|theta| = delta}`` for ``delta > 1`` as a closed polyline."""
    if not delta > 1:
        raise ParameterError("delta must exceed 1")
    if not resolution > 0:
        raise ParameterError("resolution must be positive")
    logd = math.log(delta)

    def g(z):
        return f.log_modulus(z) - logd

    def grad(z):
        return np.conj(f.log_derivative(z))

    spec = spectrum(f)
    if not spec:
        angle = _free_angle(f)
        seed = _seed_on_ray(g, angle, box)
        pts, how = _trace(f, g, grad, seed, 1.0, resolution, tol, [], box, max_steps)
        if how != "closed":
            raise GeometryError("trace did not close")
        verts = np.array(pts)
        on_spec = np.zeros(verts.size, dtype=bool)
    else:
        angs = sorted(math.atan2(p.imag, p.real) % (2 * math.pi) for p in spec)
        pieces, flags = [], []
        m = len(angs)
        for k in range(m):
            a0 = angs[k]
            a1 = angs[(k + 1) % m] + (2 * math.pi if k + 1 == m else 0.0)
            mid = 0.5 * (a0 + a1)
            seed = _seed_on_ray(g, mid, box)
            x0 = complex(math.cos(a0), math.sin(a0))
            x1 = complex(math.cos(a1), math.sin(a1))
            fwd, how_f = _trace(f, g, grad, seed, 1.0, resolution, tol, spec, box, max_steps)
            if how_f == "closed":
                # the curve avoids the spectrum: a single closed trace
                verts = np.array(fwd)
                on_spec = np.zeros(verts.size, dtype=bool)
                break
            bwd, _ = _trace(f, g, grad, seed, -1.0, resolution, tol, spec, box, max_steps)
            piece = [x0] + bwd[:0:-1] + fwd
            pieces.extend(piece)
            flags.extend([True] + [False] * (len(piece) - 1))
        else:
            verts = np.array(pieces)
            on_spec = np.array(flags)
    verts, on_spec = _ensure_ccw(verts, on_spec)
    err = _chord_errors(verts)
    achieved = float(np.max(np.abs(np.abs(f(verts[~on_spec])) - delta))) if np.any(~on_spec) else 0.0
    return LevelDomain(delta=float(delta), vertices=verts, on_spectrum=on_spec,
                       resolution=float(resolution), tolerance=max(tol, achieved),
                       segment_error=err)


def _free_angle(f: InnerFunction) -> float:
    """A ray direction that avoids the directions of the zeros."""
    dirs = np.angle(f.directions[f.deltas < 1.0]) if f.degree else np.empty(0)
    for cand in np.linspace(0.0, 2 * math.pi, 97)[:-1] + 0.0123:
        if dirs.size == 0 or np.min(np.abs(np.angle(np.exp(1j * (dirs - cand))))) > 1e-2:
            return float(cand)
    return 0.0123


def _ensure_ccw(v, flags):
    area = 0.5 * np.sum(np.imag(np.conj(v) * np.roll(v, -1)))
    if area < 0:
        return v[::-1].copy(), flags[::-1].copy()
    return v, flags


def _chord_errors(v):
    a = v
    b = np.roll(v, -1)
    seg = b - a
    L = np.abs(seg)
    d = np.angle(seg / np.roll(seg, 1))  # turn at vertex i
    turn = np.maximum(np.abs(d), np.abs(np.roll(d, -1)))
    turn = np.minimum(turn, math.pi)
    return L * turn / 4.0


def dist_and_surrogate(f: InnerFunction, dom: LevelDomain, z):
    """Distance to the traced boundary and ``(1 - |z|^2)/(1 - |theta(z)|^2)``."""
    z = np.asarray(z, dtype=complex)
    if np.any(distance_to_spectrum(f, z) < dom.resolution):
        raise SpectrumError("surrogate undefined within resolution of the spectrum")
    dist = dom.distance(z)
    sur = 1.0 / kernel_diag(f, z)
    if z.ndim == 0:
        return float(np.ravel(dist)[0]), float(np.ravel(sur)[0])
    return dist, sur


def check_level_domain(f: InnerFunction, dom: LevelDomain, n_circle: int = 512):
    """Return ``(max_level_error, circle_inside)`` for the stated invariants."""
    v = dom.vertices[~dom.on_spectrum]
    lev = np.abs(np.abs(f(v)) - dom.delta)
    t = 2 * math.pi * (np.arange(n_circle) + 0.5) / n_circle
    pts = np.exp(1j * t)
    pts = pts[distance_to_spectrum(f, pts) > 10 * dom.resolution]
    inside = bool(np.all(dom.contains(pts)))
    return float(np.max(lev)), inside
