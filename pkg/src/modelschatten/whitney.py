"""Good/bad Carleson-square decomposition of the annulus ``1/2 < |z| <= 1``.

Boxes are polar rectangles ``{r e^{it}: r_lo < r <= r_hi, t0 <= t < t0 + arc}``
(half-open, so boxes produced by the subdivision tree are exactly disjoint).
A Carleson square has ``r_hi = 1``; the four initial squares are the
quadrants with height 1/2, and a square of depth ``m`` has angular width
``(pi/2) 2^-m`` and height ``2^(-1-m)``.

The subdivision runs breadth first, one depth level at a time, with every
geometric test vectorised over the squares of that level.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError
from .level import LevelDomain

TWO_PI = 2.0 * math.pi
EDGE_SAMPLES = 8  # sample intervals per box edge for the distance test
TOUCH = 1e-12  # sampled distances below this count as meeting the boundary


@dataclass(frozen=True)
class CarlesonSquare:
    """Polar box over the arc ``[arc_center - arc_length/2, arc_center + arc_length/2)``.

    ``top`` is the outer radius (1 for a Carleson square, ``1 - height`` for the
    upper half of a square of twice the height).
    """

    arc_center: float
    arc_length: float
    height: float
    top: float = 1.0

    def __post_init__(self):
        if not (0 < self.arc_length <= TWO_PI + 1e-15):
            raise ParameterError("arc_length must lie in (0, 2pi]")
        if not (0 < self.height <= self.top <= 1.0):
            raise ParameterError("need 0 < height <= top <= 1")

    @property
    def theta0(self) -> float:
        return self.arc_center - 0.5 * self.arc_length

    @property
    def r_lo(self) -> float:
        return self.top - self.height

    @property
    def is_square(self) -> bool:
        return self.top == 1.0

    @property
    def diam(self) -> float:
        return float(box_diameter(self.arc_length, self.r_lo, self.top))

    @property
    def area(self) -> float:
        """Normalised area (the unit disk has area 1)."""
        return self.arc_length * (self.top**2 - self.r_lo**2) / TWO_PI

    def upper_half(self) -> "CarlesonSquare":
        return CarlesonSquare(self.arc_center, self.arc_length, 0.5 * self.height,
                              self.top - 0.5 * self.height)

    def children(self) -> tuple["CarlesonSquare", "CarlesonSquare"]:
        """The two squares splitting the lower half."""
        h, q = 0.5 * self.height, 0.25 * self.arc_length
        return (CarlesonSquare(self.arc_center - q, 0.5 * self.arc_length, h, self.top),
                CarlesonSquare(self.arc_center + q, 0.5 * self.arc_length, h, self.top))

    def dilate(self, a: float) -> "CarlesonSquare":
        """Carleson square over the arc with the same centre and ``a`` times the length."""
        if not self.is_square:
            raise ParameterError("only Carleson squares can be dilated")
        return CarlesonSquare(self.arc_center, min(a * self.arc_length, TWO_PI),
                              min(a * self.height, 1.0), 1.0)

    def contains(self, z):
        z = np.asarray(z, dtype=complex)
        return _contains(z, self.theta0, self.arc_length, self.r_lo, self.top)

    def boundary_samples(self, n: int = EDGE_SAMPLES) -> np.ndarray:
        return _boundary_samples(np.array([self.theta0]), self.arc_length,
                                 self.r_lo, self.top, n)[0]


def box_diameter(arc, r_lo, r_hi):
    """Exact diameter of ``{r_lo <= r <= r_hi, 0 <= t <= arc}`` for ``arc <= pi``."""
    arc = np.asarray(arc, dtype=float)
    outer = 2.0 * r_hi * np.sin(0.5 * np.minimum(arc, math.pi))
    cross = np.sqrt(np.maximum(r_lo**2 + r_hi**2 - 2.0 * r_lo * r_hi * np.cos(arc), 0.0))
    return np.maximum(np.maximum(outer, cross), r_hi - r_lo)


def _contains(z, theta0, arc, r_lo, r_hi):
    r = np.abs(z)
    t = np.mod(np.angle(z) - theta0, TWO_PI)
    return (r > r_lo) & (r <= r_hi) & (t < arc)


def _boundary_samples(theta0, arc, r_lo, r_hi, n):
    """Points on the four edges of each box; shape ``(len(theta0), 4n)``."""
    s = np.arange(n) / n
    th = theta0[:, None] + arc * s[None, :]
    r = r_lo + (r_hi - r_lo) * s
    outer = r_hi * np.exp(1j * th)
    inner = r_lo * np.exp(1j * (th + arc / n))
    left = r[None, :] * np.exp(1j * theta0)[:, None]
    right = (r[None, :] + (r_hi - r_lo) / n) * np.exp(1j * (theta0 + arc))[:, None]
    return np.concatenate([outer, right, inner, left], axis=1)


def box_distance(dom: LevelDomain, theta0, arc, r_lo, r_hi, n: int = EDGE_SAMPLES):
    """Lower bound for ``dist(box, curve)`` for each box.

    The curve lies outside the open boxes, so the distance is attained on the
    box boundary.  The boundary is sampled with spacing ``sigma`` and the
    1-Lipschitz bound subtracts ``sigma/2``; the polyline chord error is
    subtracted by the conservative polyline distance.
    """
    theta0 = np.atleast_1d(np.asarray(theta0, dtype=float))
    pts = _boundary_samples(theta0, arc, r_lo, r_hi, n)
    d = dom.distance(pts, conservative=True).reshape(pts.shape)
    sigma = max(2.0 * r_hi * math.sin(0.5 * min(arc, math.pi) / n), (r_hi - r_lo) / n)
    return np.min(d, axis=1) - 0.5 * sigma


@dataclass(frozen=True)
class WhitneyBox:
    G: CarlesonSquare
    W: CarlesonSquare
    kind: str  # "good" or "upper-half"
    depth: int
    dist: float  # conservative dist(G, boundary)
    parent_diam: float = math.nan  # d of the bad square that produced G (nan at depth 0)

    @property
    def diam(self) -> float:
        return self.G.diam


@dataclass(frozen=True, eq=False)
class WhitneyDecomposition:
    """Emitted boxes ``G_i`` with their squares ``W_i`` plus undecided residual squares."""

    boxes: tuple
    gamma: float
    delta: float
    a: float
    max_depth: int
    residual: tuple = ()
    _index: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not self._index:
            idx: dict = {}
            for i, b in enumerate(self.boxes):
                j = _dyadic_index(b.G, b.depth)
                idx.setdefault((b.depth, b.kind), {})[j] = i
            res = {}
            for i, sq in enumerate(self.residual):
                depth = int(round(math.log2((math.pi / 2) / sq.arc_length)))
                res.setdefault(depth, {})[_dyadic_index(sq, depth)] = i
            object.__setattr__(self, "_index", {"boxes": idx, "residual": res})

    def __len__(self):
        return len(self.boxes)

    def arrays(self):
        """``(theta0, arc, r_lo, r_hi)`` arrays of the emitted boxes."""
        g = [b.G for b in self.boxes]
        return (np.array([x.theta0 for x in g]), np.array([x.arc_length for x in g]),
                np.array([x.r_lo for x in g]), np.array([x.top for x in g]))

    def locate(self, z):
        """Index of the emitted box containing each point, ``-1`` if none.

        A second array flags points that fall in a residual square.
        """
        z = np.atleast_1d(np.asarray(z, dtype=complex)).ravel()
        if self._index.get("generic"):
            return self._locate_scan(z), np.zeros(z.size, dtype=bool)
        r = np.abs(z)
        t = np.mod(np.angle(z), TWO_PI)
        out = np.full(z.size, -1, dtype=int)
        in_res = np.zeros(z.size, dtype=bool)
        for (depth, kind), table in self._index["boxes"].items():
            arc = (math.pi / 2) * 2.0**-depth
            H = 0.5 * 2.0**-depth
            lo, hi = (1 - H, 1.0) if kind == "good" else (1 - H, 1 - 0.5 * H)
            sel = (out < 0) & (r > lo) & (r <= hi)
            if not np.any(sel):
                continue
            j = np.floor(t[sel] / arc).astype(np.int64)
            hit = np.array([table.get(int(k), -1) for k in j], dtype=int)
            out[np.flatnonzero(sel)] = np.where(hit >= 0, hit, out[sel])
        for depth, table in self._index["residual"].items():
            arc = (math.pi / 2) * 2.0**-depth
            H = 0.5 * 2.0**-depth
            sel = (out < 0) & (r > 1 - H) & (r <= 1.0)
            if not np.any(sel):
                continue
            j = np.floor(t[sel] / arc).astype(np.int64)
            in_res[np.flatnonzero(sel)] |= np.array([int(k) in table for k in j], dtype=bool)
        return out, in_res

    def _locate_scan(self, z):
        out = np.full(z.size, -1, dtype=int)
        t0, arc, lo, hi = self.arrays()
        for i in range(t0.size):
            hit = (out < 0) & _contains(z, t0[i], arc[i], lo[i], hi[i])
            out[hit] = i
        return out

    def area(self) -> tuple[float, float]:
        """Normalised areas of the emitted boxes and of the residual squares."""
        return (math.fsum(b.G.area for b in self.boxes),
                math.fsum(s.area for s in self.residual))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["box_id", "kind", "depth", "arc_center", "arc_length", "diam",
                    "dist_to_boundary"])
        for i, b in enumerate(self.boxes):
            w.writerow([i, b.kind, b.depth, repr(b.G.arc_center), repr(b.G.arc_length),
                        repr(b.G.diam), repr(b.dist)])
        return buf.getvalue()


def _dyadic_index(sq: CarlesonSquare, depth: int) -> int:
    arc = (math.pi / 2) * 2.0**-depth
    return int(math.floor(np.mod(sq.theta0, TWO_PI) / arc + 0.5))


def build_whitney(dom: LevelDomain, gamma: float = 0.5, a: float = 3.0,
                  max_depth: int = 24, edge_samples: int = EDGE_SAMPLES) -> WhitneyDecomposition:
    """Good/bad subdivision of the four quadrant squares.

    A square ``S`` is good when the conservative ``dist(S, boundary)`` exceeds
    ``gamma d(S)``; it is then emitted.  A bad square emits its upper half and
    its lower half is split into two squares of the next depth.  Bad squares
    at ``max_depth`` are returned undivided in ``residual``.
    """
    if not gamma > 0:
        raise ParameterError("gamma must be positive")
    if not a > 1:
        raise ParameterError("dilation a must exceed 1")
    if int(max_depth) < 1:
        raise ParameterError("max_depth must be at least 1")
    boxes: list[WhitneyBox] = []
    residual: list[CarlesonSquare] = []
    idx = np.arange(4, dtype=np.int64)  # dyadic positions at the current depth
    parent_d = math.nan
    for depth in range(int(max_depth) + 1):
        if idx.size == 0:
            break
        arc = (math.pi / 2) * 2.0**-depth
        H = 0.5 * 2.0**-depth
        theta0 = idx * arc
        d_sq = float(box_diameter(arc, 1.0 - H, 1.0))
        dist = box_distance(dom, theta0, arc, 1.0 - H, 1.0, edge_samples)
        good = dist > gamma * d_sq
        for j, dj in zip(idx[good], dist[good]):
            sq = CarlesonSquare(float((j + 0.5) * arc), arc, H)
            boxes.append(WhitneyBox(sq, sq, "good", depth, float(dj), parent_d))
        bad = idx[~good]
        if depth == int(max_depth):
            residual.extend(CarlesonSquare(float((j + 0.5) * arc), arc, H) for j in bad)
            break
        if bad.size:
            udist = box_distance(dom, bad * arc, arc, 1.0 - H, 1.0 - 0.5 * H, edge_samples)
            for j, dj in zip(bad, udist):
                sq = CarlesonSquare(float((j + 0.5) * arc), arc, H)
                boxes.append(WhitneyBox(sq.upper_half(), sq, "upper-half", depth, float(dj), d_sq))
        idx = np.sort(np.concatenate([2 * bad, 2 * bad + 1]))
        parent_d = d_sq
    boxes.sort(key=lambda b: (b.depth, b.G.arc_center, b.kind))
    if residual:
        warnings.warn(f"{len(residual)} squares undecided at depth {max_depth}", RuntimeWarning,
                      stacklevel=2)
    return WhitneyDecomposition(tuple(boxes), float(gamma), float(dom.delta), float(a),
                                int(max_depth), tuple(residual))


def uniform_decomposition(levels: int, delta: float = math.nan) -> WhitneyDecomposition:
    """The four quadrants each split ``levels`` times in angle and in radius.

    Used as a comparison family for overlap counts; boxes are labelled "good".
    """
    boxes = []
    m = 1 << levels
    for q in range(4):
        for i in range(m):
            arc = (math.pi / 2) / m
            c = q * math.pi / 2 + (i + 0.5) * arc
            for k in range(m):
                top = 1.0 - 0.5 * k / m
                sq = CarlesonSquare(c, arc, 0.5 / m, top)
                boxes.append(WhitneyBox(sq, sq, "good", 0, math.nan))
    return WhitneyDecomposition(tuple(boxes), math.nan, delta, 1.0 + 1e-12, levels, (),
                                _index={"generic": True})


def overlap_multiplicity(dec1: WhitneyDecomposition, dec2: WhitneyDecomposition) -> int:
    """Largest number of boxes of ``dec2`` meeting a single box of ``dec1``."""
    if not dec1.boxes or not dec2.boxes:
        return 0
    t1, a1, lo1, hi1 = dec1.arrays()
    t2, a2, lo2, hi2 = dec2.arrays()
    best = 0
    for s in range(0, t1.size, 512):
        sl = slice(s, s + 512)
        rad = (lo1[sl, None] < hi2[None, :]) & (lo2[None, :] < hi1[sl, None])
        ang = _arcs_overlap(t1[sl, None], a1[sl, None], t2[None, :], a2[None, :])
        best = max(best, int(np.max(np.sum(rad & ang, axis=1))))
    return best


def _arcs_overlap(t1, a1, t2, a2):
    """Overlap of half-open arcs ``[t1, t1 + a1)`` and ``[t2, t2 + a2)`` on the circle."""
    eps = 1e-12  # shared dyadic endpoints are not an overlap
    d = np.mod(t2 - t1, TWO_PI)  # start of arc 2 relative to arc 1
    full = (a1 >= TWO_PI) | (a2 >= TWO_PI)
    return full | (d < a1 - eps) | (d + a2 > TWO_PI + eps)


@dataclass(frozen=True)
class WhitneyReport:
    """Estimated constants of the Whitney-type definition for a family of boxes.

    ``c`` bounds the ratio of distances to the boundary within one box; every
    box contains ``B(z, a d)`` and lies in ``B(z, b d)`` with ``d = dist(z, boundary)``
    for its centre ``z``.  ``m, M`` bound ``dist(G, boundary)/d(G)`` and
    ``multiplicity`` is the overlap count of the family with itself.
    """

    a: float
    b: float
    c: float
    m: float
    M: float
    multiplicity: int
    coverage: float
    passed: bool
    failures: tuple = ()


def validate_whitney(dec: WhitneyDecomposition, dom: LevelDomain, samples: int = 16,
                     boxes=None) -> WhitneyReport:
    """Sample each box on a ``samples x samples`` polar grid and report the constants."""
    items = dec.boxes if boxes is None else tuple(boxes)
    failures = []
    if not items:
        return WhitneyReport(math.nan, math.nan, math.nan, math.nan, math.nan, 0, 0.0,
                             False, ("no boxes",))
    n = max(int(samples), 2)
    u = (np.arange(n) + 0.5) / n
    u = np.concatenate([[0.0], u, [1.0]])
    th0 = np.array([b.G.theta0 for b in items])
    arc = np.array([b.G.arc_length for b in items])
    lo = np.array([b.G.r_lo for b in items])
    hi = np.array([b.G.top for b in items])
    # closed top edge, open bottom edge and open right edge
    rr = hi[:, None] - (hi - lo)[:, None] * np.minimum(u, 1 - 1e-9)[None, :]
    tt = th0[:, None] + arc[:, None] * np.minimum(u, 1 - 1e-9)[None, :]
    pts = (rr[:, :, None] * np.exp(1j * tt[:, None, :])).reshape(len(items), -1)
    d = dom.distance(pts).reshape(pts.shape)
    dmin, dmax = np.min(d, axis=1), np.max(d, axis=1)
    touch = (dmin <= TOUCH) | _holds_vertex(dom, th0, arc, lo, hi)
    with np.errstate(divide="ignore"):
        c_i = np.where(touch, np.inf, dmax / np.where(touch, 1.0, dmin))
    rmid = 0.5 * (lo + hi)
    zc = rmid * np.exp(1j * (th0 + 0.5 * arc))
    dc = dom.distance(zc)
    r_in = np.minimum(0.5 * (hi - lo), rmid * np.sin(0.5 * np.minimum(arc, math.pi)))
    corners = np.stack([lo * np.exp(1j * th0), hi * np.exp(1j * th0),
                        lo * np.exp(1j * (th0 + arc)), hi * np.exp(1j * (th0 + arc))], axis=1)
    r_out = np.max(np.abs(corners - zc[:, None]), axis=1)
    with np.errstate(divide="ignore"):
        a_i = np.where(dc > 0, r_in / dc, 0.0)
        b_i = np.where(dc > 0, r_out / dc, np.inf)
    diam = box_diameter(arc, lo, hi)
    gd = np.array([b.dist for b in items])
    rho = gd / diam
    c, a, b = float(np.max(c_i)), float(np.min(a_i)), float(np.max(b_i))
    if not math.isfinite(c):
        failures.append("condition (i): a box meets the boundary")
    if not a > 0 or not math.isfinite(b):
        failures.append("condition (ii): no inner/outer ball pair")
    fam = WhitneyDecomposition(items, dec.gamma, dec.delta, dec.a, dec.max_depth)
    mult = overlap_multiplicity(fam, fam) if len(items) <= 20_000 else -1
    if mult > 2:
        failures.append(f"multiplicity {mult}")
    em, res = dec.area()
    annulus = 0.75
    cov = (em + res) / annulus
    return WhitneyReport(a, b, c, float(np.min(rho)), float(np.max(rho)), mult, cov,
                         not failures, tuple(failures))


def _holds_vertex(dom: LevelDomain, th0, arc, lo, hi):
    """Flag boxes containing a vertex of the boundary polyline."""
    mid = 0.5 * (lo + hi) * np.exp(1j * (th0 + 0.5 * arc))
    reach = 0.5 * (hi - lo) + hi * np.minimum(arc, np.pi) + 1e-12
    near = dom._tree.query_ball_point(np.column_stack([mid.real, mid.imag]), reach)
    out = np.zeros(th0.size, dtype=bool)
    for i, cand in enumerate(near):
        if cand:
            out[i] = bool(np.any(_contains(dom.vertices[cand], th0[i], arc[i], lo[i], hi[i])))
    return out


def distance_bounds(dec: WhitneyDecomposition, dom: LevelDomain):
    """Per-box ``(lower, value, upper)`` for the two-sided distance comparison.

    Lower bounds: ``gamma d(G)`` for good squares (the goodness test) and the
    gap ``1 - r_hi`` between an upper half and the circle.  Upper bound:
    ``(gamma + 1) d(S)`` for the bad square ``S`` producing ``G`` plus the
    sampling slack of the conservative distance; depth-0 good squares have no
    parent and get ``inf``.
    """
    slack = float(np.max(dom.segment_error)) if dom.segment_error.size else 0.0
    out = []
    for b in dec.boxes:
        g = b.G
        sig = max(2.0 * g.top * math.sin(0.5 * min(g.arc_length, math.pi) / EDGE_SAMPLES),
                  g.height / EDGE_SAMPLES)
        if b.kind == "good":
            lower = dec.gamma * g.diam
        else:
            lower = (1.0 - g.top) - 0.5 * sig - slack
        if math.isnan(b.parent_diam):
            upper = math.inf
        else:
            psig = b.parent_diam / EDGE_SAMPLES
            upper = (dec.gamma + 1.0) * b.parent_diam + psig + slack
        out.append((lower, b.dist, upper))
    return np.array(out)


def ahlfors_ratio(curve, centers: int = 64, radii: int = 48, include_off_curve: bool = False,
                  off_scale: float = 0.5, closed: bool = True) -> float:
    """Largest ``length(curve within B(z, r))/r`` over sampled centres and radii.

    Centres are spread along the closed polyline by arclength; radii are
    log-spaced from the shortest segment to the curve diameter, and the radius
    enclosing the whole curve is always included.  With
    ``include_off_curve`` every centre is also displaced along the normal by
    ``off_scale * r`` to both sides.  An open polyline (``closed=False``) has
    no segment joining its last vertex to its first.
    """
    v = np.asarray(curve, dtype=complex).ravel()
    a, b = (v, np.roll(v, -1)) if closed else (v[:-1], v[1:])
    seg = np.abs(b - a)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    L = cum[-1]
    s = L * np.arange(centers) / centers
    k = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, a.size - 1)
    frac = (s - cum[k]) / np.where(seg[k] > 0, seg[k], 1.0)
    cz = a[k] + frac * (b[k] - a[k])
    normal = 1j * (b[k] - a[k]) / np.where(seg[k] > 0, seg[k], 1.0)
    diam = float(np.max(np.abs(v[:, None] - v[None, :]))) if v.size <= 4000 else \
        2.0 * float(np.max(np.abs(v - np.mean(v))))
    rmin = max(float(np.min(seg[seg > 0])), 1e-12)
    rs = np.geomspace(rmin, 2.0 * diam, radii)
    best = 0.0
    for i, z in enumerate(cz):
        zs = [z]
        if include_off_curve:
            zs += ["off"]
        for zz in zs:
            for r in np.concatenate([rs, [np.max(np.abs(v - z))]]):
                if zz == "off":
                    cands = [z + off_scale * r * normal[i], z - off_scale * r * normal[i]]
                else:
                    cands = [z]
                for c in cands:
                    best = max(best, _length_in_ball(a, b, c, r) / r)
    return best


def _length_in_ball(a, b, c, r) -> float:
    """Total length of the segments ``[a_j, b_j]`` inside the closed disk ``B(c, r)``."""
    d = b - a
    f = a - c
    A = np.abs(d) ** 2
    B = 2.0 * np.real(f * np.conj(d))
    C = np.abs(f) ** 2 - r * r
    disc = B * B - 4.0 * A * C
    ok = (disc > 0) & (A > 0)
    sq = np.sqrt(np.where(ok, disc, 0.0))
    Asafe = np.where(A > 0, A, 1.0)
    t0 = np.clip((-B - sq) / (2 * Asafe), 0.0, 1.0)
    t1 = np.clip((-B + sq) / (2 * Asafe), 0.0, 1.0)
    return float(np.sum(np.where(ok, (t1 - t0) * np.sqrt(A), 0.0)))
