"""Holomorphic self-maps of the disk, their Nevanlinna counting functions and
pullback measures.

Variants
--------
``finite_blaschke``
    ``lam * prod (z - b_k)/(1 - conj(b_k) z)``.
``affine_disk``
    ``a + r z`` with ``|a| + r <= 1``.
``sector_map``
    ``psi_alpha = kappa o (w -> w**alpha) o kappa^{-1}`` with
    ``kappa(w) = (1 + i w)/(1 - i w)``; it maps the disk onto the lens
    ``V_alpha`` bounded by the upper half circle and a circular arc
    ``gamma_alpha`` through ``-1`` and ``1``.
``corner_model``
    Not a map.  A closed-form model of the counting function of a Riemann map
    onto a domain ``U_alpha`` with a corner of opening ``pi alpha`` at 1:
    ``N(z) = dist(z, boundary U_alpha) |z - 1|**(1/alpha - 1)``.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import NotAMapError, NumericError, OracleInconclusive, ParameterError, PoleError

TWO_PI = 2.0 * math.pi
TAU_CAP = 1.0 - math.exp(-2.0 / math.pi)  # radius of the tau curve at angle pi/2

VARIANTS = ("finite_blaschke", "affine_disk", "sector_map", "corner_model")


def kappa(w):
    """``(1 + i w)/(1 - i w)``: upper half plane onto the disk."""
    w = np.asarray(w, dtype=complex)
    return (1.0 + 1j * w) / (1.0 - 1j * w)


def kappa_inv(z):
    """``i (1 - z)/(1 + z)``: disk onto the upper half plane."""
    z = np.asarray(z, dtype=complex)
    return 1j * (1.0 - z) / (1.0 + z)


def _one_minus_abs_kappa_sq(v):
    """``1 - |kappa(v)|^2 = 4 Im v / |1 - i v|^2`` without cancellation."""
    return 4.0 * np.imag(v) / np.abs(1.0 - 1j * v) ** 2


def _clog1p(q):
    """Complex ``log(1 + q)`` accurate for small ``q`` (numpy's is not)."""
    q = np.asarray(q, dtype=complex)
    re = 0.5 * np.log1p(2.0 * q.real + np.abs(q) ** 2)
    return re + 1j * np.arctan2(q.imag, 1.0 + q.real)


def _cexpm1(x):
    """Complex ``exp(x) - 1`` accurate for small ``x``."""
    x = np.asarray(x, dtype=complex)
    a, b = x.real, x.imag
    return (np.expm1(a) * np.cos(b) - 2.0 * np.sin(0.5 * b) ** 2) + 1j * np.exp(a) * np.sin(b)


def _upper_arg(w):
    """Argument in ``[0, pi]`` for points of the closed upper half plane."""
    a = np.angle(w)
    return np.where(a < -0.5 * math.pi, a + TWO_PI, np.maximum(a, 0.0))


@dataclass(frozen=True)
class Symbol:
    """A self-map of the disk (or the corner counting-function model).

    Use the constructors :meth:`finite_blaschke`, :meth:`affine_disk`,
    :meth:`sector_map`, :meth:`corner_model` rather than the raw fields.
    """

    variant: str
    zeros: tuple = ()
    constant: complex = 1.0 + 0j
    center: complex = 0j
    radius: float = 1.0
    alpha: float = math.nan
    _poly: tuple = field(default=(), repr=False, compare=False)

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ParameterError(f"unknown symbol variant {self.variant!r}")
        if self.variant == "finite_blaschke":
            b = np.asarray(self.zeros, dtype=complex)
            if b.size == 0:
                raise ParameterError("constant symbols are not supported")
            if np.any(np.abs(b) >= 1):
                raise ParameterError("Blaschke zeros must lie in the open disk")
            if abs(abs(self.constant) - 1.0) > 1e-12:
                raise ParameterError("the Blaschke constant must be unimodular")
            P = complex(self.constant) * np.poly(b)  # highest degree first
            Q = np.array([1.0 + 0j])
            for bk in b:
                Q = np.polymul(Q, np.array([-np.conj(bk), 1.0]))
            object.__setattr__(self, "_poly", (P, Q))
        elif self.variant == "affine_disk":
            if not self.radius > 0:
                raise ParameterError("constant symbols are not supported")
            if abs(self.center) + self.radius > 1.0 + 1e-15:
                raise ParameterError("need |a| + r <= 1")
        else:
            if not 0.0 < self.alpha < 1.0:
                raise ParameterError("alpha must lie in (0, 1)")

    # ------------------------------------------------------------------
    @classmethod
    def finite_blaschke(cls, zeros, constant: complex = 1.0):
        return cls("finite_blaschke", tuple(complex(b) for b in np.atleast_1d(zeros)),
                   constant=complex(constant))

    @classmethod
    def affine_disk(cls, center: complex, radius: float):
        return cls("affine_disk", center=complex(center), radius=float(radius))

    @classmethod
    def identity(cls):
        return cls.affine_disk(0.0, 1.0)

    @classmethod
    def scaling(cls, c: float):
        """``z -> c z``."""
        return cls.affine_disk(0.0, c)

    @classmethod
    def sector_map(cls, alpha: float):
        return cls("sector_map", alpha=float(alpha))

    @classmethod
    def corner_model(cls, alpha: float):
        return cls("corner_model", alpha=float(alpha))

    @classmethod
    def from_json(cls, text):
        d = json.loads(text) if isinstance(text, str) else dict(text)
        v = d["variant"]
        if v == "finite_blaschke":
            c = d.get("constant", [1.0, 0.0])
            return cls.finite_blaschke([complex(x, y) for x, y in d["zeros"]], complex(*c))
        if v == "affine_disk":
            a = d.get("center", [0.0, 0.0])
            return cls.affine_disk(complex(*a), d["radius"])
        if v in ("sector_map", "corner_model"):
            return cls(v, alpha=float(d["alpha"]))
        raise ParameterError(f"unknown symbol variant {v!r}")

    def to_json(self) -> str:
        d: dict = {"variant": self.variant}
        if self.variant == "finite_blaschke":
            d["zeros"] = [[z.real, z.imag] for z in self.zeros]
            d["constant"] = [self.constant.real, self.constant.imag]
        elif self.variant == "affine_disk":
            d["center"] = [self.center.real, self.center.imag]
            d["radius"] = self.radius
        else:
            d["alpha"] = self.alpha
        return json.dumps(d)

    # ------------------------------------------------------------------
    @property
    def is_map(self) -> bool:
        return self.variant != "corner_model"

    @property
    def is_univalent(self) -> bool:
        return self.variant in ("affine_disk", "sector_map") or \
            (self.variant == "finite_blaschke" and len(self.zeros) == 1)

    @property
    def degree(self) -> int:
        return len(self.zeros) if self.variant == "finite_blaschke" else 1

    def value_and_derivative(self, z):
        """``(phi(z), phi'(z))`` vectorised over ``z``."""
        if not self.is_map:
            raise NotAMapError("corner_model is a counting-function model, not a map")
        z = np.asarray(z, dtype=complex)
        if self.variant == "affine_disk":
            return self.center + self.radius * z, np.full(z.shape, complex(self.radius))
        if self.variant == "finite_blaschke":
            P, Q = self._poly
            p, q = np.polyval(P, z), np.polyval(Q, z)
            dp, dq = np.polyval(np.polyder(P), z), np.polyval(np.polyder(Q), z)
            return p / q, (dp * q - p * dq) / q**2
        a = self.alpha
        with np.errstate(divide="ignore", invalid="ignore"):
            w = kappa_inv(z)
            wa = np.abs(w) ** a * np.exp(1j * a * _upper_arg(w))
            val = kappa(wa)
            dval = (2j / (1.0 - 1j * wa) ** 2) * a * wa / w * (-2j / (1.0 + z) ** 2)
        val = np.where(z == -1.0, -1.0 + 0j, val)
        return val, dval

    def __call__(self, z):
        return self.value_and_derivative(z)[0]

    def boundary(self, t):
        """Boundary trace ``phi(e^{it})``; the sector map uses ``kappa^{-1}(e^{it}) = tan(t/2)``."""
        t = np.asarray(t, dtype=float)
        if self.variant == "sector_map":
            w = np.tan(0.5 * t)
            arg = np.where(w < 0, math.pi, 0.0)
            wa = np.abs(w) ** self.alpha * np.exp(1j * self.alpha * arg)
            return kappa(wa)
        return self(np.exp(1j * t))

    def phi0(self) -> complex:
        return complex(self(0.0))

    # ------------------------------------------------------------------
    # geometry of V_alpha and U_alpha
    def _gamma_circle(self):
        """Centre ``i c`` and radius of the circle carrying ``gamma_alpha`` (``None`` for a line)."""
        p = complex(kappa(np.exp(1j * math.pi * self.alpha)))
        if abs(p.imag) < 1e-14:
            return None
        c = (abs(p) ** 2 - 1.0) / (2.0 * p.imag)
        return c, math.sqrt(1.0 + c * c)

    def in_lens(self, z):
        """Membership in ``V_alpha``."""
        z = np.asarray(z, dtype=complex)
        with np.errstate(divide="ignore", invalid="ignore"):
            w = kappa_inv(z)
            a = np.angle(w)
        return (np.abs(z) < 1.0) & (a > 0.0) & (a < math.pi * self.alpha)

    def dist_to_gamma(self, z):
        z = np.asarray(z, dtype=complex)
        circ = self._gamma_circle()
        if circ is None:
            return np.abs(z.imag)
        c, R = circ
        return np.abs(np.abs(z - 1j * c) - R)

    @staticmethod
    def tau_radius(theta):
        """Outer radius of the corner domain at angle ``theta`` (1 where unconstrained)."""
        th = np.asarray(theta, dtype=float)
        pos = (th > 0) & (th <= 0.5 * math.pi)
        with np.errstate(divide="ignore", over="ignore"):
            rho = np.where(pos, -np.expm1(-1.0 / np.where(pos, th, 1.0)), 1.0)
        return np.where(np.abs(th) > 0.5 * math.pi, TAU_CAP, rho)

    def in_corner_domain(self, z):
        z = np.asarray(z, dtype=complex)
        return self.in_lens(z) & (np.abs(z) < self.tau_radius(np.angle(z)))

    def dist_to_corner_boundary(self, z):
        """``min(dist to gamma_alpha, radial gap to the tau curve)``."""
        z = np.asarray(z, dtype=complex)
        gap = self.tau_radius(np.angle(z)) - np.abs(z)
        return np.minimum(self.dist_to_gamma(z), np.where(gap > 0, gap, 0.0))

    def support_intervals(self, r: float):
        """Angular intervals ``(lo, hi)`` with ``lo < hi`` where ``N > 0`` on ``|z| = r``.

        Angles are in ``(-pi, pi]``.  Closed form for every variant.
        """
        r = float(r)
        if r <= 0 or r >= 1:
            return []
        if self.variant == "finite_blaschke":
            return [(-math.pi, math.pi)]
        if self.variant == "affine_disk":
            a, rho = self.center, self.radius
            if abs(a) == 0:
                return [(-math.pi, math.pi)] if r < rho else []
            x = (r * r + abs(a) ** 2 - rho * rho) / (2.0 * r * abs(a))
            if x >= 1:
                return []
            if x <= -1:
                return [(-math.pi, math.pi)]
            h = math.acos(x)
            c = math.atan2(a.imag, a.real)
            return _wrap_interval(c - h, c + h)
        # the lens V_alpha on |z| = r
        circ = self._gamma_circle()
        if circ is None:
            cuts = [0.0, math.pi]
        else:
            c, _ = circ
            s = (r * r - 1.0) / (2.0 * r * c)
            if abs(s) >= 1:
                cuts = []
            else:
                t1 = math.asin(s)
                cuts = sorted({t1, math.copysign(math.pi, t1) - t1 if t1 != 0 else math.pi})
        lens = _intervals_from_cuts(cuts, lambda t: bool(self.in_lens(r * np.exp(1j * t))))
        if self.variant == "sector_map":
            return lens
        # corner model: intersect with r < tau_radius(theta)
        allow = [(-0.5 * math.pi, 0.0)]
        if r < 1.0:
            th_tau = 1.0 / math.log(1.0 / (1.0 - r))  # tau_radius(th) > r  <=>  th < th_tau
            allow.append((0.0, min(th_tau, 0.5 * math.pi)))
        if r < TAU_CAP:
            allow += [(0.5 * math.pi, math.pi), (-math.pi, -0.5 * math.pi)]
        return _intersect(lens, allow)


def _wrap_interval(lo, hi):
    """Represent the arc ``[lo, hi]`` (``hi - lo < 2 pi``) inside ``(-pi, pi]``."""
    if hi - lo >= TWO_PI:
        return [(-math.pi, math.pi)]
    start = (lo + math.pi) % TWO_PI - math.pi
    end = start + (hi - lo)
    if end <= math.pi:
        return [(start, end)]
    return [(-math.pi, end - TWO_PI), (start, math.pi)]


def _intervals_from_cuts(cuts, inside):
    """Split ``(-pi, pi]`` at ``cuts`` and keep pieces whose midpoint is inside."""
    pts = sorted(set([-math.pi, math.pi] + [c for c in cuts if -math.pi < c < math.pi]))
    out = []
    for lo, hi in zip(pts[:-1], pts[1:]):
        if hi > lo and inside(0.5 * (lo + hi)):
            if out and out[-1][1] == lo:
                out[-1] = (out[-1][0], hi)
            else:
                out.append((lo, hi))
    return out


def _intersect(a, b):
    out = []
    for lo1, hi1 in a:
        for lo2, hi2 in b:
            lo, hi = max(lo1, lo2), min(hi1, hi2)
            if hi > lo:
                out.append((lo, hi))
    out.sort()
    merged = []
    for lo, hi in out:
        if merged and merged[-1][1] >= lo:
            merged[-1] = (merged[-1][0], max(hi, merged[-1][1]))
        else:
            merged.append((lo, hi))
    return merged


def eval_symbol(s: Symbol, z):
    """``(phi(z), phi'(z))``; raises :class:`NotAMapError` for the corner model."""
    return s.value_and_derivative(z)


# ----------------------------------------------------------------------
# Nevanlinna counting function
def nevanlinna(s: Symbol, z, check_pole: bool = True):
    """``N_phi(z) = sum over phi(zeta) = z of log(1/|zeta|)`` (with multiplicity)."""
    z = np.asarray(z, dtype=complex)
    scalar = z.ndim == 0
    z = np.atleast_1d(z)
    if s.is_map and check_pole and np.any(np.abs(z - s.phi0()) < 1e-15):
        raise PoleError("N_phi has a logarithmic pole at phi(0)")
    if s.variant == "affine_disk":
        with np.errstate(divide="ignore"):
            d = np.abs(z - s.center)
            out = np.where(d < s.radius, np.log(s.radius / d), 0.0)
    elif s.variant == "finite_blaschke":
        out = _nevanlinna_blaschke(s, z)
    elif s.variant == "sector_map":
        out = np.zeros(z.shape)
        inside = s.in_lens(z)
        if np.any(inside):
            zi = z[inside]
            w = kappa_inv(zi)
            v = np.abs(w) ** (1.0 / s.alpha) * np.exp(1j * np.angle(w) / s.alpha)
            om = _one_minus_abs_kappa_sq(v)
            # near phi(0) write v - i relative to the preimage of 0 to avoid cancellation
            z0 = s.phi0()
            w0 = np.exp(0.5j * math.pi * s.alpha)
            dw = -2j * (zi - z0) / ((1.0 + zi) * (1.0 + z0))
            near = np.abs(dw) < 0.5
            q = np.where(near, dw / w0, 0.0)
            dv = 1j * _cexpm1(_clog1p(q) / s.alpha)
            with np.errstate(divide="ignore"):
                # the log1p form is accurate near the circle, the direct one near the origin
                far_val = np.where(om < 0.5, -0.5 * np.log1p(-np.minimum(om, 0.5)),
                                   -np.log(np.abs(kappa(v))))
                near_val = np.log(np.abs(1.0 - 1j * v)) - np.log(np.abs(dv))
            out[inside] = np.where(near & (om >= 0.5), near_val, far_val)
    else:
        out = np.zeros(z.shape)
        inside = s.in_corner_domain(z)
        if np.any(inside):
            zi = z[inside]
            out[inside] = s.dist_to_corner_boundary(zi) * np.abs(zi - 1.0) ** (1.0 / s.alpha - 1.0)
    return float(out[0]) if scalar else out


def _nevanlinna_blaschke(s: Symbol, z):
    roots = blaschke_preimages(s, z)
    return -np.sum(np.log(np.abs(roots)), axis=1)


def blaschke_preimages(s: Symbol, z, polish: int = 2):
    """All ``d`` solutions of ``phi(zeta) = z``, shape ``(len(z), d)``.

    Companion-matrix eigenvalues of ``P - z Q`` (batched), then Newton steps.
    """
    P, Q = s._poly
    d = len(s.zeros)
    z = np.atleast_1d(np.asarray(z, dtype=complex)).ravel()
    Qp = np.concatenate([np.zeros(P.size - Q.size, dtype=complex), Q])
    coef = P[None, :] - z[:, None] * Qp[None, :]  # highest degree first
    lead = coef[:, 0]
    if d == 1:
        roots = (-coef[:, 1] / lead)[:, None]
    else:
        comp = np.zeros((z.size, d, d), dtype=complex)
        comp[:, 0, :] = -coef[:, 1:] / lead[:, None]
        comp[:, np.arange(1, d), np.arange(d - 1)] = 1.0
        roots = np.linalg.eigvals(comp)
    dcoef = coef[:, :-1] * np.arange(d, 0, -1)[None, :]
    for _ in range(polish):
        f = _horner(coef, roots)
        df = _horner(dcoef, roots)
        step = np.where(np.abs(df) > 0, f / np.where(df == 0, 1.0, df), 0.0)
        roots = roots - step
    res = np.abs(s(roots) - z[:, None])
    bad = res > 1e-8
    if np.any(bad):
        raise NumericError("Blaschke preimage solve did not converge",
                           residuals=res[bad].tolist()[:10])
    return roots


def _horner(coef, x):
    out = np.zeros_like(x)
    for k in range(coef.shape[1]):
        out = out * x + coef[:, k][:, None]
    return out


def nevanlinna_oracle(s: Symbol, z: complex, grid: int = 16, r_max: float = 1.0 - 1e-13,
                      min_cell: float = 1e-9, resolve: float = 1e-4) -> float:
    """Counting function by the argument principle on polar cells.

    The closed disk ``|zeta| <= r_max`` is divided into ``grid x grid`` polar
    cells; the winding number of ``phi - z`` around each cell boundary counts
    the preimages inside.  Cells with nonzero winding are quartered until they
    are smaller than ``resolve``; Newton's method from the cell centre then
    locates the preimage.  Cells whose winding exceeds 1 keep splitting down to
    ``min_cell`` and are then taken as a root of that multiplicity.
    """
    if not s.is_map:
        raise NotAMapError("the oracle needs a map")
    z = complex(z)
    if abs(z - s.phi0()) < 1e-6:
        raise PoleError("z too close to phi(0)")
    err = None
    # a preimage on a cell edge spoils the winding count; retry on a shifted grid
    for shift in (0.3719, 0.6113, 0.1427):
        try:
            return _oracle_run(s, z, grid, r_max, min_cell, resolve, shift)
        except OracleInconclusive as exc:
            err = exc
    raise err


def _oracle_run(s, z, grid, r_max, min_cell, resolve, shift):
    redges = np.concatenate([[0.0], r_max * (np.arange(grid - 1) + shift) / (grid - 1), [r_max]])
    off = 0.1234567 + shift
    tedges = off + TWO_PI * np.arange(grid + 1) / grid
    cells = [(redges[i], redges[i + 1], tedges[j], tedges[j + 1])
             for i in range(grid) for j in range(grid)]
    roots: list[tuple[complex, int]] = []
    total_winding = _winding(s, z, [(0.0, r_max, off, off + TWO_PI)])[0]
    while cells:
        wind = _winding(s, z, cells)
        nxt = []
        for cell, w in zip(cells, wind):
            if w == 0:
                continue
            if w < 0:
                raise OracleInconclusive(f"negative winding {w} in cell {cell}")
            r0, r1, t0, t1 = cell
            size = max(r1 - r0, r1 * (t1 - t0))
            if size < resolve:
                zeta = _newton(s, z, 0.5 * (r0 + r1) * np.exp(0.5j * (t0 + t1)))
                if w == 1 and zeta is not None and _in_cell(zeta, cell, slack=size):
                    roots.append((zeta, 1))
                    continue
                if size < min_cell:
                    if zeta is None:
                        raise OracleInconclusive(f"unresolved cell {cell}")
                    roots.append((zeta, w))
                    continue
            rm, tm = 0.5 * (r0 + r1), 0.5 * (t0 + t1)
            nxt += [(r0, rm, t0, tm), (r0, rm, tm, t1), (rm, r1, t0, tm), (rm, r1, tm, t1)]
        cells = nxt
    found = sum(m for _, m in roots)
    if found != total_winding:
        raise OracleInconclusive(f"located {found} preimages, outer winding {total_winding}")
    return float(math.fsum(-m * math.log(abs(zeta)) for zeta, m in roots))


def _in_cell(zeta, cell, slack):
    r0, r1, t0, t1 = cell
    r = abs(zeta)
    t = (math.atan2(zeta.imag, zeta.real) - t0) % TWO_PI
    return r0 - slack <= r <= r1 + slack and t <= (t1 - t0) + slack / max(r, 1e-300)


def _newton(s: Symbol, z: complex, zeta: complex, iters: int = 60):
    for _ in range(iters):
        f, df = s.value_and_derivative(zeta)
        f, df = complex(f) - z, complex(df)
        if df == 0 or not np.isfinite(df):
            return None
        step = f / df
        zeta = zeta - step
        if abs(zeta) >= 1:
            return None
        if abs(step) < 1e-15:
            break
    f = complex(s(zeta)) - z
    return zeta if abs(f) < 1e-12 else None


def _winding(s: Symbol, z: complex, cells, m0: int = 16, m_max: int = 1 << 14):
    """Winding number of ``phi - z`` around each polar cell boundary."""
    out = np.zeros(len(cells), dtype=int)
    todo = np.arange(len(cells))
    m = m0
    arr = np.array(cells, dtype=float).reshape(-1, 4)
    while todo.size:
        r0, r1, t0, t1 = (arr[todo, k][:, None] for k in range(4))
        u = np.arange(m)[None, :] / m
        pts = np.concatenate([
            r0 * np.exp(1j * (t0 + (t1 - t0) * u)),  # inner arc, t increasing
            (r0 + (r1 - r0) * u) * np.exp(1j * t1),  # right edge outward
            r1 * np.exp(1j * (t1 - (t1 - t0) * u)),  # outer arc, t decreasing
            (r1 - (r1 - r0) * u) * np.exp(1j * t0),  # left edge inward
        ], axis=1)
        # the cell boundary with this parametrisation is traversed clockwise
        g = s(pts) - z
        if np.any(g == 0):
            raise OracleInconclusive("a preimage lies on a cell boundary")
        inc = np.angle(np.roll(g, -1, axis=1) / g)
        ok = np.max(np.abs(inc), axis=1) < math.pi / 3
        w = -np.rint(np.sum(inc, axis=1) / TWO_PI).astype(int)
        out[todo[ok]] = w[ok]
        todo = todo[~ok]
        m *= 2
        if m > m_max and todo.size:
            raise OracleInconclusive("winding number unresolved at the sample cap")
    return out


# ----------------------------------------------------------------------
# pullback measures
@dataclass(frozen=True, eq=False)
class EmpiricalMeasure:
    """Finite positive measure: point masses or masses per bin id.

    Bin id ``-1`` collects mass outside every emitted box (the inner hole
    ``|w| <= 1/2`` and residual squares).
    """

    atoms: tuple = ()
    binned: dict = field(default_factory=dict)
    bins_signature: str = ""
    total_mass: float = 0.0

    def __post_init__(self):
        masses = [m for _, m in self.atoms] + list(self.binned.values())
        if any(m < 0 for m in masses):
            raise ParameterError("masses must be nonnegative")
        if not self.total_mass:
            object.__setattr__(self, "total_mass", math.fsum(masses))

    @classmethod
    def point_masses(cls, points, masses):
        return cls(atoms=tuple((complex(p), float(m)) for p, m in zip(points, masses)))

    def mass(self, key) -> float:
        return float(self.binned.get(key, 0.0))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["bin_id", "mass"])
        for k in sorted(self.binned):
            w.writerow([k, repr(self.binned[k])])
        return buf.getvalue()


def bins_signature(bins) -> str:
    """Digest identifying a family of bins (boxes of a decomposition)."""
    t0, arc, lo, hi = bins.arrays()
    h = hashlib.sha1()
    for a in (t0, arc, lo, hi):
        h.update(np.ascontiguousarray(a).tobytes())
    return h.hexdigest()


def pullback_measure(s: Symbol, nodes: int = 4096, bins=None, adaptive: bool = False,
                     eta: float = 0.25, min_width: float = 1e-15,
                     max_intervals: int = 4_000_000) -> EmpiricalMeasure:
    """Bin ``phi(e^{it})`` with arclength weights.

    Uniform mode uses ``nodes`` midpoints ``t_k`` with weight ``2 pi/nodes``.
    Adaptive mode starts from the same intervals and halves an interval while
    its image is longer than ``eta`` times the diameter of the box containing
    the image of its midpoint; each final interval puts its length on that box.
    Lengths are dyadic fractions of ``2 pi/nodes``, so the total is exactly 2 pi
    whenever ``nodes`` is a power of two.
    """
    if not s.is_map:
        raise NotAMapError("pullback measure needs a map with a boundary trace")
    if nodes < 64:
        raise ParameterError("nodes must be at least 64")
    if bins is None:
        raise ParameterError("bins are required")
    h0 = TWO_PI / nodes
    lo = h0 * np.arange(nodes)
    width = np.full(nodes, h0)
    diam = _box_diams(bins)
    if adaptive:
        final_lo, final_w = [], []
        while lo.size:
            mid = lo + 0.5 * width
            wmid = _clamp(s.boundary(mid))
            ids, _ = bins.locate(wmid)
            scale = np.where(ids >= 0, diam[np.maximum(ids, 0)], 0.5)
            span = np.abs(s.boundary(lo + width) - s.boundary(lo))
            split = (span > eta * scale) & (width > min_width)
            final_lo.append(lo[~split])
            final_w.append(width[~split])
            lo = np.concatenate([lo[split], lo[split] + 0.5 * width[split]])
            width = np.concatenate([0.5 * width[split], 0.5 * width[split]])
            if sum(a.size for a in final_lo) + lo.size > max_intervals:
                raise NumericError("adaptive pullback exceeded the interval cap")
        lo = np.concatenate(final_lo)
        width = np.concatenate(final_w)
    mid = lo + 0.5 * width
    pts = _clamp(s.boundary(mid))
    ids, _ = bins.locate(pts)
    order = np.argsort(ids, kind="stable")
    ids, width = ids[order], width[order]
    keys, start = np.unique(ids, return_index=True)
    binned = {}
    for k, a, b in zip(keys, start, list(start[1:]) + [ids.size]):
        binned[int(k)] = math.fsum(width[a:b])
    total = math.fsum(binned.values())
    return EmpiricalMeasure(binned=binned, bins_signature=bins_signature(bins),
                            total_mass=total)


def _box_diams(bins):
    from .whitney import box_diameter

    t0, arc, lo, hi = bins.arrays()
    return box_diameter(arc, lo, hi)


def _clamp(w):
    r = np.abs(w)
    over = r > 1.0
    if np.any(r > 1.0 + 1e-12):
        warnings.warn("boundary image outside the closed disk; clamped", RuntimeWarning,
                      stacklevel=3)
    return np.where(over, w / np.where(over, r, 1.0), w)
