"""Scalar Schatten-class criteria evaluated shell by shell.

All area integrals use the normalised area measure ``dA = dx dy / pi`` and
are split into dyadic shells ``1 - 2^-k <= |z| < 1 - 2^-(k+1)``.  Each shell
is integrated by a tensor rule: composite Gauss-Legendre panels in the radius
and, for every radial node, graded Gauss panels over the angular intervals
where the counting function is positive.  The number of nodes per panel is
doubled until the shell value settles.

Convergence or divergence of the full integral is read off the sequence of
shell increments by :func:`shell_verdict`.
"""

from __future__ import annotations

import csv
import io
import json
import math
import statistics
from dataclasses import dataclass, field

import numpy as np

from .errors import BinningMismatch, NotAMapError, NumericError, ParameterError, UnsupportedDomain
from .inner import InnerFunction, kernel_diag, kernel_laplacian_diag, spectrum
from .level import LevelDomain
from .quadrature import TWO_PI, graded_breaks, panel_rule
from .symbols import TAU_CAP, EmpiricalMeasure, Symbol, bins_signature, nevanlinna
from .whitney import WhitneyDecomposition

RATIO_THRESHOLD = 0.9
WINDOW = 5


# ----------------------------------------------------------------------
# shell reports
def shell_verdict(increments, ok=None, window: int = WINDOW, ratio: float = RATIO_THRESHOLD,
                  block: int = 1):
    """Classify a sequence of nonnegative increments.

    ``converging`` if the last ``window`` successive ratios are below
    ``ratio``; ``diverging`` if the last ``window`` increments are all at least
    the median of the first half; ``inconclusive`` otherwise or when one of
    the last ``window`` shells failed its quadrature check.

    With ``block > 1`` the rule is applied to sums of ``block`` consecutive
    increments, aligned so that the last block ends at the last shell.  This
    removes period-``block`` oscillations, e.g. from zeros that occupy every
    other dyadic shell.

    Returns
    -------
    verdict : str
    stats : dict
        The ratios and the median used.
    """
    inc = np.asarray(increments, dtype=float)
    okv = None if ok is None else np.asarray(ok, dtype=bool)
    if block < 1:
        raise ParameterError("block must be a positive integer")
    if block > 1:
        m = inc.size // block
        start = inc.size - m * block
        inc = inc[start:].reshape(m, block).sum(axis=1)
        if okv is not None:
            okv = okv[start:].reshape(m, block).all(axis=1)
    stats: dict = {"ratios": [], "median_first_half": math.nan, "block": block}
    if inc.size < window + 1:
        return "inconclusive", stats
    tail = inc[-(window + 1):]
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        rat = np.where(tail[:-1] > 0, tail[1:] / tail[:-1], np.where(tail[1:] > 0, np.inf, 0.0))
    med = float(statistics.median(inc[: max(inc.size // 2, 1)]))
    stats = {"ratios": rat.tolist(), "median_first_half": med, "block": block}
    if okv is not None and not np.all(okv[-window:]):
        return "inconclusive", stats
    if np.all(rat < ratio):
        return "converging", stats
    if med > 0 and np.all(inc[-window:] >= med):
        return "diverging", stats
    return "inconclusive", stats


@dataclass(frozen=True, eq=False)
class ShellReport:
    """Increments of an integral (or sum) over consecutive regions."""

    inner_radius: np.ndarray
    outer_radius: np.ndarray
    increments: np.ndarray
    ok: np.ndarray
    label: str = ""
    params: dict = field(default_factory=dict)
    verdict: str = ""
    statistic: dict = field(default_factory=dict)
    block: int = 1

    def __post_init__(self):
        inc = np.asarray(self.increments, dtype=float)
        if np.any(inc < 0):
            raise NumericError("negative shell increment", residuals=inc[inc < 0].tolist())
        object.__setattr__(self, "increments", inc)
        object.__setattr__(self, "inner_radius", np.asarray(self.inner_radius, dtype=float))
        object.__setattr__(self, "outer_radius", np.asarray(self.outer_radius, dtype=float))
        object.__setattr__(self, "ok", np.asarray(self.ok, dtype=bool))
        if not self.verdict:
            v, st = shell_verdict(inc, self.ok, block=self.block)
            object.__setattr__(self, "verdict", v)
            object.__setattr__(self, "statistic", st)

    def reblocked(self, block: int) -> "ShellReport":
        """Same shells with the verdict recomputed on blocks of ``block`` shells."""
        return ShellReport(self.inner_radius, self.outer_radius, self.increments, self.ok,
                           self.label, dict(self.params), block=block)

    @property
    def cumulative(self) -> np.ndarray:
        return np.cumsum(self.increments)

    @property
    def total(self) -> float:
        return float(math.fsum(self.increments))

    @property
    def value_or_inf(self) -> float:
        return math.inf if self.verdict == "diverging" else self.total

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["shell_index", "inner_radius", "outer_radius", "increment", "cumulative",
                    "verdict_flag"])
        cum = self.cumulative
        for i in range(self.increments.size):
            w.writerow([i, repr(float(self.inner_radius[i])), repr(float(self.outer_radius[i])),
                        repr(float(self.increments[i])), repr(float(cum[i])),
                        "ok" if self.ok[i] else "unconverged"])
        return buf.getvalue()

    def summary(self, experiment: str = "") -> dict:
        v = self.value_or_inf
        return {"experiment": experiment or self.label, "params": self.params,
                "verdict": self.verdict, "value_or_inf": "inf" if math.isinf(v) else v}

    def to_json(self, experiment: str = "") -> str:
        return json.dumps(self.summary(experiment), sort_keys=True)


def shell_radii(k: int) -> tuple[float, float]:
    return (0.0 if k == 0 else 1.0 - 2.0**-k), 1.0 - 2.0 ** -(k + 1)


# ----------------------------------------------------------------------
# shell quadrature engine
def _angular_rule(intervals, focus, hmin, n, point=None):
    """Graded Gauss rule on angular intervals.

    ``point = (t, h)`` adds a second grading toward angle ``t`` down to width
    ``h``, used when the radius passes close to a point singularity.
    """
    nodes, weights = [], []
    for lo, hi in intervals:
        pts = [f for f in focus if lo < f < hi]
        br = graded_breaks(lo, hi, focus=pts, hmin=hmin, ratio=2.0, grade_ends=True)
        if point is not None and lo < point[0] < hi and point[1] < hmin:
            t, h = point
            a, b = max(lo, t - 4 * hmin), min(hi, t + 4 * hmin)
            br = np.union1d(br, graded_breaks(a, b, focus=[t], hmin=h, ratio=2.0))
        x, w = panel_rule(br, n)
        nodes.append(x)
        weights.append(w)
    if not nodes:
        return np.empty(0), np.empty(0)
    return np.concatenate(nodes), np.concatenate(weights)


def _unwrap_focus(angles):
    out = []
    for a in angles:
        a = (float(a) + math.pi) % TWO_PI - math.pi
        out.append(a)
        if abs(abs(a) - math.pi) < 1e-12:
            out += [math.pi, -math.pi]
    return sorted(set(out))


def shell_integral(integrand, support, r0: float, r1: float, n: int, focus=(),
                   radial_focus=(), points=()):
    """Tensor Gauss rule for ``int_{r0}^{r1} int integrand(r e^{it}) r dt dr / pi``.

    ``radial_focus`` are radii where the angular integral is not smooth;
    ``points`` are ``(r, t)`` point singularities (logarithmic poles of N).
    """
    rf = sorted({c for c in list(radial_focus) + [p[0] for p in points] if r0 < c < r1})
    if rf:
        rbr = graded_breaks(r0, r1, focus=rf, hmin=1e-10, ratio=2.0)
    else:
        rbr = np.linspace(r0, r1, 3)
    rs, wr = panel_rule(rbr, n)
    zs, ws = [], []
    for r, w in zip(rs, wr):
        iv = support(r)
        if not iv:
            continue
        h = max(1e-3 * (1.0 - r), 1e-14)
        near = None
        for rc, tc in points:
            if abs(r - rc) < h:
                near = (tc, max(abs(r - rc), 1e-14))
        t, wt = _angular_rule(iv, focus, h, n, near)
        zs.append(r * np.exp(1j * t))
        ws.append(wt * (w * r / math.pi))
    if not zs:
        return 0.0
    z = np.concatenate(zs)
    wts = np.concatenate(ws)
    vals = np.asarray(integrand(z), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise NumericError("non-finite integrand values in a shell")
    return float(np.dot(wts, vals))


def integrate_shells(integrand, support, shells: int, focus=(), radial_focus=(),
                     tol: float = 1e-6, n0: int = 8, nmax: int = 64, label: str = "",
                     params=None, points=()) -> ShellReport:
    """Shell increments with per-shell refinement by doubling the Gauss order.

    A shell is accepted when doubling changes it by at most ``tol`` times the
    larger of the shell value and the running total of the earlier shells.
    """
    if shells < 1:
        raise ParameterError("need at least one shell")
    focus = _unwrap_focus(focus)
    inner, outer, inc, ok = [], [], [], []
    running = 0.0
    for k in range(shells):
        r0, r1 = shell_radii(k)
        n = n0
        prev = shell_integral(integrand, support, r0, r1, n, focus, radial_focus, points)
        good = False
        while n < nmax:
            n *= 2
            cur = shell_integral(integrand, support, r0, r1, n, focus, radial_focus, points)
            change = abs(cur - prev)
            prev = cur
            if change <= tol * max(abs(cur), running) or cur == 0.0:
                good = True
                break
        inner.append(r0)
        outer.append(r1)
        inc.append(max(prev, 0.0))
        ok.append(good)
        running += inc[-1]
    return ShellReport(np.array(inner), np.array(outer), np.array(inc), np.array(ok),
                       label=label, params=dict(params or {}))


def _focus_for(f: InnerFunction | None, s: Symbol):
    focus = []
    radial = []
    if f is not None:
        focus += [math.atan2(p.imag, p.real) for p in spectrum(f)]
        near = f.deltas < 0.05
        focus += np.angle(f.directions[near]).tolist()
    if s.variant in ("sector_map", "corner_model"):
        focus += [0.0, math.pi]
    if s.variant == "corner_model":
        focus += [0.5 * math.pi, -0.5 * math.pi]
        radial.append(TAU_CAP)
    if s.variant == "sector_map":
        g = s._gamma_circle()
        if g is not None:
            # radius at which |z| = r touches the inner boundary arc
            radial.append(abs(abs(g[0]) - g[1]))
    points = []
    if s.is_map:
        c = s.phi0()
        if abs(c) > 0:
            focus.append(math.atan2(c.imag, c.real))
            points.append((abs(c), math.atan2(c.imag, c.real)))
    if s.variant == "affine_disk" and abs(s.center) + s.radius >= 1.0 - 1e-12 and abs(s.center) > 0:
        focus.append(math.atan2(s.center.imag, s.center.real))
    return focus, radial, points


def _support(s: Symbol):
    return s.support_intervals


def _safe_u(f: InnerFunction | None, z):
    if f is None:
        return 1.0 / (1.0 - np.abs(z) ** 2)
    return kernel_diag(f, z)


# ----------------------------------------------------------------------
# criteria
def compactness_ratio(f: InnerFunction | None, s: Symbol, radii, n_angles: int = 4096,
                      n_local: int = 512):
    """``[(r, sup_{|z|=r} N(z) (1 - |theta|^2)/(1 - |z|^2))]``; ``f=None`` is the Hardy case."""
    out = []
    for r in radii:
        r = float(r)
        if not 0 < r < 1:
            raise ParameterError("radii must lie in (0, 1)")
        t = [np.linspace(-math.pi, math.pi, n_angles, endpoint=False)]
        for lo, hi in s.support_intervals(r):
            g = np.geomspace(1e-12, 1.0, n_local)
            t += [lo + (hi - lo) * g, hi - (hi - lo) * g, np.linspace(lo, hi, n_local)]
        t = np.concatenate(t)
        z = r * np.exp(1j * t)
        if s.is_map:
            z = z[np.abs(z - s.phi0()) > 1e-12]
        vals = nevanlinna(s, z, check_pole=False) * _safe_u(f, z)
        out.append((r, float(np.max(vals))))
    return out


def luecking_sum(m: EmpiricalMeasure, dec: WhitneyDecomposition, p: float) -> ShellReport:
    """``sum_i (mu(G_i)/d(G_i))^{p/2}`` grouped by box depth.

    Point-mass measures are located in the boxes directly; binned measures
    must carry the signature of ``dec``.  When ``dec`` has a residual the
    deepest level is left out of the report.
    """
    if not p > 0:
        raise ParameterError("p must be positive")
    if m.atoms:
        ids, _ = dec.locate(np.array([a for a, _ in m.atoms]))
        masses: dict = {}
        for i, (_, w) in zip(ids, m.atoms):
            masses[int(i)] = masses.get(int(i), 0.0) + w
    elif m.binned:
        if m.bins_signature != bins_signature(dec):
            raise BinningMismatch("measure was binned on a different decomposition")
        masses = dict(m.binned)
    else:
        masses = {}
    depth_max = max([b.depth for b in dec.boxes] + [0])
    if dec.residual and depth_max > 0:
        # bad squares at the last depth are not split, so that depth is incomplete
        depth_max -= 1
    inc = [[] for _ in range(depth_max + 1)]
    for i, mass in masses.items():
        if i < 0 or mass <= 0:
            continue
        b = dec.boxes[i]
        if b.depth <= depth_max:
            inc[b.depth].append((mass / b.G.diam) ** (0.5 * p))
    incs = np.array([math.fsum(v) for v in inc])
    d = np.arange(depth_max + 1)
    return ShellReport(1.0 - 0.5 * 2.0**-d, np.ones(d.size), incs, np.ones(d.size, dtype=bool),
                       label="luecking", params={"p": p})


def integral_schatten_modelspace(f: InnerFunction, dom: LevelDomain | None, s: Symbol, p: float,
                                 shells: int = 20, form: str = "kernel", tol: float = 1e-6,
                                 n0: int = 8, nmax: int = 64) -> ShellReport:
    """Shell report of the model-space integral test.

    ``form="kernel"``: ``(N u)^{p/2} u^2`` with ``u = (1 - |theta|^2)/(1 - |z|^2)``.
    ``form="printed"``: ``(N (1 - |theta|)^2/(1 - |z|^2))^{p/2} u^2``.
    ``form="distance"``: ``(N/d)^{p/2} d^-2`` with ``d`` the distance to the
    traced boundary of the level domain ``dom``.
    """
    if not p > 0:
        raise ParameterError("p must be positive")
    if form not in ("kernel", "printed", "distance"):
        raise ParameterError(f"unknown form {form!r}")
    if form == "distance" and dom is None:
        raise ParameterError("the distance form needs a level domain")

    def integrand(z):
        N = nevanlinna(s, z, check_pole=False)
        out = np.zeros(z.shape)
        pos = N > 0
        if not np.any(pos):
            return out
        zp = z[pos]
        if form == "distance":
            d = dom.distance(zp)
            out[pos] = (N[pos] / d) ** (0.5 * p) / d**2
            return out
        u = kernel_diag(f, zp)
        if form == "kernel":
            out[pos] = (N[pos] * u) ** (0.5 * p) * u**2
        else:
            th = np.abs(f(zp))
            out[pos] = (N[pos] * (1.0 - th) ** 2 / (1.0 - np.abs(zp) ** 2)) ** (0.5 * p) * u**2
        return out

    focus, radial, points = _focus_for(f, s)
    return integrate_shells(integrand, _support(s), shells, focus, radial, tol, n0, nmax,
                            label="modelspace", params={"p": p, "form": form}, points=points)


def integral_schatten_hardy(s: Symbol, p: float, shells: int = 20, tol: float = 1e-6,
                            n0: int = 8, nmax: int = 64) -> ShellReport:
    """Shell report of ``int (N/(1 - |z|^2))^{p/2} dA/(1 - |z|^2)^2``."""
    if not p > 0:
        raise ParameterError("p must be positive")

    def integrand(z):
        N = nevanlinna(s, z, check_pole=False)
        w = 1.0 / (1.0 - np.abs(z) ** 2)
        return (N * w) ** (0.5 * p) * w**2

    focus, radial, points = _focus_for(None, s)
    return integrate_shells(integrand, _support(s), shells, focus, radial, tol, n0, nmax,
                            label="hardy", params={"p": p}, points=points)


def _weighted_report(f, s, weight, shells, tol, label, params, n0=8, nmax=64):
    def integrand(z):
        N = nevanlinna(s, z, check_pole=False)
        out = np.zeros(z.shape)
        pos = N > 0
        if np.any(pos):
            out[pos] = weight(z[pos], N[pos])
        return out

    focus, radial, points = _focus_for(f, s)
    return integrate_shells(integrand, _support(s), shells, focus, radial, tol, n0, nmax,
                            label=label, params=params, points=points)


def hs_upper(f: InnerFunction, s: Symbol, shells: int = 20, tol: float = 1e-6) -> ShellReport:
    """Sufficient HS test ``int (1 - |theta|^2)(1 - |z|^2)^-3 N dA`` by shells."""
    def weight(z, N):
        s2 = 1.0 - np.abs(z) ** 2
        return kernel_diag(f, z) / s2**2 * N

    return _weighted_report(f, s, weight, shells, tol, "hs-upper", {})


def hs_lower(f: InnerFunction, s: Symbol, shells: int = 20, tol: float = 1e-6) -> ShellReport:
    """Necessary HS test ``int ((1 - |theta|^2)/(1 - |z|^2))^3 N dA`` by shells."""
    return _weighted_report(f, s, lambda z, N: kernel_diag(f, z) ** 3 * N, shells, tol,
                            "hs-lower", {})


def hs_bounds(f: InnerFunction, s: Symbol, shells: int = 20, tol: float = 1e-6):
    """``(hs_upper, hs_lower)``: finite upper implies HS, HS implies finite lower."""
    return hs_upper(f, s, shells, tol), hs_lower(f, s, shells, tol)


def sufficient_sp(f: InnerFunction, s: Symbol, p: float, b: float = 0.25,
                  one_component: bool = False, shells: int = 20, tol: float = 1e-6) -> ShellReport:
    """Shell report of ``int (N/Phi)^{p/2} Delta k Phi dA``.

    ``Phi = (1 - |z|^2)/(1 - |theta|^2)^b``, or ``(1 - |z|^2)/(1 - |theta|^2)``
    with ``one_component``.
    """
    if p < 2:
        raise ParameterError("the sufficient condition needs p >= 2")
    if not one_component and not 0 < b < 0.5:
        raise ParameterError("b must lie in (0, 1/2)")

    def weight(z, N):
        if one_component:
            phi = 1.0 / kernel_diag(f, z)
        else:
            s2 = 1.0 - np.abs(z) ** 2
            phi = s2 / f.one_minus_modulus_sq(z) ** b
        dk = np.maximum(kernel_laplacian_diag(f, z), 0.0)
        return (N / phi) ** (0.5 * p) * dk * phi

    return _weighted_report(f, s, weight, shells, tol, "sufficient-sp",
                            {"p": p, "b": 1.0 if one_component else b})


# ----------------------------------------------------------------------
# Hilbert-Schmidt norm by the Stanton formula
def _polar_mean(g, center: complex, rho_max, tol: float = 1e-11, n_r: int = 16,
                n_t: int = 64, max_t: int = 1 << 14, max_r: int = 128, atol: float = 0.0):
    """``(1/pi) int_0^{2pi} int_0^{rho_max(b)} g(center + rho e^{ib}) rho drho db``.

    Radial composite Gauss graded toward ``rho = 0``; periodic trapezoid in ``b``.
    Refinement stops once both doublings change the value by at most
    ``max(tol |value|, atol)``.
    """
    def run(nr, nt):
        b = TWO_PI * np.arange(nt) / nt
        R = rho_max(b)
        x, w = panel_rule(_zero_graded(), nr)
        rho = x[None, :] * R[:, None]
        z = center + rho * np.exp(1j * b)[:, None]
        vals = g(z.ravel()).reshape(z.shape)
        inner = np.sum(vals * rho * (w[None, :] * R[:, None]), axis=1)
        return float(np.sum(inner) * (TWO_PI / nt) / math.pi)

    nr, nt = n_r, n_t
    prev = run(nr, nt)
    while True:
        cur_t = run(nr, 2 * nt)
        cur_r = run(2 * nr, nt)
        dt, dr = abs(cur_t - prev), abs(cur_r - prev)
        eps = max(tol * abs(prev), atol)
        if dt <= eps and dr <= eps:
            return run(2 * nr, 2 * nt)
        if dt > eps:
            nt *= 2
        if dr > eps:
            nr *= 2
        if nt > max_t or nr > max_r:
            raise NumericError("polar quadrature did not converge", residuals=[dt, dr])
        prev = run(nr, nt)


def _zero_graded():
    """Breakpoints on [0, 1] refined geometrically toward 0."""
    return np.concatenate([[0.0], np.geomspace(1e-10, 1.0, 24)])


def hs_stanton(f: InnerFunction, s: Symbol, shells: int = 24, tol: float = 1e-10):
    """``||C_phi||_HS^2 = k(phi(0), phi(0)) + (1/2) int Delta k(z,z) N_phi(z) dA``.

    Affine symbols are integrated in polar coordinates about the image
    centre, finite Blaschke symbols about ``phi(0)``; other symbols use the
    shell engine and return ``inf`` when the shells diverge.
    """
    if not s.is_map:
        raise NotAMapError("hs_stanton needs a map")
    k00 = float(kernel_diag(f, s.phi0()))
    if s.variant == "affine_disk":
        a, r = s.center, s.radius

        def g(z):
            rho = np.abs(z - a)
            with np.errstate(divide="ignore"):
                N = np.where(rho > 0, np.log(r / np.where(rho > 0, rho, 1.0)), 0.0)
            return kernel_laplacian_diag(f, z) * N

        integral = _polar_mean(g, a, lambda b: np.full(b.shape, r), tol=tol, atol=tol * k00)
    elif s.variant == "finite_blaschke":
        c = s.phi0()

        def rho_max(b):
            e = np.exp(1j * b)
            x = np.real(np.conj(c) * e)
            return -x + np.sqrt(x * x + 1.0 - abs(c) ** 2)

        def g(z):
            N = nevanlinna(s, z, check_pole=False)
            return kernel_laplacian_diag(f, z) * N

        integral = _polar_mean(g, c, rho_max, tol=tol, atol=tol * k00)
    else:
        rep = _weighted_report(f, s, lambda z, N: kernel_laplacian_diag(f, z) * N, shells,
                               1e-8, "stanton", {})
        if rep.verdict != "converging":
            return math.inf
        integral = rep.total
    return k00 + 0.5 * integral


# ----------------------------------------------------------------------
# Berezin-type tests for disk-shaped level domains
def disk_of(dom: LevelDomain, rel_tol: float = 1e-6):
    """``(center, radius)`` of a circular level domain or :class:`UnsupportedDomain`."""
    c, R, dev = dom.circle_fit()
    if dev > rel_tol * R + 10 * dom.tolerance:
        raise UnsupportedDomain(f"level curve deviates from a circle by {dev:.3g}")
    return c, R


def berezin_norm_sq(center: complex, radius: float, boundary_values, z, which: str = "G"):
    """``||C K_z||^2`` for the weighted composition operator of a disk domain.

    ``boundary_values`` are ``phi(e^{it})`` on a uniform grid; the weight is
    ``psi' = 1/radius`` for ``psi(w) = (w - center)/radius``.
    """
    v = (np.asarray(boundary_values, dtype=complex) - center) / radius
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    s = 1.0 - np.abs(z) ** 2
    den = 1.0 - np.conj(z)[:, None] * v[None, :]
    if which == "G":
        k2 = s[:, None] / np.abs(den) ** 2
    elif which == "H":
        k2 = s[:, None] ** 3 * np.abs(v[None, :]) ** 2 / np.abs(den) ** 4
    else:
        raise ParameterError("which must be 'G' or 'H'")
    return np.mean(k2, axis=1) / radius


def berezin_test(f: InnerFunction, dom: LevelDomain, s: Symbol, p: float, which: str = "G",
                 shells: int = 16, nodes: int = 256, tol: float = 1e-6) -> ShellReport:
    """Shell report of ``int ||C K_z||^p dA/(1 - |z|^2)^2`` with ``K_z`` in ``{G_z, H_z}``."""
    if p < 1:
        raise ParameterError("the Berezin test needs p >= 1")
    if not s.is_map:
        raise NotAMapError("berezin_test needs a map")
    c, R = disk_of(dom)
    t = TWO_PI * np.arange(nodes) / nodes
    bv = s.boundary(t)

    def integrand(z):
        val = berezin_norm_sq(c, R, bv, z, which)
        return val ** (0.5 * p) / (1.0 - np.abs(z) ** 2) ** 2

    return integrate_shells(integrand, lambda r: [(-math.pi, math.pi)], shells, (), (), tol,
                            label=f"berezin-{which}", params={"p": p, "which": which})
