"""Finite-rank ground truth: orthonormal bases, Gram matrices and singular values."""

from __future__ import annotations

import csv
import io
import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import NotAMapError, NumericError, ParameterError
from .inner import InnerFunction, kernel_diag
from .quadrature import TWO_PI, circle_mean, graded_breaks, panel_rule, trapezoid_circle
from .symbols import Symbol

GRAM_TOL = 1e-10
MAX_NODES = 1 << 20


# ----------------------------------------------------------------------
# Takenaka-Malmquist basis
def tm_basis_all(zeros, z):
    """All basis functions ``e_1..e_N`` at ``z``; shape ``(N,) + z.shape``.

    ``e_j(z) = sqrt(1 - |a_j|^2)/(1 - conj(a_j) z) * prod_{k<j} b_k(z)`` with
    ``b_k(z) = -conj(a_k)/|a_k| (z - a_k)/(1 - conj(a_k) z)`` and ``b_k(z) = z``
    for ``a_k = 0``.
    """
    a = np.asarray(zeros, dtype=complex).ravel()
    z = np.asarray(z, dtype=complex)
    out = np.empty((a.size,) + z.shape, dtype=complex)
    prod = np.ones(z.shape, dtype=complex)
    for j, aj in enumerate(a):
        den = 1.0 - np.conj(aj) * z
        out[j] = math.sqrt(1.0 - abs(aj) ** 2) / den * prod
        if aj == 0:
            prod = prod * z
        else:
            prod = prod * -np.exp(-1j * np.angle(aj)) * (z - aj) / den
    return out


def tm_basis(zeros, j: int, z):
    """``e_j(z)`` for ``1 <= j <= len(zeros)``."""
    zeros = list(zeros)
    if not 1 <= j <= len(zeros):
        raise ParameterError(f"basis index {j} outside 1..{len(zeros)}")
    return tm_basis_all(zeros[:j], z)[j - 1]


# ----------------------------------------------------------------------
# Hermitian eigenvalues
def jacobi_eigh(a, tol: float = 1e-15, max_sweeps: int = 100):
    """Eigenvalues and eigenvectors of a Hermitian matrix by cyclic Jacobi rotations.

    Returns ``(w, v)`` with ``a @ v = v * w`` and ``w`` ascending.
    """
    a = np.array(a, dtype=complex)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ParameterError("matrix must be square")
    if not np.allclose(a, a.conj().T, atol=1e-12 * max(1.0, np.max(np.abs(a), initial=0.0))):
        raise ParameterError("matrix is not Hermitian")
    a = 0.5 * (a + a.conj().T)
    v = np.eye(n, dtype=complex)
    scale = max(np.linalg.norm(a), 1e-300)
    mask = ~np.eye(n, dtype=bool)
    for _ in range(max_sweeps):
        off = float(np.linalg.norm(a[mask]))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-300:
                    continue
                # unitary rotation zeroing a[p, q]
                phase = apq / abs(apq)
                app, aqq = a[p, p].real, a[q, q].real
                tau = (aqq - app) / (2.0 * abs(apq))
                t = math.copysign(1.0, tau) / (abs(tau) + math.sqrt(1.0 + tau * tau)) if tau else 1.0
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                g = np.eye(2, dtype=complex)
                g[0, 0], g[0, 1] = c, s * phase
                g[1, 0], g[1, 1] = -s * np.conj(phase), c
                idx = [p, q]
                a[:, idx] = a[:, idx] @ g
                a[idx, :] = g.conj().T @ a[idx, :]
                v[:, idx] = v[:, idx] @ g
    else:
        raise NumericError("Jacobi iteration did not converge")
    w = np.real(np.diag(a))
    order = np.argsort(w)
    return w[order], v[:, order]


# ----------------------------------------------------------------------
@dataclass(frozen=True)
class SingularSpectrum:
    """Nonincreasing singular values of a finite-rank operator."""

    values: tuple
    source: str = ""
    quadrature_tol: float = 0.0

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if np.any(vals < 0):
            raise ParameterError("singular values must be nonnegative")
        object.__setattr__(self, "values", tuple(sorted(vals.tolist(), reverse=True)))

    def __len__(self) -> int:
        return len(self.values)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["j", "s_j"])
        for j, s in enumerate(self.values, start=1):
            w.writerow([j, repr(s)])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps({"source": self.source, "quadrature_tol": self.quadrature_tol,
                           "values": list(self.values)}, sort_keys=True)


def _spectrum_from_gram(g, source, tol) -> SingularSpectrum:
    w, _ = jacobi_eigh(g)
    if w.size and w[0] < -1e-10 * max(1.0, w[-1]):
        raise NumericError("Gram matrix is not positive semidefinite", residuals=[float(w[0])])
    return SingularSpectrum(tuple(np.sqrt(np.clip(w, 0.0, None))), source, tol)


def schatten_norm(sv: SingularSpectrum, p: float) -> float:
    """``(sum s_j^p)^{1/p}``."""
    if not p > 0:
        raise ParameterError("p must be positive")
    s = np.asarray(sv.values, dtype=float)
    if s.size == 0:
        return 0.0
    m = s.max()
    if m == 0:
        return 0.0
    return float(m * np.sum((s / m) ** p) ** (1.0 / p))


# ----------------------------------------------------------------------
# composition operators on finite model spaces
def compop_gram(f: InnerFunction, s: Symbol, nodes: int | None = None,
                tol: float = GRAM_TOL) -> SingularSpectrum:
    """Singular values of ``C_phi: K_theta -> H^2`` for finite Blaschke ``theta``.

    With ``nodes`` a fixed trapezoid rule is used; otherwise nodes double until
    the Gram matrix changes by less than ``tol`` (relative, max entry).
    """
    if not f.is_finite_blaschke:
        raise ParameterError("compop_gram needs a finite Blaschke product")
    if not s.is_map:
        raise NotAMapError("compop_gram needs a map")
    zeros = f.zeros

    def gram(t):
        e = tm_basis_all(zeros, s.boundary(t))  # (N, n)
        return np.einsum("jn,kn->njk", e, np.conj(e))

    if nodes is not None:
        t = TWO_PI * np.arange(nodes) / nodes
        g = np.mean(gram(t), axis=0)
    elif s.variant == "sector_map":
        g = _graded_gram(gram, tol)
    else:
        g, _, _ = trapezoid_circle(gram, tol=tol, n0=64, nmax=MAX_NODES)
    return _spectrum_from_gram(g, f"C_phi: K_theta -> H2 ({s.variant}, N={len(zeros)})", tol)


def _graded_gram(gram, tol, n0: int = 8, nmax: int = 128):
    """Gauss panels graded toward ``t = 0, pi`` where the sector trace has kinks."""
    brk = graded_breaks(0.0, TWO_PI, focus=[math.pi], hmin=1e-13, grade_ends=True)
    prev = None
    n = n0
    while n <= nmax:
        x, w = panel_rule(brk, n)
        cur = np.einsum("n,njk->jk", w, gram(x)) / TWO_PI
        if prev is not None and np.max(np.abs(cur - prev)) <= tol * np.max(np.abs(cur)):
            return cur
        prev = cur
        n *= 2
    raise NumericError(f"graded Gram quadrature did not reach tol={tol}",
                       residuals=[float(np.max(np.abs(cur - prev)))])


def hs_pullback(f: InnerFunction, s: Symbol, tol: float = GRAM_TOL, focus=None,
                near: float = 1e-4) -> float:
    """``(1/2pi) int k(phi(e^{it}), phi(e^{it})) dt``, the HS norm squared of ``C_phi``.

    ``focus`` lists parameters ``t`` where the integrand peaks; with it the
    adaptive integrator is used instead of the trapezoid rule.  By default
    the parameters closest to zeros within ``near`` of the circle are used.
    """
    if not s.is_map:
        raise NotAMapError("hs_pullback needs a map")

    def g(t):
        return kernel_diag(f, s.boundary(np.atleast_1d(np.asarray(t, dtype=float))))

    if focus is None:
        close = f.deltas < near
        focus = [closest_parameter(s, u) for u in f.directions[close]]
        if s.variant == "sector_map":
            focus += [0.0, math.pi]  # the boundary trace has power-type kinks at +-1
    if focus:
        return circle_mean(g, focus=focus, tol=tol)
    val, _, _ = trapezoid_circle(g, tol=tol, n0=64, nmax=MAX_NODES)
    return float(val)


def closest_parameter(s: Symbol, target: complex, samples: int = 4096) -> float:
    """Boundary parameter ``t`` minimising ``|phi(e^{it}) - target|`` (grid plus golden refinement)."""
    from scipy import optimize

    t = TWO_PI * np.arange(samples) / samples
    k = int(np.argmin(np.abs(s.boundary(t) - target)))
    h = TWO_PI / samples
    res = optimize.minimize_scalar(lambda x: abs(complex(s.boundary(np.array([x]))[0]) - target),
                                   bracket=(t[k] - h, t[k], t[k] + h), tol=1e-14)
    return float(res.x) % TWO_PI


def kernel_term(a: complex, s: Symbol, tol: float = 1e-10, delta: float | None = None) -> float:
    """``(1 - |a|) (1/2pi) int |k_a(phi(e^{it}))|^2 dt`` with the Szego kernel ``k_a``.

    The integrand peaks where the image curve comes closest to ``1/conj(a)``;
    adaptive quadrature is focused there.  ``delta`` supplies ``1 - |a|``
    exactly for points very close to the circle.
    """
    if not s.is_map:
        raise NotAMapError("kernel_term needs a map")
    a = complex(a)
    if not abs(a) < 1:
        raise ParameterError("kernel point must lie in the disk")
    focus = [closest_parameter(s, a / abs(a))] if abs(a) > 0 else []

    def g(t):
        w = s.boundary(np.atleast_1d(np.asarray(t, dtype=float)))
        return 1.0 / np.abs(1.0 - np.conj(a) * w) ** 2

    d = 1.0 - abs(a) if delta is None else float(delta)
    return d * circle_mean(g, focus=focus, tol=tol)


# ----------------------------------------------------------------------
# point-mass embeddings
@dataclass(frozen=True)
class PointMassMeasure:
    """Finitely many atoms ``(w_i, c_i)`` with distinct points and ``c_i > 0``."""

    atoms: tuple

    def __post_init__(self):
        pts = [complex(w) for w, _ in self.atoms]
        if any(not c > 0 for _, c in self.atoms):
            raise ParameterError("atom masses must be positive")
        if len(set(pts)) != len(pts):
            raise ParameterError("atoms must be distinct")
        object.__setattr__(self, "atoms", tuple((complex(w), float(c)) for w, c in self.atoms))

    @property
    def points(self) -> np.ndarray:
        return np.array([w for w, _ in self.atoms], dtype=complex)

    @property
    def masses(self) -> np.ndarray:
        return np.array([c for _, c in self.atoms], dtype=float)

    def add(self, w: complex, c: float) -> "PointMassMeasure":
        return PointMassMeasure(self.atoms + ((w, c),))


@dataclass(frozen=True)
class KTheta:
    """Model space ``K_theta`` with kernel ``(1 - conj(theta(w)) theta(z))/(1 - conj(w) z)``."""

    f: InnerFunction
    name: str = field(default="K_theta", init=False)

    def kernel_matrix(self, w):
        w = np.asarray(w, dtype=complex)
        if np.any(np.abs(w) >= 1):
            raise ParameterError("K_theta atoms must lie in the open disk")
        th = self.f(w)
        den = 1.0 - np.conj(w)[:, None] * w[None, :]
        k = (1.0 - np.conj(th)[:, None] * th[None, :]) / den
        d = kernel_diag(self.f, w)
        k[np.diag_indices(w.size)] = d
        return k


@dataclass(frozen=True)
class H2:
    """Hardy space with the Szego kernel ``1/(1 - conj(w) z)``."""

    name: str = field(default="H2", init=False)

    def kernel_matrix(self, w):
        w = np.asarray(w, dtype=complex)
        if np.any(np.abs(w) >= 1):
            raise ParameterError("H2 atoms must lie in the open disk")
        return 1.0 / (1.0 - np.conj(w)[:, None] * w[None, :])


@dataclass(frozen=True)
class E2Disk:
    """Hardy space of the disk ``|z - center| < radius``.

    Normalised by ``||f||^2 = sum |a_n|^2 R^{2n}``, so the kernel is
    ``1/(1 - (z - c) conj(w - c)/R^2)``.
    """

    center: complex
    radius: float
    name: str = field(default="E2disk", init=False)

    def kernel_matrix(self, w):
        x = (np.asarray(w, dtype=complex) - self.center) / self.radius
        if np.any(np.abs(x) >= 1):
            raise ParameterError("E2 atoms must lie in the disk")
        return 1.0 / (1.0 - np.conj(x)[:, None] * x[None, :])


def embed_gram(space, m: PointMassMeasure) -> SingularSpectrum:
    """Singular values of the embedding ``I_mu`` of ``space`` into ``L^2(mu)``."""
    if not m.atoms:
        return SingularSpectrum((), f"I_mu: {space.name}", 0.0)
    c = np.sqrt(m.masses)
    g = c[:, None] * space.kernel_matrix(m.points) * c[None, :]
    sv = _spectrum_from_gram(g, f"I_mu: {space.name} ({len(m.atoms)} atoms)", 0.0)
    vals = np.asarray(sv.values)
    if vals.size > 1 and vals[-1] ** 2 <= 1e-12 * vals[0] ** 2:
        warnings.warn("Gram matrix is numerically rank deficient", RuntimeWarning, stacklevel=2)
    return sv


# ----------------------------------------------------------------------
def kernel_series_sup(deltas, directions, a: float, z) -> float:
    """``sup_z sum_n ((1 - |z_n|)/|1 - conj(z_n) z|)^a`` over the sample points ``z``.

    Zeros are given as ``z_n = (1 - delta_n) directions_n`` so that points
    closer to the circle than machine precision keep their exact distance.
    """
    d = np.asarray(deltas, dtype=float).ravel()
    u = np.asarray(directions, dtype=complex).ravel()
    z = np.asarray(z, dtype=complex).ravel()
    tot = np.zeros(z.size)
    for k in range(d.size):
        w = np.conj(u[k]) * z
        den = np.abs((1.0 - w) + d[k] * w)
        tot += (d[k] / den) ** a
    return float(np.max(tot))
