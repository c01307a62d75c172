"""Inner functions built from Blaschke zeros and finitely many singular atoms.

An inner function is stored as

* a finite list of zeros ``a_n`` held in polar form ``(1 - |a_n|, a_n/|a_n|)``
  so that zeros extremely close to the circle keep their distance to it;
* a finite list of atoms ``(angle, weight)`` of the singular measure.

Blaschke factors use the normalisation ``(-conj(a)/|a|)(z - a)/(1 - conj(a) z)``
with the factor ``z`` for a zero at the origin.  The singular factor is
``exp(-sum_j w_j (xi_j + z)/(xi_j - z))``.  Both factors are meromorphic in
the plane, so the same formulas evaluate the reflection
``1/conj(theta(1/conj z))`` outside the disk.

Every quantity of the form ``1 - |theta|^2`` is evaluated through
``log |theta|^2 = sum log1p(-q_n s) - 2 s sum w_j/|xi_j - z|^2`` with
``s = 1 - |z|^2``; this keeps the reproducing-kernel diagonal accurate up to
the circle, where it tends to ``|theta'|``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError, PoleError, SpectrumError

SPECTRUM_EXCLUSION = 1e-6


def _as_complex(z):
    arr = np.asarray(z, dtype=complex)
    return arr, arr.ndim == 0


def _log1p_ratio(x):
    """``log1p(x)/x`` with the removable singularity at 0 filled in."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-8
    safe = np.where(small, 1.0, x)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.log1p(safe) / safe
    return np.where(small, 1.0 - 0.5 * x, out)


def _expm1_ratio(y):
    """``expm1(y)/y`` with the removable singularity at 0 filled in."""
    y = np.asarray(y, dtype=float)
    small = np.abs(y) < 1e-8
    safe = np.where(small, 1.0, y)
    with np.errstate(over="ignore", invalid="ignore"):
        out = np.expm1(safe) / safe
    return np.where(small, 1.0 + 0.5 * y, out)


@dataclass(frozen=True, eq=False)
class InnerFunction:
    """Blaschke product times a finitely atomic singular inner factor.

    Parameters
    ----------
    deltas : ndarray of float
        ``1 - |a_n|`` for each zero, in ``(0, 1]``.
    directions : ndarray of complex
        Unit vectors ``a_n/|a_n|`` (1 for a zero at the origin).
    atoms : tuple of (angle, weight)
        Point masses of the singular measure, angle in radians, weight > 0.
    truncation_tail_bound : float
        Upper bound for ``sum (1 - |a_n|)`` over zeros dropped by truncation.
    accumulation : tuple of float
        Angles of boundary accumulation points of the full zero sequence.
    """

    deltas: np.ndarray
    directions: np.ndarray
    atoms: tuple = ()
    truncation_tail_bound: float = 0.0
    accumulation: tuple = ()
    label: str = field(default="", compare=False)

    def __post_init__(self):
        d = np.asarray(self.deltas, dtype=float).ravel()
        u = np.asarray(self.directions, dtype=complex).ravel()
        if d.shape != u.shape:
            raise ParameterError("deltas and directions differ in length")
        if np.any(d <= 0) or np.any(d > 1):
            raise ParameterError("every zero must satisfy |a| < 1")
        if np.any(np.abs(np.abs(u) - 1.0) > 1e-12):
            raise ParameterError("directions must be unimodular")
        atoms = tuple((float(t), float(w)) for t, w in self.atoms)
        if any(w <= 0 for _, w in atoms):
            raise ParameterError("atom weights must be positive")
        if self.truncation_tail_bound < 0:
            raise ParameterError("tail bound must be nonnegative")
        d.setflags(write=False)
        u.setflags(write=False)
        object.__setattr__(self, "deltas", d)
        object.__setattr__(self, "directions", u)
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "accumulation", tuple(float(a) for a in self.accumulation))

    # ------------------------------------------------------------------
    # constructors
    @classmethod
    def blaschke(cls, zeros, atoms=(), label=""):
        """Finite Blaschke product (optionally times atoms) from zero locations."""
        zs = np.atleast_1d(np.asarray(zeros, dtype=complex))
        mod = np.abs(zs)
        if np.any(mod >= 1):
            raise ParameterError("Blaschke zeros must lie in the open unit disk")
        dirs = np.where(mod > 0, np.exp(1j * np.angle(zs)), 1.0 + 0j)
        return cls(1.0 - mod, dirs, atoms=atoms, label=label)

    @classmethod
    def monomial(cls, n: int):
        """``z**n``."""
        return cls.blaschke(np.zeros(n), label=f"z^{n}")

    @classmethod
    def paley_wiener(cls, weight: float = 1.0, angle: float = 0.0):
        """Single atom: ``exp(-w (xi + z)/(xi - z))``; ``w = 1, xi = 1`` by default."""
        return cls(np.empty(0), np.empty(0, dtype=complex), atoms=((angle, weight),),
                   label="paley-wiener")

    @classmethod
    def from_sequence(cls, zero_fn, tol: float = 1e-10, n_max: int = 10_000,
                      lookahead: int = 2000, label=""):
        """Truncate an infinite zero sequence.

        ``zero_fn(n)`` returns ``(1 - |a_n|, arg a_n)`` for ``n = 1, 2, ...``.
        The smallest ``N`` whose numerically summed tail
        ``sum_{N < n <= N + lookahead} (1 - |a_n|)`` is at most ``tol`` is kept.
        Boundary accumulation points are read off from the far tail.
        """
        deltas, angles = [], []
        tail = None
        for n in range(1, n_max + 1):
            d, t = zero_fn(n)
            deltas.append(float(d))
            angles.append(float(t))
            tail = math.fsum(zero_fn(m)[0] for m in range(n + 1, n + 1 + lookahead))
            if tail <= tol:
                break
        else:
            raise ParameterError(f"tail bound {tail:.3g} > tol after {n_max} zeros")
        d_far, t_far = zero_fn(len(deltas) + lookahead)
        acc = (float(t_far),) if d_far < 1e-6 else ()
        dirs = np.exp(1j * np.array(angles))
        return cls(np.array(deltas), dirs, truncation_tail_bound=tail,
                   accumulation=acc, label=label)

    @classmethod
    def from_json(cls, text: str):
        data = json.loads(text) if isinstance(text, str) else dict(text)
        zeros = [complex(re, im) for re, im in data.get("zeros", [])]
        atoms = [(float(t), float(w)) for t, w in data.get("atoms", [])]
        return cls.blaschke(np.array(zeros, dtype=complex), atoms=atoms)

    def to_json(self) -> str:
        zs = self.zeros
        return json.dumps({"zeros": [[float(z.real), float(z.imag)] for z in zs],
                           "atoms": [[t, w] for t, w in self.atoms]})

    # ------------------------------------------------------------------
    @property
    def zeros(self) -> np.ndarray:
        return (1.0 - self.deltas) * self.directions

    @property
    def degree(self) -> int:
        return int(self.deltas.size)

    @property
    def is_finite_blaschke(self) -> bool:
        return not self.atoms and not self.accumulation

    def atom_points(self) -> np.ndarray:
        return np.array([complex(math.cos(t), math.sin(t)) for t, _ in self.atoms])

    def modulus_error_bound(self, z) -> float:
        """Bound on ``1 - |B_tail(z)|`` from the dropped zeros, for ``|z| < 1``."""
        r = abs(complex(z))
        if r >= 1:
            return math.inf if self.truncation_tail_bound > 0 else 0.0
        return 4.0 * self.truncation_tail_bound / (1.0 - r)

    # ------------------------------------------------------------------
    def _check_poles(self, z):
        outside = np.abs(z) >= 1.0
        for xi in self.atom_points():
            # interior points near an atom are fine: the factor decays there
            if np.any(outside & (np.abs(z - xi) < SPECTRUM_EXCLUSION)):
                raise PoleError(f"evaluation at singular atom {xi}")
        a = self.zeros
        if a.size:
            den = (1.0 - np.conj(self.directions)[None, :] * z.ravel()[:, None]) \
                + self.deltas[None, :] * np.conj(self.directions)[None, :] * z.ravel()[:, None]
            if np.any(np.abs(den) == 0):
                raise PoleError("evaluation at a reflected zero 1/conj(a)")

    def value_and_derivative(self, z):
        """Vectorised ``(theta(z), theta'(z))``."""
        z, scalar = _as_complex(z)
        self._check_poles(z)
        val = np.ones_like(z)
        der = np.zeros_like(z)
        for d, u in zip(self.deltas, self.directions):
            if d == 1.0:
                b, db = z, np.ones_like(z)
            else:
                uc = np.conj(u)
                den = (1.0 - uc * z) + d * uc * z
                num = (z - u) + d * u
                b = -uc * num / den
                db = -uc * (d * (2.0 - d)) / den**2
            der = der * b + val * db
            val = val * b
        if self.atoms:
            expo = np.zeros_like(z)
            dexpo = np.zeros_like(z)
            for t, w in self.atoms:
                xi = complex(math.cos(t), math.sin(t))
                expo -= w * (xi + z) / (xi - z)
                dexpo -= w * 2.0 * xi / (xi - z) ** 2
            s = np.exp(expo)
            der = der * s + val * s * dexpo
            val = val * s
        if scalar:
            return complex(val), complex(der)
        return val, der

    def __call__(self, z):
        return self.value_and_derivative(z)[0]

    def log_modulus_sq_over_s(self, z):
        """``Lambda = log|theta(z)|^2 / (1 - |z|^2)``, finite on the circle."""
        z = np.asarray(z, dtype=complex)
        s = 1.0 - np.abs(z) ** 2
        lam = np.zeros(z.shape)
        for d, u in zip(self.deltas, self.directions):
            c = d * (2.0 - d)
            if d == 1.0:
                den2 = np.ones(z.shape)
            else:
                uc = np.conj(u)
                den2 = np.abs((1.0 - uc * z) + d * uc * z) ** 2
            q = c / den2
            lam -= q * _log1p_ratio(-q * s)
        for t, w in self.atoms:
            xi = complex(math.cos(t), math.sin(t))
            lam -= 2.0 * w / np.abs(xi - z) ** 2
        return lam

    def log_modulus(self, z):
        """``log |theta(z)|`` (reflection-consistent outside the disk)."""
        z, scalar = _as_complex(z)
        s = 1.0 - np.abs(z) ** 2
        with np.errstate(divide="ignore", invalid="ignore"):
            out = 0.5 * s * self.log_modulus_sq_over_s(z)
        return float(out) if scalar else out

    def one_minus_modulus_sq(self, z):
        """``1 - |theta(z)|^2`` without cancellation."""
        z, scalar = _as_complex(z)
        s = 1.0 - np.abs(z) ** 2
        with np.errstate(divide="ignore", invalid="ignore"):
            out = -np.expm1(s * self.log_modulus_sq_over_s(z))
        return float(out) if scalar else out

    def log_derivative(self, z):
        """``theta'(z)/theta(z)``; used for the gradient of ``log |theta|``."""
        z, scalar = _as_complex(z)
        out = np.zeros_like(z)
        for d, u in zip(self.deltas, self.directions):
            if d == 1.0:
                out += 1.0 / z
            else:
                uc = np.conj(u)
                den = (1.0 - uc * z) + d * uc * z
                num = (z - u) + d * u
                out += d * (2.0 - d) / (num * den)
        for t, w in self.atoms:
            xi = complex(math.cos(t), math.sin(t))
            out -= w * 2.0 * xi / (xi - z) ** 2
        return complex(out) if scalar else out


def eval_inner(f: InnerFunction, z):
    """Return ``(theta(z), theta'(z))``; raises :class:`PoleError` at atoms/poles."""
    return f.value_and_derivative(z)


def counterexample_inner(n_zeros: int = 30, exact: bool = False) -> InnerFunction:
    """Blaschke product over ``z_n = (1 - 4**-n / n) exp(i 2**-n)``, ``n <= n_zeros``.

    The distances ``1 - |z_n|`` are stored exactly, so the kernel diagonal keeps
    the contribution of zeros that round to the circle in double precision.
    By default the result stands for the infinite product: it records the
    accumulation point 1 and a bound for the dropped tail.  With ``exact``
    it is the finite product itself.
    """
    n = np.arange(1, n_zeros + 1, dtype=float)
    deltas = 4.0 ** (-n) / n
    dirs = np.exp(1j * 2.0 ** (-n))
    if exact:
        return InnerFunction(deltas, dirs, label=f"counterexample-finite-{n_zeros}")
    m = n_zeros + 1
    tail = 4.0 ** (-m) / m / (1.0 - 0.25)
    return InnerFunction(deltas, dirs, truncation_tail_bound=tail, accumulation=(0.0,),
                         label=f"counterexample-{n_zeros}")


def counterexample_zero(n: int) -> tuple[float, float]:
    """``(1 - |z_n|, arg z_n)`` of the counterexample sequence."""
    return 4.0 ** (-n) / n, 2.0 ** (-n)


def spectrum(f: InnerFunction, tol: float = 1e-9) -> list[complex]:
    """Boundary spectrum: atoms plus accumulation points of the zeros.

    Points closer than ``tol`` are merged.  Returns unimodular points sorted
    by argument in ``[0, 2pi)``.
    """
    if tol <= 0:
        raise ParameterError("tol must be positive")
    angles = [t for t, _ in f.atoms] + list(f.accumulation)
    angles = sorted(a % (2 * math.pi) for a in angles)
    merged: list[float] = []
    for a in angles:
        if merged and abs(a - merged[-1]) < tol:
            continue
        merged.append(a)
    if len(merged) > 1 and (merged[0] + 2 * math.pi - merged[-1]) < tol:
        merged.pop()
    return [complex(math.cos(a), math.sin(a)) for a in merged]


def distance_to_spectrum(f: InnerFunction, z) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    pts = spectrum(f)
    if not pts:
        return np.full(z.shape, np.inf)
    return np.min(np.abs(z[..., None] - np.array(pts)), axis=-1)


def kernel_diag(f: InnerFunction, z):
    """``k(z, z) = (1 - |theta(z)|^2)/(1 - |z|^2)``, equal to ``|theta'|`` on the circle."""
    z, scalar = _as_complex(z)
    if np.any((np.abs(z) >= 1.0) & (distance_to_spectrum(f, z) < SPECTRUM_EXCLUSION)):
        raise PoleError("kernel diagonal requested at the spectrum")
    s = 1.0 - np.abs(z) ** 2
    lam = f.log_modulus_sq_over_s(z)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        direct = -np.expm1(s * lam) / np.where(s == 0, 1.0, s)
        limit = -lam * _expm1_ratio(s * lam)
    out = np.where(np.abs(s) > 1e-6, direct, limit)
    return float(out) if scalar else out


def kernel(f: InnerFunction, w, z):
    """Reproducing kernel ``(1 - conj(theta(w)) theta(z))/(1 - conj(w) z)`` of the model space."""
    w, sw = _as_complex(w)
    z, sz = _as_complex(z)
    w, z = np.broadcast_arrays(w, z)
    den = 1.0 - np.conj(w) * z
    diag = np.isclose(w, z, rtol=0.0, atol=1e-15)
    if np.any((den == 0) & ~diag):
        raise PoleError("conj(w) z = 1 off the diagonal")
    out = np.empty(w.shape, dtype=complex)
    if np.any(diag):
        out[diag] = kernel_diag(f, z[diag])
    off = ~diag
    if np.any(off):
        tw = f(w[off])
        tz = f(z[off])
        out[off] = (1.0 - np.conj(tw) * tz) / den[off]
    return complex(out) if (sw and sz) else out


def kernel_laplacian_diag(f: InnerFunction, z):
    """Closed-form Laplacian of ``z -> k(z, z)``.

    ``Delta k / 4 = (1+|z|^2)(1-|theta|^2)/s^3 - 2 Re(z conj(theta) theta')/s^2 - |theta'|^2/s``
    with ``s = 1 - |z|^2``.
    """
    z, scalar = _as_complex(z)
    th, dth = f.value_and_derivative(z)
    s = 1.0 - np.abs(z) ** 2
    u = kernel_diag(f, z)
    out = 4.0 * ((1.0 + np.abs(z) ** 2) * u / s**2
                 - 2.0 * np.real(z * np.conj(th) * dth) / s**2
                 - np.abs(dth) ** 2 / s)
    return float(out) if scalar else out


def dk_sandwich(f: InnerFunction, z):
    """Lower and upper envelopes of ``Delta k(z, z)`` from ``|theta'| <= (1-|theta|^2)/(1-|z|^2)``."""
    z = np.asarray(z, dtype=complex)
    r = np.abs(z)
    t = np.abs(f(z))
    s = 1.0 - r**2
    om = f.one_minus_modulus_sq(z)
    lower = 4.0 * (r - t) ** 2 * om / s**3
    upper = 4.0 * (1.0 + r) ** 2 * om / s**3
    return lower, upper
