"""Theta series with characteristics, nilpotent exponentials and intertwiners.

Everything here is a pure function of its arguments.  Theta series are summed
with an explicit truncation window derived from a Gaussian tail bound, so each
returned value carries a known absolute error budget.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational

import numpy as np
from scipy.linalg import svd

DEFAULT_TOL = 1e-12
MAX_DERIV_ORDER = 16
NILPOTENT_THRESHOLD = 1e-13


@dataclass(frozen=True)
class TorusModulus:
    """The complexified Kaehler parameter ``tau = b_field + i*area``."""

    b_field: float
    area: float

    def __post_init__(self):
        if not self.area > 0:
            raise ValueError(f"area must be positive, got {self.area!r}")

    @classmethod
    def from_complex(cls, tau: complex) -> "TorusModulus":
        tau = complex(tau)
        return cls(tau.real, tau.imag)

    @property
    def tau(self) -> complex:
        return complex(self.b_field, self.area)

    @property
    def q(self) -> complex:
        return np.exp(2j * np.pi * self.tau)

    def scaled(self, r: int) -> "TorusModulus":
        """Modulus of the r-fold cover, ``r * tau``."""
        return TorusModulus(r * self.b_field, r * self.area)


def _as_char(a) -> Fraction | float:
    if isinstance(a, Rational):
        return Fraction(a)
    if isinstance(a, float) and a.is_integer():
        return Fraction(int(a))
    return float(a)


@dataclass(frozen=True)
class ThetaParams:
    """Parameters of ``theta[a, z0](level*tau, freq*z)``.

    The translation is kept as ``z0 = shift_tau * tau + shift_real`` so that
    translations coming from line-bundle twists stay exact.  The characteristic
    is reduced into [0, 1); the integer part only relabels the summation index.
    """

    char: Fraction | float = Fraction(0)
    shift_tau: Fraction | float = Fraction(0)
    shift_real: Fraction | float = Fraction(0)
    level: int = 1
    freq: int = 1

    def __post_init__(self):
        if int(self.level) != self.level or self.level < 1:
            raise ValueError("level must be a positive integer")
        if int(self.freq) != self.freq or self.freq < 1:
            raise ValueError("freq must be a positive integer")
        a = _as_char(self.char)
        object.__setattr__(self, "char", a - math.floor(a))
        object.__setattr__(self, "shift_tau", _as_char(self.shift_tau))
        object.__setattr__(self, "shift_real", _as_char(self.shift_real))

    def z0(self, tau: TorusModulus) -> complex:
        return float(self.shift_tau) * tau.tau + float(self.shift_real)


def _theta_window(eff_area: float, a: float, y_min: float, y_max: float,
                  order: int, freq: int, tol: float) -> tuple[int, int]:
    """Index range [lo, hi] whose complement contributes less than ``tol``.

    A term has modulus ``|(m+a)*freq|**order * exp(-pi*eff_area*(u**2 - c**2))``
    with ``u = m + a + y/eff_area`` and ``c = y/eff_area``, where ``y`` is the
    imaginary part of ``freq*z + z0``.  Past the first index where the terms
    decrease by a factor of at least 2 per step, the tail is at most twice its
    first term.  The window is widened until that holds on both sides for
    every ``y`` in [y_min, y_max].
    """
    centers = [-y / eff_area - a for y in (y_min, y_max)]
    lo_c, hi_c = math.floor(min(centers)), math.ceil(max(centers))
    peak = max(abs(y) for y in (y_min, y_max)) ** 2 / eff_area * math.pi
    log_tol = math.log(tol) - math.log(4.0)

    def log_term(u: float, shift: float) -> float:
        val = -math.pi * eff_area * u * u + peak
        mag = abs(u - shift) * freq
        if order:
            val += order * math.log(max(mag, 1e-300))
        return val

    def ok(dist: int) -> bool:
        # worst case over both endpoints of the y-range
        for y in (y_min, y_max):
            c = y / eff_area
            for sign in (1, -1):
                u = sign * dist
                if log_term(u, c) > log_tol:
                    return False
                if log_term(u + sign, c) - log_term(u, c) > -math.log(2.0):
                    return False
        return True

    dist = 1
    while not ok(dist):
        dist += 1
        if dist > 100000:
            raise RuntimeError("theta truncation window did not close")
    return lo_c - dist - 1, hi_c + dist + 1


def _theta_series(p: ThetaParams, tau: TorusModulus, z, order: int, tol: float):
    if not tol > 0:
        raise ValueError("tol must be positive")
    z = np.asarray(z, dtype=complex)
    t = p.level * tau.tau
    z0 = p.z0(tau)
    w = p.freq * z + z0
    a = float(p.char)
    eff_area = p.level * tau.area
    ys = np.imag(w)
    lo, hi = _theta_window(eff_area, a, float(ys.min()) if ys.size else 0.0,
                           float(ys.max()) if ys.size else 0.0, order, p.freq, tol)
    m = np.arange(lo, hi + 1, dtype=float) + a
    flat = w.reshape(-1)
    phase = np.pi * 1j * (m[None, :] ** 2 * t + 2 * m[None, :] * flat[:, None])
    terms = np.exp(phase)
    if order:
        terms = terms * (-(m * p.freq)) ** order
    out = terms.sum(axis=1).reshape(w.shape)
    return out, hi - lo + 1


def theta_eval(p: ThetaParams, tau: TorusModulus, z, tol: float = DEFAULT_TOL):
    """``sum_m exp(pi i [(m+a)^2 level tau + 2 (m+a)(freq z + z0)])``.

    ``z`` may be a scalar or an array; the truncation window is chosen for the
    worst point so every entry has absolute error below ``tol``.
    """
    val, _ = _theta_series(p, tau, z, 0, tol)
    return val[()] if np.ndim(val) == 0 else val


def theta_truncation(p: ThetaParams, tau: TorusModulus, z, tol: float = DEFAULT_TOL) -> int:
    """Number of series terms used by :func:`theta_eval` at ``z``."""
    return _theta_series(p, tau, z, 0, tol)[1]


def theta_deriv_eval(p: ThetaParams, tau: TorusModulus, z, order: int,
                     tol: float = DEFAULT_TOL):
    """Apply ``D = -(1/2 pi i) d/dz`` ``order`` times, term by term."""
    if int(order) != order or order < 0:
        raise ValueError("order must be a non-negative integer")
    if order > MAX_DERIV_ORDER:
        raise ValueError(f"derivative order {order} exceeds cap {MAX_DERIV_ORDER}")
    val, _ = _theta_series(p, tau, z, int(order), tol)
    return val[()] if np.ndim(val) == 0 else val


# -- nilpotent matrices -------------------------------------------------------

def _is_nilpotent(m: np.ndarray) -> bool:
    n = m.shape[0]
    power = np.eye(n, dtype=complex)
    for _ in range(n):
        power = power @ m
    return bool(np.all(np.abs(power) <= NILPOTENT_THRESHOLD))


@dataclass(frozen=True, eq=False)
class NilpotentMatrix:
    """Square nilpotent matrix, checked by repeated multiplication."""

    entries: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.array(self.entries, dtype=complex)
        if m.ndim == 0:
            m = m.reshape(1, 1)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
            raise ValueError(f"nilpotent matrix must be square, got shape {m.shape}")
        if not _is_nilpotent(m):
            raise ValueError("matrix is not nilpotent")
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    @classmethod
    def zero(cls, dim: int = 1) -> "NilpotentMatrix":
        return cls(np.zeros((dim, dim)))

    @classmethod
    def jordan(cls, dim: int) -> "NilpotentMatrix":
        """Single nilpotent Jordan block (ones on the superdiagonal)."""
        return cls(np.eye(dim, k=1))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def kernel_dim(self) -> int:
        return self.dim - int(np.linalg.matrix_rank(self.entries, tol=1e-10))

    def is_indecomposable(self) -> bool:
        return self.kernel_dim() == 1

    def __eq__(self, other):
        if not isinstance(other, NilpotentMatrix):
            return NotImplemented
        return self.entries.shape == other.entries.shape and np.array_equal(
            self.entries, other.entries)

    def __hash__(self):
        return hash((self.entries.shape, self.entries.tobytes()))

    def __repr__(self):
        return f"NilpotentMatrix({self.entries.real.tolist()!r})" if not np.any(
            self.entries.imag) else f"NilpotentMatrix({self.entries.tolist()!r})"


def _nil_entries(n) -> np.ndarray:
    if isinstance(n, NilpotentMatrix):
        return n.entries
    m = np.array(n, dtype=complex)
    if m.ndim == 0:
        m = m.reshape(1, 1)
    if not _is_nilpotent(m):
        raise ValueError("matrix is not nilpotent")
    return m


def nilpotent_exp(n, t: complex = 1.0) -> np.ndarray:
    """``exp(t N)`` as the finite sum ``sum_{j < dim} (tN)^j / j!``."""
    m = _nil_entries(n)
    dim = m.shape[0]
    out = np.eye(dim, dtype=complex)
    term = np.eye(dim, dtype=complex)
    for j in range(1, dim):
        term = term @ (t * m) / j
        out = out + term
    return out


# -- intertwiners -------------------------------------------------------------

def canonical_basis(vectors: np.ndarray, decimals: int = 10) -> np.ndarray:
    """Reduced row echelon form of the row space of ``vectors``.

    Rows are basis vectors.  Gives a representation of a subspace that does
    not depend on which spanning set was used to compute it.
    """
    a = np.array(vectors, dtype=complex)
    if a.size == 0:
        return a.reshape(0, a.shape[-1] if a.ndim == 2 else 0)
    rows, cols = a.shape
    r = 0
    for c in range(cols):
        if r == rows:
            break
        piv = r + int(np.argmax(np.abs(a[r:, c])))
        if abs(a[piv, c]) < 1e-9:
            continue
        a[[r, piv]] = a[[piv, r]]
        a[r] = a[r] / a[r, c]
        for i in range(rows):
            if i != r:
                a[i] = a[i] - a[i, c] * a[r]
        r += 1
    a = a[:r]
    a = np.round(a.real, decimals) + 1j * np.round(a.imag, decimals)
    a = a + 0.0  # clears negative zeros
    return a


def sylvester_kernel(m1, m2) -> list[np.ndarray]:
    """Basis of ``{f : f @ m1 == m2 @ f}`` for ``f`` of shape (dim m2, dim m1).

    The basis is returned in reduced row echelon form of the vectorised
    matrices, so equal solution spaces give identical lists.
    """
    a = np.atleast_2d(np.asarray(m1, dtype=complex))
    b = np.atleast_2d(np.asarray(m2, dtype=complex))
    if a.shape[0] != a.shape[1] or b.shape[0] != b.shape[1]:
        raise ValueError("sylvester_kernel needs square matrices")
    d1, d2 = a.shape[0], b.shape[0]
    # row-major vec: vec(f @ a) = (I kron a.T) vec f ; vec(b @ f) = (b kron I) vec f
    op = np.kron(np.eye(d2), a.T) - np.kron(b, np.eye(d1))
    # absolute threshold: op may be tiny overall when m1 and m2 nearly agree
    scale = max(1.0, float(np.abs(a).max()), float(np.abs(b).max()))
    _, sv, vh = svd(op)
    rank = int(np.sum(sv > 1e-10 * scale))
    ns = vh[rank:].conj().T
    if ns.shape[1] == 0:
        return []
    basis = canonical_basis(ns.T)
    return [row.reshape(d2, d1) for row in basis]


def coordinates(basis: list[np.ndarray], f: np.ndarray) -> np.ndarray:
    """Coordinates of ``f`` in a list of basis matrices (least squares)."""
    if not basis:
        return np.zeros(0, dtype=complex)
    a = np.stack([b.reshape(-1) for b in basis], axis=1)
    coef, *_ = np.linalg.lstsq(a, np.asarray(f, dtype=complex).reshape(-1), rcond=None)
    return coef
