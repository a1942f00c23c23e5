"""Complex side: Atiyah-form bundles, torsion sheaves and theta-function homs.

A bundle ``L(phi) (x) F(V, exp N)`` has ``phi = t*_{a tau + b} phi0 * phi0^(n-1)``
with ``phi0(u) = q^(-1/2) u^(-1)``.  For ``A1 -> A2`` with ``k = n2 - n1 > 0``
the homs are spanned by

    Psi(f_j (x) F) = exp(D * ad / k) f_j * F,   ad(F) = N2 F - F N1,

where ``f_j(z) = theta[j/k, k w](k tau, k z)`` and ``w = delta tau + beta``
with ``delta = (a2 - a1)/k``, ``beta = (b2 - b1)/k``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import factorial

import numpy as np
from scipy.stats import qmc

from .fukaya import _mod1
from .numerics import (DEFAULT_TOL, NilpotentMatrix, ThetaParams, TorusModulus,
                       sylvester_kernel, theta_deriv_eval, theta_eval,
                       nilpotent_exp)


class LevelMismatchError(ValueError):
    pass


class IllConditionedError(RuntimeError):
    """Sampling solve was too ill-conditioned; resample with other points."""


@dataclass(frozen=True)
class BundleDesc:
    """``pi_{r*}(L(phi) (x) F(V, exp N))`` with twist ``a*tau + b``.

    ``degree`` is the degree of ``L(phi)`` on the level-``r`` curve.  The twist
    is reduced mod 1 in both components.
    """

    degree: int
    a: Fraction | float = Fraction(0)
    b: Fraction | float = Fraction(0)
    nil: NilpotentMatrix = field(default_factory=lambda: NilpotentMatrix.zero(1))
    level: int = 1

    def __post_init__(self):
        if self.nil is None:
            object.__setattr__(self, "nil", NilpotentMatrix.zero(1))
        elif not isinstance(self.nil, NilpotentMatrix):
            object.__setattr__(self, "nil", NilpotentMatrix(self.nil))
        if int(self.level) != self.level or self.level < 1:
            raise ValueError("isogeny level must be a positive integer")
        object.__setattr__(self, "degree", int(self.degree))
        object.__setattr__(self, "a", _mod1(self.a))
        object.__setattr__(self, "b", _mod1(self.b))

    @property
    def fiber_dim(self) -> int:
        return self.nil.dim

    @property
    def rank(self) -> int:
        return self.level * self.fiber_dim

    @property
    def total_degree(self) -> int:
        return self.degree * self.fiber_dim

    def log_twist(self) -> np.ndarray:
        """``N - 2 pi i b``: the nilpotent part with the real twist folded in."""
        return self.nil.entries - 2j * np.pi * float(self.b) * np.eye(self.fiber_dim)


@dataclass(frozen=True)
class TorsionDesc:
    """Torsion sheaf ``S(-a tau - b, V, N)`` supported at one point."""

    a: Fraction | float = Fraction(0)
    b: Fraction | float = Fraction(0)
    nil: NilpotentMatrix = field(default_factory=lambda: NilpotentMatrix.zero(1))

    def __post_init__(self):
        if self.nil is None:
            object.__setattr__(self, "nil", NilpotentMatrix.zero(1))
        elif not isinstance(self.nil, NilpotentMatrix):
            object.__setattr__(self, "nil", NilpotentMatrix(self.nil))
        object.__setattr__(self, "a", _mod1(self.a))
        object.__setattr__(self, "b", _mod1(self.b))

    @property
    def fiber_dim(self) -> int:
        return self.nil.dim

    def is_indecomposable(self) -> bool:
        return self.nil.is_indecomposable()


@dataclass(frozen=True)
class HomData:
    """Twist data of ``Hom(A1, A2)`` for ``k = n2 - n1``."""

    k: int
    delta: Fraction | float
    beta: Fraction | float
    basis: tuple  # tuple of (j, matrix) pairs, or intertwiner matrices when k == 0


def _twist_data(a1: BundleDesc, a2: BundleDesc):
    k = a2.degree - a1.degree
    if k == 0:
        return 0, Fraction(0), Fraction(0)
    return k, (a2.a - a1.a) / k, (a2.b - a1.b) / k


def _elementary(d2: int, d1: int):
    for r in range(d2):
        for c in range(d1):
            e = np.zeros((d2, d1), dtype=complex)
            e[r, c] = 1.0
            yield e


def _check_level(a1: BundleDesc, a2: BundleDesc):
    if a1.level != a2.level:
        raise LevelMismatchError("bundles live on different isogeny levels")
    if a1.level != 1:
        raise LevelMismatchError("hom bases are computed on level-1 Atiyah forms; "
                                 "reduce pushforwards through the isogeny functors")


def hom_basis(a1: BundleDesc, a2: BundleDesc) -> HomData:
    """Basis of ``Hom(A1, A2)``.

    ``k > 0``: pairs ``(j, E)`` standing for ``Psi(t*_{w} f_j^{(k)} (x) E)`` with
    ``E`` running over elementary matrices.  ``k == 0``: intertwiner matrices if
    the twists agree, else nothing.  ``k < 0``: nothing.
    """
    _check_level(a1, a2)
    k, delta, beta = _twist_data(a1, a2)
    d1, d2 = a1.fiber_dim, a2.fiber_dim
    if k > 0:
        basis = tuple((j, e) for j in range(k) for e in _elementary(d2, d1))
        return HomData(k, delta, beta, basis)
    if k == 0 and a1.a == a2.a and a1.b == a2.b:
        return HomData(0, delta, beta, tuple(sylvester_kernel(
            nilpotent_exp(a1.nil), nilpotent_exp(a2.nil))))
    return HomData(k, delta, beta, ())


def basis_params(k: int, j: int, delta, beta) -> ThetaParams:
    """``t*_{delta tau + beta} f_j^{(k)}`` as theta parameters."""
    return ThetaParams(Fraction(j, k), shift_tau=k * delta, shift_real=k * beta,
                       level=k, freq=k)


@dataclass
class SectionElement:
    """Element of ``Hom(A1, A2)`` as coefficients on the theta basis.

    For ``k > 0`` ``coeffs`` maps ``j`` to a matrix in ``Hom(V1, V2)``; the
    element is ``sum_j Psi(f_j (x) coeffs[j])``.  For ``k == 0`` the single
    entry under key 0 is an intertwiner.
    """

    source: BundleDesc
    target: BundleDesc
    coeffs: dict = field(default_factory=dict)

    def __post_init__(self):
        _check_level(self.source, self.target)
        self.k, self.delta, self.beta = _twist_data(self.source, self.target)
        shape = (self.target.fiber_dim, self.source.fiber_dim)
        clean = {}
        for j, c in dict(self.coeffs).items():
            c = np.array(np.atleast_2d(c), dtype=complex)
            if c.shape != shape:
                raise ValueError(f"coefficient shape {c.shape}, expected {shape}")
            j = int(j) % self.k if self.k > 0 else 0
            clean[j] = clean.get(j, 0) + c
        if self.k < 0 and clean:
            raise ValueError("negative degree twists have no sections")
        if self.k == 0 and clean and not (self.source.a == self.target.a
                                          and self.source.b == self.target.b):
            raise ValueError("different twists of equal degree have no morphisms")
        self.coeffs = clean

    def max_abs_diff(self, other: "SectionElement") -> float:
        keys = set(self.coeffs) | set(other.coeffs)
        zero = np.zeros((self.target.fiber_dim, self.source.fiber_dim))
        if not keys:
            return 0.0
        return max(float(np.max(np.abs(self.coeffs.get(j, zero) - other.coeffs.get(j, zero))))
                   for j in keys)


def _ad_powers(n2: np.ndarray, n1: np.ndarray, f: np.ndarray, k: int, order: int):
    """``(ad/k)^j (F) / j!`` for ``j = 0..order``; ``ad(F) = N2 F - F N1``."""
    out = [f]
    cur = f
    for j in range(1, order + 1):
        cur = (n2 @ cur - cur @ n1) / k
        out.append(cur / factorial(j))
    return out


def section_eval(s: SectionElement, z, tau: TorusModulus, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Value of the section at ``z`` (scalar or 1-d array); shape (..., d2, d1)."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    d2, d1 = s.target.fiber_dim, s.source.fiber_dim
    out = np.zeros(z.shape + (d2, d1), dtype=complex)
    if s.k == 0:
        for c in s.coeffs.values():
            out += c
        return out
    n1, n2 = s.source.nil.entries, s.target.nil.entries
    order = d1 + d2 - 2  # ad is nilpotent of this order
    for j, c in s.coeffs.items():
        p = basis_params(s.k, j, s.delta, s.beta)
        mats = _ad_powers(n2, n1, c, s.k, order)
        for o, m in enumerate(mats):
            if not np.any(m):
                continue
            vals = theta_deriv_eval(p, tau, z, o, tol)
            out += vals[:, None, None] * m
    return out


def automorphy_factor(s: SectionElement, z, tau: TorusModulus) -> tuple[np.ndarray, np.ndarray]:
    """Left and right factors ``(L, R)`` with ``s(z + tau) = c(z) * L s(z) R``.

    Returns the scalar ``c(z)`` folded into ``L``; ``s(z + 1) = s(z)``.
    """
    k = s.k
    x = (s.target.a - s.source.a) * tau.tau + float(s.target.b - s.source.b)
    c = np.exp(-1j * np.pi * k * tau.tau - 2j * np.pi * k * np.asarray(z) - 2j * np.pi * x)
    left = nilpotent_exp(s.target.nil)
    right = nilpotent_exp(s.source.nil, -1.0)
    return c, left, right


# -- composition --------------------------------------------------------------

_SAMPLE_COUNT_FACTOR = 3
_ZERO_EXCLUSION = 1e-3


def _sample_points(count: int, tau: TorusModulus, seed: int = 0) -> np.ndarray:
    """Low-discrepancy points ``x + y tau`` with x, y in [-1/2, 1/2)."""
    sampler = qmc.Halton(d=2, scramble=False)
    pts = []
    sampler.fast_forward(1 + seed * 997)
    while len(pts) < count:
        u = sampler.random(1)[0] - 0.5
        # theta zeros sit at 1/2 + tau/2 mod lattice
        dx = abs(((u[0] - 0.5) + 0.5) % 1.0 - 0.5)
        dy = abs(((u[1] - 0.5) + 0.5) % 1.0 - 0.5)
        if dx < _ZERO_EXCLUSION and dy < _ZERO_EXCLUSION:
            continue
        pts.append(u[0] + u[1] * tau.tau)
    return np.array(pts)


@lru_cache(maxsize=256)
def _design(a1: BundleDesc, a3: BundleDesc, tau: TorusModulus, seed: int):
    data = hom_basis(a1, a3)
    nb = len(data.basis)
    d1, d3 = a1.fiber_dim, a3.fiber_dim
    per_point = d1 * d3
    n_pts = max(4, _SAMPLE_COUNT_FACTOR * 2 * data.k * nb // max(per_point, 1) + 4)
    pts = _sample_points(n_pts + 8, tau, seed)
    fit, hold = pts[:n_pts], pts[n_pts:]
    cols = []
    for j, e in data.basis:
        el = SectionElement(a1, a3, {j: e})
        cols.append(section_eval(el, fit, tau).reshape(-1))
    mat = np.stack(cols, axis=1)
    scale = np.maximum(np.abs(mat).max(axis=1), 1e-300)
    cond = np.linalg.cond(mat / scale[:, None])
    return data, fit, hold, mat, scale, cond


def compose(s1: SectionElement, s2: SectionElement, tau: TorusModulus,
            tol: float = 1e-9, seed: int = 0) -> SectionElement:
    """``s2 o s1`` by pointwise multiplication, re-expanded on the theta basis.

    The product is sampled at low-discrepancy points of the fundamental domain
    and expanded by least squares; the residual is checked at held-out points.
    """
    if s1.target != s2.source:
        raise ValueError("endpoint mismatch: s1 target differs from s2 source")
    a1, a3 = s1.source, s2.target
    if s1.k == 0 or s2.k == 0:
        if s1.k == 0 and s2.k == 0:
            return SectionElement(a1, a3, {0: s2.coeffs.get(0, 0) @ s1.coeffs.get(0, 0)})
        if s1.k == 0:
            f = s1.coeffs.get(0)
            if f is None:
                return SectionElement(a1, a3, {})
            return SectionElement(a1, a3, _intertwine_right(s2, f))
        f = s2.coeffs.get(0)
        if f is None:
            return SectionElement(a1, a3, {})
        return SectionElement(a1, a3, {j: f @ c for j, c in s1.coeffs.items()})
    if s1.k < 0 or s2.k < 0:
        raise ValueError("degree mismatch: negative-degree composition")
    if not s1.coeffs or not s2.coeffs:
        return SectionElement(a1, a3, {})
    data, fit, hold, mat, scale, cond = _design(a1, a3, tau, seed)
    if cond > 1e8:
        raise IllConditionedError(f"condition estimate {cond:.3g} above 1e8")
    prod = np.einsum("nij,njk->nik", section_eval(s2, fit, tau), section_eval(s1, fit, tau))
    rhs = prod.reshape(-1)
    coef, *_ = np.linalg.lstsq(mat / scale[:, None], rhs / scale, rcond=None)
    coeffs: dict = {}
    for (j, e), c in zip(data.basis, coef):
        coeffs[j] = coeffs.get(j, 0) + c * e
    out = SectionElement(a1, a3, coeffs)
    if len(hold):
        want = np.einsum("nij,njk->nik", section_eval(s2, hold, tau),
                         section_eval(s1, hold, tau))
        got = section_eval(out, hold, tau)
        resid = np.max(np.abs(want - got) / np.maximum(1.0, np.abs(want)))
        if resid > tol:
            raise IllConditionedError(f"held-out residual {resid:.3g} exceeds {tol:g}")
    return out


def _intertwine_right(s: SectionElement, f: np.ndarray) -> dict:
    # Psi commutes with an intertwiner f (f N1 = N0 f): Psi(g (x) F) f = Psi(g (x) F f)
    return {j: c @ f for j, c in s.coeffs.items()}


def compose_closed_scalar(s1: SectionElement, s2: SectionElement, tau: TorusModulus,
                          tol: float = DEFAULT_TOL) -> SectionElement:
    """Rank-one composition through the theta addition formula.

    With ``k1 = n2 - n1``, ``k2 = n3 - n2``, ``k = k1 + k2`` and basis labels
    ``j1``, ``j2``, the product of ``f_{j1}`` and ``f_{j2}`` contributes to
    ``f_{c_j mod k}`` (``c_j = j k1 + j1 + j2``) the constant
    ``theta[(k2 c_j - k j2)/(k1 k2 k), 0](k1 k2 k tau, k1 k2 (w1 - w2))``.
    """
    for s in (s1, s2):
        if s.source.fiber_dim != 1 or s.target.fiber_dim != 1:
            raise ValueError("closed form needs rank-one bundles")
        if s.k <= 0:
            raise ValueError("closed form needs positive degree twists on both factors")
        for v in (s.delta, s.beta):
            if not isinstance(v, Fraction):
                raise ValueError("closed form needs rational twists")
    if s1.target != s2.source:
        raise ValueError("endpoint mismatch: s1 target differs from s2 source")
    k1, k2 = s1.k, s2.k
    k = k1 + k2
    dw_tau = k1 * k2 * (s1.delta - s2.delta)
    dw_real = k1 * k2 * (s1.beta - s2.beta)
    coeffs = {}
    for j1, c1 in s1.coeffs.items():
        for j2, c2 in s2.coeffs.items():
            for j in range(k):
                cj = j * k1 + j1 + j2
                p = ThetaParams(Fraction(k2 * cj - k * j2, k1 * k2 * k),
                                shift_tau=dw_tau, shift_real=dw_real, level=k1 * k2 * k)
                val = theta_eval(p, tau, 0.0, tol)
                coeffs[cj % k] = coeffs.get(cj % k, 0) + val * (c2 @ c1)
    return SectionElement(s1.source, s2.target, coeffs)


# -- torsion ------------------------------------------------------------------

def _same_point(s1: TorsionDesc, s2: TorsionDesc) -> bool:
    return s1.a == s2.a and s1.b == s2.b


def hom_torsion(s1: TorsionDesc, s2: TorsionDesc) -> list[np.ndarray]:
    """``{f : f N1 = N2 f}`` when the supports agree, else empty."""
    if not _same_point(s1, s2):
        return []
    return sylvester_kernel(s1.nil.entries, s2.nil.entries)


def hom_bundle_torsion(src, dst) -> tuple[int, str]:
    """Dimension and tag of the degree-0 homs between a bundle and a torsion sheaf."""
    if isinstance(src, BundleDesc) and isinstance(dst, TorsionDesc):
        return src.rank * dst.fiber_dim, "fiber-hom V*(x)V'"
    if isinstance(src, TorsionDesc) and isinstance(dst, BundleDesc):
        return 0, "zero"
    raise TypeError("expected one bundle and one torsion sheaf")


# -- dimensions, Serre duality and Riemann-Roch --------------------------------

Sheaf = BundleDesc | TorsionDesc


def _slope(s: Sheaf) -> float:
    if isinstance(s, TorsionDesc):
        return math.inf
    return s.degree / s.level


def hom_dim(s1: Sheaf, s2: Sheaf, degree: int = 0) -> int:
    """``dim Ext^degree(s1, s2)``; degree 1 via Serre duality ``Hom(s2, s1)``."""
    if degree == 1:
        return hom_dim(s2, s1, 0)
    if degree != 0:
        return 0
    if isinstance(s1, TorsionDesc) and isinstance(s2, TorsionDesc):
        return len(hom_torsion(s1, s2))
    if isinstance(s1, TorsionDesc) or isinstance(s2, TorsionDesc):
        return hom_bundle_torsion(s1, s2)[0]
    if s1.level == 1 and s2.level == 1:
        return len(hom_basis(s1, s2).basis)
    # semistable bundles of different slopes: Hom = chi when mu1 < mu2, else 0
    mu1, mu2 = _slope(s1), _slope(s2)
    if mu1 < mu2:
        return s1.rank * s2.total_degree - s2.rank * s1.total_degree
    if mu1 > mu2:
        return 0
    raise NotImplementedError("equal-slope homs between pushforwards are not tabulated")


def riemann_roch_check(a: BundleDesc) -> tuple[int, int, int, int]:
    """``(h0, h1, deg, rank)``; raises if ``h0 - h1 != deg``."""
    o = BundleDesc(0, 0, 0, NilpotentMatrix.zero(1))
    h0 = len(hom_basis(o, a).basis)
    h1 = len(hom_basis(a, o).basis)
    deg = a.total_degree
    if h0 - h1 != deg:
        raise AssertionError(f"Riemann-Roch failed: h0={h0}, h1={h1}, deg={deg}")
    return h0, h1, deg, a.rank


def euler_char(s1: Sheaf, s2: Sheaf) -> int:
    """``chi(s1, s2) = rank(s1) deg(s2) - rank(s2) deg(s1)``."""
    def rk_deg(s):
        if isinstance(s, TorsionDesc):
            return 0, s.fiber_dim
        return s.rank, s.total_degree
    r1, d1 = rk_deg(s1)
    r2, d2 = rk_deg(s2)
    return r1 * d2 - r2 * d1


def ext1_dim(s1: Sheaf, s2: Sheaf) -> int:
    """``dim Ext^1(s1, s2) = dim Hom(s1, s2) - chi(s1, s2)``."""
    return hom_dim(s1, s2, 0) - euler_char(s1, s2)
