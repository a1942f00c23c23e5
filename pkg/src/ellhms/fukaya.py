"""Symplectic side: graded geodesic branes on the torus and the m2 product.

A brane is a closed geodesic ``{(x, y) : p*x - q*y = offset (mod 1)}`` with
primitive direction ``(q, p)``, a real grading ``alpha`` and a flat local
system.  The local system is stored by its monodromy matrix and a logarithm
of it; parallel transport over a fraction ``ell`` of the loop is
``expm(ell * log_monodromy)``, which makes the fibre over every point the same
vector space.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Union

import numpy as np
from scipy.linalg import expm, logm

from .numerics import (DEFAULT_TOL, NilpotentMatrix, TorusModulus,
                       nilpotent_exp, sylvester_kernel)

POINT_DECIMALS = 9
GRADING_EPS = 1e-12


class NonTransversalError(ValueError):
    """Raised when two geodesics coincide; use intertwiner homs instead."""


def _exact(v):
    if isinstance(v, Rational):
        return Fraction(v)
    v = float(v)
    return Fraction(int(v)) if v.is_integer() else v


def _mod1(v):
    v = _exact(v)
    r = v - math.floor(v)
    if isinstance(r, float) and r >= 1.0:
        r = 0.0
    return r


def _egcd(a: int, b: int) -> tuple[int, int, int]:
    if b == 0:
        return (abs(a), 1 if a >= 0 else -1, 0)
    g, s, t = _egcd(b, a % b)
    return g, t, s - (a // b) * t


def reduce_slope(p: int, q: int) -> tuple[int, int]:
    """Primitive direction with ``q > 0``, or ``(1, 0)`` for vertical lines."""
    p, q = int(p), int(q)
    if p == 0 and q == 0:
        raise ValueError("slope direction cannot be (0, 0)")
    g = math.gcd(p, q)
    p, q = p // g, q // g
    if q < 0 or (q == 0 and p < 0):
        p, q = -p, -q
    return p, q


def principal_grading(p: int, q: int) -> float:
    """Grading in (-1/2, 1/2] whose phase points along the direction (q, p)."""
    if q == 0:
        return 0.5
    return math.atan(p / q) / math.pi


@dataclass(frozen=True, eq=False)
class Brane:
    """Graded geodesic with a flat local system.

    ``offset`` plays the role of the intercept: the lift ``y = n*x - offset``
    for integer slope ``n`` (x-intercept ``offset/n``), ``x = offset`` for the
    vertical line.  Exact rationals are kept when given.
    """

    p: int
    q: int
    offset: Union[Fraction, float]
    alpha: float
    monodromy: np.ndarray = field(repr=False)
    log_monodromy: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        p, q = reduce_slope(self.p, self.q)
        if (p, q) != (self.p, self.q):
            raise ValueError(f"slope ({self.p}, {self.q}) is not reduced")
        object.__setattr__(self, "offset", _mod1(self.offset))
        alpha = float(self.alpha)
        shift = alpha - principal_grading(p, q)
        if abs(shift - round(shift)) > 1e-9:
            raise ValueError("grading is not compatible with the slope")
        object.__setattr__(self, "alpha", alpha)
        m = np.array(np.atleast_2d(self.monodromy), dtype=complex)
        if m.shape[0] != m.shape[1]:
            raise ValueError("monodromy must be square")
        eig = np.linalg.eigvals(m)
        if np.any(np.abs(np.abs(eig) - 1.0) > 1e-6):
            raise ValueError("monodromy eigenvalues must have unit modulus")
        m.setflags(write=False)
        object.__setattr__(self, "monodromy", m)
        if self.log_monodromy is None:
            lg = np.array(logm(m), dtype=complex)
        else:
            lg = np.array(np.atleast_2d(self.log_monodromy), dtype=complex)
        lg.setflags(write=False)
        object.__setattr__(self, "log_monodromy", lg)

    @classmethod
    def from_local_system(cls, p: int, q: int, offset=0, *, alpha: float | None = None,
                          phase_b=0.0, nil: NilpotentMatrix | None = None) -> "Brane":
        """Brane with monodromy ``exp(-2 pi i phase_b) * exp(nil)``."""
        p, q = reduce_slope(p, q)
        if nil is None:
            nil = NilpotentMatrix.zero(1)
        elif not isinstance(nil, NilpotentMatrix):
            nil = NilpotentMatrix(nil)
        b = float(phase_b)
        mono = np.exp(-2j * np.pi * b) * nilpotent_exp(nil)
        log = -2j * np.pi * b * np.eye(nil.dim) + nil.entries
        if alpha is None:
            alpha = principal_grading(p, q)
        return cls(p, q, offset, alpha, mono, log)

    @classmethod
    def integer_slope(cls, n: int, offset=0, **kw) -> "Brane":
        return cls.from_local_system(n, 1, offset, **kw)

    @classmethod
    def vertical(cls, x_intercept=0, **kw) -> "Brane":
        return cls.from_local_system(1, 0, x_intercept, **kw)

    # -- geometry ------------------------------------------------------------
    @property
    def rank(self) -> int:
        return self.monodromy.shape[0]

    @property
    def direction(self) -> tuple[int, int]:
        return (self.q, self.p)

    @property
    def is_vertical(self) -> bool:
        return self.q == 0

    @property
    def x_intercept(self):
        """x where the standard lift meets y = 0 (None for horizontal lines)."""
        if self.p == 0:
            return None
        return self.offset / self.p

    def same_geodesic(self, other: "Brane") -> bool:
        return (self.p, self.q) == (other.p, other.q) and _close_mod1(
            self.offset, other.offset)

    def transport(self, ell: float) -> np.ndarray:
        """Parallel transport over the signed fraction ``ell`` of the loop."""
        return expm(ell * self.log_monodromy)

    def __eq__(self, other):
        if not isinstance(other, Brane):
            return NotImplemented
        return ((self.p, self.q, self.offset, self.alpha) ==
                (other.p, other.q, other.offset, other.alpha)
                and self.monodromy.shape == other.monodromy.shape
                and np.array_equal(self.monodromy, other.monodromy))

    def __hash__(self):
        return hash((self.p, self.q, self.offset, self.alpha))

    def isclose(self, other: "Brane", tol: float = 1e-12) -> bool:
        return ((self.p, self.q) == (other.p, other.q)
                and _close_mod1(self.offset, other.offset, tol)
                and abs(self.alpha - other.alpha) < tol
                and self.monodromy.shape == other.monodromy.shape
                and np.allclose(self.monodromy, other.monodromy, atol=tol, rtol=0))

    def __repr__(self):
        return (f"Brane(slope=({self.p},{self.q}), offset={self.offset}, "
                f"alpha={self.alpha:.6g}, rank={self.rank})")


@dataclass(frozen=True)
class BraneTuple:
    """Formal biproduct: an ordered tuple of branes (empty = zero object)."""

    branes: tuple[Brane, ...] = ()

    def __iter__(self):
        return iter(self.branes)

    def __len__(self):
        return len(self.branes)


Object = Union[Brane, BraneTuple]


def _components(o: Object) -> tuple[Brane, ...]:
    return o.branes if isinstance(o, BraneTuple) else (o,)


def _close_mod1(a, b, tol: float = 1e-9) -> bool:
    d = a - b
    if not isinstance(d, float):
        return d == math.floor(d)
    d = d - round(d)
    return abs(d) < tol


def shift(o: Brane, n: int = 1) -> Brane:
    """Shift functor ``(L, alpha, M)[n] = (L, alpha + n, M)``."""
    return Brane(o.p, o.q, o.offset, o.alpha + int(n), o.monodromy, o.log_monodromy)


def maslov(l1: Brane, l2: Brane) -> int:
    """Maslov index ``ceil(alpha1 - alpha2)``."""
    d = l1.alpha - l2.alpha
    if abs(d - round(d)) < GRADING_EPS:
        return int(round(d))
    return math.ceil(d)


# -- intersections ------------------------------------------------------------

Point = tuple


def point_key(pt) -> tuple[float, float]:
    """Hashable key identifying a point of the torus up to rounding."""
    out = []
    for v in pt:
        f = float(v) % 1.0
        f = round(f, POINT_DECIMALS)
        if f >= 1.0:
            f = 0.0
        out.append(f + 0.0)
    return tuple(out)


def intersection_index(l1: Brane, l2: Brane, pt) -> int | None:
    """Label ``j`` with ``x = delta + j/k`` for integer-slope pairs, else None."""
    if l1.q != 1 or l2.q != 1:
        return None
    k = l2.p - l1.p
    delta = (l2.offset - l1.offset) / k
    j = (float(pt[0]) - float(delta)) * k
    return int(round(j)) % abs(k)


def intersections(l1: Brane, l2: Brane) -> list[Point]:
    """Points of ``l1 & l2`` reduced into [0,1)^2.

    Integer-slope pairs are ordered by the label ``j`` in ``x = delta + j/k``
    with ``k = n2 - n1`` and ``delta = (offset2 - offset1)/k``; other pairs by
    coordinates.
    """
    det = l2.p * l1.q - l1.p * l2.q
    if det == 0:
        if l1.same_geodesic(l2):
            raise NonTransversalError("identical geodesics have no transversal points")
        return []
    n = abs(det)
    pts: dict[tuple, Point] = {}
    for m1 in range(n):
        for m2 in range(n):
            r1 = l1.offset + m1
            r2 = l2.offset + m2
            # [[p1, -q1], [p2, -q2]] (x, y) = (r1, r2)
            x = (-l2.q * r1 + l1.q * r2) / det
            y = (-l2.p * r1 + l1.p * r2) / det
            pt = (_mod1(x), _mod1(y))
            pts.setdefault(point_key(pt), pt)
    out = list(pts.values())
    if len(out) != n:
        raise RuntimeError("intersection count mismatch")
    if l1.q == 1 and l2.q == 1:
        out.sort(key=lambda pt: intersection_index(l1, l2, pt))
    else:
        out.sort(key=lambda pt: point_key(pt))
    return out


# -- hom spaces ---------------------------------------------------------------

def intertwiner_hom(o1: Brane, o2: Brane) -> list[np.ndarray]:
    """Basis of ``{f : f M1 = M2 f}`` for branes on the same geodesic."""
    if not o1.same_geodesic(o2):
        raise ValueError("intertwiners need a common geodesic")
    return sylvester_kernel(o1.monodromy, o2.monodromy)


def _hom_degree0(o1: Brane, o2: Brane) -> int:
    gap = o2.alpha - o1.alpha
    if o1.same_geodesic(o2) and (o1.p, o1.q) == (o2.p, o2.q):
        if abs(gap) < GRADING_EPS or abs(gap - 1.0) < GRADING_EPS:
            # H^1 of the circle has the same dimension as H^0 (Euler char 0)
            return len(intertwiner_hom(o1, o2))
        return 0
    if not (-GRADING_EPS <= gap < 1.0 - GRADING_EPS):
        return 0
    det = abs(o2.p * o1.q - o1.p * o2.q)
    return det * o1.rank * o2.rank


def hom_dim(o1: Object, o2: Object, degree: int = 0) -> int:
    """Dimension of ``Hom(o1, o2[degree])`` in the degree-0 truncation."""
    total = 0
    for a in _components(o1):
        for b in _components(o2):
            total += _hom_degree0(a, shift(b, degree))
    return total


# -- morphisms ----------------------------------------------------------------

@dataclass
class PointSum:
    """Morphism as a formal sum of intersection points with matrix coefficients.

    ``terms`` maps a point (tuple in [0,1)^2) to a matrix of shape
    ``(target.rank, source.rank)``.
    """

    source: Brane
    target: Brane
    terms: dict = field(default_factory=dict)
    degree: int = 0

    def __post_init__(self):
        clean = {}
        for pt, c in dict(self.terms).items():
            c = np.array(np.atleast_2d(c), dtype=complex)
            if c.shape != (self.target.rank, self.source.rank):
                raise ValueError(f"coefficient shape {c.shape} does not match fibres")
            pt = tuple(_mod1(v) for v in pt)
            key = point_key(pt)
            match = next((p0 for p0 in clean if point_key(p0) == key), None)
            if match is None:
                clean[pt] = c
            else:
                clean[match] = clean[match] + c
        self.terms = clean
        self.degree = maslov(self.source, self.target)

    def coeff_at(self, pt) -> np.ndarray:
        key = point_key(pt)
        for p0, c in self.terms.items():
            if point_key(p0) == key:
                return c
        return np.zeros((self.target.rank, self.source.rank), dtype=complex)

    def scaled(self, a: complex) -> "PointSum":
        return PointSum(self.source, self.target, {p: a * c for p, c in self.terms.items()})

    def __add__(self, other: "PointSum") -> "PointSum":
        merged = {}
        for p in list(self.terms) + list(other.terms):
            merged[point_key(p)] = p
        return PointSum(self.source, self.target,
                        {p: self.coeff_at(p) + other.coeff_at(p) for p in merged.values()})

    def max_abs_diff(self, other: "PointSum") -> float:
        keys = {point_key(p): p for p in list(self.terms) + list(other.terms)}
        if not keys:
            return 0.0
        return max(float(np.max(np.abs(self.coeff_at(p) - other.coeff_at(p))))
                   for p in keys.values())


def _unimodular_partner(d: tuple[int, int]) -> np.ndarray:
    """Integer vector ``e`` with ``det[d, e] = 1``."""
    dx, dy = d
    g, s, t = _egcd(dx, dy)  # s*dx + t*dy = 1
    if g != 1:
        raise ValueError("direction is not primitive")
    # det[[dx, ex], [dy, ey]] = dx*ey - dy*ex = 1  with ey = s, ex = -t
    return np.array([-t, s], dtype=float)


def _line_meet(p0, d0, p1, d1) -> np.ndarray:
    a = np.array([[d0[0], -d1[0]], [d0[1], -d1[1]]], dtype=float)
    s, _ = np.linalg.solve(a, np.asarray(p1, float) - np.asarray(p0, float))
    return np.asarray(p0, float) + s * np.asarray(d0, float)


def _cross(u, v) -> float:
    return float(u[0] * v[1] - u[1] * v[0])


def _param(delta_vec, d) -> float:
    d = np.asarray(d, float)
    return float(np.dot(delta_vec, d) / np.dot(d, d))


def m2(u1: PointSum, u2: PointSum, tau: TorusModulus, tol: float = DEFAULT_TOL,
       self_check: bool = False) -> PointSum:
    """Composition ``u2 o u1`` counted by lifted holomorphic triangles.

    For input points ``p0`` (of ``L0 & L1``) and ``p1`` (of ``L1 & L2``) a lift
    ``P0`` of ``p0`` is fixed; the lifts ``P1 = P0 + t*d1`` of ``p1`` along the
    lift of ``L1`` through ``P0`` are enumerated, and the lift of ``L2`` through
    ``P1`` meets the lift of ``L0`` through ``P0`` in the third vertex.  A
    triangle traversed ``P2 -> P0 -> P1 -> P2`` counts when that cycle is
    clockwise in (x, y) (or degenerate), with weight
    ``exp(2 pi i tau Area)`` times the boundary holonomy
    ``P_{L2} u2 P_{L1} u1 P_{L0}``.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    if u1.target != u2.source and not u1.target.isclose(u2.source):
        raise ValueError("endpoint mismatch: u1 target differs from u2 source")
    l0, l1, l2 = u1.source, u1.target, u2.target
    for a, b in ((l0, l1), (l1, l2), (l0, l2)):
        if (a.p * b.q - b.p * a.q) == 0:
            raise NonTransversalError("m2 needs pairwise transversal geodesics")
    targets = intersections(l0, l2)
    out = {pt: np.zeros((l2.rank, l0.rank), dtype=complex) for pt in targets}
    target_keys = {point_key(pt): pt for pt in targets}

    d0, d1, d2 = (np.array(l.direction, float) for l in (l0, l1, l2))
    e1 = _unimodular_partner(l1.direction)
    tau_c = tau.tau

    for p0, c1 in u1.terms.items():
        P0 = np.array([float(p0[0]), float(p0[1])])
        for p1, c2 in u2.terms.items():
            w = np.array([float(p1[0]), float(p1[1])]) - P0
            t_star = _cross(w, e1)  # w = t*d1 + s*e1 with det[d1, e1] = 1
            t_star -= math.floor(t_star)
            # triangle scales as t^2 about P0
            unit_p2 = _line_meet(P0, d0, P0 + d1, d2)
            c_area = abs(_cross(d1, unit_p2 - P0)) / 2.0
            lam = (abs(_param(unit_p2 - P0, d0)) + 1.0 + abs(_param(unit_p2 - P0 - d1, d2)))
            norms = sum(float(np.abs(l.log_monodromy - np.diag(np.diag(l.log_monodromy))).max())
                        for l in (l0, l1, l2))
            dims = l0.rank + l1.rank + l2.rank
            scale = float(np.abs(c1).max() * np.abs(c2).max())
            window = _window(c_area * tau.area, lam * max(norms, 0.0), dims, scale, tol)
            if self_check:
                window *= 2
            for m in range(-window - 1, window + 2):
                t = t_star + m
                P1 = P0 + t * d1
                P2 = _line_meet(P0, d0, P1, d2)
                signed = _cross(P1 - P0, P2 - P0)
                if signed > 1e-12:
                    continue
                area = abs(signed) / 2.0
                key = point_key(P2)
                if key not in target_keys:
                    raise RuntimeError("triangle vertex is not an intersection point")
                ell0 = _param(P0 - P2, d0)
                ell1 = t
                ell2 = _param(P2 - P1, d2)
                hol = (l2.transport(ell2) @ c2 @ l1.transport(ell1) @ c1
                       @ l0.transport(ell0))
                out[target_keys[key]] += np.exp(2j * np.pi * tau_c * area) * hol
    return PointSum(l0, l2, out)


def _window(eff: float, lam: float, dims: int, scale: float, tol: float) -> int:
    """Half-width in the lift index past which the remaining terms are < tol."""
    if eff <= 0:
        raise NonTransversalError("degenerate triangle family")
    log_tol = math.log(tol) - math.log(8.0) - math.log(max(scale, 1e-300))
    t = 1
    while True:
        val = -2 * math.pi * eff * t * t + dims * math.log1p(lam * (t + 1))
        nxt = -2 * math.pi * eff * (t + 1) ** 2 + dims * math.log1p(lam * (t + 2))
        if val < log_tol and nxt - val < -math.log(2.0):
            return t + 1
        t += 1
        if t > 100000:
            raise RuntimeError("m2 enumeration window did not close")


def act_intertwiner(u: PointSum, f: np.ndarray, *, on: str = "target",
                    new_end: Brane | None = None) -> PointSum:
    """Compose a point sum with an intertwiner on its target or source."""
    f = np.asarray(f, dtype=complex)
    if on == "target":
        end = new_end or u.target
        return PointSum(u.source, end, {p: f @ c for p, c in u.terms.items()})
    end = new_end or u.source
    return PointSum(end, u.target, {p: c @ f for p, c in u.terms.items()})
