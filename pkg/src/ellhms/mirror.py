"""The mirror functor on objects and morphisms, and the isogeny functors.

Conventions: ``pi_r : E_{r tau} -> E_tau`` is the r-fold cover on the complex
side, and ``p_r : E^{r tau} -> E^{tau}``, ``(x, y) -> (r x, y)`` on the
symplectic side.  A bundle ``L(phi) (x) F(V, exp N)`` of degree ``n`` and twist
``a tau + b`` goes to the brane ``y = n x - a`` with monodromy
``exp(-2 pi i b) exp(N)`` and grading ``arctan(n)/pi``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .fukaya import (Brane, BraneTuple, PointSum, intersections, point_key,
                     principal_grading, reduce_slope)
from .numerics import NilpotentMatrix, TorusModulus, nilpotent_exp
from .sheaves import BundleDesc, SectionElement, TorsionDesc


# -- objects ------------------------------------------------------------------

def _phi_level_one(bd: BundleDesc) -> Brane:
    return Brane.from_local_system(bd.degree, 1, bd.a, phase_b=float(bd.b), nil=bd.nil)


def phi_object(obj):
    """Image of a bundle, torsion sheaf or tuple of those."""
    if isinstance(obj, tuple):
        return BraneTuple(tuple(phi_object(o) for o in obj))
    if isinstance(obj, TorsionDesc):
        return Brane.vertical(obj.a, phase_b=float(obj.b), nil=obj.nil)
    if isinstance(obj, BundleDesc):
        base = _phi_level_one(BundleDesc(obj.degree, obj.a, obj.b, obj.nil))
        return pushforward_brane(base, obj.level) if obj.level > 1 else base
    raise TypeError(f"cannot map {type(obj).__name__} through the mirror functor")


@dataclass(frozen=True)
class MirrorPair:
    """A complex-side object together with its brane; the brane is derived."""

    bside: object
    tau: TorusModulus
    aside: object = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "aside", phi_object(self.bside))


# -- morphisms ----------------------------------------------------------------

def phi_coefficient(k: int, delta, beta, n1: np.ndarray, n2: np.ndarray,
                    f: np.ndarray, tau: TorusModulus) -> np.ndarray:
    """``e^{-pi i tau k delta^2} exp[delta (N2 - N1^* - 2 pi i k beta)] f``.

    ``N1^*`` acts on the source side, so the matrix factor reads
    ``exp(delta N2) f exp(-delta N1)``.
    """
    d, bt = float(delta), float(beta)
    scalar = np.exp(-1j * np.pi * tau.tau * k * d * d - 2j * np.pi * k * d * bt)
    return scalar * (nilpotent_exp(n2, d) @ f @ nilpotent_exp(n1, -d))


def phi_morphism(s: SectionElement, tau: TorusModulus):
    """Image of a hom between level-one bundles.

    Positive degree: a point sum on the intersections of the two branes, the
    basis element ``f_j`` going to the point with ``x = delta + j/k``.  Degree
    zero: the intertwiner itself (a morphism between branes on one geodesic).
    """
    l1, l2 = phi_object(s.source), phi_object(s.target)
    if s.k == 0:
        return s.coeffs.get(0, np.zeros((l2.rank, l1.rank), dtype=complex))
    pts = intersections(l1, l2)
    n1, n2 = s.source.nil.entries, s.target.nil.entries
    terms = {}
    for j, f in s.coeffs.items():
        x = s.delta + Fraction(j, s.k) if isinstance(s.delta, Fraction) else float(s.delta) + j / s.k
        key = point_key((x, 0))[0]
        pt = next(p for p in pts if point_key(p)[0] == key)
        terms[pt] = phi_coefficient(s.k, s.delta, s.beta, n1, n2, f, tau)
    return PointSum(l1, l2, terms)


def phi_bundle_torsion_morphism(f, a_bundle: BundleDesc, s: TorsionDesc,
                                tau: TorusModulus) -> PointSum:
    """Image of ``f : V -> V'`` in ``Hom(A, S)``.

    With ``A`` of degree ``n`` and twist ``alpha tau + beta`` and ``S`` at
    ``-a tau - b`` the coefficient is
    ``e^{-pi i tau (n a^2 - 2 a alpha) + 2 pi i (a beta + b alpha - n a b)}
    exp((n a - alpha) N') f exp(alpha N)``.
    """
    if a_bundle.level != 1:
        raise ValueError("mixed morphisms are mapped on level-one bundles")
    f = np.array(np.atleast_2d(f), dtype=complex)
    if f.shape != (s.fiber_dim, a_bundle.fiber_dim):
        raise ValueError(f"shape {f.shape} does not match Hom(V, V')")
    n = a_bundle.degree
    al, be = float(a_bundle.a), float(a_bundle.b)
    a, b = float(s.a), float(s.b)
    scalar = np.exp(-1j * np.pi * tau.tau * (n * a * a - 2 * a * al)
                    + 2j * np.pi * (a * be + b * al - n * a * b))
    coeff = scalar * (nilpotent_exp(s.nil, n * a - al) @ f @ nilpotent_exp(a_bundle.nil, al))
    l1, l2 = phi_object(a_bundle), phi_object(s)
    (pt,) = intersections(l1, l2)
    return PointSum(l1, l2, {pt: coeff})


# -- isogenies: flat-bundle data ---------------------------------------------

def pushforward_monodromy(m: np.ndarray, r: int) -> np.ndarray:
    """Block matrix of ``(v_1, ..., v_r) -> (v_2, ..., v_r, M v_1)``."""
    m = np.atleast_2d(np.asarray(m, dtype=complex))
    d = m.shape[0]
    out = np.zeros((r * d, r * d), dtype=complex)
    for i in range(r - 1):
        out[i * d:(i + 1) * d, (i + 1) * d:(i + 2) * d] = np.eye(d)
    out[(r - 1) * d:, :d] = m
    return out


def pullback_monodromy(m: np.ndarray, r: int) -> np.ndarray:
    return np.linalg.matrix_power(np.atleast_2d(np.asarray(m, dtype=complex)), r)


# -- isogenies: bundles --------------------------------------------------------

def _check_r(r) -> int:
    if int(r) != r or r < 1:
        raise ValueError("isogeny degree must be a positive integer")
    return int(r)


def pushforward_bundle(a: BundleDesc, r: int) -> BundleDesc:
    """``pi_{r*}`` of a level-one bundle on ``E_{r tau}``."""
    r = _check_r(r)
    if a.level != 1:
        raise ValueError("pushforward is applied to level-one Atiyah forms")
    return BundleDesc(a.degree, a.a, a.b, a.nil, level=r)


def pullback_bundle(a: BundleDesc, r: int) -> BundleDesc:
    """``pi_r^*`` of a level-one bundle on ``E_tau``, living on ``E_{r tau}``.

    Degree multiplies by ``r``; the twist ``a tau + b`` becomes
    ``a (r tau) + r b`` and the flat part ``exp(N)`` becomes ``exp(N)^r``.
    """
    r = _check_r(r)
    if a.level != 1:
        raise ValueError("pullback is applied to level-one Atiyah forms")
    return BundleDesc(r * a.degree, a.a, r * a.b, NilpotentMatrix(r * a.nil.entries))


# -- isogenies: branes ---------------------------------------------------------

def _regrade(alpha: float, old: tuple[int, int], new: tuple[int, int]) -> float:
    return alpha - principal_grading(*old) + principal_grading(*new)


def pushforward_brane(o: Brane, r: int) -> Brane:
    """``p_{r*}`` of a brane on ``E^{r tau}``.

    The image of ``p x - q y = c`` is ``(p/g) x - (r q/g) y = r c/g`` with
    ``g = gcd(p, r)``; it is covered ``g`` times, so the local system has rank
    ``g`` times larger with cyclic-shift monodromy.
    """
    r = _check_r(r)
    if r == 1:
        return o
    g = math.gcd(o.p, r)
    p, q = reduce_slope(o.p // g, r * o.q // g)
    off = r * o.offset / g
    mono = pushforward_monodromy(o.monodromy, g)
    alpha = _regrade(o.alpha, (o.p, o.q), (p, q))
    return Brane(p, q, off, alpha, mono)


def pullback_brane(o: Brane, r: int):
    """``p_r^*`` of a brane on ``E^tau``: one brane or a tuple of components.

    The preimage of ``p x - q y = c`` splits into ``g = gcd(r, q)`` geodesics
    ``(p r/g) x' - (q/g) y = (c + m)/g``, each carrying ``M^{r/g}``.
    """
    r = _check_r(r)
    if r == 1:
        return o
    g = math.gcd(r, o.q)
    p, q = reduce_slope(o.p * r // g, o.q // g)
    mono = pullback_monodromy(o.monodromy, r // g)
    log = (r // g) * o.log_monodromy
    alpha = _regrade(o.alpha, (o.p, o.q), (p, q))
    comps = tuple(Brane(p, q, (o.offset + m) / g, alpha, mono, log) for m in range(g))
    return comps[0] if g == 1 else BraneTuple(comps)
