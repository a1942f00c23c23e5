"""Verification suites comparing the two sides of the mirror.

Every suite returns :class:`VerificationReport` objects.  Integer-valued checks
report the largest absolute mismatch with tolerance 0.5, so they pass exactly
when every count agrees.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import fukaya as fk
from . import sheaves as sh
from .mirror import (phi_morphism, phi_object, pullback_brane, pullback_bundle,
                     pushforward_brane, pushforward_bundle)
from .numerics import (NilpotentMatrix, ThetaParams, TorusModulus, coordinates,
                       theta_deriv_eval, theta_eval)

INTEGER_TOL = 0.5


@dataclass(frozen=True)
class VerificationReport:
    name: str
    cases: int
    max_abs_error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(self.max_abs_error < self.tolerance)

    def to_dict(self) -> dict:
        return {"name": self.name, "cases": self.cases, "max_abs_error": self.max_abs_error,
                "tolerance": self.tolerance, "pass": self.passed}


def _report(name, errors, tol) -> VerificationReport:
    errors = list(errors)
    worst = max(errors) if errors else 0.0
    if any(math.isnan(e) for e in errors):
        worst = math.inf
    return VerificationReport(name, len(errors), float(worst), float(tol))


def _fundamental_points(rng, tau: TorusModulus, count: int) -> np.ndarray:
    u = rng.random((count, 2))
    return u[:, 0] + u[:, 1] * tau.tau


# -- theta identities ---------------------------------------------------------

def verify_theta(tau: TorusModulus, seed: int = 0, count: int = 200,
                 tol: float = 1e-10) -> list[VerificationReport]:
    rng = np.random.default_rng(seed)
    z = _fundamental_points(rng, tau, count)
    p = ThetaParams()
    t = tau.tau
    th = theta_eval(p, tau, z)
    out = [
        _report("theta-periodic", np.abs(theta_eval(p, tau, z + 1) - th), tol),
        _report("theta-quasi-periodic",
                np.abs(np.exp(1j * np.pi * (t + 2 * z)) * theta_eval(p, tau, z + t) - th), tol),
        _report("theta-even", np.abs(theta_eval(p, tau, -z) - th), tol),
        _report("theta-reflection",
                np.abs(theta_eval(p, tau, t / 2 - z)
                       - np.exp(2j * np.pi * z) * theta_eval(p, tau, t / 2 + z)), tol),
    ]
    # zeros: exactly at 1/2 + tau/2 mod lattice, simple, none elsewhere
    lat = rng.integers(-2, 3, size=(count, 2))
    zeros = 0.5 + t / 2 + lat[:, 0] + lat[:, 1] * t
    at_zero = np.abs(theta_eval(p, tau, zeros)) / np.maximum(1.0, np.abs(np.exp(
        -1j * np.pi * (lat[:, 1] ** 2 * t + 2 * lat[:, 1] * (zeros - lat[:, 1] * t)))))
    deriv = np.abs(theta_deriv_eval(p, tau, 0.5 + t / 2, 1))
    away = np.abs(z - (0.5 + t / 2)) > 0.05
    nonzero = np.abs(th[away]).min() if np.any(away) else 1.0
    errs = list(at_zero) + [0.0 if deriv > 1e-3 and nonzero > 1e-8 else math.inf]
    out.append(_report("theta-zeros", errs, tol))
    return out


# -- addition formula ---------------------------------------------------------

def addition_residual(n1: int, n2: int, a, b, z1, z2, tau: TorusModulus) -> float:
    """Relative residual of the two-factor theta addition formula."""
    k = n1 + n2
    lhs = (theta_eval(ThetaParams(Fraction(a) / n1, level=n1), tau, z1)
           * theta_eval(ThetaParams(Fraction(b) / n2, level=n2), tau, z2))
    rhs = 0
    for j in range(k):
        c = j * n1 + Fraction(a) + Fraction(b)
        rhs = rhs + (theta_eval(ThetaParams(c / k, level=k), tau, z1 + z2)
                     * theta_eval(ThetaParams((n2 * c - k * Fraction(b)) / (n1 * n2 * k),
                                              level=n1 * n2 * k), tau, n2 * z1 - n1 * z2))
    return float(np.max(np.abs(lhs - rhs) / np.maximum(np.abs(lhs), 1e-300)))


def verify_addition(tau: TorusModulus, seed: int = 0, count: int = 20,
                    tol: float = 1e-8) -> list[VerificationReport]:
    rng = np.random.default_rng(seed)
    chars = (Fraction(0), Fraction(1, 2), Fraction(1, 3))
    errs = []
    for n1 in (1, 2, 3):
        for n2 in (1, 2, 3):
            for a in chars:
                for b in chars:
                    z1 = _fundamental_points(rng, tau, count)
                    z2 = _fundamental_points(rng, tau, count)
                    errs.append(addition_residual(n1, n2, a, b, z1, z2, tau))
    z = _fundamental_points(rng, tau, count)
    x = _fundamental_points(rng, tau, count)
    two = ThetaParams(level=2)
    half = ThetaParams(Fraction(1, 2), level=2)
    lhs = theta_eval(ThetaParams(), tau, z) * theta_eval(ThetaParams(), tau, z + x)
    rhs = (theta_eval(two, tau, x) * theta_eval(two, tau, 2 * z + x)
           + theta_eval(half, tau, x) * theta_eval(half, tau, 2 * z + x))
    special = np.abs(lhs - rhs) / np.maximum(np.abs(lhs), 1e-300)
    return [_report("addition-formula", errs, tol),
            _report("addition-special-case", special, tol)]


# -- composition through the functor -----------------------------------------

def _basis_elements(a1, a2):
    data = sh.hom_basis(a1, a2)
    if data.k == 0:
        return [sh.SectionElement(a1, a2, {0: f}) for f in data.basis]
    return [sh.SectionElement(a1, a2, {j: e}) for j, e in data.basis]


def functoriality_residual(s1, s2, tau: TorusModulus) -> float:
    """``max |Phi(s2 o s1) - m2(Phi s1, Phi s2)|`` over coefficients."""
    lhs = phi_morphism(sh.compose(s1, s2, tau), tau)
    u1, u2 = phi_morphism(s1, tau), phi_morphism(s2, tau)
    if isinstance(u1, np.ndarray) and isinstance(u2, np.ndarray):
        rhs = u2 @ u1
        return float(np.max(np.abs(lhs - rhs)))
    if isinstance(u1, np.ndarray):
        rhs = fk.act_intertwiner(u2, u1, on="source", new_end=phi_object(s1.source))
    elif isinstance(u2, np.ndarray):
        rhs = fk.act_intertwiner(u1, u2, on="target", new_end=phi_object(s2.target))
    else:
        rhs = fk.m2(u1, u2, tau)
    return lhs.max_abs_diff(rhs)


def verify_functoriality(a1, a2, a3, tau: TorusModulus, samples: int | None = None,
                         tol: float = 1e-8, seed: int = 0,
                         name: str = "functoriality") -> VerificationReport:
    """Residual over pairs of basis morphisms (a random subset if ``samples``)."""
    pairs = [(s1, s2) for s1 in _basis_elements(a1, a2) for s2 in _basis_elements(a2, a3)]
    if samples is not None and len(pairs) > samples:
        rng = np.random.default_rng(seed)
        pairs = [pairs[i] for i in sorted(rng.choice(len(pairs), samples, replace=False))]
    return _report(name, [functoriality_residual(s1, s2, tau) for s1, s2 in pairs], tol)


def _rand_frac(rng, max_den: int = 6) -> Fraction:
    den = int(rng.integers(1, max_den + 1))
    return Fraction(int(rng.integers(0, den)), den)


def _rand_nil(rng, max_rank: int = 2) -> NilpotentMatrix:
    d = int(rng.integers(1, max_rank + 1))
    if d > 1 and rng.random() < 0.75:
        return NilpotentMatrix.jordan(d)
    return NilpotentMatrix.zero(d)


def random_bundle(rng, degree: int, max_rank: int = 2) -> sh.BundleDesc:
    return sh.BundleDesc(degree, _rand_frac(rng), _rand_frac(rng), _rand_nil(rng, max_rank))


def functoriality_sweep(tau: TorusModulus, seed: int = 0, triples: int = 50,
                        samples: int | None = None, tol: float = 1e-8) -> VerificationReport:
    """Random triples with integer slopes ``0 <= n1 < n2 < n3 <= 4``."""
    rng = np.random.default_rng(seed)
    errs = []
    for _ in range(triples):
        ns = sorted(int(v) for v in rng.choice(5, 3, replace=False))
        objs = [random_bundle(rng, n) for n in ns]
        rep = verify_functoriality(*objs, tau, samples=samples, tol=tol,
                                   seed=int(rng.integers(2**31)))
        errs.append(rep.max_abs_error)
    return _report("functoriality-sweep", errs, tol)


def simple_example(tau: TorusModulus, tol: float = 1e-10) -> list[VerificationReport]:
    """Slopes 0, 1, 2: plain, shifted by ``x0 = 0.2`` and with connection 0.15."""
    x0, beta = Fraction(1, 5), Fraction(3, 20)
    l0, l1 = fk.Brane.integer_slope(0), fk.Brane.integer_slope(1)
    e = fk.PointSum(l0, l1, {(0, 0): 1.0})
    cases = {
        "simple-example": (fk.Brane.integer_slope(2), Fraction(0), Fraction(0)),
        "simple-example-shifted": (fk.Brane.integer_slope(2, 2 * x0), x0, Fraction(0)),
        "simple-example-connection": (fk.Brane.integer_slope(2, 2 * x0, phase_b=float(beta)),
                                      x0, beta),
    }
    out = []
    for name, (l2, shift, b) in cases.items():
        pts = fk.intersections(l1, l2)
        e2 = fk.PointSum(l1, l2, {pts[0]: 1.0})
        got = fk.m2(e, e2, tau)
        errs = []
        for j in (0, 1):
            want = theta_eval(ThetaParams(shift + Fraction(j, 2), shift_real=b, level=2), tau, 0)
            errs.append(abs(got.coeff_at((float(shift) + j / 2, 0))[0, 0] - want))
        out.append(_report(name, errs, tol))
    o, lb = sh.BundleDesc(0), sh.BundleDesc(1)
    errs = []
    for a2, b2 in ((0, 0), (2 * x0, 0), (2 * x0, beta)):
        l2b = sh.BundleDesc(2, a2, b2)
        errs.append(verify_functoriality(o, lb, l2b, tau, tol=1e-9).max_abs_error)
    out.append(_report("simple-example-functor", errs, 1e-9))
    return out


# -- dimensions ----------------------------------------------------------------

def _random_sheaf(rng, max_deg: int = 4):
    if rng.random() < 0.2:
        return sh.TorsionDesc(_rand_frac(rng), _rand_frac(rng), _rand_nil(rng))
    bd = random_bundle(rng, int(rng.integers(-max_deg, max_deg + 1)))
    if rng.random() < 0.3:
        # equal twists make the same-geodesic branch reachable
        bd = sh.BundleDesc(bd.degree, 0, 0, bd.nil)
    return bd


def verify_dimensions(seed: int = 0, pairs: int = 100) -> list[VerificationReport]:
    rng = np.random.default_rng(seed)
    basis_vs_points, rr, serre_b, serre_a, mirror = [], [], [], [], []
    for _ in range(pairs):
        s1, s2 = _random_sheaf(rng), _random_sheaf(rng)
        o1, o2 = phi_object(s1), phi_object(s2)
        if isinstance(s1, sh.BundleDesc) and isinstance(s2, sh.BundleDesc):
            lo, hi = (s1, s2) if s1.degree <= s2.degree else (s2, s1)
            size = len(sh.hom_basis(lo, hi).basis)
            if lo.degree < hi.degree:
                count = len(fk.intersections(phi_object(lo), phi_object(hi)))
                count *= lo.fiber_dim * hi.fiber_dim
            else:
                count = fk.hom_dim(phi_object(lo), phi_object(hi), 0)
            basis_vs_points.append(abs(count - size))
            for a in (s1, s2):
                h0, h1, deg, _ = sh.riemann_roch_check(a)
                rr.append(abs(h0 - h1 - deg))
        serre_b.append(abs(sh.ext1_dim(s1, s2) - sh.hom_dim(s2, s1, 0)))
        serre_a.append(abs(fk.hom_dim(o1, o2, 1) - fk.hom_dim(o2, o1, 0)))
        mirror.append(abs(sh.hom_dim(s1, s2, 0) - fk.hom_dim(o1, o2, 0))
                      + abs(sh.ext1_dim(s1, s2) - fk.hom_dim(o1, o2, 1)))
    return [_report("dims-basis-vs-intersections", basis_vs_points, INTEGER_TOL),
            _report("dims-riemann-roch", rr, INTEGER_TOL),
            _report("dims-serre-bside", serre_b, INTEGER_TOL),
            _report("dims-serre-aside", serre_a, INTEGER_TOL),
            _report("dims-mirror", mirror, INTEGER_TOL)]


# -- isogenies -------------------------------------------------------------------

def _random_brane(rng):
    p, q = int(rng.integers(-3, 4)), int(rng.integers(0, 4))
    if p == 0 and q == 0:
        q = 1
    p, q = fk.reduce_slope(p, q)
    return fk.Brane.from_local_system(p, q, _rand_frac(rng), phase_b=float(_rand_frac(rng)),
                                      nil=_rand_nil(rng))


def verify_isogeny_duality(r: int, samples: int = 20, seed: int = 0) -> VerificationReport:
    """Both adjunctions, on both sides, as dimension equalities."""
    rng = np.random.default_rng(seed)
    errs = []
    for _ in range(samples):
        lo, hi = _random_brane(rng), _random_brane(rng)  # lo on E^tau, hi on E^{r tau}
        for deg in (0, 1):
            errs.append(abs(fk.hom_dim(pullback_brane(lo, r), hi, deg)
                            - fk.hom_dim(lo, pushforward_brane(hi, r), deg)))
            errs.append(abs(fk.hom_dim(pushforward_brane(hi, r), lo, deg)
                            - fk.hom_dim(hi, pullback_brane(lo, r), deg)))
        a = random_bundle(rng, int(rng.integers(-3, 4)))
        b = random_bundle(rng, int(rng.integers(-3 * r, 3 * r + 1)))
        if b.degree == r * a.degree:
            b = sh.BundleDesc(b.degree + 1, b.a, b.b, b.nil)
        pb, pf = pullback_bundle(a, r), pushforward_bundle(b, r)
        errs.append(abs(sh.hom_dim(pb, b) - sh.hom_dim(a, pf)))
        errs.append(abs(sh.hom_dim(pf, a) - sh.hom_dim(b, pb)))
    return _report(f"isogeny-duality-r{r}", errs, INTEGER_TOL)


def verify_isogeny_objects(seed: int = 0, count: int = 20) -> VerificationReport:
    """``Phi(pi_{r*} A) == p_{r*} Phi(A)`` as exact object data."""
    rng = np.random.default_rng(seed)
    errs = []
    for _ in range(count):
        r = int(rng.integers(2, 4))
        a = random_bundle(rng, int(rng.integers(-4, 5)))
        errs.append(0 if phi_object(pushforward_bundle(a, r)) == pushforward_brane(
            phi_object(a), r) else 1)
    return _report("isogeny-objects", errs, INTEGER_TOL)


# -- torsion ------------------------------------------------------------------

def _composition_table(b12, b23, b13):
    rows = []
    for f1 in b12:
        for f2 in b23:
            rows.append(np.round(coordinates(b13, f2 @ f1), 8) + 0.0)
    return np.array(rows)


def verify_torsion(seed: int = 0, count: int = 30) -> VerificationReport:
    """Composition tables of torsion homs against vertical-brane intertwiners."""
    rng = np.random.default_rng(seed)
    nils = [NilpotentMatrix.zero(1), NilpotentMatrix.zero(2), NilpotentMatrix.jordan(2),
            NilpotentMatrix.jordan(3), NilpotentMatrix(np.eye(3, k=1) * [1, 0, 0])]
    errs = []
    for case in range(count):
        a = _rand_frac(rng)
        bs = [_rand_frac(rng, 3) for _ in range(3)]
        if case % 3:
            bs = [bs[0]] * 3
        ss = [sh.TorsionDesc(a, b, nils[int(rng.integers(len(nils)))]) for b in bs]
        bb = [sh.hom_torsion(ss[i], ss[j]) for i, j in ((0, 1), (1, 2), (0, 2))]
        ls = [phi_object(s) for s in ss]
        ab = [fk.intertwiner_hom(ls[i], ls[j]) for i, j in ((0, 1), (1, 2), (0, 2))]
        same_bases = all(len(x) == len(y) and all(np.array_equal(u, v) for u, v in zip(x, y))
                         for x, y in zip(bb, ab))
        tb = _composition_table(*bb) if bb[2] else np.zeros(0)
        ta = _composition_table(*ab) if ab[2] else np.zeros(0)
        same_tables = tb.shape == ta.shape and np.array_equal(tb, ta)
        errs.append(0 if same_bases and same_tables else 1)
    return _report("torsion-tables", errs, INTEGER_TOL)


# -- automorphy ------------------------------------------------------------------

def verify_automorphy(tau: TorusModulus, seed: int = 0, count: int = 20,
                      tol: float = 1e-10) -> VerificationReport:
    """Twisted sections satisfy both quasi-periodicity laws (normalised)."""
    rng = np.random.default_rng(seed)
    errs = []
    for _ in range(count):
        n1 = int(rng.integers(-2, 2))
        a1 = sh.BundleDesc(n1, _rand_frac(rng), _rand_frac(rng), NilpotentMatrix.jordan(2))
        a2 = sh.BundleDesc(n1 + int(rng.integers(1, 4)), _rand_frac(rng), _rand_frac(rng),
                           NilpotentMatrix.jordan(2))
        coeffs = {j: rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
                  for j in range(a2.degree - a1.degree)}
        s = sh.SectionElement(a1, a2, coeffs)
        z = _fundamental_points(rng, tau, 8)
        base = sh.section_eval(s, z, tau)
        scale = np.maximum(1.0, np.abs(base).max(axis=(1, 2)))
        errs.extend(np.abs(sh.section_eval(s, z + 1, tau) - base).max(axis=(1, 2)) / scale)
        c, left, right = sh.automorphy_factor(s, z, tau)
        shifted = sh.section_eval(s, z + tau.tau, tau)
        undo = np.linalg.inv(left) @ shifted @ np.linalg.inv(right) / c[:, None, None]
        errs.extend(np.abs(undo - base).max(axis=(1, 2)) / scale)
    return _report("automorphy", errs, tol)


# -- dispatch --------------------------------------------------------------------

SUITES = ("theta", "addition", "simple-example", "functoriality", "serre", "isogeny",
          "torsion", "automorphy")


def run_suite(name: str, tau: TorusModulus, seed: int = 0,
              tol: float | None = None) -> list[VerificationReport]:
    """Run one suite (or ``all``); ``tol`` overrides the numeric tolerances."""
    if name == "all":
        return [r for s in SUITES for r in run_suite(s, tau, seed, tol)]
    kw = {} if tol is None else {"tol": tol}
    if name == "theta":
        return verify_theta(tau, seed, **kw)
    if name == "addition":
        return verify_addition(tau, seed, **kw)
    if name == "simple-example":
        return simple_example(tau, **kw)
    if name == "functoriality":
        return [functoriality_sweep(tau, seed, **kw)]
    if name == "serre":
        return verify_dimensions(seed)
    if name == "isogeny":
        return [verify_isogeny_duality(r, seed=seed) for r in (2, 3)] + [
            verify_isogeny_objects(seed)]
    if name == "torsion":
        return [verify_torsion(seed)]
    if name == "automorphy":
        return [verify_automorphy(tau, seed, **kw)]
    raise ValueError(f"unknown suite {name!r}")
