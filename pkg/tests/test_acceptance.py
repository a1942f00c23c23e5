"""Acceptance criteria, one test each; every test prints a PASS/FAIL line."""
import time
from fractions import Fraction

import numpy as np
import pytest

from ellhms import fukaya as fk
from ellhms import sheaves as sh
from ellhms.mirror import phi_object
from ellhms.numerics import NilpotentMatrix, ThetaParams, TorusModulus, theta_eval
from ellhms.verification import (functoriality_sweep, simple_example, verify_addition,
                                 verify_automorphy, verify_dimensions, verify_isogeny_duality,
                                 verify_isogeny_objects, verify_theta, verify_torsion)

TAU_I = TorusModulus(0.0, 1.0)
TAU_B = TorusModulus(0.3, 1.2)


@pytest.fixture
def announce(capsys):
    def emit(number, title, reports, extra_ok=True, note=""):
        ok = extra_ok and all(r.passed for r in reports)
        worst = max((r.max_abs_error for r in reports), default=0.0)
        with capsys.disabled():
            print(f"\n[criterion {number}] {'PASS' if ok else 'FAIL'} {title}: "
                  f"{sum(r.cases for r in reports)} cases, max error {worst:.3e}{note}")
        return ok
    return emit


def test_criterion_1_theta_identities(announce):
    start = time.perf_counter()
    reports = [r for tau in (TAU_I, TAU_B) for r in verify_theta(tau, seed=1, count=200, tol=1e-10)]
    elapsed = time.perf_counter() - start
    assert announce(1, "theta identities", reports, elapsed < 5.0,
                    f", {elapsed:.2f}s (limit 5s)")


def test_criterion_2_addition_formula(announce):
    reports = verify_addition(TAU_B, seed=2, count=20, tol=1e-8)
    reports += verify_addition(TAU_I, seed=3, count=20, tol=1e-8)
    names = {r.name for r in reports}
    assert "addition-special-case" in names
    assert reports[0].cases == 81
    assert announce(2, "addition formula incl. special case", reports)


def test_criterion_3_simple_example(announce):
    reports = simple_example(TAU_I, tol=1e-10)
    # independent oracle for the headline constant
    direct = sum(np.exp(-2 * np.pi * n * n) for n in range(-20, 21))
    const_ok = abs(theta_eval(ThetaParams(level=2), TAU_I, 0) - direct) < 1e-10
    by_name = {r.name: r for r in reports}
    assert set(by_name) == {"simple-example", "simple-example-shifted",
                            "simple-example-connection", "simple-example-functor"}
    assert by_name["simple-example-functor"].tolerance == 1e-9
    assert announce(3, "slopes 0,1,2 example (plain, shifted, connection, via functor)",
                    reports, const_ok)


def test_criterion_4_functoriality_sweep(announce):
    start = time.perf_counter()
    report = functoriality_sweep(TAU_B, seed=2024, triples=50, tol=1e-8)
    elapsed = time.perf_counter() - start
    assert report.cases == 50
    assert announce(4, "functoriality sweep", [report], elapsed < 60.0,
                    f", {elapsed:.1f}s (limit 60s)")


def test_criterion_5_dimension_laws(announce):
    reports = verify_dimensions(seed=5, pairs=100)
    assert {r.name for r in reports} >= {"dims-basis-vs-intersections", "dims-riemann-roch",
                                         "dims-serre-bside", "dims-serre-aside"}
    assert all(r.tolerance == 0.5 for r in reports)
    assert announce(5, "dimension laws (exact integers)", reports)


def test_criterion_6_isogenies(announce):
    reports = [verify_isogeny_duality(r, samples=20, seed=6 + r) for r in (2, 3)]
    objects = verify_isogeny_objects(seed=6, count=20)
    assert objects.cases == 20
    assert announce(6, "isogeny adjunctions and Phi o pi_* = p_* o Phi", reports + [objects])


def test_criterion_7_torsion_tables(announce):
    report = verify_torsion(seed=7, count=30)
    # explicit empty case: same point, different b shares no eigenvalues
    j2 = NilpotentMatrix.jordan(2)
    s1, s2 = sh.TorsionDesc(Fraction(1, 4), 0, j2), sh.TorsionDesc(Fraction(1, 4), Fraction(1, 3), j2)
    empty_ok = (sh.hom_torsion(s1, s2) == []
                and fk.intertwiner_hom(phi_object(s1), phi_object(s2)) == [])
    assert announce(7, "torsion composition tables", [report], empty_ok)


def test_criterion_8_automorphy(announce):
    reports = [verify_automorphy(tau, seed=8, count=20, tol=1e-10) for tau in (TAU_I, TAU_B)]
    assert announce(8, "twisted sections under z+1 and z+tau (rank 2)", reports)
