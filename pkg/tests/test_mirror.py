from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ellhms import fukaya as fk
from ellhms.mirror import (MirrorPair, phi_bundle_torsion_morphism, phi_coefficient,
                           phi_morphism, phi_object, pullback_brane, pullback_bundle,
                           pullback_monodromy, pushforward_brane, pushforward_bundle,
                           pushforward_monodromy)
from ellhms.numerics import NilpotentMatrix, TorusModulus, nilpotent_exp
from ellhms.sheaves import BundleDesc, SectionElement, TorsionDesc, hom_dim
from ellhms.verification import (functoriality_residual, verify_functoriality,
                                 verify_isogeny_duality, verify_isogeny_objects)

TAU_I = TorusModulus(0.0, 1.0)
TAU_B = TorusModulus(0.3, 1.2)
J2 = NilpotentMatrix.jordan(2)


# -- objects ------------------------------------------------------------------

def test_structure_sheaf_goes_to_horizontal_brane():
    b = phi_object(BundleDesc(0))
    assert (b.p, b.q, b.offset, b.alpha) == (0, 1, 0, 0.0)
    assert np.array_equal(b.monodromy, np.eye(1))


def test_degree_one_goes_to_diagonal():
    b = phi_object(BundleDesc(1))
    assert (b.p, b.q, b.offset) == (1, 1, 0)
    assert b.alpha == pytest.approx(0.25)


def test_skyscraper_goes_to_vertical():
    b = phi_object(TorsionDesc())
    assert (b.p, b.q, b.offset, b.alpha) == (1, 0, 0, 0.5)


def test_twisted_bundle_data():
    b = phi_object(BundleDesc(3, Fraction(1, 4), Fraction(1, 6), J2))
    assert b.offset == Fraction(1, 4)
    assert b.x_intercept == Fraction(1, 12)
    assert np.allclose(b.monodromy, np.exp(-2j * np.pi / 6) * nilpotent_exp(J2))


def test_tuples_and_pairs():
    pair = MirrorPair((BundleDesc(0), TorsionDesc()), TAU_I)
    assert isinstance(pair.aside, fk.BraneTuple) and len(pair.aside) == 2
    with pytest.raises(TypeError):
        phi_object("bundle")


# -- morphisms ------------------------------------------------------------------

def test_trivial_coefficient():
    c = phi_coefficient(3, 0, 0, np.zeros((1, 1)), np.zeros((1, 1)), np.eye(1), TAU_B)
    assert c[0, 0] == 1


def test_simple_example_basis_goes_to_points():
    o, l2 = BundleDesc(0), BundleDesc(2)
    for j, x in ((0, 0.0), (1, 0.5)):
        u = phi_morphism(SectionElement(o, l2, {j: 1.0}), TAU_I)
        assert list(fk.point_key(p) for p in u.terms) == [(x, 0.0)]
        assert u.coeff_at((x, 0))[0, 0] == 1


def test_shifted_coefficient():
    # slope 0 -> slope 2 with twist 2 x0: delta = x0, scalar e^{-2 pi i tau x0^2}
    x0 = Fraction(1, 5)
    u = phi_morphism(SectionElement(BundleDesc(0), BundleDesc(2, 2 * x0), {0: 1.0}), TAU_B)
    want = np.exp(-2j * np.pi * TAU_B.tau * float(x0) ** 2)
    assert abs(u.coeff_at((x0, 0))[0, 0] - want) < 1e-15


def test_degree_zero_is_intertwiner():
    f = np.array([[1.0, 2.0], [0.0, 1.0]])
    out = phi_morphism(SectionElement(BundleDesc(1, nil=J2), BundleDesc(1, nil=J2), {0: f}), TAU_B)
    assert np.array_equal(out, f)


def test_bundle_torsion_examples():
    u = phi_bundle_torsion_morphism(1.0, BundleDesc(0), TorsionDesc(), TAU_B)
    assert u.coeff_at((0, 0))[0, 0] == 1
    u = phi_bundle_torsion_morphism(1.0, BundleDesc(1), TorsionDesc(Fraction(1, 3)), TAU_B)
    (c,) = u.terms.values()
    assert abs(c[0, 0] - np.exp(-1j * np.pi * TAU_B.tau / 9)) < 1e-15
    f = np.array([[1.0], [2.0]])
    s = TorsionDesc(Fraction(1, 3), 0, J2)
    u = phi_bundle_torsion_morphism(f, BundleDesc(1), s, TAU_B)
    (c,) = u.terms.values()
    scalar = np.exp(-1j * np.pi * TAU_B.tau / 9)
    assert np.allclose(c, scalar * nilpotent_exp(J2, 1 / 3) @ f)
    with pytest.raises(ValueError):
        phi_bundle_torsion_morphism(np.eye(2), BundleDesc(1), s, TAU_B)


@pytest.mark.parametrize("tau", [TAU_I, TAU_B])
@pytest.mark.parametrize("twist", [(0, 0), (Fraction(2, 5), 0), (Fraction(2, 5), Fraction(3, 20))])
def test_simple_example_functoriality(tau, twist):
    rep = verify_functoriality(BundleDesc(0), BundleDesc(1), BundleDesc(2, *twist), tau, tol=1e-9)
    assert rep.passed, rep


@settings(max_examples=15, deadline=None)
@given(ns=st.lists(st.integers(0, 4), min_size=3, max_size=3, unique=True),
       twists=st.lists(st.fractions(0, 1, max_denominator=6), min_size=6, max_size=6),
       ranks=st.lists(st.booleans(), min_size=3, max_size=3))
def test_functoriality_property(ns, twists, ranks):
    ns = sorted(ns)
    objs = [BundleDesc(n, twists[2 * i], twists[2 * i + 1], J2 if ranks[i] else None)
            for i, n in enumerate(ns)]
    assert verify_functoriality(*objs, TAU_B, samples=6).max_abs_error < 1e-8


def test_functoriality_through_intertwiner():
    a1, a2 = BundleDesc(0, nil=J2), BundleDesc(2, Fraction(1, 3), nil=J2)
    f = SectionElement(a2, a2, {0: np.array([[2.0, 1.0], [0.0, 2.0]])})
    s = SectionElement(a1, a2, {1: np.array([[1.0, 0.0], [3.0, 1.0]])})
    assert functoriality_residual(s, f, TAU_B) < 1e-12
    g = SectionElement(a1, a1, {0: np.array([[1.0, -1.0], [0.0, 1.0]])})
    assert functoriality_residual(g, s, TAU_B) < 1e-12


def test_dimension_mirror_small_grid():
    objs = [BundleDesc(n, a, b, nil) for n in (-1, 0, 2) for a, b in ((0, 0), (Fraction(1, 2), 0))
            for nil in (None, J2)] + [TorsionDesc(), TorsionDesc(0, 0, J2)]
    for x in objs:
        for y in objs:
            assert hom_dim(x, y) == fk.hom_dim(phi_object(x), phi_object(y))


# -- isogenies ----------------------------------------------------------------------

def test_flat_pushforward_and_pullback():
    assert np.array_equal(pushforward_monodromy(np.eye(1), 2), [[0, 1], [1, 0]])
    assert np.array_equal(pushforward_monodromy(np.eye(1) * 3, 1), [[3]])
    a = np.array([[np.exp(0.3j)]])
    both = pullback_monodromy(pushforward_monodromy(a, 3), 3)
    assert np.allclose(both, np.exp(0.3j) * np.eye(3))
    eig = np.linalg.eigvals(pushforward_monodromy(a, 3))
    assert np.allclose(eig ** 3, np.exp(0.3j))


def test_bundle_isogenies():
    a = BundleDesc(2, Fraction(1, 3), Fraction(1, 4), J2)
    assert pushforward_bundle(a, 1) == a
    push = pushforward_bundle(a, 3)
    assert (push.level, push.rank, push.total_degree) == (3, 6, 4)
    pull = pullback_bundle(a, 2)
    assert (pull.degree, pull.a, pull.b) == (4, Fraction(1, 3), Fraction(1, 2))
    assert np.allclose(nilpotent_exp(pull.nil), nilpotent_exp(J2) @ nilpotent_exp(J2))
    with pytest.raises(ValueError):
        pushforward_bundle(push, 2)


def test_brane_pushforward_slope_two():
    b = phi_object(BundleDesc(2))
    img = pushforward_brane(b, 2)
    assert (img.p, img.q, img.rank) == (1, 1, 2)
    assert img.alpha == pytest.approx(0.25)
    assert np.array_equal(img.monodromy, [[0, 1], [1, 0]])


def test_brane_pushforward_generic_slope():
    img = pushforward_brane(phi_object(BundleDesc(1, Fraction(1, 3))), 3)
    assert (img.p, img.q, img.offset, img.rank) == (1, 3, Fraction(0), 1)
    assert pushforward_brane(img, 1) is img


def test_brane_pullback_components():
    # vertical branes split into r components; slope-1 lines pull back to one line
    v = pullback_brane(phi_object(TorsionDesc(Fraction(1, 2))), 2)
    assert isinstance(v, fk.BraneTuple) and len(v) == 2
    assert sorted(b.offset for b in v) == [Fraction(1, 4), Fraction(3, 4)]
    d = pullback_brane(phi_object(BundleDesc(1)), 2)
    assert isinstance(d, fk.Brane) and (d.p, d.q) == (2, 1)
    h = pullback_brane(fk.Brane.from_local_system(1, 2, 0), 2)
    assert isinstance(h, fk.BraneTuple) and len(h) == 2


def test_pullback_matches_complex_side():
    a = BundleDesc(2, Fraction(1, 5), Fraction(1, 3), J2)
    assert pullback_brane(phi_object(a), 3).isclose(phi_object(pullback_bundle(a, 3)), 1e-12)


@pytest.mark.parametrize("r", [1, 2, 3])
def test_isogeny_duality(r):
    assert verify_isogeny_duality(r, samples=15, seed=r).passed


def test_isogeny_objects():
    assert verify_isogeny_objects(seed=4).passed
    a = BundleDesc(3, Fraction(1, 2), 0)
    assert phi_object(pushforward_bundle(a, 2)) == pushforward_brane(phi_object(a), 2)
