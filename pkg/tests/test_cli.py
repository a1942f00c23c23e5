import json
import subprocess
import sys
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ellhms import jsonio
from ellhms.cli import main
from ellhms.fukaya import Brane, PointSum, intersections
from ellhms.numerics import NilpotentMatrix
from ellhms.sheaves import BundleDesc, SectionElement, TorsionDesc


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip() else None), out


def write(tmp_path, name, obj):
    path = tmp_path / name
    path.write_text(jsonio.dumps(jsonio.encode_any(obj)))
    return str(path)


# -- theta ------------------------------------------------------------------------

def test_theta_zero(capsys):
    code, doc, _ = run(capsys, "theta", "--tau", "0,1", "--z", "0.5,0.5", "--tol", "1e-12")
    assert code == 0
    assert abs(complex(*doc["value"])) < 1e-12
    assert doc["tol"] == 1e-12 and doc["truncation_M"] > 0


def test_theta_value(capsys):
    code, doc, _ = run(capsys, "theta", "--tau", "0,1", "--z", "0,0")
    assert code == 0
    assert doc["value"][0] == pytest.approx(1.0864348112133078, abs=1e-12)
    assert doc["value"][1] == pytest.approx(0.0, abs=1e-15)


def test_theta_characteristic(capsys):
    code, doc, _ = run(capsys, "theta", "--tau", "0,1", "--z", "0,0", "--char", "1/2", "--level", "2")
    assert code == 0
    assert doc["value"][0] == pytest.approx(0.4157606025960271, abs=1e-12)


def test_missing_tau_is_usage_error(capsys):
    assert main(["theta", "--z", "0,0"]) == 2


def test_bad_tau_is_usage_error(capsys):
    assert main(["theta", "--tau", "0,-1", "--z", "0,0"]) == 2


def test_env_tolerance(capsys, monkeypatch):
    monkeypatch.setenv("HMS_TOL", "1e-6")
    _, doc, _ = run(capsys, "theta", "--tau", "0,1", "--z", "0,0")
    assert doc["tol"] == 1e-6
    monkeypatch.setenv("HMS_TOL", "tiny")
    code, doc, _ = run(capsys, "theta", "--tau", "0,1", "--z", "0,0")
    assert code == 2 and doc["error"]["code"] == "BAD_ENV"


# -- compose ----------------------------------------------------------------------

def test_compose_side_a(capsys, tmp_path):
    l0, l1, l2 = (Brane.integer_slope(n) for n in range(3))
    e1 = write(tmp_path, "e1.json", PointSum(l0, l1, {(0, 0): 1.0}))
    e2 = write(tmp_path, "e2.json", PointSum(l1, l2, {intersections(l1, l2)[0]: 1.0}))
    code, doc, _ = run(capsys, "compose", "--side", "a", "--tau", "0,1", e1, e2)
    assert code == 0 and doc["kind"] == "pointsum"
    values = [complex(*t["matrix"][0][0]) for t in doc["terms"]]
    assert len(values) == 2
    assert values[0] == pytest.approx(1.0037348854877390, abs=1e-12)
    assert values[1] == pytest.approx(0.4157606025960271, abs=1e-12)


def test_compose_side_b(capsys, tmp_path):
    o, l1, l2 = BundleDesc(0), BundleDesc(1), BundleDesc(2)
    s1 = write(tmp_path, "s1.json", SectionElement(o, l1, {0: 1.0}))
    s2 = write(tmp_path, "s2.json", SectionElement(l1, l2, {0: 1.0}))
    code, doc, _ = run(capsys, "compose", "--side", "b", "--tau", "0,1", s1, s2)
    assert code == 0 and doc["kind"] == "section"
    assert [t["j"] for t in doc["coeffs"]] == [0, 1]
    assert complex(*doc["coeffs"][0]["matrix"][0][0]) == pytest.approx(1.0037348854877390, abs=1e-10)


def test_compose_endpoint_mismatch(capsys, tmp_path):
    s1 = write(tmp_path, "s1.json", SectionElement(BundleDesc(0), BundleDesc(1), {0: 1.0}))
    s2 = write(tmp_path, "s2.json", SectionElement(BundleDesc(2), BundleDesc(3), {0: 1.0}))
    code, doc, _ = run(capsys, "compose", "--side", "b", s1, s2)
    assert code == 2 and doc["error"]["code"] == "ENDPOINT_MISMATCH"
    l0, l1, l2 = (Brane.integer_slope(n) for n in range(3))
    a1 = write(tmp_path, "a1.json", PointSum(l0, l1, {(0, 0): 1.0}))
    a2 = write(tmp_path, "a2.json", PointSum(l0, l2, {(0, 0): 1.0}))
    code, doc, _ = run(capsys, "compose", "--side", "a", a1, a2)
    assert code == 2 and doc["error"]["code"] == "ENDPOINT_MISMATCH"


def test_compose_wrong_side_and_bad_json(capsys, tmp_path):
    s1 = write(tmp_path, "s1.json", SectionElement(BundleDesc(0), BundleDesc(1), {0: 1.0}))
    code, doc, _ = run(capsys, "compose", "--side", "a", s1, s1)
    assert code == 2 and doc["error"]["code"] == "WRONG_SIDE"
    bad = tmp_path / "bad.json"
    bad.write_text("{nope")
    code, doc, _ = run(capsys, "compose", "--side", "b", str(bad), s1)
    assert code == 2 and doc["error"]["code"] == "BAD_JSON"


def test_non_nilpotent_document_rejected(capsys, tmp_path):
    doc = jsonio.encode_object(BundleDesc(1))
    doc["nil"] = [[[1.0, 0.0]]]
    path = tmp_path / "b.json"
    path.write_text(json.dumps(doc))
    code, out, _ = run(capsys, "mirror", str(path))
    assert code == 2 and out["error"]["code"] == "BAD_DOCUMENT"


# -- mirror -----------------------------------------------------------------------

@pytest.mark.parametrize("obj, slope, offset, alpha", [
    (BundleDesc(0), [0, 1], [0, 1], 0.0),
    (BundleDesc(1), [1, 1], [0, 1], 0.25),
    (TorsionDesc(), [1, 0], [0, 1], 0.5)])
def test_mirror_objects(capsys, tmp_path, obj, slope, offset, alpha):
    code, doc, _ = run(capsys, "mirror", write(tmp_path, "o.json", obj))
    assert code == 0
    assert (doc["kind"], doc["slope"], doc["offset"]) == ("brane", slope, offset)
    assert doc["alpha"] == pytest.approx(alpha)


def test_mirror_morphisms(capsys, tmp_path):
    s = SectionElement(BundleDesc(0), BundleDesc(2), {1: 1.0})
    code, doc, _ = run(capsys, "mirror", write(tmp_path, "m.json", s))
    assert code == 0 and doc["kind"] == "pointsum"
    assert doc["terms"][0]["point"] == [[1, 2], [0, 1]]
    j2 = NilpotentMatrix.jordan(2)
    f = SectionElement(BundleDesc(1, nil=j2), BundleDesc(1, nil=j2), {0: np.eye(2)})
    code, doc, _ = run(capsys, "mirror", write(tmp_path, "f.json", f))
    assert code == 0 and doc["kind"] == "intertwiner"
    fm = {"kind": "fibermap", "source": jsonio.encode_object(BundleDesc(1)),
          "target": jsonio.encode_object(TorsionDesc(Fraction(1, 3))), "matrix": [[[1.0, 0.0]]]}
    path = tmp_path / "fm.json"
    path.write_text(json.dumps(fm))
    code, doc, _ = run(capsys, "mirror", str(path))
    assert code == 0 and len(doc["terms"]) == 1


def test_mirror_rejects_branes(capsys, tmp_path):
    code, doc, _ = run(capsys, "mirror", write(tmp_path, "b.json", Brane.integer_slope(1)))
    assert code == 2 and doc["error"]["code"] == "WRONG_SIDE"


# -- verify -----------------------------------------------------------------------

def test_verify_simple_example(capsys):
    code, doc, _ = run(capsys, "verify", "--suite", "simple-example", "--tau", "0,1")
    assert code == 0
    assert doc and all(r["pass"] for r in doc)


def test_verify_unattainable_tolerance(capsys):
    code, doc, _ = run(capsys, "verify", "--suite", "functoriality", "--tol", "1e-20")
    assert code == 1
    (rep,) = doc
    assert not rep["pass"] and 0 < rep["max_abs_error"] < 1e-8


def test_verify_all_is_deterministic(tmp_path):
    outs = []
    for i in range(2):
        path = tmp_path / f"r{i}.json"
        proc = subprocess.run([sys.executable, "-m", "ellhms.cli", "--out", str(path), "verify",
                               "--suite", "all", "--tau=0.3,1.2", "--seed", "7"],
                              capture_output=True)
        assert proc.returncode == 0, proc.stderr
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]
    assert all(r["pass"] for r in json.loads(outs[0]))


# -- documents ----------------------------------------------------------------------

fracs = st.fractions(0, 1, max_denominator=12).filter(lambda f: f < 1)
nils = st.sampled_from([None, NilpotentMatrix.jordan(2), NilpotentMatrix.jordan(3)])


@settings(max_examples=40, deadline=None)
@given(n=st.integers(-5, 5), a=fracs, b=st.one_of(fracs, st.floats(0, 0.999)), nil=nils,
       level=st.integers(1, 3))
def test_bundle_round_trip(n, a, b, nil, level):
    obj = BundleDesc(n, a, b, nil, level)
    text = jsonio.dumps(jsonio.encode_any(obj))
    back = jsonio.decode_any(json.loads(text))
    assert back == obj
    assert jsonio.dumps(jsonio.encode_any(back)) == text


@settings(max_examples=30, deadline=None)
@given(p=st.integers(-3, 3), c=fracs, phase=st.floats(0, 0.999), nil=nils)
def test_brane_and_pointsum_round_trip(p, c, phase, nil):
    l0 = Brane.integer_slope(0)
    l1 = Brane.integer_slope(p if p != 0 else 1, c, phase_b=phase, nil=nil)
    assert jsonio.decode_any(json.loads(jsonio.dumps(jsonio.encode_any(l1)))) == l1
    pts = intersections(l0, l1)
    u = PointSum(l0, l1, {pt: np.full((l1.rank, 1), 0.1 + 0.2j) for pt in pts})
    text = jsonio.dumps(jsonio.encode_any(u))
    assert jsonio.dumps(jsonio.encode_any(jsonio.decode_any(json.loads(text)))) == text


def test_floats_have_17_digits():
    assert jsonio.dumps(0.1).strip() == "0.10000000000000001"
    assert jsonio.dumps([1.0, 2]).strip() == "[1.0, 2]"


def test_rationals_must_be_reduced():
    with pytest.raises(jsonio.DocumentError):
        jsonio.dec_real([2, 4])
    with pytest.raises(jsonio.DocumentError):
        jsonio.dec_real([1, 0])
    assert jsonio.dec_real([1, 3]) == Fraction(1, 3)
