import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from softspring.elasticity import (
    CardError,
    ElasticityModel,
    ElasticityPiece,
    Material,
    adipose_model,
    arctan_model,
    build_from_points,
    card_to_material,
    load_card,
    material_to_card,
    preset,
    preset_adipose,
    preset_skin,
    read_knots_csv,
    save_card,
    skin_model,
)


def slope(f, a, b):
    return (f(b) - f(a)) / (b - a)


def test_zero_strain_gives_zero_stress():
    for mat in (preset_skin(), preset_adipose()):
        assert mat.Ef(0.0) == 0.0


def test_linear_two_points():
    model = build_from_points([(0, 0), (1, 2)], "linear")
    assert model(0.5) == pytest.approx(1.0, rel=1e-15)


def test_cubic_join_hits_knots():
    k0 = 1.5
    pts = [(0, 0), (0.4, 0.4 * k0), (0.7, 1.6), (1.0, 3.1)]
    model = build_from_points(pts, ["linear", "cubic", "linear"])
    for e, s in pts:
        assert model(e) == pytest.approx(s, rel=1e-12, abs=1e-15)


def test_skin_constant_modulus_below_knee():
    ef = preset_skin().Ef
    assert slope(ef, 0.0, 0.1) == pytest.approx(slope(ef, 0.2, 0.3), rel=1e-12)


def test_skin_stiffens_after_knee():
    ef = preset_skin().Ef
    assert slope(ef, 0.75, 1.0) > slope(ef, 0.0, 0.4)


def test_skin_monotone_dense():
    e = np.linspace(0.0, 1.0, 10_000)
    assert np.all(np.diff(preset_skin().Ef(e)) >= 0)


def test_skin_c1_at_spline_joins():
    model = skin_model()
    for knot in (0.4, 0.7):
        h = 1e-7
        left = (model(knot) - model(knot - h)) / h
        right = (model(knot + h) - model(knot)) / h
        assert left == pytest.approx(right, rel=1e-5)


def test_adipose_plateau():
    ef = preset_adipose().Ef
    assert ef(0.8) == pytest.approx(ef(0.95), rel=0.02)
    h = 1e-6
    d = lambda e: (ef(e + h) - ef(e - h)) / (2 * h)
    assert d(0.9) < 0.05 * d(0.05)


def test_adipose_initial_slope_is_one():
    assert adipose_model().initial_modulus == pytest.approx(1.0)


def test_compression_mirrors_initial_modulus():
    for model in (skin_model(), adipose_model()):
        k0 = model.initial_modulus
        assert model(-0.3) == pytest.approx(-0.3 * k0)


def test_extrapolation_continues_end_slope():
    model = skin_model()
    end = model.slope(0.999)
    assert model(1.2) == pytest.approx(model(1.0) + 0.2 * end, rel=1e-12)
    assert model(-1.5) == pytest.approx(-1.5 * model.initial_modulus)


def test_continuity_at_every_knot():
    for model in (skin_model(), adipose_model(), build_from_points([(0.2, 0.3), (0.5, 0.4)], "cubic")):
        scale = model.stress_scale()
        for p in model.pieces:
            h = 1e-6
            assert abs(model(p.lo - h) - model(p.lo + h)) < 1e-4 * scale


def test_vector_and_scalar_agree():
    model = skin_model()
    e = np.linspace(-1.2, 1.2, 97)
    vec = model(e)
    assert all(vec[i] == model(float(x)) for i, x in enumerate(e))


def test_determinism():
    e = np.random.default_rng(0).uniform(-1, 1, 500)
    a = preset_skin().Ef(e)
    b = preset_skin().Ef(e)
    assert a.tobytes() == b.tobytes()


def test_scaled_model():
    model = skin_model()
    assert model.scaled(3.0)(0.8) == pytest.approx(3.0 * model(0.8))


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.floats(0.01, 0.99), st.floats(0.0, 5.0)), min_size=2, max_size=6,
                unique_by=lambda p: round(p[0], 3)),
       st.sampled_from(["linear", "cubic"]))
def test_interpolation_property(raw, join):
    pts = sorted((round(e, 3), s) for e, s in raw)
    model = build_from_points(pts, join)
    for e, s in pts:
        assert model(e) == pytest.approx(s, rel=1e-12, abs=1e-12)
    assert model(0.0) == 0.0


def test_duplicate_strain_rejected():
    with pytest.raises(ValueError):
        build_from_points([(0, 0), (0.5, 1), (0.5, 2)])


def test_too_few_points_rejected():
    with pytest.raises(ValueError):
        build_from_points([(0.5, 1.0)])


def test_nonzero_origin_rejected():
    with pytest.raises(ValueError):
        build_from_points([(0, 0.1), (1, 1)])


def test_model_rejects_gap():
    pieces = [ElasticityPiece(-1, 0, "linear", (-1, 1)), ElasticityPiece(0.1, 1, "linear", (0.1, 1))]
    with pytest.raises(ValueError):
        ElasticityModel(pieces)


def test_model_rejects_discontinuity():
    pieces = [ElasticityPiece(-1, 0, "linear", (-1, 1)), ElasticityPiece(0, 1, "linear", (0.5, 1))]
    with pytest.raises(ValueError):
        ElasticityModel(pieces)


def test_material_nu_range():
    with pytest.raises(ValueError):
        Material(skin_model(), 1.0)
    with pytest.raises(ValueError):
        Material(skin_model(), -0.1)
    assert preset("skin", 0.3).nu == 0.3


def test_arctan_has_no_offset():
    model = arctan_model(0.5, 4.0)
    assert model(0.0) == 0.0
    assert model(0.3) == pytest.approx(0.5 * np.arctan(1.2))


def test_card_round_trip(tmp_path):
    for mat in (preset_skin(0.3), preset_adipose(0.1)):
        path = tmp_path / f"{mat.name}.json"
        save_card(mat, path)
        back = load_card(path)
        assert back.nu == mat.nu
        e = np.linspace(-1.1, 1.1, 201)
        np.testing.assert_array_equal(back.Ef(e), mat.Ef(e))


def test_card_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"nu": 0.3,\n "pieces": [}')
    with pytest.raises(CardError, match="line 2"):
        load_card(bad)
    card = material_to_card(preset_skin())
    del card["pieces"][1]["coeffs"]
    with pytest.raises(CardError, match="pieces\\[1\\]"):
        card_to_material(card)
    card = material_to_card(preset_skin())
    card["pieces"] = card["pieces"][:-1]
    with pytest.raises(CardError):
        card_to_material(json.loads(json.dumps(card)))


def test_knots_csv(tmp_path):
    path = tmp_path / "knots.csv"
    path.write_text("strain,stress\n0.4,0.4\n0.7,1.3\n1.0,2.8\n")
    pts = read_knots_csv(path)
    assert pts == [(0.4, 0.4), (0.7, 1.3), (1.0, 2.8)]
    # the prepended origin gap is always linear
    model = build_from_points(pts, ["cubic", "linear"])
    np.testing.assert_allclose(model([0.2, 0.7]), skin_model()([0.2, 0.7]), rtol=1e-12)
