import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rissim.em_core import Wave
from rissim.errors import InsufficientSamples, TooCloseToElement
from rissim.experiments import (SweepResult, SweepSpec, convergence_study, distance_sweep,
                                extrema_alignment, far_field_window, fit_exponent,
                                footprint_radius, freespace_baseline, fresnel_overlay,
                                local_extrema, near_field_window, reference_spec, refined_layout,
                                sliding_max, zone_counts)
from rissim.geometry import make_linear_layout, make_planar_layout

from . import oracles


@pytest.fixture(scope="module")
def linear_sc():
    spec = reference_spec("linear")
    return spec, distance_sweep(spec)


@pytest.fixture(scope="module")
def planar_sc():
    spec = reference_spec("planar")
    return spec, distance_sweep(spec)


@pytest.fixture(scope="module")
def planar_ideal():
    spec = reference_spec("planar", load_mode="ideal_phase")
    return spec, distance_sweep(spec)


def synthetic(r, p):
    return SweepResult(np.asarray(r), np.asarray(p), np.array(["near_field"] * len(r)), {})


def test_linear_far_tail_monotone(linear_sc):
    spec, res = linear_sc
    tail = res.density[res.r > spec.r_ff()]
    assert tail.size > 20
    assert np.all(np.diff(tail) < 0)
    fit = fit_exponent(res, (spec.r_ff(), res.r[-1]))
    assert fit.exponent == pytest.approx(-4.0, abs=0.2)


def test_single_element_has_no_oscillation():
    spec = SweepSpec(make_linear_layout(0, 0.5), Wave.from_wavelength(1.0), 2.0, 500.0, 60)
    res = distance_sweep(spec)
    scaled = res.density * res.r ** 4
    assert np.allclose(scaled, scaled[0], rtol=1e-12)


def test_ideal_dominates_short_circuit(planar_sc, planar_ideal):
    assert np.all(planar_ideal[1].density >= planar_sc[1].density * (1 - 1e-12))


def test_fit_exact_power_law():
    r = np.geomspace(1, 1000, 50)
    fit = fit_exponent(synthetic(r, 3.7 * r ** -4.0), (1, 1000))
    assert fit.exponent == pytest.approx(-4.0, abs=1e-9)
    assert fit.r2 == pytest.approx(1.0)
    assert fit.exponent == pytest.approx(oracles.exact_loglog_slope(r, 3.7 * r ** -4.0), abs=1e-9)


def test_envelope_recovers_oscillating_law():
    r = np.geomspace(10, 1000, 200)
    osc = 10 ** (0.3 * np.sin(40 * np.log10(r)))  # +/- 3 dB
    res = synthetic(r, 5.0 * r ** -2.0 * osc)
    assert fit_exponent(res, (10, 1000), "envelope_max").exponent == pytest.approx(-2.0, abs=0.1)


def test_planar_near_field_envelope(planar_sc):
    spec, res = planar_sc
    fit = fit_exponent(res, near_field_window(spec), "envelope_max")
    assert fit.exponent == pytest.approx(-2.0, abs=0.3)


def test_fit_needs_samples():
    r = np.geomspace(1, 10, 5)
    with pytest.raises(InsufficientSamples):
        fit_exponent(synthetic(r, r ** -2), (1, 10))
    with pytest.raises(ValueError):
        fit_exponent(synthetic(r, r ** -2), (1, 10), "median")


def test_sliding_max():
    v = np.array([1.0, 5.0, 2.0, 0.0, 0.0, 0.0, 3.0])
    assert sliding_max(v, 3).tolist() == [5, 5, 5, 2, 0, 3, 3]
    assert sliding_max(v, 1).tolist() == v.tolist()


def test_baseline_law(planar_sc):
    spec, _ = planar_sc
    base = freespace_baseline(spec)
    fit = fit_exponent(base, (base.r[0], base.r[-1]))
    assert fit.exponent == pytest.approx(-2.0, abs=1e-12)
    s2 = SweepSpec(spec.layout, spec.wave, 10.0, 20.0, 2)
    b = freespace_baseline(s2).density
    assert 10 * np.log10(b[0] / b[1]) == pytest.approx(6.0206, abs=1e-4)


def test_smart_beats_baseline_somewhere():
    spec = reference_spec("planar", wavelength=0.1, load_mode="ideal_phase")
    res = distance_sweep(spec)
    base = freespace_baseline(spec)
    win = (res.r > 20 * spec.wave.wavelength) & (res.r < spec.r_ff())
    assert np.any(res.density[win] > base.density[win])


def test_determinism_and_workers(linear_sc):
    spec, res = linear_sc
    again = distance_sweep(spec)
    assert again.to_csv() == res.to_csv()
    par = distance_sweep(spec, workers=4)
    assert par.to_csv() == res.to_csv()


def test_regime_tags(planar_sc):
    spec, res = planar_sc
    ff = res.r > res.metadata["r_ff_m"]
    assert np.all(res.regime[ff] == "far_field")
    assert np.all(res.regime[~ff] == "near_field")
    assert res.metadata["r_ff_m"] == spec.r_ff()


def test_metadata_and_csv(planar_sc):
    spec, res = planar_sc
    meta = json.loads(res.metadata_json())
    assert meta["d_definition"] == "diagonal"
    assert meta["r_ff_diagonal_m"] == pytest.approx(400.0)
    assert meta["r_ff_side_m"] == pytest.approx(200.0)
    assert meta["spec"]["n_elements"] == 441
    assert meta["conventions"]["bilinear_form"] == "transpose"
    lines = res.to_csv().splitlines()
    assert lines[0] == "r_m,density_w_m2,regime,zone_count"
    assert len(lines) == 201


def test_visible_dimension_option():
    spec = reference_spec("planar")
    vis = SweepSpec(spec.layout, spec.wave, spec.r_min, spec.r_max, 10, d_definition="visible")
    assert vis.array_dimension() == pytest.approx(np.sqrt(50 + 100), rel=1e-12)


def test_guard_error_names_distance():
    spec = SweepSpec(make_planar_layout(5, 5, 0.5), Wave.from_wavelength(1.0), 0.5, 10.0, 5)
    with pytest.raises(TooCloseToElement, match="at r = 0.5"):
        distance_sweep(spec)


def test_spec_validation():
    lay = make_linear_layout(1, 0.5)
    w = Wave.from_wavelength(1.0)
    for kw in ({"points": 1}, {"spacing": "cubic"}, {"load_mode": "magic"}, {"d_definition": "x"}):
        with pytest.raises(ValueError):
            SweepSpec(lay, w, 1.0, 2.0, **{"points": 10, **kw})
    with pytest.raises(ValueError):
        SweepSpec(lay, w, 2.0, 1.0)


def test_linear_spacing_option():
    spec = SweepSpec(make_linear_layout(1, 0.5), Wave.from_wavelength(1.0), 2.0, 10.0, 5, spacing="linear")
    assert spec.radii().tolist() == [2.0, 4.0, 6.0, 8.0, 10.0]


# -- Fresnel overlay ------------------------------------------------------------------

def test_no_complete_zone_beyond_rff(planar_sc):
    spec, res = planar_sc
    ov = fresnel_overlay(res, spec.layout, spec.wave)
    assert np.all(ov.zone_count[ov.r > spec.r_ff()] == 0)
    assert np.all(np.diff(ov.zone_count) <= 0)
    assert ov.zone_count[0] > 1


@given(st.floats(0.01, 100), st.floats(0.01, 10))
def test_zone_count_nonincreasing(rho, lam):
    r = np.geomspace(lam, 1e4 * lam, 300)
    assert np.all(np.diff(zone_counts(r, rho, lam)) <= 0)


def test_zone_count_matches_radius_definition():
    # l zones fit when sqrt(l lambda r / 2) <= rho
    assert zone_counts(np.array([10.0]), np.sqrt(3 * 0.1 * 10 / 2), 0.1)[0] == 3


def test_footprint_radius():
    lay = make_planar_layout(10, 10, 0.5)
    assert footprint_radius(lay, 0.0) == pytest.approx(np.sqrt(100 / np.pi))
    line = make_linear_layout(10, 0.5)
    assert footprint_radius(line, np.pi / 3) == pytest.approx(5 * 0.5)
    assert footprint_radius(make_linear_layout(0, 0.5), 0.3) == 0


def test_local_extrema_and_alignment():
    v = np.array([0, 1, 0, 1, 2, 1], dtype=float)
    assert local_extrema(v).tolist() == [1, 2, 4]
    res = SweepResult(np.arange(1.0, 7.0), 10 ** v, np.array(["near_field"] * 6), {},
                      np.array([3, 3, 2, 2, 2, 1]))
    assert extrema_alignment(res) == [(2.0, 0), (3.0, 0), (5.0, 0)]
    with pytest.raises(ValueError):
        extrema_alignment(SweepResult(res.r, res.density, res.regime, {}))


# -- refinement ladder --------------------------------------------------------------

@pytest.fixture(scope="module")
def ladder():
    spec = reference_spec("planar")
    lam = spec.wave.wavelength
    return convergence_study(spec, [lam / 2, lam / 4, lam / 8])


def test_convergence_monotone(ladder):
    nf = [row.near_field_max_diff_db for row in ladder.rows[1:]]
    assert nf[0] > nf[1] > 0


def test_convergence_far_field_insensitive(ladder):
    assert all(row.far_field_max_diff_db < 0.5 for row in ladder.rows[1:])


def test_convergence_same_spacing_zero():
    spec = reference_spec("linear", points=40)
    study = convergence_study(spec, [0.5, 0.5])
    assert study.rows[1].near_field_max_diff_db == 0
    assert study.rows[1].far_field_max_diff_db == 0


def test_refined_layout_keeps_aperture():
    lay = make_planar_layout(10, 10, 0.5)
    fine = refined_layout(lay, 0.125)
    assert len(fine) == 81 * 81
    assert np.ptp(fine.positions[:, 0]) == pytest.approx(10.0)
    with pytest.raises(ValueError):
        refined_layout(lay, 0.3)
