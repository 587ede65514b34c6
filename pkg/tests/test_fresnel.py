import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rissim.em_core import Wave
from rissim.errors import ApproximationOutOfRange, DegeneratePoint, NonPlanarLayout
from rissim.fresnel import (FresnelSpec, classify_elements, excess_phase, first_zone_boundary,
                            first_zone_contained, fresnel_radius, specular_point, zone_gap,
                            zone_index)
from rissim.geometry import (ArrayLayout, Scene, dimensions, farfield_distance, make_linear_layout,
                             make_planar_layout, symmetric_scene)

LAM = 1.0
WAVE = Wave.from_wavelength(LAM)
PLANAR = make_planar_layout(10, 10, LAM / 2)
R_FF = farfield_distance(dimensions(PLANAR).D, WAVE)


def test_radius_values():
    assert fresnel_radius(1, 10.0, 0.1) == pytest.approx(0.70711, abs=1e-5)
    assert fresnel_radius(4, 10.0, 0.1) == pytest.approx(1.41421, abs=1e-5)
    assert fresnel_radius(1, 40.0, 0.1) == pytest.approx(2 * fresnel_radius(1, 10.0, 0.1))


def test_radius_range_warning():
    with pytest.warns(ApproximationOutOfRange):
        fresnel_radius(3, 1.0, 0.1)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        fresnel_radius(1, 10.0, 0.1)
    assert FresnelSpec(2, 1.0, 0.1).out_of_range
    with pytest.raises(ValueError):
        FresnelSpec(0, 1.0, 0.1)


def test_zone_gap():
    assert zone_gap(1, 10.0, 0.1) == pytest.approx(0.29289, abs=1e-5)
    gaps = [zone_gap(l, 1e4, 0.1) for l in range(1, 102)]
    assert all(a > b for a, b in zip(gaps, gaps[1:]))
    assert zone_gap(3, 400.0, 0.1) == pytest.approx(2 * zone_gap(3, 100.0, 0.1))


def test_excess_phase_zero_at_specular_point():
    sc = symmetric_scene(30.0, np.pi / 4, PLANAR)
    assert np.allclose(specular_point(sc), 0, atol=1e-12)
    assert excess_phase(specular_point(sc), sc, WAVE) == pytest.approx(0.0, abs=1e-9)
    off = Scene([-3.0, 10.0, 1.0], [6.0, 4.0, -2.0])
    sp = specular_point(off)
    assert sp[1] == pytest.approx(0, abs=1e-12)
    assert excess_phase(sp, off, WAVE) == pytest.approx(0.0, abs=1e-9)


@pytest.mark.parametrize("r", [100.0, 300.0, 2000.0])
def test_first_zone_radius_gives_pi(r):
    sc = symmetric_scene(r, np.pi / 4, PLANAR)
    rho = fresnel_radius(1, r, LAM)
    # along the vertical axis the zone is not stretched by the oblique incidence
    assert excess_phase([0, 0, rho], sc, WAVE) == pytest.approx(np.pi, rel=0.02)


@settings(max_examples=50)
@given(st.floats(-20, 20), st.floats(-20, 20))
def test_excess_phase_swap_symmetric(x, z):
    sc = Scene([-3.0, 10.0, 1.0], [6.0, 4.0, -2.0])
    p = [x, 0.0, z]
    assert excess_phase(p, sc, WAVE) == pytest.approx(excess_phase(p, sc.swapped(), WAVE), abs=1e-9)
    assert excess_phase(p, sc, WAVE) >= -1e-9


def test_excess_phase_degenerate():
    sc = Scene([0, 0, 0.0], [1.0, 1.0, 0])
    with pytest.raises(DegeneratePoint):
        excess_phase([0, 0, 0], sc, WAVE)


def test_zone_index_definition():
    assert zone_index(1.5 * np.pi) == 2
    assert zone_index([0.0, 0.99 * np.pi, np.pi, 2.5 * np.pi]).tolist() == [1, 1, 2, 3]


def test_all_first_zone():
    lay = make_planar_layout(1, 1, 0.1)
    zm = classify_elements(lay, symmetric_scene(50.0, np.pi / 4, lay), WAVE)
    assert zm.zones_present == [1] and zm.constructive.all()


def test_zone_counts_reference_scene():
    near = classify_elements(PLANAR, symmetric_scene(0.1 * R_FF, np.pi / 4, PLANAR), WAVE)
    far = classify_elements(PLANAR, symmetric_scene(10 * R_FF, np.pi / 4, PLANAR), WAVE)
    assert len(near.zones_present) > 1
    assert far.zones_present == [1]


def test_zone_map_csv():
    lay = make_linear_layout(1, 0.5)
    zm = classify_elements(lay, symmetric_scene(5.0, np.pi / 4, lay), WAVE)
    lines = zm.to_csv(lay).splitlines()
    assert lines[0] == "n,x,y,z,zone,parity,excess_phase_rad"
    assert len(lines) == 4
    assert lines[2].split(",")[5] == "constructive"
    float(lines[1].split(",")[6])


def _radial_scan(r, n=10_000):
    sc = symmetric_scene(r, np.pi / 4, PLANAR)
    t = np.linspace(0, 50.0, n)
    pts = np.stack([t * np.cos(0.7), np.zeros(n), t * np.sin(0.7)], axis=1)
    ph = excess_phase(pts, sc, WAVE)
    return sc, pts, ph


def test_zone_parity_alternates_on_radial_scan():
    _, _, ph = _radial_scan(40.0)
    z = zone_index(ph)
    assert np.all(np.diff(z) >= 0)
    steps = np.flatnonzero(np.diff(z))
    assert steps.size > 5
    assert np.all(np.diff(z)[steps] == 1)
    par = z % 2
    assert np.all(par[steps + 1] != par[steps])


def test_two_zone_period():
    sc, pts, ph = _radial_scan(40.0)
    # push each point outward until its phase grows by exactly 2 pi
    d = pts[-1] / np.linalg.norm(pts[-1])
    for p, phase in zip(pts[::997], ph[::997]):
        lo, hi = 0.0, 200.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if excess_phase(p + mid * d, sc, WAVE) < phase + 2 * np.pi:
                lo = mid
            else:
                hi = mid
        q_phase = excess_phase(p + hi * d, sc, WAVE)
        assert q_phase - phase == pytest.approx(2 * np.pi, abs=1e-9)
        # exact multiples of pi sit on a boundary; nudge inside before comparing
        if abs(phase / np.pi - round(phase / np.pi)) > 1e-9:
            assert zone_index(q_phase) - zone_index(phase) == 2


def test_first_zone_boundary_on_pi():
    sc = symmetric_scene(30.0, np.pi / 4, PLANAR)
    bnd = first_zone_boundary(PLANAR, sc, WAVE, 72)
    assert np.allclose(excess_phase(bnd, sc, WAVE), np.pi, atol=1e-9)
    assert np.allclose(bnd[:, 1], 0, atol=1e-12)


def test_containment_reference():
    assert first_zone_contained(PLANAR, symmetric_scene(0.05 * R_FF, np.pi / 4, PLANAR), WAVE)
    assert not first_zone_contained(PLANAR, symmetric_scene(2 * R_FF, np.pi / 4, PLANAR), WAVE)


def test_containment_degenerate_layouts():
    single = make_linear_layout(0, 1.0)
    assert not first_zone_contained(single, symmetric_scene(3.0, np.pi / 4, single), WAVE)
    line = make_linear_layout(10, 0.5)
    assert not first_zone_contained(line, symmetric_scene(3.0, np.pi / 4, line), WAVE)


def test_non_planar_layout():
    pts = np.array([[0, 0, 0], [1, 0, 0], [0, 0, 1], [0, 0.5, 0.5]], dtype=float)
    lay = ArrayLayout(pts, 1.0)
    with pytest.raises(NonPlanarLayout):
        first_zone_contained(lay, Scene([0, 10.0, 0], [3, 10.0, 0]), WAVE)
