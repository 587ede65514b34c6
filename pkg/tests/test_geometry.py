import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rissim.em_core import Wave
from rissim.errors import ApproximationOutOfRange, ConfigError, EmptyLayout, InvalidAngle, InvalidSpacing
from rissim.fresnel import fresnel_radius
from rissim.geometry import (ArrayLayout, Scene, dimensions, farfield_distance, make_linear_layout,
                             make_planar_layout, side_length, symmetric_scene)

from . import oracles

LAM = 1.0
WAVE = Wave.from_wavelength(LAM)


def test_linear_reference_layout():
    lay = make_linear_layout(10, LAM / 2)
    assert len(lay) == 21
    x = lay.positions[:, 0]
    assert x.max() - x.min() == pytest.approx(10 * LAM)
    assert np.all(lay.positions[:, 1:] == 0)


def test_linear_degenerate_and_symmetric():
    assert make_linear_layout(0, 0.3).positions.tolist() == [[0.0, 0.0, 0.0]]
    assert sorted(make_linear_layout(1, 1.0).positions[:, 0]) == [-1.0, 0.0, 1.0]


def test_planar_reference_layout():
    lay = make_planar_layout(10, 10, LAM / 2)
    assert len(lay) == 441
    assert side_length(lay) == pytest.approx(10 * LAM)
    assert np.all(lay.positions[:, 1] == 0)
    assert len(make_planar_layout(0, 0, 1.0)) == 1


def test_planar_degenerates_to_linear():
    a = make_planar_layout(1, 0, 0.7)
    b = make_linear_layout(1, 0.7)
    assert np.array_equal(a.positions, b.positions)


def test_invalid_spacing():
    with pytest.raises(InvalidSpacing):
        make_planar_layout(1, 1, 0.0)


def test_plane_axes():
    lay = make_planar_layout(1, 1, 1.0)
    assert np.allclose(lay.normal, [0, 1, 0])
    assert np.allclose(lay.horizontal, [1, 0, 0])
    assert np.allclose(lay.vertical, [0, 0, 1])


def test_diagonal_matches_brute_force():
    lay = make_planar_layout(10, 10, LAM / 2)
    assert dimensions(lay).D == pytest.approx(oracles.max_pairwise(lay.positions.tolist()), rel=1e-14)
    assert dimensions(lay).D == pytest.approx(10 * LAM * math.sqrt(2), rel=1e-14)


def test_single_element_dimension():
    assert dimensions(make_linear_layout(0, 1.0)).D == 0


def test_visible_dimension_oblique():
    lay = make_planar_layout(5, 5, 0.1)  # 1 m plate
    d = np.array([np.sin(np.pi / 4), -np.cos(np.pi / 4), 0.0])
    got = dimensions(lay, d).D_visible
    assert got == pytest.approx(oracles.projected_max_pairwise(lay.positions.tolist(), d), rel=1e-12)
    assert got == pytest.approx(math.sqrt(0.5 + 1.0), rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 9), st.integers(0, 9), st.floats(0.05, 2.0))
def test_optimized_diameter_equals_all_pairs(k_h, k_v, s):
    lay = make_planar_layout(k_h, k_v, s)
    p = lay.positions
    diff = p[:, None, :] - p[None, :, :]
    assert dimensions(lay).D == np.sqrt(np.sum(diff ** 2, axis=-1)).max()
    assert dimensions(lay).D == pytest.approx(oracles.max_pairwise(p.tolist()), rel=1e-14)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.tuples(*[st.floats(-5, 5)] * 3), min_size=65, max_size=120))
def test_diameter_random_points(pts):
    lay = ArrayLayout(np.array(pts), 1.0)
    assert dimensions(lay).D == pytest.approx(oracles.max_pairwise(pts), rel=1e-12)


@given(st.integers(0, 8), st.integers(0, 8), st.floats(0.05, 1.0))
def test_farfield_distance_monotone(k_h, k_v, s):
    base = farfield_distance(dimensions(make_planar_layout(k_h, k_v, s)).D, WAVE)
    assert farfield_distance(dimensions(make_planar_layout(k_h + 1, k_v, s)).D, WAVE) >= base
    assert farfield_distance(dimensions(make_planar_layout(k_h, k_v + 1, s)).D, WAVE) >= base


def test_farfield_distance_values():
    w = Wave.from_wavelength(0.1)
    assert farfield_distance(1.0, w) == pytest.approx(20.0)
    assert farfield_distance(0.0, w) == 0
    assert farfield_distance(0.70711, w) == pytest.approx(10.0, abs=1e-3)


@given(st.floats(1e-3, 1e3), st.floats(1e-3, 10.0))
def test_fresnel_identity(D, lam):
    w = Wave.from_wavelength(lam)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ApproximationOutOfRange)
        assert fresnel_radius(1, farfield_distance(D, w), lam) == pytest.approx(D, rel=1e-12)


def test_symmetric_scene_trig():
    sc = symmetric_scene(10.0, np.pi / 4, make_linear_layout(1, 0.5))
    assert np.linalg.norm(sc.r_tx) == pytest.approx(10)
    assert np.linalg.norm(sc.r_rx) == pytest.approx(10)
    assert sc.r_tr == pytest.approx(10 * math.sqrt(2))


@given(st.floats(0.01, 1e4), st.floats(0.01, np.pi / 2 - 0.01))
def test_symmetric_scene_specular(r, a):
    sc = symmetric_scene(r, a, make_linear_layout(1, 0.5))
    n = np.array([0, 1.0, 0])
    inc = np.arccos(sc.r_tx @ n / np.linalg.norm(sc.r_tx))
    obs = np.arccos(sc.r_rx @ n / np.linalg.norm(sc.r_rx))
    assert inc == pytest.approx(obs, abs=1e-12)
    assert inc == pytest.approx(a, abs=1e-9)
    # Tx and Rx are mirror images across the normal-vertical plane
    sw = sc.swapped()
    assert np.allclose(sw.r_tx * [-1, 1, 1], sc.r_tx, atol=1e-12 * r)
    assert sw.r_tr == sc.r_tr


def test_symmetric_scene_rejects_angles():
    lay = make_linear_layout(1, 0.5)
    for a in (0.0, np.pi / 2, -0.1):
        with pytest.raises(InvalidAngle):
            symmetric_scene(1.0, a, lay)


def test_scene_default_tr():
    assert Scene([0, 3.0, 0], [4.0, 0, 0]).r_tr == pytest.approx(5.0)


def test_layout_roundtrip(tmp_path):
    lay = make_planar_layout(2, 1, 0.25)
    f = tmp_path / "lay.json"
    lay.save(f)
    back = ArrayLayout.load(f)
    assert np.array_equal(back.positions, lay.positions)
    assert back.counts == (2, 1) and back.spacing == 0.25


def test_layout_positions_override():
    lay = ArrayLayout.from_dict({"spacing_m": 1.0, "k_h": 3, "k_v": 3,
                                 "positions": [[0, 0, 0], [1, 0, 0]]})
    assert len(lay) == 2 and lay.counts is None


def test_layout_errors():
    with pytest.raises(EmptyLayout):
        ArrayLayout.from_dict({"spacing_m": 1.0, "positions": []})
    with pytest.raises(ConfigError):
        ArrayLayout.from_dict({"k_h": 1})
    with pytest.raises(EmptyLayout):
        dimensions(ArrayLayout(np.zeros((0, 3)), 1.0))
