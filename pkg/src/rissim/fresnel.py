"""Fresnel-zone structure at the RIS plane.

Zone membership uses exact path lengths referred to the specular path
(mirror-image construction). The closed-form midpoint radius
sqrt(l lambda r / 2) is kept separately for analytical checks.
"""

from __future__ import annotations

import io
import warnings
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.optimize import brentq
from scipy.spatial import ConvexHull, QhullError

from .em_core import Wave
from .errors import ApproximationOutOfRange, DegeneratePoint, NonPlanarLayout
from .geometry import ArrayLayout, Scene

PLANARITY_TOL = 1e-9


@dataclass(frozen=True)
class FresnelSpec:
    l: int
    r: float
    wavelength: float

    def __post_init__(self):
        if int(self.l) != self.l or self.l < 1:
            raise ValueError("zone index l must be an integer >= 1")
        if not (self.r > 0 and self.wavelength > 0):
            raise ValueError("r and wavelength must be positive")

    @property
    def out_of_range(self) -> bool:
        "True when r <= 10 l lambda, where the closed form is unreliable."
        return self.r <= 10.0 * self.l * self.wavelength

    def radius(self) -> float:
        return fresnel_radius(self.l, self.r, self.wavelength)


def fresnel_radius(l: int, r: float, wavelength: float) -> float:
    """Midpoint radius sqrt(l lambda r / 2) of zone ``l`` for the symmetric path."""
    spec = FresnelSpec(l, r, wavelength)
    if spec.out_of_range:
        warnings.warn(f"Fresnel radius for l={l} at r={r:g} m is outside r >> l*lambda",
                      ApproximationOutOfRange, stacklevel=2)
    return float(np.sqrt(l * wavelength * r / 2.0))


def zone_gap(l: int, r: float, wavelength: float) -> float:
    "Radial width R_{l+1} - R_l."
    return fresnel_radius(l + 1, r, wavelength) - fresnel_radius(l, r, wavelength)


def mirror_point(point: ArrayLike, scene: Scene) -> NDArray[np.float64]:
    p = np.asarray(point, dtype=float)
    n = scene.plane_normal
    return p - 2.0 * np.dot(p - scene.plane_point, n) * n


def specular_point(scene: Scene) -> NDArray[np.float64]:
    """Reflection point on the RIS plane, where the Tx-plane-Rx path is shortest."""
    n = scene.plane_normal
    rx_img = mirror_point(scene.r_rx, scene)
    h_tx = np.dot(scene.r_tx - scene.plane_point, n)
    h_img = np.dot(rx_img - scene.plane_point, n)
    if h_tx == h_img:
        raise DegeneratePoint("Tx and Rx image are at the same height")
    t = h_tx / (h_tx - h_img)
    return scene.r_tx + t * (rx_img - scene.r_tx)


def specular_path_length(scene: Scene) -> float:
    return float(np.linalg.norm(scene.r_tx - mirror_point(scene.r_rx, scene)))


def excess_phase(point: ArrayLike, scene: Scene, wave: Wave) -> float | NDArray[np.float64]:
    """k (|p - r_tx| + |p - r_rx| - r_min) for points on the RIS plane.

    Vectorized over leading axes of ``point``.
    """
    p = np.asarray(point, dtype=float)
    d_t = np.linalg.norm(p - scene.r_tx, axis=-1)
    d_r = np.linalg.norm(p - scene.r_rx, axis=-1)
    if np.any(d_t == 0) or np.any(d_r == 0):
        raise DegeneratePoint("point coincides with the transmitter or receiver")
    out = wave.k * (d_t + d_r - specular_path_length(scene))
    return out[()] if np.ndim(out) == 0 else out


def zone_index(phase: ArrayLike) -> NDArray[np.int64]:
    "Zone l holds excess phases in [(l-1) pi, l pi)."
    ph = np.maximum(np.asarray(phase, dtype=float), 0.0)
    return (np.floor(ph / np.pi) + 1).astype(np.int64)


@dataclass(frozen=True, eq=False)
class ZoneMap:
    zone: NDArray[np.int64]
    excess_phase: NDArray[np.float64]

    @property
    def constructive(self) -> NDArray[np.bool_]:
        return self.zone % 2 == 1

    @property
    def zones_present(self) -> list[int]:
        return sorted(int(z) for z in np.unique(self.zone))

    def to_csv(self, layout: ArrayLayout) -> str:
        buf = io.StringIO()
        buf.write("n,x,y,z,zone,parity,excess_phase_rad\n")
        for i, (p, z, ph) in enumerate(zip(layout.positions, self.zone, self.excess_phase)):
            parity = "constructive" if z % 2 == 1 else "destructive"
            x, y, zz = (float(c) for c in p)
            buf.write(f"{i},{x!r},{y!r},{zz!r},{int(z)},{parity},{float(ph)!r}\n")
        return buf.getvalue()


def classify_elements(layout: ArrayLayout, scene: Scene, wave: Wave) -> ZoneMap:
    phase = np.asarray(excess_phase(layout.positions, scene, wave), dtype=float).reshape(-1)
    return ZoneMap(zone_index(phase), phase)


def _plane_frame(layout: ArrayLayout):
    pos = layout.positions
    centred = pos - pos.mean(axis=0)
    scale = max(float(np.max(np.abs(centred))) if centred.size else 0.0, 1.0)
    if np.max(np.abs(centred @ layout.normal)) > PLANARITY_TOL * scale:
        raise NonPlanarLayout("layout positions do not lie in one plane")
    return layout.horizontal, layout.vertical


def first_zone_boundary(layout: ArrayLayout, scene: Scene, wave: Wave,
                        n_samples: int = 360) -> NDArray[np.float64]:
    """Points on the RIS plane where the excess phase equals pi."""
    u, v = _plane_frame(layout)
    s = specular_point(scene)
    out = np.empty((n_samples, 3))
    for i, psi in enumerate(np.linspace(0.0, 2.0 * np.pi, n_samples, endpoint=False)):
        d = np.cos(psi) * u + np.sin(psi) * v

        def f(t):
            return excess_phase(s + t * d, scene, wave) - np.pi

        hi = wave.wavelength
        while f(hi) <= 0:
            hi *= 2.0
        out[i] = s + brentq(f, 0.0, hi, xtol=1e-12 * hi) * d
    return out


def first_zone_contained(layout: ArrayLayout, scene: Scene, wave: Wave,
                         n_samples: int = 360) -> bool:
    """Whether the whole first-zone boundary lies inside the layout's convex hull."""
    u, v = _plane_frame(layout)
    uv = np.stack([layout.positions @ u, layout.positions @ v], axis=1)
    if len(layout) < 3:
        return False
    try:
        hull = ConvexHull(uv)
    except QhullError:
        return False  # collinear footprint has no area
    bnd = first_zone_boundary(layout, scene, wave, n_samples)
    pts = np.stack([bnd @ u, bnd @ v], axis=1)
    tol = 1e-12 * max(float(np.max(np.abs(uv))), 1.0)
    inside = np.all(pts @ hull.equations[:, :2].T + hull.equations[:, 2] <= tol, axis=1)
    return bool(np.all(inside))
