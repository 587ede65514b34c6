"""Free-space field primitives.

Time convention is e^{+jwt}; outgoing spherical waves carry e^{-jkr}.
Everything here is a pure function of immutable inputs.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import constants
from scipy.interpolate import RegularGridInterpolator

from .errors import PolarAxisSingularity, TooCloseToElement, ZeroDistance

UNIT_TOL = 1e-9
AXIS_TOL = 1e-12


@dataclass(frozen=True)
class Medium:
    """Homogeneous lossless medium given by permeability and permittivity."""

    mu: float = constants.mu_0
    epsilon: float = constants.epsilon_0

    def __post_init__(self):
        if not (self.mu > 0 and self.epsilon > 0):
            raise ValueError("mu and epsilon must be strictly positive")

    @property
    def eta(self) -> float:
        "Wave impedance in ohm."
        return float(np.sqrt(self.mu / self.epsilon))

    @property
    def c(self) -> float:
        "Phase velocity in m/s."
        return float(1.0 / np.sqrt(self.mu * self.epsilon))


FREE_SPACE = Medium()


@dataclass(frozen=True)
class Wave:
    """Monochromatic wave in a medium."""

    frequency: float
    medium: Medium = field(default=FREE_SPACE)

    def __post_init__(self):
        if not self.frequency > 0:
            raise ValueError("frequency must be positive")

    @classmethod
    def from_wavelength(cls, wavelength: float, medium: Medium = FREE_SPACE) -> "Wave":
        if not wavelength > 0:
            raise ValueError("wavelength must be positive")
        return cls(medium.c / wavelength, medium)

    @property
    def wavelength(self) -> float:
        return self.medium.c / self.frequency

    @property
    def k(self) -> float:
        "Wavenumber in rad/m."
        return 2.0 * np.pi / self.wavelength

    @property
    def omega(self) -> float:
        return 2.0 * np.pi * self.frequency


def _as_points(r: ArrayLike) -> NDArray[np.float64]:
    r = np.asarray(r, dtype=float)
    if r.shape[-1] != 3:
        raise ValueError(f"expected 3-vectors, got shape {r.shape}")
    return r


def _check_unit(direction: NDArray[np.float64]) -> None:
    norm = np.linalg.norm(direction, axis=-1)
    if np.any(np.abs(norm - 1.0) > UNIT_TOL):
        raise ValueError("direction must be a unit vector (within 1e-9)")


def to_spherical(direction: ArrayLike) -> tuple[NDArray, NDArray]:
    """Polar angle from +z and azimuth in [0, 2pi) for unit vectors."""
    d = _as_points(direction)
    theta = np.arccos(np.clip(d[..., 2], -1.0, 1.0))
    phi = np.mod(np.arctan2(d[..., 1], d[..., 0]), 2.0 * np.pi)
    return theta, phi


class ElementPattern:
    """Scalar radiation vector F_{0,p}(r_hat) along one polarization.

    Subclasses implement ``evaluate`` on an (..., 3) array of unit vectors.
    ``max_dimension`` is the element size D0 used for its far-field guard.
    """

    polarization = "theta"
    max_dimension = 0.0

    def evaluate(self, directions: NDArray[np.float64]) -> NDArray[np.complex128]:
        raise NotImplementedError

    @property
    def is_isotropic(self) -> bool:
        return False


@dataclass(frozen=True)
class Isotropic(ElementPattern):
    amplitude: complex = 1.0
    polarization: str = "theta"
    max_dimension: float = 0.0

    def evaluate(self, directions):
        directions = np.asarray(directions)
        return np.full(directions.shape[:-1], complex(self.amplitude), dtype=complex)

    @property
    def is_isotropic(self) -> bool:
        return True


@dataclass(frozen=True)
class HalfWaveDipole(ElementPattern):
    """z-oriented half-wave dipole, theta-polarized.

    The angular shape cos(pi/2 cos(theta)) / sin(theta) is scaled by
    ``scale`` (metres), which defaults to the effective length lambda/pi.
    """

    wavelength: float
    scale: float | None = None
    polarization: str = "theta"

    @property
    def max_dimension(self) -> float:
        return self.wavelength / 2.0

    @property
    def amplitude(self) -> float:
        return self.wavelength / np.pi if self.scale is None else self.scale

    def evaluate(self, directions):
        theta, _ = to_spherical(directions)
        s = np.sin(theta)
        on_axis = s < AXIS_TOL
        if np.any(on_axis):
            warnings.warn("dipole evaluated on its axis; using the limit 0",
                          PolarAxisSingularity, stacklevel=3)
        safe = np.where(on_axis, 1.0, s)
        out = np.cos(0.5 * np.pi * np.cos(theta)) / safe
        out = np.where(on_axis, 0.0, out)
        return (self.amplitude * out).astype(complex)


class Tabulated(ElementPattern):
    """Pattern sampled on a full regular (theta, phi) grid.

    theta must span [0, pi] inclusive, phi must start at 0 and stay below
    2 pi; the azimuth is treated as periodic. Bilinear interpolation, no
    extrapolation.
    """

    def __init__(self, theta: ArrayLike, phi: ArrayLike, values: ArrayLike,
                 polarization: str = "theta", max_dimension: float = 0.0):
        theta = np.asarray(theta, dtype=float)
        phi = np.asarray(phi, dtype=float)
        values = np.asarray(values, dtype=complex)
        if values.shape != (theta.size, phi.size):
            raise ValueError("values must have shape (len(theta), len(phi))")
        if theta.size < 2 or np.any(np.diff(theta) <= 0):
            raise ValueError("theta grid must be strictly increasing")
        if not (np.isclose(theta[0], 0.0) and np.isclose(theta[-1], np.pi)):
            raise ValueError("theta grid must cover [0, pi]")
        if phi.size < 1 or np.any(np.diff(phi) <= 0):
            raise ValueError("phi grid must be strictly increasing")
        if not np.isclose(phi[0], 0.0) or phi[-1] >= 2.0 * np.pi:
            raise ValueError("phi grid must start at 0 and stay below 2*pi")
        self.theta = theta
        self.phi = phi
        self.values = values
        self.polarization = polarization
        self.max_dimension = float(max_dimension)
        phi_ext = np.append(phi, 2.0 * np.pi)
        values_ext = np.concatenate([values, values[:, :1]], axis=1)
        self._interp = RegularGridInterpolator(
            (theta, phi_ext), values_ext, method="linear", bounds_error=True)

    def evaluate(self, directions):
        theta, phi = to_spherical(directions)
        pts = np.stack([np.clip(theta, self.theta[0], self.theta[-1]), phi], axis=-1)
        return self._interp(pts.reshape(-1, 2)).reshape(theta.shape).astype(complex)

    @classmethod
    def from_csv(cls, path: str | Path, polarization: str = "theta",
                 max_dimension: float = 0.0) -> "Tabulated":
        """Load a ``theta_rad,phi_rad,re,im`` table sorted by theta then phi."""
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = [h.strip() for h in next(reader)]
            if header != ["theta_rad", "phi_rad", "re", "im"]:
                raise ValueError(f"unexpected pattern header {header}")
            rows = np.array([[float(v) for v in row] for row in reader if row])
        if rows.size == 0:
            raise ValueError("pattern file has no samples")
        theta = np.unique(rows[:, 0])
        phi = np.unique(rows[:, 1])
        if rows.shape[0] != theta.size * phi.size:
            raise ValueError("pattern grid has gaps")
        expected = np.stack(np.meshgrid(theta, phi, indexing="ij"), -1).reshape(-1, 2)
        if not np.array_equal(rows[:, :2], expected):
            raise ValueError("pattern rows must be sorted by theta then phi")
        values = (rows[:, 2] + 1j * rows[:, 3]).reshape(theta.size, phi.size)
        return cls(theta, phi, values, polarization, max_dimension)


def element_guard(pattern: ElementPattern, wave: Wave) -> float:
    """Closest admissible distance to an element: max(2 D0^2 / lambda, lambda)."""
    d0 = pattern.max_dimension
    return max(2.0 * d0 * d0 / wave.wavelength, wave.wavelength)


def green(wave: Wave, r: ArrayLike) -> complex | NDArray[np.complex128]:
    """Free-space Green function exp(-jk|r|) / (4 pi |r|).

    Vectorized over leading axes of ``r``.
    """
    r = _as_points(r)
    dist = np.linalg.norm(r, axis=-1)
    if np.any(dist == 0):
        raise ZeroDistance("Green function is singular at |r| = 0")
    out = np.exp(-1j * wave.k * dist) / (4.0 * np.pi * dist)
    return out[()] if out.ndim == 0 else out


def green_farfield(wave: Wave, r_obs: ArrayLike, r_src: ArrayLike) -> complex:
    """Far-field form of G(r_obs - r_src): first-order phase, zero-order amplitude."""
    r_obs = _as_points(r_obs)
    r_src = _as_points(r_src)
    dist = np.linalg.norm(r_obs, axis=-1)
    if np.any(dist == 0):
        raise ZeroDistance("far-field Green function needs |r_obs| > 0")
    r_hat = r_obs / dist[..., None]
    phase = dist - np.sum(r_hat * r_src, axis=-1)
    out = np.exp(-1j * wave.k * phase) / (4.0 * np.pi * dist)
    return out[()] if out.ndim == 0 else out


def radiation_vector(pattern: ElementPattern, direction: ArrayLike) -> complex:
    direction = _as_points(direction)
    _check_unit(direction)
    out = pattern.evaluate(direction)
    return out[()] if np.ndim(out) == 0 else out


def radiated_field(wave: Wave, current: complex, pattern: ElementPattern,
                   r: ArrayLike) -> complex:
    """Far field of a single element fed with ``current`` at the origin.

    E = -j I k eta G(r) F(r_hat). Points inside the element guard are
    rejected with TooCloseToElement.
    """
    r = _as_points(r)
    dist = float(np.linalg.norm(r))
    guard = element_guard(pattern, wave)
    if dist < guard:
        raise TooCloseToElement(
            f"|r| = {dist:g} m is inside the element guard {guard:g} m", distance=dist)
    f = pattern.evaluate(r / dist)
    return complex(-1j * current * wave.k * wave.medium.eta * green(wave, r) * f)


def emf(pattern: ElementPattern, direction: ArrayLike, e_inc: complex) -> complex:
    """Open-circuit voltage induced by an incident field arriving from ``direction``."""
    return complex(radiation_vector(pattern, direction) * e_inc)
