"""RIS layouts, Tx/Rx scenes and characteristic array dimensions.

Coordinates: the RIS lies in the x-z plane with normal +y. The horizontal
axis is x and the vertical (dipole) axis is z.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.spatial import ConvexHull, QhullError

from .em_core import Wave
from .errors import ConfigError, EmptyLayout, InvalidAngle, InvalidSpacing

X_HAT = np.array([1.0, 0.0, 0.0])
Y_HAT = np.array([0.0, 1.0, 0.0])
Z_HAT = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True, eq=False)
class ArrayLayout:
    """Element centres of a RIS.

    ``counts`` is (K_h, K_v) for generated grids, giving (2K_h+1)(2K_v+1)
    elements; layouts read from explicit positions carry ``counts=None``.
    """

    positions: NDArray[np.float64]
    spacing: float
    counts: tuple[int, int] | None = None
    normal: NDArray[np.float64] = field(default_factory=lambda: Y_HAT.copy())
    horizontal: NDArray[np.float64] = field(default_factory=lambda: X_HAT.copy())

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float).reshape(-1, 3)
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        n = np.asarray(self.normal, dtype=float)
        object.__setattr__(self, "normal", n / np.linalg.norm(n))
        h = np.asarray(self.horizontal, dtype=float)
        h = h - np.dot(h, self.normal) * self.normal
        object.__setattr__(self, "horizontal", h / np.linalg.norm(h))

    def __len__(self) -> int:
        return self.positions.shape[0]

    @property
    def n_elements(self) -> int:
        return len(self)

    @property
    def vertical(self) -> NDArray[np.float64]:
        return np.cross(self.horizontal, self.normal)

    @property
    def is_planar_grid(self) -> bool:
        return self.counts is not None and self.counts[0] > 0 and self.counts[1] > 0

    def in_plane(self, points: ArrayLike | None = None) -> NDArray[np.float64]:
        "Coordinates along (horizontal, vertical) of points in the RIS plane."
        p = self.positions if points is None else np.asarray(points, dtype=float)
        return np.stack([p @ self.horizontal, p @ self.vertical], axis=-1)

    def to_dict(self) -> dict:
        k_h, k_v = self.counts if self.counts is not None else (None, None)
        return {
            "spacing_m": self.spacing,
            "k_h": k_h,
            "k_v": k_v,
            "positions": self.positions.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ArrayLayout":
        """Build a layout from its JSON form; explicit positions win."""
        try:
            spacing = float(data["spacing_m"])
        except (KeyError, TypeError, ValueError):
            raise ConfigError("layout needs a numeric 'spacing_m'", "spacing_m")
        positions = data.get("positions")
        if positions is not None:
            pos = np.asarray(positions, dtype=float)
            if pos.size == 0:
                raise EmptyLayout("layout has no positions")
            if pos.ndim != 2 or pos.shape[1] != 3:
                raise ConfigError("positions must be a list of [x, y, z]", "positions")
            k_h, k_v = data.get("k_h"), data.get("k_v")
            counts = (int(k_h), int(k_v)) if k_h is not None and k_v is not None else None
            if counts is not None and pos.shape[0] != (2 * counts[0] + 1) * (2 * counts[1] + 1):
                counts = None
            return cls(pos, spacing, counts)
        if data.get("k_h") is None:
            raise ConfigError("layout needs 'positions' or 'k_h'", "k_h")
        return make_planar_layout(int(data["k_h"]), int(data.get("k_v") or 0), spacing)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2))

    @classmethod
    def load(cls, path: str | Path) -> "ArrayLayout":
        return cls.from_dict(json.loads(Path(path).read_text()))


def make_planar_layout(k_h: int, k_v: int, spacing: float) -> ArrayLayout:
    """(2K_h+1) x (2K_v+1) grid centred on the origin, x-major ordering."""
    if not spacing > 0:
        raise InvalidSpacing(f"spacing must be positive, got {spacing}")
    if k_h < 0 or k_v < 0:
        raise ValueError("K_h and K_v must be non-negative")
    xs = np.arange(-k_h, k_h + 1) * spacing
    zs = np.arange(-k_v, k_v + 1) * spacing
    gx, gz = np.meshgrid(xs, zs, indexing="ij")
    pos = np.stack([gx.ravel(), np.zeros(gx.size), gz.ravel()], axis=1)
    return ArrayLayout(pos, float(spacing), (int(k_h), int(k_v)))


def make_linear_layout(k_h: int, spacing: float) -> ArrayLayout:
    return make_planar_layout(k_h, 0, spacing)


@dataclass(frozen=True)
class Dimensions:
    D: float
    D_visible: float
    D0: float = 0.0


def _diameter(points: NDArray[np.float64]) -> float:
    """Largest pairwise distance, restricted to convex-hull candidates.

    Distances are evaluated on the original coordinates, so the result is
    bit-identical to an all-pairs search.
    """
    n = points.shape[0]
    if n < 2:
        return 0.0
    cand = np.arange(n)
    if n > 64:
        centred = points - points.mean(axis=0)
        _, s, vt = np.linalg.svd(centred, full_matrices=False)
        rank = int(np.sum(s > 1e-9 * max(s[0], 1e-300)))
        try:
            if rank >= 2:
                hull = ConvexHull(centred @ vt[:rank].T)
                cand = hull.vertices
            elif rank == 1:
                t = centred @ vt[0]
                cand = np.flatnonzero((t == t.min()) | (t == t.max()))
        except QhullError:
            cand = np.arange(n)
    p = points[cand]
    best = 0.0
    for i in range(len(p) - 1):
        d = np.sqrt(np.sum((p[i + 1:] - p[i]) ** 2, axis=1))
        best = max(best, float(d.max()))
    return best


def project_transverse(points: ArrayLike, direction: ArrayLike) -> NDArray[np.float64]:
    "Project points onto the plane orthogonal to ``direction``."
    p = np.asarray(points, dtype=float)
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    return p - np.outer(p @ d, d)


def dimensions(layout: ArrayLayout, propagation_dir: ArrayLike | None = None,
               element_size: float = 0.0) -> Dimensions:
    """Largest physical dimension and visible dimension of a layout.

    The visible dimension is the largest pairwise distance once positions
    are projected on the plane transverse to ``propagation_dir``.
    """
    if len(layout) == 0:
        raise EmptyLayout("layout has no elements")
    D = _diameter(layout.positions)
    if propagation_dir is None:
        D_vis = D
    else:
        D_vis = _diameter(project_transverse(layout.positions, propagation_dir))
    return Dimensions(D, D_vis, element_size)


def side_length(layout: ArrayLayout) -> float:
    "Longest bounding-box edge in the RIS plane (alternative D for r_FF)."
    if len(layout) == 0:
        raise EmptyLayout("layout has no elements")
    uv = layout.in_plane()
    return float(np.max(uv.max(axis=0) - uv.min(axis=0)))


def farfield_distance(D: float, wave: Wave) -> float:
    """Lower limit 2 D^2 / lambda of the far-field region."""
    if D < 0:
        raise ValueError("D must be non-negative")
    return 2.0 * D * D / wave.wavelength


@dataclass(frozen=True, eq=False)
class Scene:
    """Transmitter and receiver positions in RIS-centred coordinates.

    The RIS plane passes through ``plane_point`` with unit ``plane_normal``;
    it is used for the specular reference of Fresnel computations.
    """

    r_tx: NDArray[np.float64]
    r_rx: NDArray[np.float64]
    r_tr: float | None = None
    plane_normal: NDArray[np.float64] = field(default_factory=lambda: Y_HAT.copy())
    plane_point: NDArray[np.float64] = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        object.__setattr__(self, "r_tx", np.asarray(self.r_tx, dtype=float))
        object.__setattr__(self, "r_rx", np.asarray(self.r_rx, dtype=float))
        if self.r_tr is None:
            object.__setattr__(self, "r_tr", float(np.linalg.norm(self.r_tx - self.r_rx)))

    def swapped(self) -> "Scene":
        return Scene(self.r_rx, self.r_tx, self.r_tr, self.plane_normal, self.plane_point)


def symmetric_scene(r: float, angle: float, layout: ArrayLayout) -> Scene:
    """Tx and Rx at distance ``r`` and +/- ``angle`` from the RIS normal.

    Both lie in the plane spanned by the normal and the horizontal axis,
    on opposite sides of the normal (specular configuration).
    """
    if not r > 0:
        raise ValueError("r must be positive")
    if not 0.0 < angle < 0.5 * np.pi:
        raise InvalidAngle(f"angle must lie in (0, pi/2), got {angle}")
    n, h = layout.normal, layout.horizontal
    r_tx = r * (-np.sin(angle) * h + np.cos(angle) * n)
    r_rx = r * (np.sin(angle) * h + np.cos(angle) * n)
    return Scene(r_tx, r_rx, plane_normal=n.copy())
