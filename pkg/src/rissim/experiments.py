"""Distance sweeps, path-loss exponent fits and refinement studies.

A sweep moves Tx and Rx together along the symmetric specular family
(both at distance r from the RIS centre, +/- angle from the normal) and
records the scattered radiation density at each r.
"""

from __future__ import annotations

import io
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from numpy.typing import NDArray
from scipy.spatial import ConvexHull, QhullError

from .em_core import ElementPattern, Isotropic, Wave
from .errors import InsufficientSamples, RisError
from .geometry import (ArrayLayout, dimensions, farfield_distance, make_planar_layout,
                       side_length, symmetric_scene)
from .ris_model import (DiagonalSelf, IdealPhase, RisConstants, ShortCircuit,
                        SourceExcitation, kernel, optimal_phases, radiation_density,
                        scattered_field)

LOAD_MODES = ("short_circuit", "ideal_phase")
D_DEFINITIONS = ("diagonal", "visible")
FIT_METHODS = ("ols_loglog", "envelope_max")
MIN_FIT_SAMPLES = 8
ENVELOPE_WINDOW = 5


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get("RIS_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True, eq=False)
class SweepSpec:
    layout: ArrayLayout
    wave: Wave
    r_min: float
    r_max: float
    points: int = 200
    spacing: str = "log"
    load_mode: str = "short_circuit"
    angle: float = np.pi / 4
    constants: RisConstants = field(default_factory=RisConstants)
    pattern: ElementPattern = field(default_factory=Isotropic)
    d_definition: str = "diagonal"
    hermitian: bool = False

    def __post_init__(self):
        if self.points < 2:
            raise ValueError("a sweep needs at least 2 points")
        if not self.r_max > self.r_min > 0:
            raise ValueError("need 0 < r_min < r_max")
        if self.spacing not in ("log", "linear"):
            raise ValueError(f"spacing must be 'log' or 'linear', got {self.spacing!r}")
        if self.load_mode not in LOAD_MODES:
            raise ValueError(f"load_mode must be one of {LOAD_MODES}")
        if self.d_definition not in D_DEFINITIONS:
            raise ValueError(f"d_definition must be one of {D_DEFINITIONS}")

    def radii(self) -> NDArray[np.float64]:
        if self.spacing == "log":
            return np.logspace(np.log10(self.r_min), np.log10(self.r_max), self.points)
        return np.linspace(self.r_min, self.r_max, self.points)

    def incidence_direction(self) -> NDArray[np.float64]:
        "Propagation direction from the Tx towards the RIS centre."
        tx = symmetric_scene(1.0, self.angle, self.layout).r_tx
        return -tx / np.linalg.norm(tx)

    def array_dimension(self) -> float:
        dims = dimensions(self.layout, self.incidence_direction())
        return dims.D if self.d_definition == "diagonal" else dims.D_visible

    def r_ff(self) -> float:
        return farfield_distance(self.array_dimension(), self.wave)

    def with_layout(self, layout: ArrayLayout) -> "SweepSpec":
        return replace(self, layout=layout)

    def echo(self) -> dict:
        c = self.constants
        return {
            "n_elements": len(self.layout),
            "counts": list(self.layout.counts) if self.layout.counts else None,
            "element_spacing_m": self.layout.spacing,
            "wavelength_m": self.wave.wavelength,
            "frequency_hz": self.wave.frequency,
            "r_min_m": self.r_min,
            "r_max_m": self.r_max,
            "points": self.points,
            "spacing": self.spacing,
            "load_mode": self.load_mode,
            "angle_rad": self.angle,
            "z_a": {"re": complex(c.z_a).real, "im": complex(c.z_a).imag},
            "f_iso": {"re": complex(c.f_iso).real, "im": complex(c.f_iso).imag},
            "i_tx": {"re": complex(c.i_tx).real, "im": complex(c.i_tx).imag},
            "pattern": type(self.pattern).__name__,
            "d_definition": self.d_definition,
        }


@dataclass(frozen=True, eq=False)
class SweepResult:
    r: NDArray[np.float64]
    density: NDArray[np.float64]
    regime: NDArray[np.str_]
    metadata: dict
    zone_count: NDArray[np.int64] | None = None

    def __len__(self) -> int:
        return self.r.size

    @property
    def r_ff(self) -> float:
        return self.metadata["r_ff_m"]

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("r_m,density_w_m2,regime,zone_count\n")
        zc = self.zone_count if self.zone_count is not None else [None] * len(self)
        for r, p, reg, z in zip(self.r, self.density, self.regime, zc):
            buf.write(f"{float(r)!r},{float(p)!r},{reg},{'' if z is None else int(z)}\n")
        return buf.getvalue()

    def metadata_json(self) -> str:
        return json.dumps(self.metadata, indent=2, sort_keys=True)


def _regimes(r, r_ff):
    return np.where(r > r_ff, "far_field", "near_field")


def _metadata(spec: SweepSpec, kind: str) -> dict:
    diag = dimensions(spec.layout).D
    return {
        "kind": kind,
        "spec": spec.echo(),
        "d_definition": spec.d_definition,
        "D_m": spec.array_dimension(),
        "r_ff_m": spec.r_ff(),
        "r_ff_diagonal_m": farfield_distance(diag, spec.wave),
        "r_ff_side_m": farfield_distance(side_length(spec.layout), spec.wave),
        "conventions": {
            "time": "exp(+j omega t)",
            "bilinear_form": "hermitian" if spec.hermitian else "transpose",
            "ideal_phase_kernel": "exp(+j phi_n) / |Z_A|",
        },
    }


def density_at(spec: SweepSpec, r: float) -> float:
    """Scattered density for one symmetric scene at distance ``r``."""
    n = len(spec.layout)
    scene = symmetric_scene(r, spec.angle, spec.layout)
    model = DiagonalSelf(spec.constants.z_a)
    if spec.load_mode == "ideal_phase":
        K = kernel(model, IdealPhase(optimal_phases(scene, spec.layout, spec.wave)))
    else:
        K = kernel(model, ShortCircuit(), n)
    src = SourceExcitation(spec.constants.i_tx, Isotropic(spec.constants.f_iso))
    e = scattered_field(scene, spec.layout, spec.pattern, spec.wave, K, src, spec.hermitian)
    return float(radiation_density(e, spec.wave.medium))


def _annotated(spec: SweepSpec, r: float) -> float:
    try:
        return density_at(spec, r)
    except RisError as exc:
        try:
            new = type(exc)(f"at r = {r:g} m: {exc}")
        except TypeError:
            new = RisError(f"at r = {r:g} m: {exc}")
        raise new from exc


def distance_sweep(spec: SweepSpec, workers: int | None = None) -> SweepResult:
    r = spec.radii()
    workers = default_workers() if workers is None else workers
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            dens = list(pool.map(lambda x: _annotated(spec, x), r))
    else:
        dens = [_annotated(spec, x) for x in r]
    meta = _metadata(spec, "ris_" + spec.load_mode)
    return SweepResult(r, np.asarray(dens), _regimes(r, meta["r_ff_m"]), meta)


def freespace_baseline(spec: SweepSpec) -> SweepResult:
    """Mirror-equivalent free-space density over the 2r specular path.

    An unbounded short-circuited surface with the same element density
    (cell area s^2) reflects sum_n G G -> -j G(2r) / (2 k cos(angle) s^2)
    by stationary phase, so the baseline is

        prefactor * |G(2r)|^2 / (2 k cos(angle) s^2)^2

    with the same prefactor as the RIS density. It falls exactly as r^-2.
    """
    r = spec.radii()
    k = spec.wave.k
    cell = spec.layout.spacing ** 2
    g2 = 1.0 / (4.0 * np.pi * 2.0 * r)
    dens = spec.constants.density_prefactor(spec.wave) * (g2 / (2.0 * k * np.cos(spec.angle) * cell)) ** 2
    meta = _metadata(spec, "freespace_baseline")
    meta["normalization"] = "mirror-equivalent: prefactor*|G(2r)|^2/(2 k cos(angle) s^2)^2"
    return SweepResult(r, dens, _regimes(r, meta["r_ff_m"]), meta)


@dataclass(frozen=True)
class SlopeFit:
    exponent: float
    intercept: float
    window: tuple[float, float]
    method: str
    r2: float
    n_samples: int

    def to_dict(self) -> dict:
        return {"exponent": self.exponent, "intercept": self.intercept,
                "window_m": list(self.window), "method": self.method,
                "r2": self.r2, "n_samples": self.n_samples}


def sliding_max(values: NDArray[np.float64], width: int = ENVELOPE_WINDOW) -> NDArray[np.float64]:
    "Centred running maximum; the window shrinks at the ends."
    if width < 1:
        raise ValueError("envelope width must be >= 1")
    half = width // 2
    padded = np.pad(np.asarray(values, dtype=float), half, mode="constant",
                    constant_values=-np.inf)
    view = np.lib.stride_tricks.sliding_window_view(padded, 2 * half + 1)
    return view.max(axis=1)


def fit_exponent(result: SweepResult, window: tuple[float, float],
                 method: str = "ols_loglog", envelope_width: int = ENVELOPE_WINDOW) -> SlopeFit:
    """Least-squares slope of log10(density) against log10(r) inside ``window``.

    ``envelope_max`` first replaces the density by its running maximum over
    ``envelope_width`` samples of the whole sweep.
    """
    if method not in FIT_METHODS:
        raise ValueError(f"method must be one of {FIT_METHODS}")
    lo, hi = float(window[0]), float(window[1])
    y = result.density
    if method == "envelope_max":
        y = sliding_max(y, envelope_width)
    mask = (result.r >= lo) & (result.r <= hi)
    n = int(mask.sum())
    if n < MIN_FIT_SAMPLES:
        raise InsufficientSamples(
            f"{n} samples in [{lo:g}, {hi:g}] m; at least {MIN_FIT_SAMPLES} needed")
    x = np.log10(result.r[mask])
    ly = np.log10(y[mask])
    slope, icpt = np.polyfit(x, ly, 1)
    resid = ly - (slope * x + icpt)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else float(np.clip(1.0 - np.sum(resid ** 2) / ss_tot, 0.0, 1.0))
    eff = (max(lo, float(result.r[0])), min(hi, float(result.r[-1])))
    return SlopeFit(float(slope), float(icpt), eff, method, r2, n)


def near_field_window(spec: SweepSpec) -> tuple[float, float]:
    "Default near-field fit window [20 lambda, r_FF / 2]."
    return 20.0 * spec.wave.wavelength, 0.5 * spec.r_ff()


def far_field_window(spec: SweepSpec) -> tuple[float, float]:
    return 2.0 * spec.r_ff(), 20.0 * spec.r_ff()


# -- Fresnel overlay --------------------------------------------------------

def footprint_radius(layout: ArrayLayout, angle: float) -> float:
    """Radius of the equal-area circle of the layout footprint seen along the path.

    Fresnel zones at the midpoint all have area pi lambda r / 2, so a zone
    fits when R_l is below this radius. At oblique incidence the zones are
    stretched by 1/cos(angle) along the horizontal axis, which is folded
    into the footprint instead. A collinear footprint uses its visible
    half-length.
    """
    uv = layout.in_plane()
    if len(layout) < 2:
        return 0.0
    try:
        if len(layout) >= 3:
            area = ConvexHull(uv).volume
            return float(np.sqrt(area * np.cos(angle) / np.pi))
    except QhullError:
        pass
    ext = uv - uv.mean(axis=0)
    _, _, vt = np.linalg.svd(ext, full_matrices=False)
    t = ext @ vt[0]
    half = 0.5 * (t.max() - t.min())
    u, v = vt[0]
    return float(half * np.sqrt((u * np.cos(angle)) ** 2 + v ** 2))


def zone_counts(r: NDArray[np.float64], rho: float, wavelength: float) -> NDArray[np.int64]:
    "Number of l >= 1 with sqrt(l lambda r / 2) <= rho."
    r = np.asarray(r, dtype=float)
    return np.floor(2.0 * rho * rho / (wavelength * r) + 1e-12).astype(np.int64)


def fresnel_overlay(result: SweepResult, layout: ArrayLayout, wave: Wave) -> SweepResult:
    angle = result.metadata["spec"]["angle_rad"]
    rho = footprint_radius(layout, angle)
    meta = dict(result.metadata)
    meta["footprint_radius_m"] = rho
    return replace(result, zone_count=zone_counts(result.r, rho, wave.wavelength), metadata=meta)


def local_extrema(values: NDArray[np.float64]) -> NDArray[np.int64]:
    "Indices of interior strict local maxima and minima."
    d = np.diff(np.asarray(values, dtype=float))
    return np.flatnonzero(d[:-1] * d[1:] < 0) + 1


def extrema_alignment(result: SweepResult, r_lo: float | None = None) -> list[tuple[float, int]]:
    """For each local extremum of the density, the distance in samples to
    the nearest zone-count transition (a transition sits between samples
    i-1 and i). Returns ``(r, steps)`` pairs; ``steps`` is -1 when the sweep
    has no transition at all.
    """
    if result.zone_count is None:
        raise ValueError("run fresnel_overlay first")
    trans = np.flatnonzero(np.diff(result.zone_count) != 0) + 1
    out = []
    for j in local_extrema(np.log10(result.density)):
        if r_lo is not None and result.r[j] < r_lo:
            continue
        if trans.size == 0:
            out.append((float(result.r[j]), -1))
            continue
        steps = int(np.min(np.minimum(np.abs(j - trans), np.abs(j - (trans - 1)))))
        out.append((float(result.r[j]), steps))
    return out


# -- refinement ladder ------------------------------------------------------

@dataclass(frozen=True)
class ConvergenceRow:
    spacing: float
    n_elements: int
    near_field_max_diff_db: float | None
    far_field_max_diff_db: float | None


@dataclass(frozen=True, eq=False)
class ConvergenceStudy:
    rows: list[ConvergenceRow]
    r: NDArray[np.float64]
    normalized: list[NDArray[np.float64]]
    near_window: tuple[float, float]
    far_window: tuple[float, float]


def refined_layout(layout: ArrayLayout, spacing: float) -> ArrayLayout:
    """Same physical aperture as ``layout`` filled at a new spacing."""
    if layout.counts is None:
        raise ValueError("refinement needs a generated grid layout")
    if not spacing > 0:
        raise ValueError("spacing must be positive")
    k_h, k_v = layout.counts
    out = []
    for k in (k_h, k_v):
        half = k * layout.spacing
        kn = int(round(half / spacing))
        if abs(kn * spacing - half) > 1e-9 * max(half, spacing):
            raise ValueError(f"spacing {spacing:g} does not tile the aperture half-width {half:g}")
        out.append(kn)
    return make_planar_layout(out[0], out[1], spacing)


def convergence_study(spec: SweepSpec, spacings: list[float],
                      workers: int | None = None) -> ConvergenceStudy:
    """Refine the element grid at fixed aperture and compare sweeps.

    Densities are normalized by the squared cell measure (s^2 per element
    for grids, s for lines) so each sweep approximates the same aperture
    integral. Differences are max |10 log10(P_i / P_{i-1})| in dB.
    """
    if len(spacings) < 1:
        raise ValueError("need at least one spacing")
    if any(s <= 0 for s in spacings) or any(b > a for a, b in zip(spacings, spacings[1:])):
        raise ValueError("spacings must be positive and non-increasing")
    near = near_field_window(spec)
    far = far_field_window(spec)
    rows, curves = [], []
    r = spec.radii()
    for s in spacings:
        layout = refined_layout(spec.layout, s)
        dims = sum(1 for k in layout.counts if k > 0)
        res = distance_sweep(spec.with_layout(layout), workers)
        curves.append(res.density * s ** (2 * dims))
        if len(curves) == 1:
            rows.append(ConvergenceRow(s, len(layout), None, None))
            continue
        diff = np.abs(10.0 * np.log10(curves[-1] / curves[-2]))
        mn = (r >= near[0]) & (r <= near[1])
        mf = (r >= far[0]) & (r <= far[1])
        rows.append(ConvergenceRow(
            s, len(layout),
            float(diff[mn].max()) if mn.any() else None,
            float(diff[mf].max()) if mf.any() else None))
    return ConvergenceStudy(rows, r, curves, near, far)


def reference_spec(kind: str = "planar", wavelength: float = 1.0, load_mode: str = "short_circuit",
                   points: int = 200, r_min_wavelengths: float = 2.0,
                   r_max_rff: float = 50.0, wave: Wave | None = None) -> SweepSpec:
    """21-element linear or 441-element planar RIS at lambda/2, 45 degree scene."""
    wave = Wave.from_wavelength(wavelength) if wave is None else wave
    lam = wave.wavelength
    k_v = 10 if kind == "planar" else 0
    if kind not in ("planar", "linear"):
        raise ValueError("kind must be 'planar' or 'linear'")
    layout = make_planar_layout(10, k_v, lam / 2.0)
    r_ff = farfield_distance(dimensions(layout).D, wave)
    return SweepSpec(layout, wave, r_min_wavelengths * lam, r_max_rff * r_ff, points,
                     load_mode=load_mode)
