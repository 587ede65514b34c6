"""Scattering by an impedance-loaded antenna array.

The received field is the bilinear form a(r_rx)^T M a(r_tx), where a is the
generalized array manifold (per-element Green function times element
pattern, evaluated at a finite distance) and M = (Z + j X_L)^-1 the loaded
impedance kernel. The unconjugated transpose is used throughout; the
Hermitian form is available behind ``hermitian=True`` for comparison only.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .em_core import ElementPattern, Isotropic, Medium, Wave, element_guard
from .errors import (DimensionMismatch, InvalidBits, NotInFarField, SingularMatrix,
                     TooCloseToElement)
from .geometry import ArrayLayout, Scene, dimensions, farfield_distance

TWO_PI = 2.0 * np.pi
DEFAULT_Z_A = 73.0 + 42.5j
MAX_CONDITION = 1e12
REACTANCE_BOUND = 1e4


def wrap_phase(phi: ArrayLike) -> NDArray[np.float64]:
    "Map angles to [0, 2pi)."
    out = np.mod(np.asarray(phi, dtype=float), TWO_PI)
    return np.where(out >= TWO_PI, 0.0, out)


# -- loads and impedances ---------------------------------------------------

class LoadConfig:
    "Base class for the controllable loads X_L."


@dataclass(frozen=True)
class ShortCircuit(LoadConfig):
    pass


@dataclass(frozen=True, eq=False)
class Reactive(LoadConfig):
    x: NDArray[np.float64]

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float).ravel()
        if not np.all(np.isfinite(x)):
            raise ValueError("reactive loads must be finite")
        object.__setattr__(self, "x", x)


@dataclass(frozen=True, eq=False)
class IdealPhase(LoadConfig):
    """Idealized lossless phase shifters, phases wrapped to [0, 2pi)."""

    phi: NDArray[np.float64]

    def __post_init__(self):
        phi = np.asarray(self.phi, dtype=float).ravel()
        if not np.all(np.isfinite(phi)):
            raise ValueError("phases must be finite")
        object.__setattr__(self, "phi", wrap_phase(phi))


class ImpedanceModel:
    "Base class for the array impedance matrix Z."


@dataclass(frozen=True)
class DiagonalSelf(ImpedanceModel):
    """Uncoupled elements: Z = Z_A I."""

    z_a: complex = DEFAULT_Z_A


@dataclass(frozen=True, eq=False)
class FullMatrix(ImpedanceModel):
    z: NDArray[np.complex128]

    def __post_init__(self):
        z = np.asarray(self.z, dtype=complex)
        if z.ndim != 2 or z.shape[0] != z.shape[1]:
            raise DimensionMismatch(f"impedance matrix must be square, got {z.shape}")
        scale = max(np.max(np.abs(z)), 1e-300)
        if np.max(np.abs(z - z.T)) > 1e-9 * scale:
            raise ValueError("impedance matrix must be transpose-symmetric")
        object.__setattr__(self, "z", z)

    @property
    def n(self) -> int:
        return self.z.shape[0]

    @classmethod
    def from_json(cls, path: str | Path) -> "FullMatrix":
        """Read ``{"n": N, "re": [[...]], "im": [[...]]}``."""
        data = json.loads(Path(path).read_text())
        re = np.asarray(data["re"], dtype=float)
        im = np.asarray(data["im"], dtype=float)
        if re.shape != im.shape or re.shape != (int(data["n"]),) * 2:
            raise DimensionMismatch("impedance re/im must both be n x n")
        return cls(re + 1j * im)

    def to_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(
            {"n": self.n, "re": self.z.real.tolist(), "im": self.z.imag.tolist()}))


def load_vector_json(path: str | Path) -> NDArray[np.float64]:
    "Flat JSON array of loads (ohm) or phases (rad)."
    data = json.loads(Path(path).read_text())
    vec = np.asarray(data, dtype=float)
    if vec.ndim != 1:
        raise ValueError("expected a flat JSON array")
    return vec


@dataclass(frozen=True, eq=False)
class Kernel:
    """M = (Z + j X_L)^-1, stored as a diagonal vector when possible."""

    values: NDArray[np.complex128]
    diagonal: bool
    condition: float | None = None

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def as_matrix(self) -> NDArray[np.complex128]:
        return np.diag(self.values) if self.diagonal else self.values

    def bilinear(self, a_rx: NDArray, a_tx: NDArray, hermitian: bool = False) -> complex:
        "a_rx^T M a_tx (or a_rx^H M a_tx)."
        left = np.conj(a_rx) if hermitian else a_rx
        if self.diagonal:
            # pairing the manifolds first keeps the result exactly swap-symmetric
            return complex(np.sum(self.values * (left * a_tx)))
        return complex(left @ (self.values @ a_tx))


def kernel(model: ImpedanceModel, loads: LoadConfig, n_elements: int | None = None) -> Kernel:
    """Build the loaded kernel.

    ``n_elements`` is only needed when neither the model nor the loads fix N
    (uncoupled elements with short-circuit loads).

    Ideal phase loads give exp(+j phi_n) / |Z_nn|: the phase is an advance,
    so phi_n = k (r_t,n + r_r,n) cancels the path delay of element n.
    """
    if isinstance(loads, Reactive):
        n = loads.x.size
    elif isinstance(loads, IdealPhase):
        n = loads.phi.size
    elif isinstance(model, FullMatrix):
        n = model.n
    elif n_elements is not None:
        n = int(n_elements)
    else:
        raise DimensionMismatch("cannot infer the number of elements")
    if isinstance(model, FullMatrix) and model.n != n:
        raise DimensionMismatch(f"impedance is {model.n}x{model.n} but loads have {n} entries")
    if n_elements is not None and int(n_elements) != n:
        raise DimensionMismatch(f"expected {n_elements} elements, loads have {n}")

    if isinstance(loads, IdealPhase):
        if isinstance(model, DiagonalSelf):
            mag = np.full(n, 1.0 / abs(model.z_a))
        else:
            mag = 1.0 / np.abs(np.diag(model.z))
        return Kernel(mag * np.exp(1j * loads.phi), diagonal=True)

    x = loads.x if isinstance(loads, Reactive) else np.zeros(n)
    if isinstance(model, DiagonalSelf):
        denom = model.z_a + 1j * x
        if np.any(denom == 0):
            raise SingularMatrix("Z_A + j x_n vanishes", condition=np.inf)
        return Kernel(1.0 / denom, diagonal=True)
    if isinstance(model, FullMatrix):
        a = model.z + 1j * np.diag(x)
        if np.count_nonzero(a - np.diag(np.diag(a))) == 0:
            d = np.diag(a)
            if np.any(d == 0):
                raise SingularMatrix("Z + jX_L has a zero diagonal entry", condition=np.inf)
            return Kernel(1.0 / d, diagonal=True, condition=float(np.abs(d).max() / np.abs(d).min()))
        cond = float(np.linalg.cond(a))
        if not np.isfinite(cond) or cond > MAX_CONDITION:
            raise SingularMatrix(f"Z + jX_L is ill-conditioned (cond = {cond:.3g})",
                                 condition=cond)
        # LAPACK gesv: LU with partial pivoting
        inv = np.linalg.solve(a, np.eye(n, dtype=complex))
        return Kernel(inv, diagonal=False, condition=cond)
    raise TypeError(f"unsupported impedance model {model!r}")


# -- manifolds --------------------------------------------------------------

def manifold(layout: ArrayLayout, pattern: ElementPattern, wave: Wave,
             point: ArrayLike) -> NDArray[np.complex128]:
    """Generalized array manifold a_n = G(r - r_n) F(unit(r - r_n))."""
    diff = np.asarray(point, dtype=float) - layout.positions
    dist = np.linalg.norm(diff, axis=1)
    guard = element_guard(pattern, wave)
    bad = np.flatnonzero(dist < guard)
    if bad.size:
        i = int(bad[np.argmin(dist[bad])])
        raise TooCloseToElement(
            f"point is {dist[i]:g} m from element {i}, inside the guard {guard:g} m",
            index=i, distance=float(dist[i]))
    g = np.exp(-1j * wave.k * dist) / (4.0 * np.pi * dist)
    return g * pattern.evaluate(diff / dist[:, None])


def steering_farfield(layout: ArrayLayout, pattern: ElementPattern, wave: Wave,
                      direction: ArrayLike) -> NDArray[np.complex128]:
    """Modified steering vector exp(+jk d.r_n) F(d)."""
    d = np.asarray(direction, dtype=float)
    if abs(np.linalg.norm(d) - 1.0) > 1e-9:
        raise ValueError("direction must be a unit vector")
    f = pattern.evaluate(d[None, :])[0]
    return np.exp(1j * wave.k * (layout.positions @ d)) * f


# -- fields -----------------------------------------------------------------

@dataclass(frozen=True)
class RisConstants:
    """Constants of the isotropic, uncoupled closed forms."""

    z_a: complex = DEFAULT_Z_A
    f_iso: complex = 1.0
    i_tx: complex = 1.0

    def density_prefactor(self, wave: Wave) -> float:
        "k^4 eta^3 |F|^6 |I|^2 / (2 |Z_A|^2)."
        eta = wave.medium.eta
        return (wave.k ** 4 * eta ** 3 * abs(self.f_iso) ** 6 * abs(self.i_tx) ** 2
                / (2.0 * abs(self.z_a) ** 2))


@dataclass(frozen=True)
class SourceExcitation:
    current: complex = 1.0
    pattern: ElementPattern = field(default_factory=Isotropic)


def _tx_pattern_factors(layout: ArrayLayout, scene: Scene, src: SourceExcitation):
    if src.pattern.is_isotropic:
        return src.pattern.evaluate(np.zeros((1, 3)))[0]
    diff = layout.positions - scene.r_tx
    return src.pattern.evaluate(diff / np.linalg.norm(diff, axis=1)[:, None])


def scattered_field(scene: Scene, layout: ArrayLayout, pattern: ElementPattern,
                    wave: Wave, K: Kernel, src: SourceExcitation | None = None,
                    hermitian: bool = False) -> complex:
    """Field scattered by the RIS at r_rx for a source at r_tx (V/m).

    E = k^2 eta^2 a^T(r_rx) M a(r_tx) F_tx I_tx. The transmitter pattern is
    taken along each Tx-to-element direction.
    """
    src = SourceExcitation() if src is None else src
    if K.n != len(layout):
        raise DimensionMismatch(f"kernel has {K.n} elements, layout has {len(layout)}")
    a_rx = manifold(layout, pattern, wave, scene.r_rx)
    a_tx = manifold(layout, pattern, wave, scene.r_tx) * _tx_pattern_factors(layout, scene, src)
    eta = wave.medium.eta
    return wave.k ** 2 * eta ** 2 * K.bilinear(a_rx, a_tx, hermitian) * src.current


def _element_distances(scene: Scene, layout: ArrayLayout, wave: Wave):
    r_t = np.linalg.norm(scene.r_tx - layout.positions, axis=1)
    r_r = np.linalg.norm(scene.r_rx - layout.positions, axis=1)
    guard = wave.wavelength
    for label, dist in (("Tx", r_t), ("Rx", r_r)):
        if np.any(dist < guard):
            i = int(np.argmin(dist))
            raise TooCloseToElement(
                f"{label} is {dist[i]:g} m from element {i}, inside the guard {guard:g} m",
                index=i, distance=float(dist[i]))
    return r_t, r_r


def scattered_field_oracle(scene: Scene, layout: ArrayLayout, wave: Wave,
                           consts: RisConstants = RisConstants()) -> complex:
    """Direct double-product sum for isotropic, uncoupled, short-circuited elements."""
    r_t, r_r = _element_distances(scene, layout, wave)
    k = wave.k
    eta = wave.medium.eta
    total = 0.0 + 0.0j
    for rt, rr in zip(r_t, r_r):
        total += (np.exp(-1j * k * rr) / (4.0 * np.pi * rr)) * (np.exp(-1j * k * rt) / (4.0 * np.pi * rt))
    return complex(k ** 2 * eta ** 2 / consts.z_a * consts.f_iso ** 3 * consts.i_tx * total)


def radiation_density(e: complex | ArrayLike, medium: Medium) -> float | NDArray:
    "Power per unit area |E|^2 / (2 eta) in W/m^2."
    return np.abs(e) ** 2 / (2.0 * medium.eta)


def max_density_smart(scene: Scene, layout: ArrayLayout, wave: Wave,
                      consts: RisConstants = RisConstants()) -> float:
    """Upper bound on density when every element path delay is compensated."""
    r_t, r_r = _element_distances(scene, layout, wave)
    s = np.sum(1.0 / (4.0 * np.pi * r_r) / (4.0 * np.pi * r_t))
    return float(consts.density_prefactor(wave) * s * s)


def optimal_phases(scene: Scene, layout: ArrayLayout, wave: Wave) -> NDArray[np.float64]:
    "Per-element phase advance k (r_t,n + r_r,n) mod 2pi."
    r_t = np.linalg.norm(scene.r_tx - layout.positions, axis=1)
    r_r = np.linalg.norm(scene.r_rx - layout.positions, axis=1)
    return wrap_phase(wave.k * (r_t + r_r))


def quantize_phases(phi: ArrayLike, bits: int) -> NDArray[np.float64]:
    """Round to the nearest of 2^bits uniform levels; ties go to the lower level."""
    if not isinstance(bits, (int, np.integer)) or not 1 <= bits <= 16:
        raise InvalidBits(f"bits must be an integer in [1, 16], got {bits!r}")
    levels = 2 ** int(bits)
    step = TWO_PI / levels
    idx = np.ceil(wrap_phase(phi) / step - 0.5)
    return np.mod(idx, levels) * step


def synthesize_reactive_loads(phi: ArrayLike, z_a: complex = DEFAULT_Z_A,
                              bound: float = REACTANCE_BOUND):
    """Reactances x_n whose kernel 1/(Z_A + j x_n) best matches exp(+j phi_n).

    A passive reactance only reaches kernel phases in (-pi/2, pi/2); other
    targets map to the closer end of [-bound, bound]. Returns
    ``(x, phase_error, magnitude)`` so the magnitude variation is visible.
    """
    target = np.angle(np.exp(1j * np.asarray(phi, dtype=float)))  # (-pi, pi]
    r_a, x_a = z_a.real, z_a.imag
    # arg(1/(R + j(X + x))) = -atan((X + x)/R)
    inside = np.abs(target) < 0.5 * np.pi
    x = np.where(inside, -x_a - r_a * np.tan(np.where(inside, target, 0.0)), 0.0)
    x = np.where(inside, x, np.where(target > 0, -bound, bound))
    x = np.clip(x, -bound, bound)
    k = 1.0 / (z_a + 1j * x)
    err = np.angle(k * np.exp(-1j * target))
    # near +/-pi both ends are close; keep whichever is nearer
    alt = np.where(x == -bound, bound, np.where(x == bound, -bound, x))
    k_alt = 1.0 / (z_a + 1j * alt)
    err_alt = np.angle(k_alt * np.exp(-1j * target))
    swap = np.abs(err_alt) < np.abs(err)
    x = np.where(swap, alt, x)
    err = np.where(swap, err_alt, err)
    return x, err, np.abs(1.0 / (z_a + 1j * x))


def farfield_scattered(dir_inc: ArrayLike, dir_obs: ArrayLike, layout: ArrayLayout,
                       pattern: ElementPattern, wave: Wave, K: Kernel, e_inc: complex,
                       r: float, r_ff: float | None = None, hermitian: bool = False) -> complex:
    """Array far-field scattered field for a plane wave arriving from ``dir_inc``.

    E = j eta exp(-jkr) / (k pi r) a~^T(dir_obs) M a~(dir_inc) E_inc, valid for
    r beyond the far-field distance of the layout (largest dimension).
    """
    if r_ff is None:
        r_ff = farfield_distance(dimensions(layout).D, wave)
    if not r > r_ff:
        raise NotInFarField(f"r = {r:g} m is not beyond r_FF = {r_ff:g} m")
    a_obs = steering_farfield(layout, pattern, wave, dir_obs)
    a_inc = steering_farfield(layout, pattern, wave, dir_inc)
    eta = wave.medium.eta
    pref = 1j * eta * np.exp(-1j * wave.k * r) / (wave.k * np.pi * r)
    return complex(pref * K.bilinear(a_obs, a_inc, hermitian) * e_inc)
