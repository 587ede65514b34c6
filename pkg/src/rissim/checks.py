"""Built-in property suite run by ``rissim validate``."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .em_core import Isotropic, Wave
from .fresnel import fresnel_radius
from .geometry import (ArrayLayout, Scene, dimensions, farfield_distance, make_linear_layout,
                       make_planar_layout)
from .ris_model import (DiagonalSelf, FullMatrix, Reactive, RisConstants, ShortCircuit,
                        SourceExcitation, kernel, manifold, scattered_field,
                        scattered_field_oracle, steering_farfield)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0


def random_layout(rng: np.random.Generator, max_elements: int, wavelength: float) -> ArrayLayout:
    while True:
        k_h = int(rng.integers(0, 6))
        k_v = int(rng.integers(0, 6))
        if (2 * k_h + 1) * (2 * k_v + 1) <= max_elements:
            break
    return make_planar_layout(k_h, k_v, wavelength * rng.uniform(0.2, 1.0))


def random_scene(rng: np.random.Generator, layout: ArrayLayout, wavelength: float) -> Scene:
    """Tx and Rx in front of the RIS, at least 2 lambda from every element."""
    pts = []
    while len(pts) < 2:
        d = rng.normal(size=3)
        d[1] = abs(d[1]) + 0.1
        p = rng.uniform(2.0, 60.0) * wavelength * d / np.linalg.norm(d)
        if np.min(np.linalg.norm(layout.positions - p, axis=1)) > 2.0 * wavelength:
            pts.append(p)
    return Scene(pts[0], pts[1])


def random_symmetric_impedance(rng: np.random.Generator, n: int, z_a=73.0 + 42.5j) -> FullMatrix:
    c = (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))) * 5.0
    return FullMatrix(z_a * np.eye(n) + 0.5 * (c + c.T))


def _rel(a: complex, b: complex) -> float:
    return abs(a - b) / max(abs(b), 1e-300)


def check_oracle_equivalence(n_scenes=100, max_elements=121, seed=0, hermitian=False,
                             wavelength=1.0) -> CheckResult:
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    wave = Wave.from_wavelength(wavelength)
    consts = RisConstants()
    worst = 0.0
    for _ in range(n_scenes):
        layout = random_layout(rng, max_elements, wavelength)
        scene = random_scene(rng, layout, wavelength)
        K = kernel(DiagonalSelf(consts.z_a), ShortCircuit(), len(layout))
        e = scattered_field(scene, layout, Isotropic(consts.f_iso), wave, K,
                            SourceExcitation(consts.i_tx, Isotropic(consts.f_iso)), hermitian)
        worst = max(worst, _rel(e, scattered_field_oracle(scene, layout, wave, consts)))
    return CheckResult("oracle equivalence", worst <= 1e-12,
                       f"max rel err {worst:.2e} over {n_scenes} scenes (tol 1e-12)",
                       time.perf_counter() - t0)


def check_reciprocity(n_cases=100, max_elements=49, seed=1, hermitian=False,
                      wavelength=1.0) -> CheckResult:
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    wave = Wave.from_wavelength(wavelength)
    pattern = Isotropic()
    worst = 0.0
    for _ in range(n_cases):
        layout = random_layout(rng, max_elements, wavelength)
        scene = random_scene(rng, layout, wavelength)
        n = len(layout)
        K = kernel(random_symmetric_impedance(rng, n), Reactive(rng.uniform(-200, 200, n)))
        e1 = scattered_field(scene, layout, pattern, wave, K, hermitian=hermitian)
        e2 = scattered_field(scene.swapped(), layout, pattern, wave, K, hermitian=hermitian)
        worst = max(worst, abs(abs(e1) - abs(e2)) / max(abs(e1), 1e-300))
    return CheckResult("reciprocity", worst <= 1e-12,
                       f"max rel |E| change under Tx<->Rx swap {worst:.2e} (tol 1e-12)",
                       time.perf_counter() - t0)


def check_fresnel_identity(wavelength=0.1) -> CheckResult:
    import warnings

    from .errors import ApproximationOutOfRange
    t0 = time.perf_counter()
    wave = Wave.from_wavelength(wavelength)
    worst = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ApproximationOutOfRange)
        for D in (0.01, 0.1, 1.0, 10.0):
            r1 = fresnel_radius(1, farfield_distance(D, wave), wave.wavelength)
            worst = max(worst, abs(r1 - D) / D)
    return CheckResult("R1(r_FF) = D", worst <= 1e-12, f"max rel err {worst:.2e}",
                       time.perf_counter() - t0)


def farfield_match(layout: ArrayLayout, wave: Wave, direction, factor=100.0) -> float:
    """|<a_norm, a_ff>| / (|a_norm| |a_ff|) at ``factor`` times r_FF along ``direction``."""
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    r_ff = farfield_distance(dimensions(layout).D, wave)
    r = factor * max(r_ff, wave.wavelength)
    pattern = Isotropic()
    a = manifold(layout, pattern, wave, r * d)
    a_norm = a / (np.exp(-1j * wave.k * r) / (4.0 * np.pi * r))
    s = steering_farfield(layout, pattern, wave, d)
    return float(abs(np.vdot(s, a_norm)) / (np.linalg.norm(s) * np.linalg.norm(a_norm)))


def check_farfield_limit(quick=False, wavelength=1.0) -> CheckResult:
    t0 = time.perf_counter()
    wave = Wave.from_wavelength(wavelength)
    layouts = [make_linear_layout(10, wavelength / 2)]
    if not quick:
        layouts.append(make_planar_layout(10, 10, wavelength / 2))
    else:
        layouts.append(make_planar_layout(2, 2, wavelength / 2))
    direction = np.array([np.sin(np.pi / 4), np.cos(np.pi / 4), 0.0])
    worst = min(farfield_match(L, wave, direction) for L in layouts)
    return CheckResult("far-field limit", worst > 0.999,
                       f"min normalized inner product {worst:.6f} (need > 0.999)",
                       time.perf_counter() - t0)


def run_suite(quick: bool = False, hermitian: bool = False, seed: int = 0) -> list[CheckResult]:
    max_n = 25 if quick else 121
    n = 25 if quick else 100
    return [
        check_oracle_equivalence(n, max_n, seed, hermitian),
        check_reciprocity(n, min(max_n, 49), seed + 1, hermitian),
        check_fresnel_identity(),
        check_farfield_limit(quick),
    ]


def format_table(results: list[CheckResult]) -> str:
    width = max(len(r.name) for r in results)
    lines = [f"{'check':<{width}}  result  detail"]
    for r in results:
        lines.append(f"{r.name:<{width}}  {'PASS' if r.passed else 'FAIL':<6}  {r.detail}")
    return "\n".join(lines)
