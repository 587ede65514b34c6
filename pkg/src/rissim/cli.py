"""Command-line front end.

    rissim layout|sweep|fresnel|link|optimize|validate <config.json>
           [--out DIR] [--set key=value]... [--seed N] [--no-timestamps] [--quick]

Exit codes: 0 ok, 1 property failure, 2 config error, 3 numerical error.
"""

from __future__ import annotations

import argparse
import copy
import datetime as _dt
import json
import os
import sys
import tempfile
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .checks import format_table, run_suite
from .em_core import HalfWaveDipole, Isotropic, Tabulated, Wave
from .errors import (ConfigError, EmptyLayout, InsufficientSamples, InvalidAngle,
                     InvalidSpacing, RisError)
from .experiments import (SweepSpec, distance_sweep, far_field_window, fit_exponent,
                          freespace_baseline, fresnel_overlay, near_field_window)
from .fresnel import classify_elements, first_zone_contained
from .geometry import ArrayLayout, dimensions, farfield_distance, symmetric_scene
from .link import NOISE_GENERATOR, LinkModel, effective_channel, qpsk_symbols, simulate, snr_db
from .ris_model import (DiagonalSelf, IdealPhase, RisConstants, ShortCircuit, SourceExcitation,
                        kernel, max_density_smart, optimal_phases, quantize_phases,
                        radiation_density, scattered_field, synthesize_reactive_loads)

EXIT_OK, EXIT_PROPERTY, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3
COMMANDS = ("layout", "sweep", "fresnel", "link", "optimize", "validate")


# -- config handling --------------------------------------------------------

def load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}")
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    return data


def apply_overrides(cfg: dict, overrides: list[str]) -> dict:
    """Apply ``a.b.c=value`` overrides; values are parsed as JSON when possible."""
    cfg = copy.deepcopy(cfg)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value", item)
        key, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = cfg
        parts = key.split(".")
        for p in parts[:-1]:
            if not isinstance(node.get(p), dict):
                node[p] = {}
            node = node[p]
        node[parts[-1]] = value
    return cfg


def _num(cfg: dict, key: str, default=None, positive=False):
    if key not in cfg or cfg[key] is None:
        if default is None:
            raise ConfigError(f"missing field '{key}'", key)
        return default
    try:
        v = float(cfg[key])
    except (TypeError, ValueError):
        raise ConfigError(f"field '{key}' must be a number, got {cfg[key]!r}", key)
    if positive and not v > 0:
        raise ConfigError(f"field '{key}' must be positive", key)
    return v


def _cplx(cfg: dict, key: str, default: complex) -> complex:
    v = cfg.get(key)
    if v is None:
        return default
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, dict):
        try:
            return complex(float(v.get("re", 0.0)), float(v.get("im", 0.0)))
        except (TypeError, ValueError):
            pass
    raise ConfigError(f"field '{key}' must be a number or {{re, im}}", key)


def build_wave(cfg: dict) -> Wave:
    if "frequency_hz" in cfg:
        return Wave(_num(cfg, "frequency_hz", positive=True))
    return Wave.from_wavelength(_num(cfg, "wavelength_m", 1.0, positive=True))


def build_layout(cfg: dict, wave: Wave, base: Path) -> ArrayLayout:
    lc = cfg.get("layout")
    if not isinstance(lc, dict):
        raise ConfigError("missing object 'layout'", "layout")
    if "file" in lc:
        path = Path(lc["file"])
        path = path if path.is_absolute() else base / path
        try:
            data = json.loads(path.read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read layout file: {exc}", "layout.file")
        except json.JSONDecodeError as exc:
            raise ConfigError(f"layout file is malformed JSON at line {exc.lineno}", "layout.file")
        if not isinstance(data, dict):
            raise ConfigError("layout file must hold a JSON object", "layout.file")
        return ArrayLayout.from_dict(data)
    lc = dict(lc)
    if "spacing_wavelengths" in lc and "spacing_m" not in lc:
        lc["spacing_m"] = _num(lc, "spacing_wavelengths", positive=True) * wave.wavelength
    try:
        return ArrayLayout.from_dict(lc)
    except ConfigError as exc:
        raise ConfigError(str(exc), f"layout.{exc.field}")


def build_pattern(cfg: dict, wave: Wave, base: Path):
    pc = cfg.get("pattern", "isotropic")
    if isinstance(pc, str):
        pc = {"kind": pc}
    kind = pc.get("kind", "isotropic")
    if kind == "isotropic":
        return Isotropic(_cplx(pc, "amplitude", _cplx(cfg, "f_iso", 1.0)))
    if kind == "half_wave_dipole":
        return HalfWaveDipole(wave.wavelength, pc.get("scale_m"))
    if kind == "tabulated":
        path = Path(pc.get("file", ""))
        path = path if path.is_absolute() else base / path
        try:
            return Tabulated.from_csv(path, max_dimension=float(pc.get("max_dimension_m", 0.0)))
        except (OSError, ValueError) as exc:
            raise ConfigError(f"bad tabulated pattern: {exc}", "pattern.file")
    raise ConfigError(f"unknown pattern kind {kind!r}", "pattern.kind")


def build_constants(cfg: dict) -> RisConstants:
    return RisConstants(_cplx(cfg, "z_a", 73.0 + 42.5j), _cplx(cfg, "f_iso", 1.0),
                        _cplx(cfg, "i_tx", 1.0))


def _angle(cfg: dict) -> float:
    a = np.deg2rad(_num(cfg, "angle_deg", 45.0))
    if not 0 < a < np.pi / 2:
        raise ConfigError("angle_deg must lie in (0, 90)", "angle_deg")
    return float(a)


def _distance(cfg: dict, stem: str, wave: Wave, r_ff: float, default=None) -> float:
    """Read ``<stem>_m``, ``<stem>_rff`` or ``<stem>_wavelengths``."""
    if f"{stem}_m" in cfg:
        return _num(cfg, f"{stem}_m", positive=True)
    if f"{stem}_rff" in cfg:
        return _num(cfg, f"{stem}_rff", positive=True) * r_ff
    if f"{stem}_wavelengths" in cfg:
        return _num(cfg, f"{stem}_wavelengths", positive=True) * wave.wavelength
    if default is not None:
        return default
    raise ConfigError(f"missing '{stem}_m' (or '{stem}_rff' / '{stem}_wavelengths')", f"{stem}_m")


def build_sweep_spec(cfg: dict, base: Path) -> SweepSpec:
    wave = build_wave(cfg)
    layout = build_layout(cfg, wave, base)
    d_def = cfg.get("d_definition", "diagonal")
    probe = SweepSpec(layout, wave, 1.0, 2.0, 2, angle=_angle(cfg), d_definition=d_def) \
        if d_def in ("diagonal", "visible") else None
    if probe is None:
        raise ConfigError("d_definition must be 'diagonal' or 'visible'", "d_definition")
    r_ff = probe.r_ff()
    points = cfg.get("points", 200)
    if not isinstance(points, int) or points < 2:
        raise ConfigError("field 'points' must be an integer >= 2", "points")
    try:
        return SweepSpec(
            layout, wave,
            r_min=_distance(cfg, "r_min", wave, r_ff, 2.0 * wave.wavelength),
            r_max=_distance(cfg, "r_max", wave, r_ff, 50.0 * max(r_ff, wave.wavelength)),
            points=points,
            spacing=cfg.get("spacing", "log"),
            load_mode=cfg.get("load_mode", "short_circuit"),
            angle=_angle(cfg),
            constants=build_constants(cfg),
            pattern=build_pattern(cfg, wave, base),
            d_definition=d_def,
            hermitian=bool(cfg.get("hermitian", False)),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc))


# -- output -----------------------------------------------------------------

def write_outputs(out_dir: Path, files: dict[str, str]) -> None:
    """Write every file via temp + rename, only after all content exists."""
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, content in files.items():
        fd, tmp = tempfile.mkstemp(prefix=f".{name}.", dir=out_dir)
        try:
            with os.fdopen(fd, "w", newline="") as fh:
                fh.write(content)
            os.replace(tmp, out_dir / name)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise


def _stamp(meta: dict, args) -> dict:
    meta = dict(meta)
    meta["rissim_version"] = __version__
    if not args.no_timestamps:
        meta["created_utc"] = _dt.datetime.now(_dt.timezone.utc).isoformat()
    return meta


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _jsonable_complex(z: complex) -> dict:
    return {"re": float(np.real(z)), "im": float(np.imag(z))}


# -- commands ---------------------------------------------------------------

def cmd_layout(cfg, args, base):
    wave = build_wave(cfg)
    layout = build_layout(cfg, wave, base)
    dims = dimensions(layout)
    meta = {"n_elements": len(layout), "D_m": dims.D,
            "r_ff_m": farfield_distance(dims.D, wave), "wavelength_m": wave.wavelength}
    return {"layout.json": _dumps(layout.to_dict()),
            "layout_meta.json": _dumps(_stamp(meta, args))}, EXIT_OK


def _fit_specs(cfg: dict, spec: SweepSpec):
    nf_method = "envelope_max" if spec.load_mode == "short_circuit" else "ols_loglog"
    fits = {"far_field": {"window_m": list(far_field_window(spec)), "method": "ols_loglog"},
            "near_field": {"window_m": list(near_field_window(spec)), "method": nf_method}}
    for name, fc in (cfg.get("fits") or {}).items():
        if not isinstance(fc, dict):
            raise ConfigError(f"fit '{name}' must be an object", f"fits.{name}")
        entry = fits.setdefault(name, {"method": "ols_loglog"})
        if "window_m" in fc:
            entry["window_m"] = [float(v) for v in fc["window_m"]]
        elif "window_rff" in fc:
            entry["window_m"] = [float(v) * spec.r_ff() for v in fc["window_rff"]]
        if "method" in fc:
            entry["method"] = fc["method"]
        if "window_m" not in entry:
            raise ConfigError(f"fit '{name}' needs window_m or window_rff", f"fits.{name}")
    return fits


def cmd_sweep(cfg, args, base):
    spec = build_sweep_spec(cfg, base)
    fits_cfg = _fit_specs(cfg, spec)
    result = fresnel_overlay(distance_sweep(spec), spec.layout, spec.wave)
    fits = {}
    for name, fc in fits_cfg.items():
        try:
            fits[name] = fit_exponent(result, tuple(fc["window_m"]), fc["method"]).to_dict()
        except InsufficientSamples as exc:
            print(f"warning: fit '{name}' skipped: {exc}", file=sys.stderr)
            fits[name] = {"error": "InsufficientSamples", "detail": str(exc),
                          "window_m": fc["window_m"], "method": fc["method"]}
    meta = dict(result.metadata)
    meta["fits"] = fits
    meta["config"] = cfg
    files = {"sweep.csv": result.to_csv(), "sweep_meta.json": _dumps(_stamp(meta, args)),
             "fit.json": _dumps(fits)}
    if cfg.get("baseline", False):
        files["baseline.csv"] = freespace_baseline(spec).to_csv()
    return files, EXIT_OK


def _scene_from(cfg, layout, wave):
    d = dimensions(layout)
    r_ff = farfield_distance(d.D, wave)
    r = _distance(cfg, "r", wave, r_ff)
    return symmetric_scene(r, _angle(cfg), layout), r, r_ff


def cmd_fresnel(cfg, args, base):
    wave = build_wave(cfg)
    layout = build_layout(cfg, wave, base)
    scene, r, r_ff = _scene_from(cfg, layout, wave)
    zmap = classify_elements(layout, scene, wave)
    contained = first_zone_contained(layout, scene, wave, int(cfg.get("boundary_samples", 360)))
    summary = {"r_m": r, "r_ff_m": r_ff, "zones_present": zmap.zones_present,
               "n_zones": len(zmap.zones_present), "first_zone_contained": contained,
               "constructive_fraction": float(np.mean(zmap.constructive))}
    return {"zone_map.csv": zmap.to_csv(layout),
            "fresnel_summary.json": _dumps(_stamp(summary, args))}, EXIT_OK


def cmd_optimize(cfg, args, base):
    wave = build_wave(cfg)
    layout = build_layout(cfg, wave, base)
    consts = build_constants(cfg)
    scene, r, r_ff = _scene_from(cfg, layout, wave)
    pattern = Isotropic(consts.f_iso)
    src = SourceExcitation(consts.i_tx, Isotropic(consts.f_iso))
    model = DiagonalSelf(consts.z_a)

    def density(loads):
        K = kernel(model, loads, len(layout))
        return float(radiation_density(scattered_field(scene, layout, pattern, wave, K, src),
                                       wave.medium))

    phi = optimal_phases(scene, layout, wave)
    p_ideal = density(IdealPhase(phi))
    p_sc = density(ShortCircuit())
    out = {"r_m": r, "r_ff_m": r_ff, "phases_rad": phi.tolist(),
           "density_ideal_w_m2": p_ideal, "max_density_smart_w_m2": max_density_smart(scene, layout, wave, consts),
           "density_short_circuit_w_m2": p_sc, "ratio_to_short_circuit": p_ideal / p_sc}
    bits = cfg.get("bits")
    if bits is not None:
        q = quantize_phases(phi, int(bits))
        p_q = density(IdealPhase(q))
        out.update({"bits": int(bits), "quantized_phases_rad": q.tolist(),
                    "density_quantized_w_m2": p_q, "ratio_quantized_to_short_circuit": p_q / p_sc})
    x, err, mag = synthesize_reactive_loads(phi, consts.z_a)
    out["reactive_loads"] = {"x_ohm": x.tolist(), "phase_error_rad": err.tolist(),
                             "kernel_magnitude_1_per_ohm": mag.tolist()}
    return {"optimize.json": _dumps(_stamp(out, args))}, EXIT_OK


def cmd_link(cfg, args, base):
    link = LinkModel.from_dict(cfg)
    seed = args.seed if args.seed is not None else cfg.get("seed", 0)
    if not isinstance(seed, int):
        raise ConfigError("field 'seed' must be an integer", "seed")
    n_sym = cfg.get("n_symbols", 1000)
    if not isinstance(n_sym, int) or n_sym < 1:
        raise ConfigError("field 'n_symbols' must be a positive integer", "n_symbols")
    wave = build_wave(cfg)
    if link.h_ris != 0:
        layout = build_layout(cfg, wave, base)
        scene, _, _ = _scene_from(cfg, layout, wave)
        loads = IdealPhase(optimal_phases(scene, layout, wave)) \
            if cfg.get("load_mode") == "ideal_phase" else ShortCircuit()
        K = kernel(DiagonalSelf(_cplx(cfg, "z_a", 73.0 + 42.5j)), loads, len(layout))
        pattern = build_pattern(cfg, wave, base)
    else:
        if link.h_tr != 0 and link.r_tr is None:
            raise ConfigError("r_tr_m is required without a RIS path", "r_tr_m")
        from .geometry import Scene, make_linear_layout
        layout = make_linear_layout(0, 1.0)
        scene = Scene(np.zeros(3), np.array([link.r_tr or 1.0, 0.0, 0.0]))
        K = kernel(DiagonalSelf(), ShortCircuit(), 1)
        pattern = Isotropic()
    h_eff = effective_channel(link, scene, layout, pattern, wave, K)
    batch = simulate(link, h_eff, qpsk_symbols(n_sym, seed), seed)
    meta = {"h_eff": _jsonable_complex(h_eff), "seed": seed, "n_symbols": n_sym,
            "noise_generator": NOISE_GENERATOR, "noise_power_w": link.noise_power,
            "r_tr_m": link.r_tr if link.r_tr is not None else scene.r_tr}
    if link.noise_power > 0:
        meta["snr_db"] = snr_db(h_eff, 1.0, link.noise_power)
    return {"samples.csv": batch.to_csv(), "link_meta.json": _dumps(_stamp(meta, args))}, EXIT_OK


def cmd_validate(cfg, args, base):
    quick = args.quick or bool(cfg.get("quick", False))
    results = run_suite(quick=quick, hermitian=bool(cfg.get("hermitian", False)),
                        seed=int(args.seed if args.seed is not None else cfg.get("seed", 0)))
    print(format_table(results))
    return {}, EXIT_OK if all(r.passed for r in results) else EXIT_PROPERTY


HANDLERS = {"layout": cmd_layout, "sweep": cmd_sweep, "fresnel": cmd_fresnel,
            "link": cmd_link, "optimize": cmd_optimize, "validate": cmd_validate}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rissim", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("config", nargs="?", help="JSON config (optional for validate)")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--set", dest="overrides", action="append", default=[],
                   metavar="KEY=VALUE", help="override a config field (dot path)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--no-timestamps", action="store_true")
    p.add_argument("--quick", action="store_true", help="validate: small problem sizes")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.config is None and args.command != "validate":
        print(f"error: '{args.command}' needs a config file", file=sys.stderr)
        return EXIT_CONFIG
    base = Path(args.config).resolve().parent if args.config else Path.cwd()
    try:
        cfg = apply_overrides(load_config(args.config), args.overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            files, code = HANDLERS[args.command](cfg, args, base)
    except (ConfigError, EmptyLayout, InvalidSpacing, InvalidAngle) as exc:
        where = f" [field: {exc.field}]" if getattr(exc, "field", None) else ""
        print(f"config error{where}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (RisError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, TypeError, KeyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if files:
        write_outputs(Path(args.out), files)
    return code


if __name__ == "__main__":
    sys.exit(main())
