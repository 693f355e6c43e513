"""Registered figure scenarios and the runner that writes their data files and manifest."""
from __future__ import annotations

import json
import math
import platform
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import __version__
from .config import scenario_to_dict
from .dressed import dark_label, dressed_frame, find_avoided_crossings
from .export import write_outputs
from .hamiltonian import ScenarioSpec, f_stirap, stirap
from .propagator import DEFAULT_TOL, final_observables, propagate
from .pulses import PulseSpec
from .sweep import AxisSpec, apply_override, scan1d, sweep2d

DEFAULT_RESOLUTION = 81
SCAN_POINTS = 121

DELTA_RANGE = (-0.2, 0.2)
CHIRP_RANGE = (-2e-3, 2e-3)


class UnknownPresetError(KeyError):
    pass


@dataclass
class PresetOutput:
    """Artifacts (name -> exportable object), parameters and headline results."""

    artifacts: dict = field(default_factory=dict)
    parameters: dict = field(default_factory=dict)
    results: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Preset:
    id: str
    description: str
    build: Callable
    reconstructed: tuple = ()


@dataclass(frozen=True)
class RunOptions:
    resolution: int = DEFAULT_RESOLUTION
    scan_points: int = SCAN_POINTS
    tol: float = DEFAULT_TOL
    workers: int = 1


# --- scenarios --------------------------------------------------------------------------

def single_stokes(Omega_p=0.3, tau_p=22.0, t_p=171.6, Omega_s=1.0, tau_s=30.0, t_s=150.0) -> ScenarioSpec:
    return ScenarioSpec(
        scheme="FSTIRAP3_SINGLE_STOKES",
        pump=PulseSpec(Omega_p, t_p, tau_p),
        stokes1=PulseSpec(Omega_s, t_s, tau_s),
    )


def cf4(td1: float, td2: float, delta=0.14, t_p=70.0) -> ScenarioSpec:
    alpha = delta / (2.0 * t_p)
    return f_stirap("CFSTIRAP4", delta=delta, alpha=alpha, t_p=t_p, t_d1=td1, t_d2=td2)


# --- building blocks ----------------------------------------------------------------------

def _trajectory(out, name, s, opts):
    tr = propagate(s, tol=opts.tol)
    out.artifacts[f"{name}_trajectory"] = tr
    out.parameters[name] = scenario_to_dict(s)
    out.results[name] = {"final": final_observables(tr)}
    return tr


def _dressed(out, name, s, opts, crossings=False):
    tr = _trajectory(out, name, s, opts)
    df = dressed_frame(s, tr)
    out.artifacts[f"{name}_frame"] = df
    k = dark_label(df)
    occupied = np.max(df.populations, axis=1)
    res = out.results[name]
    res["dark_label"] = k + 1
    res["min_dark_population"] = float(df.populations[:, k].min())
    res["min_single_state_occupation"] = float(occupied.min())
    res["max_coupling"] = float(df.couplings.max())
    if crossings:
        res["crossings"] = [
            {"pair": list(c.pair), "time": c.time, "gap": c.gap, "gap_slope": c.gap_slope,
             "coupling_peak": c.coupling_peak, "coupling_hwhm": c.coupling_hwhm,
             "coupling_fwhm": c.coupling_fwhm, "coupling_area": c.coupling_area,
             "p_lz": c.p_lz, "p_lz_standard": c.p_lz_standard}
            for c in find_avoided_crossings(df)
        ]
    return tr, df


def _grid(out, name, base, x, y, observable, opts):
    res = sweep2d(base, x, y, observable, workers=opts.workers, tol=opts.tol)
    out.artifacts[name] = res
    out.parameters[name] = {
        "base": scenario_to_dict(base),
        "x": {"name": x.name, "start": float(x.values[0]), "stop": float(x.values[-1]),
              "num": int(x.values.size)},
        "y": {"name": y.name, "start": float(y.values[0]), "stop": float(y.values[-1]),
              "num": int(y.values.size)},
        "observable": observable,
    }
    out.results[name] = {
        "min": float(np.nanmin(res.grid)),
        "max": float(np.nanmax(res.grid)),
        "failed_cells": len(res.failures),
        "constraint_lines": [{"kind": k, "slope": a, "intercept": b}
                             for k, a, b in res.constraint_lines],
    }
    return res


def _axes(opts, x=("delta",) + DELTA_RANGE, y=("chirp",) + CHIRP_RANGE):
    return (AxisSpec.linspace(x[0], x[1], x[2], opts.resolution),
            AxisSpec.linspace(y[0], y[1], y[2], opts.resolution))


def _scan(out, name, base, axis, opts):
    cols = scan1d(base, axis, workers=opts.workers, tol=opts.tol)
    out.artifacts[name] = cols
    out.parameters[name] = {"base": scenario_to_dict(base), "axis": axis.name,
                            "start": float(axis.values[0]), "stop": float(axis.values[-1]),
                            "num": int(axis.values.size)}
    return cols


# --- figures ----------------------------------------------------------------------------

def _fig2(opts):
    out = PresetOutput()
    base = stirap()
    _scan(out, "scan", base, AxisSpec.linspace("tau_delta", -6, 6, opts.scan_points), opts)
    at = {v: final_observables(propagate(apply_override(base, "tau_delta", v), tol=opts.tol))["rho33"]
          for v in (0.0, 5.0)}
    out.results["scan"] = {"rho33_at_0": at[0.0], "rho33_at_5": at[5.0],
                           "ratio_5_to_0": at[5.0] / at[0.0]}
    return out


def _fig3(sign):
    def build(opts):
        out = PresetOutput()
        _dressed(out, "cstirap3", stirap("CSTIRAP3", delta=sign * 0.14, alpha=sign * 1e-3), opts)
        return out
    return build


def _fig4(opts):
    out = PresetOutput()
    _grid(out, "grid", stirap("CSTIRAP3"), *_axes(opts), "rho33", opts)
    return out


def _fig6(sign):
    def build(opts):
        out = PresetOutput()
        _trajectory(out, "cstirap4", stirap("CSTIRAP4", delta=0.14, alpha=sign * 1e-3), opts)
        return out
    return build


def _fig7(observable):
    def build(opts):
        out = PresetOutput()
        _grid(out, "grid", stirap("CSTIRAP4"), *_axes(opts), observable, opts)
        return out
    return build


def _fig8_9(opts):
    out = PresetOutput()
    _dressed(out, "alpha_plus", stirap("CSTIRAP4", delta=0.14, alpha=1e-3), opts, crossings=True)
    _dressed(out, "alpha_minus", stirap("CSTIRAP4", delta=0.14, alpha=-1e-3), opts, crossings=True)
    _dressed(out, "delayed_chirp", stirap("CSTIRAP4", delta=0.14, alpha=-1e-3, t_d=140.0), opts,
             crossings=True)
    return out


def _fig10(opts):
    out = PresetOutput()
    x, y = _axes(opts, x=("tau_delta", -20.0, 20.0))
    _grid(out, "grid", stirap("CSTIRAP4", t_d=140.0), x, y, "rho33", opts)
    return out


def _fig11(opts):
    out = PresetOutput()
    _trajectory(out, "fstirap3", f_stirap(), opts)
    return out


def _fig12(opts):
    out = PresetOutput()
    base = f_stirap()
    _scan(out, "scan", base, AxisSpec.linspace("tau_delta", -6, 6, opts.scan_points), opts)
    at = {v: final_observables(propagate(apply_override(base, "tau_delta", v), tol=opts.tol))["abs_rho13"]
          for v in (0.0, 5.0)}
    out.results["scan"] = {"abs_rho13_at_0": at[0.0], "abs_rho13_at_5": at[5.0],
                           "ratio_5_to_0": at[5.0] / at[0.0]}
    return out


def _fig13(opts):
    out = PresetOutput()
    _trajectory(out, "single_stokes", single_stokes(), opts)
    return out


def _fig14(opts):
    out = PresetOutput()
    x = AxisSpec.linspace("delay", 0.0, 40.0, opts.resolution)
    y = AxisSpec.linspace("pump_area", 2.0, 14.0, opts.resolution)
    _grid(out, "grid", single_stokes(), x, y, "abs_rho13", opts)
    return out


def _fig15(opts):
    out = PresetOutput()
    _dressed(out, "delta_minus", f_stirap("CFSTIRAP3", delta=-0.14, alpha=-1e-3), opts)
    _dressed(out, "delta_plus", f_stirap("CFSTIRAP3", delta=0.14, alpha=1e-3), opts)
    return out


def _fig16(opts):
    out = PresetOutput()
    _grid(out, "grid", f_stirap("CFSTIRAP3"), *_axes(opts), "abs_rho13", opts)
    return out


def _fig17(td1_factor, td2_factor):
    def build(opts):
        out = PresetOutput()
        _trajectory(out, "cfstirap4", cf4(td1_factor * 70.0, td2_factor * 70.0), opts)
        return out
    return build


def _fig18(td1_factor, td2_factor, observable):
    def build(opts):
        out = PresetOutput()
        base = f_stirap("CFSTIRAP4", t_d1=td1_factor * 70.0, t_d2=td2_factor * 70.0)
        _grid(out, "grid", base, *_axes(opts), observable, opts)
        return out
    return build


def _fig19(opts):
    out = PresetOutput()
    _dressed(out, "cfstirap4", cf4(0.0, -140.0), opts)
    return out


_AXIS_RANGES = ("delta_range", "chirp_range")

PRESETS = {p.id: p for p in (
    Preset("fig2", "STIRAP3 final populations vs tau*delta", _fig2, ("tau_delta_range",)),
    Preset("fig3ab", "CSTIRAP3 delta=+0.14, alpha=+1e-3: populations and dressed frame", _fig3(+1)),
    Preset("fig3cd", "CSTIRAP3 delta=-0.14, alpha=-1e-3: populations and dressed frame", _fig3(-1)),
    Preset("fig4", "CSTIRAP3 rho33 over (delta, chirp)", _fig4, _AXIS_RANGES),
    Preset("fig6b", "CSTIRAP4 delta'=0.14, alpha=+1e-3 populations", _fig6(+1)),
    Preset("fig6c", "CSTIRAP4 delta'=0.14, alpha=-1e-3 populations", _fig6(-1)),
    Preset("fig7a", "CSTIRAP4 rho44 over (delta', chirp)", _fig7("rho44"), _AXIS_RANGES),
    Preset("fig7b", "CSTIRAP4 rho33 over (delta', chirp)", _fig7("rho33"), _AXIS_RANGES),
    Preset("fig8-9", "CSTIRAP4 dressed frames and avoided crossings (alpha=+-1e-3, delayed chirp)",
           _fig8_9, ("delayed_chirp.alpha",)),
    Preset("fig10", "CSTIRAP4 with chirp delay t_d=t_p-t_s: rho33 over (tau*delta', chirp)", _fig10,
           ("tau_delta_range", "chirp_range")),
    Preset("fig11", "FSTIRAP3 A=pi/4 populations and coherence", _fig11),
    Preset("fig12", "FSTIRAP3 final populations and |rho13| vs tau*delta", _fig12, ("tau_delta_range",)),
    Preset("fig13", "single-Stokes F-STIRAP populations and coherence", _fig13, ("Omega_p", "t_p")),
    Preset("fig14", "single-Stokes F-STIRAP |rho13| over (delay, pump area)", _fig14,
           ("delay_range", "pump_area_range", "Omega_p")),
    Preset("fig15", "CFSTIRAP3 delta=-+0.14 dressed frames", _fig15),
    Preset("fig16", "CFSTIRAP3 |rho13| over (delta, chirp)", _fig16, _AXIS_RANGES),
    Preset("fig17b", "CFSTIRAP4 t_d1=0, t_d2=-2t_p: |rho14| maximised", _fig17(0.0, -2.0)),
    Preset("fig17c", "CFSTIRAP4 t_d1=2t_p, t_d2=0: |rho13| maximised", _fig17(2.0, 0.0)),
    Preset("fig18a", "CFSTIRAP4 t_d1=0, t_d2=-2t_p: |rho14| over (delta', chirp)",
           _fig18(0.0, -2.0, "abs_rho14"), _AXIS_RANGES),
    Preset("fig18b", "CFSTIRAP4 t_d1=2t_p, t_d2=0: |rho13| over (delta', chirp)",
           _fig18(2.0, 0.0, "abs_rho13"), _AXIS_RANGES),
    Preset("fig19", "CFSTIRAP4 t_d1=0, t_d2=-2t_p dressed frame", _fig19),
)}


def list_presets() -> list:
    return [(p.id, p.description) for p in PRESETS.values()]


def get_preset(preset_id: str) -> Preset:
    try:
        return PRESETS[preset_id]
    except KeyError:
        raise UnknownPresetError(
            f"unknown preset {preset_id!r}; expected one of {', '.join(PRESETS)}") from None


def _clean(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.generic):
        return _clean(obj.item())
    return obj


def run_preset(preset_id: str, out_dir, fmt: str = "csv", opts: RunOptions = RunOptions()) -> dict:
    """Compute a preset, write its data files into ``out_dir`` and return the manifest."""
    preset = get_preset(preset_id)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    out = preset.build(opts)
    compute = time.perf_counter() - start
    files = []
    for name, data in out.artifacts.items():
        files.append(write_outputs(data, fmt, out_dir / f"{preset_id}_{name}.{fmt}").name)
    manifest = {
        "preset": preset_id,
        "description": preset.description,
        "version": __version__,
        "python": platform.python_version(),
        "options": {"resolution": opts.resolution, "scan_points": opts.scan_points,
                    "tol": opts.tol, "workers": opts.workers, "format": fmt},
        "parameters": out.parameters,
        "reconstructed": {name: True for name in preset.reconstructed},
        "results": out.results,
        "timings": {"compute_seconds": compute,
                    "total_seconds": time.perf_counter() - start},
        "files": files,
    }
    manifest = _clean(manifest)
    with open(out_dir / f"{preset_id}_manifest.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    return manifest
