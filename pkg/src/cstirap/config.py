"""JSON run configuration: validation, defaults and a lossless dump.

Scalar shorthands (``Omega0``, ``tau``, ``t_p``, ``alpha`` ...) build the pulses of the
chosen scheme; explicit ``pump``/``stokes1``/``stokes2`` blocks then override individual
pulse fields.  :func:`dump_config` always writes explicit blocks, so
``parse_config(dump_config(c)) == c``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from typing import Optional

from .hamiltonian import Scheme, ScenarioSpec, SchemeError
from .pulses import DetuningSpec, PulseSpec
from .propagator import DEFAULT_TOL
from .sweep import AXES, AxisSpec, observable_names

COMMANDS = ("simulate", "dressed", "sweep", "preset", "list-presets")
FORMATS = ("csv", "json")

_SCALARS = (
    "Omega0", "Omega_p", "Omega_s", "tau", "tau_p", "tau_s", "t_p", "t_s",
    "Delta", "delta", "level4_splitting", "alpha", "beta", "beta1", "beta2",
    "t_d", "t_d1", "t_d2", "mixing_angle", "phi", "t_start", "t_end", "tol",
)
_TOP_KEYS = set(_SCALARS) | {
    "command", "scheme", "initial_state", "pump", "stokes1", "stokes2",
    "samples", "workers", "output", "sweep", "preset",
}
_PULSE_KEYS = ("amplitude", "center", "width", "chirp", "chirp_delay", "weight")
_ALIASES = (("beta", "beta1"), ("t_d", "t_d1"))

# single-Stokes defaults: Omega_p*tau_p = 6.6, Omega_s*tau_s = 30, t_p - t_s = 21.6
_SINGLE_STOKES = {"Omega_p": 0.3, "tau_p": 22.0, "t_p": 171.6,
                  "Omega_s": 1.0, "tau_s": 30.0, "t_s": 150.0}


class ConfigError(ValueError):
    """Invalid configuration; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


@dataclass(frozen=True)
class SweepConfig:
    x_name: str
    x_values: tuple
    y_name: str
    y_values: tuple
    observable: str

    @property
    def x(self) -> AxisSpec:
        return AxisSpec(self.x_name, self.x_values)

    @property
    def y(self) -> AxisSpec:
        return AxisSpec(self.y_name, self.y_values)


@dataclass(frozen=True)
class RunConfig:
    command: str
    scenario: Optional[ScenarioSpec]
    tol: float = DEFAULT_TOL
    samples: Optional[int] = None
    workers: int = 1
    output_path: Optional[str] = None
    output_format: str = "csv"
    sweep: Optional[SweepConfig] = None
    preset: Optional[str] = None


# --- field readers -------------------------------------------------------------------

def _number(doc, key, path, default=None):
    if key not in doc:
        return default
    v = doc[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(path + key, f"expected a number, got {type(v).__name__}")
    v = float(v)
    if not math.isfinite(v):
        raise ConfigError(path + key, "must be finite")
    return v


def _integer(doc, key, path, default, minimum):
    if key not in doc:
        return default
    v = doc[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(path + key, f"expected an integer, got {type(v).__name__}")
    if v < minimum:
        raise ConfigError(path + key, f"must be >= {minimum}")
    return v


def _object(doc, key, path, allowed):
    v = doc[key]
    if not isinstance(v, dict):
        raise ConfigError(path + key, "expected an object")
    _reject_unknown(v, allowed, f"{path}{key}.")
    return v


def _reject_unknown(doc, allowed, path):
    for k in doc:
        if k not in allowed:
            raise ConfigError(path + str(k), "unknown key")


def _positive(value, path):
    if value is not None and value <= 0:
        raise ConfigError(path, f"must be > 0, got {value!r}")


def _non_negative(value, path):
    if value is not None and value < 0:
        raise ConfigError(path, f"must be >= 0, got {value!r}")


# --- scenario assembly ----------------------------------------------------------------

def _scalar_fields(doc):
    f = {k: _number(doc, k, "") for k in _SCALARS}
    for old, new in _ALIASES:
        if f[old] is not None and f[new] is not None and f[old] != f[new]:
            raise ConfigError(old, f"conflicts with its alias {new!r}")
        f[new] = f[new] if f[new] is not None else f[old]
    for k in ("tau", "tau_p", "tau_s"):
        _positive(f[k], k)
    for k in ("Omega0", "Omega_p", "Omega_s"):
        _non_negative(f[k], k)
    if f["mixing_angle"] is not None and not 0.0 <= f["mixing_angle"] <= math.pi / 2:
        raise ConfigError("mixing_angle", "must lie in [0, pi/2]")
    return f


def _pulses_from_scalars(scheme: Scheme, f):
    def pick(key, fallback):
        return f[key] if f[key] is not None else fallback

    if scheme is Scheme.FSTIRAP3_SINGLE_STOKES:
        base = dict(_SINGLE_STOKES)
        for key in base:
            if f[key] is not None:
                base[key] = f[key]
        if f["Omega0"] is not None:
            base["Omega_s"] = pick("Omega_s", f["Omega0"])
        if f["tau"] is not None:
            base["tau_s"] = pick("tau_s", f["tau"])
        alpha = pick("alpha", 0.0)
        pump = PulseSpec(base["Omega_p"], base["t_p"], base["tau_p"], alpha)
        stokes1 = PulseSpec(base["Omega_s"], base["t_s"], base["tau_s"],
                            pick("beta1", alpha), pick("t_d1", 0.0))
        return pump, stokes1, None, math.pi / 2

    omega0 = pick("Omega0", 1.0)
    tau = pick("tau", 100.0)
    t_p = pick("t_p", 70.0)
    alpha = pick("alpha", 0.0)
    omega_p, omega_s = pick("Omega_p", omega0), pick("Omega_s", omega0)
    tau_p, tau_s = pick("tau_p", tau), pick("tau_s", tau)
    if not scheme.fractional:
        pump = PulseSpec(omega_p, t_p, tau_p, alpha)
        stokes1 = PulseSpec(omega_s, pick("t_s", -70.0), tau_s, pick("beta1", alpha), pick("t_d1", 0.0))
        return pump, stokes1, None, pick("mixing_angle", math.pi / 2)

    angle = pick("mixing_angle", math.pi / 4)
    t_d2 = pick("t_d2", -2.0 * t_p if scheme.chirped else 0.0)
    pump = PulseSpec(omega_p, t_p, tau_p, alpha, weight=math.sin(angle))
    stokes1 = PulseSpec(omega_s, pick("t_s", -t_p), tau_s, pick("beta1", alpha), pick("t_d1", 0.0))
    stokes2 = PulseSpec(omega_s, t_p, tau_s, pick("beta2", alpha), t_d2, weight=abs(math.cos(angle)))
    return pump, stokes1, stokes2, angle


def _apply_block(doc, key, pulse):
    block = _object(doc, key, "", _PULSE_KEYS)
    changes = {k: _number(block, k, f"{key}.") for k in _PULSE_KEYS if k in block}
    if pulse is None:
        pulse = PulseSpec()
    _positive(changes.get("width"), f"{key}.width")
    _non_negative(changes.get("amplitude"), f"{key}.amplitude")
    if "weight" in changes and not 0.0 <= changes["weight"] <= 1.0:
        raise ConfigError(f"{key}.weight", "must lie in [0, 1]")
    return replace(pulse, **changes)


def _initial_state(doc):
    raw = doc["initial_state"]
    if not isinstance(raw, list) or not raw:
        raise ConfigError("initial_state", "expected a non-empty list")
    out = []
    for k, a in enumerate(raw):
        path = f"initial_state[{k}]"
        if isinstance(a, list):
            if len(a) != 2 or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in a):
                raise ConfigError(path, "expected [re, im]")
            out.append(complex(a[0], a[1]))
        elif isinstance(a, (int, float)) and not isinstance(a, bool):
            out.append(complex(a))
        else:
            raise ConfigError(path, "expected a number or [re, im]")
    return tuple(out)


def _scenario(doc) -> ScenarioSpec:
    if "scheme" not in doc:
        raise ConfigError("scheme", "required")
    try:
        scheme = Scheme(doc["scheme"])
    except ValueError:
        raise ConfigError("scheme", f"unknown scheme {doc['scheme']!r}; expected one of "
                          + ", ".join(s.value for s in Scheme)) from None
    f = _scalar_fields(doc)
    pump, stokes1, stokes2, angle = _pulses_from_scalars(scheme, f)
    if "pump" in doc:
        pump = _apply_block(doc, "pump", pump)
    if "stokes1" in doc:
        stokes1 = _apply_block(doc, "stokes1", stokes1)
    if "stokes2" in doc:
        if not scheme.two_stokes:
            raise ConfigError("stokes2", f"{scheme.value} takes a single Stokes pulse")
        stokes2 = _apply_block(doc, "stokes2", stokes2)
    if f["mixing_angle"] is not None:
        angle = f["mixing_angle"]
    try:
        return ScenarioSpec(
            scheme=scheme,
            detunings=DetuningSpec(f["Delta"] or 0.0, f["delta"] or 0.0, f["level4_splitting"]),
            pump=pump,
            stokes1=stokes1,
            stokes2=stokes2,
            mixing_angle=angle,
            phase=f["phi"] or 0.0,
            t_start=f["t_start"],
            t_end=f["t_end"],
            initial_state=_initial_state(doc) if "initial_state" in doc else None,
        )
    except (SchemeError, ValueError) as exc:
        raise ConfigError("scheme", str(exc)) from None


def _axis(doc, key):
    axis = _object(doc, key, "sweep.", ("name", "start", "stop", "num", "values"))
    path = f"sweep.{key}."
    name = axis.get("name")
    if name not in AXES:
        raise ConfigError(path + "name", f"expected one of {', '.join(AXES)}")
    if "values" in axis:
        if any(k in axis for k in ("start", "stop", "num")):
            raise ConfigError(path + "values", "give either values or start/stop/num")
        vals = axis["values"]
        if not isinstance(vals, list) or not vals:
            raise ConfigError(path + "values", "expected a non-empty list")
        values = tuple(_number({"v": v}, "v", path + "values") for v in vals)
    else:
        for k in ("start", "stop", "num"):
            if k not in axis:
                raise ConfigError(path + k, "required")
        start = _number(axis, "start", path)
        stop = _number(axis, "stop", path)
        num = _integer(axis, "num", path, None, 1)
        values = tuple(float(v) for v in AxisSpec.linspace(name, start, stop, num).values)
    return name, values


def _sweep(doc, scenario):
    block = _object(doc, "sweep", "", ("x", "y", "observable"))
    for k in ("x", "y", "observable"):
        if k not in block:
            raise ConfigError(f"sweep.{k}", "required")
    x_name, x_values = _axis(block, "x")
    y_name, y_values = _axis(block, "y")
    obs = block["observable"]
    if scenario is not None and obs not in observable_names(scenario.n_levels):
        raise ConfigError("sweep.observable",
                          f"expected one of {', '.join(observable_names(scenario.n_levels))}")
    return SweepConfig(x_name, x_values, y_name, y_values, obs)


def parse_config(text: str, command: Optional[str] = None) -> RunConfig:
    """Validate a JSON document and return the resolved :class:`RunConfig`.

    ``command`` (from the CLI) takes precedence over a ``"command"`` key.

    Raises
    ------
    ConfigError
        Syntax error, unknown key, wrong type or out-of-range value; the message starts
        with the field path.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("", "top level must be an object")
    _reject_unknown(doc, _TOP_KEYS, "")

    cmd = command or doc.get("command", "simulate")
    if cmd not in COMMANDS:
        raise ConfigError("command", f"expected one of {', '.join(COMMANDS)}")
    scenario = None if cmd in ("preset", "list-presets") and "scheme" not in doc else _scenario(doc)

    tol = _number(doc, "tol", "", DEFAULT_TOL)
    if not 1e-12 <= tol <= 1e-6:
        raise ConfigError("tol", "must lie in [1e-12, 1e-6]")
    samples = _integer(doc, "samples", "", None, 2)
    workers = _integer(doc, "workers", "", 1, 1)

    path, fmt = None, "csv"
    if "output" in doc:
        out = _object(doc, "output", "", ("path", "format"))
        path = out.get("path")
        if path is not None and not isinstance(path, str):
            raise ConfigError("output.path", "expected a string")
        fmt = out.get("format", "csv")
        if fmt not in FORMATS:
            raise ConfigError("output.format", f"expected one of {', '.join(FORMATS)}")

    sweep = _sweep(doc, scenario) if "sweep" in doc else None
    if cmd == "sweep" and sweep is None:
        raise ConfigError("sweep", "required for the sweep command")
    preset = doc.get("preset")
    if preset is not None and not isinstance(preset, str):
        raise ConfigError("preset", "expected a string")
    return RunConfig(cmd, scenario, tol, samples, workers, path, fmt, sweep, preset)


def scenario_to_dict(s: ScenarioSpec) -> dict:
    """Explicit, lossless JSON-ready description of a scenario."""
    def pulse(p):
        return {k: getattr(p, k) for k in _PULSE_KEYS}

    doc = {
        "scheme": s.scheme.value,
        "Delta": s.detunings.Delta,
        "delta": s.detunings.delta,
        "mixing_angle": s.mixing_angle,
        "phi": s.phase,
        "pump": pulse(s.pump),
        "stokes1": pulse(s.stokes1),
    }
    if s.detunings.level4_splitting is not None:
        doc["level4_splitting"] = s.detunings.level4_splitting
    if s.stokes2 is not None:
        doc["stokes2"] = pulse(s.stokes2)
    if s.t_start is not None:
        doc["t_start"] = s.t_start
    if s.t_end is not None:
        doc["t_end"] = s.t_end
    if s.initial_state is not None:
        doc["initial_state"] = [[a.real, a.imag] for a in s.initial_state]
    return doc


def dump_config(cfg: RunConfig) -> str:
    """JSON text that :func:`parse_config` maps back to ``cfg``."""
    doc = {"command": cfg.command}
    if cfg.scenario is not None:
        doc.update(scenario_to_dict(cfg.scenario))
    doc["tol"] = cfg.tol
    if cfg.samples is not None:
        doc["samples"] = cfg.samples
    doc["workers"] = cfg.workers
    output = {"format": cfg.output_format}
    if cfg.output_path is not None:
        output["path"] = cfg.output_path
    doc["output"] = output
    if cfg.sweep is not None:
        sw = cfg.sweep
        doc["sweep"] = {
            "x": {"name": sw.x_name, "values": list(sw.x_values)},
            "y": {"name": sw.y_name, "values": list(sw.y_values)},
            "observable": sw.observable,
        }
    if cfg.preset is not None:
        doc["preset"] = cfg.preset
    return json.dumps(doc, indent=2) + "\n"
