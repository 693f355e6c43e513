"""Parallel parameter scans over scenario overrides.

A cell is ``final_observables(propagate(base with overrides))[observable]``; cells are
computed independently and gathered by index, so grids do not depend on the number
of worker processes.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .hamiltonian import ScenarioSpec, SchemeError
from .propagator import DEFAULT_TOL, IntegrationError, final_observables, propagate

log = logging.getLogger(__name__)


def _set_pulses(s, **changes):
    out = {}
    for role in ("pump", "stokes1", "stokes2"):
        p = getattr(s, role)
        if p is not None and role in changes:
            out[role] = replace(p, **changes[role])
    return replace(s, **out)


def _all_chirps(s, v):
    return _set_pulses(s, pump={"chirp": v}, stokes1={"chirp": v}, stokes2={"chirp": v})


_OVERRIDES = {
    "delta": lambda s, v: replace(s, detunings=replace(s.detunings, delta=v)),
    "Delta": lambda s, v: replace(s, detunings=replace(s.detunings, Delta=v)),
    "chirp": _all_chirps,
    "alpha": lambda s, v: _set_pulses(s, pump={"chirp": v}),
    "beta": lambda s, v: _set_pulses(s, stokes1={"chirp": v}),
    "beta2": lambda s, v: _set_pulses(s, stokes2={"chirp": v}),
    "t_d": lambda s, v: _set_pulses(s, stokes1={"chirp_delay": v}),
    "t_d2": lambda s, v: _set_pulses(s, stokes2={"chirp_delay": v}),
    "pump_area": lambda s, v: _set_pulses(s, pump={"width": v / s.pump.peak}),
    "delay": lambda s, v: _set_pulses(s, pump={"center": s.stokes1.center + v}),
    "tau_delta": lambda s, v: replace(s, detunings=replace(s.detunings, delta=v / s.pump.width)),
    "mixing_angle": lambda s, v: s.with_mixing_angle(v),
    "phi": lambda s, v: replace(s, phase=v),
}

#: Axis names understood by :func:`apply_override`.
AXES = tuple(_OVERRIDES)


def apply_override(s: ScenarioSpec, name: str, value: float) -> ScenarioSpec:
    """Scenario with one named parameter set to ``value``.

    ``chirp`` sets every pulse's chirp rate; ``pump_area`` sets the pump width so that
    peak times width equals ``value``; ``delay`` places the pump ``value`` after the
    first Stokes pulse; ``tau_delta`` sets ``delta = value / tau_pump``.
    """
    try:
        fn = _OVERRIDES[name]
    except KeyError:
        raise ValueError(f"unknown sweep axis {name!r}; expected one of {', '.join(AXES)}") from None
    return fn(s, float(value))


@dataclass(frozen=True)
class AxisSpec:
    name: str
    values: np.ndarray

    def __post_init__(self):
        if self.name not in _OVERRIDES:
            raise ValueError(f"unknown sweep axis {self.name!r}; expected one of {', '.join(AXES)}")
        values = np.atleast_1d(np.asarray(self.values, dtype=float))
        if values.ndim != 1 or values.size == 0:
            raise ValueError(f"axis {self.name!r} needs a non-empty 1-D value list")
        if not np.all(np.isfinite(values)):
            raise ValueError(f"axis {self.name!r} values must be finite")
        object.__setattr__(self, "values", values)

    @classmethod
    def linspace(cls, name: str, start: float, stop: float, num: int) -> "AxisSpec":
        return cls(name, np.linspace(start, stop, num))


@dataclass(frozen=True)
class SweepResult:
    """``grid[iy, ix]`` is the observable at ``(x.values[ix], y.values[iy])``.

    ``constraint_lines`` holds ``(label, slope, intercept)`` in ``y = slope*x + intercept``
    axis units; ``failures`` lists ``(iy, ix, message)`` for NaN cells.
    """

    x: AxisSpec
    y: AxisSpec
    observable: str
    grid: np.ndarray
    constraint_lines: list = field(default_factory=list)
    failures: list = field(default_factory=list)


def observable_names(n_levels: int) -> list:
    names = [f"rho{i}{i}" for i in range(1, n_levels + 1)]
    names += [f"abs_rho{i}{j}" for i in range(1, n_levels + 1) for j in range(i + 1, n_levels + 1)]
    return names


def _check_observable(s: ScenarioSpec, observable: str):
    if observable not in observable_names(s.n_levels):
        raise ValueError(f"observable {observable!r} not available for {s.scheme.value}")


def _cell(job):
    base, overrides, names, tol, samples = job
    try:
        s = base
        for name, value in overrides:
            s = apply_override(s, name, value)
        obs = final_observables(propagate(s, tol=tol, samples=samples))
        return tuple(obs[n] for n in names), None
    except (IntegrationError, SchemeError, ValueError) as exc:
        return (math.nan,) * len(names), f"{type(exc).__name__}: {exc}"


def _run(jobs, workers):
    if workers <= 1 or len(jobs) <= 1:
        return [_cell(j) for j in jobs]
    chunk = max(1, len(jobs) // (8 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_cell, jobs, chunksize=chunk))


def sweep2d(base: ScenarioSpec, x: AxisSpec, y: AxisSpec, observable: str, workers: int = 1,
            tol: float = DEFAULT_TOL, samples=None) -> SweepResult:
    """Evaluate ``observable`` on the ``len(y) x len(x)`` grid of overrides.

    Failed cells become NaN and are listed in ``SweepResult.failures``.
    """
    _check_observable(base, observable)
    if workers < 1:
        raise ValueError("workers must be >= 1")
    jobs = [(base, ((x.name, xv), (y.name, yv)), (observable,), tol, samples)
            for yv in y.values for xv in x.values]
    results = _run(jobs, workers)
    grid = np.array([r[0][0] for r in results]).reshape(y.values.size, x.values.size)
    failures = [(k // x.values.size, k % x.values.size, r[1])
                for k, r in enumerate(results) if r[1] is not None]
    for iy, ix, msg in failures:
        log.warning("cell (%d, %d) failed: %s", iy, ix, msg)
    lines = []
    if x.name == "delta" and y.name in ("chirp", "alpha"):
        for kind in ("dark", "resonant"):
            try:
                slope, intercept = constraint_line(base, kind)
            except SchemeError:
                continue
            lines.append((kind, slope, intercept))
    return SweepResult(x, y, observable, grid, lines, failures)


def scan1d(base: ScenarioSpec, axis: AxisSpec, observables=None, workers: int = 1,
           tol: float = DEFAULT_TOL, samples=None) -> dict:
    """Final observables along one axis: ``{name: array}`` plus the axis values under its name."""
    names = observable_names(base.n_levels) if observables is None else list(observables)
    for name in names:
        _check_observable(base, name)
    jobs = [(base, ((axis.name, v),), tuple(names), tol, samples) for v in axis.values]
    values = np.array([r[0] for r in _run(jobs, workers)]).reshape(axis.values.size, len(names))
    out = {axis.name: axis.values}
    out.update({name: values[:, k] for k, name in enumerate(names)})
    return out


def constraint_line(s: ScenarioSpec, kind: str = "dark") -> tuple:
    """``(slope, intercept)`` of the chirp-rate line ``alpha = slope * delta`` for ``s``.

    ``dark`` cancels the two-photon detuning ``delta(t)`` for equal chirp rates:
    ``alpha = delta / (t_p - t_s - t_d)``.  ``resonant`` is the four-level route to the
    resonant state, ``alpha = -delta' / (t_p - t_s - t_d)``.
    """
    separation = s.pump.center - s.stokes1.center - s.stokes1.chirp_delay
    if separation == 0.0:
        raise SchemeError("pump and Stokes chirp references coincide; no finite constraint line")
    if kind == "dark":
        return 1.0 / separation, 0.0
    if kind == "resonant":
        if s.n_levels != 4 or s.scheme.fractional:
            raise SchemeError(f"resonant-state line is defined for CSTIRAP4, not {s.scheme.value}")
        return -1.0 / separation, 0.0
    raise ValueError(f"unknown constraint line kind {kind!r}")
