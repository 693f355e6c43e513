"""Chirped Gaussian pulses, instantaneous detunings and the two-component Stokes field.

All quantities are dimensionless in units of a reference frequency ``omega``:
frequencies in [omega], times in [1/omega], chirp rates in [omega**2].

A pulse contributes the Rabi envelope

    weight * amplitude * exp(-(t - center)**2 / width**2)

and, through its chirp, the quadratic phase ``chirp/2 * (t - center - chirp_delay)**2``
whose derivative ``chirp * (t - center - chirp_delay)`` is the instantaneous
frequency offset entering the detunings.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

#: Amplitude below which the phase of a summed Stokes field is undefined.
INDETERMINATE_AMPLITUDE = 1e-12

#: Largest time step used when unwrapping the effective Stokes phase.
UNWRAP_STEP = 0.05


class IndeterminatePhaseWarning(RuntimeWarning):
    """The summed Stokes field vanished, so its phase was held at the last defined value."""


@dataclass(frozen=True)
class PulseSpec:
    """One linearly chirped Gaussian pulse.

    Attributes
    ----------
    amplitude : float
        Peak Rabi frequency before ``weight`` is applied [omega].
    center : float
        Time of the envelope maximum [1/omega].
    width : float
        Gaussian width ``tau`` of ``exp(-(t-center)**2/tau**2)`` [1/omega].
    chirp : float
        Linear chirp rate [omega**2].
    chirp_delay : float
        Offset of the chirp's zero-frequency point from ``center`` [1/omega].
    weight : float
        Dimensionless scale in [0, 1] (``sin A``/``cos A`` for fractional schemes).
    """

    amplitude: float = 1.0
    center: float = 0.0
    width: float = 100.0
    chirp: float = 0.0
    chirp_delay: float = 0.0
    weight: float = 1.0

    def __post_init__(self):
        for name in ("amplitude", "center", "width", "chirp", "chirp_delay", "weight"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"pulse {name} must be finite, got {value!r}")
        if self.width <= 0:
            raise ValueError(f"pulse width must be > 0, got {self.width!r}")
        if self.amplitude < 0:
            raise ValueError(f"pulse amplitude must be >= 0, got {self.amplitude!r}")
        if not 0.0 <= self.weight <= 1.0:
            raise ValueError(f"pulse weight must lie in [0, 1], got {self.weight!r}")

    @property
    def peak(self) -> float:
        """Weighted peak Rabi frequency."""
        return self.weight * self.amplitude

    @property
    def area(self) -> float:
        """Peak Rabi frequency times width (the ``Omega*tau`` used in pulse-area scans)."""
        return self.peak * self.width


@dataclass(frozen=True)
class DetuningSpec:
    """Static detunings of the level scheme.

    ``delta`` is the two-photon detuning (``delta'`` in the four-level schemes).
    ``level4_splitting`` is the offset of state 3 above state 4; ``None`` ties it
    to ``delta`` as in the four-level field-interaction Hamiltonian.
    """

    Delta: float = 0.0
    delta: float = 0.0
    level4_splitting: Optional[float] = None

    def __post_init__(self):
        for name in ("Delta", "delta"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.level4_splitting is not None and not math.isfinite(self.level4_splitting):
            raise ValueError("level4_splitting must be finite")

    @property
    def splitting(self) -> float:
        return self.delta if self.level4_splitting is None else self.level4_splitting


def envelope(p: PulseSpec, t):
    """Rabi envelope ``weight*amplitude*exp(-(t-center)**2/width**2)``."""
    x = (np.asarray(t, dtype=float) - p.center) / p.width
    return p.peak * np.exp(-x * x)


def envelope_derivative(p: PulseSpec, t):
    """Analytic time derivative of :func:`envelope`."""
    t = np.asarray(t, dtype=float)
    return -2.0 * (t - p.center) / p.width**2 * envelope(p, t)


def chirp_phase(p: PulseSpec, t):
    """Quadratic chirp phase ``chirp/2 * (t - center - chirp_delay)**2`` [rad]."""
    u = np.asarray(t, dtype=float) - p.center - p.chirp_delay
    return 0.5 * p.chirp * u * u


def chirp_frequency(p: PulseSpec, t):
    """Instantaneous frequency offset ``chirp * (t - center - chirp_delay)``."""
    return p.chirp * (np.asarray(t, dtype=float) - p.center - p.chirp_delay)


def one_photon_detuning(d: DetuningSpec, pump: PulseSpec, t):
    """``Delta(t) = Delta - alpha*(t - t_p)`` (pump chirp delay included when set)."""
    return d.Delta - chirp_frequency(pump, t)


def two_photon_detuning(d: DetuningSpec, pump: PulseSpec, stokes: PulseSpec, t):
    """``delta(t) = -delta + beta*(t - t_s - t_d) - alpha*(t - t_p)``.

    ``stokes`` is the (first) Stokes component; its chirp delay is ``t_d``.
    """
    return -d.delta + chirp_frequency(stokes, t) - chirp_frequency(pump, t)


class EffectiveStokes(NamedTuple):
    amplitude: np.ndarray
    phase: np.ndarray
    chirp: np.ndarray
    indeterminate: np.ndarray


def _stokes_parts(s1: PulseSpec, s2: Optional[PulseSpec], t):
    a1 = envelope(s1, t)
    ph1 = chirp_phase(s1, t)
    w1 = chirp_frequency(s1, t)
    da1 = envelope_derivative(s1, t)
    if s2 is None:
        zero = np.zeros_like(a1)
        return a1, ph1, w1, da1, zero, zero, zero, zero
    return (a1, ph1, w1, da1, envelope(s2, t), chirp_phase(s2, t),
            chirp_frequency(s2, t), envelope_derivative(s2, t))


def effective_stokes(s1: PulseSpec, s2: Optional[PulseSpec], t) -> EffectiveStokes:
    """Amplitude, unwrapped phase and instantaneous chirp of the summed Stokes field.

    The two components ``a1*exp(i*phi1) + a2*exp(i*phi2)`` are combined in closed form:
    the amplitude by the law of cosines, the phase by ``atan2`` and the chirp
    ``g = d(phase)/dt`` from the analytic derivative.  ``t`` must be a scalar or a
    monotonically increasing array; the phase is unwrapped on a grid no coarser than
    :data:`UNWRAP_STEP`.  Where the amplitude drops below
    :data:`INDETERMINATE_AMPLITUDE` the phase and chirp are held at their last defined
    values and an :class:`IndeterminatePhaseWarning` is issued.
    """
    t_in = np.asarray(t, dtype=float)
    scalar = t_in.ndim == 0
    times = np.atleast_1d(t_in)
    if times.size > 1 and np.any(np.diff(times) <= 0):
        raise ValueError("effective_stokes needs a strictly increasing time grid")

    fine = times
    if times.size > 1 and np.max(np.diff(times)) > UNWRAP_STEP:
        n = int(math.ceil((times[-1] - times[0]) / UNWRAP_STEP)) + 1
        fine = np.union1d(times, np.linspace(times[0], times[-1], n))

    a1, ph1, w1, da1, a2, ph2, w2, da2 = _stokes_parts(s1, s2, fine)
    dphi = ph1 - ph2
    cos_d = np.cos(dphi)
    amp2 = a1 * a1 + a2 * a2 + 2.0 * a1 * a2 * cos_d
    amp = np.sqrt(np.maximum(amp2, 0.0))
    raw_phase = np.arctan2(a1 * np.sin(ph1) + a2 * np.sin(ph2),
                           a1 * np.cos(ph1) + a2 * np.cos(ph2))
    with np.errstate(divide="ignore", invalid="ignore"):
        g = (a1 * a1 * w1 + a2 * a2 * w2
             + a1 * a2 * (w1 + w2) * cos_d
             + (a2 * da1 - a1 * da2) * np.sin(dphi)) / amp2

    bad = amp < INDETERMINATE_AMPLITUDE
    if s2 is None:
        # single component: the phase is the chirp phase itself, no branch cuts
        phase = ph1.copy()
        g = w1.copy()
    else:
        phase = np.unwrap(raw_phase)
    if np.any(bad):
        phase, g = _hold_last(phase, bad), _hold_last(g, bad)
        warnings.warn("effective Stokes amplitude below 1e-12; phase held at last defined value",
                      IndeterminatePhaseWarning, stacklevel=2)

    if fine is not times:
        idx = np.searchsorted(fine, times)
        amp, phase, g, bad = amp[idx], phase[idx], g[idx], bad[idx]
    if scalar:
        return EffectiveStokes(amp[0], phase[0], g[0], bad[0])
    return EffectiveStokes(amp, phase, g, bad)


def _hold_last(values, bad):
    out = values.copy()
    good = np.flatnonzero(~bad)
    if good.size == 0:
        out[:] = 0.0
        return out
    # forward fill; leading undefined samples take the first defined value
    idx = np.where(~bad, np.arange(values.size), 0)
    np.maximum.accumulate(idx, out=idx)
    idx[: good[0]] = good[0]
    return out[idx]
