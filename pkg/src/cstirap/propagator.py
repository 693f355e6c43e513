"""Time-dependent Schrodinger equation ``i dpsi/dt = H(t) psi`` in the field-interaction frame.

The integrator is an embedded Dormand-Prince 5(4) pair with error-per-step control on
the complex amplitudes, compiled with numba.  Steps are shortened to land exactly on
each output time, so samples are integrator states rather than interpolants.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numba import njit

from .hamiltonian import ScenarioSpec, _hamiltonian_into

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-9
ABS_TOL = 1e-12
NORM_DRIFT_LIMIT = 1e-6
MIN_SAMPLES = 2001
MAX_SAMPLE_SPACING = 0.5
MAX_STEPS = 5_000_000

_OK, _UNDERFLOW, _TOO_MANY_STEPS = 0, 1, 2


class IntegrationError(RuntimeError):
    """Propagation did not produce a trustworthy trajectory."""


class StepSizeUnderflow(IntegrationError):
    def __init__(self, t: float, h: float):
        super().__init__(f"step size underflow (h={h:.3g}) near t={t:.6g}; stiff segment")
        self.t = t
        self.h = h


class NormDriftError(IntegrationError):
    def __init__(self, drift: float, t: float):
        super().__init__(f"norm drift {drift:.3g} exceeds {NORM_DRIFT_LIMIT:g} at t={t:.6g}")
        self.drift = drift
        self.t = t


@njit(cache=True)
def _rhs(t, y, p, n, H, out):
    _hamiltonian_into(t, p, n, H)
    for i in range(n):
        acc = 0j
        for j in range(n):
            acc += H[i, j] * y[j]
        out[i] = -1j * acc


@njit(cache=True)
def _dopri5(p, n, y0, times, rtol, atol, max_steps):
    a21 = 1 / 5
    a31, a32 = 3 / 40, 9 / 40
    a41, a42, a43 = 44 / 45, -56 / 15, 32 / 9
    a51, a52, a53, a54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
    a61, a62, a63, a64, a65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
    b1, b3, b4, b5, b6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
    e1, e3, e4, e5 = 71 / 57600, -71 / 16695, 71 / 1920, -17253 / 339200
    e6, e7 = 22 / 525, -1 / 40

    m = times.shape[0]
    out = np.zeros((m, n), np.complex128)
    H = np.zeros((n, n), np.complex128)
    k1 = np.zeros(n, np.complex128)
    k2 = np.zeros(n, np.complex128)
    k3 = np.zeros(n, np.complex128)
    k4 = np.zeros(n, np.complex128)
    k5 = np.zeros(n, np.complex128)
    k6 = np.zeros(n, np.complex128)
    k7 = np.zeros(n, np.complex128)
    yt = np.zeros(n, np.complex128)
    yn = np.zeros(n, np.complex128)
    y = y0.copy()
    out[0, :] = y

    t = times[0]
    span = times[m - 1] - times[0]
    h = min(0.01, span)
    h_min = 1e-13 * max(1.0, abs(times[0]), abs(times[m - 1]))
    steps = 0
    rejected = 0
    _rhs(t, y, p, n, H, k1)
    for idx in range(1, m):
        target = times[idx]
        while t < target:
            if steps + rejected >= max_steps:
                return out[:idx], _TOO_MANY_STEPS, t, h, steps, rejected
            if h < h_min:
                return out[:idx], _UNDERFLOW, t, h, steps, rejected
            clipped = t + h >= target
            hs = target - t if clipped else h
            for i in range(n):
                yt[i] = y[i] + hs * a21 * k1[i]
            _rhs(t + hs / 5, yt, p, n, H, k2)
            for i in range(n):
                yt[i] = y[i] + hs * (a31 * k1[i] + a32 * k2[i])
            _rhs(t + 3 * hs / 10, yt, p, n, H, k3)
            for i in range(n):
                yt[i] = y[i] + hs * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i])
            _rhs(t + 4 * hs / 5, yt, p, n, H, k4)
            for i in range(n):
                yt[i] = y[i] + hs * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i])
            _rhs(t + 8 * hs / 9, yt, p, n, H, k5)
            for i in range(n):
                yt[i] = y[i] + hs * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i]
                                     + a64 * k4[i] + a65 * k5[i])
            _rhs(t + hs, yt, p, n, H, k6)
            for i in range(n):
                yn[i] = y[i] + hs * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i]
                                     + b5 * k5[i] + b6 * k6[i])
            _rhs(t + hs, yn, p, n, H, k7)
            err = 0.0
            for i in range(n):
                e = hs * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i]
                          + e6 * k6[i] + e7 * k7[i])
                sc = atol + rtol * max(abs(y[i]), abs(yn[i]))
                err += (abs(e) / sc) ** 2
            err = math.sqrt(err / n)
            fac = 5.0 if err == 0.0 else 0.9 * err ** -0.2
            if err <= 1.0:
                t = target if clipped else t + hs
                y[:] = yn
                k1[:] = k7
                steps += 1
                # a clipped step says nothing about the natural step size
                if not clipped:
                    h = hs * min(5.0, max(0.2, fac))
            else:
                rejected += 1
                h = hs * max(0.2, fac)
        out[idx, :] = y
    return out, _OK, t, h, steps, rejected


@dataclass(frozen=True)
class Trajectory:
    """Sampled pure-state evolution.

    ``amplitudes[k, i]`` is ``a_i(times[k])``; ``coherences[k, i, j] = a_i a_j*``.
    """

    times: np.ndarray
    amplitudes: np.ndarray
    steps: int = 0
    rejected: int = 0

    @property
    def n_levels(self) -> int:
        return self.amplitudes.shape[1]

    @property
    def populations(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    @property
    def coherences(self) -> np.ndarray:
        a = self.amplitudes
        return a[:, :, None] * a[:, None, :].conj()

    @property
    def norm(self) -> np.ndarray:
        return np.linalg.norm(self.amplitudes, axis=1)

    def coherence(self, i: int, j: int) -> np.ndarray:
        """``rho_ij(t)`` for 1-based level indices."""
        return self.amplitudes[:, i - 1] * self.amplitudes[:, j - 1].conj()


def default_sample_times(t_start: float, t_end: float, samples: Optional[int] = None) -> np.ndarray:
    """Uniform output grid: at least 2001 points and spacing no coarser than 0.5."""
    if samples is None:
        samples = max(MIN_SAMPLES, int(math.ceil((t_end - t_start) / MAX_SAMPLE_SPACING)) + 1)
    if samples < 2:
        raise ValueError("need at least two output samples")
    return np.linspace(t_start, t_end, samples)


def propagate(s: ScenarioSpec, tol: float = DEFAULT_TOL, samples: Optional[int] = None,
              times: Optional[np.ndarray] = None) -> Trajectory:
    """Integrate from ``s.t_start`` to ``s.t_end`` starting in ``s.psi0``.

    ``tol`` is the relative local error per step, in ``[1e-12, 1e-6]``; the absolute
    tolerance is fixed at 1e-12.  Output times default to :func:`default_sample_times`;
    an explicit increasing ``times`` array overrides ``samples`` and the window.

    Raises
    ------
    StepSizeUnderflow
        The step size collapsed.
    NormDriftError
        ``max_t | ||psi|| - 1 |`` exceeded 1e-6.
    IntegrationError
        The step budget was exhausted.
    """
    if not 1e-12 <= tol <= 1e-6:
        raise ValueError(f"tol must lie in [1e-12, 1e-6], got {tol!r}")
    if times is None:
        times = default_sample_times(*s.window, samples)
    else:
        times = np.ascontiguousarray(times, dtype=float)
        if times.ndim != 1 or times.size < 2 or np.any(np.diff(times) <= 0):
            raise ValueError("times must be a strictly increasing 1-D array of length >= 2")

    amps, status, t, h, steps, rejected = _dopri5(
        s.kernel_params(), s.n_levels, s.psi0, times, tol, ABS_TOL, MAX_STEPS)
    if status == _UNDERFLOW:
        raise StepSizeUnderflow(t, h)
    if status == _TOO_MANY_STEPS:
        raise IntegrationError(f"step budget {MAX_STEPS} exhausted near t={t:.6g}")

    tr = Trajectory(times=times, amplitudes=amps, steps=int(steps), rejected=int(rejected))
    drift = np.abs(tr.norm - np.linalg.norm(s.psi0))
    worst = int(np.argmax(drift))
    if drift[worst] > NORM_DRIFT_LIMIT:
        raise NormDriftError(float(drift[worst]), float(times[worst]))
    log.debug("propagated %s: %d steps, %d rejected", s.scheme.value, steps, rejected)
    return tr


def final_observables(tr: Trajectory) -> dict:
    """Populations ``rho_ii`` and coherence magnitudes ``|rho_ij|`` (i<j) at the last sample.

    Keys are ``"rho11"``, ``"rho22"``, ... and ``"abs_rho12"``, ``"abs_rho13"``, ...
    """
    if tr.amplitudes.shape[0] == 0:
        raise ValueError("empty trajectory")
    a = tr.amplitudes[-1]
    n = a.size
    obs = {f"rho{i + 1}{i + 1}": float(abs(a[i]) ** 2) for i in range(n)}
    for i in range(n):
        for j in range(i + 1, n):
            obs[f"abs_rho{i + 1}{j + 1}"] = float(abs(a[i] * a[j].conjugate()))
    return obs
