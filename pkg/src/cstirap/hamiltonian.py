"""Rotating-wave field-interaction Hamiltonians for the STIRAP family of schemes.

Every scheme is an instance of one matrix family.  With the Stokes field

    S(t) = Omega_s1(t) + Omega_s2(t) * exp(i*eta(t)),
    eta(t) = phi + beta1/2*(t - t_s1 - t_d1)**2 - beta2/2*(t - t_s2 - t_d2)**2,

the detunings ``Delta(t) = Delta - alpha*(t - t_p)`` and
``delta(t) = -delta + beta1*(t - t_s1 - t_d1) - alpha*(t - t_p)``, the
three-level matrix is::

    [[0,        Op/2,     0      ],
     [Op/2,     Delta(t), S/2    ],
     [0,        conj(S)/2, delta(t)]]

and the four-level one adds state 4 coupled to state 2 by the same Stokes field,
with diagonal ``delta(t)`` for state 4 and ``delta(t) + splitting`` for state 3.
Unchirped schemes (STIRAP, F-STIRAP) are the zero-chirp members of the family,
so the F-STIRAP diagonal ``-delta`` and constant phase ``phi`` follow directly.
The prefactor hbar/2 is absorbed (hbar = 1): entries are half the bracketed
matrices and eigenvalues are the dressed energies in [omega].
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from numba import njit

from .pulses import (
    DetuningSpec,
    PulseSpec,
    envelope,
    one_photon_detuning,
    two_photon_detuning,
)


class SchemeError(ValueError):
    """Scenario does not fit the requested scheme or operation."""


class Scheme(str, enum.Enum):
    STIRAP3 = "STIRAP3"
    CSTIRAP3 = "CSTIRAP3"
    CSTIRAP4 = "CSTIRAP4"
    FSTIRAP3 = "FSTIRAP3"
    CFSTIRAP3 = "CFSTIRAP3"
    CFSTIRAP4 = "CFSTIRAP4"
    FSTIRAP3_SINGLE_STOKES = "FSTIRAP3_SINGLE_STOKES"

    @property
    def n_levels(self) -> int:
        return 4 if self in (Scheme.CSTIRAP4, Scheme.CFSTIRAP4) else 3

    @property
    def two_stokes(self) -> bool:
        return self in (Scheme.FSTIRAP3, Scheme.CFSTIRAP3, Scheme.CFSTIRAP4)

    @property
    def chirped(self) -> bool:
        return self in (Scheme.CSTIRAP3, Scheme.CSTIRAP4, Scheme.CFSTIRAP3, Scheme.CFSTIRAP4)

    @property
    def fractional(self) -> bool:
        return self.two_stokes


_WEIGHT_TOL = 1e-12


@dataclass(frozen=True)
class ScenarioSpec:
    """Immutable description of one simulation.

    ``t_start``/``t_end`` default to ``[min(t_c - 4 tau), max(t_c + 5 tau)]`` over the
    pulses; ``initial_state`` defaults to the ground state ``|1>``.
    For fractional schemes the pump weight must equal ``sin(mixing_angle)`` and the
    second Stokes weight ``cos(mixing_angle)``; use :meth:`with_mixing_angle` to change A.
    """

    scheme: Scheme
    detunings: DetuningSpec = field(default_factory=DetuningSpec)
    pump: PulseSpec = field(default_factory=lambda: PulseSpec(center=70.0))
    stokes1: PulseSpec = field(default_factory=lambda: PulseSpec(center=-70.0))
    stokes2: Optional[PulseSpec] = None
    mixing_angle: float = math.pi / 2
    phase: float = 0.0
    t_start: Optional[float] = None
    t_end: Optional[float] = None
    initial_state: Optional[tuple] = None

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        if self.initial_state is not None:
            object.__setattr__(self, "initial_state",
                               tuple(complex(a) for a in self.initial_state))
        s = self.scheme
        if s.two_stokes and self.stokes2 is None:
            raise SchemeError(f"{s.value} needs a second Stokes component")
        if not s.two_stokes and self.stokes2 is not None:
            raise SchemeError(f"{s.value} takes a single Stokes pulse")
        if not s.chirped:
            for p in self.pulses:
                if p.chirp != 0.0:
                    raise SchemeError(f"{s.value} is unchirped; got chirp {p.chirp!r}")
        if not 0.0 <= self.mixing_angle <= math.pi / 2 + 1e-15:
            raise SchemeError("mixing angle must lie in [0, pi/2]")
        if not math.isfinite(self.phase):
            raise SchemeError("phase must be finite")
        if s.fractional:
            if abs(self.pump.weight - math.sin(self.mixing_angle)) > _WEIGHT_TOL:
                raise SchemeError("pump weight must equal sin(mixing_angle)")
            if abs(self.stokes2.weight - math.cos(self.mixing_angle)) > _WEIGHT_TOL:
                raise SchemeError("second Stokes weight must equal cos(mixing_angle)")
        t0, t1 = self.window
        if not (math.isfinite(t0) and math.isfinite(t1)) or t0 >= t1:
            raise SchemeError(f"need t_start < t_end, got [{t0}, {t1}]")
        psi = self.psi0
        if psi.shape != (s.n_levels,):
            raise SchemeError(f"initial state must have {s.n_levels} components")
        if abs(np.linalg.norm(psi) - 1.0) > 1e-10:
            raise SchemeError("initial state must be normalised")

    @property
    def n_levels(self) -> int:
        return self.scheme.n_levels

    @property
    def pulses(self) -> tuple:
        if self.stokes2 is None:
            return (self.pump, self.stokes1)
        return (self.pump, self.stokes1, self.stokes2)

    @property
    def window(self) -> tuple:
        pulses = self.pulses
        t0 = self.t_start
        if t0 is None:
            t0 = min(p.center - 4.0 * p.width for p in pulses)
        t1 = self.t_end
        if t1 is None:
            t1 = max(p.center + 5.0 * p.width for p in pulses)
        return float(t0), float(t1)

    @property
    def psi0(self) -> np.ndarray:
        if self.initial_state is None:
            psi = np.zeros(self.n_levels, dtype=complex)
            psi[0] = 1.0
            return psi
        return np.array(self.initial_state, dtype=complex)

    def with_mixing_angle(self, angle: float) -> "ScenarioSpec":
        """Copy with a new constant mixing angle, re-weighting the fractional pulses."""
        if not self.scheme.fractional:
            return replace(self, mixing_angle=angle)
        return replace(
            self,
            mixing_angle=angle,
            pump=replace(self.pump, weight=math.sin(angle)),
            stokes2=replace(self.stokes2, weight=abs(math.cos(angle))),
        )

    def kernel_params(self) -> np.ndarray:
        """Flat parameter vector consumed by the compiled Hamiltonian."""
        p = np.zeros(N_PARAMS)
        for offset, pulse in zip((0, 5, 10), (self.pump, self.stokes1, self.stokes2)):
            if pulse is None:
                p[offset:offset + 5] = (0.0, 0.0, 1.0, 0.0, 0.0)
            else:
                p[offset:offset + 5] = (pulse.peak, pulse.center, pulse.width,
                                        pulse.chirp, pulse.chirp_delay)
        d = self.detunings
        p[15:19] = (d.Delta, d.delta, d.splitting, self.phase)
        return p


def stirap(scheme="STIRAP3", *, Omega0=1.0, tau=100.0, t_p=70.0, t_s=-70.0,
           Delta=0.0, delta=0.0, alpha=0.0, beta=None, t_d=0.0, **kw) -> ScenarioSpec:
    """Counter-intuitive pump/Stokes pair (STIRAP3, CSTIRAP3, CSTIRAP4)."""
    beta = alpha if beta is None else beta
    return ScenarioSpec(
        scheme=Scheme(scheme),
        detunings=DetuningSpec(Delta=Delta, delta=delta),
        pump=PulseSpec(Omega0, t_p, tau, alpha),
        stokes1=PulseSpec(Omega0, t_s, tau, beta, t_d),
        **kw,
    )


def f_stirap(scheme="FSTIRAP3", *, Omega0=1.0, tau=100.0, t_p=70.0, mixing_angle=math.pi / 4,
             Delta=0.0, delta=0.0, phase=0.0, alpha=0.0, beta1=None, beta2=None,
             t_d1=0.0, t_d2=None, **kw) -> ScenarioSpec:
    """Fractional schemes: pump at ``t_p``, Stokes components at ``-t_p`` and ``t_p``.

    Chirp rates default to ``alpha`` and ``t_d2`` to ``-2 t_p`` when chirped, which
    keeps ``eta(t)`` constant.
    """
    beta1 = alpha if beta1 is None else beta1
    beta2 = alpha if beta2 is None else beta2
    if t_d2 is None:
        t_d2 = -2.0 * t_p if Scheme(scheme).chirped else 0.0
    return ScenarioSpec(
        scheme=Scheme(scheme),
        detunings=DetuningSpec(Delta=Delta, delta=delta),
        pump=PulseSpec(Omega0, t_p, tau, alpha, weight=math.sin(mixing_angle)),
        stokes1=PulseSpec(Omega0, -t_p, tau, beta1, t_d1),
        stokes2=PulseSpec(Omega0, t_p, tau, beta2, t_d2, weight=abs(math.cos(mixing_angle))),
        mixing_angle=mixing_angle,
        phase=phase,
        **kw,
    )


# --- compiled core -------------------------------------------------------------------

N_PARAMS = 19


@njit(cache=True)
def _hamiltonian_into(t, p, n, H):
    amp_p, tc_p, tau_p, alpha, td_p = p[0], p[1], p[2], p[3], p[4]
    amp_1, tc_1, tau_1, beta1, td_1 = p[5], p[6], p[7], p[8], p[9]
    amp_2, tc_2, tau_2, beta2, td_2 = p[10], p[11], p[12], p[13], p[14]
    Delta, delta, split, phi = p[15], p[16], p[17], p[18]

    x = (t - tc_p) / tau_p
    om_p = amp_p * math.exp(-x * x)
    x = (t - tc_1) / tau_1
    om_1 = amp_1 * math.exp(-x * x)
    x = (t - tc_2) / tau_2
    om_2 = amp_2 * math.exp(-x * x)

    u_p = t - tc_p - td_p
    u_1 = t - tc_1 - td_1
    u_2 = t - tc_2 - td_2
    eta = phi + 0.5 * beta1 * u_1 * u_1 - 0.5 * beta2 * u_2 * u_2
    s_re = 0.5 * (om_1 + om_2 * math.cos(eta))
    s_im = 0.5 * om_2 * math.sin(eta)
    big_delta = Delta - alpha * u_p
    small_delta = -delta + beta1 * u_1 - alpha * u_p

    for i in range(n):
        for j in range(n):
            H[i, j] = 0.0
    H[0, 1] = 0.5 * om_p
    H[1, 0] = 0.5 * om_p
    H[1, 1] = big_delta
    H[1, 2] = complex(s_re, s_im)
    H[2, 1] = complex(s_re, -s_im)
    if n == 3:
        H[2, 2] = small_delta
    else:
        H[2, 2] = small_delta + split
        H[3, 3] = small_delta
        H[1, 3] = complex(s_re, s_im)
        H[3, 1] = complex(s_re, -s_im)


@njit(cache=True)
def _hamiltonian_derivative_into(t, p, n, H):
    amp_p, tc_p, tau_p, alpha, td_p = p[0], p[1], p[2], p[3], p[4]
    amp_1, tc_1, tau_1, beta1, td_1 = p[5], p[6], p[7], p[8], p[9]
    amp_2, tc_2, tau_2, beta2, td_2 = p[10], p[11], p[12], p[13], p[14]
    phi = p[18]

    x = (t - tc_p) / tau_p
    d_om_p = -2.0 * x / tau_p * amp_p * math.exp(-x * x)
    x = (t - tc_1) / tau_1
    d_om_1 = -2.0 * x / tau_1 * amp_1 * math.exp(-x * x)
    x = (t - tc_2) / tau_2
    om_2 = amp_2 * math.exp(-x * x)
    d_om_2 = -2.0 * x / tau_2 * om_2

    u_1 = t - tc_1 - td_1
    u_2 = t - tc_2 - td_2
    eta = phi + 0.5 * beta1 * u_1 * u_1 - 0.5 * beta2 * u_2 * u_2
    d_eta = beta1 * u_1 - beta2 * u_2
    c, s = math.cos(eta), math.sin(eta)
    ds_re = 0.5 * (d_om_1 + d_om_2 * c - om_2 * d_eta * s)
    ds_im = 0.5 * (d_om_2 * s + om_2 * d_eta * c)

    for i in range(n):
        for j in range(n):
            H[i, j] = 0.0
    H[0, 1] = 0.5 * d_om_p
    H[1, 0] = 0.5 * d_om_p
    H[1, 1] = -alpha
    H[1, 2] = complex(ds_re, ds_im)
    H[2, 1] = complex(ds_re, -ds_im)
    H[2, 2] = beta1 - alpha
    if n == 4:
        H[3, 3] = beta1 - alpha
        H[1, 3] = complex(ds_re, ds_im)
        H[3, 1] = complex(ds_re, -ds_im)


@njit(cache=True)
def _series_into(times, p, n, out, derivative):
    for k in range(times.shape[0]):
        if derivative:
            _hamiltonian_derivative_into(times[k], p, n, out[k])
        else:
            _hamiltonian_into(times[k], p, n, out[k])


# --- public evaluation -----------------------------------------------------------------

def hamiltonian_at(s: ScenarioSpec, t: float) -> np.ndarray:
    """Hermitian ``n x n`` field-interaction Hamiltonian at time ``t`` [omega]."""
    H = np.empty((s.n_levels, s.n_levels), dtype=np.complex128)
    _hamiltonian_into(float(t), s.kernel_params(), s.n_levels, H)
    return H


def hamiltonian_derivative(s: ScenarioSpec, t: float) -> np.ndarray:
    """Analytic ``dH/dt`` at time ``t`` [omega**2]."""
    H = np.empty((s.n_levels, s.n_levels), dtype=np.complex128)
    _hamiltonian_derivative_into(float(t), s.kernel_params(), s.n_levels, H)
    return H


def hamiltonian_series(s: ScenarioSpec, times, derivative: bool = False) -> np.ndarray:
    """Stack of ``H(t_k)`` (or ``dH/dt``) with shape ``(len(times), n, n)``."""
    times = np.ascontiguousarray(np.atleast_1d(times), dtype=float)
    out = np.empty((times.size, s.n_levels, s.n_levels), dtype=np.complex128)
    _series_into(times, s.kernel_params(), s.n_levels, out, derivative)
    return out


def stokes_field(s: ScenarioSpec, t):
    """Complex Stokes Rabi frequency ``Omega_s1 + Omega_s2*exp(i*eta)`` as it enters H."""
    field_ = envelope(s.stokes1, t).astype(complex)
    if s.stokes2 is not None:
        field_ = field_ + envelope(s.stokes2, t) * np.exp(1j * _eta(s, t))
    return field_


def _eta(s: ScenarioSpec, t):
    t = np.asarray(t, dtype=float)
    s1, s2 = s.stokes1, s.stokes2
    u1 = t - s1.center - s1.chirp_delay
    u2 = t - s2.center - s2.chirp_delay
    return s.phase + 0.5 * s1.chirp * u1**2 - 0.5 * s2.chirp * u2**2


def eta_phase(s: ScenarioSpec, t):
    """Relative phase of the two Stokes components in the chirped fractional schemes."""
    if s.scheme not in (Scheme.CFSTIRAP3, Scheme.CFSTIRAP4):
        raise SchemeError(f"eta(t) is defined for CFSTIRAP3/4, not {s.scheme.value}")
    return _eta(s, t)


def detunings_at(s: ScenarioSpec, t):
    """``(Delta(t), delta(t))`` entering the diagonal of :func:`hamiltonian_at`."""
    return (one_photon_detuning(s.detunings, s.pump, t),
            two_photon_detuning(s.detunings, s.pump, s.stokes1, t))


def analytic_dressed_energies_3lvl(omega_p, omega_s, delta_t):
    """Dressed energies ``(lambda_plus, lambda_0, lambda_minus)`` of the resonant 3-level matrix.

    Valid when the two-photon detuning vanishes; ``omega_s`` may be complex.
    """
    omega_p = np.asarray(omega_p)
    omega_s = np.asarray(omega_s)
    delta_t = np.asarray(delta_t, dtype=float)
    root = np.hypot(delta_t, np.hypot(np.abs(omega_p), np.abs(omega_s)))
    zero = np.zeros_like(root)
    return 0.5 * (delta_t + root), zero, 0.5 * (delta_t - root)


def quartic_eval(s: ScenarioSpec, t: float, lam):
    """Characteristic polynomial of the four-level Hamiltonian split as ``f = f0 + f1``.

    ``f0`` is the field-free product of the diagonal factors (its roots are the
    in/out-going bare energies) and ``f1`` the field-induced remainder.  ``lam`` is in
    the units of the eigenvalues of :func:`hamiltonian_at`; ``f(lam) = det(lam - H)``.
    """
    if s.n_levels != 4:
        raise SchemeError(f"quartic is defined for the four-level schemes, not {s.scheme.value}")
    lam = np.asarray(lam, dtype=complex if np.iscomplexobj(lam) else float)
    big_delta, small_delta = detunings_at(s, t)
    e3 = small_delta + s.detunings.splitting
    e4 = small_delta
    coupling_p = (0.5 * envelope(s.pump, t)) ** 2
    coupling_s = np.abs(0.5 * stokes_field(s, t)) ** 2
    f0 = lam * (lam - big_delta) * (lam - e3) * (lam - e4)
    f1 = -coupling_p * (lam - e3) * (lam - e4) - coupling_s * lam * (2.0 * lam - e3 - e4)
    return f0 + f1, f0, f1


def quartic_coefficients(s: ScenarioSpec, t: float) -> np.ndarray:
    """Monomial coefficients of :func:`quartic_eval`, highest power first."""
    samples = np.arange(5, dtype=float) - 2.0
    values = quartic_eval(s, t, samples)[0]
    return np.polyfit(samples, values, 4)
