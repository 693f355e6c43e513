"""Dressed-state (instantaneous eigenbasis) analysis of the field-interaction Hamiltonian.

Eigenpairs are followed in time by maximal overlap rather than by energy order, so
curves may cross in energy.  Label ``k`` (0-based in arrays) is the dressed state that
starts on bare state ``k``.  Where the overlap between neighbouring samples drops below
:data:`CONTINUITY_OVERLAP` the interval is bisected until the assignment is
unambiguous; the stored samples never change.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.optimize import linear_sum_assignment, minimize_scalar

from .hamiltonian import ScenarioSpec, SchemeError, hamiltonian_series, stokes_field
from .pulses import PulseSpec, envelope, envelope_derivative, one_photon_detuning
from .propagator import Trajectory

DEGENERACY_GAP = 1e-12
CONTINUITY_OVERLAP = 0.9
MAX_BISECTIONS = 40
FD_STEP = 1e-3
DEFAULT_GAP_THRESHOLD = 0.05
SLOPE_PROBE = 0.25

HamiltonianFn = Callable[[np.ndarray], np.ndarray]


class ContinuityError(RuntimeError):
    """Eigenvectors could not be matched across a time step."""


@dataclass(frozen=True)
class DressedFrame:
    """Continuity-tracked eigendecomposition sampled on ``times``.

    ``eigenvectors[k, :, j]`` is dressed state ``j`` at ``times[k]``;
    ``couplings[k, i, j] = |<v_i|dv_j/dt>|``; ``overlaps[k]`` is the smallest matched
    overlap modulus on the (possibly bisected) path from ``times[k]`` to ``times[k+1]``.
    """

    times: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    populations: Optional[np.ndarray]
    couplings: np.ndarray
    overlaps: np.ndarray
    degenerate: np.ndarray
    bare_in: np.ndarray
    bare_out: np.ndarray
    hamiltonian: Optional[HamiltonianFn] = field(default=None, repr=False, compare=False)
    derivative: Optional[HamiltonianFn] = field(default=None, repr=False, compare=False)

    @property
    def n_levels(self) -> int:
        return self.eigenvalues.shape[1]

    def coupling(self, i: int, j: int) -> np.ndarray:
        """``V_ij(t)`` for 1-based dressed labels."""
        return self.couplings[:, i - 1, j - 1]


@dataclass(frozen=True)
class CrossingReport:
    """One avoided crossing between dressed states ``pair`` (1-based labels)."""

    pair: tuple
    time: float
    gap: float
    gap_slope: float
    coupling_peak: float
    coupling_hwhm: float = math.nan
    coupling_fwhm: float = math.nan
    coupling_area: float = math.nan

    @property
    def p_lz(self) -> float:
        return landau_zener(self)

    @property
    def p_lz_standard(self) -> float:
        return landau_zener_standard(self.gap, self.gap_slope)


# --- tracking ---------------------------------------------------------------------------

def _clusters(evals):
    """Index groups of eigenvalues (ascending) closer than DEGENERACY_GAP."""
    groups, current = [], [0]
    for k in range(1, evals.size):
        if evals[k] - evals[k - 1] < DEGENERACY_GAP:
            current.append(k)
        else:
            groups.append(current)
            current = [k]
    groups.append(current)
    return [g for g in groups if len(g) > 1]


def _align_degenerate(evals, vecs, ref):
    clusters = _clusters(evals)
    if not clusters:
        return vecs, False
    vecs = vecs.copy()
    for cl in clusters:
        w = vecs[:, cl]
        proj = w.conj().T @ ref
        chosen = np.argsort(np.linalg.norm(proj, axis=0))[-len(cl):]
        u, _, vh = np.linalg.svd(proj[:, chosen])
        vecs[:, cl] = w @ (u @ vh)
    return vecs, True


def _match(ref, evals, vecs):
    vecs, degenerate = _align_degenerate(evals, vecs, ref)
    overlap = ref.conj().T @ vecs
    _, cols = linear_sum_assignment(-np.abs(overlap))
    vecs = vecs[:, cols]
    evals = evals[cols]
    d = np.einsum("ij,ij->j", ref.conj(), vecs)
    mag = np.abs(d)
    phase = np.where(mag > 0, d / np.where(mag > 0, mag, 1.0), 1.0)
    return evals, vecs * phase.conj(), float(mag.min()), degenerate


def _fix_first_gauge(vecs):
    idx = np.argmax(np.abs(vecs), axis=0)
    lead = vecs[idx, np.arange(vecs.shape[1])]
    return vecs * (np.abs(lead) / lead).conj()


def _advance(hfun, ta, ref, tb, wb, vb, depth=0):
    ev, vec, ov, degenerate = _match(ref, wb, vb)
    if ov >= CONTINUITY_OVERLAP or depth >= MAX_BISECTIONS:
        return ev, vec, ov, degenerate
    tm = 0.5 * (ta + tb)
    wm, vm = np.linalg.eigh(hfun(np.array([tm]))[0])
    _, vm, ov_a, deg_a = _advance(hfun, ta, ref, tm, wm, vm, depth + 1)
    ev, vec, ov_b, deg_b = _advance(hfun, tm, vm, tb, wb, vb, depth + 1)
    return ev, vec, min(ov_a, ov_b), degenerate or deg_a or deg_b


def track_eigenstates(hfun: HamiltonianFn, times):
    """Follow the eigenpairs of ``hfun(times)`` by maximal overlap.

    ``hfun`` maps a 1-D time array to a stack of Hermitian matrices.  Returns
    ``(eigenvalues (m, n), eigenvectors (m, n, n), overlaps (m-1,), degenerate (m,))``.

    Raises
    ------
    ContinuityError
        A step could not be matched above the overlap threshold even after
        bisection and no degeneracy explains it.
    """
    times = np.asarray(times, dtype=float)
    w, v = np.linalg.eigh(hfun(times))
    m, n = w.shape
    evals = np.empty((m, n))
    vecs = np.empty((m, n, n), dtype=complex)
    overlaps = np.ones(max(m - 1, 0))
    degenerate = np.zeros(m, dtype=bool)

    ev, vec, _, degenerate[0] = _match(np.eye(n, dtype=complex), w[0], v[0])
    evals[0], vecs[0] = ev, _fix_first_gauge(vec)
    for k in range(1, m):
        ev, vec, ov, deg = _advance(hfun, times[k - 1], vecs[k - 1], times[k], w[k], v[k])
        if ov < CONTINUITY_OVERLAP and not deg:
            raise ContinuityError(
                f"overlap {ov:.3g} between t={times[k - 1]:.6g} and t={times[k]:.6g}")
        evals[k], vecs[k], overlaps[k - 1], degenerate[k] = ev, vec, ov, deg
    return evals, vecs, overlaps, degenerate


def _couplings(times, evals, vecs, dh):
    m_el = np.einsum("kai,kab,kbj->kij", vecs.conj(), dh, vecs)
    gap = evals[:, None, :] - evals[:, :, None]
    close = np.abs(gap) <= DEGENERACY_GAP
    with np.errstate(divide="ignore", invalid="ignore"):
        v = np.abs(m_el) / np.abs(gap)
    if np.any(close) and times.size > 2:
        dv = np.gradient(vecs, times, axis=0)
        fd = np.abs(np.einsum("kai,kaj->kij", vecs.conj(), dv))
        v = np.where(close, fd, v)
    v = np.where(close & (times.size <= 2), 0.0, v)
    idx = np.arange(evals.shape[1])
    v[:, idx, idx] = 0.0
    return v


def frame_from_hamiltonian(hfun: HamiltonianFn, times, amplitudes=None,
                           dhfun: Optional[HamiltonianFn] = None) -> DressedFrame:
    """Dressed frame of an arbitrary Hermitian ``hfun`` sampled on ``times``.

    ``dhfun`` supplies ``dH/dt``; without it a central difference with step
    :data:`FD_STEP` is used.  ``amplitudes`` (``(m, n)`` state vectors) enable the
    dressed populations ``|<v_k|psi>|**2``.
    """
    times = np.asarray(times, dtype=float)
    evals, vecs, overlaps, degenerate = track_eigenstates(hfun, times)
    if dhfun is None:
        dh = (hfun(times + FD_STEP) - hfun(times - FD_STEP)) / (2.0 * FD_STEP)
    else:
        dh = dhfun(times)
    pops = None
    if amplitudes is not None:
        pops = np.abs(np.einsum("kij,ki->kj", vecs.conj(), np.asarray(amplitudes))) ** 2
    ends = hfun(np.array([times[0], times[-1]]))
    return DressedFrame(
        times=times,
        eigenvalues=evals,
        eigenvectors=vecs,
        populations=pops,
        couplings=_couplings(times, evals, vecs, dh),
        overlaps=overlaps,
        degenerate=degenerate,
        bare_in=np.diag(ends[0]).real.copy(),
        bare_out=np.diag(ends[1]).real.copy(),
        hamiltonian=hfun,
        derivative=dhfun,
    )


def dressed_frame(s: ScenarioSpec, tr: Trajectory) -> DressedFrame:
    """Dressed frame of scenario ``s`` on the trajectory's sample times."""
    if tr.n_levels != s.n_levels:
        raise SchemeError("trajectory and scenario have different level counts")
    return frame_from_hamiltonian(
        lambda t: hamiltonian_series(s, t),
        tr.times,
        tr.amplitudes,
        dhfun=lambda t: hamiltonian_series(s, t, derivative=True),
    )


def dark_label(df: DressedFrame) -> int:
    """0-based label of the dressed state with the least weight on bare state 2."""
    return int(np.argmin(np.max(np.abs(df.eigenvectors[:, 1, :]), axis=0)))


# --- three-level geometry ---------------------------------------------------------------

def mixing_angles(s: ScenarioSpec, t):
    """Mixing angles ``(theta, phi)``: ``tan theta = Omega_p/|Omega_s|``,
    ``tan 2phi = sqrt(Omega_p**2 + |Omega_s|**2)/Delta(t)``.

    Where both fields vanish ``theta`` keeps its previous value.
    """
    if s.n_levels != 3:
        raise SchemeError("mixing angles are defined for three-level schemes")
    t = np.asarray(t, dtype=float)
    om_p = envelope(s.pump, t)
    om_s = np.abs(stokes_field(s, t))
    theta = np.arctan2(om_p, om_s)
    rabi = np.sqrt(om_p**2 + om_s**2)
    phi = 0.5 * np.arctan2(rabi, one_photon_detuning(s.detunings, s.pump, t))
    if theta.ndim:
        undefined = om_p**2 + om_s**2 < 1e-300
        if np.any(undefined):
            good = np.flatnonzero(~undefined)
            if good.size:
                idx = np.where(~undefined, np.arange(theta.size), 0)
                np.maximum.accumulate(idx, out=idx)
                idx[: good[0]] = good[0]
                theta = theta[idx]
    return theta, phi


def rotation_matrix(theta, phi) -> np.ndarray:
    """Real orthogonal ``T`` whose columns are the ``lambda_+``, dark and ``lambda_-`` states."""
    st, ct = math.sin(theta), math.cos(theta)
    sp, cp = math.sin(phi), math.cos(phi)
    return np.array([
        [st * sp, ct, st * cp],
        [cp, 0.0, -sp],
        [ct * sp, -st, ct * cp],
    ])


def dark_state(theta) -> np.ndarray:
    """``cos(theta)|1> - sin(theta)|3>``."""
    return np.array([math.cos(theta), 0.0, -math.sin(theta)])


def theta_dot(pump: PulseSpec, stokes: PulseSpec, t):
    """Rate of change of ``theta = atan(Omega_p/Omega_s)`` from analytic envelope derivatives.

    Returns 0 where both envelopes are below 1e-300.
    """
    om_p, om_s = envelope(pump, t), envelope(stokes, t)
    d_p, d_s = envelope_derivative(pump, t), envelope_derivative(stokes, t)
    denom = om_p**2 + om_s**2
    vanished = (om_p < 1e-300) & (om_s < 1e-300)
    with np.errstate(divide="ignore", invalid="ignore"):
        rate = (om_s * d_p - om_p * d_s) / denom
    return np.where(vanished | ~np.isfinite(rate), 0.0, rate)


# --- avoided crossings --------------------------------------------------------------------

def landau_zener(cr: CrossingReport) -> float:
    """``exp(-4 pi**2 V_peak**2 / |d/dt(lambda_i - lambda_j)|)`` clamped to [0, 1]; 0 at zero slope."""
    if cr.gap_slope == 0.0:
        return 0.0
    return float(min(1.0, max(0.0, math.exp(-4.0 * math.pi**2 * cr.coupling_peak**2
                                            / abs(cr.gap_slope)))))


def landau_zener_standard(gap: float, slope: float) -> float:
    """Two-state linear-sweep transition probability ``exp(-pi gap**2 / (2 |slope|))``.

    ``gap`` is the minimum energy splitting and ``slope`` the rate of change of the
    diabatic splitting.
    """
    if slope == 0.0:
        return 0.0
    return float(min(1.0, max(0.0, math.exp(-math.pi * gap**2 / (2.0 * abs(slope))))))


def _exact_gap_fn(hfun, lo_rank, hi_rank):
    def gap(t):
        w = np.linalg.eigvalsh(hfun(np.array([t]))[0])
        return w[hi_rank] - w[lo_rank]
    return gap


def _exact_coupling(hfun, dhfun, t, lo_rank, hi_rank):
    t = np.atleast_1d(np.asarray(t, dtype=float))
    w, v = np.linalg.eigh(hfun(t))
    if dhfun is None:
        dh = (hfun(t + FD_STEP) - hfun(t - FD_STEP)) / (2.0 * FD_STEP)
    else:
        dh = dhfun(t)
    vi, vj = v[:, :, lo_rank], v[:, :, hi_rank]
    num = np.abs(np.einsum("ka,kab,kb->k", vi.conj(), dh, vj))
    return num / np.abs(w[:, hi_rank] - w[:, lo_rank])


def _lineshape(hfun, dhfun, ta, width, lo_rank, hi_rank):
    u = ta + width * np.linspace(-50.0, 50.0, 4001)
    v = _exact_coupling(hfun, dhfun, u, lo_rank, hi_rank)
    k = int(np.argmax(v))
    half = 0.5 * v[k]
    left = np.flatnonzero(v[:k] < half)
    right = np.flatnonzero(v[k:] < half)
    if left.size == 0 or right.size == 0:
        return math.nan, math.nan, float(np.trapezoid(v, u))
    i, j = left[-1], k + right[0]
    t_left = np.interp(half, [v[i], v[i + 1]], [u[i], u[i + 1]])
    t_right = np.interp(half, [v[j], v[j - 1]], [u[j], u[j - 1]])
    fwhm = float(t_right - t_left)
    return 0.5 * fwhm, fwhm, float(np.trapezoid(v, u))


def _refine(df, k, i, j):
    t = df.times
    hfun = df.hamiltonian
    ranks = np.argsort(np.argsort(df.eigenvalues[k]))
    lo, hi = sorted((ranks[i], ranks[j]))
    if hfun is None or hi - lo != 1:
        # 3-point fit of gap**2 = g**2 + s**2 (t - ta)**2 on the stored samples
        sl = slice(k - 1, k + 2)
        g2 = (df.eigenvalues[sl, i] - df.eigenvalues[sl, j]) ** 2
        a, b, c = np.polyfit(t[sl] - t[k], g2, 2)
        if a <= 0:
            return t[k], math.sqrt(g2[1]), 0.0, float(df.couplings[sl, i, j].max()), None
        ta = t[k] - b / (2 * a)
        gap = math.sqrt(max(c - b * b / (4 * a), 0.0))
        return ta, gap, math.sqrt(a), float(df.couplings[sl, i, j].max()), None

    gap_fn = _exact_gap_fn(hfun, lo, hi)
    res = minimize_scalar(gap_fn, bounds=(t[k - 1], t[k + 1]), method="bounded",
                          options={"xatol": 1e-10 * max(1.0, abs(t[k]))})
    ta, gap = float(res.x), float(res.fun)
    h = SLOPE_PROBE
    curv = (gap_fn(ta + h) ** 2 + gap_fn(ta - h) ** 2 - 2.0 * gap * gap) / (2.0 * h * h)
    slope = math.sqrt(max(curv, 0.0))
    peak = float(_exact_coupling(hfun, df.derivative, ta, lo, hi)[0])
    return ta, gap, slope, peak, (lo, hi)


def find_avoided_crossings(df: DressedFrame, threshold: float = DEFAULT_GAP_THRESHOLD,
                           pairs=None) -> list:
    """Local minima of ``|lambda_i - lambda_j|`` below ``threshold``, refined.

    When the frame carries its Hamiltonian the minimum is located on the exact
    eigenvalues between the neighbouring samples; the slope is the diabatic
    ``|d/dt(lambda_i - lambda_j)|`` from ``gap**2 = g**2 + s**2 (t - ta)**2``.
    ``pairs`` restricts the search to 1-based label pairs.
    """
    n = df.n_levels
    if pairs is None:
        pairs = [(i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1)]
    reports = []
    for p, q in pairs:
        i, j = p - 1, q - 1
        gap = np.abs(df.eigenvalues[:, i] - df.eigenvalues[:, j])
        if gap.size < 3:
            continue
        mid = gap[1:-1]
        is_min = (mid <= gap[:-2]) & (mid < gap[2:]) & (mid < threshold) & (mid > DEGENERACY_GAP)
        for k in np.flatnonzero(is_min) + 1:
            ta, g, slope, peak, ranks = _refine(df, k, i, j)
            hwhm = fwhm = area = math.nan
            if ranks is not None and slope > 0 and g > 0:
                hwhm, fwhm, area = _lineshape(df.hamiltonian, df.derivative, ta, g / slope, *ranks)
            reports.append(CrossingReport((p, q), ta, g, slope, peak, hwhm, fwhm, area))
    reports.sort(key=lambda r: r.time)
    return reports
