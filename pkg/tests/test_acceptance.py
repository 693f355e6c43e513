"""End-to-end acceptance checks; the terminal summary prints one PASS/FAIL line per criterion."""
import math
import time

import numpy as np
import pytest

from conftest import on_line_mask
from cstirap.dressed import dark_label, dressed_frame, find_avoided_crossings, frame_from_hamiltonian, rotation_matrix
from cstirap.hamiltonian import (
    Scheme,
    analytic_dressed_energies_3lvl,
    f_stirap,
    hamiltonian_at,
    hamiltonian_series,
    quartic_coefficients,
    quartic_eval,
    stirap,
)
from cstirap.presets import cf4, single_stokes
from cstirap.propagator import final_observables, propagate
from cstirap.sweep import AxisSpec, apply_override, scan1d, sweep2d

crit = pytest.mark.criterion


def final(s):
    return final_observables(propagate(s))


@crit("1")
def test_resonant_stirap_transfer():
    assert final(stirap())["rho33"] >= 0.99


@crit("2")
def test_unchirped_detuning_falloff():
    scan = scan1d(stirap(), AxisSpec.linspace("tau_delta", -6, 6, 25), observables=["rho33"])
    values, axis = scan["rho33"], scan["tau_delta"]
    at0 = values[axis == 0.0][0]
    at5 = values[axis == 5.0][0]
    assert axis[np.argmax(values)] == 0.0
    assert at5 < 0.5 * at0


@crit("3")
@pytest.mark.parametrize("sign", [1, -1])
def test_chirp_compensates_two_photon_detuning(sign):
    s = stirap("CSTIRAP3", delta=sign * 0.14, alpha=sign * 1e-3)
    tr = propagate(s)
    df = dressed_frame(s, tr)
    assert final_observables(tr)["rho33"] >= 0.99
    assert df.populations[:, dark_label(df)].min() >= 0.98


@crit("4")
def test_dark_line_ridge_on_full_grid(fig4_grid):
    res = fig4_grid[0]
    on = on_line_mask(res, 1 / 140, max_abs_x=0.15)
    xx, yy = np.meshgrid(res.x.values, res.y.values)
    off = np.abs(yy - xx / 140) > 5e-4
    assert on.sum() > 0
    assert res.grid[on].min() >= 0.95
    assert res.grid[off].mean() <= 0.5


@crit("5")
@pytest.mark.parametrize("alpha,high,low", [(1e-3, "rho44", "rho33"), (-1e-3, "rho33", "rho44")])
def test_four_level_chirp_sign_selectivity(alpha, high, low):
    obs = final(stirap("CSTIRAP4", delta=0.14, alpha=alpha))
    assert obs[high] >= 0.9
    assert obs[low] <= 0.05


@crit("6")
def test_avoided_crossing_metrology():
    s = stirap("CSTIRAP4", delta=0.14, alpha=-1e-3)
    df = dressed_frame(s, propagate(s))
    reports = find_avoided_crossings(df, pairs=[(3, 4)])
    assert reports, "no (3, 4) avoided crossing found"
    cr = min(reports, key=lambda r: abs(r.time - 198.1))
    assert abs(cr.time - 198.1) <= 5.0
    assert cr.gap == pytest.approx(8e-4, rel=0.2)
    assert cr.gap_slope == pytest.approx(3.48e-4, rel=0.2)


@crit("7")
def test_delayed_chirp_reaches_resonant_state_for_all_chirps():
    base = stirap("CSTIRAP4", delta=0.14, t_d=140.0)
    scan = scan1d(base, AxisSpec.linspace("chirp", -2e-3, 2e-3, 81), observables=["rho33"])
    assert scan["rho33"].min() >= 0.95


@crit("8")
def test_fractional_stirap_maximum_coherence():
    obs = final(f_stirap(mixing_angle=math.pi / 4))
    assert 0.48 <= obs["abs_rho13"] <= 0.50
    assert obs["rho22"] <= 0.01


@crit("8")
def test_fractional_stirap_coherence_falloff():
    base = f_stirap()
    at0 = final(apply_override(base, "tau_delta", 0.0))["abs_rho13"]
    at5 = final(apply_override(base, "tau_delta", 5.0))["abs_rho13"]
    assert at5 <= 0.55 * at0


@crit("9")
def test_single_stokes_coherence():
    assert final(single_stokes())["abs_rho13"] >= 0.45


@crit("9")
def test_single_stokes_robust_region(fig14_grid):
    from scipy import ndimage

    res = fig14_grid[0]
    labels, n = ndimage.label(res.grid >= 0.45)
    reach = [res.x.values[np.nonzero(labels == k)[1]] for k in range(1, n + 1)]
    assert any(d.min() == res.x.values[0] and d.max() >= 30.0 for d in reach)


@crit("10")
def test_chirped_fractional_on_line_coherence(fig16_grid):
    res = fig16_grid[0]
    on = on_line_mask(res, 1 / 140, max_abs_x=0.15)
    assert on.sum() > 0
    assert res.grid[on].min() >= 0.45


@crit("11")
@pytest.mark.parametrize("td1,td2,coherence,dark", [
    (0.0, -140.0, "abs_rho14", "rho33"),
    (140.0, 0.0, "abs_rho13", "rho44"),
])
def test_delay_selected_coherence(td1, td2, coherence, dark):
    s = cf4(td1, td2)
    assert s.pump.chirp == pytest.approx(0.14 / 140)
    tr = propagate(s)
    obs = final_observables(tr)
    assert obs[coherence] >= 0.45
    assert obs[dark] <= 0.02
    df = dressed_frame(s, tr)
    assert np.max(df.populations, axis=1).min() >= 0.95


# --- criterion 12: oracle and property suite --------------------------------------------

@crit("12")
def test_hermiticity():
    rng = np.random.default_rng(12)
    worst = 0.0
    for scheme in Scheme:
        for _ in range(200):
            if scheme.fractional:
                s = f_stirap(scheme, mixing_angle=rng.uniform(0, math.pi / 2), phase=rng.uniform(-3, 3),
                             delta=rng.uniform(-0.2, 0.2), alpha=rng.uniform(-2e-3, 2e-3) if scheme.chirped else 0.0)
            elif scheme is Scheme.FSTIRAP3_SINGLE_STOKES:
                s = single_stokes(t_p=rng.uniform(100, 200))
            else:
                s = stirap(scheme, delta=rng.uniform(-0.2, 0.2), alpha=rng.uniform(-2e-3, 2e-3) if scheme.chirped else 0.0)
            H = hamiltonian_at(s, rng.uniform(-500, 500))
            worst = max(worst, np.abs(H - H.conj().T).max())
    assert worst <= 1e-14


@crit("12")
def test_norm_conservation():
    for s in (stirap(), stirap("CSTIRAP4", delta=0.14, alpha=-1e-3), f_stirap(), single_stokes(), cf4(0.0, -140.0)):
        assert np.max(np.abs(propagate(s).norm - 1.0)) <= 1e-6


@crit("12")
def test_analytic_three_level_energies():
    rng = np.random.default_rng(9)
    for p, s, d in rng.uniform([0, 0, -2], [3, 3, 2], size=(500, 3)):
        H = np.array([[0, p / 2, 0], [p / 2, d, s / 2], [0, s / 2, 0]])
        np.testing.assert_allclose(np.sort(analytic_dressed_energies_3lvl(p, s, d)),
                                   np.linalg.eigvalsh(H), atol=1e-12)


@crit("12")
def test_quartic_residual():
    for alpha in (1e-3, -1e-3):
        s = stirap("CSTIRAP4", delta=0.14, alpha=alpha)
        for t in np.linspace(-400, 400, 41):
            ev = np.linalg.eigvalsh(hamiltonian_at(s, t))
            assert np.abs(quartic_eval(s, t, ev)[0]).max() / np.abs(quartic_coefficients(s, t)).max() <= 1e-8


@crit("12")
def test_couplings_against_vector_differences():
    s = stirap("CSTIRAP3", delta=0.14, alpha=1e-3)
    probes = np.linspace(-300, 300, 601)
    h = 1e-4
    times = np.sort(np.concatenate([probes - h, probes, probes + h]))
    df = frame_from_hamiltonian(lambda t: hamiltonian_series(s, t), times,
                                dhfun=lambda t: hamiltonian_series(s, t, derivative=True))
    c = np.searchsorted(times, probes)
    v = df.eigenvectors
    fd = np.abs(np.einsum("kai,kaj->kij", v[c].conj(), (v[c + 1] - v[c - 1]) / (2 * h)))
    off = ~np.eye(3, dtype=bool)[None].repeat(c.size, axis=0)
    assert np.abs(fd - df.couplings[c])[off].max() <= 1e-4 * df.couplings[c][off].max()


@crit("12")
def test_rotation_unitarity():
    rng = np.random.default_rng(3)
    for theta, phi in rng.uniform(-7, 7, size=(1000, 2)):
        T = rotation_matrix(theta, phi)
        assert np.abs(T.conj().T @ T - np.eye(3)).max() <= 1e-12


@crit("12")
def test_fractional_reduction_to_stirap():
    a = propagate(f_stirap(mixing_angle=math.pi / 2))
    b = propagate(stirap())
    assert np.abs(a.amplitudes - b.amplitudes).max() <= 1e-8


@crit("12")
@pytest.mark.parametrize("delta,alpha", [(0.14, 1e-3), (0.05, -1.5e-3), (0.2, 2e-3)])
def test_mirror_symmetry(delta, alpha):
    a = final(stirap("CSTIRAP3", delta=delta, alpha=alpha))
    b = final(stirap("CSTIRAP3", delta=-delta, alpha=-alpha))
    for key in ("rho11", "rho22", "rho33"):
        assert a[key] == pytest.approx(b[key], abs=1e-6)


@crit("12")
def test_worker_count_determinism():
    x = AxisSpec.linspace("delta", -0.2, 0.2, 4)
    y = AxisSpec.linspace("chirp", -2e-3, 2e-3, 3)
    base = f_stirap("CFSTIRAP3")
    assert (sweep2d(base, x, y, "abs_rho13", workers=1).grid.tobytes()
            == sweep2d(base, x, y, "abs_rho13", workers=3).grid.tobytes())


# --- desk scale -------------------------------------------------------------------------

@crit("desk-scale")
@pytest.mark.parametrize("s", [
    stirap(), stirap("CSTIRAP4", delta=0.14, alpha=-1e-3), stirap("CSTIRAP4", delta=0.14, alpha=-1e-3, t_d=140.0),
    f_stirap(), single_stokes(), f_stirap("CFSTIRAP3", delta=0.14, alpha=1e-3), cf4(0.0, -140.0), cf4(140.0, 0.0),
], ids=lambda s: s.scheme.value)
def test_single_trajectory_budget(s):
    propagate(s)  # compile outside the timed call
    start = time.perf_counter()
    propagate(s)
    assert time.perf_counter() - start <= 2.0


@crit("desk-scale")
def test_full_grid_budget(fig4_grid, fig16_grid, fig14_grid):
    for _, seconds in (fig4_grid, fig16_grid, fig14_grid):
        assert seconds <= 90.0
