"""Acceptance gate: ten criteria, each checked at its stated tolerance and time limit.

Every test records its outcome in ``conftest.ACCEPTANCE`` so that the session
ends with one PASS/FAIL line per criterion.
"""

import math
import time

import numpy as np
import pytest
from conftest import ACCEPTANCE

from chanrad import cli
from chanrad.channel import BeamParams, doppler_frequency, spin_polarization_reduce
from chanrad.oracle import (
    mehler_reconstruction,
    overlap_errors,
    residual_grid,
    schroedinger_residual,
    spinor_enumeration,
)
from chanrad.scan import ScanGrid, angular_map, evaluate_map, frequency_spectrum
from chanrad.specfun import N_MAX_CAP, OscillatorBasis

pytestmark = pytest.mark.acceptance


class Timer:
    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start


def record(k, ok, detail):
    ACCEPTANCE[k] = (bool(ok), detail)
    assert ok, detail


def test_criterion_01_forward_line(beam, model):
    with Timer() as t:
        omega = model.omega(beam)
        line = 2 * beam.gamma**2 * omega
        g = ScanGrid(np.array([0.0]), np.array([0.0]), (1,))
        c = np.zeros(model.n_levels(beam) + 1, dtype=complex)
        c[1] = 1.0
        (rec,) = angular_map(g, beam, model, c)
        direct = doppler_frequency(1, 0.0, beam, omega)
    # independent evaluation: gamma = E/m, Omega = (2/d_p) sqrt(2 V0/E)
    gamma = 1e9 / 510998.95
    omega_ref = 2 / (1.92 / 1973.269804) * math.sqrt(2 * 23 / 1e9)
    expected = 2 * gamma**2 * omega_ref
    rel = max(abs(rec.omega - expected), abs(direct - expected)) / expected
    ok = rel <= 1e-12 and 1e6 <= rec.omega < 1e7 and t.elapsed < 1
    record(1, ok, f"omega(theta=0, j=1) = {rec.omega:.10e} eV vs 2 gamma^2 Omega = "
                  f"{expected:.10e} eV, rel {rel:.1e} (tol 1e-12), {t.elapsed:.2f}s (<1s)")


def test_criterion_02_oracle_equivalence():
    q_values = np.linspace(-20, 20, 41)
    with Timer() as t:
        (a1, r1), (a2, r2), count = overlap_errors(60, q_values)
    ok = max(r1, r2) <= 1e-8 and count >= 500 and t.elapsed < 60
    record(2, ok, f"I1 rel {r1:.1e}, I2 rel {r2:.1e} (tol 1e-8) over {count} points "
                  f"(n <= 60, |q| <= 20), {t.elapsed:.1f}s (<60s)")


def test_criterion_03_spin_sum():
    rng = np.random.default_rng(20261016)
    worst = 0.0
    with Timer() as t:
        for _ in range(1000):
            a = complex(*rng.normal(size=2))
            d = rng.normal(size=3) + 1j * rng.normal(size=3)
            ref = spinor_enumeration(a, d)
            worst = max(worst, abs(float(spin_polarization_reduce(a, d)) - ref) / ref)
    ok = worst <= 1e-12 and t.elapsed < 1
    record(3, ok, f"max rel {worst:.1e} over 1000 inputs (tol 1e-12), {t.elapsed:.2f}s (<1s)")


def test_criterion_04_eigen_residual(beam, model, basis):
    with Timer() as t:
        worst = max(schroedinger_residual(basis, model, beam, n, residual_grid(basis, n))
                    for n in range(21))
    ok = worst <= 1e-5 and t.elapsed < 30
    record(4, ok, f"max residual {worst:.1e} for n <= 20 (tol 1e-5), {t.elapsed:.2f}s (<30s)")


def test_criterion_05_plane_wave_reconstruction(model):
    # plain partial sums at the largest truncation the basis allows
    scale = 1e9 * model.omega(BeamParams(1e9))
    basis = OscillatorBasis(scale, N_MAX_CAP)
    x = np.linspace(-3, 3, 241) / basis.root_scale
    worst = 0.0
    with Timer() as t:
        for p_red in (0.0, 1.0, 2.0, 3.0, 4.0):
            beam = BeamParams(1e9, incidence_angle=p_red * math.sqrt(scale) / 1e9)
            worst = max(worst, mehler_reconstruction(beam, basis, N_MAX_CAP, x))
    ok = worst <= 1e-6 and t.elapsed < 10
    record(5, ok, f"max |sum c_n phi_n - exp(i p_x x)| = {worst:.2e} on |xi| <= 3, p~ <= 4, "
                  f"N = {N_MAX_CAP} (tol 1e-6), {t.elapsed:.2f}s (<10s)")


def test_criterion_06_single_level_degeneracy(beam, model, coeffs):
    c = np.zeros_like(coeffs)
    c[10] = coeffs[10]
    with Timer() as t:
        grid = ScanGrid.default(beam, model)
        data = evaluate_map(grid, beam, model, c)
    identical = (np.array_equal(data.coherent, data.incoherent)
                 and np.any(data.coherent > 0))
    ok = identical and t.elapsed < 60
    record(6, ok, f"coherent == incoherent bitwise on {data.coherent.size} map entries: "
                  f"{identical}, {t.elapsed:.1f}s (<60s)")


def test_criterion_07_interference_visible(beam, model, coeffs):
    with Timer() as t:
        grid = ScanGrid.default(beam, model, j_max=1)
        data = evaluate_map(grid, beam, model, coeffs)
    coh = data.coherent[0].sum(axis=0)
    inc = data.incoherent[0].sum(axis=0)
    mask = inc > 0
    rel = float(np.max(np.abs(coh[mask] - inc[mask]) / inc[mask]))
    ok = rel > 0.01 and t.elapsed < 120
    record(7, ok, f"max |coherent - incoherent| / incoherent = {rel:.3f} on the j=1 map "
                  f"(needs > 0.01), {t.elapsed:.1f}s (<120s)")


def test_criterion_08_kinematics():
    worst = 0.0
    with Timer() as t:
        for gamma in (500.0, 1000.0, 1957.0, 1e4, 1e5):
            energy = gamma * 510998.95
            beam = BeamParams(energy, incidence_angle=0.5 * math.sqrt(46 / energy))
            theta = np.linspace(0, 5 / gamma, 501)
            exact = doppler_frequency(1, theta, beam, 1.0, "exact")
            small = doppler_frequency(1, theta, beam, 1.0, "small_angle")
            worst = max(worst, float(np.max(np.abs(exact - small) / small)) * gamma**2)
    ok = worst <= 5 and t.elapsed < 1
    record(8, ok, f"max rel difference x gamma^2 = {worst:.3f} (bound 5), {t.elapsed:.2f}s (<1s)")


def test_criterion_09_map_spectrum_consistency(beam, model, coeffs):
    with Timer() as t:
        grid = ScanGrid.default(beam, model)
        recs = angular_map(grid, beam, model, coeffs, interference="both")
        spec = frequency_spectrum(grid, beam, model, coeffs, "both")
    T, P = grid.theta.size, grid.phi.size
    worst = 0.0
    for which, key in (("coherent", "intensity_coherent"), ("incoherent", "intensity_incoherent")):
        vals = np.array([getattr(r, key) for r in recs]).reshape(len(grid.harmonics), T, P)
        over_phi = np.trapezoid(vals, grid.phi, axis=-1)
        from_map = np.trapezoid(over_phi * np.sin(grid.theta), grid.theta, axis=-1)
        worst = max(worst, float(np.max(np.abs(spec.integral(which) - from_map) / from_map)))
    ok = worst <= 0.005 and t.elapsed < 120
    record(9, ok, f"max rel difference per harmonic {worst:.1e} (tol 5e-3), {t.elapsed:.1f}s (<120s)")


def test_criterion_10_determinism(tmp_path):
    outs = []
    with Timer() as t:
        for workers in (1, 4):
            out = tmp_path / f"map_{workers}.csv"
            status = cli.main(["angular", "--energy-gev", "1", "--workers", str(workers),
                               "--out", str(out)])
            assert status == 0
            outs.append(out.read_bytes())
    same = outs[0] == outs[1]
    ok = same and t.elapsed < 120
    record(10, ok, f"byte-identical outputs with 1 and 4 workers: {same} "
                   f"({len(outs[0])} bytes), {t.elapsed:.1f}s (<120s)")
