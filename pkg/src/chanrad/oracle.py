"""Brute-force reference computations.

Reference values never come from the Laguerre closed form or the reduced
spin formula: overlaps come from Gauss-Hermite quadrature of the raw integrands, spin sums
from explicit Pauli matrices, the eigen-system from finite differences of the
eigenfunctions. These back both the test-suite and ``chanrad verify``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .channel import (
    BeamParams,
    ChannelModel,
    doppler_frequency,
    entry_coefficients,
    spin_polarization_reduce,
)
from .specfun import (
    GH_MAX_ORDER,
    OscillatorBasis,
    build_gauss_hermite,
    eigenfunctions,
    derivative_matrix,
    hermite_functions,
    overlap_matrix,
)

PAULI = np.array(
    [
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)


@dataclass(frozen=True)
class OracleReport:
    check: str
    max_abs_error: float
    max_rel_error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(self.max_rel_error <= self.tolerance)

    def as_row(self) -> dict:
        return {
            "check": self.check,
            "max_abs_error": self.max_abs_error,
            "max_rel_error": self.max_rel_error,
            "tolerance": self.tolerance,
            "passed": self.passed,
        }


def required_order(n: int, q: float) -> int:
    """Smallest trusted Gauss-Hermite order for levels up to n at reduced momentum q."""
    return min(GH_MAX_ORDER, max(200, 4 * n + 2 * math.ceil(q * q) + 50))


@lru_cache(maxsize=16)
def _rule(order: int):
    return build_gauss_hermite(order)


def quadrature_tables(n_top: int, q: float, order: int):
    """Matrices of exp(-i q xi) and exp(-i q xi) d/dxi between psi_0..psi_{n_top}.

    Returns (M, D) with M[m, n] = int psi_m psi_n e^{-iq xi} and
    D[m, n] = int psi_m psi_n' e^{-iq xi}, the derivative taken pointwise as
    psi_n' = sqrt(2n) psi_{n-1} - xi psi_n.
    """
    rule = _rule(order)
    x = rule.nodes
    psi = hermite_functions(n_top, x)
    dpsi = -x * psi
    dpsi[1:] += np.sqrt(2.0 * np.arange(1, n_top + 1))[:, None] * psi[:-1]
    wave = rule.scaled_weights * np.exp(-1j * q * x)
    M = (psi * wave) @ psi.T
    D = (psi * wave) @ dpsi.T
    return M, D


def quadrature_I1_I2(basis: OscillatorBasis, n: int, j: int, k_x: float, order=None,
                     check_order: bool = True):
    """Direct quadrature of the two overlap integrals for n -> n - j."""
    basis.check_level(n)
    basis.check_level(n - j, "n-j")
    q = float(basis.reduced_momentum(k_x))
    need = required_order(max(n, n - j) + 1, q)
    if order is None:
        order = need
    elif check_order and order < need:
        raise ValueError(f"quadrature order {order} too low; need at least {need}")
    M, D = quadrature_tables(max(n, n - j) + 1, q, order)
    return complex(M[n - j, n]), complex(basis.root_scale * D[n - j, n])


def spinor_enumeration(a: complex, d) -> float:
    """Half the sum over initial and final spin states of |<s'|a + i sigma.d|s>|^2."""
    d = np.asarray(d, dtype=complex)
    mat = a * np.eye(2) + 1j * np.einsum("i,ijk->jk", d, PAULI)
    total = 0.0
    basis = np.eye(2)
    for s in basis:
        for s_out in basis:
            amp = s_out.conj() @ mat @ s
            total += abs(amp) ** 2
    return 0.5 * total


def harmonic_potential(x, model: ChannelModel):
    """V(x) = 4 V0 x^2 / d_p^2, i.e. V0 at the planes x = +-d_p/2.

    Identical to (E Omega^2 / 2) x^2 with Omega from the well parameters.
    """
    return 4.0 * model.depth * np.asarray(x) ** 2 / model.spacing**2


def residual_grid(basis: OscillatorBasis, n: int, spacing: float = 1e-3) -> np.ndarray:
    """x grid (1/eV) covering |xi| <= sqrt(2n+1) + 4 at the given xi spacing."""
    half = math.sqrt(2 * n + 1) + 4
    steps = int(math.ceil(half / spacing))
    return np.arange(-steps, steps + 1) * spacing / basis.root_scale


def schroedinger_residual(basis: OscillatorBasis, model: ChannelModel, beam: BeamParams,
                          n: int, grid, level_energy=None) -> float:
    """Max of |-(1/2E) phi'' + V phi - eps_n phi| / (Omega max|phi|) on the grid.

    phi'' comes from a 5-point central stencil. ``level_energy`` overrides
    eps_n = Omega (n + 1/2), which is how a wrong eigenvalue is exercised.
    """
    grid = np.asarray(grid, dtype=float)
    h = np.diff(grid)
    if not np.allclose(h, h[0], rtol=1e-9, atol=0):
        raise ValueError("grid must be uniform")
    h = h[0]
    if h * basis.root_scale > 0.01:
        raise ValueError(f"grid spacing {h * basis.root_scale:.3g} in xi exceeds 0.01")
    omega = model.omega(beam)
    eps = omega * (n + 0.5) if level_energy is None else level_energy
    phi = eigenfunctions(OscillatorBasis(basis.scale, n), grid)[n]
    d2 = (-phi[4:] + 16 * phi[3:-1] - 30 * phi[2:-2] + 16 * phi[1:-3] - phi[:-4]) / (12 * h * h)
    inner = phi[2:-2]
    lhs = -d2 / (2 * beam.energy) + harmonic_potential(grid[2:-2], model) * inner
    return float(np.max(np.abs(lhs - eps * inner)) / (omega * np.max(np.abs(phi))))


def mehler_reconstruction(beam: BeamParams, basis: OscillatorBasis, N: int, x) -> float:
    """Max |sum_{n<=N} c_n phi_n(x) - exp(i p_x x)| over the grid (plain partial sums)."""
    x = np.asarray(x, dtype=float)
    sub = OscillatorBasis(basis.scale, N, cap=max(basis.cap, N))
    c = entry_coefficients(beam, sub)
    phi = eigenfunctions(sub, x)
    series = np.tensordot(c, phi, axes=1)
    return float(np.max(np.abs(series - np.exp(1j * beam.p_x * x))))


def mehler_abel(beam: BeamParams, basis: OscillatorBasis, N: int, x, r: float = 0.9) -> float:
    """Abel-damped reconstruction sum r^n c_n phi_n against the Mehler kernel.

    With rho = i r, sum_n rho^n psi_n(a) psi_n(b) has the closed form
    (pi (1 - rho^2))^{-1/2} exp(-((1 + rho^2)(a^2 + b^2) - 4 rho a b) / (2 (1 - rho^2))),
    and the i^n phases of the entry coefficients turn r^n c_n into exactly that
    kernel times sqrt(2 pi). The damped series converges geometrically, so this
    pins the normalization and phase of c_n to machine precision.
    """
    x = np.asarray(x, dtype=float)
    sub = OscillatorBasis(basis.scale, N, cap=max(basis.cap, N))
    c = entry_coefficients(beam, sub)
    phi = eigenfunctions(sub, x)
    series = np.tensordot(c * r ** np.arange(N + 1), phi, axes=1)
    a = beam.p_x / basis.root_scale
    b = basis.xi(x)
    rho = 1j * r
    kernel = (np.pi * (1 - rho**2)) ** -0.5 * np.exp(
        -((1 + rho**2) * (a * a + b * b) - 4 * rho * a * b) / (2 * (1 - rho**2))
    )
    return float(np.max(np.abs(series - math.sqrt(2 * math.pi) * kernel)))


def entry_projection(beam: BeamParams, basis: OscillatorBasis, order: int = 400):
    """Quadrature of int phi_n(x) exp(i p_x x) dx for n = 0..basis.n_max.

    Returns (coefficients from the closed form, coefficients from quadrature).
    """
    q = beam.p_x / basis.root_scale
    rule = _rule(order)
    psi = hermite_functions(basis.n_max, rule.nodes)
    proj = (psi * np.exp(1j * q * rule.nodes)) @ rule.scaled_weights
    return entry_coefficients(beam, basis), basis.scale**-0.25 * proj


def orthonormality_error(n_top: int = 40, order: int = 200) -> float:
    rule = _rule(order)
    psi = hermite_functions(n_top, rule.nodes)
    gram = (psi * rule.scaled_weights) @ psi.T
    return float(np.max(np.abs(gram - np.eye(n_top + 1))))


def _scaled_error(test, ref, floor):
    err = np.abs(np.asarray(test) - np.asarray(ref))
    rel = err / np.maximum(np.abs(ref), floor)
    return np.array([err.max(), rel.max()])


def overlap_errors(n_top: int, q_values, floor: float = 1e-6):
    """Closed-form overlaps against quadrature for all level pairs up to n_top.

    Errors are relative to max(|reference|, floor * bound), where the bound is
    1 for I1 (unit-norm states) and sqrt(n + 1/2) for I2 in units of
    sqrt(E Omega). Returns ((abs, rel) for I1, (abs, rel) for I2, points).
    """
    worst1 = np.zeros(2)
    worst2 = np.zeros(2)
    count = 0
    bound = np.sqrt(np.arange(n_top + 1) + 0.5)[None, :]
    for q in np.atleast_1d(q_values):
        q = float(q)
        M, D = quadrature_tables(n_top, q, required_order(n_top + 1, q))
        M_cf = overlap_matrix(q, n_top)
        D_cf = derivative_matrix(q, n_top)
        worst1 = np.maximum(worst1, _scaled_error(M_cf, M, floor))
        worst2 = np.maximum(worst2, _scaled_error(D_cf, D, floor * bound))
        count += 2 * M.size
    return tuple(worst1), tuple(worst2), count


def run_suite(beam: BeamParams, model: ChannelModel, seed: int = 0, quick: bool = False):
    """Every oracle check at its tolerance, as a list of :class:`OracleReport`."""
    reports = []
    omega = model.omega(beam)
    basis = model.basis(beam)
    top = min(basis.n_max, 60)

    reports.append(OracleReport("orthonormality_n40", orthonormality_error(40), orthonormality_error(40), 1e-10))

    q_values = [-20.0, -3.7, -0.5, 0.0, 0.04, 1.0, 5.5, 20.0]
    if quick:
        q_values = [-3.7, 0.04, 1.0]
    (a1, r1), (a2, r2), _ = overlap_errors(top, q_values)
    reports.append(OracleReport("overlap_I1_vs_quadrature", a1, r1, 1e-8))
    reports.append(OracleReport("overlap_I2_vs_quadrature", a2, r2, 1e-8))

    rng = np.random.default_rng(seed)
    worst_abs = worst_rel = 0.0
    for _ in range(200 if quick else 1000):
        a = complex(*rng.normal(size=2))
        d = rng.normal(size=3) + 1j * rng.normal(size=3)
        ref = spinor_enumeration(a, d)
        val = float(spin_polarization_reduce(a, d))
        worst_abs = max(worst_abs, abs(val - ref))
        worst_rel = max(worst_rel, abs(val - ref) / ref)
    reports.append(OracleReport("spin_sum_vs_enumeration", worst_abs, worst_rel, 1e-12))

    res = 0.0
    for n in range(min(20, basis.n_max) + 1):
        res = max(res, schroedinger_residual(basis, model, beam, n, residual_grid(basis, n)))
    reports.append(OracleReport("schroedinger_residual_n20", res, res, 1e-5))

    c_closed, c_quad = entry_projection(beam, OscillatorBasis(basis.scale, basis.n_max))
    err = float(np.max(np.abs(c_closed - c_quad)))
    reports.append(OracleReport("entry_coefficients_vs_projection", err,
                                err / float(np.max(np.abs(c_quad))), 1e-10))

    xg = np.linspace(-3, 3, 241) / basis.root_scale
    dev = mehler_abel(beam, basis, 400, xg, r=0.9)
    reports.append(OracleReport("entry_coefficients_mehler_abel", dev, dev, 1e-8))

    theta = np.linspace(0, 5 / beam.gamma, 201)
    exact = doppler_frequency(1, theta, beam, omega, "exact")
    small = doppler_frequency(1, theta, beam, omega, "small_angle")
    rel = float(np.max(np.abs(exact - small) / small))
    reports.append(OracleReport("doppler_exact_vs_small_angle", float(np.max(np.abs(exact - small))),
                                rel, 5.0 / beam.gamma**2))
    return reports
