"""Positron channeling radiation in a harmonic planar channel.

Beam and channel parameters, Doppler kinematics, entry coefficients of the
incident plane wave, per-transition spinor amplitudes and the per-harmonic
spectral-angular intensity, with and without interference between levels.

Geometry: the channeling plane is yz, x is normal to it, the beam runs
along z. The photon direction is (sin t sin p, sin t cos p, cos t), so the
azimuth p = 0 lies inside the crystal plane and p = pi/2 maximizes k_x.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np

from .specfun import (
    OscillatorBasis,
    derivative_I2,
    hermite_functions,
    overlap_I1,
    overlap_table,
)

ELECTRON_MASS_EV = 510998.95
HBARC_EV_ANGSTROM = 1973.269804
ANGSTROM = 1.0 / HBARC_EV_ANGSTROM  # in 1/eV
ALPHA = 1.0 / 137.0  # e^2 as used in the intensity prefactor

Kinematics = Literal["small_angle", "exact"]
Coupling = Literal["cross", "dot"]
Interference = Literal["on", "off", "both"]

_I_POWERS = np.array([1.0, 1.0j, -1.0, -1.0j])


@dataclass(frozen=True)
class BeamParams:
    """Incident positron.

    Parameters
    ----------
    energy : float
        Total energy E in eV.
    mass : float
        Rest mass in eV.
    incidence_angle : float
        Angle to the channeling plane in radians; p_x = E * angle.
    """

    energy: float
    mass: float = ELECTRON_MASS_EV
    incidence_angle: float = 0.0

    def __post_init__(self):
        if not all(map(math.isfinite, (self.energy, self.mass, self.incidence_angle))):
            raise ValueError("beam parameters must be finite")
        if self.mass <= 0:
            raise ValueError(f"mass must be positive, got {self.mass}")
        if self.energy <= self.mass:
            raise ValueError(f"energy {self.energy} eV must exceed the mass {self.mass} eV")
        if self.energy**2 - self.mass**2 - self.p_x**2 <= 0:
            raise ValueError("incidence angle leaves no longitudinal momentum")

    @property
    def gamma(self) -> float:
        return self.energy / self.mass

    @property
    def p_x(self) -> float:
        return self.energy * self.incidence_angle

    @property
    def p_parallel(self) -> float:
        return math.sqrt(self.energy**2 - self.mass**2 - self.p_x**2)

    @property
    def e_parallel(self) -> float:
        return math.sqrt(self.energy**2 - self.p_x**2)

    @property
    def beta_parallel(self) -> float:
        return self.p_parallel / self.e_parallel

    @property
    def one_minus_beta(self) -> float:
        # 1 - p/E_par without cancellation
        e = self.e_parallel
        return self.mass**2 / (e * (e + self.p_parallel))

    @property
    def spinor_norm(self) -> float:
        return math.sqrt((self.energy + self.mass) / (2 * self.energy))


@dataclass(frozen=True)
class ChannelModel:
    """Harmonic planar channel.

    ``spacing`` is the interplanar distance in 1/eV; use :meth:`from_angstrom`
    for the usual units. ``level_cap`` optionally limits the number of
    retained bound levels below the physical maximum.
    """

    depth: float
    spacing: float
    level_cap: Optional[int] = None

    def __post_init__(self):
        if not (math.isfinite(self.depth) and self.depth > 0):
            raise ValueError(f"well depth must be positive, got {self.depth}")
        if not (math.isfinite(self.spacing) and self.spacing > 0):
            raise ValueError(f"plane spacing must be positive, got {self.spacing}")
        if self.level_cap is not None and self.level_cap < 0:
            raise ValueError(f"level_cap must be non-negative, got {self.level_cap}")

    @classmethod
    def from_angstrom(cls, depth_ev: float, spacing_angstrom: float, level_cap=None):
        return cls(depth_ev, spacing_angstrom * ANGSTROM, level_cap)

    def omega(self, beam: BeamParams) -> float:
        return oscillator_frequency(self, beam)

    def n_max_physical(self, beam: BeamParams) -> int:
        return int(math.floor(self.depth / self.omega(beam) - 0.5))

    def n_levels(self, beam: BeamParams) -> int:
        """Highest retained level index."""
        n = self.n_max_physical(beam)
        if n < 0:
            raise ValueError("the well holds no bound level at this energy")
        return n if self.level_cap is None else min(n, self.level_cap)

    def level_energy(self, n, beam: BeamParams):
        return self.omega(beam) * (np.asarray(n) + 0.5)

    def critical_angle(self, beam: BeamParams) -> float:
        return math.sqrt(2 * self.depth / beam.energy)

    def basis(self, beam: BeamParams, extra: int = 0) -> OscillatorBasis:
        return OscillatorBasis(beam.energy * self.omega(beam), self.n_levels(beam) + extra)


def oscillator_frequency(model: ChannelModel, beam: BeamParams) -> float:
    """Level spacing Omega = (2/d_p) sqrt(2 V0 / E), in eV."""
    return 2.0 / model.spacing * math.sqrt(2.0 * model.depth / beam.energy)


def check_incidence(beam: BeamParams, model: ChannelModel) -> bool:
    """Warn when the incidence angle exceeds the critical angle."""
    theta_p = model.critical_angle(beam)
    ok = abs(beam.incidence_angle) <= theta_p
    if not ok:
        warnings.warn(
            f"incidence angle {beam.incidence_angle:.3e} rad exceeds the critical "
            f"angle {theta_p:.3e} rad; the channeling model does not apply",
            stacklevel=2,
        )
    return ok


@dataclass(frozen=True)
class EmissionDirection:
    theta: float
    phi: float

    @property
    def k_hat(self) -> np.ndarray:
        return unit_vector(self.theta, self.phi)

    @property
    def polarizations(self) -> np.ndarray:
        """Rows are eps_1 (normal to the emission plane) and eps_2 (in it)."""
        return polarization_vectors(self.theta, self.phi)


def unit_vector(theta, phi) -> np.ndarray:
    theta, phi = np.broadcast_arrays(np.asarray(theta, float), np.asarray(phi, float))
    st = np.sin(theta)
    return np.stack([st * np.sin(phi), st * np.cos(phi), np.cos(theta)])


def polarization_vectors(theta, phi) -> np.ndarray:
    """Shape (2, 3, ...). eps_1 = k x z / |k x z|, eps_2 = eps_1 x k.

    eps_1 is written in closed form so the forward direction needs no limit.
    """
    theta, phi = np.broadcast_arrays(np.asarray(theta, float), np.asarray(phi, float))
    sp, cp = np.sin(phi), np.cos(phi)
    st, ct = np.sin(theta), np.cos(theta)
    eps1 = np.stack([cp, -sp, np.zeros_like(cp)])
    eps2 = np.stack([-sp * ct, -cp * ct, st])
    return np.stack([eps1, eps2])


def entry_coefficients(beam: BeamParams, basis: OscillatorBasis, n_levels=None) -> np.ndarray:
    """Overlaps c_n of the incident plane wave exp(i p_x x) with each level.

    c_n = i^n sqrt(2 pi) (E Omega)^{-1/4} psi_n(p_x / sqrt(E Omega)), which is
    the closed form i^n / sqrt(2^{n-1} n!) (pi/E Omega)^{1/4}
    exp(-p~^2/2) H_n(p~) evaluated through normalized Hermite functions.
    """
    n_levels = basis.n_max if n_levels is None else n_levels
    basis.check_level(n_levels, "n_levels")
    p_red = beam.p_x / basis.root_scale
    psi = hermite_functions(n_levels, p_red)
    phase = _I_POWERS[np.arange(n_levels + 1) % 4]
    return phase * math.sqrt(2 * math.pi) * basis.scale**-0.25 * psi


def doppler_frequency(j, theta, beam: BeamParams, omega: float,
                      mode: Kinematics = "small_angle"):
    """Photon energy of harmonic j emitted at polar angle theta.

    ``exact`` is j Omega / (1 - beta_par cos theta); ``small_angle`` is
    2 gamma^2 j Omega / (1 + theta^2 gamma^2).
    """
    if np.any(np.asarray(j) < 1):
        raise ValueError(f"harmonic index must be >= 1, got {j}")
    theta = np.asarray(theta, dtype=float)
    if np.any(theta < 0) or np.any(theta > np.pi / 2):
        raise ValueError("theta must lie in [0, pi/2]")
    if mode == "small_angle":
        g2 = beam.gamma**2
        out = 2 * g2 * j * omega / (1 + theta**2 * g2)
    elif mode == "exact":
        denom = beam.one_minus_beta + beam.beta_parallel * 2 * np.sin(theta / 2) ** 2
        out = j * omega / denom
    else:
        raise ValueError(f"unknown kinematics mode {mode!r}")
    return float(out) if np.ndim(out) == 0 else out


def inverse_doppler(j, omega_photon, beam: BeamParams, omega: float,
                    mode: Kinematics = "small_angle"):
    """Polar angle at which harmonic j appears with photon energy ``omega_photon``."""
    w = np.asarray(omega_photon, dtype=float)
    if mode == "small_angle":
        ratio = 2 * beam.gamma**2 * j * omega / w - 1
        return np.sqrt(np.clip(ratio, 0, None)) / beam.gamma
    # 2 sin^2(t/2) = (j Omega / w - (1 - beta)) / beta
    s = (j * omega / w - beam.one_minus_beta) / beam.beta_parallel
    return 2 * np.arcsin(np.sqrt(np.clip(s / 2, 0, 1)))


@dataclass(frozen=True)
class TransitionAmplitude:
    """Spinor amplitude pieces for the transition n -> n - j.

    ``a[l]`` is eps_l . A and ``d[l]`` is eps_l x B (or B itself for the
    ``dot`` reading of the spin term), both already multiplied by N N'.
    """

    n: int
    j: int
    omega: float
    A: np.ndarray
    B: np.ndarray
    a: np.ndarray
    d: np.ndarray


def _assemble(I1, I2, k, omega, beam: BeamParams, pols, coupling: Coupling = "cross"):
    """Build (A, B, a, d) from the overlap integrals.

    I1, I2 broadcast against each other; k is (3, ...) photon momentum and
    pols is (2, 3, ...). Vector components run along axis 0 of A and B.
    """
    E, m = beam.energy, beam.mass
    if np.any(np.asarray(omega) >= E):
        raise ValueError("photon energy must be below the positron energy")
    e_out = E - omega
    s1 = 1.0 / (E + m)
    s2 = 1.0 / (e_out + m)
    p = beam.p_parallel
    kx, ky, kz = k
    norm = beam.spinor_norm * np.sqrt((e_out + m) / (2 * e_out))

    A = np.stack(np.broadcast_arrays(
        -1j * I2 * (s1 + s2),
        0j * I1,
        I1 * p * (s1 + s2),
    ))
    # s2 - s1 = omega s1 s2; p s1 - (p - kz) s2 = kz s2 - p omega s1 s2
    B = np.stack(np.broadcast_arrays(
        1j * I2 * omega * s1 * s2 + kx * s2 * I1,
        I1 * ky * s2,
        I1 * (kz * s2 - p * omega * s1 * s2),
    ))
    pe = _expand(pols, A)
    a = norm * (pe * A[None]).sum(axis=1)
    if coupling == "cross":
        ex, ey, ez = pe[:, 0], pe[:, 1], pe[:, 2]
        bx, by, bz = B
        d = norm * np.stack([ey * bz - ez * by, ez * bx - ex * bz, ex * by - ey * bx], axis=1)
    elif coupling == "dot":
        d = norm * np.broadcast_to(B[None], (2,) + B.shape)
    else:
        raise ValueError(f"unknown spin coupling {coupling!r}")
    return A, B, a, d


def _expand(pols, A):
    # (2, 3, *dir) -> (2, 3, 1.., *dir) so it broadcasts against A of shape (3, *lvl, *dir)
    extra = A.ndim - pols.ndim + 1
    return pols.reshape(pols.shape[:2] + (1,) * extra + pols.shape[2:])


def transition_amplitude(n: int, j: int, direction: EmissionDirection, beam: BeamParams,
                         model: ChannelModel, omega: float,
                         coupling: Coupling = "cross") -> TransitionAmplitude:
    """Amplitude for the single transition n -> n - j with photon energy ``omega``."""
    if omega >= beam.energy:
        raise ValueError("photon energy must be below the positron energy")
    top = model.n_levels(beam)
    if not (0 <= n <= top and 0 <= n - j <= top):
        raise ValueError(f"levels n={n}, n-j={n - j} outside [0, {top}]")
    # one spare level so the ladder term n+1 stays inside the basis
    basis = model.basis(beam, extra=1)
    k = omega * direction.k_hat
    I1 = overlap_I1(basis, n, j, k[0])
    I2 = derivative_I2(basis, n, j, k[0])
    A, B, a, d = _assemble(I1, I2, k, omega, beam, direction.polarizations, coupling)
    return TransitionAmplitude(n, j, omega, A, B, a, d)


def spin_polarization_reduce(a, d):
    """Initial-spin-averaged, final-spin-summed |chi'^+ (a + i sigma.d) chi|^2.

    Reduces to |a|^2 + d.d*. Works elementwise when ``d`` carries the vector
    index on its first axis.
    """
    a = np.asarray(a)
    d = np.asarray(d)
    return np.abs(a) ** 2 + np.sum(np.abs(d) ** 2, axis=0)


@dataclass(frozen=True)
class SpectralRecord:
    """Intensity of harmonic j per unit solid angle at (theta, phi).

    ``intensity_pol1``/``intensity_pol2`` split the coherent intensity, or the
    incoherent one when ``interference == "off"``.
    """

    j: int
    theta: float
    phi: float
    omega: float
    intensity_coherent: float
    intensity_incoherent: float
    intensity_pol1: float
    intensity_pol2: float
    interference: str = "on"

    @property
    def intensity(self) -> float:
        return self.intensity_incoherent if self.interference == "off" else self.intensity_coherent


def _abs2(z):
    return z.real * z.real + z.imag * z.imag


@dataclass(frozen=True)
class RowResult:
    """Intensities of one harmonic at fixed theta over an array of azimuths.

    Polarization-resolved arrays have shape (2, n_phi).
    """

    omega: float
    coherent: np.ndarray
    incoherent: np.ndarray


def harmonic_row(j: int, theta: float, phi, beam: BeamParams, model: ChannelModel,
                 c, kinematics: Kinematics = "small_angle",
                 coupling: Coupling = "cross") -> RowResult:
    """Polarization-resolved intensities of harmonic j at one theta, many phi.

    Both the coherent sum |sum_n c_n M_n|^2 and the incoherent sum
    sum_n |c_n M_n|^2 come out of the same amplitudes.
    """
    c = np.asarray(c, dtype=complex)
    top = len(c) - 1
    if j < 1:
        raise ValueError(f"harmonic index must be >= 1, got {j}")
    if j > top:
        raise ValueError(f"harmonic j={j} exceeds the retained levels (N={top})")
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    omega0 = model.omega(beam)
    root_scale = math.sqrt(beam.energy * omega0)
    w = doppler_frequency(j, theta, beam, omega0, kinematics)

    k = w * unit_vector(theta, phi)
    q = k[0] / root_scale
    m_max = top - j
    n = np.arange(j, top + 1)[:, None]
    I1 = overlap_table(q, j, m_max)
    I2 = root_scale * (np.sqrt(n / 2.0) * overlap_table(q, j - 1, m_max)
                       - np.sqrt((n + 1) / 2.0) * overlap_table(q, j + 1, m_max))
    _, _, a, d = _assemble(I1, I2, k, w, beam, polarization_vectors(theta, phi), coupling)

    # a: (2, L, P), d: (2, 3, L, P)
    cn = c[j:, None]
    ca = cn * a
    cd = cn * d
    coh = _abs2(ca.sum(axis=1)) + _abs2(cd.sum(axis=2)).sum(axis=1)
    inc = _abs2(ca).sum(axis=1) + _abs2(cd).sum(axis=2).sum(axis=1)

    # e^2 w^2 / 2pi times the delta-function Jacobian 1/(1 - beta cos t) = w / (j Omega)
    pref = ALPHA * w**2 / (2 * math.pi) * (w / (j * omega0))
    return RowResult(w, pref * coh, pref * inc)


def harmonic_intensity(j: int, direction: EmissionDirection, beam: BeamParams,
                       model: ChannelModel, c, interference: Interference = "on",
                       kinematics: Kinematics = "small_angle",
                       coupling: Coupling = "cross") -> SpectralRecord:
    """Spectral-angular intensity of harmonic j in one direction."""
    row = harmonic_row(j, direction.theta, direction.phi, beam, model, c, kinematics, coupling)
    return records_from_row(j, direction.theta, np.atleast_1d(direction.phi), row, interference)[0]


def records_from_row(j, theta, phi, row: RowResult, interference: Interference = "on"):
    if interference not in ("on", "off", "both"):
        raise ValueError(f"interference must be on, off or both, got {interference!r}")
    split = row.incoherent if interference == "off" else row.coherent
    coh = split_total(row.coherent)
    inc = split_total(row.incoherent)
    return [
        SpectralRecord(j, float(theta), float(p), float(row.omega), float(coh[i]),
                       float(inc[i]), float(split[0, i]), float(split[1, i]), interference)
        for i, p in enumerate(phi)
    ]


def split_total(pol):
    return pol[0] + pol[1]
