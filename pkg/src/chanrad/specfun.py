"""Harmonic-oscillator special functions.

Normalized Hermite functions, Gauss-Hermite quadrature and the Fourier
overlap integrals between oscillator eigenstates

    I1(n, n-j) = <n-j| exp(-i k_x x) |n>
    I2(n, n-j) = <n-j| exp(-i k_x x) d/dx |n>

Everything works in the dimensionless coordinate xi = sqrt(E*Omega) * x.
Energies are in eV and lengths in 1/eV (hbar = c = 1).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.special import gammaln

N_MAX_CAP = 512
GH_MAX_ORDER = 1024

_PI_M14 = np.pi ** -0.25
# Rescale the recurrence once values leave this window; the exponent is
# carried separately so that exp(-xi^2/2) never underflows early.
_BIG = 1e150


@dataclass(frozen=True)
class OscillatorBasis:
    """Eigenbasis of the transverse harmonic well.

    Parameters
    ----------
    scale : float
        The product E * Omega in eV^2.
    n_max : int
        Highest retained level.
    cap : int
        Hard upper bound on ``n_max``.
    """

    scale: float
    n_max: int
    cap: int = N_MAX_CAP

    def __post_init__(self):
        if not (np.isfinite(self.scale) and self.scale > 0):
            raise ValueError(f"scale must be positive and finite, got {self.scale}")
        if int(self.n_max) != self.n_max or self.n_max < 0:
            raise ValueError(f"n_max must be a non-negative integer, got {self.n_max}")
        if self.n_max > self.cap:
            raise ValueError(f"n_max={self.n_max} exceeds the hard cap {self.cap}")

    @property
    def root_scale(self) -> float:
        return float(np.sqrt(self.scale))

    def xi(self, x):
        return self.root_scale * np.asarray(x, dtype=float)

    def reduced_momentum(self, k_x):
        """k_x / sqrt(E*Omega), the momentum conjugate to ``xi``."""
        return np.asarray(k_x, dtype=float) / self.root_scale

    def check_level(self, n: int, name: str = "n") -> None:
        if int(n) != n or n < 0 or n > self.n_max:
            raise ValueError(f"{name}={n} outside [0, {self.n_max}]")


def _hermite_scaled(n_max: int, xi: np.ndarray):
    """Yield (n, p, log_scale) with psi_n(xi) = p * exp(log_scale)."""
    xi = np.asarray(xi, dtype=float)
    half_sq = 0.5 * xi * xi
    safe = half_sq < 600.0
    log_scale = np.where(safe, 0.0, -half_sq)
    p = _PI_M14 * np.exp(np.where(safe, -half_sq, 0.0))
    p_prev = np.zeros_like(p)
    yield 0, p, log_scale
    for n in range(n_max):
        p_next = np.sqrt(2.0 / (n + 1)) * xi * p - np.sqrt(n / (n + 1)) * p_prev
        p_prev, p = p, p_next
        mag = np.abs(p)
        if np.any(mag > _BIG):
            s = np.where(mag > _BIG, mag, 1.0)
            p = p / s
            p_prev = p_prev / s
            log_scale = log_scale + np.log(s)
        yield n + 1, p, log_scale


def hermite_functions(n_max: int, xi) -> np.ndarray:
    """Normalized Hermite functions psi_0..psi_{n_max} at ``xi``.

    psi_n(xi) = pi^{-1/4} (2^n n!)^{-1/2} exp(-xi^2/2) H_n(xi), built with the
    three-term recurrence on the normalized functions so nothing overflows.
    Returns an array of shape ``(n_max + 1,) + np.shape(xi)``.
    """
    xi = np.asarray(xi, dtype=float)
    out = np.empty((n_max + 1,) + xi.shape)
    for n, p, log_scale in _hermite_scaled(n_max, xi):
        out[n] = p * np.exp(log_scale)
    return out


def eigenfunctions(basis: OscillatorBasis, x) -> np.ndarray:
    """phi_n(x) for n = 0..basis.n_max, including the (E*Omega)^{1/4} factor."""
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("x must be finite")
    return basis.scale ** 0.25 * hermite_functions(basis.n_max, basis.xi(x))


def eigenfunction_eval(basis: OscillatorBasis, n: int, x):
    """Oscillator eigenfunction phi_n at position ``x`` (1/eV)."""
    basis.check_level(n)
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("x must be finite")
    psi = hermite_functions(n, basis.xi(x))[n]
    val = basis.scale ** 0.25 * psi
    return float(val) if val.ndim == 0 else val


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Hermite rule for the weight exp(-xi^2).

    ``scaled_weights`` are w_i * exp(x_i^2). They stay representable at every
    order, while the plain ``weights`` of the outermost nodes underflow to 0
    once the order goes past a few hundred.
    """

    nodes: np.ndarray
    weights: np.ndarray
    scaled_weights: np.ndarray
    order: int = field(default=0)

    def integrate(self, f) -> complex:
        """Integral of exp(-xi^2) * f(xi)."""
        return np.sum(self.weights * f(self.nodes))

    def integrate_plain(self, g):
        """Integral of g(xi) over the real line, for g already carrying its Gaussian decay."""
        vals = g(self.nodes)
        return np.tensordot(vals, self.scaled_weights, axes=([-1], [0]))


def build_gauss_hermite(order: int) -> QuadratureRule:
    """Golub-Welsch nodes polished by Newton steps on psi_order."""
    if int(order) != order or not 1 <= order <= GH_MAX_ORDER:
        raise ValueError(f"order must be an integer in [1, {GH_MAX_ORDER}], got {order}")
    order = int(order)
    if order == 1:
        return QuadratureRule(
            np.zeros(1), np.array([np.sqrt(np.pi)]), np.array([np.sqrt(np.pi)]), 1
        )
    off = np.sqrt(np.arange(1, order) / 2.0)
    x = eigh_tridiagonal(np.zeros(order), off, eigvals_only=True)
    for _ in range(3):
        x = x - _newton_ratio(order, x)
    x = 0.5 * (x - x[::-1])
    psi_prev = _psi_pair(order, x)[1]
    scaled = 1.0 / (order * psi_prev ** 2)
    scaled = 0.5 * (scaled + scaled[::-1])
    weights = scaled * np.exp(-x * x)
    return QuadratureRule(x, weights, scaled, order)


def _psi_pair(n: int, x: np.ndarray):
    """(psi_n, psi_{n-1}) at x without underflow in the common factor."""
    prev = None
    for k, p, log_scale in _hermite_scaled(n, x):
        if k == n - 1:
            prev = p * np.exp(log_scale)
        if k == n:
            return p * np.exp(log_scale), prev
    raise AssertionError("unreachable")


def _newton_ratio(n: int, x: np.ndarray) -> np.ndarray:
    # psi_n / psi_n' with psi_n' = sqrt(2n) psi_{n-1} - x psi_n; scales cancel.
    p_prev = p = None
    for k, pk, _ in _hermite_scaled(n, x):
        if k == n - 1:
            p_prev = pk
        if k == n:
            p = pk
    return p / (np.sqrt(2.0 * n) * p_prev - x * p)


def overlap_table(q, j: int, m_max: int) -> np.ndarray:
    """<m| exp(-i q xi) |m + |j|> for m = 0..m_max.

    Closed form (-i q / sqrt 2)^|j| sqrt(m!/(m+|j|)!) exp(-q^2/4) L_m^(|j|)(q^2/2),
    evaluated with the Laguerre recurrence rewritten on the normalized products.
    The matrix of exp(-i q xi) is symmetric in the real oscillator basis, so the
    value depends only on the lower level m and the gap |j|.
    Returns shape ``(m_max + 1,) + np.shape(q)``.
    """
    q = np.asarray(q, dtype=float)
    a = abs(int(j))
    t = 0.5 * q * q
    out = np.empty((m_max + 1,) + q.shape, dtype=complex)
    if a:
        with np.errstate(divide="ignore"):
            log_mag = a * np.log(np.abs(q) / np.sqrt(2.0)) - 0.5 * gammaln(a + 1) - 0.5 * t
        f = np.exp(log_mag)
    else:
        f = np.exp(-0.5 * t)
    if a % 2:
        f = f * np.sign(q)
    f_prev = np.zeros_like(f)
    phase = (-1j) ** a
    out[0] = phase * f
    for m in range(m_max):
        f_next = ((2 * m + 1 + a - t) * f - np.sqrt(m * (m + a)) * f_prev) / np.sqrt(
            (m + 1) * (m + a + 1)
        )
        f_prev, f = f, f_next
        out[m + 1] = phase * f
    return out


def _overlap_scalar(n_i: int, n_f: int, q: float) -> complex:
    lo = min(n_i, n_f)
    return complex(overlap_table(q, n_i - n_f, lo)[lo])


def overlap_I1(basis: OscillatorBasis, n: int, j: int, k_x: float) -> complex:
    """Fourier overlap of levels n and n-j at transverse photon momentum k_x (eV)."""
    basis.check_level(n)
    basis.check_level(n - j, "n-j")
    if not np.isfinite(k_x):
        raise ValueError("k_x must be finite")
    return _overlap_scalar(n, n - j, float(basis.reduced_momentum(k_x)))


def derivative_I2(basis: OscillatorBasis, n: int, j: int, k_x: float) -> complex:
    """Derivative-coupled overlap <n-j| exp(-i k_x x) d/dx |n> in eV.

    Uses d phi_n/dx = sqrt(E Omega) (sqrt(n/2) phi_{n-1} - sqrt((n+1)/2) phi_{n+1}).
    """
    basis.check_level(n)
    basis.check_level(n - j, "n-j")
    if not np.isfinite(k_x):
        raise ValueError("k_x must be finite")
    q = float(basis.reduced_momentum(k_x))
    m = n - j
    val = -np.sqrt((n + 1) / 2.0) * _overlap_scalar(n + 1, m, q)
    if n > 0:
        val += np.sqrt(n / 2.0) * _overlap_scalar(n - 1, m, q)
    return complex(basis.root_scale * val)


def overlap_matrix(q: float, n_top: int) -> np.ndarray:
    """Full matrix <m| exp(-i q xi) |n> for m, n = 0..n_top from the closed form."""
    out = np.empty((n_top + 1, n_top + 1), dtype=complex)
    idx = np.arange(n_top + 1)
    for a in range(n_top + 1):
        vals = overlap_table(q, a, n_top - a)
        out[idx[: n_top + 1 - a], idx[a:]] = vals
        out[idx[a:], idx[: n_top + 1 - a]] = vals
    return out


def derivative_matrix(q: float, n_top: int) -> np.ndarray:
    """<m| exp(-i q xi) d/dxi |n> for m, n = 0..n_top via the ladder identity."""
    M = overlap_matrix(q, n_top + 1)
    n = np.arange(n_top + 1)
    out = -np.sqrt((n + 1) / 2.0) * M[: n_top + 1, 1 : n_top + 2]
    out[:, 1:] += np.sqrt(n[1:] / 2.0) * M[: n_top + 1, : n_top]
    return out
