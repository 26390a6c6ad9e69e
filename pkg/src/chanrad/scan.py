"""Angular maps, frequency spectra and convergence checks over emission grids.

Work is split into (harmonic, theta) rows; every row is evaluated by the same
call with the full azimuth vector, so serial and parallel runs agree bit for
bit and chunks can be merged in grid order.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.ndimage import gaussian_filter1d

from .channel import (
    BeamParams,
    ChannelModel,
    EmissionDirection,
    RowResult,
    SpectralRecord,
    doppler_frequency,
    entry_coefficients,
    harmonic_row,
    inverse_doppler,
    records_from_row,
    split_total,
)
from .oracle import quadrature_tables, required_order
from .specfun import OscillatorBasis

OMEGA_HEADROOM = 1.05


class ScanError(RuntimeError):
    """A grid point failed; the message carries the (j, theta) context."""


def _strictly_increasing(name, a):
    a = np.asarray(a, dtype=float)
    if a.ndim != 1 or a.size == 0:
        raise ValueError(f"{name} grid must be a non-empty 1-d sequence")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} grid must be finite")
    if np.any(np.diff(a) <= 0):
        raise ValueError(f"{name} grid must be strictly increasing")
    return a


@dataclass(frozen=True, eq=False)
class ScanGrid:
    theta: np.ndarray
    phi: np.ndarray
    harmonics: tuple
    omega_edges: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, "theta", _strictly_increasing("theta", self.theta))
        object.__setattr__(self, "phi", _strictly_increasing("phi", self.phi))
        if self.theta[0] < 0 or self.theta[-1] > np.pi / 2:
            raise ValueError("theta must lie in [0, pi/2]")
        h = tuple(int(j) for j in self.harmonics)
        if not h or any(j < 1 for j in h) or any(b <= a for a, b in zip(h, h[1:])):
            raise ValueError("harmonics must be increasing integers >= 1")
        object.__setattr__(self, "harmonics", h)
        if self.omega_edges is not None:
            edges = _strictly_increasing("omega", self.omega_edges)
            if edges.size < 2 or edges[0] < 0:
                raise ValueError("omega bins need at least two non-negative edges")
            object.__setattr__(self, "omega_edges", edges)

    @classmethod
    def default(cls, beam: BeamParams, model: ChannelModel, theta_points: int = 200,
                phi_points: int = 64, j_max: int = 5, omega_bins: int = 400):
        omega0 = model.omega(beam)
        top = OMEGA_HEADROOM * 2 * beam.gamma**2 * omega0 * j_max
        return cls(
            theta=np.linspace(0.0, 5.0 / beam.gamma, theta_points),
            phi=np.linspace(0.0, 2 * np.pi, phi_points),
            harmonics=tuple(range(1, j_max + 1)),
            omega_edges=np.linspace(0.0, top, omega_bins + 1),
        )


@dataclass(frozen=True, eq=False)
class MapData:
    """Polarization-resolved intensities on the full grid.

    ``coherent`` and ``incoherent`` have shape (n_harmonics, 2, n_theta, n_phi);
    ``omega`` has shape (n_harmonics, n_theta).
    """

    grid: ScanGrid
    omega: np.ndarray
    coherent: np.ndarray
    incoherent: np.ndarray


@dataclass(frozen=True)
class _Job:
    beam: BeamParams
    model: ChannelModel
    c: np.ndarray
    phi: np.ndarray
    kinematics: str
    coupling: str


def _run_rows(job: _Job, tasks):
    out = []
    for j, theta in tasks:
        try:
            out.append(harmonic_row(j, theta, job.phi, job.beam, job.model, job.c,
                                    job.kinematics, job.coupling))
        except Exception as exc:
            raise ScanError(f"harmonic j={j}, theta={theta!r}: {exc}") from exc
    return out


def _chunked(items, n_chunks):
    size = max(1, math.ceil(len(items) / n_chunks))
    return [items[i:i + size] for i in range(0, len(items), size)]


def evaluate_map(grid: ScanGrid, beam: BeamParams, model: ChannelModel, c,
                 kinematics: str = "small_angle", coupling: str = "cross",
                 workers: int = 1) -> MapData:
    """Evaluate every (j, theta) row, serially or on a process pool."""
    c = np.asarray(c, dtype=complex)
    job = _Job(beam, model, c, grid.phi, kinematics, coupling)
    tasks = [(j, float(t)) for j in grid.harmonics for t in grid.theta]
    if workers <= 1:
        rows = _run_rows(job, tasks)
    else:
        chunks = _chunked(tasks, 4 * workers)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = pool.map(_run_rows, [job] * len(chunks), chunks)
            rows = [r for part in parts for r in part]
    return _stack(grid, rows)


def _stack(grid: ScanGrid, rows: list[RowResult]) -> MapData:
    J, T, P = len(grid.harmonics), grid.theta.size, grid.phi.size
    omega = np.array([r.omega for r in rows]).reshape(J, T)
    coh = np.stack([r.coherent for r in rows]).reshape(J, T, 2, P).transpose(0, 2, 1, 3)
    inc = np.stack([r.incoherent for r in rows]).reshape(J, T, 2, P).transpose(0, 2, 1, 3)
    return MapData(grid, omega, np.ascontiguousarray(coh), np.ascontiguousarray(inc))


def angular_map(grid: ScanGrid, beam: BeamParams, model: ChannelModel, c,
                interference: str = "on", kinematics: str = "small_angle",
                coupling: str = "cross", workers: int = 1) -> list[SpectralRecord]:
    """One record per (j, theta, phi), ordered j-major, then theta, then phi."""
    data = evaluate_map(grid, beam, model, c, kinematics, coupling, workers)
    return map_records(data, interference)


def map_records(data: MapData, interference: str = "on") -> list[SpectralRecord]:
    grid = data.grid
    out = []
    for a, j in enumerate(grid.harmonics):
        for t, theta in enumerate(grid.theta):
            row = RowResult(data.omega[a, t], data.coherent[a, :, t], data.incoherent[a, :, t])
            out.extend(records_from_row(j, theta, grid.phi, row, interference))
    return out


def solid_angle_integral(data: MapData, which: str = "coherent") -> np.ndarray:
    """Per-harmonic integral of the (unpolarized) intensity over the grid's solid angle."""
    vals = split_total(getattr(data, which).transpose(1, 0, 2, 3))
    over_phi = np.trapezoid(vals, data.grid.phi, axis=-1)
    return np.trapezoid(over_phi * np.sin(data.grid.theta), data.grid.theta, axis=-1)


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Binned dI/domega per harmonic.

    ``coherent``/``incoherent`` have shape (n_harmonics, n_bins); ``pol`` is
    (n_harmonics, 2, n_bins) for the selected interference mode; ``empty``
    flags bins that received nothing; ``outside`` is the coherent integral that
    fell outside the bins.
    """

    edges: np.ndarray
    harmonics: tuple
    coherent: np.ndarray
    incoherent: np.ndarray
    pol: np.ndarray
    empty: np.ndarray
    outside: np.ndarray
    interference: str = "on"

    @property
    def centers(self):
        return 0.5 * (self.edges[1:] + self.edges[:-1])

    @property
    def widths(self):
        return np.diff(self.edges)

    def total(self, which: str = "coherent") -> np.ndarray:
        return getattr(self, which).sum(axis=0)

    def integral(self, which: str = "coherent") -> np.ndarray:
        """omega-integral of each harmonic's spectrum."""
        return np.sum(getattr(self, which) * self.widths, axis=-1)


def pushforward(theta, g, j: int, beam: BeamParams, omega0: float, edges,
                kinematics: str = "small_angle"):
    """Map a theta profile into omega bins.

    ``g`` (shape (..., n_theta)) is the azimuth-integrated intensity times
    sin(theta), taken piecewise linear in theta. Each theta cell is cut at the
    angles where the Doppler curve crosses a bin edge and the exact integral
    of every piece is deposited into its bin, so nothing is ever divided by
    theta or by d omega / d theta. Returns (amount per bin, amount outside).
    """
    theta = np.asarray(theta, dtype=float)
    g = np.asarray(g, dtype=float)
    w_lo = doppler_frequency(j, theta[-1], beam, omega0, kinematics)
    w_hi = doppler_frequency(j, theta[0], beam, omega0, kinematics)
    inner = edges[(edges > w_lo) & (edges < w_hi)]
    cuts = inverse_doppler(j, inner, beam, omega0, kinematics)
    cuts = cuts[(cuts > theta[0]) & (cuts < theta[-1])]
    t_all = np.union1d(theta, cuts)
    flat = g.reshape(-1, theta.size)
    g_all = np.stack([np.interp(t_all, theta, row) for row in flat])
    pieces = 0.5 * (g_all[:, 1:] + g_all[:, :-1]) * np.diff(t_all)
    w_mid = doppler_frequency(j, 0.5 * (t_all[1:] + t_all[:-1]), beam, omega0, kinematics)
    idx = np.searchsorted(edges, w_mid, side="right") - 1
    ok = (idx >= 0) & (idx < edges.size - 1)
    nb = edges.size - 1
    binned = np.stack([np.bincount(idx[ok], weights=p[ok], minlength=nb) for p in pieces])
    outside = pieces[:, ~ok].sum(axis=1)
    lead = g.shape[:-1]
    return binned.reshape(lead + (nb,)), outside.reshape(lead)


def frequency_spectrum(grid: ScanGrid, beam: BeamParams, model: ChannelModel, c,
                       interference: str = "on", kinematics: str = "small_angle",
                       coupling: str = "cross", workers: int = 1,
                       data: Optional[MapData] = None) -> Spectrum:
    """dI/domega per harmonic by pushing the angular map forward through the Doppler curve."""
    if grid.omega_edges is None:
        raise ValueError("spectrum mode needs omega bin edges")
    edges = grid.omega_edges
    omega0 = model.omega(beam)
    cutoff = doppler_frequency(max(grid.harmonics), 0.0, beam, omega0, kinematics)
    if edges[-1] > OMEGA_HEADROOM * cutoff * (1 + 1e-12):
        raise ValueError(
            f"omega bins reach {edges[-1]:.6g} eV, above {OMEGA_HEADROOM} x the forward "
            f"cutoff {cutoff:.6g} eV of harmonic {max(grid.harmonics)}"
        )
    if data is None:
        data = evaluate_map(grid, beam, model, c, kinematics, coupling, workers)
    sin_t = np.sin(grid.theta)
    nb = edges.size - 1
    J = len(grid.harmonics)
    coh = np.zeros((J, nb))
    inc = np.zeros((J, nb))
    pol = np.zeros((J, 2, nb))
    outside = np.zeros(J)
    split = data.incoherent if interference == "off" else data.coherent
    for a, j in enumerate(grid.harmonics):
        profiles = np.concatenate([
            split_total(data.coherent[a])[None],
            split_total(data.incoherent[a])[None],
            split[a],
        ])
        g = np.trapezoid(profiles, grid.phi, axis=-1) * sin_t
        binned, out = pushforward(grid.theta, g, j, beam, omega0, edges, kinematics)
        width = np.diff(edges)
        coh[a], inc[a], pol[a] = binned[0] / width, binned[1] / width, binned[2:] / width
        outside[a] = out[0]
    empty = (coh == 0) & (inc == 0)
    return Spectrum(edges, grid.harmonics, coh, inc, pol, empty, outside, interference)


def broaden(spectrum: Spectrum, sigma: float) -> Spectrum:
    """Gaussian smoothing of every channel; presentation only, needs uniform bins.

    Reflecting boundaries keep the integral of each channel unchanged.
    """
    widths = spectrum.widths
    if not np.allclose(widths, widths[0], rtol=1e-9):
        raise ValueError("broadening needs uniform omega bins")
    if sigma <= 0:
        raise ValueError("broadening width must be positive")
    s = sigma / widths[0]

    def f(a):
        return gaussian_filter1d(a, s, axis=-1, mode="reflect")

    return Spectrum(spectrum.edges, spectrum.harmonics, f(spectrum.coherent),
                    f(spectrum.incoherent), f(spectrum.pol), spectrum.empty,
                    spectrum.outside, spectrum.interference)


@dataclass(frozen=True)
class ConvergenceEntry:
    name: str
    base: float
    refined: float
    rel_delta: float
    flagged: bool


@dataclass(frozen=True)
class ConvergenceReport:
    theta: float
    phi: float
    n_levels: int
    quad_order: int
    j_max: int
    threshold: float
    entries: tuple = field(default_factory=tuple)

    @property
    def flagged(self) -> bool:
        return any(e.flagged for e in self.entries)

    def entry(self, name: str) -> ConvergenceEntry:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)

    def summary(self) -> str:
        lines = [
            f"convergence at theta={self.theta:.6g} rad, phi={self.phi:.6g} rad "
            f"(N_levels={self.n_levels}, quad order={self.quad_order}, j_max={self.j_max})"
        ]
        for e in self.entries:
            mark = "FLAG" if e.flagged else "ok"
            lines.append(f"  {e.name:<22s} {e.base:.6e} -> {e.refined:.6e}  "
                         f"rel delta {e.rel_delta:.3e}  {mark}")
        return "\n".join(lines)


def _rel(a, b):
    scale = max(abs(a), abs(b))
    return 0.0 if scale == 0 else abs(a - b) / scale


def convergence_report(beam: BeamParams, model: ChannelModel, c=None,
                       direction: Optional[EmissionDirection] = None, j_max: int = 5,
                       quad_order: Optional[int] = None, threshold: float = 1e-4,
                       kinematics: str = "small_angle", coupling: str = "cross",
                       extra_levels: int = 5, extra_harmonics: int = 2) -> ConvergenceReport:
    """Sensitivity of the probe intensity to level truncation, quadrature and j_max.

    ``c`` must cover at least ``n_levels + extra_levels + 1`` entries; by
    default the plane-wave entry coefficients are used.
    """
    N = model.n_levels(beam)
    omega0 = model.omega(beam)
    scale = beam.energy * omega0
    if c is None:
        c = entry_coefficients(beam, OscillatorBasis(scale, N + extra_levels))
    c = np.asarray(c, dtype=complex)
    if len(c) < N + extra_levels + 1:
        raise ValueError(f"need {N + extra_levels + 1} coefficients, got {len(c)}")
    if direction is None:
        direction = EmissionDirection(1.0 / beam.gamma, np.pi / 4)

    def probe(levels, jm):
        coh = inc = 0.0
        for j in range(1, min(jm, levels) + 1):
            row = harmonic_row(j, direction.theta, direction.phi, beam, model,
                               c[: levels + 1], kinematics, coupling)
            coh += float(split_total(row.coherent)[0])
            inc += float(split_total(row.incoherent)[0])
        return coh, inc

    base = probe(N, j_max)
    more_levels = probe(N + extra_levels, j_max)
    more_harm = probe(N, j_max + extra_harmonics)

    w = doppler_frequency(1, direction.theta, beam, omega0, kinematics)
    q = w * math.sin(direction.theta) * math.sin(direction.phi) / math.sqrt(scale)
    order = required_order(N + 1, q) if quad_order is None else int(quad_order)
    M1, D1 = quadrature_tables(N, q, order)
    M2, D2 = quadrature_tables(N, q, min(2 * order, 1024))
    quad_delta = max(np.abs(M1 - M2).max() / np.abs(M2).max(),
                     np.abs(D1 - D2).max() / np.abs(D2).max())

    entries = []
    for name, a, b in [
        ("levels_coherent", base[0], more_levels[0]),
        ("levels_incoherent", base[1], more_levels[1]),
        ("harmonics_coherent", base[0], more_harm[0]),
        ("harmonics_incoherent", base[1], more_harm[1]),
    ]:
        d = _rel(a, b)
        entries.append(ConvergenceEntry(name, a, b, d, d > threshold))
    entries.append(ConvergenceEntry("quadrature_overlaps", float(order), float(min(2 * order, 1024)),
                                    float(quad_delta), bool(quad_delta > threshold)))
    return ConvergenceReport(direction.theta, direction.phi, N, order, j_max, threshold,
                             tuple(entries))
