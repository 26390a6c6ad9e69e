"""Spectral-angular channeling radiation of positrons in a harmonic planar channel,
with amplitudes from equidistant levels summed coherently or incoherently."""

__version__ = "0.1.0"

from .channel import (  # noqa: E402
    BeamParams,
    ChannelModel,
    EmissionDirection,
    SpectralRecord,
    doppler_frequency,
    entry_coefficients,
    harmonic_intensity,
    oscillator_frequency,
    spin_polarization_reduce,
    transition_amplitude,
)
from .scan import ScanGrid, angular_map, convergence_report, frequency_spectrum  # noqa: E402
from .specfun import OscillatorBasis, build_gauss_hermite, eigenfunction_eval  # noqa: E402
