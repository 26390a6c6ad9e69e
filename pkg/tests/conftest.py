import math

import numpy as np
import pytest

from chanrad.channel import BeamParams, ChannelModel, entry_coefficients

# acceptance outcomes collected by tests/test_acceptance.py, printed at session end
ACCEPTANCE = {}


@pytest.fixture(scope="session")
def model():
    return ChannelModel.from_angstrom(23.0, 1.92)


@pytest.fixture(scope="session")
def beam(model):
    """1 GeV positrons entering at half the critical angle."""
    b0 = BeamParams(1e9)
    return BeamParams(1e9, incidence_angle=0.5 * model.critical_angle(b0))


@pytest.fixture(scope="session")
def beam_axial():
    return BeamParams(1e9)


@pytest.fixture(scope="session")
def basis(beam, model):
    return model.basis(beam)


@pytest.fixture(scope="session")
def coeffs(beam, basis):
    return entry_coefficients(beam, basis)


def coherent_state(n_top, alpha=1.0):
    """Normalizable occupation exp(-|a|^2/2) a^n / sqrt(n!) with quickly decaying tail."""
    n = np.arange(n_top + 1)
    logs = n * math.log(abs(alpha)) - 0.5 * np.array([math.lgamma(k + 1) for k in n])
    return np.exp(-0.5 * abs(alpha) ** 2 + logs).astype(complex)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
