"""Truncation behaviour of the plane-wave expansion and of the probe intensity.

Part 1 prints the pointwise error of the plain partial sums sum_{n<=N} c_n phi_n
against exp(i p_x x) on |xi| <= 3, together with N^{1/2} times that error
(roughly constant when the sums converge like N^{-1/2}) and the Abel-damped
reconstruction error.

Part 2 prints the convergence report at the default beam, once with the
plane-wave entry coefficients and once with a normalizable occupation.

    python scripts/convergence_study.py
"""

import argparse
import math

import numpy as np

from chanrad.channel import BeamParams, ChannelModel, EmissionDirection
from chanrad.oracle import mehler_abel, mehler_reconstruction
from chanrad.scan import convergence_report
from chanrad.specfun import N_MAX_CAP, OscillatorBasis


def coherent_state(n_top, alpha=1.0):
    n = np.arange(n_top + 1)
    logs = n * math.log(alpha) - 0.5 * np.array([math.lgamma(k + 1) for k in n])
    return np.exp(-0.5 * alpha**2 + logs).astype(complex)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--energy-gev", type=float, default=1.0)
    ap.add_argument("--p-red", type=float, nargs="+", default=[0.0, 2.0, 4.0])
    args = ap.parse_args()

    energy = args.energy_gev * 1e9
    model = ChannelModel.from_angstrom(23.0, 1.92)
    scale = energy * model.omega(BeamParams(energy))
    basis = OscillatorBasis(scale, N_MAX_CAP)
    x = np.linspace(-3, 3, 241) / basis.root_scale

    print(f"{'p~':>5s} {'N':>5s} {'partial sum':>12s} {'x sqrt(N)':>10s} {'Abel r=0.9':>11s}")
    for p_red in args.p_red:
        beam = BeamParams(energy, incidence_angle=p_red * math.sqrt(scale) / energy)
        for N in (10, 40, 100, 200, 400, 512):
            err = mehler_reconstruction(beam, basis, N, x)
            abel = mehler_abel(beam, basis, N, x, r=0.9)
            print(f"{p_red:5.1f} {N:5d} {err:12.4e} {err * math.sqrt(N):10.4f} {abel:11.3e}")

    theta_p = model.critical_angle(BeamParams(energy))
    beam = BeamParams(energy, incidence_angle=0.5 * theta_p)
    print()
    print("plane-wave entry coefficients:")
    print(convergence_report(beam, model).summary())
    N = model.n_levels(beam)
    print("coherent-state occupation, alpha = 1:")
    probe = EmissionDirection(0.5 / beam.gamma, math.pi / 4)
    print(convergence_report(beam, model, c=coherent_state(N + 5), direction=probe).summary())


if __name__ == "__main__":
    main()
