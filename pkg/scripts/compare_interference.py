"""Coherent vs incoherent spectra as a function of incidence angle.

For each incidence angle (in units of the critical angle) prints the
solid-angle-integrated intensity of every harmonic with and without the
interference terms, and their ratio.

    python scripts/compare_interference.py --energy-gev 1 --angles 0 0.25 0.5 0.9
"""

import argparse

import numpy as np

from chanrad.channel import BeamParams, ChannelModel, entry_coefficients
from chanrad.scan import ScanGrid, evaluate_map, solid_angle_integral


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--energy-gev", type=float, default=1.0)
    ap.add_argument("--v0-ev", type=float, default=23.0)
    ap.add_argument("--dp-angstrom", type=float, default=1.92)
    ap.add_argument("--angles", type=float, nargs="+", default=[0.0, 0.25, 0.5, 0.75, 0.9],
                    help="incidence angles as fractions of the critical angle")
    ap.add_argument("--j-max", type=int, default=4)
    ap.add_argument("--theta-points", type=int, default=120)
    ap.add_argument("--phi-points", type=int, default=48)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    model = ChannelModel.from_angstrom(args.v0_ev, args.dp_angstrom)
    theta_p = model.critical_angle(BeamParams(args.energy_gev * 1e9))
    print(f"# critical angle {theta_p * 1e6:.3f} urad")
    print(f"{'theta_in/theta_p':>16s} {'j':>2s} {'coherent':>14s} {'incoherent':>14s} {'ratio':>8s}")
    for frac in args.angles:
        beam = BeamParams(args.energy_gev * 1e9, incidence_angle=frac * theta_p)
        c = entry_coefficients(beam, model.basis(beam))
        grid = ScanGrid.default(beam, model, args.theta_points, args.phi_points, args.j_max)
        data = evaluate_map(grid, beam, model, c, workers=args.workers)
        coh = solid_angle_integral(data, "coherent")
        inc = solid_angle_integral(data, "incoherent")
        for j, a, b in zip(grid.harmonics, coh, inc):
            ratio = a / b if b > 0 else np.nan
            print(f"{frac:16.3f} {j:2d} {a:14.6e} {b:14.6e} {ratio:8.4f}")


if __name__ == "__main__":
    main()
