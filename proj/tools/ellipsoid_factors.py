#!/usr/bin/env python3
"""Demagnetizing factors of a general ellipsoid from Carlson's R_D.

N_x = (abc/3) R_D(b^2, c^2, a^2), cyclically. Writes a CSV that the C++
tests read as reference values.

usage: ellipsoid_factors.py [--out tests/data/ellipsoid_factors.csv]
"""
import argparse
import csv
import math

from scipy.special import elliprd

SHAPES = {
    "sphere": (1.0, 1.0, 1.0),
    "prolate_2_1_1": (2.0, 1.0, 1.0),
    "oblate_1_1_0.5": (1.0, 1.0, 0.5),
    "general_1.5_1_0.75": (1.5, 1.0, 0.75),
}


def factors(a, b, c):
    k = a * b * c / 3.0
    return (k * elliprd(b * b, c * c, a * a),
            k * elliprd(c * c, a * a, b * b),
            k * elliprd(a * a, b * b, c * c))


def prolate_long_axis(ratio):
    e = math.sqrt(1.0 - 1.0 / ratio**2)
    return (1.0 - e * e) / e**3 * (math.atanh(e) - e)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="tests/data/ellipsoid_factors.csv")
    args = ap.parse_args()

    nx = factors(2.0, 1.0, 1.0)[0]
    assert abs(nx - prolate_long_axis(2.0)) < 1e-12, "R_D disagrees with closed form"

    with open(args.out, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["shape", "a", "b", "c", "Nx", "Ny", "Nz"])
        for name, (a, b, c) in SHAPES.items():
            n = factors(a, b, c)
            assert abs(sum(n) - 1.0) < 1e-12
            w.writerow([name, repr(a), repr(b), repr(c)] + ["%.17g" % v for v in n])


if __name__ == "__main__":
    main()
