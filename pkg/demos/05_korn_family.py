"""The Korn inequalities, flat and spherical, with their failure mode.

The first variant controls the full first-order norm by deformation plus
field norm; the second replaces the field norm with a boundary condition
and works because rigid motions never vanish on a region of positive
measure.  Dropping the field norm from the first variant leaves rigid
motions unpenalized and the pencil singular; that collapse is shown
explicitly at the end.
"""

import numpy as np

from guenterlab import geometry as geo
from guenterlab import spectra as spec
from guenterlab import verify as ver


def flat_constants():
    print("flat Korn constants on the unit square")
    print(f"{'grid':>9s} {'first variant':>14s} {'second variant':>15s}")
    for n in (9, 17, 33):
        g = geo.box_grid((n, n))
        c1 = spec.estimate_constant("KornI", g).C
        c2 = spec.estimate_constant("KornII", g).C
        print(f"{n:4d} x {n:2d} {c1:14.8f} {c2:15.8f}")
    print()


def sphere_constants():
    print("tangential Korn constants on the unit sphere")
    print(f"{'level':>5s} {'first variant':>14s} {'second variant':>15s}")
    for level in (2, 3):
        s = geo.icosphere_mesh(level)
        cap = geo.mark_region(s, lambda p: p[2] > 0.8, "subdomain")
        c1 = spec.estimate_constant("KornI_surf", s).C
        c2 = spec.estimate_constant("KornII_surf", s, {"G0": cap}).C
        print(f"{level:5d} {c1:14.8f} {c2:15.8f}")
    print()


def suite():
    g = geo.box_grid((17, 17))
    est, rep = ver.verify_constant("KornII", g, n_samples=100, seed=5)
    print(f"randomized suite for the second variant: "
          f"{'pass' if rep.passed else 'FAIL'} "
          f"(worst quotient {rep.max_ratio:.8f} vs C {est.C:.8f})")
    print()


def collapse():
    print("what the field norm is for: drop it and rigid motions win")
    g = geo.box_grid((17, 17))
    A = spec.assemble_quadratic_form("stiffness_def", g).matrix
    B = (spec.assemble_quadratic_form("vec_mass", g).matrix
         + spec.assemble_quadratic_form("vec_stiffness_grad", g).matrix)
    result = spec.smallest_eigenpairs(A.tocsr(), B.tocsr(), 4)
    with np.printoptions(precision=2):
        print(f"  smallest eigenvalues of (deformation, full first-order): "
              f"{result.values}")
    print("  three exact zeros, one for each rigid motion; the bound's")
    print("  constant would be 1/sqrt(0), so no inequality survives")


def main():
    flat_constants()
    sphere_constants()
    suite()
    collapse()


if __name__ == "__main__":
    main()
