"""Partial zeta values on a string and on the harmonic oscillator.

Run: python3 demos/basel_and_oscillator.py
"""

import math

import numpy as np

from slz.eigensolve import bc_eigs, dirichlet_eigs
from slz.partialzeta import lg_xi, zeta_direct, zeta_recursive
from slz.problems import catalog_problem


def string_sums():
    free = catalog_problem("free")
    eigs = dirichlet_eigs(free, 0.0, math.pi, 60)
    print("Dirichlet string on (0, pi): eigenvalues n^2")
    print(f"  first three        {eigs.eigs[:3]}")
    table = zeta_recursive(free, 0.0, [math.pi], ell_max=2)
    for ell, exact in ((1, math.pi**2 / 6), (2, math.pi**4 / 90)):
        d = zeta_direct(eigs, ell)
        r = table(ell, math.pi)
        print(f"  zeta({ell}) direct {d:.12f}  recursive {r:.12f}  exact {exact:.12f}")


def oscillator():
    half = catalog_problem("harmonic_half")
    print("\nHalf-line oscillator truncated to (0, 8)")
    for bc in ("dirichlet", "neumann"):
        ev = bc_eigs(half, 0.0, 8.0, bc, "dirichlet", 4)
        print(f"  {bc:9s} {np.round(ev.eigs, 8)}")
    xs = [10.0, 20.0, 40.0, 80.0]
    table = zeta_recursive(half, 0.0, xs, ell_max=1)
    print("  zeta(1; (0, x)) grows like (1/2) ln x; Liouville-Green tracks it up to a constant")
    for x, z in zip(xs, table(1)):
        lg = lg_xi(half, 1, 1.0, x)
        print(f"  x = {x:5.1f}  zeta(1) = {z:.6f}  zeta - ln(x)/2 = {z - 0.5 * math.log(x):.6f}  "
              f"LG(1; (1, x)) - zeta = {lg - z:.6f}")


if __name__ == "__main__":
    string_sums()
    oscillator()
