"""Spectral zeta of the Airy operator by two independent routes.

The Dirichlet problem -y'' + x y on (0, inf) has eigenvalues at the
negated zeros of Ai. Its characteristic function of minimal order has
order 3/2, so the eigenvalue series for zeta(s) converges for s > 3/2. The
script compares the direct sum with the contour integral over the
characteristic function.

Run: python3 demos/airy_spectral_zeta.py
"""

import numpy as np
from scipy import special

from slz.charfn import charfn_F0, estimate_order, exponent_of_convergence
from slz.eigensolve import dirichlet_eigs
from slz.problems import catalog_problem
from slz.speczeta import ZetaQuery, zeta_contour, zeta_sum


def main():
    airy = catalog_problem("airy")
    eigs = dirichlet_eigs(airy, 0.0, 60.0, 40)
    print("first eigenvalues   ", np.round(eigs.eigs[:4], 8))
    print("-zeros of Ai        ", np.round(-special.ai_zeros(4)[0], 8))
    print(f"exponent of convergence {exponent_of_convergence(eigs):.4f} (expected 3/2)")

    # circles up to |z| = 30 need longer truncations to settle
    F_wide = charfn_F0(airy, [80.0, 120.0, 160.0], tol=1e-4)
    print(f"order of F0 from max modulus on |z| <= 30: {estimate_order(F_wide, [10, 15, 20, 25, 30]):.3f}")
    F = charfn_F0(airy, [30.0, 40.0, 50.0])
    cache = {}
    for s in (1.8, 2.5):
        direct = zeta_sum(eigs, s)
        contour = zeta_contour(F, ZetaQuery(s), cache=cache)
        print(f"s = {s}: direct sum {direct.real:.10f}  contour {contour.value.real:.10f}  "
              f"(ray {contour.ray_part.real:+.6f}, circle {contour.circle_part.real:+.6f})")


if __name__ == "__main__":
    main()
