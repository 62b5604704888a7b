"""How fast truncated Laguerre eigenvalues approach their limits.

The gamma = 1 Laguerre operator on (0, inf) has eigenvalues j - 1. Cutting
the interval at x lifts them; the lift of lambda_j shrinks faster for lower
j, and ln(delta_j / delta_1) / (2 (lambda_j - lambda_1)) grows like ln x.
The script writes laguerre.csv and laguerre.gp (gnuplot) to the working
directory.

Run: python3 demos/laguerre_convergence.py
"""

import numpy as np

from slz.convrate import fig1_statistics, gnuplot_script, propconv_residual, sweep_csv, truncation_sweep
from slz.partialzeta import zeta_recursive
from slz.problems import catalog_problem


def main():
    prob = catalog_problem("laguerre", gamma=1.0)
    js = [1, 2, 4, 8]
    xs = np.geomspace(20.0, 100.0, 6)
    sweep = truncation_sweep(prob, js, xs)
    stats = fig1_statistics(sweep)
    print("gaps delta_j(x) = lambda_j(x) - (j - 1); 'asym' cells come from the first-order gap formula")
    for k, j in enumerate(js):
        cells = "  ".join(f"{d:9.3e}({m[0]})" for d, m in zip(sweep.delta[k], sweep.method[k]))
        print(f"  j={j}: {cells}")
    print("\nslope of f_j against ln x (tends to 1 as x grows)")
    for j, s in stats.slopes.items():
        print(f"  j={j}: {s:.4f}")
    print("\ng_j = -ln delta_j / ln x keeps increasing, so delta_j decays faster than any power")
    for k, j in enumerate(js):
        print(f"  j={j}: {np.round(stats.g[k], 3)}")
    table = zeta_recursive(prob, 1e-6, xs, ell_max=1, shift=-0.5)
    res = propconv_residual(sweep, 2, 4, table)
    print("\nresidual ln(delta_2/delta_4) - 2 (lambda_2 - lambda_4) zeta(1) settles slowly (about 25/x):")
    print(" ", np.round(res, 4))
    sweep_csv(sweep, stats, res, path="laguerre.csv")
    with open("laguerre.gp", "w") as fh:
        fh.write(gnuplot_script("laguerre.csv", js))
    print("\nwrote laguerre.csv and laguerre.gp")


if __name__ == "__main__":
    main()
