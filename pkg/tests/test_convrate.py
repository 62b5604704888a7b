import math

import numpy as np
import pytest

from slz.convrate import (
    asymptotic_gap,
    fig1_statistics,
    gnuplot_script,
    product_decreasing,
    propconv_residual,
    sweep_csv,
    total_variation,
    truncation_sweep,
)
from slz.partialzeta import zeta_recursive

XS = np.array([20.0, 40.0, 100.0])
JS = [1, 2, 4, 8]

# delta_j(x) = lambda_j(x) - (j - 1) for the gamma = 1 Laguerre problem with
# the Friedrichs condition at 0, from roots of 1F1(-lambda; 1; x) in 40-digit
# arithmetic. None marks cells not frozen.
GAP_ORACLE = {
    1: [3.90386412e-8, 1.65570637e-16, 3.68249154e-42],
    2: [1.24011642e-5, 2.38174566e-13, None],
    4: [0.0140833, 9.62258045e-9, None],
    8: [1.6508163, None, 4.281083545e-22],
}
# ln(delta_2 / delta_4) - 2 (lambda_2 - lambda_4) zeta_{-1/2}(1; (0, x)) with
# eigenvalues measured from -1/2, same oracle route.
RESIDUAL_ORACLE = {20.0: 12.587672, 40.0: 11.899608, 100.0: 11.606121}


@pytest.fixture(scope="module")
def sweep(laguerre):
    return truncation_sweep(laguerre, JS, XS)


@pytest.fixture(scope="module")
def zeta_table(laguerre):
    return zeta_recursive(laguerre, 1e-6, XS, ell_max=1, shift=-0.5)


def test_gaps_against_oracle(sweep):
    for j, row in GAP_ORACLE.items():
        k = sweep.row(j)
        for i, expect in enumerate(row):
            if expect is not None:
                assert math.isclose(sweep.delta[k, i], expect, rel_tol=1e-4), (j, XS[i])


def test_limits_and_methods(sweep):
    np.testing.assert_array_equal(sweep.lam_limit, [0.0, 1.0, 3.0, 7.0])
    assert sweep.limit_source == "reference"
    assert sweep.method[sweep.row(1), 2] == "asym"
    assert sweep.method[sweep.row(8), 0] == "eig"


def test_eigenvalues_approach_from_above(sweep):
    assert np.all(sweep.delta > 0)
    assert np.all(np.diff(sweep.log_delta, axis=1) < 0)


def test_lower_eigenvalues_converge_faster(sweep):
    assert np.all(np.diff(sweep.log_delta, axis=0) > 0)


def test_asymptotic_gap_direct(laguerre):
    ld = asymptotic_gap(laguerre, 1.0, [40.0], 1e-6)
    assert math.isclose(math.exp(ld[0]), 2.38174566e-13, rel_tol=1e-5)
    with pytest.raises(ValueError, match="anchor"):
        asymptotic_gap(laguerre, 7.0, [1.0], 1e-6)


def test_free_string_scaling(free):
    xs = np.array([1.0, 2.0, 3.0])
    sw = truncation_sweep(free, [1, 2], xs)
    np.testing.assert_allclose(sw.lam[0], (math.pi / xs) ** 2, rtol=1e-9)
    np.testing.assert_allclose(sw.lam[1], (2 * math.pi / xs) ** 2, rtol=1e-9)


def test_symmetric_harmonic(harmonic_full):
    sw = truncation_sweep(harmonic_full, [1, 2], [4.0, 5.0, 6.0])
    assert sw.symmetric
    np.testing.assert_allclose(sw.lam[:, 0], [1.0, 3.0], atol=1e-4)
    np.testing.assert_allclose(sw.lam[:, -1], [1.0, 3.0], atol=1e-9)
    # gaps below the noise floor are not reported
    assert sw.method[0, -1] == "floor" and np.isnan(sw.log_delta[0, -1])


def test_sweep_grid_checks(laguerre):
    with pytest.raises(ValueError):
        truncation_sweep(laguerre, [0], XS)
    with pytest.raises(ValueError):
        truncation_sweep(laguerre, [1], XS[::-1])


def test_fig1_statistics(sweep):
    st = fig1_statistics(sweep)
    assert np.all(np.isnan(st.f[0]))
    assert np.all(np.diff(st.f[1:], axis=1) > 0)
    assert np.all(np.diff(st.g, axis=1) > 0)
    # exact two-point slope of f_8 against ln x between 20 and 100
    f8 = st.f[sweep.row(8)]
    slope = (f8[2] - f8[0]) / math.log(5.0)
    assert abs(slope - 1.2711774) < 1e-5


def test_fig1_needs_ground_state(laguerre):
    sw = truncation_sweep(laguerre, [2], [20.0, 30.0])
    with pytest.raises(ValueError):
        fig1_statistics(sw)


def test_propconv_residual(sweep, zeta_table):
    res = propconv_residual(sweep, 2, 4, zeta_table)
    np.testing.assert_allclose(res, [RESIDUAL_ORACLE[x] for x in XS], atol=2e-5)


def test_propconv_guard(sweep, zeta_table):
    with pytest.raises(ValueError):
        propconv_residual(sweep, 2, 2, zeta_table)


@pytest.mark.parametrize("j", [1, 2, 4])
@pytest.mark.parametrize("K", [2, 5, 10])
def test_superpolynomial_decay(sweep, j, K):
    assert product_decreasing(sweep, j, K)


def test_total_variation():
    assert total_variation([1.0, 3.0, 2.0, np.nan, 2.5]) == 3.5
    assert total_variation([4.0]) == 0.0


def test_csv_and_gnuplot(sweep, tmp_path):
    text = sweep_csv(sweep, fig1_statistics(sweep), path=tmp_path / "s.csv")
    rows = text.splitlines()
    assert rows[0] == "x,j,lambda,log_delta,method,f_j,g_j,residual"
    assert len(rows) == 1 + len(JS) * XS.size
    gp = gnuplot_script("s.csv", JS)
    assert "'s.csv'" in gp and "$2==8" in gp
