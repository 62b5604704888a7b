import math

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from slz.charfn import HadamardProduct
from slz.convrate import total_variation
from slz.eigensolve import count_eigs_below, dirichlet_eigs
from slz.partialzeta import zeta_recursive
from slz.propagate import propagate, wronskian
from slz.speczeta import zeta_sum

SQUARES = np.arange(1, 201, dtype=float) ** 2
FAST = settings(max_examples=15, deadline=None)


@FAST
@given(st.floats(0.5, 60.0))
def test_count_matches_free_spectrum(free, lam):
    expect = sum(1 for n in range(1, 9) if n * n < lam)
    if min(abs(lam - n * n) for n in range(1, 9)) > 1e-6:
        assert count_eigs_below(free, 0.0, math.pi, "dirichlet", "dirichlet", lam) == expect


@FAST
@given(st.floats(0.5, 3.0))
def test_free_scaling(free, L):
    ev = dirichlet_eigs(free, 0.0, L, 3)
    np.testing.assert_allclose(ev.eigs, (np.arange(1, 4) * math.pi / L) ** 2, rtol=1e-8)


@FAST
@given(st.floats(0.5, 3.0))
def test_partial_zeta_of_string(free, L):
    # Dirichlet string of length L: zeta(1) = L^2 / 6, zeta(2) = L^4 / 90
    t = zeta_recursive(free, 0.0, [L], ell_max=2)
    assert math.isclose(t(1, L), L**2 / 6, rel_tol=1e-8)
    assert math.isclose(t(2, L), L**4 / 90, rel_tol=1e-8)


@FAST
@given(st.floats(0.5, 3.0), st.floats(0.1, 0.9))
def test_partial_zeta_monotone_in_x(free, L, frac):
    t = zeta_recursive(free, 0.0, [frac * L, L], ell_max=1)
    assert t(1)[0] < t(1)[1]


@FAST
@given(st.floats(0.1, 100.0), st.floats(0.6, 3.0))
def test_zeta_sum_homogeneity(a, s):
    assert math.isclose(zeta_sum(a * SQUARES, s).real, a**-s * zeta_sum(SQUARES, s).real, rel_tol=1e-10)


@FAST
@given(st.complex_numbers(max_magnitude=50.0, allow_nan=False, allow_infinity=False))
def test_hadamard_conjugate_symmetry(z):
    H = HadamardProduct(SQUARES, 0)
    a, b = H.log_value(z)[0], H.log_value(np.conj(z))[0]
    assert abs(a.real - b.real) < 1e-9 * (1 + abs(a.real))


@FAST
@given(st.integers(1, 20))
def test_hadamard_vanishes_on_zeros(k):
    H = HadamardProduct(SQUARES, 0)
    assert abs(H(float(k * k))) < 1e-9 * abs(H(k * k + 0.5))


@FAST
@given(st.floats(0.5, 40.0), st.floats(0.5, 3.0))
def test_wronskian_constant(free, z, x1):
    # oscillatory regime; growing pairs lose digits to cancellation in W
    mesh = np.linspace(0.0, x1, 9)
    f = propagate(free, z, 0.0, 0.0, 1.0, x1, mesh=mesh)
    g = propagate(free, z, 0.0, 1.0, 0.0, x1, mesh=mesh)
    w = wronskian(f, g)
    assert abs(w.value + 1.0) < 1e-12 and w.drift < 1e-8


@given(st.lists(st.floats(-1e6, 1e6), min_size=2, max_size=30))
def test_total_variation_bounds(v):
    assert total_variation(v) >= abs(v[-1] - v[0]) - 1e-6 * (1 + max(map(abs, v)))
