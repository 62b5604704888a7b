import math

import numpy as np
import pytest

from slz.propagate import propagate, propagate_chain, propagate_log, wronskian

TOL = 1e-10


def test_free_sine(free):
    tr = propagate(free, 1.0, 0.0, 0.0, 1.0, math.pi / 2, tol=TOL)
    y, y1 = tr.end_values(math.pi / 2)
    assert abs(y - 1.0) < 1e-8 and abs(y1) < 1e-8


def test_harmonic_ground_state(harmonic_full):
    tr = propagate(harmonic_full, 1.0, 0.0, 1.0, 0.0, 2.0, tol=TOL)
    y, _ = tr.end_values(2.0)
    assert abs(y - math.exp(-2.0)) < 10 * TOL


def test_laguerre_constant_solution(laguerre):
    tr = propagate(laguerre, 0.0, 1.0, 1.0, 0.0, 5.0, tol=TOL)
    y, y1 = tr.end_values(5.0)
    assert abs(y - 1.0) < TOL and abs(y1) < TOL


def test_backward_and_mesh(free):
    mesh = np.linspace(0.5, 2.5, 5)
    tr = propagate(free, 4.0, 3.0, math.sin(6.0), 2 * math.cos(6.0), 0.0, tol=TOL, mesh=mesh)
    assert np.all(np.diff(tr.mesh) > 0)
    y, _ = tr.true_values()
    np.testing.assert_allclose(y, np.sin(2 * tr.mesh), atol=1e-8)


def test_complex_spectral_parameter(free):
    z = 2.0 + 1.0j
    k = np.sqrt(z)
    tr = propagate(free, z, 0.0, 0.0, 1.0, 1.0, tol=TOL)
    y, _ = tr.end_values(1.0)
    assert abs(y - np.sin(k) / k) < 1e-8


def test_logscale_keeps_growth_finite(harmonic_full):
    tr = propagate(harmonic_full, 0.0, 0.0, 1.0, 0.0, 40.0, tol=TOL)
    assert np.all(np.isfinite(tr.y)) and tr.logscale[-1] > 700


def test_out_of_range(free):
    with pytest.raises(ValueError):
        propagate(free, 1.0, 0.0, 0.0, 1.0, 4.0)


def test_wronskian_free(free):
    mesh = np.linspace(0.0, 3.0, 31)
    f = propagate(free, 1.0, 0.0, 0.0, 1.0, 3.0, tol=TOL, mesh=mesh)
    g = propagate(free, 1.0, 0.0, 1.0, 0.0, 3.0, tol=TOL, mesh=mesh)
    w = wronskian(f, g)
    assert abs(w.value + 1.0) < 1e-12 and w.drift < 1e-9
    assert abs(wronskian(f, f).value) == 0.0


def test_wronskian_harmonic(harmonic_full):
    mesh = np.linspace(0.0, 4.0, 41)
    f = propagate(harmonic_full, 1.0, 0.0, 1.0, 0.0, 4.0, tol=TOL, mesh=mesh)
    g = propagate(harmonic_full, 1.0, 0.0, 0.0, 1.0, 4.0, tol=TOL, mesh=mesh)
    w = wronskian(f, g)
    assert abs(w.value - 1.0) < 1e-12 and w.drift < 1e-8


def test_wronskian_needs_same_z(free):
    f = propagate(free, 1.0, 0.0, 0.0, 1.0, 1.0)
    g = propagate(free, 2.0, 0.0, 0.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        wronskian(f, g)


def test_chain_derivative(free):
    # second component solves (tau - z) f1 = f0, i.e. f1 = d/dz f0
    z, h = 2.0, 1e-5
    Y0 = np.array([0.0, 1.0, 0.0, 0.0])
    res = propagate_chain(free, np.array([z]), 0.0, Y0, 2.0, tol=1e-12)
    y1 = res.component(1)[-1, 0] * np.exp(res.logscale[-1, 0])
    k = lambda z: np.sin(np.sqrt(z) * 2.0) / np.sqrt(z)  # noqa: E731
    assert abs(y1 - (k(z + h) - k(z - h)) / (2 * h)) < 1e-7


def test_propagate_log_matches_linear(harmonic_full):
    log_y, v = propagate_log(harmonic_full, np.array([0.5]), 2.0, 1.0, 2.0, 8.0)
    tr = propagate(harmonic_full, 0.5, 2.0, 1.0, 2.0, 8.0, tol=1e-12)
    y, y1 = tr.end_values(8.0)
    assert abs(float(np.real(log_y[0])) - math.log(y.real)) < 1e-7
    assert abs(complex(v[0]) - y1 / y) < 1e-6 * abs(y1 / y)

