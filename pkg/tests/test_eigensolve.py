import math

import numpy as np
import pytest

from slz.eigensolve import bc_eigs, count_eigs_below, dirichlet_eigs, prufer_angle

# Deviation of the Dirichlet eigenvalues of x^2 on (-6, 6) from 2n + 1,
# from roots of the even/odd 1F1 solutions in 40-digit arithmetic.
TRUNCATED_HARMONIC_SHIFT = np.array([
    3.1e-15, 2.2e-13, 7.3e-12, 1.6e-10, 2.56e-9, 3.147e-8, 3.107e-7, 2.5274e-6, 1.72462e-5,
])


@pytest.mark.parametrize("lam, turns", [(1.0, 1.0), (4.0, 2.0), (2.25, 1.5)])
def test_prufer_angle_free(free, lam, turns):
    assert math.isclose(prufer_angle(free, lam, 0.0, math.pi), turns * math.pi, rel_tol=1e-9)


def test_count_free(free):
    assert count_eigs_below(free, 0.0, math.pi, "dirichlet", "dirichlet", 10.0) == 3
    assert count_eigs_below(free, 0.0, math.pi, "dirichlet", "dirichlet", 1.0) == 0


def test_count_harmonic(harmonic_full):
    assert count_eigs_below(harmonic_full, -6.0, 6.0, "dirichlet", "dirichlet", 10.0) == 5


def test_free_dirichlet(free):
    ev = dirichlet_eigs(free, 0.0, math.pi, 3)
    np.testing.assert_allclose(ev.eigs, [1.0, 4.0, 9.0], atol=1e-8)
    np.testing.assert_array_equal(ev.n_zeros, [0, 1, 2])


def test_free_neumann(free):
    ev = bc_eigs(free, 0.0, math.pi, "neumann", "neumann", 3)
    np.testing.assert_allclose(ev.eigs, [0.0, 1.0, 4.0], atol=1e-8)


def test_free_robin(free):
    # y + y' = 0 at 0: ground state -kappa^2 with tanh(kappa pi) = kappa,
    # then k^2 with tan(k pi) = k
    ev = bc_eigs(free, 0.0, math.pi, f"robin({math.pi / 4})", "dirichlet", 2)
    kappa = math.sqrt(-ev.eigs[0])
    k = math.sqrt(ev.eigs[1])
    assert abs(math.tanh(kappa * math.pi) - kappa) < 1e-8
    assert abs(math.tan(k * math.pi) - k) < 1e-7


def test_harmonic_truncated(harmonic_full):
    ev = dirichlet_eigs(harmonic_full, -6.0, 6.0, 4)
    np.testing.assert_allclose(ev.eigs, [1.0, 3.0, 5.0, 7.0], atol=1e-6)


def test_harmonic_truncated_against_oracle(harmonic_full):
    ev = dirichlet_eigs(harmonic_full, -6.0, 6.0, 9, tol=1e-12)
    exact = 2 * np.arange(9) + 1 + TRUNCATED_HARMONIC_SHIFT
    np.testing.assert_allclose(ev.eigs, exact, rtol=0, atol=2e-9)


@pytest.mark.parametrize("bc, first", [("dirichlet", 3.0), ("neumann", 1.0)])
def test_harmonic_half(harmonic_half, bc, first):
    ev = bc_eigs(harmonic_half, 0.0, 8.0, bc, "dirichlet", 3)
    np.testing.assert_allclose(ev.eigs, first + 4 * np.arange(3), atol=1e-6)


def test_laguerre_friedrichs(laguerre):
    ev = dirichlet_eigs(laguerre, 1e-6, 40.0, 3)
    assert ev.bc_left.kind == "friedrichs"
    np.testing.assert_allclose(ev.eigs, [0.0, 1.0, 2.0], atol=1e-4)


def test_weyl_asymptotics(free, harmonic_full):
    ev = dirichlet_eigs(free, 0.0, math.pi, 50)
    assert abs(ev.eigs[-1] * (ev.weyl_length / (50 * math.pi)) ** 2 - 1) < 0.05
    ev = dirichlet_eigs(harmonic_full, -6.0, 6.0, 50)
    assert abs(ev.eigs[-1] * (ev.weyl_length / (50 * math.pi)) ** 2 - 1) < 0.15


def test_csv_round_trip(free, tmp_path):
    ev = dirichlet_eigs(free, 0.0, math.pi, 3)
    text = ev.to_csv(tmp_path / "e.csv")
    assert (tmp_path / "e.csv").read_text() == text
    assert text.splitlines()[0].startswith("j,lambda")


def test_rejects_bad_input(free):
    with pytest.raises(ValueError):
        dirichlet_eigs(free, 0.0, math.pi, 0)
    with pytest.raises(ValueError):
        dirichlet_eigs(free, 2.0, 1.0, 3)
