import cmath
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special

from slz.charfn import HadamardProduct
from slz.speczeta import ContourResult, ZetaQuery, logderiv_charfn, zeta_contour, zeta_sum

SQUARES = np.arange(1, 201, dtype=float) ** 2


@pytest.fixture(scope="module")
def free_product():
    return HadamardProduct(SQUARES, 0)


@pytest.fixture(scope="module")
def airy_product():
    return HadamardProduct(-special.ai_zeros(300)[0], 1)


def test_sum_basel_quartic():
    assert abs(zeta_sum(SQUARES, 2) - math.pi**4 / 90) < 1e-9


def test_sum_half_line_oscillator():
    lam = 4 * np.arange(200, dtype=float) + 3
    n = np.arange(1_000_000, dtype=float)
    oracle = np.sum((4 * n + 3) ** -2.0)  # missing tail ~ 6e-8
    assert abs(zeta_sum(lam, 2) - oracle) < 1e-7
    assert abs(zeta_sum(lam, 2) - special.polygamma(1, 0.75) / 16) < 1e-9


def test_sum_negative_eigenvalue_branch():
    lam = np.concatenate([[-4.0], SQUARES])
    s = 0.5 + 0.0j
    shift = zeta_sum(lam, 2.0) - zeta_sum(SQUARES, 2.0)
    assert abs(shift - 1 / 16) < 1e-12
    # lambda^s = e^{-i pi s} |lambda|^s, so the term lambda^-s is e^{i pi s} |lambda|^-s
    lam3 = np.concatenate([[-4.0], SQUARES ** 2])
    term = zeta_sum(lam3, s + 1) - zeta_sum(SQUARES ** 2, s + 1)
    assert abs(term - cmath.exp(1j * math.pi * (s + 1)) * 4.0 ** -(s + 1)) < 1e-12
    assert abs(1 / (cmath.exp(-1j * math.pi / 2) * 2.0) - cmath.exp(1j * math.pi * s) * 4.0**-s) < 1e-15


@pytest.mark.parametrize("bad", [np.concatenate([[0.0], SQUARES]), SQUARES[:10]])
def test_sum_rejects(bad):
    with pytest.raises(ValueError):
        zeta_sum(bad, 2)


def test_sum_rejects_divergent_exponent():
    with pytest.raises(ValueError):
        zeta_sum(SQUARES, 0.4)


def test_logderiv_hadamard_series(free_product):
    closed = -(math.pi / math.tanh(math.pi) - 1) / 2
    assert abs(logderiv_charfn(free_product, -1.0) - closed) < 1e-9


def test_logderiv_finite_differences():
    F = lambda z: np.sin(np.pi * np.sqrt(z)) / (np.pi * np.sqrt(z))  # noqa: E731
    z = 2.0 + 3.0j
    w = np.sqrt(z)
    exact = (np.pi * np.cos(np.pi * w) / np.sin(np.pi * w) - 1 / w) / (2 * w)
    assert abs(logderiv_charfn(F, z) - exact) < 1e-9


def test_logderiv_detects_zero():
    with pytest.raises(ZeroDivisionError):
        logderiv_charfn(lambda z: np.asarray(z) - 1.0, 1.0 + 1e-4, h=1e-3)


def test_contour_free(free_product):
    for s in (0.8, 1.5):
        r = zeta_contour(free_product, ZetaQuery(s, R=0.5))
        assert abs(r.value - zeta_sum(SQUARES, s)) < 1e-4 * abs(zeta_sum(SQUARES, s))
    r = zeta_contour(free_product, ZetaQuery(1.5, R=0.5))
    assert abs(r.value - special.zeta(3.0)) < 1e-9
    with pytest.raises(ValueError, match="smallest"):
        zeta_contour(free_product, ZetaQuery(1.5, R=1.0))


def test_contour_airy_product(airy_product):
    zeros = -special.ai_zeros(2000)[0]
    r = zeta_contour(airy_product, ZetaQuery(2.5))
    assert abs(r.value - zeta_sum(zeros, 2.5)) < 1e-3 * abs(zeta_sum(zeros, 2.5))
    assert abs(r.value - 0.21457043645) < 1e-6


def test_contour_zero_at_origin():
    H = HadamardProduct(SQUARES, 0, m0=1)
    r = zeta_contour(H, ZetaQuery(1.5, R=0.5, m0=1))
    assert abs(r.value - special.zeta(3.0)) < 1e-8


@pytest.mark.parametrize("s", [2.0, 1.0005, 3.0 + 0.0j])
def test_integer_s_refused(s):
    with pytest.raises(ValueError, match="integer"):
        ZetaQuery(s)


@pytest.mark.parametrize("kw", [{"psi": 0.4 * math.pi}, {"psi": math.pi}, {"R": 0.0}, {"m0": -1},
                                {"circle_nodes": 64}])
def test_bad_queries(kw):
    with pytest.raises(ValueError):
        ZetaQuery(1.5, **kw)


def test_order_guard(free_product):
    with pytest.raises(ValueError):
        zeta_contour(free_product, ZetaQuery(0.3))


def test_result_json(free_product, tmp_path):
    r = zeta_contour(free_product, ZetaQuery(1.5, R=0.5))
    assert isinstance(r, ContourResult)
    text = r.to_json(tmp_path / "z.json")
    data = json.loads(text)
    assert data["value_re"] == r.value.real and data["psi"] == r.psi


@settings(max_examples=6, deadline=None)
@given(psi=st.floats(0.55 * math.pi, 0.95 * math.pi), R=st.floats(0.2, 0.95),
       s=st.floats(0.7, 2.6).filter(lambda v: abs(v - round(v)) > 0.05))
def test_contour_independent_of_psi_and_radius(free_product, psi, R, s):
    base = zeta_contour(free_product, ZetaQuery(s, R=0.5))
    other = zeta_contour(free_product, ZetaQuery(s, psi=psi, R=R))
    assert abs(other.value - base.value) < 1e-6 * max(1.0, abs(base.value))
