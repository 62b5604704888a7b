import json
import math

import numpy as np
import pytest

from slz.expr import pretty
from slz.problems import (
    BoundaryCondition,
    ConfigError,
    Endpoint,
    catalog_problem,
    load_problem,
)


def test_harmonic_full_catalog():
    prob = load_problem({"problem": "harmonic_full"})
    assert (pretty(prob.p_expr), pretty(prob.q_expr), pretty(prob.r_expr)) == ("1", "x^2", "1")
    assert prob.interval == (-math.inf, math.inf)
    np.testing.assert_array_equal(prob.reference_eigs(4), [1.0, 3.0, 5.0, 7.0])


def test_laguerre_catalog():
    prob = load_problem({"problem": "laguerre", "params": {"gamma": 1}})
    x = np.array([0.5, 2.0, 7.0])
    p, q, r = prob.coefficients(x)
    np.testing.assert_allclose(p, x * np.exp(-x), rtol=1e-14)
    np.testing.assert_allclose(r, np.exp(-x), rtol=1e-14)
    assert np.all(q == 0)
    assert prob.interval == (0.0, math.inf)
    np.testing.assert_array_equal(prob.reference_eigs(3, "friedrichs"), [0.0, 1.0, 2.0])


def test_free_catalog():
    prob = load_problem({"problem": "free"})
    assert prob.interval == (0.0, math.pi)
    np.testing.assert_array_equal(prob.reference_eigs(3), [1.0, 4.0, 9.0])


def test_inline_argument_and_json_string():
    a = load_problem('{"problem": "laguerre(2)"}')
    b = catalog_problem("laguerre", gamma=2.0)
    assert a.params == b.params == {"g": 2.0}


def test_config_file(tmp_path):
    path = tmp_path / "prob.json"
    path.write_text(json.dumps({"problem": "power", "params": {"d": 2}}))
    prob = load_problem(str(path))
    assert prob.right.rank_hint == 1
    assert math.isclose(prob.q(3.0), 9.0)


def test_unknown_name():
    with pytest.raises(ConfigError, match="unknown catalog name"):
        load_problem({"problem": "nosuch"})


@pytest.mark.parametrize("cfg", [{"problem": "laguerre", "params": {"gamma": -1}},
                                 {"problem": "power", "params": {"d": 0}}])
def test_invalid_parameters(cfg):
    with pytest.raises(ConfigError):
        load_problem(cfg)


def test_custom_problem_and_positivity():
    cfg = {"expressions": {"p": "1 + x^2", "q": "x", "r": "1"}, "interval": [0, 2]}
    prob = load_problem(cfg)
    prob.check_positivity()
    with pytest.raises(ConfigError, match="p is not strictly positive"):
        load_problem({"expressions": {"p": "x - 1", "q": "0", "r": "1"}, "interval": [0, 2]})


def test_reversed_interval():
    with pytest.raises(ConfigError):
        load_problem({"expressions": {"p": "1", "q": "0", "r": "1"}, "interval": [2, 0]})


def test_endpoint_ranks():
    assert catalog_problem("airy").right.rank_hint == 1
    assert catalog_problem("power", d=4.0).right.rank_hint == 0
    assert catalog_problem("laguerre", gamma=1.0).left.kind == "limit-circle"


def test_boundary_condition_parse():
    assert BoundaryCondition.parse("N") == BoundaryCondition.neumann()
    assert BoundaryCondition.parse("robin(0.5)").alpha == 0.5
    with pytest.raises(ValueError):
        BoundaryCondition.parse("mixed")
    with pytest.raises(ValueError):
        Endpoint(0.0, "weird")


def test_log_pr_slope(laguerre):
    # d/dx ln(x e^{-2x}) = 1/x - 2
    assert math.isclose(laguerre.log_pr_slope(2.0), -1.5, rel_tol=1e-8)
