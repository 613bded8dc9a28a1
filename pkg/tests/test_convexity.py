import math

import numpy as np
import pytest

from boolflow import convexity as cv
from boolflow import kernels, scalar


def test_t_reduction_minimum():
    assert cv.t_reduction(0.5) == pytest.approx(2 * math.log(2), abs=1e-15)
    u = np.linspace(1e-4, 0.5, 1000)
    assert (np.diff(cv.t_reduction(u)) < 0).all()
    rep = cv.check_t_reduction()
    assert rep.min_margin == pytest.approx(2 * math.log(2))
    assert rep.argmin["u"] == pytest.approx(0.5, abs=1e-3)  # flat at 1/2


def test_jl_definition():
    z = np.array([0.3, 2.0, 40.0])
    assert np.allclose(kernels.jl(z), scalar.j(scalar.big_l_inv(z)), rtol=1e-13)


def test_midpoint_degenerate():
    assert cv.margin_at("jlinv-convex", {"x1": 3.0, "x2": 3.0}) == 0.0
    pt = {"x1": 1.0, "y1": 2.0, "x2": 1.0, "y2": 2.0}
    assert cv.margin_at("perspective-convex", pt) == 0.0


def test_ratio_small_x_positive():
    x = np.linspace(0.01, 0.02, 50)
    g = kernels.jl(x) / x
    assert (g[:-1] - g[1:] > 0).all()
    assert cv.margin_at("ratio-decreasing", {"x1": 0.3, "x2": 0.3}) == 0.0


def test_fb_endpoints():
    assert cv.fb(1.0) == pytest.approx(0.0, abs=1e-15)
    assert cv.fb(0.0) == 0.0
    assert cv.fb(1e-12) == pytest.approx(0.0, abs=1e-10)


def test_fb_interior_positive():
    rep = cv.check_fb_nonneg()
    assert rep.extra["interior_min"] > 0
    assert rep.classification() == "pass"


def test_z_identity():
    assert cv.z_point(0.4, 0.4) == pytest.approx(0.5)
    lhs, rhs = cv.check_z_identity(0.4, 0.4)
    assert lhs == pytest.approx(0.0, abs=1e-15) and rhs == 0.0
    lhs, rhs = cv.check_z_identity(0.7, 0.2)
    assert abs(lhs - rhs) <= 1e-12
    with pytest.raises(ValueError):
        cv.check_z_identity(0.2, 0.7)
    with pytest.raises(ValueError):
        cv.check_z_identity(1.0, 0.5)


@pytest.mark.parametrize("name", cv.CHECKS)
def test_checks_pass_and_replay(name):
    rep = cv.run(name, samples=20_000, seed=2)
    assert rep.classification() == "pass", (name, rep.min_margin)
    assert rep.min_margin >= -cv.TOLERANCE
    assert cv.margin_at(name, rep.argmin) == pytest.approx(rep.min_margin, abs=1e-15)
    out = rep.to_report()
    assert out.check_id == f"convexity:{name}"


def test_argument_errors():
    with pytest.raises(ValueError):
        cv.check_jlinv_convex(samples=0)
    with pytest.raises(ValueError):
        cv.check_ratio_decreasing(hi=200.0)
    with pytest.raises(ValueError):
        cv.log_grid(1.0, 0.5, 10)
    with pytest.raises(ValueError):
        cv.check_fb_nonneg(lo=0.0)
    with pytest.raises(ValueError):
        cv.run("unknown")
    with pytest.raises(ValueError):
        cv.margin_at("unknown", {})


def test_report_classification_tolerance():
    rep = cv.ConvexityReport("x", {}, -1e-11, {}, "grid", 1)
    assert rep.classification() == "pass"
    rep = cv.ConvexityReport("x", {}, -1e-6, {}, "grid", 1)
    assert rep.classification() == "theorem-violation"
    rep.extended_margin = 0.0
    assert rep.classification() == "noise"
