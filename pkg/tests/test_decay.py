import math

import numpy as np
import pytest

import scalar_oracle as so
from qbd2d.decay import (
    HALF,
    NONE,
    UNRESOLVED,
    analyse,
    classify_direction,
    direct_optimum,
    f_axis,
    feasibility_witness,
    full_analysis,
    global_sup,
    hitting_rates,
    solve_optimal,
    theta_star,
    xi_direction,
)
from qbd2d.gmatrix import chi
from qbd2d.model import M1_INTERIOR, ReversedModel, scalar_model, symmetric_model
from qbd2d.regions import gamma0, gamma12_extremes, geometry

# M1 reference values computed by this package and cross-checked by the oracle tests
M1_S_STAR = 1.1833428322517097


@pytest.fixture(scope="module")
def sol1(m1):
    return full_analysis(m1, ((1, 0), (0, 1), (1, 1), (2, 1), (1, 2), (2, 2)))


@pytest.fixture(scope="module")
def sol2(m2):
    return full_analysis(m2)


def test_m1_optimum(sol1, m1):
    assert sol1.s1_star == pytest.approx(M1_S_STAR, abs=1e-10)
    assert sol1.s2_star == pytest.approx(M1_S_STAR, abs=1e-10)
    # for M1 the boundary interval is the binding constraint on both axes
    assert sol1.s1_star == pytest.approx(gamma0(m1, 1).hi, abs=1e-12)
    assert (sol1.case_axis1, sol1.case_axis2) == ("C2", "C2")
    assert sol1.h10.polynomial_factor == NONE


def test_fixed_point_residuals(sol1, sol2, m1, m2):
    for m, sol in ((m1, sol1), (m2, sol2)):
        assert abs(sol.s1_star - f_axis(m, 1, f_axis(m, 2, sol.s1_star))) <= 1e-9
        assert abs(sol.s1_star - f_axis(m, 1, sol.s2_star)) <= 1e-9
        assert abs(sol.s2_star - f_axis(m, 2, sol.s1_star)) <= 1e-9
        assert abs(sol.direct[0] - sol.s1_star) <= 1e-7
        assert abs(sol.direct[1] - sol.s2_star) <= 1e-7
        assert not sol.flags


def test_optimum_below_extremes(sol2, m2):
    _, hi1, _, hi2 = gamma12_extremes(m2)
    assert sol2.s1_star <= hi1 and sol2.s2_star <= hi2
    assert sol2.theta1_star <= hi1 + 1e-12


def test_f_axis_monotone_and_saturating(m2):
    grid = np.linspace(-1.0, 3.0, 41)
    vals = [f_axis(m2, 1, s) for s in grid]
    finite = [v for v in vals if math.isfinite(v)]
    assert all(a <= b + 1e-12 for a, b in zip(finite, finite[1:]))
    assert vals[-1] == pytest.approx(min(gamma0(m2, 1).hi, gamma12_extremes(m2)[1]))
    assert f_axis(m2, 1, -50.0) == -math.inf


def test_f_axis_without_boundary_kernel_inverts_the_lower_curve():
    m = scalar_model(M1_INTERIOR, boundary="zero")
    geo = geometry(m)
    lo1, hi1, lo2, _ = geo.extremes
    s = 0.5 * (lo2 + geo.eta(1, hi1, "lower"))  # below eta2_lower at the right extreme
    t = f_axis(m, 1, s)
    assert so.eta2(t)[0] == pytest.approx(s, abs=1e-8)
    assert t < hi1


def test_zero_boundary_kernel_gives_case_c1():
    m = scalar_model(M1_INTERIOR, boundary="zero")
    sol = analyse(m)
    lo, hi = so.theta1_extremes()
    assert sol.s1_star == pytest.approx(hi, abs=1e-10)
    assert sol.s2_star == pytest.approx(gamma12_extremes(m)[3], abs=1e-10)
    assert theta_star(m, 1) == pytest.approx(hi, abs=1e-10)
    assert (sol.case_axis1, sol.case_axis2) == ("C1", "C1")
    assert sol.h10.polynomial_factor == UNRESOLVED
    assert any("unresolved" in f for f in sol.h10.flags)


def test_symmetric_zero_boundary_model():
    m = symmetric_model()
    sol = full_analysis(m, ((1, 1),))
    assert sol.s1_star == pytest.approx(math.log(2.0), abs=1e-10)
    assert sol.s2_star == pytest.approx(sol.s1_star, abs=1e-10)
    # diagonal sup: 0.1 + 0.4 (e^t + e^-t) = 1 at t = theta_1 = theta_2
    t = math.log((2.25 + math.sqrt(2.25 ** 2 - 4)) / 2)
    rate = sol.directions[0]
    assert rate.xi == pytest.approx(2 * t, abs=1e-9)
    assert rate.binding_constraint == "interior"
    assert "condition unevaluable at branch point" in rate.form.flags
    # self-dual
    assert sol.dual.s1_star == pytest.approx(sol.s1_star, abs=1e-10)


def test_theta_star_bounded_by_extreme(m2):
    for axis in (1, 2):
        assert theta_star(m2, axis) <= gamma12_extremes(m2)[2 * axis - 1] + 1e-12


def test_direct_formula_is_clipped_sup(m1):
    assert direct_optimum(m1, 1) == pytest.approx(M1_S_STAR, abs=1e-10)


def test_feasibility_witness(m1):
    point, val = feasibility_witness(m1)
    assert val < 0
    assert point[0] in gamma0(m1, 1) and point[1] in gamma0(m1, 2)


def test_solve_optimal_from_other_start(m2, sol2):
    s1, s2, _, _ = solve_optimal(m2, start=sol2.witness[0] - 0.3)
    assert s1 == pytest.approx(sol2.s1_star, abs=1e-9)


def test_axis_directions(sol1, m1):
    assert xi_direction(m1, sol1, (1, 0)).xi == sol1.s1_star
    assert xi_direction(m1, sol1, (0, 3)).xi == pytest.approx(3 * sol1.s2_star)
    with pytest.raises(ValueError):
        xi_direction(m1, sol1, (0, 0))
    with pytest.raises(ValueError):
        xi_direction(m1, sol1, (1, -1))


def test_m1_diagonal(sol1, m1):
    rate = {r.c: r for r in sol1.directions}[(1, 1)]
    assert rate.binding_constraint == "interior"
    assert rate.form.polynomial_factor == HALF
    # argmax lies on the closed feasible set and attains xi
    t1, t2 = rate.argmax_point
    assert chi(m1, t1, t2) <= 1 + 1e-9
    assert t1 <= sol1.s1_star + 1e-12 and t2 <= sol1.s2_star + 1e-12
    assert t1 + t2 == pytest.approx(rate.xi, abs=1e-9)


def test_homogeneity_and_subadditivity(sol1, sol2, m1, m2):
    for m, sol in ((m1, sol1), (m2, sol2)):
        for c in ((1, 1), (2, 1), (1, 3)):
            a = xi_direction(m, sol, c).xi
            b = xi_direction(m, sol, (2 * c[0], 2 * c[1])).xi
            assert b == pytest.approx(2 * a, abs=2e-9)
        # each clipped sup is a sup of linear functions of c, hence subadditive
        ru, rv = xi_direction(m, sol, (1, 2)), xi_direction(m, sol, (3, 1))
        rw = xi_direction(m, sol, (4, 3))
        assert rw.sup_axis1 <= ru.sup_axis1 + rv.sup_axis1 + 1e-9
        assert rw.sup_axis2 <= ru.sup_axis2 + rv.sup_axis2 + 1e-9


def test_rates_below_unclipped_sup(sol1, sol2, m1, m2):
    for m, sol in ((m1, sol1), (m2, sol2)):
        for c in ((1, 0), (0, 1), (1, 1), (2, 1), (1, 2)):
            assert xi_direction(m, sol, c).xi <= global_sup(m, c) + 1e-9


def test_steep_direction_is_pure_exponential(sol1, m1):
    # the upper curve of M1 has slope about -2 at s1*, outside the window for c = (5, 1)
    assert geometry(m1).eta_derivative(1, sol1.s1_star, "upper") > -5
    assert classify_direction(m1, sol1, (5, 1)).polynomial_factor == NONE


def test_m2_branch_point_flag(sol2):
    rate = {r.c: r for r in sol2.directions}[(1, 1)]
    if sol2.case_axis1 == "C1":
        assert "condition unevaluable at branch point" in rate.form.flags


def test_hitting_rates_are_reflected(m2, sol2):
    dual = hitting_rates(m2)
    assert dual.s1_star == pytest.approx(sol2.dual.s1_star)
    rgeo = geometry(ReversedModel(m2))
    assert rgeo.gamma0(1).hi == pytest.approx(-gamma0(m2, 1).lo)
    rng = np.random.default_rng(0)
    for t in rng.uniform(-1, 1, size=(10, 2)):
        assert rgeo.chi(*t) == pytest.approx(chi(m2, -t[0], -t[1]), rel=1e-10)
    lo1 = gamma12_extremes(m2)[0]
    assert rgeo.extremes[1] == pytest.approx(-lo1, abs=1e-12)


def test_duality_involution(m2, sol2):
    back = analyse(geometry(m2).reflected().reflected())
    assert back.s1_star == pytest.approx(sol2.s1_star, abs=1e-10)
    assert back.s2_star == pytest.approx(sol2.s2_star, abs=1e-10)


def test_report_dict(sol1):
    d = sol1.to_dict()
    assert d["cases"] == ["C2", "C2"]
    assert {"s1_star", "s2_star", "h10", "h01", "directions", "dual"} <= set(d)
    assert d["directions"][2]["c"] == [1, 1]
