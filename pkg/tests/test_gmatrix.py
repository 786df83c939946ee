import math

import numpy as np
import pytest

import scalar_oracle as so
from qbd2d.errors import DomainError
from qbd2d.gmatrix import (
    axis_triplet,
    chi,
    eval_gf,
    g_series_bruteforce,
    g_series_oracle,
    kernel_spr,
    phi_star,
    quadratic_residual,
    solve_G,
)
from qbd2d.model import BlockModel, random_model
from qbd2d.regions import gamma0, gamma12_extremes


def scalar_chi(t1, t2):
    return 0.3 + 0.1 * math.exp(t1) + 0.2 * math.exp(-t1) + 0.1 * math.exp(t2) + 0.2 * math.exp(-t2)


def test_chi_scalar_closed_form(m1):
    assert chi(m1, 0.0, 0.0) == pytest.approx(0.9, abs=1e-14)
    for t1, t2 in [(0.3, -0.2), (-0.5, 1.0), (1.1, 0.4)]:
        assert chi(m1, t1, t2) == pytest.approx(scalar_chi(t1, t2), rel=1e-13)


def test_chi_is_log_convex_on_random_model(m2):
    rng = np.random.default_rng(1)
    for _ in range(20):
        a, b = rng.uniform(-1.5, 1.5, size=(2, 2))
        mid = (a + b) / 2
        assert chi(m2, *mid) <= math.sqrt(chi(m2, *a) * chi(m2, *b)) * (1 + 1e-12)


def test_generating_function_slices(m1):
    assert eval_gf(m1, "b12", ("row", 0), 1.0).matrix[0, 0] == pytest.approx(0.6)
    assert eval_gf(m1, "b12", ("col", 1), w=1.0).matrix[0, 0] == pytest.approx(0.1)
    assert eval_gf(m1, "b12", z=1.0, w=1.0).matrix[0, 0] == pytest.approx(0.9)


def test_scalar_G_is_the_minimal_root(m1):
    g = solve_G(m1, 1, 1.0)
    assert g.G[0, 0] == pytest.approx((0.4 - math.sqrt(0.08)) / 0.2, abs=1e-12)
    assert g.G[0, 0] == pytest.approx(so.g1(1.0), abs=1e-12)
    for x in (0.7, 1.5, 3.0):
        assert solve_G(m1, 1, x).G[0, 0] == pytest.approx(so.g1(x), abs=1e-11)


def test_G_without_upward_blocks_solves_a_linear_equation(m2):
    fam = np.array(m2.interior)
    fam[:, 2] = 0.0  # A_{i,1} = 0 for every i
    m = BlockModel(2, {"b12": fam})
    x = 1.2
    down, local, up = axis_triplet(fam, 1, x)
    assert not up.any()
    G = solve_G(m, 1, x).G
    assert np.allclose(G, np.linalg.solve(np.eye(2) - local, down), atol=1e-12)


@pytest.mark.parametrize("axis", [1, 2])
def test_G_residual_and_minimality(m2, axis):
    rng = np.random.default_rng(axis)
    g = solve_G(m2, axis, 1.0)
    down, local, up = axis_triplet(m2.interior, axis, 1.0)
    assert quadratic_residual(down, local, up, g.G) <= 1e-12
    fp = solve_G(m2, axis, 1.0, method="fixed_point")
    assert np.allclose(fp.G, g.G, atol=1e-10)
    # any solution reached from a large random start sits entry-wise above G
    for _ in range(3):
        H = rng.uniform(0.5, 3.0, size=(2, 2))
        for _ in range(20000):
            H = down + local @ H + up @ H @ H
            if not np.isfinite(H).all() or H.max() > 1e6:
                break
        else:
            assert (H >= g.G - 1e-9).all()


def test_G_outside_the_projection_raises(m1):
    lo, hi, _, _ = gamma12_extremes(m1)
    with pytest.raises(DomainError):
        solve_G(m1, 1, math.exp(hi + 0.05))
    with pytest.raises(ValueError):
        solve_G(m1, 1, -1.0)


def test_G_at_branch_point_is_flagged(m1):
    _, hi, _, _ = gamma12_extremes(m1)
    g = solve_G(m1, 1, math.exp(hi))
    assert g.endpoint
    assert g.residual <= 1e-6


def test_series_first_term(m2):
    down, _, _ = axis_triplet(m2.interior, 1, 0.8)
    assert np.array_equal(g_series_oracle(m2, 1, 0.8, 1), down)


def test_series_recursion_matches_enumeration(m1):
    for m in (m1, random_model(2, 5)):
        for n in (1, 2, 3, 6, 9):
            assert np.allclose(g_series_oracle(m, 2, 1.1, n), g_series_bruteforce(m, 2, 1.1, n),
                               rtol=1e-13, atol=0)


def test_series_scalar_three_terms(m1):
    # paths -1; (0,-1); (0,0,-1), (1,-1,-1)
    down, local, up = 0.2, 0.6, 0.1
    expected = down + local * down + local * local * down + up * down * down
    assert g_series_oracle(m1, 1, 1.0, 3)[0, 0] == pytest.approx(expected, abs=1e-15)
    assert expected <= 0.58579


def test_series_is_monotone_and_bounded(m2):
    G = solve_G(m2, 1, 1.0).G
    prev = np.zeros((2, 2))
    for n in range(1, 30):
        cur = g_series_oracle(m2, 1, 1.0, n)
        assert (cur >= prev).all()
        assert (cur <= G + 1e-12).all()
        prev = cur


def test_series_converges_to_G_with_long_paths(m2):
    """With paths of length 400 the truncated series has reached G."""
    G = solve_G(m2, 1, 1.0).G
    assert np.abs(G - g_series_oracle(m2, 1, 1.0, 400)).max() <= 1e-12


def test_bruteforce_is_capped(m1):
    with pytest.raises(ValueError):
        g_series_bruteforce(m1, 1, 1.0, 19)


def test_phi_star_scalar(m1):
    g = so.g1(1.0)
    scale = 0.9 / 0.7  # boundary weights 0.3, 0.1, 0.2, 0.1 renormalised to 0.9
    kernel = scale * 0.6 + scale * 0.1 * g
    ev = phi_star(m1, 1, 1.0)
    assert ev.kernel[0, 0] == pytest.approx(kernel, abs=1e-12)
    assert ev.matrix[0, 0] == pytest.approx(1 / (1 - kernel), abs=1e-10)


def test_phi_star_with_empty_boundary_kernel(m2):
    fam = np.array(m2.family("b1"))
    fam[:, 1:] = 0.0  # rows j = 0, 1 of the axis-1 family
    m = BlockModel(2, {"b12": m2.interior, "b1": fam})
    assert np.array_equal(phi_star(m, 1, 1.0).matrix, np.eye(2))


def test_phi_star_domain_exit_matches_gamma0(m2):
    for axis in (1, 2):
        hi = gamma0(m2, axis).hi
        assert kernel_spr(m2, axis, math.exp(hi - 1e-6)) < 1.0
        with pytest.raises(DomainError) as info:
            phi_star(m2, axis, math.exp(hi + 1e-6))
        assert info.value.value >= 1.0
