import math

import numpy as np
import pytest

from critlab.errors import DiscretizationError, InvalidArgumentError, UnsupportedOperatorError
from critlab.limit_periodic import DriftField
from critlab import spectral
from critlab.operators import Operator1D, make_operator
from critlab.spectral import (
    Grid,
    dirichlet_matrix,
    dirichlet_principal_eigenvalue,
    eigenvalue_sweep,
    rayleigh_quotient,
    smallest_eigenvalue,
    solve_ivp,
    sturm_count,
)
from oracles import dense_lowest, tridiagonal_lowest

LAPLACE = Operator1D(lambda x: np.zeros_like(np.asarray(x, dtype=float)), name="laplacian")


def constant(c):
    return Operator1D(lambda x: np.full_like(np.asarray(x, dtype=float), c))


def test_grid():
    g = Grid(0.0, 1.0, 11)
    assert g.h == pytest.approx(0.1) and g.interior.size == 9
    assert Grid.symmetric(2.0, 0.5).n_points == 9
    assert g.refined().h == pytest.approx(0.05)
    for bad in [(1.0, 1.0, 5), (0.0, 1.0, 2), (0.0, math.inf, 5)]:
        with pytest.raises(InvalidArgumentError):
            Grid(*bad)


def test_laplacian_unit_interval():
    res = dirichlet_principal_eigenvalue(LAPLACE, Grid(0.0, 1.0, 2001))
    assert abs(res.lam - math.pi**2) <= 1e-3
    assert res.positive and res.residual <= 1e-6
    assert np.max(res.eigenfunction) == 1.0


def test_constant_potential_shift():
    res = dirichlet_principal_eigenvalue(constant(-5.0), Grid(0.0, 1.0, 2001))
    assert abs(res.lam - (math.pi**2 + 5)) <= 1e-3


def test_matches_discrete_formula():
    # the discrete Dirichlet Laplacian has lambda = (4/h^2) sin^2(pi h / 2)
    g = Grid(0.0, 1.0, 101)
    res = dirichlet_principal_eigenvalue(LAPLACE, g)
    assert res.lam == pytest.approx(4 / g.h**2 * math.sin(math.pi * g.h / 2) ** 2, abs=2e-10)


@pytest.mark.parametrize("preset", ["ce1-sa", "ce2-sa"])
def test_against_dense_oracle(preset):
    op = make_operator(preset)
    res = dirichlet_principal_eigenvalue(op, Grid(-9.0, 9.0, 721))
    assert res.lam == pytest.approx(dense_lowest(op.potential, -9.0, 9.0, 721), abs=1e-9)
    assert res.lam == pytest.approx(tridiagonal_lowest(op.potential, -9.0, 9.0, 721), abs=1e-9)


def test_sturm_count_matches_spectrum():
    op = make_operator("ce1-sa")
    diag, off = dirichlet_matrix(op, Grid(-3.0, 3.0, 121))
    mat = np.diag(diag) + np.diag(off, 1) + np.diag(off, -1)
    ev = np.linalg.eigvalsh(mat)
    for lam in [ev[0] - 1, 0.5 * (ev[0] + ev[1]), 0.5 * (ev[4] + ev[5]), ev[-1] + 1]:
        assert sturm_count(diag.tolist(), (off * off).tolist(), lam) == int(np.sum(ev < lam))
    lo, hi = smallest_eigenvalue(diag, off)
    assert lo <= ev[0] <= hi and hi - lo <= 1e-10 * max(1, abs(ev[0]))


def test_ce1_domain_monotonicity():
    op = make_operator("ce1-sa")
    small = dirichlet_principal_eigenvalue(op, Grid.symmetric(27.0, 0.005))
    large = dirichlet_principal_eigenvalue(op, Grid.symmetric(81.0, 0.005))
    assert small.lam > 0 and large.lam > 0
    assert small.lam > large.lam


def test_non_self_adjoint_rejected():
    with pytest.raises(UnsupportedOperatorError):
        dirichlet_principal_eigenvalue(make_operator("ce1-drift"), Grid(0.0, 1.0, 11))


def test_rayleigh_quotient_of_eigenfunction():
    op = make_operator("ce1-sa")
    grid = Grid.symmetric(9.0, 0.005)
    res = dirichlet_principal_eigenvalue(op, grid)
    diag, off = dirichlet_matrix(op, grid)
    v = res.eigenfunction
    tv = diag * v
    tv[:-1] += off * v[1:]
    tv[1:] += off * v[:-1]
    assert (v @ tv) / (v @ v) == pytest.approx(res.lam, rel=1e-6)
    # the continuous quotient of the interpolant agrees up to the O(h^2) bias
    x = np.concatenate([[-9.0], res.x, [9.0]])
    vv = np.concatenate([[0.0], v, [0.0]])
    dv = np.gradient(vv, x)
    rq = rayleigh_quotient(op, lambda t: np.interp(t, x, vv), (-9.0, 9.0), 0.005,
                           dtest=lambda t: np.interp(t, x, dv))
    assert rq == pytest.approx(res.lam, rel=1e-2)


def test_laplacian_sweep():
    res = eigenvalue_sweep(LAPLACE, [1.0, 2.0, 4.0], h=0.005)
    assert np.allclose(res.lambdas, [(math.pi / (2 * r)) ** 2 for r in (1, 2, 4)], atol=1e-3)
    assert res.strictly_decreasing()


def test_ce1_sweep_positive_and_decreasing():
    res = eigenvalue_sweep(make_operator("ce1-sa"), [9.0, 27.0, 81.0, 243.0])
    assert all(p.lam > 0 and p.positive for p in res.points)
    assert res.strictly_decreasing()


def test_ce2_sweep_bounded_below():
    res = eigenvalue_sweep(make_operator("ce2-sa"), [9.0, 27.0, 81.0])
    assert min(res.lambdas) >= -1e-6 and res.strictly_decreasing()


def test_sweep_against_dense_oracle_at_small_radii():
    op = make_operator("ce1-sa")
    res = eigenvalue_sweep(op, [9.0], h=0.02)
    coarse = dense_lowest(op.potential, -9.0, 9.0, 901)
    fine = dense_lowest(op.potential, -9.0, 9.0, 1801)
    assert res.lambdas[0] == pytest.approx((4 * fine - coarse) / 3, abs=1e-9)


def test_sweep_flags_increase(monkeypatch):
    # coarse mesh on the small interval: its negative bias beats the domain effect
    monkeypatch.setattr(spectral, "default_step", lambda r: 0.2 if r < 82 else 0.005)
    with pytest.raises(DiscretizationError) as info:
        eigenvalue_sweep(make_operator("ce1-sa"), [81.0, 82.0], extrapolate=False)
    assert info.value.result is not None


def test_sweep_argument_checks():
    with pytest.raises(InvalidArgumentError):
        eigenvalue_sweep(LAPLACE, [2.0, 1.0])
    with pytest.raises(InvalidArgumentError):
        eigenvalue_sweep(LAPLACE, [1.0], h=0.0)


def test_ivp_examples():
    one = solve_ivp(LAPLACE, 0.0, 0.0, 1.0, 0.0, 3.0)
    assert np.allclose(one.u, 1.0)
    ex = solve_ivp(constant(-1.0), 0.0, 0.0, 1.0, 1.0, 5.0)
    assert np.max(np.abs(ex.u / np.exp(ex.x) - 1)) <= 1e-6


def test_ivp_ce1_ground_state():
    sol = solve_ivp(make_operator("ce1-sa"), 0.0, 0.0, 1.0, 0.0, 9.0)
    ref = np.exp(-DriftField().antiderivative(sol.x))
    assert np.max(np.abs(sol.u / ref - 1)) <= 1e-6


def test_ivp_blow_up_is_data():
    sol = solve_ivp(constant(-100.0), 0.0, 0.0, 1.0, 1.0, 100.0, 1e-2)
    assert sol.blew_up and 0 < sol.x_last < 100


def test_ivp_backwards_and_checks():
    sol = solve_ivp(constant(1.0), 0.0, 0.0, 0.0, 1.0, -2.0)
    assert sol.u[-1] == pytest.approx(math.sin(-2.0), abs=1e-9)
    with pytest.raises(InvalidArgumentError):
        solve_ivp(LAPLACE, 0.0, 0.0, 1.0, 0.0, 1.0, h=0.0)


def test_rayleigh_examples():
    rq = rayleigh_quotient(LAPLACE, lambda x: np.sin(np.pi * x), (0.0, 1.0), 1e-3,
                           dtest=lambda x: np.pi * np.cos(np.pi * x))
    assert rq == pytest.approx(math.pi**2, abs=1e-6)
    assert rayleigh_quotient(LAPLACE, lambda x: x * (1 - x), (0.0, 1.0), 1e-3) == pytest.approx(10.0, abs=1e-6)
    with pytest.raises(InvalidArgumentError):
        rayleigh_quotient(LAPLACE, lambda x: x, (0.0, 1.0), 1e-3)
    with pytest.raises(InvalidArgumentError):
        rayleigh_quotient(LAPLACE, lambda x: 0 * x, (0.0, 1.0), 1e-3)


def test_rayleigh_upper_bound_for_ce1():
    op = make_operator("ce1-sa")
    lam = dirichlet_principal_eigenvalue(op, Grid.symmetric(27.0, 0.005)).lam
    rq = rayleigh_quotient(op, lambda x: np.cos(np.pi * x / 54), (-27.0, 27.0), 0.005)
    assert rq >= lam - 1e-6
