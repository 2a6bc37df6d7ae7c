import numpy as np
import pytest
import sympy as sp

from dpm.basis import TrigBasis
from dpm.bep import InterfaceCoupling, LeastSquares, couple_interface, single_domain_bep, solve_bep
from dpm.errors import IllPosedBasisError
from dpm.geometry import Circle
from dpm.problems import _composite, _single, get_problem, t, x, y
from dpm.timestepper import DPMSolver, SolverConfig, run


def test_dependent_maps():
    assert InterfaceCoupling(10, 1, 2).dependent_maps() == (0.1, 1.0, 0.1)
    assert InterfaceCoupling(1000, 1, 1).dependent_maps() == (1000.0, -1.0, -1.0)
    with pytest.raises(ValueError):
        InterfaceCoupling(1, 1, 3).dependent_maps()


@pytest.mark.parametrize("pid", ["tp2a", "tp2c"])
@pytest.mark.parametrize("indep", [1, 2])
def test_couple_interface_reproduces_exact_traces(pid, indep):
    prob = get_problem(pid)
    cp, _ = Circle().curve_quadrature(256)
    basis = TrigBasis(2 * np.pi, 41)
    tt = 0.37
    p, n = cp.position, cp.normal
    exact = {s: (basis.project_samples(prob.side(s).u(p[:, 0], p[:, 1], tt)),
                 basis.project_samples(prob.side(s).normal_derivative(p, n, tt))) for s in (1, 2)}
    mu1, mu2 = (basis.project_samples(m) for m in prob.jumps(p, n, tt))
    c1, c2 = prob.side(1).lam(tt), prob.side(2).lam(tt)
    (a1, b1), (a2, b2) = couple_interface(exact[indep], InterfaceCoupling(c1, c2, indep), mu1, mu2)
    scale = max(1.0, np.max(np.abs(np.concatenate(exact[3 - indep]))))
    for got, ref in zip((a1, b1, a2, b2), exact[1] + exact[2]):
        np.testing.assert_allclose(got, ref, atol=1e-10 * scale)


def test_tp2c_jump_trace():
    prob = get_problem("tp2c")
    th = np.linspace(0, 6, 9)
    p = np.stack([np.cos(th), np.sin(th)], axis=-1)
    mu1, _ = prob.jumps(p, p, 0.3)
    np.testing.assert_allclose(mu1, -1000 * np.sin(3.0) * np.cos(th) ** 4 * np.sin(th) ** 5, atol=1e-10)


def test_least_squares():
    rng = np.random.default_rng(0)
    a = rng.standard_normal((40, 6)) * np.array([1, 1e3, 1e-3, 1, 1, 1])
    c = rng.standard_normal(6)
    ls = LeastSquares(a)
    np.testing.assert_allclose(ls.solve(a @ c), c, rtol=1e-9)
    assert ls.residual(c, a @ c) < 1e-10
    got, res = solve_bep([a[:20], a[20:]], [a[:20] @ c, a[20:] @ c])
    np.testing.assert_allclose(got, c, rtol=1e-9)
    bad = np.hstack([a, a[:, :1]])
    with pytest.raises(IllPosedBasisError):
        LeastSquares(bad)
    with pytest.raises(IllPosedBasisError):
        LeastSquares(np.hstack([a, np.zeros((40, 1))]))


def test_single_domain_bep_moves_known_columns():
    rng = np.random.default_rng(1)
    a = rng.standard_normal((30, 8))
    c = rng.standard_normal(8)
    got, res = single_domain_bep(a, a @ c, c[:3])
    np.testing.assert_allclose(got, c[3:], rtol=1e-10)
    assert res < 1e-10


# Discrete-exactness checks: with data the stencils differentiate exactly, the
# scheme reproduces the exact solution up to round-off.

QUAD = (1 + t + t**2) * (x**2 - 2 * x * y + y**2 / 2 + x + 1)
QUART = (1 + t + t**2) * (x**4 + x**3 * y - 2 * x * y**2 + y**4 + x + 1)


def test_single_domain_exact_order_two():
    res = run(SolverConfig(_single("m2", "quadratic", QUAD, 1), 2, 24, max_steps=3, basis_modes=6))
    assert res.error < 1e-11
    assert res.max_residual < 1e-9


def test_single_domain_exact_order_four_time_dependent_lambda():
    prob = _single("m4", "quartic", QUART, sp.Rational(11, 10) + sp.sin(3 * t))
    res = run(SolverConfig(prob, 4, 30, max_steps=3, basis_modes=6, aux_half_width=1.5))
    assert res.error < 1e-11


@pytest.mark.parametrize("indep", [1, 2])
@pytest.mark.parametrize("order", [2, 4])
def test_composite_exact(order, indep):
    if order == 2:
        u1 = (1 + t + t**2) * (x * y + y**2 - x**2 + 2)
        u2 = (1 + t + t**2) * (x**2 - 3 * x * y + y + 1)
    else:
        u1 = (1 + t + t**2) * (x**3 * y + y**4 - x**2 + 2)
        u2 = (1 + t + t**2) * (x**4 - 3 * x * y**3 + y + 1)
    prob = _composite("mc", "composite", u1, u2, 7, 2, indep)
    res = run(SolverConfig(prob, order, 40, max_steps=3, basis_modes=6))
    assert res.error < 1e-10


def test_exact_data_satisfies_boundary_equations():
    # exact Cauchy coefficients of a discrete solution make the BEP residual vanish
    s = DPMSolver(SolverConfig(_single("m2", "quadratic", QUAD, 1), 2, 24, basis_modes=6))
    s.initialise()
    _, tw = s._weights(1)
    lams, pots, mats, blocks, ls = s._regime_for(s.dt, 2, tw)
    rec = s.step()
    _, b = s.exact_traces(1, s.dt)
    c_exact = b[: s.n_basis]
    np.testing.assert_allclose(s.c, c_exact, atol=1e-11)
    assert rec.residual < 1e-9


def test_basis_enlargement_is_stable():
    prob = _single("m2", "quadratic", QUAD, 1)
    a = run(SolverConfig(prob, 2, 24, max_steps=2, basis_modes=4))
    b = run(SolverConfig(prob, 2, 24, max_steps=2, basis_modes=8))
    np.testing.assert_allclose(b.coefficients[: len(a.coefficients)], a.coefficients, atol=1e-8)
    assert np.max(np.abs(b.coefficients[len(a.coefficients):])) < 1e-8
