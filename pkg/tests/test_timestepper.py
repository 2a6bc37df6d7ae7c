import numpy as np
import pytest

from dpm.errors import ConfigurationError
from dpm.timestepper import DPMSolver, SolverConfig, run, time_step


def test_time_step_rule():
    dt, steps = time_step(100, 0.04, 0.5, 1.0)
    assert steps == 50 and dt == pytest.approx(0.02)
    dt, steps = time_step(101, 0.03, 0.5, 1.0)
    assert steps == 67 and dt <= 0.5 * 0.03 and dt * steps == pytest.approx(1.0)


@pytest.mark.parametrize("kw", [dict(order=3), dict(geometry="mesh"), dict(startup="cold"), dict(n=5),
                                dict(dt_factor=0.0), dict(basis_modes=70)])
def test_config_validation(kw):
    with pytest.raises(ConfigurationError):
        SolverConfig("tp1a", **kw).validate()


def test_exact_startup_history():
    s = DPMSolver(SolverConfig("tp1a", 2, 40))
    s.initialise()
    sub = s.subs[0]
    xx, yy = sub.grid.mesh()
    m = sub.sets.m_plus
    for k in range(2):
        ref = xx**9 * yy**8 * np.exp(k * s.dt)
        np.testing.assert_allclose(sub.u_hist[k][m], ref[m], atol=1e-15)
    assert len(sub.trace_hist) == 2
    s4 = DPMSolver(SolverConfig("tp1a", 4, 40))
    s4.initialise()
    assert len(s4.subs[0].u_hist) == 4 and len(s4.subs[0].trace_hist) == 5


@pytest.mark.parametrize("order", [2, 4])
def test_neumann_coefficients_converge(order):
    errs = []
    for n in (50, 100, 200):
        s = DPMSolver(SolverConfig("tp1a", order, n, max_steps=2))
        r = s.run()
        _, b = s.exact_traces(1, s.t)
        errs.append(np.max(np.abs(r.coefficients - b[: s.n_basis])))
    slope = np.polyfit(np.log([50, 100, 200]), -np.log(errs), 1)[0]
    assert slope >= order - 0.5


def test_closure_independence_single_domain():
    # same lattice, two auxiliary boxes
    a = run(SolverConfig("tp1a", 2, 61, aux_half_width=1.5, max_steps=3))
    b = run(SolverConfig("tp1a", 2, 81, aux_half_width=2.0, max_steps=3))
    assert a.h == pytest.approx(b.h)
    assert a.error == pytest.approx(b.error, rel=1e-4)
    np.testing.assert_allclose(a.coefficients, b.coefficients, atol=1e-4 * np.max(np.abs(b.coefficients)))
    ga, gb = a.fields[1], b.fields[1]
    va = ga["numeric"][ga["mask"]]
    vb = gb["numeric"][gb["mask"]]
    assert len(va) == len(vb)
    np.testing.assert_allclose(va, vb, atol=1e-4 * np.max(np.abs(vb)))


def test_closure_independence_composite():
    a = run(SolverConfig("tp2a", 4, 81, aux_half_width=1.2, max_steps=3))
    b = run(SolverConfig("tp2a", 4, 81, aux_half_width=1.5, max_steps=3))
    assert a.error == pytest.approx(b.error, rel=1e-4)
    np.testing.assert_allclose(a.coefficients, b.coefficients, atol=1e-4 * np.max(np.abs(b.coefficients)))


def test_backends_agree():
    a = run(SolverConfig("tp2a", 2, 41, max_steps=3))
    b = run(SolverConfig("tp2a", 2, 41, max_steps=3, backend="lu"))
    assert a.error == pytest.approx(b.error, rel=1e-9)


@pytest.mark.parametrize("order", [2, 4])
def test_bootstrap_startup(order):
    exact = run(SolverConfig("tp1a", order, 60))
    boot = run(SolverConfig("tp1a", order, 60, startup="bootstrap"))
    # same size of error, both within discretisation error
    assert boot.error < 5 * exact.error


def test_run_result_fields():
    r = run(SolverConfig("tp2a", 2, 41, max_steps=2))
    assert r.n_steps == 2 and len(r.steps) == 2 and r.dof == 41**2
    assert set(r.fields) == {1, 2}
    assert r.active == sum(int(f["mask"].sum()) for f in r.fields.values())
    assert r.error == max(s.error for s in r.steps)
    assert r.blocks is not None and len(r.blocks) == 2


@pytest.mark.parametrize("order", [2, 4])
def test_implicit_geometry_matches_explicit(order):
    a = run(SolverConfig("tp2a", order, 61, max_steps=4))
    b = run(SolverConfig("tp2a", order, 61, max_steps=4, geometry="implicit"))
    assert b.active == a.active
    assert b.error == pytest.approx(a.error, rel=1e-3)
