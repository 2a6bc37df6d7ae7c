"""Time marching with the difference potentials method.

Each step solves the boundary equations for the unknown Cauchy coefficients
of the independent side (or the Neumann coefficients of a single domain),
reconstructs the solution on every subdomain with one auxiliary solve and
advances the BDF histories.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .auxiliary import ApSolver, DifferencePotentials
from .basis import TrigBasis, n_funcs_for, trailing_magnitude
from .bep import InterfaceCoupling, LeastSquares, assemble_block, block_rhs
from .errors import ConfigurationError
from .extension import ExtensionContext, TimeWeights, TraceJets, build_extension
from .geometry import Circle, Curve, LevelSetCurve, unit_circle_level
from .grid import (AuxiliaryGrid, GammaProjection, PointSets, StencilKind, attach_projections,
                   build_stencil_sets, check_clearance, classify_points, region_mask)
from .operators import BdfHistory, backward_weights, bdf_rhs, laplacian_matrix
from .problems import SideFunctions, TestProblem, get_problem

log = logging.getLogger(__name__)


@dataclass
class SolverConfig:
    problem: str | TestProblem
    order: int = 2
    n: int = 100
    geometry: str = "explicit"
    dt_factor: float = 0.5
    basis_modes: int = 20
    wide_modes: int = 64
    independent_side: int | None = None
    startup: str = "exact"
    backend: str = "kron"
    aux_half_width: float | None = None
    tp3a_lambda: str = "text"
    final_time: float | None = None
    max_steps: int | None = None
    rank_tol: float = 1e-10

    def resolve_problem(self) -> TestProblem:
        if isinstance(self.problem, TestProblem):
            return self.problem
        return get_problem(self.problem, self.tp3a_lambda)

    def validate(self) -> None:
        if self.order not in (2, 4):
            raise ConfigurationError(f"order must be 2 or 4, got {self.order}")
        if self.geometry not in ("explicit", "implicit"):
            raise ConfigurationError(f"geometry must be explicit or implicit, got {self.geometry!r}")
        if self.startup not in ("exact", "bootstrap"):
            raise ConfigurationError(f"startup must be exact or bootstrap, got {self.startup!r}")
        if self.n < 10:
            raise ConfigurationError("grid needs at least 10 nodes per axis")
        if self.basis_modes < 0 or self.wide_modes < self.basis_modes:
            raise ConfigurationError("need 0 <= basis_modes <= wide_modes")
        if self.dt_factor <= 0:
            raise ConfigurationError("dt_factor must be positive")


@dataclass
class Subdomain:
    side: int
    funcs: SideFunctions
    grid: AuxiliaryGrid
    sets: PointSets
    proj: GammaProjection
    physical_boundary: bool
    d_a: np.ndarray = None
    d_b: np.ndarray = None
    # sign/scale applied to wide jump data for the dependent side
    known_rule: tuple | None = None
    phi: list = field(default_factory=list)
    lap: object = None

    def jets(self, a_wide, b_wide) -> TraceJets:
        return TraceJets([p @ a_wide for p in self.phi], [p @ b_wide for p in self.phi[:3]])


@dataclass
class StepRecord:
    step: int
    t: float
    error: float
    residual: float


@dataclass
class RunResult:
    config: SolverConfig
    h: float
    dt: float
    n_steps: int
    dof: int
    active: int
    error: float
    steps: list[StepRecord]
    fields: dict
    coefficients: np.ndarray
    trailing: float
    seconds: float
    blocks: list | None = None

    @property
    def max_residual(self) -> float:
        return max((s.residual for s in self.steps), default=0.0)


def time_step(n: int, h: float, dt_factor: float, final_time: float) -> tuple[float, int]:
    """Step close to ``dt_factor * h`` that divides the final time exactly."""
    steps = max(1, math.ceil(final_time / (dt_factor * h) - 1e-9))
    return final_time / steps, steps


class DPMSolver:
    def __init__(self, config: SolverConfig):
        config.validate()
        self.config = config
        self.problem = prob = config.resolve_problem()
        self.order = config.order
        self.stencil = StencilKind.for_order(config.order)
        self.final_time = prob.final_time if config.final_time is None else config.final_time
        self._build_geometry()
        self.dt, self.n_steps = time_step(config.n, self.h, config.dt_factor, self.final_time)
        if config.max_steps is not None:
            self.n_steps = min(self.n_steps, config.max_steps)
        self._setup_basis()
        self._regime_key = None
        self._regime = None

    # setup

    def _make_curve(self, grid: AuxiliaryGrid) -> Curve:
        if self.config.geometry == "explicit":
            return Circle(radius=self.problem.radius)
        r = self.problem.radius
        return LevelSetCurve.from_function(lambda xx, yy: unit_circle_level(xx / r, yy / r), grid.x, grid.y,
                                           degree=self.order)

    def _subdomain(self, side, grid, region, physical):
        inside = region_mask(grid, self.curve, region)
        mp, mm = classify_points(grid, inside)
        sets = build_stencil_sets(grid, mp, mm, self.stencil)
        check_clearance(sets, physical)
        proj = attach_projections(sets, self.curve)
        return Subdomain(side, self.problem.side(side), grid, sets, proj, physical,
                         lap=laplacian_matrix(grid, self.stencil))

    def _build_geometry(self) -> None:
        cfg, prob = self.config, self.problem
        if prob.composite:
            g1 = AuxiliaryGrid.square(prob.domain_half_width, cfg.n)
            w = prob.inner_half_width if cfg.aux_half_width is None else cfg.aux_half_width
            g2 = g1.covering(-w, w, -w, w)
            self.h = g1.h
            self.curve = self._make_curve(g1)
            self.subs = [self._subdomain(1, g1, "outside", True), self._subdomain(2, g2, "inside", False)]
        else:
            w = prob.aux_half_width if cfg.aux_half_width is None else cfg.aux_half_width
            g = AuxiliaryGrid.square(w, cfg.n)
            self.h = g.h
            self.curve = self._make_curve(g)
            self.subs = [self._subdomain(1, g, "inside", False)]

    def _setup_basis(self) -> None:
        cfg, prob = self.config, self.problem
        nw = n_funcs_for(cfg.wide_modes)
        nb = n_funcs_for(cfg.basis_modes)
        self.wide = TrigBasis(self.curve.length, nw)
        self.n_basis = nb
        nq = max(64, 8 * nw)
        self.quad, _ = self.curve.curve_quadrature(nq)
        pad = np.zeros((nw, nb))
        pad[:nb, :nb] = np.eye(nb)
        zero = np.zeros((nw, nb))
        if prob.composite:
            indep = cfg.independent_side or prob.independent_side
            if indep not in (1, 2):
                raise ConfigurationError("independent side must be 1 or 2")
            self.indep = indep
            self.coupling = InterfaceCoupling(prob.side(1).lam(0.0), prob.side(2).lam(0.0), indep)
            if not (prob.side(1).constant_lam and prob.side(2).constant_lam):
                raise ConfigurationError("composite problems need constant coefficients")
            scale, s1, s2 = self.coupling.dependent_maps()
            for s in self.subs:
                if s.side == indep:
                    s.d_a, s.d_b = np.hstack([pad, zero]), np.hstack([zero, pad])
                else:
                    s.d_a, s.d_b = np.hstack([pad, zero]), np.hstack([zero, scale * pad])
                    s.known_rule = (s1, s2)
            self.n_unknowns = 2 * nb
        else:
            self.indep = None
            s = self.subs[0]
            s.d_a, s.d_b = np.zeros((nw, nb)), pad
            self.n_unknowns = nb
        for s in self.subs:
            s.phi = [self.wide.matrix(s.proj.theta, m) for m in range(5)]
            s.unknown_jets = TraceJets([p @ s.d_a for p in s.phi], [p @ s.d_b for p in s.phi[:3]])
            s.ctx = ExtensionContext(s.proj.distance, s.proj.kappa, s.proj.dkappa, s.proj.ddkappa, self.order)

    # known data

    def _project(self, values) -> np.ndarray:
        return self.wide.project_samples(values)

    def exact_traces(self, side: int, tt: float):
        f = self.problem.side(side)
        p, n = self.quad.position, self.quad.normal
        return self._project(f.u(p[:, 0], p[:, 1], tt)), self._project(f.normal_derivative(p, n, tt))

    def known_traces(self, sub: Subdomain, tt: float):
        nw = self.wide.n_funcs
        if not self.problem.composite:
            return self.exact_traces(sub.side, tt)[0], np.zeros(nw)
        if sub.known_rule is None:
            return np.zeros(nw), np.zeros(nw)
        mu1, mu2 = self.problem.jumps(self.quad.position, self.quad.normal, tt)
        s1, s2 = sub.known_rule
        return s1 * self._project(mu1), s2 * self._project(mu2)

    def _exact_field(self, sub: Subdomain, tt: float) -> np.ndarray:
        xx, yy = sub.grid.mesh()
        return sub.funcs.u(xx, yy, tt)

    def _ring_term(self, sub: Subdomain, tt: float) -> np.ndarray:
        """Contribution of the physical boundary values to L u on M+."""
        psi = np.where(sub.grid.ring_mask(), self._exact_field(sub, tt), 0.0)
        out = (sub.lap @ psi.ravel()).reshape(sub.grid.shape)
        return np.where(sub.sets.m_plus, out, 0.0)

    # scheme per step

    def _weights(self, level: int) -> tuple[int, TimeWeights]:
        """BDF order and trace weights for the step producing time level ``level``."""
        p = self.order
        if self.config.startup == "exact":
            q = p
            w2 = backward_weights(2, 6) if p == 4 else None
        else:
            q = min(p, level)
            w2 = None
            if p == 4 and level + 1 >= 3:
                w2 = backward_weights(2, min(6, level + 1))
        return q, TimeWeights(backward_weights(1, q + 1), w2, self.dt)

    def _regime_for(self, tt: float, q: int, tw: TimeWeights):
        lams = tuple((s.funcs.lam(tt), s.funcs.dlam(tt)) for s in self.subs)
        key = (lams, q, tuple(tw.first), None if tw.second is None else tuple(tw.second))
        if key == self._regime_key:
            return self._regime
        sigma = tw.first[0] / self.dt
        pots, mats = [], []
        for s, (lam, dlam) in zip(self.subs, lams):
            solver = ApSolver(s.grid, self.stencil, lam, sigma, self.config.backend)
            pot = DifferencePotentials(s.sets, solver)
            ext = build_extension(s.ctx, tw, lam, dlam, s.unknown_jets,
                                  TraceJets([0.0] * 5, [0.0] * 3), [TraceJets([0.0] * 5, [0.0] * 3)] * 6,
                                  {})
            pots.append(pot)
            mats.append(ext.matrix)
        blocks = [assemble_block(pot, e) for pot, e in zip(pots, mats)]
        ls = LeastSquares(np.vstack(blocks), self.config.rank_tol)
        self._regime_key, self._regime = key, (lams, pots, mats, blocks, ls)
        return self._regime

    # marching

    def initialise(self) -> None:
        cfg = self.config
        depth_grid = self.order
        depth_trace = 5 if self.order == 4 else 2
        levels = range(max(depth_grid, depth_trace)) if cfg.startup == "exact" else range(1)
        self.t = 0.0
        self.step_index = 0
        for s in self.subs:
            s.u_hist = BdfHistory(depth_grid)
            s.trace_hist = BdfHistory(depth_trace)
            s.coef_hist = BdfHistory(depth_trace)
            for k in reversed(levels):
                tk = -k * self.dt
                if k < depth_grid:
                    s.u_hist.push(np.where(s.sets.m_plus, self._exact_field(s, tk), 0.0))
                if k < depth_trace:
                    a, b = self.exact_traces(s.side, tk)
                    s.trace_hist.push(s.jets(a, b))
                    s.coef_hist.push((a, b))

    def step(self) -> StepRecord:
        level = self.step_index + 1
        tt = level * self.dt
        q, tw = self._weights(level)
        lams, pots, mats, blocks, ls = self._regime_for(tt, q, tw)
        rhs, offsets, forcing_fields, knowns = [], [], [], []
        for s, pot, (lam, dlam) in zip(self.subs, pots, lams):
            ka, kb = self.known_traces(s, tt)
            knowns.append((ka, kb))
            foot = s.proj.foot
            forcing = s.funcs.forcing_jets(foot.position, foot.normal, foot.curvature, tt)
            hist = [s.trace_hist[k] for k in range(len(s.trace_hist))]
            ext = build_extension(s.ctx, tw, lam, dlam, s.unknown_jets, s.jets(ka, kb), hist, forcing)
            xx, yy = s.grid.mesh()
            f_new = s.funcs.f(xx, yy, tt)
            F = np.where(s.sets.m_plus, bdf_rhs(s.u_hist, f_new, q, self.dt), 0.0)
            if s.physical_boundary:
                F = F - lam * self._ring_term(s, tt)
            forcing_fields.append(F)
            offsets.append(ext.offset)
            rhs.append(block_rhs(pot, F, ext.offset))
        r = np.concatenate(rhs)
        c = ls.solve(r)
        residual = ls.residual(c, r)
        err = 0.0
        for s, pot, e, k, F, (ka, kb) in zip(self.subs, pots, mats, offsets, forcing_fields, knowns):
            v = e @ c + k
            u = pot.green(F, v)
            exact = self._exact_field(s, tt)
            if s.physical_boundary:
                ring = s.grid.ring_mask()
                u[ring] = exact[ring]
            u = np.where(s.sets.n_plus, u, 0.0)
            err = max(err, float(np.max(np.abs(u - exact)[s.sets.m_plus])))
            s.u = u
            s.u_hist.push(np.where(s.sets.m_plus, u, 0.0))
            a = s.d_a @ c + ka
            b = s.d_b @ c + kb
            s.trace_hist.push(s.jets(a, b))
            s.coef_hist.push((a, b))
        self.c = c
        self.t = tt
        self.step_index = level
        return StepRecord(level, tt, err, residual)

    def run(self) -> RunResult:
        t0 = time.perf_counter()
        self.initialise()
        records = []
        for _ in range(self.n_steps):
            rec = self.step()
            records.append(rec)
            log.debug("step %d t=%.4f err=%.3e", rec.step, rec.t, rec.error)
        fields = {}
        for s in self.subs:
            fields[s.side] = {"grid": s.grid, "mask": s.sets.m_plus, "numeric": s.u,
                              "exact": self._exact_field(s, self.t)}
        nb = self.n_basis
        if self.problem.composite:
            trailing = max(trailing_magnitude(self.c[:nb]), trailing_magnitude(self.c[nb:]))
        else:
            trailing = trailing_magnitude(self.c)
        return RunResult(
            config=self.config,
            h=self.h,
            dt=self.dt,
            n_steps=self.n_steps,
            dof=self.config.n**2,
            active=int(sum(s.sets.m_plus.sum() for s in self.subs)),
            error=max((r.error for r in records), default=0.0),
            steps=records,
            fields=fields,
            coefficients=self.c,
            trailing=trailing,
            seconds=time.perf_counter() - t0,
            blocks=self._regime[3] if self._regime else None,
        )


def run(config: SolverConfig) -> RunResult:
    return DPMSolver(config).run()
