"""Fitting GSZ parameters to a Rydberg series with Broyden's secant method.

The objective maps (eps1, eps2) to a residual 2-vector: model minus
experiment for the two scalar targets picked by a level-selection strategy.
Model levels are labelled by radial node count, fixed once at the starting
point: the lowest level in ``label_window`` gets the series' first label.
"""
from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .cfm import SolverConfig, SolverError, eigenfunction, find_eigenvalues
from .potentials import GszParams, PotentialSpec
from .qdefect import RydbergSeries, quantum_defect

log = logging.getLogger(__name__)

EPS_BOUNDS = ((0.1, 50.0), (0.05, 10.0))
STRATEGIES = ("low_plus_average", "two_high", "low_and_high")


class ObjectiveError(RuntimeError):
    """The forward model could not produce the levels a strategy needs."""


class OptimizerError(RuntimeError):
    pass


@dataclass(frozen=True)
class Strategy:
    """Which levels feed the two residual components.

    ``low_plus_average``: defect of ``labels[0]`` and the mean defect over
    ``labels[1]..labels[2]``. ``two_high`` and ``low_and_high``: the two
    labelled levels.
    """

    kind: str
    labels: Tuple[int, ...]

    def __post_init__(self):
        if self.kind not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.kind!r}")
        want = 3 if self.kind == "low_plus_average" else 2
        if len(self.labels) != want:
            raise ValueError(f"{self.kind} takes {want} labels")
        if self.kind == "low_plus_average" and self.labels[1] > self.labels[2]:
            raise ValueError("average range is empty")
        if self.kind != "low_plus_average" and self.labels[0] == self.labels[1]:
            raise ValueError("the two levels must differ")

    @classmethod
    def low_plus_average(cls, k_low: int, avg_from: int, avg_to: int) -> "Strategy":
        return cls("low_plus_average", (k_low, avg_from, avg_to))

    @classmethod
    def two_high(cls, n1: int, n2: int) -> "Strategy":
        return cls("two_high", (n1, n2))

    @classmethod
    def low_and_high(cls, n_low: int, n_high: int) -> "Strategy":
        return cls("low_and_high", (n_low, n_high))

    @classmethod
    def default(cls, kind: str, series: RydbergSeries) -> "Strategy":
        lo, hi = series.n[0], series.n[-1]
        if kind == "low_plus_average":
            return cls.low_plus_average(lo, max(lo + 1, hi - 4), hi)
        if kind == "two_high":
            return cls.two_high(max(lo, hi - 2), hi)
        if kind == "low_and_high":
            return cls.low_and_high(lo, hi)
        raise ValueError(f"unknown strategy {kind!r}")

    @property
    def needed(self) -> Tuple[int, ...]:
        if self.kind == "low_plus_average":
            k, a, b = self.labels
            return tuple(sorted({k, *range(a, b + 1)}))
        return tuple(sorted(self.labels))

    def reduce(self, values: Dict[int, float]) -> np.ndarray:
        """Collapse per-level values to the two target components."""
        if self.kind == "low_plus_average":
            k, a, b = self.labels
            return np.array([values[k], float(np.mean([values[n] for n in range(a, b + 1)]))])
        return np.array([values[self.labels[0]], values[self.labels[1]]])


@dataclass(frozen=True)
class ObjectiveSpec:
    """Everything that defines the objective G(eps1, eps2).

    ``label_window`` and ``label_scan`` set the one-off spectrum used to tie
    the first series label to a node count; ``nodes_first`` skips that step.
    """

    series: RydbergSeries
    strategy: Strategy
    residual_space: str = "quantum_defect"
    solver_cfg: SolverConfig = field(default_factory=SolverConfig)
    z_nuclear: float = 18.0
    z_residual: float = 1.0
    label_window: Tuple[float, float] = (-1.5, -0.004)
    label_scan: int = 400
    scan_density: float = 6.0
    nodes_first: Optional[int] = None
    bounds: Tuple[Tuple[float, float], Tuple[float, float]] = EPS_BOUNDS

    def __post_init__(self):
        if self.residual_space not in ("quantum_defect", "energy"):
            raise ValueError(f"unknown residual space {self.residual_space!r}")
        for n in self.strategy.needed:
            self.series.index(n)

    def with_solver(self, cfg: SolverConfig) -> "ObjectiveSpec":
        return dataclasses.replace(self, solver_cfg=cfg)


class Objective:
    """Callable G(p) -> residual 2-vector with an evaluation counter."""

    def __init__(self, spec: ObjectiveSpec):
        self.spec = spec
        self.evaluations = 0
        self.failures = 0
        self.nodes_first = spec.nodes_first
        self.bounds = spec.bounds
        s = spec.series
        self.targets = spec.strategy.reduce(self._values(dict(zip(s.n, s.energies))))

    def _values(self, levels: Dict[int, float]) -> Dict[int, float]:
        if self.spec.residual_space == "energy":
            return dict(levels)
        return {n: quantum_defect(E, n) for n, E in levels.items()}

    def potential(self, p) -> PotentialSpec:
        return PotentialSpec.gsz_ion(GszParams(float(p[0]), float(p[1]), self.spec.z_nuclear,
                                               self.spec.z_residual))

    def resolve_labels(self, p) -> int:
        """Node count of the first series label at parameters ``p``."""
        if self.nodes_first is not None:
            return self.nodes_first
        spec = self.spec
        V = self.potential(p)
        sol = find_eigenvalues(V, spec.series.l, spec.label_window, spec.label_scan, spec.solver_cfg)
        if not len(sol):
            raise ObjectiveError(f"no bound level in {spec.label_window} at p={tuple(p)}")
        self.nodes_first = eigenfunction(V, spec.series.l, sol.energies[0], spec.solver_cfg).nodes
        log.debug("label n=%d tied to %d nodes", spec.series.n[0], self.nodes_first)
        return self.nodes_first

    def model_levels(self, p) -> Dict[int, float]:
        """Model energies (Ry) for every label the strategy needs."""
        spec = self.spec
        nodes0 = self.resolve_labels(p)
        n0 = spec.series.n[0]
        z = spec.z_residual
        V = self.potential(p)
        l = spec.series.l
        need = spec.strategy.needed
        nu_exp = [z / math.sqrt(-spec.series.energy(n)) for n in need]
        nu_lo, nu_hi = min(nu_exp) - 1.0, max(nu_exp) + 1.0
        for _ in range(4):
            lo = max(nu_lo, 0.2)
            n_scan = max(16, int(math.ceil(spec.scan_density * (nu_hi - lo))))
            window = (-(z / lo) ** 2, -(z / nu_hi) ** 2)
            try:
                sol = find_eigenvalues(V, l, window, n_scan, spec.solver_cfg)
                if len(sol):
                    base = eigenfunction(V, l, sol.energies[0], spec.solver_cfg).nodes
                    labels = {n0 + base - nodes0 + i: E for i, E in enumerate(sol.energies)}
                    if all(n in labels for n in need):
                        return {n: labels[n] for n in need}
            except SolverError as exc:
                log.debug("forward solve failed at p=%s: %s", tuple(p), exc)
            nu_lo -= 1.0
            nu_hi += 1.0
        raise ObjectiveError(f"levels {need} not all found at p={tuple(float(v) for v in p)}")

    def __call__(self, p) -> np.ndarray:
        self.evaluations += 1
        try:
            levels = self.model_levels(p)
        except ObjectiveError:
            self.failures += 1
            raise
        return self.spec.strategy.reduce(self._values(levels)) - self.targets


def build_objective(spec: ObjectiveSpec) -> Objective:
    return Objective(spec)


@dataclass
class OptimizationResult:
    """Outcome of a Broyden run.

    ``history`` rows are (iteration, x..., residual_norm) for the starting
    point and every accepted step.
    """

    x: np.ndarray
    residual_norm: float
    iterations: int
    jacobian_updates: int
    stage: str
    converged: bool
    history: List[tuple] = field(default_factory=list)
    message: str = ""
    diagnostics: dict = field(default_factory=dict)

    @property
    def params(self) -> GszParams:
        return GszParams(float(self.x[0]), float(self.x[1]))


def _fd_jacobian(G, x, f, rel_step, clip):
    J = np.empty((f.size, x.size))
    for i in range(x.size):
        h = rel_step * max(abs(x[i]), 1.0)
        xp = x.copy()
        xp[i] += h
        xp = clip(xp)
        if xp[i] == x[i]:
            xp[i] = x[i] - h
        J[:, i] = (G(xp) - f) / (xp[i] - x[i])
    return J


def _singular(J) -> bool:
    return not np.all(np.isfinite(J)) or np.linalg.cond(J) > 1e14


def broyden_solve(G: Callable, p0, tol: float = 1e-7, max_iter: int = 50,
                  bounds: Optional[Sequence[Tuple[float, float]]] = None,
                  fd_step: float = 1e-4, stage: str = "", max_restarts: int = 3,
                  jacobian: Optional[Callable] = None,
                  merit: Optional[Callable] = None, update: str = "broyden") -> OptimizationResult:
    """Solve G(x) = 0 by Broyden's method with a backtracking line search.

    Parameters
    ----------
    G : callable
        Maps an array to a residual array of the same length. May raise
        ``ObjectiveError``; the line search then halves the step.
    p0 : array-like or GszParams
        Starting point.
    tol : float
        Stop when the residual 2-norm is at or below this.
    bounds : sequence of (lo, hi), optional
        Box the iterates are clipped into. Defaults to ``G.bounds`` if the
        objective has one.
    fd_step : float
        Relative step of the forward-difference initial Jacobian.
    max_restarts : int
        Fresh finite-difference Jacobians allowed after a failed line search.
    jacobian : callable, optional
        Supplies the starting and restart Jacobians in place of forward
        differences.
    merit : callable, optional
        Scalar the line search must decrease, in place of 1/2 |G|^2. Use it
        when G is the gradient of a least-squares cost and ``merit`` is
        that cost.
    update : {"broyden", "refresh"}
        Rank-one secant update after each step, or a fresh ``jacobian(x)``
        (only when ``jacobian`` is given and cheap at accepted points).
    """
    if update not in ("broyden", "refresh") or (update == "refresh" and jacobian is None):
        raise ValueError("update must be 'broyden', or 'refresh' together with a jacobian")
    if isinstance(p0, GszParams):
        p0 = (p0.epsilon1, p0.epsilon2)
    x = np.asarray(p0, dtype=float).copy()
    if bounds is None:
        bounds = getattr(G, "bounds", None)
    if bounds is not None:
        lo = np.array([b[0] for b in bounds], dtype=float)
        hi = np.array([b[1] for b in bounds], dtype=float)
        clip = lambda v: np.clip(v, lo, hi)  # noqa: E731
        x = clip(x)
    else:
        clip = lambda v: v  # noqa: E731

    f = np.asarray(G(x), dtype=float)
    norm = float(np.linalg.norm(f))
    history = [(0, *x.tolist(), norm)]
    res = OptimizationResult(x.copy(), norm, 0, 0, stage, norm <= tol, history)
    if res.converged or max_iter <= 0:
        res.message = "converged at start" if res.converged else "no iterations allowed"
        return res

    def fresh_jacobian(x, f):
        if jacobian is not None:
            return np.asarray(jacobian(x), dtype=float)
        return _fd_jacobian(G, x, f, fd_step, clip)

    J = fresh_jacobian(x, f)
    if _singular(J):
        J = _fd_jacobian(G, x, f, 10 * fd_step, clip)
        if _singular(J):
            raise OptimizerError(f"finite-difference Jacobian is singular at {x.tolist()}")
    restarts = 0
    fresh = True
    it = 0
    while it < max_iter:
        it += 1
        try:
            dx = np.linalg.solve(J, -f)
        except np.linalg.LinAlgError:
            dx = np.linalg.lstsq(J, -f, rcond=None)[0]
        lam = 1.0
        phi0 = 0.5 * norm * norm if merit is None else float(merit(x))
        accepted = False
        while lam >= 1e-6:
            xn = clip(x + lam * dx)
            step = xn - x
            if np.all(step == 0):
                break
            try:
                fn = np.asarray(G(xn), dtype=float)
            except ObjectiveError:
                lam *= 0.5
                continue
            nn = float(np.linalg.norm(fn))
            if merit is None:
                ok = 0.5 * nn * nn <= phi0 * (1.0 - 2e-4 * lam)
            else:
                ok = float(merit(xn)) < phi0 or nn <= tol
            if ok:
                accepted = True
                break
            lam *= 0.5
        if not accepted:
            if not fresh and restarts < max_restarts:
                # the secant model went stale; rebuild it where we are
                restarts += 1
                J = fresh_jacobian(x, f)
                fresh = True
                continue
            res.message = "line search failed to reduce the residual"
            break
        if update == "refresh":
            J = np.asarray(jacobian(xn), dtype=float)
        else:
            y = fn - f
            J = J + np.outer(y - J @ step, step) / float(step @ step)
        res.jacobian_updates += 1
        fresh = False
        x, f, norm = xn, fn, nn
        history.append((it, *x.tolist(), norm))
        if norm <= tol:
            res.converged = True
            res.message = "converged"
            break
    else:
        res.message = "iteration budget exhausted"
    res.x = x
    res.residual_norm = norm
    res.iterations = it
    res.diagnostics["restarts"] = restarts
    res.diagnostics["evaluations"] = getattr(G, "evaluations", None)
    return res


def optimize_two_stage(spec: ObjectiveSpec, p0, stage1_tol: float = 1e-5, stage2_tol: float = 1e-7,
                       max_iter: int = 50, stage1_h: float = 0.1,
                       stage2_eps: Optional[float] = None) -> OptimizationResult:
    """Coarse fixed-step RK4 search, then an adaptive-step refinement.

    Both stages share the node labelling resolved at ``p0``. If stage 1
    fails, stage 2 starts again from ``p0``; the stage-1 result is kept in
    ``diagnostics["stage1"]`` either way.
    """
    if isinstance(p0, GszParams):
        p0 = (p0.epsilon1, p0.epsilon2)
    base = spec.solver_cfg
    cfg1 = dataclasses.replace(base, integrator="rk4", h=stage1_h)
    cfg2 = dataclasses.replace(base, integrator="adaptive",
                               eps_local=stage2_eps or base.eps_local)
    g1 = Objective(spec.with_solver(cfg1))
    nodes = g1.resolve_labels(p0)
    stage1 = None
    start = np.asarray(p0, dtype=float)
    try:
        stage1 = broyden_solve(g1, start, stage1_tol, max_iter, stage="rk4")
        if stage1.converged:
            start = stage1.x
    except (ObjectiveError, OptimizerError) as exc:
        log.warning("stage 1 failed (%s); stage 2 restarts from p0", exc)
    g2 = Objective(dataclasses.replace(spec, solver_cfg=cfg2, nodes_first=nodes))
    res = broyden_solve(g2, start, stage2_tol, max_iter, stage="adaptive")
    res.diagnostics["stage1"] = stage1
    res.diagnostics["nodes_first"] = nodes
    return res


def model_series_levels(series: RydbergSeries, p, solver_cfg: Optional[SolverConfig] = None,
                        z_nuclear: float = 18.0, nodes_first: Optional[int] = None) -> Dict[int, float]:
    """Model energy (Ry) for every label of ``series`` at parameters ``p``."""
    lo, hi = series.n[0], series.n[-1]
    if hi == lo:
        raise ValueError("need at least two levels")
    strategy = Strategy.low_plus_average(lo, lo, hi)
    spec = ObjectiveSpec(series, strategy, solver_cfg=solver_cfg or SolverConfig(),
                         z_nuclear=z_nuclear, nodes_first=nodes_first)
    return Objective(spec).model_levels(p)
