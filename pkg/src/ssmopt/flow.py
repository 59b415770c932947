"""Continuous-time optimizer flows: the generic right-hand side, named preset
flows, fixed-step integrators, and the accumulator energy-balance diagnostic.

Integration of one trajectory is strictly sequential; distinct problems may be
integrated concurrently since objective evaluation is side-effect free.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .core import (
    DomainError,
    FlowState,
    OptimizerParams,
    PresetKind,
    PresetParams,
    PsiFunction,
    PsiKind,
    alpha_g,
    initial_flow_state,
    make_psi,
    map_preset_to_general,
    validate_params,
    validate_preset,
)
from .objectives import Objective


class StepFailure(RuntimeError):
    """Integration produced a state outside the dynamics' domain.

    A nonpositive second-moment component is a hard error, not something to
    clamp: silently flooring nu would mask parameter or step-size
    misconfiguration.
    """

    def __init__(self, t: float, state: FlowState, message: str = ""):
        self.t = t
        self.state = state
        super().__init__(message or f"integration failed at t={t:g}: nu lost positivity")


class PresetMismatch(ValueError):
    """Operation requires a specific preset structure the params do not have."""


@dataclass(frozen=True)
class FlowProblem:
    """A flow to integrate: objective, validated params, and initial values."""

    objective: Objective
    params: OptimizerParams
    psi: PsiFunction
    x0: np.ndarray
    nu0: np.ndarray

    def __post_init__(self):
        x0 = np.asarray(self.x0, dtype=float)
        nu0 = np.asarray(self.nu0, dtype=float)
        if x0.shape != (self.objective.dim,):
            raise ValueError(
                f"x0 shape {x0.shape} does not match objective dimension {self.objective.dim}"
            )
        if nu0.shape != x0.shape:
            raise ValueError(f"nu0 shape {nu0.shape} != x0 shape {x0.shape}")
        if np.any(nu0 <= 0):
            raise DomainError("nu0 must be positive componentwise")
        object.__setattr__(self, "x0", x0)
        object.__setattr__(self, "nu0", nu0)


def make_flow_problem(
    objective: Objective,
    params: OptimizerParams,
    x0,
    nu0,
    psi: Optional[PsiFunction] = None,
) -> FlowProblem:
    """Assemble a FlowProblem, deriving psi from the params when not given."""
    if psi is None:
        psi = make_psi(params.psi_kind)
    return FlowProblem(objective=objective, params=params, psi=psi, x0=x0, nu0=nu0)


class StateDeriv(NamedTuple):
    """Time derivative of a FlowState, in (mu, zeta, nu, x) order."""

    dmu: np.ndarray
    dzeta: np.ndarray
    dnu: np.ndarray
    dx: np.ndarray


def rhs_general(state: FlowState, t: float, problem: FlowProblem) -> StateDeriv:
    """Right-hand side of the generic optimizer flow.

        dmu   = -lambda1*mu + lambda2*grad
        dzeta = -lambda3*zeta + lambda3*nu
        dnu   = lambda4*zeta - lambda5*nu + lambda6*psi(grad, mu)
        dx    = -(lambda7*mu + lambda8*grad) / (alpha_g(t) * nu**c)

    Requires nu > 0 componentwise.
    """
    if np.any(state.nu <= 0):
        raise DomainError(f"nu must be positive componentwise at t={t:g}")
    p = problem.params
    g = problem.objective.eval_grad(state.x)
    dmu = -p.lambda1 * state.mu + p.lambda2 * g
    dzeta = -p.lambda3 * state.zeta + p.lambda3 * state.nu
    dnu = p.lambda4 * state.zeta - p.lambda5 * state.nu + p.lambda6 * problem.psi(g, state.mu)
    dx = -(p.lambda7 * state.mu + p.lambda8 * g) / (alpha_g(t, p) * state.nu ** p.c)
    return StateDeriv(dmu=dmu, dzeta=dzeta, dnu=dnu, dx=dx)


@dataclass
class Trajectory:
    """Time-ordered states with aligned scalar series.

    times are strictly increasing; f_values, grad_norms, and alpha_values all
    share their length; every recorded state has nu >= 0 componentwise. Flow
    integrators additionally keep nu strictly positive step by step; discrete
    runs start at nu = 0, so the shared writer checks nonnegativity.
    """

    times: np.ndarray
    states: list[FlowState]
    f_values: np.ndarray
    grad_norms: np.ndarray
    alpha_values: np.ndarray

    def __len__(self) -> int:
        return len(self.times)

    def x_matrix(self) -> np.ndarray:
        return np.stack([s.x for s in self.states])

    def to_csv(self, path) -> None:
        """Write the trajectory with columns
        t, f, grad_norm, alpha, x_0.., mu_0.., zeta_0.., nu_0..

        Re-validates the time ordering and nu nonnegativity before writing.
        """
        times = np.asarray(self.times, dtype=float)
        if len(times) != len(self.states):
            raise ValueError("times and states lengths differ")
        if np.any(np.diff(times) <= 0):
            raise ValueError("times must be strictly increasing")
        d = len(self.states[0].x) if self.states else 0
        header = ["t", "f", "grad_norm", "alpha"]
        for tag in ("x", "mu", "zeta", "nu"):
            header.extend(f"{tag}_{i}" for i in range(d))
        lines = [",".join(header)]
        for k, s in enumerate(self.states):
            if np.any(s.nu < 0):
                raise ValueError(f"recorded state {k} has negative nu")
            row = [times[k], self.f_values[k], self.grad_norms[k], self.alpha_values[k]]
            row.extend(s.x)
            row.extend(s.mu)
            row.extend(s.zeta)
            row.extend(s.nu)
            lines.append(",".join(repr(float(v)) for v in row))
        with open(path, "w", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")


class _Recorder:
    """Accumulates trajectory records during integration."""

    def __init__(self, problem: FlowProblem):
        self.problem = problem
        self.times: list[float] = []
        self.states: list[FlowState] = []
        self.f_values: list[float] = []
        self.grad_norms: list[float] = []
        self.alpha_values: list[float] = []

    def record(self, state: FlowState) -> None:
        obj = self.problem.objective
        self.times.append(state.t)
        self.states.append(state)
        self.f_values.append(obj.eval_f(state.x))
        self.grad_norms.append(float(np.linalg.norm(obj.eval_grad(state.x))))
        self.alpha_values.append(alpha_g(state.t, self.problem.params))

    def build(self) -> Trajectory:
        return Trajectory(
            times=np.array(self.times),
            states=self.states,
            f_values=np.array(self.f_values),
            grad_norms=np.array(self.grad_norms),
            alpha_values=np.array(self.alpha_values),
        )


def _check_grid(dt: float, t_end: float) -> int:
    if dt <= 0:
        raise ValueError("dt must be positive")
    if t_end < dt:
        raise ValueError("t_end must be at least dt")
    return int(round(t_end / dt))


def integrate_euler(
    problem: FlowProblem, dt: float, t_end: float, record_stride: int = 1
) -> Trajectory:
    """Fixed-step forward Euler integration from t = 0.

    Records the initial state, then every record_stride-th step and the final
    step. Raises StepFailure carrying the offending state if any nu component
    becomes nonpositive.
    """
    n_steps = _check_grid(dt, t_end)
    state = initial_flow_state(problem.x0, problem.nu0)
    rec = _Recorder(problem)
    rec.record(state)
    for k in range(n_steps):
        d = rhs_general(state, state.t, problem)
        t_new = (k + 1) * dt
        state = FlowState(
            x=state.x + dt * d.dx,
            mu=state.mu + dt * d.dmu,
            zeta=state.zeta + dt * d.dzeta,
            nu=state.nu + dt * d.dnu,
            t=t_new,
        )
        if np.any(state.nu <= 0):
            raise StepFailure(t_new, state)
        if (k + 1) % record_stride == 0 or k + 1 == n_steps:
            rec.record(state)
    return rec.build()


def integrate_reference(
    problem: FlowProblem, dt: float, t_end: float, record_stride: int = 1
) -> Trajectory:
    """Classical fourth-order Runge-Kutta integration on a fixed grid.

    Serves as the in-repo ground truth for consistency checks. Error behavior
    on smooth problems is fourth order in dt. Raises StepFailure if a stage
    or a step leaves the nu > 0 domain.
    """
    n_steps = _check_grid(dt, t_end)
    state = initial_flow_state(problem.x0, problem.nu0)
    rec = _Recorder(problem)
    rec.record(state)

    def at(base: FlowState, scale: float, d: StateDeriv, t: float) -> FlowState:
        return FlowState(
            x=base.x + scale * d.dx,
            mu=base.mu + scale * d.dmu,
            zeta=base.zeta + scale * d.dzeta,
            nu=base.nu + scale * d.dnu,
            t=t,
        )

    for k in range(n_steps):
        t0 = state.t
        t_half = t0 + 0.5 * dt
        t_new = (k + 1) * dt
        try:
            k1 = rhs_general(state, t0, problem)
            k2 = rhs_general(at(state, 0.5 * dt, k1, t_half), t_half, problem)
            k3 = rhs_general(at(state, 0.5 * dt, k2, t_half), t_half, problem)
            k4 = rhs_general(at(state, dt, k3, t_new), t_new, problem)
        except DomainError as exc:
            raise StepFailure(t0, state, f"stage evaluation left the domain: {exc}") from exc
        state = FlowState(
            x=state.x + (dt / 6.0) * (k1.dx + 2.0 * k2.dx + 2.0 * k3.dx + k4.dx),
            mu=state.mu + (dt / 6.0) * (k1.dmu + 2.0 * k2.dmu + 2.0 * k3.dmu + k4.dmu),
            zeta=state.zeta + (dt / 6.0) * (k1.dzeta + 2.0 * k2.dzeta + 2.0 * k3.dzeta + k4.dzeta),
            nu=state.nu + (dt / 6.0) * (k1.dnu + 2.0 * k2.dnu + 2.0 * k3.dnu + k4.dnu),
            t=t_new,
        )
        if np.any(state.nu <= 0):
            raise StepFailure(t_new, state)
        if (k + 1) % record_stride == 0 or k + 1 == n_steps:
            rec.record(state)
    return rec.build()


_ACCUMULATOR_PATTERN = dict(lambda4=0.0, lambda5=0.0, lambda6=1.0, lambda7=0.0, lambda8=1.0)


def gadagrad_energy_residual(traj: Trajectory, problem: FlowProblem) -> np.ndarray:
    """Residual of the accumulator flow's closed-form energy balance.

    For the gadagrad mapping the objective value along the flow satisfies

        f(x(t)) = f(x(0)) + sum_i (nu_i(0)^(1-c)
                  - (nu_i(0) + int_0^t grad_i(x(s))^2 ds)^(1-c)) / (1-c),

    with nu(0) the initial accumulator value. The integral is accumulated by
    the trapezoid rule on the recorded grid (gradients are recomputed from the
    recorded iterates), and the returned series is the left side minus the
    right side at every record. Entry 0 is exactly zero.
    """
    p = problem.params
    for field_name, expected in _ACCUMULATOR_PATTERN.items():
        if getattr(p, field_name) != expected:
            raise PresetMismatch(
                f"energy residual needs the gadagrad mapping ({field_name} must be {expected})"
            )
    if p.psi_kind is not PsiKind.SQUARED_GRADIENT:
        raise PresetMismatch("energy residual needs the squared-gradient input")
    if not 0.0 < p.c < 1.0:
        raise PresetMismatch("energy residual needs c in (0, 1)")

    times = np.asarray(traj.times, dtype=float)
    grads_sq = np.stack(
        [problem.objective.eval_grad(s.x) ** 2 for s in traj.states]
    )
    nu0 = traj.states[0].nu
    # per-coordinate cumulative trapezoid of grad^2 over the recorded grid
    dt_seg = np.diff(times)[:, None]
    increments = 0.5 * dt_seg * (grads_sq[1:] + grads_sq[:-1])
    integral = np.vstack([np.zeros((1, grads_sq.shape[1])), np.cumsum(increments, axis=0)])
    one_mc = 1.0 - p.c
    closed_form = traj.f_values[0] + np.sum(
        (nu0 ** one_mc - (nu0 + integral) ** one_mc) / one_mc, axis=1
    )
    return np.asarray(traj.f_values) - closed_form


def preset_flow(kind: PresetKind, preset: PresetParams, objective: Objective, x0, nu0) -> FlowProblem:
    """Build the continuous-time flow of a named optimizer.

    Validates the preset for its kind, maps it onto the general
    parameterization, and validates the result.
    """
    validate_preset(preset, kind)
    params = validate_params(map_preset_to_general(preset, kind))
    return make_flow_problem(objective, params, x0, nu0)
