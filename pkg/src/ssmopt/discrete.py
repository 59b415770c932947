"""Discrete-time optimizers sharing one update kernel, plus a heavy-ball
baseline, learning-rate schedules, and a recording run loop.

Steppers are pure state transitions: they take a state and a gradient and
return a new state. One run is sequential; many runs may execute concurrently
with independent states.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .core import PresetParams, ValidationError
from .flow import Trajectory
from .core import FlowState

BIAS_MODES = ("paper", "beta", "continuous")


class InstabilityError(ValueError):
    """The sampling time is too large for the second-moment update.

    The nu update keeps nonnegativity only when 1 - delta*b2 - delta*b3 >= 0.
    """


@dataclass(frozen=True)
class StepperState:
    """Discrete optimizer state after `iter` steps.

    Arrays are not defensive copies; treat them as read-only.
    """

    x: np.ndarray
    mu: np.ndarray
    zeta: np.ndarray
    nu: np.ndarray
    iter: int = 0

    def __post_init__(self):
        for name in ("x", "mu", "zeta", "nu"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        object.__setattr__(self, "iter", int(self.iter))


def initial_stepper_state(x0, nu0=None) -> StepperState:
    """State before the first step: moments start at zero unless nu0 is given."""
    x0 = np.asarray(x0, dtype=float)
    zero = np.zeros_like(x0)
    nu = zero.copy() if nu0 is None else np.asarray(nu0, dtype=float)
    if nu.shape != x0.shape:
        raise ValueError(f"nu0 shape {nu.shape} != x0 shape {x0.shape}")
    return StepperState(x=x0, mu=zero, zeta=zero.copy(), nu=nu, iter=0)


@dataclass(frozen=True)
class LrSchedule:
    """Base learning rate scaled by multipliers from given iterations onward.

    milestones is a sequence of (iteration, multiplier) pairs with strictly
    increasing iterations and positive multipliers; all milestones at or
    before the current iteration apply cumulatively.
    """

    base_eta: float
    milestones: tuple[tuple[int, float], ...] = ()

    def __post_init__(self):
        ms = tuple((int(it), float(m)) for it, m in self.milestones)
        object.__setattr__(self, "milestones", ms)
        iters = [it for it, _ in ms]
        if any(b <= a for a, b in zip(iters, iters[1:])):
            raise ValidationError(["milestone iterations strictly increasing"])
        if any(m <= 0 for _, m in ms):
            raise ValidationError(["milestone multipliers positive"])

    def eta_at(self, iteration: int) -> float:
        eta = self.base_eta
        for it, m in self.milestones:
            if iteration >= it:
                eta = eta * m
        return eta


def _schedule_or_default(schedule: Optional[LrSchedule], preset: PresetParams) -> LrSchedule:
    return schedule if schedule is not None else LrSchedule(base_eta=preset.eta)


def bias_denominators(preset: PresetParams, iteration: int, bias_mode: str) -> tuple[float, float]:
    """Bias-correction denominators for the moment estimates at one iteration.

    paper:      1 - (1 - b1)^(k+1)          and 1 - (1 - b2)^(k+1)
    beta:       1 - (1 - delta*b1)^(k+1)    and 1 - (1 - delta*b2)^(k+1)
    continuous: 1 - (1 - b1)^(k*delta + 1)  and 1 - (1 - b2)^(k*delta + 1),
                the flow's bias factor sampled at physical time k*delta.
    """
    k = iteration
    if bias_mode == "paper":
        return 1.0 - (1.0 - preset.b1) ** (k + 1), 1.0 - (1.0 - preset.b2) ** (k + 1)
    if bias_mode == "beta":
        return (
            1.0 - (1.0 - preset.delta * preset.b1) ** (k + 1),
            1.0 - (1.0 - preset.delta * preset.b2) ** (k + 1),
        )
    if bias_mode == "continuous":
        e = k * preset.delta + 1.0
        return 1.0 - (1.0 - preset.b1) ** e, 1.0 - (1.0 - preset.b2) ** e
    raise ValueError(f"bias_mode must be one of {BIAS_MODES}, got {bias_mode!r}")


def bias_alpha(preset: PresetParams, iteration: int, bias_mode: str, c: float = 0.5) -> float:
    """Effective bias factor B1/B2^c applied to the x update at one iteration."""
    b1_corr, b2_corr = bias_denominators(preset, iteration, bias_mode)
    return b1_corr / b2_corr ** c


def _moment_step(
    state: StepperState,
    grad,
    preset: PresetParams,
    schedule: Optional[LrSchedule],
    b3: float,
    belief: bool,
    bias_mode: str,
) -> StepperState:
    """Shared update kernel of the adam-family steppers.

    Moment updates come first, then the x update uses the post-update,
    bias-corrected moments. The same code path serves all family members so
    that members that only differ by an inert parameter produce bitwise
    identical results.
    """
    delta = preset.delta
    if 1.0 - delta * preset.b2 - delta * b3 < 0.0:
        raise InstabilityError(
            "1 - delta*b2 - delta*b3 >= 0 required "
            f"(delta={delta:g}, b2={preset.b2:g}, b3={b3:g})"
        )
    g = np.asarray(grad, dtype=float)
    k = state.iter
    mu_new = (1.0 - delta * preset.b1) * state.mu + (delta * preset.b1) * g
    zeta_new = (1.0 - delta * preset.b2) * state.zeta + (delta * preset.b2) * state.nu
    if belief:
        drive = (g - mu_new) ** 2
    else:
        drive = g ** 2
    nu_new = (
        (delta * b3) * state.zeta
        + (1.0 - delta * preset.b2 - delta * b3) * state.nu
        + (delta * preset.b2) * drive
    )
    b1_corr, b2_corr = bias_denominators(preset, k, bias_mode)
    mu_hat = mu_new / b1_corr
    nu_hat = nu_new / b2_corr
    eta_k = _schedule_or_default(schedule, preset).eta_at(k)
    x_new = state.x - eta_k * (mu_hat / (np.sqrt(nu_hat) + preset.epsilon))
    return StepperState(x=x_new, mu=mu_new, zeta=zeta_new, nu=nu_new, iter=k + 1)


def step_adamssm(
    state: StepperState,
    grad,
    preset: PresetParams,
    schedule: Optional[LrSchedule] = None,
    bias_mode: str = "paper",
) -> StepperState:
    """One step of the two-state second-moment optimizer.

        mu'   = (1 - delta*b1)*mu + delta*b1*g
        zeta' = (1 - delta*b2)*zeta + delta*b2*nu
        nu'   = delta*b3*zeta + (1 - delta*b2 - delta*b3)*nu + delta*b2*g^2
        x'    = x - eta(k) * mu_hat / (sqrt(nu_hat) + epsilon)

    with mu_hat, nu_hat the bias-corrected moments (see bias_denominators for
    the three correction conventions; default "paper").
    """
    return _moment_step(state, grad, preset, schedule, preset.b3, False, bias_mode)


def step_adam(
    state: StepperState,
    grad,
    preset: PresetParams,
    schedule: Optional[LrSchedule] = None,
    bias_mode: str = "paper",
) -> StepperState:
    """One step with b3 forced to zero: zeta is carried but inert, and the
    second moment is the usual one-state exponential average of g^2."""
    return _moment_step(state, grad, preset, schedule, 0.0, False, bias_mode)


def step_adabelief(
    state: StepperState,
    grad,
    preset: PresetParams,
    schedule: Optional[LrSchedule] = None,
    bias_mode: str = "paper",
) -> StepperState:
    """One step driving the second moment with (g - mu')^2, the squared
    deviation from the post-update first moment. preset.b3 = 0 gives the
    one-state variant; b3 > 0 the two-state variant."""
    return _moment_step(state, grad, preset, schedule, preset.b3, True, bias_mode)


def step_gadagrad(
    state: StepperState,
    grad,
    c: float,
    eta: float,
    epsilon: float,
    delta: float = 1.0,
) -> StepperState:
    """One accumulator step: nu' = nu + delta*g^2, x' = x - delta*eta*g/(nu'^c + epsilon).

    No bias correction. The additive epsilon guard only matters when the
    accumulator is still zero and the gradient is zero; coordinates with a
    zero denominator take a zero step.
    """
    if not 0.0 < c < 1.0:
        raise ValidationError(["0 < c < 1"])
    g = np.asarray(grad, dtype=float)
    nu_new = state.nu + delta * (g * g)
    denom = nu_new ** c + epsilon
    direction = np.divide(g, denom, out=np.zeros_like(g), where=denom > 0)
    x_new = state.x - (delta * eta) * direction
    return StepperState(x=x_new, mu=state.mu, zeta=state.zeta, nu=nu_new, iter=state.iter + 1)


def step_sgd_momentum(state: StepperState, grad, beta: float, eta: float) -> StepperState:
    """Classical heavy-ball step: m' = beta*m + g, x' = x - eta*m'.

    The momentum buffer lives in the mu slot; beta = 0 is plain gradient
    descent.
    """
    if not 0.0 <= beta < 1.0:
        raise ValidationError(["0 <= beta < 1"])
    g = np.asarray(grad, dtype=float)
    m_new = beta * state.mu + g
    x_new = state.x - eta * m_new
    return StepperState(x=x_new, mu=m_new, zeta=state.zeta, nu=state.nu, iter=state.iter + 1)


@dataclass
class RunReport:
    """Summary of one optimization run.

    iters_to_threshold is None when the gradient-norm threshold was never
    reached. wall_time_s is measured but excluded from emitted artifacts so
    repeated runs stay byte-identical.
    """

    optimizer: str
    best_f: float
    epoch_of_best: int
    final_grad_norm: float
    iters_to_threshold: Optional[int]
    wall_time_s: float = 0.0
    diagnostics: dict = field(default_factory=dict)


Stepper = Callable[[StepperState, np.ndarray, Optional[LrSchedule]], StepperState]


def run_discrete(
    stepper: Stepper,
    objective,
    x0,
    num_iters: int,
    schedule: Optional[LrSchedule] = None,
    threshold: float = 1e-4,
    record_stride: int = 1,
    nu0=None,
    alpha_fn: Optional[Callable[[int], float]] = None,
    name: str = "run",
) -> tuple[Trajectory, RunReport]:
    """Iterate a stepper, recording the trajectory and summarizing the run.

    The trajectory's time column is the iteration count. alpha_fn, when given,
    supplies the recorded bias factor per iteration (1.0 otherwise). The
    report tracks the best objective value, the iteration that first achieved
    it, the final gradient norm, and the first iteration whose gradient norm
    fell below threshold.
    """
    if num_iters < 0:
        raise ValueError("num_iters must be nonnegative")
    t_start = time.perf_counter()
    state = initial_stepper_state(x0, nu0)

    times: list[float] = []
    states: list[FlowState] = []
    f_values: list[float] = []
    grad_norms: list[float] = []
    alpha_values: list[float] = []

    best_f = np.inf
    epoch_of_best = 0
    iters_to_threshold: Optional[int] = None
    nu_nonnegative = True
    stayed_in_box = True
    box = getattr(objective, "box", None)
    final_grad_norm = np.nan

    for k in range(num_iters + 1):
        f_k = objective.eval_f(state.x)
        g_k = objective.eval_grad(state.x)
        gnorm = float(np.linalg.norm(g_k))
        if f_k < best_f:
            best_f = f_k
            epoch_of_best = k
        if iters_to_threshold is None and gnorm < threshold:
            iters_to_threshold = k
        if np.any(state.nu < 0):
            nu_nonnegative = False
        if box is not None and np.any(np.abs(state.x) > box):
            stayed_in_box = False
        if k % record_stride == 0 or k == num_iters:
            times.append(float(k))
            states.append(
                FlowState(x=state.x, mu=state.mu, zeta=state.zeta, nu=state.nu, t=float(k))
            )
            f_values.append(f_k)
            grad_norms.append(gnorm)
            alpha_values.append(1.0 if alpha_fn is None else float(alpha_fn(k)))
        final_grad_norm = gnorm
        if k < num_iters:
            state = stepper(state, g_k, schedule)

    traj = Trajectory(
        times=np.array(times),
        states=states,
        f_values=np.array(f_values),
        grad_norms=np.array(grad_norms),
        alpha_values=np.array(alpha_values),
    )
    diagnostics = {"nu_nonnegative": nu_nonnegative}
    if box is not None:
        diagnostics["stayed_in_box"] = stayed_in_box
    report = RunReport(
        optimizer=name,
        best_f=float(best_f),
        epoch_of_best=int(epoch_of_best),
        final_grad_norm=float(final_grad_norm),
        iters_to_threshold=iters_to_threshold,
        wall_time_s=time.perf_counter() - t_start,
        diagnostics=diagnostics,
    )
    return traj, report
