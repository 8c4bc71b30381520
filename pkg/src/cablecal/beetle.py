"""Beetle antennae search (BAS) and its quadratic-interpolated variant (QIBAS).

A single "beetle" probes the objective at two antenna tips placed along a
random unit direction and steps away from the worse tip. QIBAS additionally
fits, per coordinate, a parabola through the two tips and the best point found
so far, and greedily accepts the parabola vertex when it beats the BAS move.

Both variants minimize over a box; every position is clamped to the box.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidArgumentError, OptimizerAbort

BAS = "BAS"
QIBAS = "QIBAS"


@dataclass
class BeetleConfig:
    """Optimizer settings.

    Step and antenna lengths decay as ``x <- decay * x + floor`` each
    iteration unless ``constant_steps`` is set. Unset lengths default to
    fractions of the mean box width ``w``: ``delta0 = 0.1 w``,
    ``m0 = 0.5 delta0``, floors ``1e-4 w``.
    """

    bounds: np.ndarray
    delta0: float | None = None
    m0: float | None = None
    mu: float = 0.95
    tau: float = 0.95
    delta_floor: float | None = None
    m_floor: float | None = None
    v0: float = 1e-10
    max_iters: int = 1000
    seed: int = 0
    rel_tol: float = 1e-12
    patience: int = 50
    constant_steps: bool = False

    def __post_init__(self):
        b = np.array(self.bounds, dtype=float)
        if b.ndim != 2 or b.shape[1] != 2 or len(b) == 0:
            raise InvalidArgumentError("bounds must have shape (k, 2)")
        if not np.all(b[:, 0] < b[:, 1]):
            raise InvalidArgumentError("each bound needs lo < hi")
        self.bounds = b
        width = float(np.mean(b[:, 1] - b[:, 0]))
        if self.delta0 is None:
            self.delta0 = 0.1 * width
        if self.m0 is None:
            self.m0 = 0.5 * self.delta0
        if self.delta_floor is None:
            self.delta_floor = 1e-4 * width
        if self.m_floor is None:
            self.m_floor = 1e-4 * width
        if not (0 < self.mu < 1 and 0 < self.tau < 1):
            raise InvalidArgumentError("mu and tau must lie in (0, 1)")
        if min(self.delta_floor, self.m_floor, self.v0) <= 0:
            raise InvalidArgumentError("delta_floor, m_floor and v0 must be positive")
        if self.delta0 <= 0 or self.m0 <= 0:
            raise InvalidArgumentError("delta0 and m0 must be positive")
        if self.max_iters < 0 or self.patience < 1:
            raise InvalidArgumentError("max_iters must be >= 0 and patience >= 1")

    @property
    def dims(self):
        return len(self.bounds)


@dataclass(frozen=True)
class TraceRow:
    iteration: int
    best_value: float
    evaluations: int
    wall_ms: float


@dataclass
class OptimizerState:
    position: np.ndarray
    value: float
    best_position: np.ndarray
    best_value: float
    step: float
    antenna: float
    rng: np.random.Generator
    iteration: int = 0
    evaluations: int = 0
    trace: list = field(default_factory=list)
    t_start: float = field(default_factory=time.perf_counter)


def init_state(f, config: BeetleConfig, init) -> OptimizerState:
    x = np.array(init, dtype=float)
    if x.shape != (config.dims,):
        raise InvalidArgumentError(f"init must have {config.dims} entries")
    lo, hi = config.bounds.T
    if np.any(x < lo) or np.any(x > hi):
        raise InvalidArgumentError("init lies outside the bounds")
    state = OptimizerState(position=x, value=np.nan, best_position=x.copy(), best_value=np.nan,
                           step=float(config.delta0), antenna=float(config.m0),
                           rng=np.random.default_rng(config.seed))
    state.value = state.best_value = _evaluate(f, x, state)
    return state


def _evaluate(f, x, state):
    value = f(x)
    state.evaluations += 1
    value = float(value)
    if not np.isfinite(value):
        raise OptimizerAbort(f"objective returned {value} at {x!r}", point=x.copy())
    return value


def random_direction(k, rng) -> np.ndarray:
    """Isotropic random unit vector in k dimensions."""
    if k < 1:
        raise InvalidArgumentError("direction needs k >= 1")
    while True:
        v = rng.standard_normal(k)
        norm = np.linalg.norm(v)
        if norm > 0:
            return v / norm


def antenna_points(eta, m, b):
    """Right and left antenna tips ``eta +/- m b``."""
    if m <= 0:
        raise InvalidArgumentError("antenna length must be positive")
    eta = np.asarray(eta, dtype=float)
    b = np.asarray(b, dtype=float)
    return eta + m * b, eta - m * b


def decay_update(step, antenna, config: BeetleConfig):
    if config.constant_steps:
        return step, antenna
    return config.mu * step + config.delta_floor, config.tau * antenna + config.m_floor


def quadratic_vertex(x1, x2, x3, f1, f2, f3, v0):
    """Stationary point of the parabola through (x1, f1), (x2, f2), (x3, f3).

    ``v0`` keeps the denominator away from zero. Returns ``(vertex, degenerate)``,
    where ``degenerate`` flags a denominator below ``10 * v0`` in magnitude
    (collinear points or equal fitness), i.e. a vertex that carries no
    information. Works elementwise on arrays.
    """
    num = (x1 * x1 - x3 * x3) * f2 + (x3 * x3 - x2 * x2) * f1 + (x2 * x2 - x1 * x1) * f3
    den = 2.0 * ((x1 - x3) * f2 + (x3 - x2) * f1 + (x2 - x1) * f3)
    return num / (den + v0), np.abs(den) < 10.0 * v0


def _record(state):
    state.iteration += 1
    state.trace.append(TraceRow(state.iteration, state.best_value, state.evaluations,
                                (time.perf_counter() - state.t_start) * 1e3))


def _bas_move(state, f, config, direction):
    lo, hi = config.bounds.T
    b = random_direction(config.dims, state.rng) if direction is None else np.asarray(direction, dtype=float)
    right, left = antenna_points(state.position, state.antenna, b)
    right, left = np.clip(right, lo, hi), np.clip(left, lo, hi)
    f_right = _evaluate(f, right, state)
    f_left = _evaluate(f, left, state)
    s = np.sign(f_right - f_left)
    if s == 0:
        moved, f_moved = state.position.copy(), state.value
    else:
        moved = np.clip(state.position - state.step * s * b, lo, hi)
        f_moved = _evaluate(f, moved, state)
    return moved, f_moved, (left, right, f_left, f_right)


def _accept(state, x, fx):
    state.position, state.value = x, fx
    if fx < state.best_value:
        state.best_position, state.best_value = x.copy(), fx


def bas_step(state: OptimizerState, f, config: BeetleConfig, direction=None) -> OptimizerState:
    """One BAS iteration; updates ``state`` in place and returns it.

    Moves away from the worse antenna tip, ``eta - step * b * sign(f_r - f_l)``.
    ``direction`` overrides the random draw.
    """
    moved, f_moved, _ = _bas_move(state, f, config, direction)
    _accept(state, moved, f_moved)
    state.step, state.antenna = decay_update(state.step, state.antenna, config)
    _record(state)
    return state


def qibas_step(state: OptimizerState, f, config: BeetleConfig, direction=None) -> OptimizerState:
    """BAS iteration plus a per-coordinate parabola vertex candidate, accepted greedily."""
    lo, hi = config.bounds.T
    best, f_best = state.best_position.copy(), state.best_value
    moved, f_moved, (left, right, f_left, f_right) = _bas_move(state, f, config, direction)

    vertex, degenerate = quadratic_vertex(left, right, best, f_left, f_right, f_best, config.v0)
    candidate = np.clip(np.where(degenerate, moved, vertex), lo, hi)
    f_candidate = _evaluate(f, candidate, state)

    if f_candidate < f_moved:
        _accept(state, candidate, f_candidate)
    else:
        _accept(state, moved, f_moved)
    state.step, state.antenna = decay_update(state.step, state.antenna, config)
    _record(state)
    return state


@dataclass
class OptimizeResult:
    best_position: np.ndarray
    best_value: float
    trace: list
    evaluations: int
    iterations: int
    stop_reason: str

    def __iter__(self):
        return iter((self.best_position, self.best_value, self.trace))


def optimize(f, config: BeetleConfig, variant=QIBAS, init=None) -> OptimizeResult:
    """Minimize ``f`` over ``config.bounds`` starting from ``init`` (box centre if omitted).

    Stops after ``max_iters`` iterations, or earlier once the best value has
    not improved by more than ``rel_tol`` (relative) for ``patience``
    iterations.
    """
    step = {BAS: bas_step, QIBAS: qibas_step}.get(str(variant).upper())
    if step is None:
        raise InvalidArgumentError(f"unknown variant {variant!r}")
    if init is None:
        init = config.bounds.mean(axis=1)
    state = init_state(f, config, init)
    ref, last_gain = state.best_value, 0
    reason = "max_iters"
    for t in range(1, config.max_iters + 1):
        step(state, f, config)
        if state.best_value < ref - config.rel_tol * abs(ref):
            ref, last_gain = state.best_value, t
        elif t - last_gain >= config.patience:
            reason = "stall"
            break
    return OptimizeResult(state.best_position, state.best_value, state.trace,
                          state.evaluations, state.iteration, reason)


def iterations_to(trace, threshold):
    """First iteration whose best value is below ``threshold`` (``inf`` if never)."""
    for row in trace:
        if row.best_value < threshold:
            return row.iteration
    return float("inf")


def write_trace(path, trace):
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["iteration", "best_value", "cumulative_evaluations", "wall_ms"])
        for row in trace:
            w.writerow([row.iteration, repr(row.best_value), row.evaluations, f"{row.wall_ms:.3f}"])
