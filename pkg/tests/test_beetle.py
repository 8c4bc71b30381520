import csv

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cablecal.beetle import (
    BAS, QIBAS, BeetleConfig, OptimizerState, antenna_points, bas_step, decay_update, init_state,
    iterations_to, optimize, qibas_step, quadratic_vertex, random_direction, write_trace,
)
from cablecal.errors import InvalidArgumentError, OptimizerAbort

from oracles import parabola_vertex


def sphere(x):
    return float(np.dot(x, x))


def one_d_state(config, eta, best=None, step=0.5, antenna=0.1, f=sphere):
    best = eta if best is None else best
    return OptimizerState(position=np.array([eta], float), value=f([eta]), best_position=np.array([best], float),
                          best_value=f([best]), step=step, antenna=antenna, rng=np.random.default_rng(0))


def trace_values(trace):
    return [(r.iteration, r.best_value, r.evaluations) for r in trace]


# --- directions and antennae ---------------------------------------------------------

def test_direction_one_dimension():
    rng = np.random.default_rng(3)
    for _ in range(20):
        b = random_direction(1, rng)
        assert b.shape == (1,) and b[0] in (1.0, -1.0)


@given(st.integers(1, 64), st.integers(0, 2**32 - 1))
def test_direction_is_unit(k, seed):
    assert abs(np.linalg.norm(random_direction(k, np.random.default_rng(seed))) - 1) <= 1e-12


def test_direction_golden_draw():
    b = random_direction(5, np.random.default_rng(42))
    np.testing.assert_allclose(b, [0.12017993, -0.41016808, 0.29597676, 0.37095723, -0.76948517], atol=1e-8)
    assert np.array_equal(b, random_direction(5, np.random.default_rng(42)))


def test_direction_is_isotropic():
    rng = np.random.default_rng(7)
    draws = np.array([random_direction(3, rng) for _ in range(20000)])
    np.testing.assert_allclose(draws.mean(axis=0), 0, atol=0.02)
    np.testing.assert_allclose(draws.T @ draws / len(draws), np.eye(3) / 3, atol=0.02)


def test_direction_rejects_zero_dims():
    with pytest.raises(InvalidArgumentError):
        random_direction(0, np.random.default_rng(0))


def test_antenna_points_examples():
    r, l = antenna_points(np.zeros(3), 1.0, np.array([1.0, 0, 0]))
    assert np.array_equal(r, [1, 0, 0]) and np.array_equal(l, [-1, 0, 0])
    r, l = antenna_points(np.array([1.0, 1.0]), 0.5, np.array([0.6, 0.8]))
    np.testing.assert_allclose(r, [1.3, 1.4], atol=1e-15)
    np.testing.assert_allclose(l, [0.7, 0.6], atol=1e-15)
    with pytest.raises(InvalidArgumentError):
        antenna_points(np.zeros(2), 0.0, np.array([1.0, 0]))


@given(st.lists(st.floats(-1e3, 1e3), min_size=4, max_size=4), st.floats(1e-6, 10), st.integers(0, 1000))
def test_antenna_midpoint(eta, m, seed):
    eta = np.array(eta)
    r, l = antenna_points(eta, m, random_direction(4, np.random.default_rng(seed)))
    np.testing.assert_allclose((r + l) / 2, eta, rtol=0, atol=1e-15 * max(1, np.abs(eta).max()) * 4)


# --- decay -------------------------------------------------------------------------

def test_decay_examples():
    cfg = BeetleConfig(bounds=[[-1, 1]], mu=0.95, tau=0.9, delta_floor=0.01, m_floor=0.02)
    step, antenna = decay_update(1.0, 1.0, cfg)
    assert step == pytest.approx(0.96, abs=1e-15)
    assert antenna == pytest.approx(0.92, abs=1e-15)
    fixed = 0.01 / (1 - 0.95)
    assert decay_update(fixed, 0.2, cfg)[0] == pytest.approx(fixed, rel=1e-14)
    cfg.constant_steps = True
    assert decay_update(0.3, 0.7, cfg) == (0.3, 0.7)


def test_config_validation():
    with pytest.raises(InvalidArgumentError):
        BeetleConfig(bounds=[[1, 1]])
    with pytest.raises(InvalidArgumentError):
        BeetleConfig(bounds=[[0, 1]], mu=1.0)
    with pytest.raises(InvalidArgumentError):
        BeetleConfig(bounds=[[0, 1]], v0=0.0)
    with pytest.raises(InvalidArgumentError):
        BeetleConfig(bounds=[[0, 1]], max_iters=-1)


# --- quadratic vertex ----------------------------------------------------------------

def test_vertex_examples():
    v0 = 1e-10
    x, deg = quadratic_vertex(0.0, 2.0, 1.0, 1.0, 1.0, 0.0, v0)
    assert x == -4 / (-4 + v0) and not deg
    x, deg = quadratic_vertex(0.3, 2.0, -1.5, 7.0, 7.0, 7.0, v0)
    assert x == 0.0 and deg
    x, deg = quadratic_vertex(-1.0, 1.0, 0.0, 1.0, 1.0, 0.0, v0)
    assert x == 0.0 and not deg


def test_vertex_collinear_is_degenerate():
    # points on a line f = 2x + 1
    _, deg = quadratic_vertex(0.0, 1.0, 3.0, 1.0, 3.0, 7.0, 1e-10)
    assert deg


def random_triples(rng, count):
    """Well-posed triples: distinct abscissae (gap >= 0.1) and curvature |c2| >= 0.1."""
    out = []
    while len(out) < count:
        x, f = rng.uniform(-10, 10, 3), rng.uniform(-10, 10, 3)
        gaps = np.abs(x - np.roll(x, 1))
        c2 = np.linalg.solve(np.column_stack([np.ones(3), x, x * x]), f)[2]
        if gaps.min() >= 0.1 and abs(c2) >= 0.1:
            out.append((x, f))
    return out


def test_vertex_matches_linear_solve_fit(rng):
    for x, f in random_triples(rng, 2000):
        got, deg = quadratic_vertex(*x, *f, 1e-30)
        want = parabola_vertex(x, f)
        assert not deg
        assert abs(got - want) <= 1e-9 * max(1.0, abs(want))


def test_vertex_guard_bias_is_bounded(rng):
    # the +v0 guard shrinks the vertex by the factor den / (den + v0)
    v0 = 1e-10
    for x, f in random_triples(rng, 500):
        got, _ = quadratic_vertex(*x, *f, v0)
        want = parabola_vertex(x, f)
        den = 2 * ((x[0] - x[2]) * f[1] + (x[2] - x[1]) * f[0] + (x[1] - x[0]) * f[2])
        assert abs(got - want) <= abs(want) * v0 / (abs(den) - v0) + 1e-12 * max(1, abs(want))


def test_vertex_is_elementwise(rng):
    x = rng.uniform(-5, 5, (3, 8))
    f = rng.uniform(-5, 5, (3, 8))
    vec, deg = quadratic_vertex(*x, *f, 1e-10)
    for k in range(8):
        v, d = quadratic_vertex(*x[:, k], *f[:, k], 1e-10)
        assert vec[k] == v and deg[k] == d


# --- single steps -------------------------------------------------------------------

def test_bas_step_forced_direction():
    cfg = BeetleConfig(bounds=[[-10, 10]], constant_steps=True)
    state = one_d_state(cfg, 1.0, step=0.5, antenna=0.1)
    bas_step(state, sphere, cfg, direction=np.array([1.0]))
    assert state.position[0] == pytest.approx(0.5, abs=1e-15)
    assert state.best_value == pytest.approx(0.25)
    assert state.evaluations == 3


def test_bas_step_flat_objective_does_not_move():
    cfg = BeetleConfig(bounds=[[-10, 10]])
    state = one_d_state(cfg, 2.0, f=lambda x: 4.0)
    bas_step(state, lambda x: 4.0, cfg)
    assert state.position[0] == 2.0 and state.best_value == 4.0
    assert state.evaluations == 2


def test_bas_step_aborts_on_nan():
    cfg = BeetleConfig(bounds=[[-10, 10]])
    state = one_d_state(cfg, 1.0)
    with pytest.raises(OptimizerAbort) as info:
        bas_step(state, lambda x: float("nan") if x[0] > 1 else 0.0, cfg, direction=np.array([1.0]))
    assert info.value.point[0] == pytest.approx(1.1)


def test_qibas_vertex_candidate():
    assert quadratic_vertex(-1.0, 1.0, 0.5, 1.0, 1.0, 0.25, 1e-10)[0] == pytest.approx(0, abs=1e-9)
    cfg = BeetleConfig(bounds=[[-2, 2]], constant_steps=True)
    state = one_d_state(cfg, 0.5, step=0.1, antenna=1.0)
    # tips at -0.5 and 1.5; BAS would move to 0.4, the parabola vertex is 0
    qibas_step(state, sphere, cfg, direction=np.array([1.0]))
    assert state.position[0] == pytest.approx(0, abs=1e-9)
    assert state.best_value < 0.16
    assert state.evaluations == 4


def test_qibas_flat_objective_matches_bas():
    flat = lambda x: 1.0
    cfg = BeetleConfig(bounds=[[-5, 5]] * 3, seed=4)
    a = optimize(flat, cfg, BAS, init=[1.0, 2.0, 3.0])
    b = optimize(flat, cfg, QIBAS, init=[1.0, 2.0, 3.0])
    assert np.array_equal(a.best_position, b.best_position)
    assert a.best_value == b.best_value == 1.0


def test_qibas_costs_one_extra_evaluation():
    rng = np.random.default_rng(0)
    shift = rng.normal(0, 1, 4)
    f = lambda x: float(np.sum((x - shift) ** 2))
    cfg = BeetleConfig(bounds=[[-5, 5]] * 4, seed=1)
    for variant, per_iter in ((BAS, 3), (QIBAS, 4)):
        state = init_state(f, cfg, np.zeros(4))
        for t in range(30):
            before = state.evaluations
            (bas_step if variant == BAS else qibas_step)(state, f, cfg)
            assert state.evaluations - before == per_iter


# --- full runs ----------------------------------------------------------------------

def test_bas_parabola_from_five():
    res = optimize(lambda x: float(x[0] ** 2), BeetleConfig(bounds=[[-10, 10]], max_iters=200), BAS, init=[5.0])
    assert res.best_value < 1e-3


@pytest.mark.parametrize("variant", [BAS, QIBAS])
def test_sphere_2d(variant):
    res = optimize(sphere, BeetleConfig(bounds=[[-10, 10]] * 2, max_iters=500), variant, init=[5.0, 5.0])
    assert res.best_value < 1e-3


def test_zero_budget_returns_init():
    res = optimize(sphere, BeetleConfig(bounds=[[-10, 10]] * 2, max_iters=0), QIBAS, init=[1.0, 2.0])
    assert np.array_equal(res.best_position, [1.0, 2.0])
    assert res.best_value == 5.0
    assert res.trace == [] and res.evaluations == 1


def test_init_outside_bounds():
    with pytest.raises(InvalidArgumentError):
        optimize(sphere, BeetleConfig(bounds=[[-1, 1]]), BAS, init=[2.0])
    with pytest.raises(InvalidArgumentError):
        optimize(sphere, BeetleConfig(bounds=[[-1, 1]]), "PSO", init=[0.0])


def test_stall_stops_early():
    res = optimize(lambda x: 1.0, BeetleConfig(bounds=[[-1, 1]], max_iters=1000, patience=20), QIBAS)
    assert res.stop_reason == "stall" and res.iterations == 20


@pytest.mark.parametrize("variant", [BAS, QIBAS])
def test_runs_are_deterministic(variant):
    f = lambda x: float(np.sum(np.abs(x - 0.3)) + np.sum(x ** 2))
    cfg = BeetleConfig(bounds=[[-4, 4]] * 6, max_iters=200, seed=11)
    a, b = optimize(f, cfg, variant), optimize(f, cfg, variant)
    assert np.array_equal(a.best_position, b.best_position)
    assert trace_values(a.trace) == trace_values(b.trace)


@settings(max_examples=60)
@given(st.integers(0, 10**6), st.sampled_from([BAS, QIBAS]), st.integers(1, 6))
def test_monotone_and_in_bounds(seed, variant, k):
    rng = np.random.default_rng(seed)
    lo = rng.uniform(-5, 0, k)
    hi = lo + rng.uniform(0.1, 5, k)
    centre = rng.normal(0, 4, k)    # often outside the box, so clamping is exercised
    seen = []

    def f(x):
        seen.append(np.array(x))
        return float(np.sum((x - centre) ** 2) + np.sin(3 * x).sum())

    cfg = BeetleConfig(bounds=np.column_stack([lo, hi]), max_iters=40, seed=seed)
    res = optimize(f, cfg, variant)
    values = [r.best_value for r in res.trace]
    assert all(b <= a for a, b in zip(values, values[1:]))
    assert all(np.all(x >= lo) and np.all(x <= hi) for x in seen)
    assert res.best_value == pytest.approx(f(res.best_position))


def test_iterations_to_and_trace_file(tmp_path):
    res = optimize(sphere, BeetleConfig(bounds=[[-10, 10]] * 2, max_iters=50), QIBAS, init=[5.0, 5.0])
    t = iterations_to(res.trace, 1.0)
    assert t == next(r.iteration for r in res.trace if r.best_value < 1.0)
    assert iterations_to(res.trace, -1.0) == float("inf")
    path = tmp_path / "trace.csv"
    write_trace(path, res.trace)
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["iteration", "best_value", "cumulative_evaluations", "wall_ms"]
    assert len(rows) == 51 and float(rows[-1][1]) == res.best_value


@pytest.mark.slow
def test_qibas_beats_bas_on_24d_sphere():
    wins = {BAS: [], QIBAS: []}
    for seed in range(20):
        init = np.random.default_rng(1000 + seed).uniform(-10, 10, 24)
        target = 1e-2 * sphere(init)
        for variant in wins:
            cfg = BeetleConfig(bounds=[[-10, 10]] * 24, max_iters=3000, seed=seed, patience=10**6)
            wins[variant].append(iterations_to(optimize(sphere, cfg, variant, init=init).trace, target))
    assert np.median(wins[QIBAS]) < np.median(wins[BAS])
