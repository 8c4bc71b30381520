"""Calibration drivers, held-out metrics and the method comparison.

Methods and their short ids in reports: EKF (M1), BAS (M2), QIBAS (M8)
and EKF followed by QIBAS (M9).
"""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import beetle
from .beetle import BeetleConfig, optimize
from .ekf import EkfNoiseConfig, run_ekf
from .errors import CalibrationError, InvalidArgumentError
from .error_model import CableObjective, Dataset, residuals
from .kinematics import LENGTH_MASK, N_PARAMS, PARAM_NAMES, DhTable, RobotConfig, default_robot
from .simulate import DeviationSpec, NoiseModel, inject_deviation, sample_joint_configs, simulate_measurements

EKF, BAS, QIBAS, EKF_QIBAS = "EKF", "BAS", "QIBAS", "EKF_QIBAS"
METHODS = (EKF, BAS, QIBAS, EKF_QIBAS)
METHOD_IDS = {EKF: "M1", BAS: "M2", QIBAS: "M8", EKF_QIBAS: "M9"}
CLI_NAMES = {"ekf": EKF, "bas": BAS, "qibas": QIBAS, "ekf-qibas": EKF_QIBAS}


def method_from_name(name):
    key = str(name).strip()
    if key.upper() in METHODS:
        return key.upper()
    if key.lower() in CLI_NAMES:
        return CLI_NAMES[key.lower()]
    raise InvalidArgumentError(f"unknown method {name!r}; choose from {', '.join(CLI_NAMES)}")


# --- split and metrics ------------------------------------------------------------

def split_dataset(data: Dataset, train_fraction=0.8, seed=0):
    n = len(data)
    if n < 2:
        raise InvalidArgumentError("splitting needs at least 2 samples")
    if not 0 < train_fraction < 1:
        raise InvalidArgumentError("train_fraction must lie in (0, 1)")
    n_train = int(np.floor(n * train_fraction))
    if n_train < 1 or n_train > n - 1:
        raise InvalidArgumentError(f"train_fraction {train_fraction} leaves an empty split for n={n}")
    order = np.random.default_rng(seed).permutation(n)
    return data.subset(order[:n_train]), data.subset(order[n_train:])


@dataclass(frozen=True)
class MetricsReport:
    """Held-out cable-length errors in mm. ``std`` is the mean absolute error."""

    rmse: float
    std: float
    max: float
    n: int


def metrics(resid) -> MetricsReport:
    r = np.abs(np.asarray(resid, dtype=float).reshape(-1))
    if r.size == 0:
        raise InvalidArgumentError("metrics need at least one residual")
    return MetricsReport(rmse=float(np.sqrt(np.mean(r * r))), std=float(np.mean(r)),
                         max=float(np.max(r)), n=int(r.size))


# --- configuration ------------------------------------------------------------------

@dataclass
class PipelineConfig:
    """Settings shared by every method.

    ``length_bound``/``angle_bound`` give the global search box (+/- mm, +/- rad).
    ``box_sigmas`` scales the EKF covariance into the refinement region of
    EKF_QIBAS. ``v0`` is the interpolation guard handed to QIBAS.
    """

    train_fraction: float = 0.8
    noise: EkfNoiseConfig = field(default_factory=EkfNoiseConfig)
    relinearize: bool = True
    max_iters: int = 3000
    length_bound: float = 5.0
    angle_bound: float = 0.05
    box_sigmas: float = 3.0
    mu: float = 0.95
    tau: float = 0.95
    v0: float = 1e-30
    patience: int = 50
    rel_tol: float = 1e-12

    @property
    def global_half_width(self):
        return np.where(LENGTH_MASK, self.length_bound, self.angle_bound)

    def beetle(self, seed, max_iters=None):
        unit = np.tile([-1.0, 1.0], (N_PARAMS, 1))
        return BeetleConfig(bounds=unit, mu=self.mu, tau=self.tau, v0=self.v0, seed=int(seed),
                            max_iters=self.max_iters if max_iters is None else max_iters,
                            patience=self.patience, rel_tol=self.rel_tol)

    def to_dict(self):
        return {"train_fraction": self.train_fraction, "R": self.noise.R,
                "Q_diag": np.diag(self.noise.Q).tolist(), "P_init_diag": np.diag(self.noise.P_init).tolist(),
                "relinearize": self.relinearize, "max_iters": self.max_iters,
                "length_bound": self.length_bound, "angle_bound": self.angle_bound,
                "box_sigmas": self.box_sigmas, "mu": self.mu, "tau": self.tau, "v0": self.v0,
                "patience": self.patience, "rel_tol": self.rel_tol}


# --- search-space maps ----------------------------------------------------------------

class BoxMap:
    """Affine map from the unit cube onto the global search box centred on zero."""

    def __init__(self, half_width):
        self.half = np.asarray(half_width, dtype=float)

    def __call__(self, u):
        return self.half * u

    def inverse(self, eta):
        return np.asarray(eta, dtype=float) / self.half


class EllipsoidMap:
    """Map the unit cube onto the EKF confidence region around ``center``.

    ``eta = clip(center + k * sqrtm(P) u)``: the symmetric square root keeps
    the correlations the filter has learned, and for a diagonal P this is the
    plain box ``center +/- k sqrt(diag P)``. Results are clipped to the global
    box.
    """

    def __init__(self, center, P, k, half_width):
        w, V = np.linalg.eigh(0.5 * (P + P.T))
        self.root = (V * np.sqrt(np.clip(w, 0.0, None))) @ V.T
        self.half = np.asarray(half_width, dtype=float)
        self.center = np.clip(center, -self.half, self.half)
        self.k = k

    def __call__(self, u):
        return np.clip(self.center + self.k * (self.root @ u), -self.half, self.half)


# --- drivers ----------------------------------------------------------------------

@dataclass
class CalibrationResult:
    method: str
    delta_hat: np.ndarray
    before: MetricsReport
    after: MetricsReport
    train_objective: float
    trace: dict
    wall_ms: float
    ekf_P: np.ndarray | None = None

    @property
    def method_id(self):
        return METHOD_IDS[self.method]

    def to_dict(self, timing=False):
        doc = {"method": self.method, "method_id": self.method_id,
               "delta_hat": {name: float(v) for name, v in zip(PARAM_NAMES, self.delta_hat)},
               "before": asdict(self.before), "after": asdict(self.after),
               "train_objective_mm2": self.train_objective}
        if timing:
            doc["wall_ms"] = self.wall_ms
        return doc


def _search(f, mapping, cfg: PipelineConfig, variant, seed, init):
    result = optimize(lambda u: f(mapping(u)), cfg.beetle(seed), variant, init)
    return mapping(result.best_position), result


def _ekf_stage(nominal, train, cfg):
    return run_ekf(nominal, train, cfg.noise, relinearize=cfg.relinearize)


def fit(method, nominal: DhTable, train: Dataset, cfg: PipelineConfig | None = None, seed=0):
    """Identify the deviation vector from ``train`` only. Returns (delta_hat, trace dict, P or None)."""
    cfg = cfg or PipelineConfig()
    method = method_from_name(method)
    f = CableObjective(nominal, train)
    if method == EKF:
        res = _ekf_stage(nominal, train, cfg)
        return res.eta, {"ekf": res.trace}, res.P
    if method in (BAS, QIBAS):
        box = BoxMap(cfg.global_half_width)
        variant = beetle.BAS if method == BAS else beetle.QIBAS
        delta, res = _search(f, box, cfg, variant, seed, np.zeros(N_PARAMS))
        return delta, {"search": res.trace}, None
    res = _ekf_stage(nominal, train, cfg)
    region = EllipsoidMap(res.eta, res.P, cfg.box_sigmas, cfg.global_half_width)
    delta, sres = _search(f, region, cfg, beetle.QIBAS, seed, np.zeros(N_PARAMS))
    return delta, {"ekf": res.trace, "search": sres.trace}, res.P


def calibrate(method, nominal: DhTable, data: Dataset, cfg: PipelineConfig | None = None, seed=0):
    cfg = cfg or PipelineConfig()
    method = method_from_name(method)
    split_seed, search_seed = np.random.SeedSequence(seed).generate_state(2)
    train, test = split_dataset(data, cfg.train_fraction, int(split_seed))
    t0 = time.perf_counter()
    try:
        delta, trace, P = fit(method, nominal, train, cfg, int(search_seed))
    except CalibrationError as exc:
        raise type(exc)(f"{method}: {exc}") from exc
    wall_ms = (time.perf_counter() - t0) * 1e3
    before = metrics(residuals(nominal, np.zeros(N_PARAMS), test))
    after = metrics(residuals(nominal, delta, test))
    train_obj = float(np.mean(residuals(nominal, delta, train) ** 2))
    return CalibrationResult(method, delta, before, after, train_obj, trace, wall_ms, P)


# --- comparison -----------------------------------------------------------------------

@dataclass
class Scenario:
    robot: RobotConfig = field(default_factory=default_robot)
    n: int = 120
    noise: str = "gaussian:0.1"
    caps: DeviationSpec = field(default_factory=DeviationSpec)

    def simulate(self, seed):
        cfg_seed, dev_seed, noise_seed = np.random.SeedSequence(seed).generate_state(3)
        table = self.robot.table
        qs = sample_joint_configs(self.n, table, int(cfg_seed))
        spec = DeviationSpec(self.caps.a_mm, self.caps.d_mm, self.caps.alpha_rad, self.caps.theta_rad,
                             seed=int(dev_seed))
        noise = NoiseModel.parse(self.noise, seed=int(noise_seed))
        return simulate_measurements(table, inject_deviation(spec), qs, self.robot.p0, noise)

    def to_dict(self):
        return {"robot": self.robot.name, "n": self.n, "noise": self.noise,
                "caps": {"a_mm": self.caps.a_mm, "d_mm": self.caps.d_mm,
                         "alpha_rad": self.caps.alpha_rad, "theta_rad": self.caps.theta_rad}}


@dataclass
class Comparison:
    methods: list
    trials: list          # one dict per trial: {"trial", "seed", "results": {method: CalibrationResult}, "true_delta"}
    scenario: Scenario
    seed: int

    def after(self, method, key="rmse"):
        return np.array([getattr(t["results"][method].after, key) for t in self.trials])

    def before(self, key="rmse"):
        first = self.methods[0]
        return np.array([getattr(t["results"][first].before, key) for t in self.trials])

    def summary(self):
        rows = {"Before": {k: _stats(self.before(k)) for k in ("rmse", "std", "max")}}
        for m in self.methods:
            rows[m] = {k: _stats(self.after(m, k)) for k in ("rmse", "std", "max")}
        return rows

    def table(self):
        """Text table in the layout Before / M1 / M2 / M8 / M9 x RMSE / Std / Max (medians)."""
        summary = self.summary()
        lines = [f"# median over {len(self.trials)} trial(s); spread columns give min..max of RMSE",
                 f"{'Item':<16}{'RMSE(mm)':>16}{'Std(mm)':>16}{'Max(mm)':>16}   RMSE spread"]
        for key, row in summary.items():
            label = key if key == "Before" else f"{METHOD_IDS[key]} {key.replace('_', '-')}"
            rm = row["rmse"]
            lines.append(f"{label:<16}{rm['median']:>16.9g}{row['std']['median']:>16.9g}"
                         f"{row['max']['median']:>16.9g}   {rm['min']:.9g}..{rm['max']:.9g}")
        return "\n".join(lines) + "\n"

    def to_dict(self):
        return {"seed": self.seed, "scenario": self.scenario.to_dict(), "methods": list(self.methods),
                "summary": self.summary(),
                "trials": [{"trial": t["trial"], "seed": t["seed"],
                            "results": {m: r.to_dict() for m, r in t["results"].items()}}
                           for t in self.trials]}

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2) + "\n"


def _stats(values):
    lo, q25, med, q75, hi = np.percentile(np.asarray(values, dtype=float), [0, 25, 50, 75, 100])
    return {"median": float(med), "min": float(lo), "max": float(hi), "q25": float(q25), "q75": float(q75)}


def compare(methods, scenario: Scenario | None = None, trials=20, seed=0, cfg: PipelineConfig | None = None):
    """Run every method on the same simulated dataset and split per trial (paired design)."""
    if trials < 1:
        raise InvalidArgumentError("trials must be >= 1")
    scenario = scenario or Scenario()
    cfg = cfg or PipelineConfig()
    methods = [method_from_name(m) for m in methods]
    if not methods:
        raise InvalidArgumentError("no methods given")
    out = []
    for i, child in enumerate(np.random.SeedSequence(seed).spawn(trials)):
        data_seed, run_seed = (int(s) for s in child.generate_state(2))
        sim = scenario.simulate(data_seed)
        results = {m: calibrate(m, scenario.robot.table, sim.data, cfg, run_seed) for m in methods}
        out.append({"trial": i, "seed": data_seed, "results": results, "true_delta": sim.true_delta})
    return Comparison(methods, out, scenario, seed)
