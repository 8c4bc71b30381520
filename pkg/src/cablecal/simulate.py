"""Synthetic drawstring measurements with a known ground-truth deviation."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .errors import DegenerateGeometryError, InvalidArgumentError
from .error_model import EPS_DIST, Dataset, predicted_lengths
from .kinematics import N_JOINTS, DhTable, as_deviation, deviation_to_params

NOISE_KINDS = ("none", "gaussian", "uniform", "mixture")


@dataclass(frozen=True)
class NoiseModel:
    """Additive cable-length noise.

    ``sigma`` is the gaussian std (also the inlier std for ``mixture``),
    ``half_width`` the uniform half-range. A mixture sample is an outlier with
    probability ``outlier_prob``, drawn with std ``outlier_scale * sigma``.
    """

    kind: str = "none"
    sigma: float = 0.0
    half_width: float = 0.0
    outlier_prob: float = 0.0
    outlier_scale: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise InvalidArgumentError(f"unknown noise kind {self.kind!r}")
        if self.sigma < 0 or self.half_width < 0:
            raise InvalidArgumentError("noise magnitudes must be >= 0")
        if not 0 <= self.outlier_prob <= 1:
            raise InvalidArgumentError("outlier_prob must lie in [0, 1]")
        if self.outlier_scale < 1:
            raise InvalidArgumentError("outlier_scale must be >= 1")

    @classmethod
    def parse(cls, text, seed=0):
        """Parse ``KIND:PARAMS``, e.g. ``none``, ``gaussian:0.1``, ``uniform:0.2``, ``mixture:0.1,0.05,10``."""
        kind, _, params = text.partition(":")
        kind = kind.strip().lower()
        try:
            values = [float(v) for v in params.split(",")] if params.strip() else []
        except ValueError:
            raise InvalidArgumentError(f"noise spec {text!r}: non-numeric parameter") from None
        arity = {"none": 0, "gaussian": 1, "uniform": 1, "mixture": 3}
        if kind not in arity:
            raise InvalidArgumentError(f"noise spec {text!r}: unknown kind {kind!r}")
        if len(values) != arity[kind]:
            raise InvalidArgumentError(f"noise spec {text!r}: {kind} takes {arity[kind]} parameter(s)")
        if kind == "gaussian":
            return cls(kind, sigma=values[0], seed=seed)
        if kind == "uniform":
            return cls(kind, half_width=values[0], seed=seed)
        if kind == "mixture":
            return cls(kind, sigma=values[0], outlier_prob=values[1], outlier_scale=values[2], seed=seed)
        return cls(kind, seed=seed)

    def sample(self, n, rng=None):
        rng = np.random.default_rng(self.seed) if rng is None else rng
        if self.kind == "none":
            return np.zeros(n)
        if self.kind == "gaussian":
            return rng.normal(0.0, self.sigma, n)
        if self.kind == "uniform":
            return rng.uniform(-self.half_width, self.half_width, n)
        outlier = rng.random(n) < self.outlier_prob
        scale = np.where(outlier, self.outlier_scale * self.sigma, self.sigma)
        return rng.standard_normal(n) * scale


@dataclass(frozen=True)
class DeviationSpec:
    """Per-group caps on injected deviations: lengths in mm, angles in rad."""

    a_mm: float = 1.0
    d_mm: float = 1.0
    alpha_rad: float = 0.01
    theta_rad: float = 0.01
    seed: int = 0

    def __post_init__(self):
        if min(self.a_mm, self.d_mm, self.alpha_rad, self.theta_rad) < 0:
            raise InvalidArgumentError("deviation caps must be >= 0")

    @property
    def caps(self):
        return np.repeat([self.a_mm, self.d_mm, self.alpha_rad, self.theta_rad], N_JOINTS)


def sample_joint_configs(n, table: DhTable, seed=0):
    if n < 1:
        raise InvalidArgumentError("need n >= 1 configurations")
    lim = table.limits_array
    rng = np.random.default_rng(seed)
    return rng.uniform(lim[:, 0], lim[:, 1], size=(n, N_JOINTS))


def inject_deviation(spec: DeviationSpec):
    caps = spec.caps
    rng = np.random.default_rng(spec.seed)
    return rng.uniform(-1.0, 1.0, caps.size) * caps


@dataclass(frozen=True)
class SimulatedDataset:
    data: Dataset
    true_delta: np.ndarray
    noise: NoiseModel
    clean_y: np.ndarray


def simulate_measurements(nominal: DhTable, true_delta, configs, p0, noise: NoiseModel | None = None):
    noise = noise or NoiseModel()
    true_delta = as_deviation(true_delta)
    qs = np.atleast_2d(np.asarray(configs, dtype=float))
    clean = predicted_lengths(nominal.as_array() + deviation_to_params(true_delta), qs, p0)
    bad = np.flatnonzero(clean <= EPS_DIST)
    if bad.size:
        raise DegenerateGeometryError("end-effector at the cable anchor", index=int(bad[0]))
    # a drawstring cannot read a negative length
    y = np.maximum(clean + noise.sample(len(qs)), 0.0)
    return SimulatedDataset(Dataset(qs, y, p0), true_delta.copy(), noise, clean)


def truth_document(sim: SimulatedDataset, deviation: DeviationSpec | None = None, extra=None):
    doc = {"true_delta": [float(x) for x in sim.true_delta], "noise": asdict(sim.noise),
           "p0_mm": [float(x) for x in sim.data.p0]}
    if deviation is not None:
        doc["deviation_spec"] = asdict(deviation)
    if extra:
        doc.update(extra)
    return doc


def write_truth(path, sim: SimulatedDataset, deviation: DeviationSpec | None = None, extra=None):
    Path(path).write_text(json.dumps(truth_document(sim, deviation, extra), indent=2) + "\n")


def read_truth(path):
    doc = json.loads(Path(path).read_text())
    return np.asarray(doc["true_delta"], dtype=float), doc
