"""Extended Kalman filter over the 24 DH deviations.

The deviations are constants, so the state transition is the identity plus a
small process noise. Each measurement is one scalar cable length, linearized
through the distance Jacobian.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidArgumentError, NumericalFailure
from .error_model import Dataset, distance_jacobians
from .kinematics import LENGTH_MASK, N_PARAMS, DhTable, deviation_to_params


@dataclass
class EkfState:
    eta: np.ndarray
    P: np.ndarray
    k: int = 0


def default_p_init(length_var=1.0, angle_var=1e-2):
    return np.diag(np.where(LENGTH_MASK, length_var, angle_var))


@dataclass
class EkfNoiseConfig:
    """Q: process noise (24x24), R: measurement variance (mm^2), P_init: prior covariance."""

    Q: np.ndarray = field(default_factory=lambda: 1e-12 * np.eye(N_PARAMS))
    R: float = 0.1 ** 2
    P_init: np.ndarray = field(default_factory=default_p_init)

    def __post_init__(self):
        self.Q = np.asarray(self.Q, dtype=float)
        self.P_init = np.asarray(self.P_init, dtype=float)
        if not self.R > 0:
            raise InvalidArgumentError("R must be positive")
        for name in ("Q", "P_init"):
            m = getattr(self, name)
            if m.shape != (N_PARAMS, N_PARAMS) or not np.allclose(m, m.T):
                raise InvalidArgumentError(f"{name} must be a symmetric {N_PARAMS}x{N_PARAMS} matrix")


def predict(state: EkfState, Q) -> EkfState:
    return EkfState(eta=state.eta.copy(), P=state.P + Q, k=state.k)


def gain(P_pred, H, R):
    H = np.asarray(H, dtype=float).reshape(-1)
    PHt = P_pred @ H
    s = float(H @ PHt) + R
    if not s > 0:
        raise NumericalFailure(f"innovation variance {s} is not positive")
    return PHt / s


def update(state: EkfState, z, H, R) -> EkfState:
    """Measurement update for the scalar observation ``z = H eta + v``."""
    H = np.asarray(H, dtype=float).reshape(-1)
    K = gain(state.P, H, R)
    eta = state.eta + K * (z - H @ state.eta)
    P = state.P - np.outer(K, H @ state.P)
    return EkfState(eta=eta, P=0.5 * (P + P.T), k=state.k + 1)


def is_psd(P, rtol=1e-9):
    return float(np.linalg.eigvalsh(P).min()) >= -rtol * max(float(np.trace(P)), 0.0)


@dataclass(frozen=True)
class EkfTraceRow:
    k: int
    innovation: float
    innovation_variance: float
    trace_P: float


@dataclass
class EkfResult:
    eta: np.ndarray
    P: np.ndarray
    trace: list

    def __iter__(self):
        return iter((self.eta, self.P, self.trace))


def run_ekf(table: DhTable, data: Dataset, noise: EkfNoiseConfig | None = None,
            relinearize=True, eta0=None) -> EkfResult:
    """Filter the dataset in order, one predict and one update per sample.

    With ``relinearize`` the measurement model is linearized at the running
    estimate; otherwise every sample is linearized at ``eta0`` (zero by
    default), which turns the filter into a linear Kalman filter.
    """
    if data is None or len(data) == 0:
        raise InvalidArgumentError("run_ekf needs a nonempty dataset")
    noise = noise or EkfNoiseConfig()
    base = table.as_array()
    lin0 = np.zeros(N_PARAMS) if eta0 is None else np.asarray(eta0, dtype=float)
    state = EkfState(eta=lin0.copy(), P=noise.P_init.copy())
    if not relinearize:
        rows0, lengths0 = distance_jacobians(base + deviation_to_params(lin0), data.q, data.p0)
    trace = []
    for k in range(len(data)):
        state = predict(state, noise.Q)
        if relinearize:
            lin = state.eta
            rows, lengths = distance_jacobians(base + deviation_to_params(lin), data.q[k:k + 1], data.p0)
            H, y_lin = rows[0], lengths[0]
        else:
            lin = lin0
            H, y_lin = rows0[k], lengths0[k]
        # Y ~ Y'(lin) + H (eta - lin)  =>  z = H eta with z = Y - Y'(lin) + H lin
        z = data.y[k] - y_lin + H @ lin
        innovation = z - H @ state.eta
        s = float(H @ state.P @ H) + noise.R
        try:
            state = update(state, z, H, noise.R)
        except NumericalFailure as exc:
            raise NumericalFailure(str(exc), index=k) from None
        trace.append(EkfTraceRow(k, float(innovation), s, float(np.trace(state.P))))
    return EkfResult(state.eta, state.P, trace)


def write_ekf_trace(path, trace):
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", "innovation", "innovation_variance", "trace_P"])
        for row in trace:
            w.writerow([row.k, repr(row.innovation), repr(row.innovation_variance), repr(row.trace_P)])
