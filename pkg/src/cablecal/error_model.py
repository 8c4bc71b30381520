"""Differential error model for cable-length calibration.

Analytic partials of the DH link transform, the 3x24 position Jacobian of the
end-effector, the 1x24 cable-length Jacobian, and the mean-squared
cable-length objective.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DegenerateGeometryError, InvalidArgumentError
from .kinematics import (
    A, ALPHA, D, N_JOINTS, N_PARAMS, THETA, DhTable, LinkParams, as_deviation,
    chain_transforms, deviation_to_params, link_matrices,
)

EPS_DIST = 1e-6  # mm; below this the cable direction is undefined


@dataclass(frozen=True)
class MeasurementSample:
    q: np.ndarray
    y: float


@dataclass(frozen=True)
class Dataset:
    """Joint configurations ``q`` (n, 6), measured cable lengths ``y`` (n,) in mm, anchor ``p0``."""

    q: np.ndarray
    y: np.ndarray
    p0: np.ndarray

    def __post_init__(self):
        q = np.atleast_2d(np.asarray(self.q, dtype=float))
        y = np.asarray(self.y, dtype=float).reshape(-1)
        p0 = np.asarray(self.p0, dtype=float)
        if len(y) == 0 or q.size == 0:
            raise InvalidArgumentError("dataset is empty")
        if q.shape != (len(y), N_JOINTS):
            raise InvalidArgumentError(f"q must have shape ({len(y)}, {N_JOINTS}), got {q.shape}")
        if p0.shape != (3,):
            raise InvalidArgumentError("p0 must be a 3-vector")
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(y)) and np.all(np.isfinite(p0))):
            raise InvalidArgumentError("dataset contains non-finite values")
        if np.any(y < 0):
            raise InvalidArgumentError(f"negative cable length at sample {int(np.argmax(y < 0))}")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "p0", p0)

    def __len__(self):
        return len(self.y)

    @property
    def samples(self):
        return [MeasurementSample(q=qi, y=float(yi)) for qi, yi in zip(self.q, self.y)]

    def subset(self, idx):
        idx = np.asarray(idx, dtype=int)
        return Dataset(self.q[idx], self.y[idx], self.p0)

    def within_limits(self, table: DhTable):
        lim = table.limits_array
        return bool(np.all((self.q >= lim[:, 0]) & (self.q <= lim[:, 1])))


# --- partial derivatives --------------------------------------------------------

def _partials(a, d, alpha, theta):
    """Analytic partials of the DH matrix, stacked on axis -3 as (d/da, d/dd, d/dalpha, d/dtheta)."""
    a, d, alpha, theta = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in (a, d, alpha, theta)))
    ct, st = np.cos(theta), np.sin(theta)
    ca, sa = np.cos(alpha), np.sin(alpha)
    out = np.zeros(a.shape + (4, 4, 4))
    da, dd, dal, dth = (out[..., k, :, :] for k in range(4))
    da[..., 0, 3] = ct
    da[..., 1, 3] = st
    dd[..., 2, 3] = 1.0
    dal[..., 0, 1] = st * sa
    dal[..., 0, 2] = st * ca
    dal[..., 1, 1] = -ct * sa
    dal[..., 1, 2] = -ct * ca
    dal[..., 2, 1] = ca
    dal[..., 2, 2] = -sa
    dth[..., 0, 0] = -st
    dth[..., 0, 1] = -ct * ca
    dth[..., 0, 2] = ct * sa
    dth[..., 0, 3] = -a * st
    dth[..., 1, 0] = ct
    dth[..., 1, 1] = -st * ca
    dth[..., 1, 2] = st * sa
    dth[..., 1, 3] = a * ct
    return out


def dh_partials(link: LinkParams, q: float):
    """Partials of the link transform w.r.t. (alpha, a, d, theta), in that order."""
    if not np.isfinite(q):
        raise InvalidArgumentError(f"non-finite joint angle {q!r}")
    p = _partials(link.a, link.d, link.alpha, q + link.theta_offset)
    return p[ALPHA], p[A], p[D], p[THETA]


def position_jacobians(params, qs):
    """Batched position Jacobians, shape (n, 3, 24), columns in deviation order."""
    params = np.asarray(params, dtype=float)
    qs = np.atleast_2d(np.asarray(qs, dtype=float))
    n = len(qs)
    mats = link_matrices(params, qs)                       # (n, 6, 4, 4)
    parts = _partials(params[:, A], params[:, D], params[:, ALPHA], qs + params[:, THETA])  # (n, 6, 4, 4, 4)

    prefix = np.empty((n, N_JOINTS, 4, 4))
    prefix[:, 0] = np.eye(4)
    for i in range(1, N_JOINTS):
        prefix[:, i] = prefix[:, i - 1] @ mats[:, i - 1]
    # homogeneous position of the tool origin seen from each link's output frame
    tail = np.empty((n, N_JOINTS, 4))
    tail[:, -1] = (0.0, 0.0, 0.0, 1.0)
    for i in range(N_JOINTS - 2, -1, -1):
        tail[:, i] = np.einsum("nij,nj->ni", mats[:, i + 1], tail[:, i + 1])

    # d p / d param_{i,g} = (prefix_i @ dA_i/dg @ tail_i)[:3]
    inner = np.einsum("nigjk,nik->nigj", parts, tail)    # (n, 6, 4 groups, 4)
    cols = np.einsum("nijk,nigk->nigj", prefix, inner)[..., :3]  # (n, 6, 4, 3)
    # deviation order is group-major: column g*6 + i
    return cols.transpose(0, 3, 2, 1).reshape(n, 3, N_PARAMS)


def position_jacobian(table: DhTable, q) -> np.ndarray:
    return position_jacobians(table.as_array(), np.asarray(q, dtype=float)[None, :])[0]


def distance_jacobians(params, qs, p0):
    """Batched cable-length Jacobian rows (n, 24) plus predicted lengths (n,)."""
    qs = np.atleast_2d(np.asarray(qs, dtype=float))
    pos = chain_transforms(params, qs)[:, :3, 3]
    diff = pos - np.asarray(p0, dtype=float)
    length = np.linalg.norm(diff, axis=1)
    bad = np.flatnonzero(length <= EPS_DIST)
    if bad.size:
        raise DegenerateGeometryError("end-effector within EPS_DIST of the cable anchor", index=int(bad[0]))
    u = diff / length[:, None]
    return np.einsum("ni,nij->nj", u, position_jacobians(params, qs)), length


def distance_jacobian(table: DhTable, q, p0) -> np.ndarray:
    """1x24 sensitivity of the predicted cable length to each deviation."""
    rows, _ = distance_jacobians(table.as_array(), np.asarray(q, dtype=float)[None, :], p0)
    return rows


# --- objective ------------------------------------------------------------------

def predicted_lengths(params, qs, p0):
    pos = chain_transforms(params, qs)[:, :3, 3]
    return np.linalg.norm(pos - np.asarray(p0, dtype=float), axis=1)


def residuals(table: DhTable, delta, data: Dataset):
    """Measured minus predicted cable lengths (mm)."""
    params = table.as_array() + deviation_to_params(as_deviation(delta))
    return data.y - predicted_lengths(params, data.q, data.p0)


def objective(table: DhTable, delta, data: Dataset) -> float:
    if data is None or len(data) == 0:
        raise InvalidArgumentError("objective needs a nonempty dataset")
    r = residuals(table, delta, data)
    return float(np.mean(r * r))


class CableObjective:
    """``objective(table, delta, data)`` bound to a table and dataset, callable on delta alone.

    Skips re-validation on each call; the optimizers call it thousands of times.
    """

    def __init__(self, table: DhTable, data: Dataset):
        if len(data) == 0:
            raise InvalidArgumentError("objective needs a nonempty dataset")
        self.table = table
        self.data = data
        self._base = table.as_array()

    def __call__(self, delta):
        params = self._base + np.asarray(delta, dtype=float).reshape(4, N_JOINTS).T
        r = self.data.y - predicted_lengths(params, self.data.q, self.data.p0)
        return float(np.mean(r * r))


# --- dataset files --------------------------------------------------------------

HEADER = [f"q{i + 1}" for i in range(N_JOINTS)] + ["y_mm"]


def format_dataset(data: Dataset, comments=()) -> str:
    buf = io.StringIO()
    for c in comments:
        buf.write(f"# {c}\n")
    buf.write("# p0_mm: " + ",".join(repr(float(x)) for x in data.p0) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(HEADER)
    for qi, yi in zip(data.q, data.y):
        w.writerow([repr(float(x)) for x in qi] + [repr(float(yi))])
    return buf.getvalue()


def write_dataset(path, data: Dataset, comments=()):
    Path(path).write_text(format_dataset(data, comments))


def parse_dataset(text: str, p0=None, source="<string>", default_p0=None) -> Dataset:
    """Parse dataset text.

    The anchor is ``p0`` if given, else the file's ``# p0_mm:`` comment, else ``default_p0``.
    """
    header_seen = False
    file_p0 = None
    qs, ys = [], []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            body = stripped[1:].strip()
            if body.startswith("p0_mm:"):
                try:
                    file_p0 = [float(x) for x in body[len("p0_mm:"):].split(",")]
                except ValueError:
                    raise InvalidArgumentError(f"{source}: line {lineno}: malformed p0_mm comment") from None
            continue
        fields = [f.strip() for f in next(csv.reader([stripped]))]
        if not header_seen:
            if fields != HEADER:
                raise InvalidArgumentError(f"{source}: line {lineno}: expected header {','.join(HEADER)}")
            header_seen = True
            continue
        if len(fields) != len(HEADER):
            raise InvalidArgumentError(
                f"{source}: line {lineno}: expected {len(HEADER)} columns, got {len(fields)}")
        try:
            values = [float(f) for f in fields]
        except ValueError:
            raise InvalidArgumentError(f"{source}: line {lineno}: non-numeric value") from None
        if not all(np.isfinite(values)):
            raise InvalidArgumentError(f"{source}: line {lineno}: non-finite value")
        if values[-1] < 0:
            raise InvalidArgumentError(f"{source}: line {lineno}: negative cable length")
        qs.append(values[:-1])
        ys.append(values[-1])
    if not header_seen:
        raise InvalidArgumentError(f"{source}: missing header row")
    if not ys:
        raise InvalidArgumentError(f"{source}: no samples")
    anchor = p0 if p0 is not None else (file_p0 if file_p0 is not None else default_p0)
    if anchor is None:
        raise InvalidArgumentError(f"{source}: no p0_mm comment and no anchor supplied")
    return Dataset(np.array(qs), np.array(ys), np.asarray(anchor, dtype=float))


def read_dataset(path, p0=None, default_p0=None) -> Dataset:
    return parse_dataset(Path(path).read_text(), p0=p0, source=str(path), default_p0=default_p0)
