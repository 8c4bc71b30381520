"""Denavit-Hartenberg forward kinematics for 6-joint serial arms.

Lengths are millimetres and angles radians everywhere. The joint angle that
enters a link transform is the commanded angle plus the link's calibratable
``theta_offset``.

Deviation vectors hold 24 corrections grouped by parameter kind::

    [da1..da6, dd1..dd6, dalpha1..dalpha6, dtheta1..dtheta6]
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import InvalidArgumentError

N_JOINTS = 6
N_PARAMS = 4 * N_JOINTS

# column order of DhTable.as_array(), which is also the deviation group order
A, D, ALPHA, THETA = 0, 1, 2, 3
GROUPS = ("a", "d", "alpha", "theta")
PARAM_NAMES = tuple(f"{g}{i + 1}" for g in GROUPS for i in range(N_JOINTS))
LENGTH_MASK = np.array([True] * 12 + [False] * 12)


def _finite(*values):
    return all(np.all(np.isfinite(v)) for v in values)


@dataclass(frozen=True)
class LinkParams:
    a: float
    d: float
    theta_offset: float
    alpha: float

    def __post_init__(self):
        if not _finite(self.a, self.d, self.theta_offset, self.alpha):
            raise InvalidArgumentError(f"non-finite link parameter in {self!r}")


@dataclass(frozen=True)
class DhTable:
    links: tuple
    joint_limits: tuple

    def __post_init__(self):
        object.__setattr__(self, "links", tuple(self.links))
        limits = tuple((float(lo), float(hi)) for lo, hi in self.joint_limits)
        object.__setattr__(self, "joint_limits", limits)
        if len(self.links) != N_JOINTS:
            raise InvalidArgumentError(f"expected {N_JOINTS} links, got {len(self.links)}")
        if len(limits) != N_JOINTS:
            raise InvalidArgumentError(f"expected {N_JOINTS} joint limits, got {len(limits)}")
        for i, (lo, hi) in enumerate(limits):
            if not lo < hi:
                raise InvalidArgumentError(f"joint {i + 1}: limit min {lo} must be < max {hi}")

    def as_array(self):
        """(6, 4) array with columns a, d, alpha, theta_offset."""
        return np.array([[l.a, l.d, l.alpha, l.theta_offset] for l in self.links], dtype=float)

    @classmethod
    def from_array(cls, params, joint_limits):
        params = np.asarray(params, dtype=float).reshape(N_JOINTS, 4)
        links = [LinkParams(a=r[A], d=r[D], theta_offset=r[THETA], alpha=r[ALPHA]) for r in params]
        return cls(links, joint_limits)

    @property
    def limits_array(self):
        return np.array(self.joint_limits, dtype=float)


@dataclass(frozen=True)
class Pose:
    r: np.ndarray
    p: np.ndarray

    @property
    def matrix(self):
        t = np.eye(4)
        t[:3, :3] = self.r
        t[:3, 3] = self.p
        return t

    @classmethod
    def from_matrix(cls, t):
        t = np.asarray(t, dtype=float)
        return cls(t[:3, :3].copy(), t[:3, 3].copy())


def dh_matrix(a, d, alpha, theta):
    """Homogeneous DH transforms, broadcasting over any input shape.

    Returns an array of shape ``broadcast_shape + (4, 4)``.
    """
    a, d, alpha, theta = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in (a, d, alpha, theta)))
    ct, st = np.cos(theta), np.sin(theta)
    ca, sa = np.cos(alpha), np.sin(alpha)
    m = np.zeros(a.shape + (4, 4))
    m[..., 0, 0] = ct
    m[..., 0, 1] = -st * ca
    m[..., 0, 2] = st * sa
    m[..., 0, 3] = a * ct
    m[..., 1, 0] = st
    m[..., 1, 1] = ct * ca
    m[..., 1, 2] = -ct * sa
    m[..., 1, 3] = a * st
    m[..., 2, 1] = sa
    m[..., 2, 2] = ca
    m[..., 2, 3] = d
    m[..., 3, 3] = 1.0
    return m


def link_transform(link: LinkParams, q: float) -> np.ndarray:
    if not _finite(q):
        raise InvalidArgumentError(f"non-finite joint angle {q!r}")
    return dh_matrix(link.a, link.d, link.alpha, q + link.theta_offset)


def link_matrices(params, qs):
    """Per-link transforms for a batch of joint vectors.

    ``params`` is a (6, 4) table array, ``qs`` is (n, 6). Returns (n, 6, 4, 4).
    """
    params = np.asarray(params, dtype=float)
    qs = np.atleast_2d(np.asarray(qs, dtype=float))
    return dh_matrix(params[:, A], params[:, D], params[:, ALPHA], qs + params[:, THETA])


def chain_transforms(params, qs):
    """End-effector transforms A1 A2 ... A6 for a batch of joint vectors, shape (n, 4, 4)."""
    mats = link_matrices(params, qs)
    t = mats[:, 0]
    for i in range(1, N_JOINTS):
        t = t @ mats[:, i]
    return t


def _check_q(q):
    q = np.asarray(q, dtype=float)
    if q.shape != (N_JOINTS,):
        raise InvalidArgumentError(f"expected {N_JOINTS} joint angles, got shape {q.shape}")
    if not _finite(q):
        raise InvalidArgumentError("joint vector contains non-finite values")
    return q


def forward_kinematics(table: DhTable, q) -> Pose:
    q = _check_q(q)
    t = np.eye(4)
    for link, qi in zip(table.links, q):
        t = t @ link_transform(link, qi)
    return Pose.from_matrix(t)


def end_positions(table_or_params, qs):
    """End-effector positions (n, 3) for many joint vectors at once."""
    params = table_or_params.as_array() if isinstance(table_or_params, DhTable) else table_or_params
    return chain_transforms(params, qs)[:, :3, 3]


def pose_error(actual: Pose, nominal: Pose) -> np.ndarray:
    return actual.matrix - nominal.matrix


def cable_length(p, p0) -> float:
    p, p0 = np.asarray(p, dtype=float), np.asarray(p0, dtype=float)
    if not _finite(p, p0):
        raise InvalidArgumentError("non-finite point")
    return float(np.linalg.norm(p - p0))


def as_deviation(delta) -> np.ndarray:
    delta = np.asarray(delta, dtype=float)
    if delta.shape != (N_PARAMS,):
        raise InvalidArgumentError(f"deviation vector must have {N_PARAMS} entries, got shape {delta.shape}")
    if not _finite(delta):
        raise InvalidArgumentError("deviation vector contains non-finite values")
    return delta


def deviation_to_params(delta):
    """Reshape a 24-vector into the (6, 4) layout of DhTable.as_array()."""
    return np.asarray(delta, dtype=float).reshape(4, N_JOINTS).T


def params_to_deviation(params):
    return np.asarray(params, dtype=float).T.reshape(-1)


def apply_deviation(nominal: DhTable, delta) -> DhTable:
    delta = as_deviation(delta)
    return DhTable.from_array(nominal.as_array() + deviation_to_params(delta), nominal.joint_limits)


# --- robot config files -------------------------------------------------------

@dataclass(frozen=True)
class RobotConfig:
    table: DhTable
    p0: np.ndarray
    name: str = ""
    source: str = ""


def robot_from_dict(doc) -> RobotConfig:
    """Build a RobotConfig from the parsed JSON document.

    Schema::

        {"name": str, "source": str,
         "links": [{"a_mm", "d_mm", "theta_offset_rad", "alpha_rad"} x 6],
         "joint_limits_rad": [[min, max] x 6],
         "p0_mm": [x, y, z]}
    """
    try:
        raw_links = doc["links"]
    except (KeyError, TypeError):
        raise InvalidArgumentError("robot config: missing field 'links'") from None
    links = []
    for i, rec in enumerate(raw_links):
        try:
            links.append(LinkParams(a=float(rec["a_mm"]), d=float(rec["d_mm"]),
                                    theta_offset=float(rec["theta_offset_rad"]),
                                    alpha=float(rec["alpha_rad"])))
        except KeyError as exc:
            raise InvalidArgumentError(f"robot config: links[{i}] missing field {exc.args[0]!r}") from None
        except (TypeError, ValueError):
            raise InvalidArgumentError(f"robot config: links[{i}] has a non-numeric field") from None
    if "joint_limits_rad" not in doc:
        raise InvalidArgumentError("robot config: missing field 'joint_limits_rad'")
    if "p0_mm" not in doc:
        raise InvalidArgumentError("robot config: missing field 'p0_mm'")
    try:
        table = DhTable(links, doc["joint_limits_rad"])
    except InvalidArgumentError as exc:
        raise InvalidArgumentError(f"robot config: {exc}") from None
    except (TypeError, ValueError):
        raise InvalidArgumentError("robot config: malformed field 'joint_limits_rad'") from None
    p0 = np.asarray(doc["p0_mm"], dtype=float)
    if p0.shape != (3,) or not _finite(p0):
        raise InvalidArgumentError("robot config: field 'p0_mm' must be 3 finite numbers")
    return RobotConfig(table=table, p0=p0, name=doc.get("name", ""), source=doc.get("source", ""))


def robot_to_dict(robot: RobotConfig) -> dict:
    return {
        "name": robot.name,
        "source": robot.source,
        "links": [{"a_mm": l.a, "d_mm": l.d, "theta_offset_rad": l.theta_offset, "alpha_rad": l.alpha}
                  for l in robot.table.links],
        "joint_limits_rad": [list(lim) for lim in robot.table.joint_limits],
        "p0_mm": [float(x) for x in robot.p0],
    }


def load_robot(path) -> RobotConfig:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InvalidArgumentError(f"robot config {path}: invalid JSON at line {exc.lineno}") from None
    return robot_from_dict(doc)


def save_robot(robot: RobotConfig, path):
    Path(path).write_text(json.dumps(robot_to_dict(robot), indent=2) + "\n")


def default_robot() -> RobotConfig:
    """Nominal ABB IRB 120 geometry shipped with the package (see data/irb120.json)."""
    text = resources.files("cablecal").joinpath("data/irb120.json").read_text()
    return robot_from_dict(json.loads(text))
