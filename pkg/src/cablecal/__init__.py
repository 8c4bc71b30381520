"""Kinematic calibration of 6-joint DH manipulators from drawstring cable lengths."""

__version__ = "0.1.0"

from .errors import (  # noqa: F401
    CalibrationError, DegenerateGeometryError, InvalidArgumentError, NumericalFailure, OptimizerAbort,
)
from .kinematics import (  # noqa: F401
    DhTable, LinkParams, Pose, RobotConfig, apply_deviation, cable_length, default_robot,
    forward_kinematics, link_transform, load_robot, pose_error,
)
from .error_model import Dataset, distance_jacobian, dh_partials, objective, position_jacobian  # noqa: F401
from .beetle import BeetleConfig, optimize, quadratic_vertex  # noqa: F401
from .ekf import EkfNoiseConfig, run_ekf  # noqa: F401
from .simulate import DeviationSpec, NoiseModel, simulate_measurements  # noqa: F401
from .pipeline import METHODS, PipelineConfig, Scenario, calibrate, compare, metrics, split_dataset  # noqa: F401
