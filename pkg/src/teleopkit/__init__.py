"""Dexterous-hand teleoperation toolkit.

Subsystems: kinematic hand models with forward kinematics
(:mod:`teleopkit.hand_model`), task-space-vector retargeting
(:mod:`teleopkit.retarget`), a shadowless tactile-sensor simulator
(:mod:`teleopkit.tactile`), pose-stream replay and dataset preprocessing
(:mod:`teleopkit.streams`, :mod:`teleopkit.preprocess`), and a live
streaming service (:mod:`teleopkit.service`).
"""

from .geometry import Pose
from .hand_model import (
    HandModel,
    JointSpec,
    ModelError,
    clamp_to_limits,
    default_hand_model,
    forward_kinematics,
    load_hand_model,
    load_hand_model_file,
)
from .retarget import (
    RetargetParams,
    SolveResult,
    TsvSet,
    eval_gradient,
    eval_objective,
    retarget_sequence,
    retarget_step,
    task_space_vectors,
)

__version__ = "0.1.0"
