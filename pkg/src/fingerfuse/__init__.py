"""Finger-worn 3D input: IMU attitude, optical motion and their fusion."""

__version__ = "0.1.0"

from .errors import (DegenerateFitError, FingerFuseError, InvalidInputError, OutOfRangeError,
                     ProtocolError, TraceFormatError)
from .geom import EulerAngles, Ray
from .ahrs import AhrsGains, AhrsState, ImuSample, ahrs_init, ahrs_run, ahrs_update
from .optical import (MODEL_400CPI, MODEL_800CPI, AccelerationModel, OpticalSample,
                      SensorConfig, correct_counts, distort_counts, fit_linear, fit_polynomial,
                      model_counts)
from .gestures import EventKind, GestureConfig, GestureEvent, GestureState, gesture_update, recognize
from .fusion import FormFactor, FusionState, PosePoint, fusion_step, plane_orientation, run_pipeline
from .interact import RotationCommand, RotationGain, SceneObject, pointing_ray, rotation_from_stroke, select
from .protocol import WireFrame, emit_line, parse_line
from .simtrace import ShapeSpec, TextureProfile, Trace, generate_trace, read_trace, write_trace
from .evalstats import AnovaResult, EvalReport, aggregate, anova_from_sums, error_series, one_way_anova
from .kernels import BACKEND
