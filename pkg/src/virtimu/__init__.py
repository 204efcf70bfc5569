"""virtimu: virtual IMU synthesis from camera motion side channels.

Simulates rolling-shutter video under injected camera motion, extracts
inter-frame (ITE) and intra-frame (RSE) motion traces by image
registration, and evaluates tremor-based multimodal authentication.
"""

from .sigcore import MotionTrace, Spectrum, max_lag_corr, pearson_corr, power_spectrum, resample
from .simulate import (
    CameraConfig,
    Scene,
    SubjectModel,
    VideoClip,
    gen_tremor,
    make_scene,
    render_video,
    simulate_physical_imu,
)
from .register import TransformSeries, ite_extract, phase_corr_shift
from .rse import DemonsConfig, DisplacementField, demons_register, rse_extract
from .features import SCHEMA_V1, FeatureSchema, FeatureVector, extract_features
from .auth import (
    AuthDecision,
    ErrorReport,
    Template,
    and_fuse,
    error_report,
    train_classifier,
    verify_tremor,
    visual_stub,
)
from .sidechan import (
    ChannelVerdict,
    SensorModel,
    Thresholds,
    classify_controllability,
    detect_channel,
    test_separability,
    virtual_sensor,
)

__version__ = "0.1.0"
