"""Fixed-length feature vectors from motion traces for tremor recognition."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .errors import SignalLengthError, VirtimuError
from .sigcore import MotionTrace, power_spectrum, resample

__all__ = ["FeatureSchema", "FeatureVector", "extract_features", "SCHEMA_V1"]

# per-axis feature names, in vector order
TIME_FEATURES = [
    "mean",
    "std",
    "rms",
    "skewness",
    "kurtosis",
    "zcr",
    "ptp",
    "mad",  # mean absolute derivative
]
SPECTRAL_FEATURES = [
    "dom_freq",
    "band_2_6",
    "band_6_10",
    "band_10_14",
    "centroid",
    "entropy",
]

TREMOR_BAND = (2.0, 20.0)
SUB_BANDS = ((2.0, 6.0), (6.0, 10.0), (10.0, 14.0))

# canonical extraction rates so classifier inputs are rate-stable
SOURCE_RATES = {"physical": 400.0, "ite": 30.0, "rse": 2000.0}


@dataclass
class FeatureSchema:
    schema_id: str
    axes: list[str] = field(default_factory=lambda: ["tx", "ty"])
    min_duration_s: float = 2.0

    @property
    def length(self) -> int:
        return len(self.axes) * (len(TIME_FEATURES) + len(SPECTRAL_FEATURES))

    def names(self) -> list[str]:
        return [
            f"{ax}_{name}"
            for ax in self.axes
            for name in TIME_FEATURES + SPECTRAL_FEATURES
        ]


SCHEMA_V1 = FeatureSchema(schema_id="tremor-v1")


@dataclass
class FeatureVector:
    values: np.ndarray
    schema_id: str
    source: str = "physical"

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if not np.all(np.isfinite(self.values)):
            raise VirtimuError("non-finite feature values")


def _axis_time_features(x):
    std = float(np.std(x))
    if std == 0.0:
        # constant axis: defined fallback instead of an error
        return [float(np.mean(x)), 0.0, float(abs(np.mean(x))), 0.0, 0.0, 0.0, 0.0, 0.0]
    d = x - np.mean(x)
    zcr = float(np.count_nonzero(np.diff(np.signbit(d))) / (x.size - 1))
    return [
        float(np.mean(x)),
        std,
        float(np.sqrt(np.mean(x**2))),
        float(stats.skew(x)),
        float(stats.kurtosis(x)),
        zcr,
        float(np.ptp(x)),
        float(np.mean(np.abs(np.diff(x)))),
    ]


def _axis_spectral_features(x, rate):
    if np.std(x) == 0.0:
        return [0.0] * len(SPECTRAL_FEATURES)
    spec = power_spectrum(x, rate)
    f = spec.freqs
    p = spec.power
    total = p.sum()
    if total <= 0.0:
        return [0.0] * len(SPECTRAL_FEATURES)
    in_band = (f >= TREMOR_BAND[0]) & (f <= TREMOR_BAND[1])
    if np.any(in_band):
        dom = float(f[in_band][np.argmax(p[in_band])])
    else:
        dom = 0.0
    fracs = [
        float(p[(f >= lo) & (f < hi)].sum() / total) for lo, hi in SUB_BANDS
    ]
    centroid = float(np.sum(f * p) / total)
    q = p / total
    q = q[q > 0]
    entropy = float(-np.sum(q * np.log(q)) / np.log(len(p)))
    return [dom, *fracs, centroid, entropy]


def extract_features(
    trace: MotionTrace, schema: FeatureSchema = SCHEMA_V1, source: str = "physical"
) -> FeatureVector:
    """Time- and frequency-domain features, concatenated in schema axis order.

    The trace is first resampled to the source's canonical rate (see
    SOURCE_RATES) so that vectors from different virtual sensors are
    comparable across recording rates.
    """
    if source not in SOURCE_RATES:
        raise VirtimuError(f"unknown feature source {source!r}")
    if trace.duration < schema.min_duration_s:
        raise SignalLengthError(
            f"trace too short: {trace.duration:.2f} s < {schema.min_duration_s} s"
        )
    canon = resample(trace, SOURCE_RATES[source])
    vals = []
    axis_map = dict(zip(_normalized_axes(canon.axes), canon.data))
    for ax in schema.axes:
        if ax not in axis_map:
            raise VirtimuError(f"trace lacks axis {ax!r} (have {canon.axes})")
        x = axis_map[ax]
        vals += _axis_time_features(x)
        vals += _axis_spectral_features(x, canon.sample_rate)
    return FeatureVector(values=np.asarray(vals), schema_id=schema.schema_id, source=source)


def _normalized_axes(axes):
    # rse traces use tx_rows/ty_rows; map onto the schema's tx/ty slots
    return [ax.removesuffix("_rows") for ax in axes]
