"""Side-channel analytical framework: detection, separability testing,
controllability classification, and the virtual-sensor dispatch.

Verdicts respect the implication chain
controllable => separable => channel-detected; ``classify`` never claims
general inseparability, only "not separable by the supplied decomposers".
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import VirtimuError
from .sigcore import MotionTrace, max_lag_corr, resample

__all__ = [
    "SensorModel",
    "ChannelVerdict",
    "Thresholds",
    "detect_channel",
    "test_separability",
    "classify_controllability",
    "virtual_sensor",
]

CLASSIFICATIONS = ("no-channel", "inseparable", "separable", "controllable")


@dataclass
class Thresholds:
    """Correlation thresholds; tunable, defaults sized for the synthetic suite."""

    alpha: float = 0.3  # detection and the two lower bounds of separability
    beta: float = 0.3  # the two cross-term upper bounds
    delta: float = 0.1  # required mitigation on/off score margin
    max_lag_s: float = 0.1


@dataclass
class SensorModel:
    """A sensor with named hidden variables and an optional mitigation.

    ``mixer`` maps (s_int, {name: s_vi}, mitigated) -> measurement trace;
    the boolean models whether the suppression mechanism g(.) is active,
    which lets mitigation live anywhere in the measurement path (e.g.
    video stabilization acts inside the renderer, not on the output).
    """

    name: str
    mixer: object
    hidden_vars: list[str]
    has_mitigation: bool = False
    mitigation_enabled: bool = False

    def __post_init__(self):
        if len(set(self.hidden_vars)) != len(self.hidden_vars):
            raise VirtimuError("hidden variable names must be unique")

    def measure(self, s_int: MotionTrace, s_side: dict[str, MotionTrace]) -> MotionTrace:
        mitigated = self.has_mitigation and self.mitigation_enabled
        return self.mixer(s_int, s_side, mitigated)


@dataclass
class ChannelVerdict:
    classification: str
    scores: dict[str, float] = field(default_factory=dict)
    thresholds: Thresholds = field(default_factory=Thresholds)
    notes: list[str] = field(default_factory=list)

    def __post_init__(self):
        if self.classification not in CLASSIFICATIONS:
            raise VirtimuError(f"unknown classification {self.classification!r}")

    def report(self) -> str:
        lines = [f"classification: {self.classification}"]
        for k, v in self.scores.items():
            lines.append(f"score.{k}: {v:.4f}")
        lines.append(f"threshold.alpha: {self.thresholds.alpha}")
        lines.append(f"threshold.beta: {self.thresholds.beta}")
        lines.append(f"threshold.delta: {self.thresholds.delta}")
        for n in self.notes:
            lines.append(f"note: {n}")
        return "\n".join(lines) + "\n"


def _common_rate(a: MotionTrace, b: MotionTrace) -> tuple[MotionTrace, MotionTrace]:
    rate = min(a.sample_rate, b.sample_rate)
    return resample(a, rate), resample(b, rate)


def _trace_corr(a: MotionTrace, b: MotionTrace, max_lag_s: float) -> float:
    """Max over axis pairs of the best lag-aligned |correlation|.

    Axes are matched positionally when counts agree, else all pairs are
    tried; the aggregate over axes is the max (documented choice).
    """
    a, b = _common_rate(a, b)
    n = min(a.n_samples, b.n_samples)
    max_lag = min(int(max_lag_s * a.sample_rate), n // 2 - 1)
    max_lag = max(max_lag, 0)
    if len(a.axes) == len(b.axes):
        pairs = list(zip(range(len(a.axes)), range(len(b.axes))))
    else:
        pairs = [(i, j) for i in range(len(a.axes)) for j in range(len(b.axes))]
    best = 0.0
    for i, j in pairs:
        _, r = max_lag_corr(a.data[i][:n], b.data[j][:n], max_lag)
        best = max(best, abs(r))
    return best


def detect_channel(
    m: MotionTrace, s_vi: MotionTrace, alpha: float = 0.3, max_lag_s: float = 0.1
) -> tuple[bool, float]:
    """True iff the best lag-aligned |corr| between measurement and hidden
    variable exceeds alpha."""
    score = _trace_corr(m, s_vi, max_lag_s)
    return score > alpha, score


def test_separability(
    m: MotionTrace,
    s_int: MotionTrace,
    s_vi: MotionTrace,
    decomposer,
    thresholds: Thresholds | None = None,
) -> ChannelVerdict:
    """Check the four correlation bounds against a candidate decomposer.

    ``decomposer(m) -> (m_int, m_vi)``.  Separable iff the two in-channel
    correlations clear alpha and the two cross correlations stay under
    beta.  A failed bound yields "inseparable" with a note that only the
    supplied decomposer was refuted.
    """
    th = thresholds or Thresholds()
    detected, det_score = detect_channel(m, s_vi, th.alpha, th.max_lag_s)
    m_int, m_vi = decomposer(m)
    scores = {
        "detect": det_score,
        "int_vs_sint": _trace_corr(m_int, s_int, th.max_lag_s),
        "vi_vs_svi": _trace_corr(m_vi, s_vi, th.max_lag_s),
        "int_vs_svi": _trace_corr(m_int, s_vi, th.max_lag_s),
        "vi_vs_sint": _trace_corr(m_vi, s_int, th.max_lag_s),
    }
    if not detected:
        return ChannelVerdict("no-channel", scores, th)
    ok = (
        scores["int_vs_sint"] > th.alpha
        and scores["vi_vs_svi"] > th.alpha
        and scores["int_vs_svi"] < th.beta
        and scores["vi_vs_sint"] < th.beta
    )
    if ok:
        return ChannelVerdict("separable", scores, th)
    return ChannelVerdict(
        "inseparable", scores, th,
        notes=["not separable by the supplied decomposer (no general claim)"],
    )


def classify_controllability(
    model: SensorModel,
    verdict: ChannelVerdict,
    s_int: MotionTrace,
    s_side: dict[str, MotionTrace],
    var: str | None = None,
) -> ChannelVerdict:
    """Upgrade a separable verdict to controllable when toggling the
    mitigation measurably suppresses the detection score."""
    if verdict.classification in ("no-channel", "inseparable"):
        return verdict
    var = var or model.hidden_vars[0]
    if var not in s_side:
        raise VirtimuError(f"no hidden-variable trace named {var!r}")
    th = verdict.thresholds
    scores = dict(verdict.scores)
    if not model.has_mitigation:
        scores["mitigated"] = scores["unmitigated"] = float("nan")
        return ChannelVerdict(
            "separable", scores, th, notes=["no mitigation mechanism present"]
        )
    was_enabled = model.mitigation_enabled
    try:
        model.mitigation_enabled = False
        _, off_score = detect_channel(model.measure(s_int, s_side), s_side[var], th.alpha, th.max_lag_s)
        model.mitigation_enabled = True
        _, on_score = detect_channel(model.measure(s_int, s_side), s_side[var], th.alpha, th.max_lag_s)
    finally:
        model.mitigation_enabled = was_enabled
    scores["unmitigated"] = off_score
    scores["mitigated"] = on_score
    if off_score - on_score > th.delta:
        return ChannelVerdict("controllable", scores, th)
    return ChannelVerdict(
        "separable", scores, th,
        notes=[f"mitigation margin {off_score - on_score:.3f} below delta {th.delta}"],
    )


def _band_noise(rng, n, rate, band):
    x = rng.standard_normal(n)
    spec = np.fft.rfft(x)
    f = np.fft.rfftfreq(n, 1.0 / rate)
    spec[(f < band[0]) | (f > band[1])] = 0.0
    x = np.fft.irfft(spec, n=n)
    rms = np.sqrt(np.mean(x**2)) or 1.0
    return x / rms


def _brickwall_split(x, rate, split_hz):
    spec = np.fft.rfft(x)
    f = np.fft.rfftfreq(x.size, 1.0 / rate)
    lo, hi = spec.copy(), spec.copy()
    lo[f > split_hz] = 0.0
    hi[f <= split_hz] = 0.0
    return np.fft.irfft(lo, n=x.size), np.fft.irfft(hi, n=x.size)


def synthetic_suite(thresholds: Thresholds | None = None, seed: int = 0,
                    duration: float = 8.0, rate: float = 200.0) -> dict[str, ChannelVerdict]:
    """Construction-ground-truth sensor suite for the framework tests.

    Cases: no coupling; band-disjoint mixing (separable); band-disjoint
    with a toggleable low-pass mitigation (controllable); same-band mixing
    (inseparable by any linear band split).
    """
    th = thresholds or Thresholds()
    rng = np.random.default_rng(seed)
    n = int(duration * rate)

    def trace(x):
        return MotionTrace(rate, ["a"], x[None, :])

    s_int = trace(_band_noise(rng, n, rate, (0.5, 5.0)))
    s_vi_hi = trace(_band_noise(rng, n, rate, (20.0, 30.0)))
    s_int_mid = trace(_band_noise(rng, n, rate, (5.0, 10.0)))
    s_vi_mid = trace(_band_noise(rng, n, rate, (5.0, 10.0)))

    def split_decomposer(m):
        lo, hi = _brickwall_split(m.data[0], m.sample_rate, 10.0)
        return trace(lo), trace(hi)

    def mixer_plain(si, side, mitigated, gain=0.8):
        x = si.data[0] + gain * side["v"].data[0]
        return trace(x)

    def mixer_mitigated(si, side, mitigated):
        x = si.data[0] + 0.8 * side["v"].data[0]
        if mitigated:
            lo, _ = _brickwall_split(x, rate, 10.0)
            x = lo
        return trace(x)

    verdicts: dict[str, ChannelVerdict] = {}

    # no coupling at all
    m0 = SensorModel("uncoupled", lambda si, sd, mit: trace(si.data[0].copy()), ["v"])
    meas = m0.measure(s_int, {"v": s_vi_hi})
    v = test_separability(meas, s_int, s_vi_hi, split_decomposer, th)
    verdicts["uncoupled"] = classify_controllability(m0, v, s_int, {"v": s_vi_hi})

    # band-disjoint leakage, no mitigation: separable but uncontrollable
    m1 = SensorModel("band-disjoint", mixer_plain, ["v"])
    meas = m1.measure(s_int, {"v": s_vi_hi})
    v = test_separability(meas, s_int, s_vi_hi, split_decomposer, th)
    verdicts["band_disjoint"] = classify_controllability(m1, v, s_int, {"v": s_vi_hi})

    # band-disjoint leakage with toggleable suppression: controllable
    m2 = SensorModel("mitigated", mixer_mitigated, ["v"], has_mitigation=True)
    meas = m2.measure(s_int, {"v": s_vi_hi})
    v = test_separability(meas, s_int, s_vi_hi, split_decomposer, th)
    verdicts["controllable"] = classify_controllability(m2, v, s_int, {"v": s_vi_hi})

    # same-band mixing: the split decomposer cannot separate it
    m3 = SensorModel("same-band", mixer_plain, ["v"])
    meas = m3.measure(s_int_mid, {"v": s_vi_mid})

    def mid_decomposer(m):
        lo, hi = _brickwall_split(m.data[0], m.sample_rate, 7.5)
        return trace(lo), trace(hi)

    v = test_separability(meas, s_int_mid, s_vi_mid, mid_decomposer, th)
    verdicts["same_band"] = classify_controllability(m3, v, s_int_mid, {"v": s_vi_mid})
    return verdicts


def virtual_sensor(kind: str, video) -> MotionTrace:
    """Uniform dispatch to the ITE/RSE virtual sensor functions."""
    from .register import ite_extract
    from .rse import rse_extract

    if kind == "ite":
        return ite_extract(video).motion_trace()
    if kind == "rse":
        return rse_extract(video)
    raise VirtimuError(f"unknown virtual sensor {kind!r} (expected 'ite' or 'rse')")
