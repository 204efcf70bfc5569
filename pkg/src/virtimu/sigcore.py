"""Shared signal types, resampling, spectral analysis and correlation primitives.

All functions here are pure and safe for concurrent use.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateSignalError, SignalLengthError, VirtimuError

__all__ = [
    "MotionTrace",
    "Spectrum",
    "pearson_corr",
    "max_lag_corr",
    "resample",
    "power_spectrum",
]


@dataclass
class MotionTrace:
    """Uniformly sampled multi-axis motion signal.

    ``data`` is an array of shape (n_axes, n_samples); row order matches
    ``axes``.  Units are whatever the producer used (pixels, pixels/row,
    m/s^2, ...) and are not converted here.
    """

    sample_rate: float
    axes: list[str]
    data: np.ndarray
    t0: float = 0.0

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim == 1:
            self.data = self.data[None, :]
        if self.sample_rate <= 0:
            raise VirtimuError(f"sample_rate must be positive, got {self.sample_rate}")
        if len(self.axes) != self.data.shape[0]:
            raise VirtimuError(
                f"{len(self.axes)} axis labels for {self.data.shape[0]} data rows"
            )
        if self.data.shape[1] < 1:
            raise SignalLengthError("trace must contain at least one sample")
        if not np.all(np.isfinite(self.data)):
            raise VirtimuError("trace contains NaN/Inf samples")

    @property
    def n_samples(self) -> int:
        return self.data.shape[1]

    @property
    def duration(self) -> float:
        return (self.n_samples - 1) / self.sample_rate

    @property
    def times(self) -> np.ndarray:
        return self.t0 + np.arange(self.n_samples) / self.sample_rate

    def axis(self, name: str) -> np.ndarray:
        try:
            return self.data[self.axes.index(name)]
        except ValueError:
            raise KeyError(f"no axis {name!r}; have {self.axes}") from None

    def to_csv(self) -> str:
        """Serialize as `time_s,<axes...>` CSV with a sample-rate comment."""
        buf = io.StringIO()
        buf.write(f"# sample_rate_hz={self.sample_rate!r}\n")
        buf.write("time_s," + ",".join(self.axes) + "\n")
        t = self.times
        for i in range(self.n_samples):
            row = ",".join(repr(float(v)) for v in self.data[:, i])
            buf.write(f"{float(t[i])!r},{row}\n")
        return buf.getvalue()

    def save_csv(self, path) -> None:
        with open(path, "w") as f:
            f.write(self.to_csv())

    @classmethod
    def from_csv(cls, text: str) -> "MotionTrace":
        sample_rate = None
        header = None
        rows = []
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line.lstrip("#").strip()
                if body.startswith("sample_rate_hz="):
                    sample_rate = float(body.split("=", 1)[1])
                continue
            if header is None:
                header = line.split(",")
                continue
            rows.append([float(v) for v in line.split(",")])
        if header is None or not rows:
            raise VirtimuError("empty trace CSV")
        if sample_rate is None:
            raise VirtimuError("trace CSV missing '# sample_rate_hz=' comment")
        arr = np.asarray(rows, dtype=np.float64)
        return cls(
            sample_rate=sample_rate,
            axes=header[1:],
            data=arr[:, 1:].T,
            t0=float(arr[0, 0]),
        )

    @classmethod
    def load_csv(cls, path) -> "MotionTrace":
        with open(path) as f:
            return cls.from_csv(f.read())


@dataclass
class Spectrum:
    """One-sided power spectrum; bins span [0, sample_rate/2]."""

    bin_hz: float
    power: np.ndarray = field(repr=False)

    @property
    def freqs(self) -> np.ndarray:
        return np.arange(len(self.power)) * self.bin_hz

    def peak_freq(self) -> float:
        return float(np.argmax(self.power) * self.bin_hz)


def _check_pair(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise SignalLengthError(f"length mismatch: {a.shape} vs {b.shape}")
    if a.size < 2:
        raise SignalLengthError("need at least 2 samples")
    return a, b


def pearson_corr(a, b) -> float:
    """Pearson correlation coefficient of two equal-length sequences.

    Raises DegenerateSignalError on zero-variance input rather than
    returning 0: a flat signal means the sensor output is degenerate and
    callers must be able to tell that apart from genuine decorrelation.
    """
    a, b = _check_pair(a, b)
    ad = a - a.mean()
    bd = b - b.mean()
    na = np.sqrt(np.dot(ad, ad))
    nb = np.sqrt(np.dot(bd, bd))
    if na == 0.0 or nb == 0.0:
        raise DegenerateSignalError("zero-variance input to pearson_corr")
    r = float(np.dot(ad, bd) / (na * nb))
    return max(-1.0, min(1.0, r))


def max_lag_corr(a, b, max_lag: int) -> tuple[int, float]:
    """Exhaustive integer-lag alignment maximizing |pearson_corr|.

    Positive lag means ``b`` is a delayed copy of ``a``; returns the best
    lag and the (signed) correlation there.
    """
    a, b = _check_pair(a, b)
    n = a.size
    if max_lag < 0 or max_lag >= n // 2:
        raise SignalLengthError(f"max_lag {max_lag} must be in [0, {n // 2})")
    best_lag, best_r = 0, 0.0
    for lag in range(-max_lag, max_lag + 1):
        if lag >= 0:
            r = pearson_corr(a[: n - lag], b[lag:])
        else:
            r = pearson_corr(a[-lag:], b[: n + lag])
        if abs(r) > abs(best_r):
            best_lag, best_r = lag, r
    return best_lag, best_r


def resample(trace: MotionTrace, target_rate: float) -> MotionTrace:
    """Linear-interpolation resampling onto a uniform grid at target_rate.

    The new grid starts at t0 and covers the original duration; resampling
    at the original rate is the identity.
    """
    if target_rate <= 0:
        raise VirtimuError(f"target_rate must be positive, got {target_rate}")
    if target_rate == trace.sample_rate:
        return trace
    n_new = int(np.floor(trace.duration * target_rate)) + 1
    t_new = trace.t0 + np.arange(n_new) / target_rate
    t_old = trace.times
    data = np.empty((len(trace.axes), n_new))
    for i in range(len(trace.axes)):
        data[i] = np.interp(t_new, t_old, trace.data[i])
    return MotionTrace(target_rate, list(trace.axes), data, t0=trace.t0)


def power_spectrum(samples, sample_rate: float) -> Spectrum:
    """One-sided power spectrum of the mean-removed, Hann-windowed signal.

    Normalization: total power equals the windowed mean-square of the
    mean-removed signal, sum(w*x)^2 terms over sum(w^2) -- i.e. Parseval
    holds exactly against sum((w*(x-mean))**2) / sum(w**2).
    """
    x = np.asarray(samples, dtype=np.float64)
    if x.size < 8:
        raise SignalLengthError(f"power_spectrum needs >= 8 samples, got {x.size}")
    n = x.size
    w = np.hanning(n)
    xw = (x - x.mean()) * w
    spec = np.fft.rfft(xw)
    p = np.abs(spec) ** 2
    # fold negative frequencies into the one-sided spectrum
    p[1:] *= 2.0
    if n % 2 == 0:
        p[-1] /= 2.0
    p /= n * np.sum(w**2)
    return Spectrum(bin_hz=sample_rate / n, power=p)
