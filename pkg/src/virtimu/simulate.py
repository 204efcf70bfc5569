"""Synthetic ground-truth oracle: tremor generation, video rendering,
and simulated physical-IMU readings.

The renderer views a large textured planar scene through a frame-sized
window whose position follows the camera motion trace.  Sign convention:
a positive ``tx`` moves the viewed window right in scene coordinates, so
frame content shifts left.  The extraction modules undo this so that the
recovered traces share the ground-truth sign.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import gaussian_filter

from ._kernels import bilinear_rows
from .errors import ConfigError, RenderError, VirtimuError
from .sigcore import MotionTrace, resample

__all__ = [
    "Scene",
    "CameraConfig",
    "SubjectModel",
    "VideoClip",
    "make_scene",
    "gen_tremor",
    "render_video",
    "simulate_physical_imu",
    "lowpass",
]


@dataclass
class Scene:
    """Textured planar scene, intensities in [0, 1]."""

    intensities: np.ndarray
    texture_seed: int = 0

    def __post_init__(self):
        self.intensities = np.asarray(self.intensities, dtype=np.float64)
        if not np.all(np.isfinite(self.intensities)):
            raise VirtimuError("scene contains non-finite values")
        lo, hi = self.intensities.min(), self.intensities.max()
        if lo < 0.0 or hi > 1.0:
            raise VirtimuError(f"scene intensities outside [0,1]: [{lo}, {hi}]")

    @property
    def shape(self):
        return self.intensities.shape


@dataclass
class CameraConfig:
    frame_w: int = 160
    frame_h: int = 120
    fps: float = 30.0
    shutter: str = "rolling"  # "global" | "rolling"
    row_scan_period: float = 0.0  # s/row; 0 picks 1/(fps*frame_h)
    exposure_time: float = 0.0
    stabilization: str = "off"  # "off" | "on"
    stabilization_strength: float = 1.0
    exposure_samples: int = 8

    def __post_init__(self):
        if self.shutter not in ("global", "rolling"):
            raise ConfigError(f"unknown shutter mode {self.shutter!r}")
        if self.stabilization not in ("off", "on"):
            raise ConfigError(f"stabilization must be 'off'/'on', got {self.stabilization!r}")
        if self.shutter == "rolling" and self.row_scan_period == 0.0:
            self.row_scan_period = 1.0 / (self.fps * self.frame_h)
        if self.shutter == "rolling" and self.row_scan_period * self.frame_h > 1.0 / self.fps + 1e-12:
            raise ConfigError("row_scan_period * frame_h exceeds the frame period")
        if self.exposure_time >= 1.0 / self.fps:
            raise ConfigError("exposure_time must be shorter than the frame period")

    @property
    def row_rate(self) -> float:
        """Effective intra-frame sample rate (rows per second, nominal)."""
        return self.fps * self.frame_h

    def manifest(self) -> dict:
        return {
            "fps": self.fps,
            "frame_w": self.frame_w,
            "frame_h": self.frame_h,
            "shutter": self.shutter,
            "row_scan_period_s": self.row_scan_period,
            "exposure_time_s": self.exposure_time,
            "stabilization": self.stabilization,
            "stabilization_strength": self.stabilization_strength,
        }


@dataclass
class SubjectModel:
    """Per-subject tremor parameterization.

    ``harmonic_weights[0]`` weights the dominant frequency itself; entry k
    weights harmonic (k+1)*dominant_freq.  The stack is normalized so the
    peak-to-peak amplitude is about 2*amplitude_px.
    """

    subject_id: str
    dominant_freq: float = 9.0
    band: tuple[float, float] = (2.0, 20.0)
    amplitude_px: float = 3.0
    harmonic_weights: list[float] = field(default_factory=lambda: [1.0, 0.25])
    noise_seed: int = 0
    noise_frac: float = 0.15  # band-noise rms as a fraction of amplitude_px

    def __post_init__(self):
        if self.band[0] <= 0 or self.band[1] <= self.band[0]:
            raise ConfigError(f"bad tremor band {self.band}")
        if not (self.band[0] <= self.dominant_freq <= self.band[1]):
            raise ConfigError("dominant_freq outside tremor band")
        if self.amplitude_px < 0:
            raise ConfigError("amplitude_px must be >= 0")
        if self.noise_frac < 0:
            raise ConfigError("noise_frac must be >= 0")


@dataclass
class VideoClip:
    """Rendered frames (n, h, w) in [0, 1] plus the camera that made them."""

    frames: np.ndarray
    cam: CameraConfig

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    def save(self, out_dir) -> None:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "manifest"), "w") as f:
            for k, v in self.cam.manifest().items():
                f.write(f"{k}={v!r}\n" if isinstance(v, str) else f"{k}={v}\n")
        for i in range(self.n_frames):
            img = np.clip(np.round(self.frames[i] * 255.0), 0, 255).astype(np.uint8)
            path = os.path.join(out_dir, f"frame_{i:06d}.pgm")
            with open(path, "wb") as f:
                f.write(f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode())
                f.write(img.tobytes())

    @classmethod
    def load(cls, in_dir) -> "VideoClip":
        mpath = os.path.join(in_dir, "manifest")
        if not os.path.isfile(mpath):
            raise ConfigError(f"no manifest in {in_dir}")
        kv = {}
        with open(mpath) as f:
            for line in f:
                line = line.strip()
                if line and "=" in line:
                    k, v = line.split("=", 1)
                    kv[k] = v.strip().strip("'\"")
        cam = CameraConfig(
            frame_w=int(kv["frame_w"]),
            frame_h=int(kv["frame_h"]),
            fps=float(kv["fps"]),
            shutter=kv["shutter"],
            row_scan_period=float(kv["row_scan_period_s"]),
            exposure_time=float(kv["exposure_time_s"]),
            stabilization=kv["stabilization"],
            stabilization_strength=float(kv["stabilization_strength"]),
        )
        names = sorted(n for n in os.listdir(in_dir) if n.endswith(".pgm"))
        if not names:
            raise ConfigError(f"no frames in {in_dir}")
        frames = []
        for name in names:
            with open(os.path.join(in_dir, name), "rb") as f:
                frames.append(_read_pgm(f))
        return cls(frames=np.stack(frames) / 255.0, cam=cam)


def _read_pgm(f):
    magic = f.readline().strip()
    if magic != b"P5":
        raise ConfigError(f"not a binary PGM: {magic!r}")
    vals = []
    while len(vals) < 3:
        line = f.readline()
        if line.startswith(b"#"):
            continue
        vals += [int(t) for t in line.split()]
    w, h, maxval = vals[:3]
    data = np.frombuffer(f.read(w * h), dtype=np.uint8)
    return data.reshape(h, w).astype(np.float64)


def make_scene(frame_h: int, frame_w: int, seed: int = 0, factor: int = 4) -> Scene:
    """Seeded band-limited noise texture, `factor`x the frame size.

    Two smoothing scales are mixed so registration sees gradients at both
    coarse and fine levels.
    """
    rng = np.random.default_rng(seed)
    h, w = factor * frame_h, factor * frame_w
    raw = rng.standard_normal((h, w))
    tex = gaussian_filter(raw, 1.2) + 0.5 * gaussian_filter(raw, 6.0)
    tex -= tex.min()
    tex /= tex.max()
    return Scene(intensities=tex, texture_seed=seed)


def gen_tremor(
    subject: SubjectModel, duration: float, rate: float, seed: int = 0
) -> MotionTrace:
    """Subject-specific tremor trace on axes (tx, ty), pixels.

    Harmonic sinusoid stack plus band-limited noise; fully determined by
    (subject.noise_seed, seed).  ``seed`` distinguishes recordings of the
    same subject (fresh phases and noise, same spectral signature).  A
    per-recording gain in [0.8, 1.25] models session-to-session intensity
    variation so raw amplitude is not a stable biometric.
    """
    if rate < 4.0 * subject.band[1]:
        raise ConfigError(
            f"sample rate {rate} Hz too low for tremor band top {subject.band[1]} Hz"
        )
    n = int(round(duration * rate)) + 1
    t = np.arange(n) / rate
    rng = np.random.default_rng((subject.noise_seed, seed))
    session_gain = rng.uniform(0.8, 1.25)
    data = np.empty((2, n))
    weights = np.asarray(subject.harmonic_weights, dtype=np.float64)
    wsum = np.abs(weights).sum() or 1.0
    for ax in range(2):
        sig = np.zeros(n)
        for k, wk in enumerate(weights):
            f_k = subject.dominant_freq * (k + 1)
            if f_k > subject.band[1]:
                break
            phase = rng.uniform(0, 2 * np.pi)
            sig += wk * np.sin(2 * np.pi * f_k * t + phase)
        sig *= subject.amplitude_px / wsum
        noise = rng.standard_normal(n)
        noise = _bandpass(noise, rate, subject.band)
        rms = np.sqrt(np.mean(noise**2)) or 1.0
        sig += noise / rms * subject.noise_frac * subject.amplitude_px
        data[ax] = sig * session_gain
    return MotionTrace(sample_rate=rate, axes=["tx", "ty"], data=data)


def _bandpass(x, rate, band):
    spec = np.fft.rfft(x)
    f = np.fft.rfftfreq(x.size, 1.0 / rate)
    spec[(f < band[0]) | (f > band[1])] = 0.0
    return np.fft.irfft(spec, n=x.size)


def lowpass(x, rate, cutoff_hz):
    """Brick-wall FFT low-pass along the last axis."""
    x = np.asarray(x, dtype=np.float64)
    spec = np.fft.rfft(x, axis=-1)
    f = np.fft.rfftfreq(x.shape[-1], 1.0 / rate)
    spec[..., f > cutoff_hz] = 0.0
    return np.fft.irfft(spec, n=x.shape[-1], axis=-1)


STABILIZATION_CUTOFF_HZ = 20.0


def _applied_motion(motion: MotionTrace, cam: CameraConfig) -> MotionTrace:
    if cam.stabilization == "off" or cam.stabilization_strength == 0.0:
        return motion
    cancelled = motion.data - cam.stabilization_strength * lowpass(
        motion.data, motion.sample_rate, STABILIZATION_CUTOFF_HZ
    )
    return MotionTrace(motion.sample_rate, list(motion.axes), cancelled, t0=motion.t0)


def render_video(scene: Scene, motion: MotionTrace, cam: CameraConfig) -> VideoClip:
    """Render the clip covered by ``motion`` under the given camera.

    Global shutter samples the whole frame at one instant per sub-exposure;
    rolling shutter samples row r of frame n at n/fps + r*row_scan_period.
    Exposure blur averages ``cam.exposure_samples`` samples spread over
    exposure_time.
    """
    if "tx" not in motion.axes or "ty" not in motion.axes:
        raise RenderError("motion must provide tx and ty axes")
    if cam.shutter == "rolling" and motion.sample_rate < 1.0 / cam.row_scan_period - 1e-9:
        raise RenderError(
            f"motion rate {motion.sample_rate} Hz below row rate "
            f"{1.0 / cam.row_scan_period:.1f} Hz needed for rolling shutter"
        )
    n_frames = int(np.floor(motion.duration * cam.fps)) + 1
    if n_frames < 1:
        raise RenderError("motion too short for a single frame")

    applied = _applied_motion(motion, cam)
    t_m = applied.times
    mx = applied.axis("tx")
    my = applied.axis("ty")

    sh, sw = scene.shape
    oy = (sh - cam.frame_h) / 2.0
    ox = (sw - cam.frame_w) / 2.0
    margin_y = min(oy, sh - cam.frame_h - oy) - 1.0
    margin_x = min(ox, sw - cam.frame_w - ox) - 1.0
    if np.max(np.abs(my)) > margin_y or np.max(np.abs(mx)) > margin_x:
        raise RenderError(
            f"motion excursion ({np.max(np.abs(mx)):.1f}, {np.max(np.abs(my)):.1f}) px "
            f"exceeds scene margin ({margin_x:.1f}, {margin_y:.1f}) px"
        )

    K = max(1, cam.exposure_samples) if cam.exposure_time > 0 else 1
    rows = np.arange(cam.frame_h)
    frames = np.empty((n_frames, cam.frame_h, cam.frame_w))
    acc = np.empty((cam.frame_h, cam.frame_w))
    tmp = np.empty_like(acc)
    for n in range(n_frames):
        t_frame = n / cam.fps
        acc[:] = 0.0
        for k in range(K):
            t_exp = (k + 0.5) / K * cam.exposure_time if K > 1 else 0.0
            if cam.shutter == "rolling":
                t_rows = t_frame + rows * cam.row_scan_period + t_exp
            else:
                t_rows = np.full(cam.frame_h, t_frame + t_exp)
            row_dx = np.interp(t_rows, t_m, mx)
            row_dy = np.interp(t_rows, t_m, my)
            acc += bilinear_rows(scene.intensities, oy, ox, row_dy, row_dx, tmp)
        # 8-bit quantization: the only photometric noise source, and it
        # matches what the on-disk PGM format stores anyway
        frames[n] = np.round(acc / K * 255.0) / 255.0
    return VideoClip(frames=frames, cam=cam)


def simulate_physical_imu(
    motion: MotionTrace, rate: float, noise_std: float = 0.0, seed: int = 0
) -> MotionTrace:
    """Simulated accelerometer readings from a displacement trace.

    Resamples to ``rate`` and applies a central second finite difference
    (units: px/s^2), then adds seeded white noise.
    """
    if rate > motion.sample_rate:
        raise VirtimuError("IMU rate must not exceed the motion trace rate")
    base = resample(motion, rate)
    data = np.empty_like(base.data)
    for i in range(data.shape[0]):
        data[i] = np.gradient(np.gradient(base.data[i]) * rate) * rate
    if noise_std > 0:
        rng = np.random.default_rng(seed)
        data = data + rng.normal(0.0, noise_std, size=data.shape)
    return MotionTrace(rate, list(base.axes), data, t0=base.t0)
