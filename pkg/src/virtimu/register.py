"""Inter-frame virtual sensor: per-frame planar transform estimation via
FFT phase correlation (low-rate motion channel at the video frame rate).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import RegistrationError
from .sigcore import MotionTrace
from .simulate import VideoClip

__all__ = ["TransformSeries", "phase_corr_shift", "ite_extract"]


@dataclass
class TransformSeries:
    """One 3x3 planar transform per frame, frame 0 as reference (identity)."""

    fps: float
    matrices: np.ndarray  # (n_frames, 3, 3)

    @property
    def n_frames(self) -> int:
        return self.matrices.shape[0]

    def entry_series(self, i: int, j: int) -> np.ndarray:
        return self.matrices[:, i, j]

    def to_trace(self) -> MotionTrace:
        """All 9 entries as a frame-rate MotionTrace (axes m00..m22)."""
        axes = [f"m{i}{j}" for i in range(3) for j in range(3)]
        data = self.matrices.reshape(self.n_frames, 9).T
        return MotionTrace(self.fps, axes, data)

    def motion_trace(self) -> MotionTrace:
        """Just the translation entries, as estimated camera motion (px)."""
        data = np.stack([self.matrices[:, 0, 2], self.matrices[:, 1, 2]])
        return MotionTrace(self.fps, ["tx", "ty"], data)

    def to_csv(self) -> str:
        lines = ["time_s," + ",".join(f"m{i}{j}" for i in range(3) for j in range(3))]
        for n in range(self.n_frames):
            vals = ",".join(repr(float(v)) for v in self.matrices[n].ravel())
            lines.append(f"{float(n / self.fps)!r},{vals}")
        return "\n".join(lines) + "\n"

    def save_csv(self, path) -> None:
        with open(path, "w") as f:
            f.write(self.to_csv())


def _prep(img):
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 2 or min(img.shape) < 16:
        raise RegistrationError(f"need a 2-D image >= 16x16, got shape {img.shape}")
    if np.ptp(img) == 0:
        raise RegistrationError("constant image has no registrable content")
    return img - img.mean()


_window_cache: dict[tuple[int, int], np.ndarray] = {}


def _hann2d(shape):
    win = _window_cache.get(shape)
    if win is None:
        win = np.outer(np.hanning(shape[0]), np.hanning(shape[1]))
        _window_cache[shape] = win
    return win


def _quad_peak_offset(m1, m0, p1):
    # 1-D quadratic fit through three samples around the peak
    denom = 2.0 * (2.0 * m0 - m1 - p1)
    if denom == 0:
        return 0.0
    off = (p1 - m1) / denom
    return float(np.clip(off, -0.5, 0.5))


def phase_corr_shift(ref, mov) -> tuple[float, float, float]:
    """Translation of ``mov`` content relative to ``ref`` via phase correlation.

    Returns (dx, dy, peak): mov ~= ref rolled by (+dy rows, +dx cols).
    ``peak`` is the normalized correlation-surface maximum in [0, 1],
    usable as a confidence score.  Subpixel refinement is a 3-point
    quadratic fit around the integer peak.
    """
    ref = _prep(ref)
    mov = _prep(mov)
    if ref.shape != mov.shape:
        raise RegistrationError(f"shape mismatch: {ref.shape} vs {mov.shape}")
    win = _hann2d(ref.shape)
    fr = np.fft.fft2(ref * win)
    fm = np.fft.fft2(mov * win)
    cross = fm * np.conj(fr)
    cross /= np.maximum(np.abs(cross), 1e-15)
    surf = np.fft.ifft2(cross).real
    h, w = surf.shape
    py, px = np.unravel_index(np.argmax(surf), surf.shape)
    peak = float(np.clip(surf[py, px], 0.0, 1.0))
    dy = py - h if py > h // 2 else py
    dx = px - w if px > w // 2 else px
    dy += _quad_peak_offset(
        surf[(py - 1) % h, px], surf[py, px], surf[(py + 1) % h, px]
    )
    dx += _quad_peak_offset(
        surf[py, (px - 1) % w], surf[py, px], surf[py, (px + 1) % w]
    )
    return float(dx), float(dy), peak


def _logpolar(mag, n_angles=180, n_radii=None):
    h, w = mag.shape
    if n_radii is None:
        n_radii = min(h, w) // 2
    cy, cx = h / 2.0, w / 2.0
    r_max = min(cy, cx)
    log_base = np.exp(np.log(r_max) / n_radii)
    radii = log_base ** np.arange(n_radii)
    thetas = np.linspace(0, np.pi, n_angles, endpoint=False)
    ys = cy + radii[None, :] * np.sin(thetas)[:, None]
    xs = cx + radii[None, :] * np.cos(thetas)[:, None]
    y0 = np.clip(ys.astype(int), 0, h - 2)
    x0 = np.clip(xs.astype(int), 0, w - 2)
    fy = ys - y0
    fx = xs - x0
    out = (
        mag[y0, x0] * (1 - fy) * (1 - fx)
        + mag[y0, x0 + 1] * (1 - fy) * fx
        + mag[y0 + 1, x0] * fy * (1 - fx)
        + mag[y0 + 1, x0 + 1] * fy * fx
    )
    return out, log_base


def _rotation_scale(ref, mov):
    """Rotation (rad) and scale of mov vs ref via log-polar phase correlation."""
    win = _hann2d(ref.shape)
    mr = np.fft.fftshift(np.abs(np.fft.fft2(ref * win)))
    mm = np.fft.fftshift(np.abs(np.fft.fft2(mov * win)))
    lp_r, log_base = _logpolar(np.log1p(mr))
    lp_m, _ = _logpolar(np.log1p(mm))
    # rows of the log-polar images are angle, cols are log-radius
    dx, dy, _ = phase_corr_shift(lp_r, lp_m)
    angle = -dy * np.pi / lp_r.shape[0]
    scale = log_base ** (-dx)
    return float(angle), float(scale)


def _warp_affine(img, angle, scale):
    from ._kernels import warp_bilinear

    h, w = img.shape
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    r = np.arange(h)[:, None] - cy
    c = np.arange(w)[None, :] - cx
    cos_a, sin_a = np.cos(angle), np.sin(angle)
    ys = (r * cos_a - c * sin_a) * scale + cy
    xs = (r * sin_a + c * cos_a) * scale + cx
    out = np.empty_like(img)
    return warp_bilinear(img, ys - np.arange(h)[:, None], xs - np.arange(w)[None, :], out)


def ite_extract(video: VideoClip, mode: str = "translation", chained: bool = False) -> TransformSeries:
    """Image Transformation Estimation: one 3x3 matrix per frame.

    Translation entries are reported in camera-motion sign (the negation
    of the content shift).  ``mode="full"`` additionally estimates
    rotation/scale by log-polar phase correlation before the translation
    step.  ``chained=True`` registers consecutive pairs and accumulates,
    instead of anchoring every frame to frame 0.
    """
    if mode not in ("translation", "full"):
        raise RegistrationError(f"unknown ITE mode {mode!r}")
    if video.n_frames < 2:
        raise RegistrationError("need at least 2 frames")
    n = video.n_frames
    mats = np.tile(np.eye(3), (n, 1, 1))
    ref = video.frames[0]
    for i in range(1, n):
        mov = video.frames[i]
        anchor = video.frames[i - 1] if chained else ref
        angle, scale = 0.0, 1.0
        mov_t = mov
        if mode == "full":
            try:
                angle, scale = _rotation_scale(anchor - anchor.mean(), mov - mov.mean())
            except RegistrationError:
                angle, scale = 0.0, 1.0
            if abs(angle) > 1e-4 or abs(scale - 1.0) > 1e-4:
                mov_t = _warp_affine(mov, -angle, 1.0 / scale)
        try:
            dx, dy, _peak = phase_corr_shift(anchor, mov_t)
        except RegistrationError as exc:
            raise RegistrationError(f"frame {i}: {exc}") from exc
        cos_a, sin_a = np.cos(angle), np.sin(angle)
        step = np.array(
            [
                [scale * cos_a, -scale * sin_a, -dx],
                [scale * sin_a, scale * cos_a, -dy],
                [0.0, 0.0, 1.0],
            ]
        )
        mats[i] = mats[i - 1] @ step if chained else step
    return TransformSeries(fps=video.cam.fps, matrices=mats)
