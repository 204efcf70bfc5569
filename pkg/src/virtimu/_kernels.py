"""Hot numeric kernels: bilinear gather for rendering and warping.

Two implementations live here: numba @njit kernels and pure-numpy
fallbacks.  Selection is by environment variable ``VIRTIMU_NO_NUMBA`` --
set it to anything non-empty to force the numpy path (useful on platforms
without a working LLVM, and for the benchmark in benchmarks/).
"""

import os

import numpy as np

USE_NUMBA = not os.environ.get("VIRTIMU_NO_NUMBA")

if USE_NUMBA:
    try:
        from numba import njit
    except ImportError:
        USE_NUMBA = False


def _bilinear_rows_np(scene, oy, ox, row_dy, row_dx, out):
    """Sample out[r, c] = scene(oy + r + row_dy[r], ox + c + row_dx[r]).

    Coordinates are clamped to the scene border (callers validate margins
    beforehand, clamping only guards float round-off at the edge).
    """
    h, w = out.shape
    sh, sw = scene.shape
    r = np.arange(h)[:, None]
    c = np.arange(w)[None, :]
    y = np.clip(oy + r + row_dy[:, None], 0.0, sh - 1.0)
    x = np.clip(ox + c + row_dx[:, None], 0.0, sw - 1.0)
    # keep the interpolation cell in range; fy/fx reach 1.0 at the far edge
    # so integer coordinates are reproduced exactly
    y0 = np.minimum(np.floor(y), sh - 2).astype(np.int64)
    x0 = np.minimum(np.floor(x), sw - 2).astype(np.int64)
    fy = y - y0
    fx = x - x0
    s00 = scene[y0, x0]
    s01 = scene[y0, x0 + 1]
    s10 = scene[y0 + 1, x0]
    s11 = scene[y0 + 1, x0 + 1]
    out[:, :] = (
        s00 * (1 - fy) * (1 - fx)
        + s01 * (1 - fy) * fx
        + s10 * fy * (1 - fx)
        + s11 * fy * fx
    )
    return out


def _warp_bilinear_np(img, dy, dx, out):
    """Backward warp: out[r, c] = img(r + dy[r, c], c + dx[r, c]), clamped."""
    h, w = img.shape
    r = np.arange(h)[:, None]
    c = np.arange(w)[None, :]
    y = np.clip(r + dy, 0.0, h - 1.0)
    x = np.clip(c + dx, 0.0, w - 1.0)
    y0 = np.minimum(np.floor(y), h - 2).astype(np.int64)
    x0 = np.minimum(np.floor(x), w - 2).astype(np.int64)
    fy = y - y0
    fx = x - x0
    out[:, :] = (
        img[y0, x0] * (1 - fy) * (1 - fx)
        + img[y0, x0 + 1] * (1 - fy) * fx
        + img[y0 + 1, x0] * fy * (1 - fx)
        + img[y0 + 1, x0 + 1] * fy * fx
    )
    return out


if USE_NUMBA:

    @njit(cache=True)
    def _bilinear_rows_nb(scene, oy, ox, row_dy, row_dx, out):  # pragma: no cover
        h, w = out.shape
        sh, sw = scene.shape
        for r in range(h):
            yr = oy + r + row_dy[r]
            if yr < 0.0:
                yr = 0.0
            elif yr > sh - 1.0:
                yr = sh - 1.0
            y0 = int(np.floor(yr))
            if y0 > sh - 2:
                y0 = sh - 2
            fy = yr - y0
            for c in range(w):
                xc = ox + c + row_dx[r]
                if xc < 0.0:
                    xc = 0.0
                elif xc > sw - 1.0:
                    xc = sw - 1.0
                x0 = int(np.floor(xc))
                if x0 > sw - 2:
                    x0 = sw - 2
                fx = xc - x0
                out[r, c] = (
                    scene[y0, x0] * (1 - fy) * (1 - fx)
                    + scene[y0, x0 + 1] * (1 - fy) * fx
                    + scene[y0 + 1, x0] * fy * (1 - fx)
                    + scene[y0 + 1, x0 + 1] * fy * fx
                )
        return out

    @njit(cache=True)
    def _warp_bilinear_nb(img, dy, dx, out):  # pragma: no cover
        h, w = img.shape
        for r in range(h):
            for c in range(w):
                yr = r + dy[r, c]
                if yr < 0.0:
                    yr = 0.0
                elif yr > h - 1.0:
                    yr = h - 1.0
                xc = c + dx[r, c]
                if xc < 0.0:
                    xc = 0.0
                elif xc > w - 1.0:
                    xc = w - 1.0
                y0 = int(np.floor(yr))
                if y0 > h - 2:
                    y0 = h - 2
                x0 = int(np.floor(xc))
                if x0 > w - 2:
                    x0 = w - 2
                fy = yr - y0
                fx = xc - x0
                out[r, c] = (
                    img[y0, x0] * (1 - fy) * (1 - fx)
                    + img[y0, x0 + 1] * (1 - fy) * fx
                    + img[y0 + 1, x0] * fy * (1 - fx)
                    + img[y0 + 1, x0 + 1] * fy * fx
                )
        return out

    bilinear_rows = _bilinear_rows_nb
    warp_bilinear = _warp_bilinear_nb
else:
    bilinear_rows = _bilinear_rows_np
    warp_bilinear = _warp_bilinear_np
