"""Scale-invariant feature extraction.

The detector builds a Gaussian scale-space pyramid, locates strict 26-way
extrema in the difference-of-Gaussians stack, refines them to subpixel
position with an iterated quadratic fit, and rejects low-contrast and
edge-like responses.  Each surviving keypoint gets one or more dominant
gradient orientations from a smoothed 36-bin histogram and a 4x4x8
trilinearly interpolated gradient descriptor, L2-normalized with
components clamped to 0.2.

Coordinates are reported in the processing frame: the grayscale image
after the optional downscale to ``max_dimension``.  Large inputs are
downscaled so that extraction cost is bounded; set ``max_dimension=None``
to process full resolution.
"""

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import ndimage

from ._jit import njit
from .errors import ImageTooSmall
from .pnm import RawImage, to_grayscale

__all__ = [
    "ScaleSpaceParams",
    "Keypoint",
    "FeatureSet",
    "extract_features",
]

_MIN_OCTAVE_DIM = 16
_ASSUMED_BLUR = 0.5
_ORI_BINS = 36
_DESC_GRID = 4
_DESC_ORI_BINS = 8
_DESC_CLAMP = 0.2
_MAX_REFINE_STEPS = 5


@dataclass(frozen=True)
class ScaleSpaceParams:
    """Detector configuration.

    ``octaves=None`` keeps halving until the smaller image dimension drops
    below 16 pixels.  ``max_dimension`` bounds the processing resolution;
    larger inputs are bilinearly downscaled first.
    """

    octaves: int | None = None
    scales_per_octave: int = 3
    base_sigma: float = 1.6
    contrast_threshold: float = 0.03
    edge_ratio: float = 10.0
    border: int = 8
    max_dimension: int | None = 512

    def __post_init__(self):
        if self.octaves is not None and self.octaves < 1:
            raise ValueError("octaves must be positive or None")
        if self.scales_per_octave < 1:
            raise ValueError("scales_per_octave must be positive")
        if self.base_sigma <= _ASSUMED_BLUR:
            raise ValueError(f"base_sigma must exceed {_ASSUMED_BLUR}")
        if self.contrast_threshold <= 0:
            raise ValueError("contrast_threshold must be positive")
        if self.edge_ratio < 1:
            raise ValueError("edge_ratio must be at least 1")
        if self.border < 1:
            raise ValueError("border must be positive")
        if self.max_dimension is not None and self.max_dimension < _MIN_OCTAVE_DIM:
            raise ValueError("max_dimension too small to process anything")


@dataclass(frozen=True)
class Keypoint:
    """A detected feature: position, scale, orientation, and strength.

    ``x``/``y``/``sigma`` are in processing-frame pixels; ``sigma`` is the
    absolute scale of the feature.  ``octave``/``layer`` locate the
    detection in the pyramid.  All float fields are float32-exact so
    feature sets survive binary caching unchanged.
    """

    x: float
    y: float
    sigma: float
    orientation: float
    response: float
    octave: int
    layer: int


@dataclass
class FeatureSet:
    """All keypoints of one image plus their descriptors.

    ``descriptors`` is an ``(n, 128)`` float32 array; row i describes
    ``keypoints[i]``.  Each row has unit L2 norm (within 1e-3) and no
    component above 0.2 + 1e-3.
    """

    image_id: str
    keypoints: list
    descriptors: np.ndarray

    def __len__(self) -> int:
        return len(self.keypoints)


def _processing_frame(image: RawImage, params: ScaleSpaceParams) -> np.ndarray:
    gray = to_grayscale(image)
    arr = gray.as_array()[:, :, 0].astype(np.float32)
    arr /= np.float32(image.maxval)
    if params.max_dimension is not None:
        largest = max(arr.shape)
        if largest > params.max_dimension:
            factor = params.max_dimension / largest
            target = (
                max(1, round(arr.shape[0] * factor)),
                max(1, round(arr.shape[1] * factor)),
            )
            arr = ndimage.zoom(
                arr,
                (target[0] / arr.shape[0], target[1] / arr.shape[1]),
                order=1,
                prefilter=False,
                mode="nearest",
            ).astype(np.float32)
    return arr


def _octave_count(shape: tuple, params: ScaleSpaceParams) -> int:
    smallest = min(shape)
    if smallest < _MIN_OCTAVE_DIM:
        raise ImageTooSmall(
            f"image is {shape[1]}x{shape[0]} after preprocessing; "
            f"need at least {_MIN_OCTAVE_DIM} pixels on the short side"
        )
    feasible = int(math.log2(smallest / _MIN_OCTAVE_DIM)) + 1
    if params.octaves is not None:
        return min(params.octaves, feasible)
    return feasible


def _build_pyramid(base: np.ndarray, n_octaves: int, params: ScaleSpaceParams):
    """Gaussian images per octave; each octave holds s+3 layers."""
    s = params.scales_per_octave
    k = 2.0 ** (1.0 / s)
    sigmas = [params.base_sigma * k**i for i in range(s + 3)]
    increments = [
        math.sqrt(sigmas[i] ** 2 - sigmas[i - 1] ** 2) for i in range(1, s + 3)
    ]

    first_blur = math.sqrt(params.base_sigma**2 - _ASSUMED_BLUR**2)
    current = ndimage.gaussian_filter(base, first_blur).astype(np.float32)

    gaussians = []
    for _ in range(n_octaves):
        octave = [current]
        for inc in increments:
            octave.append(
                ndimage.gaussian_filter(octave[-1], inc).astype(np.float32)
            )
        gaussians.append(np.stack(octave))
        # layer s carries blur 2*base_sigma; decimating it seeds the next
        # octave at base_sigma again
        current = octave[s][::2, ::2].copy()
    return gaussians


def _dog_stack(gauss: np.ndarray) -> np.ndarray:
    return gauss[1:] - gauss[:-1]


def _find_candidates(dog: np.ndarray, border: int, threshold: float) -> np.ndarray:
    """Strict 26-neighbor extrema of the DoG stack, away from borders.

    Returns (k, 3) int64 rows of (layer, y, x) in scan order.
    """
    n_layers, height, width = dog.shape
    if height <= 2 * border or width <= 2 * border or n_layers < 3:
        return np.empty((0, 3), dtype=np.int64)
    center = dog[1:-1, border:-border, border:-border]
    is_max = center > threshold
    is_min = center < -threshold
    for dl in (-1, 0, 1):
        for dy in (-1, 0, 1):
            for dx in (-1, 0, 1):
                if dl == 0 and dy == 0 and dx == 0:
                    continue
                neighbor = dog[
                    1 + dl : n_layers - 1 + dl,
                    border + dy : height - border + dy,
                    border + dx : width - border + dx,
                ]
                np.logical_and(is_max, center > neighbor, out=is_max)
                np.logical_and(is_min, center < neighbor, out=is_min)
                if not (is_max.any() or is_min.any()):
                    return np.empty((0, 3), dtype=np.int64)
    hits = np.argwhere(is_max | is_min)
    hits += np.array([1, border, border], dtype=np.int64)
    return hits.astype(np.int64)


@njit
def _refine_candidates(dog, cands, border, contrast_threshold, edge_ratio, out):
    """Iterated quadratic refinement of extrema candidates.

    For each (layer, y, x) candidate, fits a quadratic to the local DoG
    neighborhood and steps to the predicted extremum, re-fitting at the
    new lattice point until the subpixel offset stays under half a pixel.
    Writes (ok, x, y, layer, response) per row into ``out``.
    """
    n_layers, height, width = dog.shape
    n = cands.shape[0]
    for i in range(n):
        layer = int(cands[i, 0])
        y = int(cands[i, 1])
        x = int(cands[i, 2])
        out[i, 0] = 0.0
        ok = False
        dx = dy = ds = 0.0
        ox = oy = ol = 0.0
        dxx = dyy = dxy = 0.0
        for _ in range(_MAX_REFINE_STEPS):
            v = float(dog[layer, y, x])
            dx = 0.5 * (float(dog[layer, y, x + 1]) - float(dog[layer, y, x - 1]))
            dy = 0.5 * (float(dog[layer, y + 1, x]) - float(dog[layer, y - 1, x]))
            ds = 0.5 * (float(dog[layer + 1, y, x]) - float(dog[layer - 1, y, x]))
            dxx = (
                float(dog[layer, y, x + 1])
                - 2.0 * v
                + float(dog[layer, y, x - 1])
            )
            dyy = (
                float(dog[layer, y + 1, x])
                - 2.0 * v
                + float(dog[layer, y - 1, x])
            )
            dss = (
                float(dog[layer + 1, y, x])
                - 2.0 * v
                + float(dog[layer - 1, y, x])
            )
            dxy = 0.25 * (
                float(dog[layer, y + 1, x + 1])
                - float(dog[layer, y + 1, x - 1])
                - float(dog[layer, y - 1, x + 1])
                + float(dog[layer, y - 1, x - 1])
            )
            dxs = 0.25 * (
                float(dog[layer + 1, y, x + 1])
                - float(dog[layer + 1, y, x - 1])
                - float(dog[layer - 1, y, x + 1])
                + float(dog[layer - 1, y, x - 1])
            )
            dys = 0.25 * (
                float(dog[layer + 1, y + 1, x])
                - float(dog[layer + 1, y - 1, x])
                - float(dog[layer - 1, y + 1, x])
                + float(dog[layer - 1, y - 1, x])
            )
            # solve H * delta = -grad with Cramer's rule
            det = (
                dxx * (dyy * dss - dys * dys)
                - dxy * (dxy * dss - dys * dxs)
                + dxs * (dxy * dys - dyy * dxs)
            )
            if abs(det) < 1e-30:
                break
            ox = (
                -dx * (dyy * dss - dys * dys)
                - dxy * (-dy * dss - dys * -ds)
                + dxs * (-dy * dys - dyy * -ds)
            ) / det
            oy = (
                dxx * (-dy * dss - dys * -ds)
                - -dx * (dxy * dss - dys * dxs)
                + dxs * (dxy * -ds - -dy * dxs)
            ) / det
            ol = (
                dxx * (dyy * -ds - -dy * dys)
                - dxy * (dxy * -ds - -dy * dxs)
                + -dx * (dxy * dys - dyy * dxs)
            ) / det
            if abs(ox) < 0.5 and abs(oy) < 0.5 and abs(ol) < 0.5:
                ok = True
                break
            # round half away from zero via truncation; numba and CPython
            # disagree on round() at exact halves
            x += int(ox + (0.5 if ox >= 0.0 else -0.5))
            y += int(oy + (0.5 if oy >= 0.0 else -0.5))
            layer += int(ol + (0.5 if ol >= 0.0 else -0.5))
            if (
                layer < 1
                or layer > n_layers - 2
                or y < border
                or y >= height - border
                or x < border
                or x >= width - border
            ):
                break
        if not ok:
            continue
        response = float(dog[layer, y, x]) + 0.5 * (dx * ox + dy * oy + ds * ol)
        if abs(response) < contrast_threshold:
            continue
        trace = dxx + dyy
        det2 = dxx * dyy - dxy * dxy
        if det2 <= 0.0:
            continue
        if trace * trace * edge_ratio >= det2 * (edge_ratio + 1.0) ** 2:
            continue
        out[i, 0] = 1.0
        out[i, 1] = x + ox
        out[i, 2] = y + oy
        out[i, 3] = layer + ol
        out[i, 4] = response
    return out


@njit
def _orientation_histogram(img, xi, yi, radius, weight_factor, hist):
    """Gradient orientation histogram in a disc around (xi, yi)."""
    height, width = img.shape
    for k in range(_ORI_BINS):
        hist[k] = 0.0
    for i in range(-radius, radius + 1):
        yy = yi + i
        if yy < 1 or yy > height - 2:
            continue
        for j in range(-radius, radius + 1):
            xx = xi + j
            if xx < 1 or xx > width - 2:
                continue
            gx = 0.5 * (float(img[yy, xx + 1]) - float(img[yy, xx - 1]))
            gy = 0.5 * (float(img[yy + 1, xx]) - float(img[yy - 1, xx]))
            magnitude = math.sqrt(gx * gx + gy * gy)
            angle = math.atan2(gy, gx)
            if angle < 0.0:
                angle += 2.0 * math.pi
            weight = math.exp(weight_factor * (i * i + j * j))
            bin_f = angle * (_ORI_BINS / (2.0 * math.pi))
            # bin_f >= 0, so int() truncation floors; avoids round(), whose
            # half-value behavior differs between numba and CPython
            bin_i = int(bin_f + 0.5) % _ORI_BINS
            hist[bin_i] += weight * magnitude
    return hist


@njit
def _descriptor(img, x, y, angle, cos_t, sin_t, hist_width, half_width, vec):
    """4x4x8 gradient histogram around (x, y) in a rotated frame."""
    height, width = img.shape
    bins_f = float(_DESC_ORI_BINS) / (2.0 * math.pi)
    tensor = np.zeros(
        (_DESC_GRID + 2, _DESC_GRID + 2, _DESC_ORI_BINS), dtype=np.float64
    )
    yi = int(round(y))
    xi = int(round(x))
    fy = y - yi
    fx = x - xi
    for i in range(-half_width, half_width + 1):
        yy = yi + i
        if yy < 1 or yy > height - 2:
            continue
        for j in range(-half_width, half_width + 1):
            xx = xi + j
            if xx < 1 or xx > width - 2:
                continue
            dy_off = i - fy
            dx_off = j - fx
            u = (dx_off * cos_t + dy_off * sin_t) / hist_width
            v = (-dx_off * sin_t + dy_off * cos_t) / hist_width
            rbin = v + 0.5 * _DESC_GRID - 0.5
            cbin = u + 0.5 * _DESC_GRID - 0.5
            if rbin <= -1.0 or rbin >= _DESC_GRID or cbin <= -1.0 or cbin >= _DESC_GRID:
                continue
            gx = 0.5 * (float(img[yy, xx + 1]) - float(img[yy, xx - 1]))
            gy = 0.5 * (float(img[yy + 1, xx]) - float(img[yy - 1, xx]))
            magnitude = math.sqrt(gx * gx + gy * gy)
            rel = math.atan2(gy, gx) - angle
            while rel < 0.0:
                rel += 2.0 * math.pi
            while rel >= 2.0 * math.pi:
                rel -= 2.0 * math.pi
            obin = rel * bins_f
            weight = math.exp(-0.125 * (u * u + v * v))
            contrib = weight * magnitude

            r0 = int(math.floor(rbin))
            c0 = int(math.floor(cbin))
            o0 = int(math.floor(obin))
            dr = rbin - r0
            dc = cbin - c0
            do = obin - o0
            for rr in range(2):
                wr = contrib * (dr if rr else 1.0 - dr)
                row = r0 + rr + 1
                if row < 0 or row >= _DESC_GRID + 2:
                    continue
                for cc in range(2):
                    wc = wr * (dc if cc else 1.0 - dc)
                    col = c0 + cc + 1
                    if col < 0 or col >= _DESC_GRID + 2:
                        continue
                    for oo in range(2):
                        wo = wc * (do if oo else 1.0 - do)
                        obin_i = (o0 + oo) % _DESC_ORI_BINS
                        tensor[row, col, obin_i] += wo
    idx = 0
    for row in range(1, _DESC_GRID + 1):
        for col in range(1, _DESC_GRID + 1):
            for oo in range(_DESC_ORI_BINS):
                vec[idx] = tensor[row, col, oo]
                idx += 1
    return vec


def _orientation_peaks(hist: np.ndarray) -> list:
    """Dominant directions: peaks within 80% of the histogram maximum."""
    smoothed = hist
    kernel = np.array([1.0, 4.0, 6.0, 4.0, 1.0]) / 16.0
    for _ in range(2):
        padded = np.concatenate((smoothed[-2:], smoothed, smoothed[:2]))
        smoothed = np.convolve(padded, kernel, mode="valid")
    peak = smoothed.max()
    if peak <= 0.0:
        return []
    angles = []
    for b in range(_ORI_BINS):
        left = smoothed[(b - 1) % _ORI_BINS]
        right = smoothed[(b + 1) % _ORI_BINS]
        value = smoothed[b]
        if value >= 0.8 * peak and value > left and value > right:
            denom = left - 2.0 * value + right
            offset = 0.0 if denom == 0.0 else 0.5 * (left - right) / denom
            angle = ((b + offset) % _ORI_BINS) * (2.0 * math.pi / _ORI_BINS)
            angles.append(angle % (2.0 * math.pi))
    return angles


def _normalize_descriptor(vec: np.ndarray) -> "np.ndarray | None":
    """Unit-normalize with components clamped to 0.2.

    Computes the fixed point of repeated clamp-and-renormalize directly:
    components above the clamp sit exactly at it and the rest rescale so
    the whole vector has unit norm.  Returns None for degenerate vectors
    (no gradient mass, or too few nonzero bins to satisfy both bounds).
    """
    c = _DESC_CLAMP
    norm = float(np.linalg.norm(vec))
    if norm < 1e-12:
        return None
    v = vec / norm
    if float(v.max()) <= c:
        return v
    w = np.sort(v)[::-1]
    sq = w * w
    suffix = np.zeros(len(w) + 1)
    np.cumsum(sq[::-1], out=suffix[1:])
    suffix = suffix[::-1]  # suffix[k] = sum of sq[k:]
    for k in range(len(w)):
        pinned = 1.0 - k * c * c  # norm budget left for unpinned bins
        if pinned <= 1e-12:
            return None
        rest = float(suffix[k])
        if rest < 1e-24:
            return None
        lam = math.sqrt(pinned / rest)
        if w[k] * lam <= c + 1e-12 and (k == 0 or w[k - 1] * lam >= c - 1e-12):
            return np.minimum(v * lam, c)
    return None


def _f32(value: float) -> float:
    return float(np.float32(value))


def extract_features(
    image: RawImage,
    params: "ScaleSpaceParams | None" = None,
    image_id: str = "",
) -> FeatureSet:
    """Detect keypoints and compute their descriptors.

    Deterministic: identical image and params give an identical feature
    set, bit for bit.  Raises ``ImageTooSmall`` when the processed image
    cannot host a single octave.
    """
    if params is None:
        params = ScaleSpaceParams()
    base = _processing_frame(image, params)
    n_octaves = _octave_count(base.shape, params)
    gaussians = _build_pyramid(base, n_octaves, params)

    s = params.scales_per_octave
    prefilter = 0.5 * params.contrast_threshold
    keypoints = []
    descriptors = []
    for octave_index, gauss in enumerate(gaussians):
        dog = _dog_stack(gauss)
        cands = _find_candidates(dog, params.border, prefilter)
        if not len(cands):
            continue
        refined = _refine_candidates(
            dog,
            cands,
            params.border,
            params.contrast_threshold,
            params.edge_ratio,
            np.empty((len(cands), 5), dtype=np.float64),
        )
        scale_factor = float(2**octave_index)
        height, width = gauss.shape[1], gauss.shape[2]
        hist = np.empty(_ORI_BINS, dtype=np.float64)
        vec = np.empty(_DESC_GRID * _DESC_GRID * _DESC_ORI_BINS, dtype=np.float64)
        for row in refined:
            if row[0] != 1.0:
                continue
            xf, yf, lf, response = row[1], row[2], row[3], row[4]
            sigma_octave = params.base_sigma * 2.0 ** (lf / s)
            layer = min(max(int(round(lf)), 0), s + 2)
            img = gauss[layer]

            radius = int(round(3.0 * 1.5 * sigma_octave))
            weight_factor = -1.0 / (2.0 * (1.5 * sigma_octave) ** 2)
            _orientation_histogram(
                img, int(round(xf)), int(round(yf)), radius, weight_factor, hist
            )
            hist_width = 3.0 * sigma_octave
            half_width = int(
                round(hist_width * math.sqrt(2.0) * (_DESC_GRID + 1) * 0.5)
            )
            half_width = min(half_width, int(math.hypot(height, width)))
            for angle in _orientation_peaks(hist):
                raw = _descriptor(
                    img,
                    xf,
                    yf,
                    angle,
                    math.cos(angle),
                    math.sin(angle),
                    hist_width,
                    half_width,
                    vec,
                )
                normalized = _normalize_descriptor(raw.copy())
                if normalized is None:
                    continue
                keypoints.append(
                    Keypoint(
                        x=_f32(xf * scale_factor),
                        y=_f32(yf * scale_factor),
                        sigma=_f32(sigma_octave * scale_factor),
                        orientation=_f32(angle),
                        response=_f32(response),
                        octave=octave_index,
                        layer=layer,
                    )
                )
                descriptors.append(normalized.astype(np.float32))

    if not keypoints:
        return FeatureSet(image_id, [], np.zeros((0, 128), dtype=np.float32))

    order = sorted(
        range(len(keypoints)),
        key=lambda i: (
            keypoints[i].x,
            keypoints[i].y,
            keypoints[i].sigma,
            keypoints[i].orientation,
            keypoints[i].response,
        ),
    )
    seen = set()
    final_kps = []
    final_desc = []
    for i in order:
        kp = keypoints[i]
        key = (kp.x, kp.y, kp.sigma, kp.orientation)
        if key in seen:
            continue
        seen.add(key)
        final_kps.append(kp)
        final_desc.append(descriptors[i])
    return FeatureSet(image_id, final_kps, np.stack(final_desc))
