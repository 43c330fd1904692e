"""Deterministic synthetic photo corpus for benchmarks.

Each tag gets one procedural base scene (gradient + opaque shapes + smooth
noise) plus variants whose perturbation strength grows with rank: a
brightness/noise band, then a small shift, then a mild rescale at the top
strength.  A share of ranks are decoys, fresh unrelated scenes, mimicking
relevance noise in ranked search results.  Everything derives from the
seed through independent substreams, so corpora are reproducible and
generation order never matters.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

from .pnm import from_array, write_pnm
from .similarity import ManifestEntry, save_manifest

__all__ = ["SynthParams", "synth_corpus", "decoy_ranks"]

_GRAIN_SIGMA = 3.5
_BAND_BASE = 0.06
_BAND_SPAN = 0.32
_BRIGHT_MAX = 10
_NOISE_SIGMA = 2.0
_NOISE_MIN_STRENGTH = 0.35
_SHIFT_FRAC = 0.05
_SHIFT_MIN_STRENGTH = 0.5
_RESCALE_FACTORS = (1.05, 0.95)


@dataclass(frozen=True)
class SynthParams:
    """Corpus shape: scenes, variants per scene, image size, extras.

    ``variants_per_base`` counts all images of a tag including the rank-1
    pristine base.  ``decoys_per_base=None`` picks ``min(4, n // 2)``
    decoys; decoys occupy every other rank from the bottom up, never rank
    1.  ``random_pool`` adds unrelated images tagged "random".
    """

    seed: int = 7
    n_bases: int = 12
    variants_per_base: int = 10
    width: int = 256
    height: int = 256
    decoys_per_base: int | None = None
    random_pool: int = 20

    def __post_init__(self) -> None:
        if self.n_bases < 1:
            raise ValueError("n_bases must be >= 1")
        if self.variants_per_base < 1:
            raise ValueError("variants_per_base must be >= 1")
        if self.width < 64 or self.height < 64:
            raise ValueError("image dimensions must be >= 64")
        if self.random_pool < 0:
            raise ValueError("random_pool must be >= 0")
        if self.decoys_per_base is None:
            object.__setattr__(
                self, "decoys_per_base", min(4, self.variants_per_base // 2)
            )
        if self.decoys_per_base < 0:
            raise ValueError("decoys_per_base must be >= 0")
        if self.decoys_per_base > self.variants_per_base // 2:
            raise ValueError(
                "decoys_per_base must be <= variants_per_base // 2"
            )


def decoy_ranks(params: SynthParams) -> frozenset[int]:
    """Ranks holding decoy scenes: n, n-2, n-4, ... (never rank 1)."""
    n = params.variants_per_base
    return frozenset(n - 2 * i for i in range(params.decoys_per_base))


def _rng(params: SynthParams, *key: int) -> np.random.Generator:
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence([params.seed, *key]))
    )


def _scene(rng: np.random.Generator, width: int, height: int) -> np.ndarray:
    """Procedural grayscale scene, uint8."""
    yy, xx = np.mgrid[0:height, 0:width].astype(np.float32)
    level = rng.uniform(80.0, 170.0)
    gx = rng.uniform(-0.25, 0.25)
    gy = rng.uniform(-0.25, 0.25)
    img = level + gx * (xx - width / 2.0) + gy * (yy - height / 2.0)

    grid = rng.normal(0.0, 1.0, (height // 32 + 1, width // 32 + 1))
    smooth = ndimage.zoom(grid, 32.0, order=3)[:height, :width]
    img = img + smooth.astype(np.float32) * rng.uniform(5.0, 10.0)

    n_shapes = int(rng.integers(28, 42))
    for _ in range(n_shapes):
        kind = int(rng.integers(0, 3))
        value = float(
            np.clip(level + rng.choice((-1.0, 1.0)) * rng.uniform(40.0, 85.0),
                    5.0, 250.0)
        )
        cx = float(rng.uniform(8, width - 8))
        cy = float(rng.uniform(8, height - 8))
        if kind == 0:
            r = float(rng.uniform(3.0, 16.0))
            mask = (xx - cx) ** 2 + (yy - cy) ** 2 <= r * r
            img[mask] = value
        elif kind == 1:
            hw = float(rng.uniform(3.0, 14.0))
            hh = float(rng.uniform(3.0, 14.0))
            x0, x1 = int(max(cx - hw, 0)), int(min(cx + hw, width))
            y0, y1 = int(max(cy - hh, 0)), int(min(cy + hh, height))
            img[y0:y1, x0:x1] = value
        else:
            r = float(rng.uniform(6.0, 16.0))
            d2 = (xx - cx) ** 2 + (yy - cy) ** 2
            img[(d2 <= r * r) & (d2 >= (0.6 * r) ** 2)] = value
    # Sensor-style grain; keeps fresh scene content nearly incompressible,
    # as photographic input would be, while variants still share it byte
    # for byte with their base.
    img = img + rng.normal(0.0, _GRAIN_SIGMA, (height, width))
    return np.clip(np.rint(img), 0, 255).astype(np.uint8)


def _rescale(arr: np.ndarray, factor: float) -> np.ndarray:
    """Zoom then center-crop or edge-pad back to the original size."""
    height, width = arr.shape
    zoomed = ndimage.zoom(arr.astype(np.float32), factor, order=1)
    zh, zw = zoomed.shape
    if zh >= height:
        top = (zh - height) // 2
        left = (zw - width) // 2
        return zoomed[top:top + height, left:left + width]
    pad_y = height - zh
    pad_x = width - zw
    return np.pad(
        zoomed,
        ((pad_y // 2, pad_y - pad_y // 2), (pad_x // 2, pad_x - pad_x // 2)),
        mode="edge",
    )


def _shift(arr: np.ndarray, dy: int, dx: int) -> np.ndarray:
    """Integer translation with edge padding."""
    shifted = np.empty_like(arr)
    height, width = arr.shape
    ys = slice(max(dy, 0), height + min(dy, 0))
    xs = slice(max(dx, 0), width + min(dx, 0))
    src_y = slice(max(-dy, 0), height + min(-dy, 0))
    src_x = slice(max(-dx, 0), width + min(-dx, 0))
    row_edge = arr[0] if dy > 0 else arr[-1]
    shifted[:] = row_edge[np.newaxis, :]
    shifted[:, : max(dx, 0)] = arr[:, :1]
    shifted[:, width + min(dx, 0):] = arr[:, -1:]
    shifted[ys, xs] = arr[src_y, src_x]
    return shifted


def _perturb(base: np.ndarray, strength: float, index: int,
             rng: np.random.Generator) -> np.ndarray:
    """Disturb the base: a strength-scaled band, a shift, or a rescale.

    Only a horizontal band is brightened and noised, so most rows stay
    byte-identical to the base; the shift and rescale stages model camera
    motion without touching the band logic.
    """
    height, width = base.shape
    if strength >= 1.0:
        img = _rescale(base, _RESCALE_FACTORS[index % 2])
    elif strength >= _SHIFT_MIN_STRENGTH:
        span = _SHIFT_FRAC * strength
        dy = int(height * span) * (1 if index % 2 else -1)
        dx = int(width * span * 0.5) * (-1 if index % 3 == 0 else 1)
        img = _shift(base, dy, dx).astype(np.float32)
    else:
        img = base.astype(np.float32)
    img = np.asarray(img, dtype=np.float32)

    band_h = max(1, int(round((_BAND_BASE + _BAND_SPAN * strength) * height)))
    y0 = int(rng.integers(0, height - band_h + 1))
    delta = round(_BRIGHT_MAX * strength) * (1.0 if index % 2 else -1.0)
    band = img[y0:y0 + band_h] + delta
    if strength >= _NOISE_MIN_STRENGTH:
        band = band + rng.normal(0.0, _NOISE_SIGMA * strength, band.shape)
    img[y0:y0 + band_h] = band
    return np.clip(np.rint(img), 0, 255).astype(np.uint8)


def synth_corpus(params: SynthParams, out_dir) -> list[ManifestEntry]:
    """Write the corpus as PGM files plus ``manifest.json``; return entries.

    Per tag ``tNN``: rank 1 is the pristine base, decoy ranks are fresh
    scenes, remaining ranks are perturbed variants with strength growing
    in rank order.  The random pool is written as ``rnd_NN`` images tagged
    "random" with rank = position.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    width, height = params.width, params.height
    decoys = decoy_ranks(params)
    perturbed = [
        r for r in range(2, params.variants_per_base + 1) if r not in decoys
    ]
    entries: list[ManifestEntry] = []

    def emit(arr: np.ndarray, stem: str, tag: str, rank: int) -> None:
        blob = write_pnm(from_array(arr))
        path = out / f"{stem}.pgm"
        path.write_bytes(blob)
        entries.append(ManifestEntry(str(path), stem, (tag,), rank, len(blob)))

    for b in range(params.n_bases):
        tag = f"t{b + 1:02d}"
        base = _scene(_rng(params, 0, b), width, height)
        for rank in range(1, params.variants_per_base + 1):
            if rank == 1:
                arr = base
            elif rank in decoys:
                arr = _scene(_rng(params, 2, b, rank), width, height)
            else:
                q = perturbed.index(rank) + 1
                strength = q / len(perturbed)
                arr = _perturb(base, strength, q, _rng(params, 1, b, rank))
            emit(arr, f"{tag}_r{rank:02d}", tag, rank)

    for i in range(params.random_pool):
        arr = _scene(_rng(params, 3, i), width, height)
        emit(arr, f"rnd_{i + 1:02d}", "random", i + 1)

    save_manifest(entries, out / "manifest.json")
    return entries
