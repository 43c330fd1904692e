"""Shared fixtures: a small reusable corpus and common image helpers."""

from types import SimpleNamespace

import numpy as np
import pytest

from simpack.pnm import RawImage
from simpack.synth import SynthParams, synth_corpus


@pytest.fixture(scope="session")
def small_corpus(tmp_path_factory):
    """A 3-tag corpus small enough for per-test use (24 images, 128 px)."""
    out = tmp_path_factory.mktemp("small_corpus")
    params = SynthParams(seed=7, n_bases=3, variants_per_base=6,
                         width=128, height=128, random_pool=6)
    entries = synth_corpus(params, out)
    return SimpleNamespace(dir=out, params=params, entries=entries,
                           manifest=out / "manifest.json")


def gray_image(arr: np.ndarray, maxval: int = 255) -> RawImage:
    arr = np.asarray(arr, dtype=np.uint8)
    return RawImage(arr.shape[1], arr.shape[0], 1, maxval, arr.tobytes())


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
