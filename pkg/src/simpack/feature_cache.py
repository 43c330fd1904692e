"""Binary cache for extracted feature sets.

Format (little-endian):
  magic "SFT1"
  u32 image id length, id UTF-8
  u32 keypoint count
  per keypoint: f32 x, y, sigma, orientation, response; i32 octave, layer
  per keypoint: 128 x f32 descriptor

Keypoint floats are float32-exact by construction, so a load after a save
reproduces the feature set bit for bit.
"""

import struct
from pathlib import Path

import numpy as np

from .errors import BadMagic, CorruptPayload
from .sift import FeatureSet, Keypoint
from .util import sha256_hex

__all__ = ["save_feature_set", "load_feature_set", "cache_path", "load_or_extract"]

MAGIC = b"SFT1"
_KP_FORMAT = "<5f2i"
_KP_SIZE = struct.calcsize(_KP_FORMAT)


def feature_set_to_bytes(features: FeatureSet) -> bytes:
    id_utf8 = features.image_id.encode("utf-8")
    blob = bytearray(MAGIC)
    blob += struct.pack("<I", len(id_utf8))
    blob += id_utf8
    blob += struct.pack("<I", len(features.keypoints))
    for kp in features.keypoints:
        blob += struct.pack(
            _KP_FORMAT,
            kp.x,
            kp.y,
            kp.sigma,
            kp.orientation,
            kp.response,
            kp.octave,
            kp.layer,
        )
    descriptors = np.ascontiguousarray(features.descriptors, dtype=np.float32)
    if descriptors.shape != (len(features.keypoints), 128):
        raise ValueError("descriptor array shape does not match keypoints")
    if not descriptors.flags.c_contiguous:
        descriptors = descriptors.copy()
    blob += descriptors.astype("<f4", copy=False).tobytes()
    return bytes(blob)


def feature_set_from_bytes(blob: bytes) -> FeatureSet:
    if blob[:4] != MAGIC:
        raise BadMagic(f"not a feature cache file (magic {bytes(blob[:4])!r})")
    try:
        pos = 4
        (id_len,) = struct.unpack_from("<I", blob, pos)
        pos += 4
        image_id = blob[pos : pos + id_len].decode("utf-8")
        pos += id_len
        (count,) = struct.unpack_from("<I", blob, pos)
        pos += 4
        keypoints = []
        for _ in range(count):
            x, y, sigma, orientation, response, octave, layer = struct.unpack_from(
                _KP_FORMAT, blob, pos
            )
            pos += _KP_SIZE
            keypoints.append(
                Keypoint(
                    x=x,
                    y=y,
                    sigma=sigma,
                    orientation=orientation,
                    response=response,
                    octave=octave,
                    layer=layer,
                )
            )
        desc_bytes = count * 128 * 4
        if len(blob) - pos != desc_bytes:
            raise CorruptPayload(
                f"expected {desc_bytes} descriptor bytes, found {len(blob) - pos}"
            )
        descriptors = np.frombuffer(blob, dtype="<f4", offset=pos).reshape(count, 128)
    except (struct.error, UnicodeDecodeError) as exc:
        raise CorruptPayload(str(exc)) from exc
    return FeatureSet(image_id, keypoints, np.ascontiguousarray(descriptors))


def save_feature_set(features: FeatureSet, path) -> None:
    Path(path).write_bytes(feature_set_to_bytes(features))


def load_feature_set(path) -> FeatureSet:
    return feature_set_from_bytes(Path(path).read_bytes())


def cache_path(cache_dir, image_bytes: bytes) -> Path:
    """Cache file for an image, keyed by content hash."""
    return Path(cache_dir) / f"{sha256_hex(image_bytes)}.sft"


def load_or_extract(image_bytes: bytes, params=None, image_id: str = "",
                    cache_dir=None):
    """Extract features, consulting/filling the cache when one is given.

    The cache key is the image content hash, so renamed copies share an
    entry; the stored id is rewritten to the requested one on load.
    """
    from .pnm import parse_pnm
    from .sift import extract_features

    if cache_dir is None:
        return extract_features(parse_pnm(image_bytes), params, image_id)
    target = cache_path(cache_dir, image_bytes)
    if target.exists():
        features = load_feature_set(target)
        features.image_id = image_id
        return features
    features = extract_features(parse_pnm(image_bytes), params, image_id)
    Path(cache_dir).mkdir(parents=True, exist_ok=True)
    # Cache files are content-addressed, so store them id-free and set the
    # id on load; concurrent writers then race toward identical bytes.
    stored = FeatureSet("", features.keypoints, features.descriptors)
    tmp = target.with_name(target.name + ".part")
    tmp.write_bytes(feature_set_to_bytes(stored))
    tmp.replace(target)
    return features
