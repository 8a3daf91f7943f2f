"""Deterministic synthetic quadrant dataset and PGM image I/O.

Each 16x16 sample shows one bright rectangle placed entirely inside the
quadrant named by its label (0 top-left, 1 top-right, 2 bottom-left,
3 bottom-right) on a dim background, plus bounded uniform noise. Labels
cycle round-robin with sample index, so any prefix of a dataset is class-
balanced to within one sample. Sample i of seed s depends only on (s, i),
which makes generation order-free and shardable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .rng import SplitMix64, derive

IMAGE_SIZE = 16
QUADRANT = IMAGE_SIZE // 2
NUM_CLASSES = 4

_BACKGROUND = 0.1
_SHAPE_MIN, _SHAPE_MAX = 0.8, 1.0
_NOISE = 0.1
_SIDE_MIN, _SIDE_MAX = 3, 6

_STREAM_DATA = 1


@dataclass
class SyntheticSample:
    image: np.ndarray  # (16, 16) float64 in [0, 1]
    label: int


def quadrant_bounds(label: int) -> tuple[int, int, int, int]:
    """(row0, row1, col0, col1) half-open bounds of a label's quadrant."""
    r0 = QUADRANT * (label // 2)
    c0 = QUADRANT * (label % 2)
    return r0, r0 + QUADRANT, c0, c0 + QUADRANT


def gen_sample(seed: int, index: int) -> SyntheticSample:
    label = index % NUM_CLASSES
    rng = SplitMix64(derive(derive(seed, _STREAM_DATA), index))
    h = _SIDE_MIN + rng.randint(_SIDE_MAX - _SIDE_MIN + 1)
    w = _SIDE_MIN + rng.randint(_SIDE_MAX - _SIDE_MIN + 1)
    r0, _, c0, _ = quadrant_bounds(label)
    top = r0 + rng.randint(QUADRANT - h + 1)
    left = c0 + rng.randint(QUADRANT - w + 1)

    img = np.full((IMAGE_SIZE, IMAGE_SIZE), _BACKGROUND)
    img[top:top + h, left:left + w] = rng.uniform_array((h, w), _SHAPE_MIN, _SHAPE_MAX)
    img += rng.uniform_array((IMAGE_SIZE, IMAGE_SIZE), -_NOISE, _NOISE)
    return SyntheticSample(np.clip(img, 0.0, 1.0), label)


def gen_dataset(seed: int, count: int) -> list[SyntheticSample]:
    if count <= 0:
        raise ValueError("count must be positive")
    return [gen_sample(seed, i) for i in range(count)]


def images_labels(samples: list[SyntheticSample]) -> tuple[np.ndarray, np.ndarray]:
    """Stack samples as a (N, 16, 16, 1) batch plus a label vector."""
    imgs = np.stack([s.image for s in samples])[..., None]
    labels = np.array([s.label for s in samples], dtype=np.intp)
    return imgs, labels


# ---------------------------------------------------------------------------
# PGM (P5, maxval 255) — no external codecs needed


def write_pgm(path, image: np.ndarray) -> None:
    """Store an array of [0, 1] floats as binary 8-bit grayscale."""
    img = np.asarray(image, dtype=np.float64)
    if img.ndim != 2:
        raise ValueError(f"PGM wants a 2-D image, got shape {img.shape}")
    data = np.clip(np.rint(img * 255.0), 0, 255).astype(np.uint8)
    header = f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode("ascii")
    Path(path).write_bytes(header + data.tobytes())


def read_pgm(path) -> np.ndarray:
    blob = Path(path).read_bytes()
    fields: list[bytes] = []
    pos = 0
    while len(fields) < 4:
        while pos < len(blob) and blob[pos:pos + 1].isspace():
            pos += 1
        if blob[pos:pos + 1] == b"#":  # comment line
            pos = blob.index(b"\n", pos) + 1
            continue
        start = pos
        while pos < len(blob) and not blob[pos:pos + 1].isspace():
            pos += 1
        fields.append(blob[start:pos])
    if fields[0] != b"P5":
        raise ValueError(f"not a binary PGM (got {fields[0]!r})")
    width, height, maxval = (int(f) for f in fields[1:])
    pos += 1  # single whitespace byte after maxval
    raw = blob[pos:pos + width * height]
    if len(raw) != width * height:
        raise ValueError("PGM payload shorter than header promises")
    return np.frombuffer(raw, dtype=np.uint8).reshape(height, width).astype(np.float64) / maxval


def export_dataset(samples: list[SyntheticSample], out_dir) -> Path:
    """Write one PGM per sample plus a JSON manifest of labels."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = []
    for i, sample in enumerate(samples):
        name = f"sample{i:05d}.pgm"
        write_pgm(out / name, sample.image)
        manifest.append({"file": name, "label": sample.label})
    manifest_path = out / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest_path
