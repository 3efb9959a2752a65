"""Dataset ingestion, target encoding, and a synthetic fallback generator.

Image data arrives in IDX containers (big-endian magic, big-endian 32-bit
dimension sizes, raw unsigned bytes), optionally gzip-compressed; files
ending in ``.gz`` are decompressed transparently. Pixels normalize to
[0, 1] by division with 255, and labels encode as one-hot rows, which keeps
every target inside the domain of the ramp activation's penalty.

The synthetic generator builds class-conditional clusters around sparse
seeded templates. It exists so the training and experiment stack can be
exercised offline at desk scale with known-separable data.
"""

from __future__ import annotations

import gzip
import random
import struct
from array import array
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Sequence

from .tensor import DenseMatrix

IMAGES_MAGIC = 0x00000803
LABELS_MAGIC = 0x00000801

TRAIN_IMAGES = "train-images-idx3-ubyte"
TRAIN_LABELS = "train-labels-idx1-ubyte"
TEST_IMAGES = "t10k-images-idx3-ubyte"
TEST_LABELS = "t10k-labels-idx1-ubyte"

# Largest pixel payload accepted from a header, as a sanity bound against
# corrupt dimension fields; real files here are tens of megabytes.
_MAX_PIXELS = 1 << 33


class DataError(Exception):
    """Base for problems with dataset files or label values."""


class IdxMagicError(DataError):
    """File does not start with the expected IDX magic number."""


class IdxTruncationError(DataError):
    """File payload is shorter than its header promises."""


class IdxDimensionError(DataError):
    """Header dimensions are implausible or overflow the sanity bound."""


class LabelRangeError(DataError, ValueError):
    """A label falls outside [0, n_classes)."""


class MissingDataError(DataError):
    """A required dataset file is absent."""


class IdxImages(NamedTuple):
    count: int
    rows: int
    cols: int
    pixels: bytes


@dataclass(frozen=True)
class LabeledDataset:
    """Aligned inputs X (s x m), one-hot targets Y (s x n), and raw labels."""

    X: DenseMatrix
    Y: DenseMatrix
    labels: tuple
    n_classes: int

    def __post_init__(self):
        s = self.X.rows
        if self.Y.rows != s or len(self.labels) != s:
            raise ValueError(
                f"misaligned dataset: X has {s} rows, Y {self.Y.rows}, "
                f"{len(self.labels)} labels"
            )
        if self.Y.cols != self.n_classes:
            raise ValueError(
                f"Y has {self.Y.cols} columns for {self.n_classes} classes"
            )
        yd = self.Y._data
        n = self.n_classes
        for i, lab in enumerate(self.labels):
            if not 0 <= lab < n:
                raise LabelRangeError(f"label {lab} at row {i} outside [0, {n})")
            row = yd[i * n : (i + 1) * n]
            if row[lab] != 1.0 or any(v != 0.0 for j, v in enumerate(row) if j != lab):
                raise ValueError(f"Y row {i} is not one-hot for label {lab}")

    @property
    def sample_count(self) -> int:
        return self.X.rows

    @property
    def input_dim(self) -> int:
        return self.X.cols


def _read_file(path) -> bytes:
    p = Path(path)
    if not p.exists():
        raise MissingDataError(f"dataset file not found: {p}")
    raw = p.read_bytes()
    if p.suffix == ".gz":
        try:
            raw = gzip.decompress(raw)
        except (OSError, EOFError) as exc:
            raise IdxTruncationError(f"bad gzip stream in {p}: {exc}") from None
    return raw


def _read_header(raw: bytes, path, magic: int, ndim: int) -> tuple:
    need = 4 + 4 * ndim
    if len(raw) < need:
        raise IdxTruncationError(f"{path}: header needs {need} bytes, file has {len(raw)}")
    got = struct.unpack_from(">I", raw, 0)[0]
    if got != magic:
        raise IdxMagicError(f"{path}: magic 0x{got:08x}, expected 0x{magic:08x}")
    return struct.unpack_from(f">{ndim}I", raw, 4)


def load_idx_images(path) -> IdxImages:
    """Read an IDX3 image container: count x rows x cols of raw bytes."""
    raw = _read_file(path)
    count, rows, cols = _read_header(raw, path, IMAGES_MAGIC, 3)
    total = count * rows * cols
    if count and (rows == 0 or cols == 0):
        raise IdxDimensionError(f"{path}: zero image dimensions {rows}x{cols}")
    if total > _MAX_PIXELS:
        raise IdxDimensionError(f"{path}: header claims {total} pixels")
    body = raw[16:]
    if len(body) < total:
        raise IdxTruncationError(
            f"{path}: payload {len(body)} bytes, header promises {total}"
        )
    return IdxImages(count, rows, cols, bytes(body[:total]))


def load_idx_labels(path) -> list:
    """Read an IDX1 label container into a list of small integers."""
    raw = _read_file(path)
    (count,) = _read_header(raw, path, LABELS_MAGIC, 1)
    if count > _MAX_PIXELS:
        raise IdxDimensionError(f"{path}: header claims {count} labels")
    body = raw[8:]
    if len(body) < count:
        raise IdxTruncationError(
            f"{path}: payload {len(body)} bytes, header promises {count}"
        )
    return list(body[:count])


def write_idx_images(path, images: IdxImages):
    """Inverse of load_idx_images; gzip-compresses when path ends in .gz."""
    if len(images.pixels) != images.count * images.rows * images.cols:
        raise ValueError("pixel payload does not match declared dimensions")
    blob = struct.pack(">IIII", IMAGES_MAGIC, images.count, images.rows, images.cols)
    blob += images.pixels
    _write_file(path, blob)


def write_idx_labels(path, labels: Sequence[int]):
    for lab in labels:
        if not 0 <= lab <= 255:
            raise ValueError(f"label {lab} does not fit in a byte")
    blob = struct.pack(">II", LABELS_MAGIC, len(labels)) + bytes(labels)
    _write_file(path, blob)


def _write_file(path, blob: bytes):
    p = Path(path)
    if p.suffix == ".gz":
        blob = gzip.compress(blob, mtime=0)
    p.write_bytes(blob)


def normalize_pixels(images: IdxImages) -> DenseMatrix:
    """Flatten images row-major and scale each byte to [0, 1] by /255."""
    m = images.rows * images.cols
    scale = [t / 255.0 for t in range(256)]
    flat = array("d", map(scale.__getitem__, images.pixels))
    return DenseMatrix._wrap(images.count, m, flat)


def one_hot(labels: Sequence[int], n_classes: int) -> DenseMatrix:
    """Row i carries 1.0 in column labels[i]; errors on out-of-range labels."""
    if n_classes < 1:
        raise ValueError("n_classes must be positive")
    out = array("d", bytes(8 * len(labels) * n_classes))
    for i, lab in enumerate(labels):
        if not 0 <= lab < n_classes:
            raise LabelRangeError(f"label {lab} at row {i} outside [0, {n_classes})")
        out[i * n_classes + lab] = 1.0
    return DenseMatrix._wrap(len(labels), n_classes, out)


def load_labeled(images_path, labels_path, n_classes: int = 10) -> LabeledDataset:
    """Load an aligned (images, labels) IDX pair into a LabeledDataset."""
    images = load_idx_images(images_path)
    labels = load_idx_labels(labels_path)
    if images.count != len(labels):
        raise DataError(
            f"image/label count mismatch: {images.count} images, {len(labels)} labels"
        )
    X = normalize_pixels(images)
    Y = one_hot(labels, n_classes)
    return LabeledDataset(X, Y, tuple(labels), n_classes)


def _find_split_file(directory: Path, stem: str) -> Path:
    for name in (stem, stem + ".gz"):
        p = directory / name
        if p.exists():
            return p
    raise MissingDataError(
        f"no {stem} (or {stem}.gz) in {directory}; expected files "
        f"{TRAIN_IMAGES}, {TRAIN_LABELS}, {TEST_IMAGES}, {TEST_LABELS}"
    )


def load_dataset_dir(directory, split: str, n_classes: int = 10) -> LabeledDataset:
    """Load the train or t10k split from a directory of IDX files."""
    if split not in ("train", "t10k"):
        raise ValueError(f"split must be 'train' or 't10k', not {split!r}")
    d = Path(directory)
    images = TRAIN_IMAGES if split == "train" else TEST_IMAGES
    labels = TRAIN_LABELS if split == "train" else TEST_LABELS
    return load_labeled(_find_split_file(d, images), _find_split_file(d, labels), n_classes)


def subsample(dataset: LabeledDataset, count: int, seed: int) -> LabeledDataset:
    """Seeded selection of `count` aligned samples without replacement."""
    s = dataset.sample_count
    if count > s:
        raise ValueError(f"cannot subsample {count} from {s} samples")
    if count < 1:
        raise ValueError("subsample count must be positive")
    picks = random.Random(seed).sample(range(s), count)
    m, n = dataset.input_dim, dataset.n_classes
    X = array("d", bytes(8 * count * m))
    Y = array("d", bytes(8 * count * n))
    xd, yd = dataset.X._data, dataset.Y._data
    for r, i in enumerate(picks):
        X[r * m : (r + 1) * m] = xd[i * m : (i + 1) * m]
        Y[r * n : (r + 1) * n] = yd[i * n : (i + 1) * n]
    labels = tuple(dataset.labels[i] for i in picks)
    return LabeledDataset(
        DenseMatrix._wrap(count, m, X), DenseMatrix._wrap(count, n, Y),
        labels, dataset.n_classes,
    )


def synthetic_dataset(
    s: int, m: int, n_classes: int, seed: int, noise: float = 0.05
) -> LabeledDataset:
    """Separable clusters: sparse class templates in [0,1]^m plus bounded noise.

    Each class template activates m//2 coordinates (at least one) with values
    in [0.25, 1]; samples add uniform noise of the given half-width and clip
    back to [0, 1]. Labels cycle round-robin so classes stay balanced.
    """
    if s < 1 or m < 1 or n_classes < 1:
        raise ValueError("s, m and n_classes must be positive")
    if not 0.0 <= noise <= 0.5:
        raise ValueError("noise half-width must lie in [0, 0.5]")
    rng = random.Random(seed)
    templates = []
    for _ in range(n_classes):
        template = [0.0] * m
        for j in rng.sample(range(m), max(1, m // 2)):
            template[j] = rng.uniform(0.25, 1.0)
        templates.append(template)
    X = array("d", bytes(8 * s * m))
    labels = []
    for i in range(s):
        c = i % n_classes
        labels.append(c)
        base = templates[c]
        for j in range(m):
            v = base[j] + rng.uniform(-noise, noise)
            X[i * m + j] = min(1.0, max(0.0, v))
    Y = one_hot(labels, n_classes)
    return LabeledDataset(
        DenseMatrix._wrap(s, m, X), Y, tuple(labels), n_classes
    )
