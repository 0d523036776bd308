"""MNIST ingestion (IDX binary format), dataset handling and input encoding."""

from __future__ import annotations

import gzip
import struct
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

import numpy as np

IMAGE_MAGIC = 2051
LABEL_MAGIC = 2049

TRAIN_IMAGES = "train-images-idx3-ubyte"
TRAIN_LABELS = "train-labels-idx1-ubyte"
TEST_IMAGES = "t10k-images-idx3-ubyte"
TEST_LABELS = "t10k-labels-idx1-ubyte"


class IdxFormatError(ValueError):
    """Malformed IDX file (bad magic number or truncated payload)."""


class BadMagicError(IdxFormatError):
    pass


class TruncatedFileError(IdxFormatError):
    pass


class CountMismatchError(ValueError):
    """Image and label files disagree on the number of items."""


@dataclass
class Dataset:
    """Flattened images with intensities in [0, 1] and integer class labels."""

    train_images: np.ndarray
    train_labels: np.ndarray
    test_images: np.ndarray
    test_labels: np.ndarray

    def __post_init__(self):
        for images, labels, tag in ((self.train_images, self.train_labels, "train"),
                                    (self.test_images, self.test_labels, "test")):
            if len(images) != len(labels):
                raise CountMismatchError(
                    f"{tag}: {len(images)} images vs {len(labels)} labels")
            if len(images) and (images.min() < 0.0 or images.max() > 1.0):
                raise ValueError(f"{tag}: intensities outside [0, 1]")
            if len(labels) and (labels.min() < 0 or labels.max() > 9):
                raise ValueError(f"{tag}: labels outside [0, 10)")

    @property
    def n_pixels(self) -> int:
        return self.train_images.shape[1]

    def subset(self, train_n: Optional[int] = None, test_n: Optional[int] = None,
               seed: Optional[int] = None) -> "Dataset":
        """First-n subset, optionally after a seeded shuffle of each split."""
        tr_idx = np.arange(len(self.train_images))
        te_idx = np.arange(len(self.test_images))
        if seed is not None:
            rng = np.random.default_rng(seed)
            rng.shuffle(tr_idx)
            rng.shuffle(te_idx)
        if train_n is not None:
            tr_idx = tr_idx[:train_n]
        if test_n is not None:
            te_idx = te_idx[:test_n]
        return Dataset(self.train_images[tr_idx], self.train_labels[tr_idx],
                       self.test_images[te_idx], self.test_labels[te_idx])


def _open_maybe_gz(path: Path):
    if path.suffix == ".gz":
        return gzip.open(path, "rb")
    return open(path, "rb")


def _read_exact(f, n: int, path, what: str) -> bytes:
    data = f.read(n)
    if len(data) != n:
        raise TruncatedFileError(f"{path}: truncated while reading {what} "
                                 f"(wanted {n} bytes, got {len(data)})")
    return data


def read_idx_images(path) -> np.ndarray:
    """Parse an IDX3 image file into an (N, rows*cols) float array in [0, 1]."""
    path = Path(path)
    with _open_maybe_gz(path) as f:
        magic, n, rows, cols = struct.unpack(">IIII", _read_exact(f, 16, path, "header"))
        if magic != IMAGE_MAGIC:
            raise BadMagicError(f"{path}: image magic {magic}, expected {IMAGE_MAGIC}")
        raw = _read_exact(f, n * rows * cols, path, f"{n} images")
    pixels = np.frombuffer(raw, dtype=np.uint8).reshape(n, rows * cols)
    return pixels.astype(np.float64) / 255.0


def read_idx_labels(path) -> np.ndarray:
    """Parse an IDX1 label file into an (N,) int array."""
    path = Path(path)
    with _open_maybe_gz(path) as f:
        magic, n = struct.unpack(">II", _read_exact(f, 8, path, "header"))
        if magic != LABEL_MAGIC:
            raise BadMagicError(f"{path}: label magic {magic}, expected {LABEL_MAGIC}")
        raw = _read_exact(f, n, path, f"{n} labels")
    return np.frombuffer(raw, dtype=np.uint8).astype(np.int64)


def _find(directory: Path, stem: str) -> Path:
    for candidate in (directory / stem, directory / (stem + ".gz")):
        if candidate.exists():
            return candidate
    raise FileNotFoundError(f"{stem}[.gz] not found in {directory}")


def load_mnist(path) -> Dataset:
    """Load the four standard IDX files (optionally gzipped) from a directory."""
    directory = Path(path)
    if not directory.is_dir():
        raise FileNotFoundError(f"data directory not found: {directory}")
    return Dataset(
        train_images=read_idx_images(_find(directory, TRAIN_IMAGES)),
        train_labels=read_idx_labels(_find(directory, TRAIN_LABELS)),
        test_images=read_idx_images(_find(directory, TEST_IMAGES)),
        test_labels=read_idx_labels(_find(directory, TEST_LABELS)),
    )


def write_idx_images(path, images: np.ndarray) -> None:
    """Write uint8 images of shape (N, rows, cols) or (N, rows*cols) as IDX3."""
    images = np.asarray(images)
    if images.ndim == 2:
        side = int(round(images.shape[1] ** 0.5))
        images = images.reshape(len(images), side, side)
    n, rows, cols = images.shape
    path = Path(path)
    opener = gzip.open if path.suffix == ".gz" else open
    with opener(path, "wb") as f:
        f.write(struct.pack(">IIII", IMAGE_MAGIC, n, rows, cols))
        f.write(np.ascontiguousarray(images, dtype=np.uint8).tobytes())


def write_idx_labels(path, labels: np.ndarray) -> None:
    path = Path(path)
    opener = gzip.open if path.suffix == ".gz" else open
    with opener(path, "wb") as f:
        f.write(struct.pack(">II", LABEL_MAGIC, len(labels)))
        f.write(np.ascontiguousarray(labels, dtype=np.uint8).tobytes())


def encode_image(image: np.ndarray, i_max: float) -> np.ndarray:
    """Linear map of pixel intensities in [0, 1] to clamped currents in [0, i_max]."""
    return np.asarray(image, dtype=np.float64) * i_max
