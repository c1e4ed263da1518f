"""Image tensors, PNG I/O and segmentation-mask canonicalization.

Images are plain ``float64`` numpy arrays of shape ``(H, W, C)`` with
``C in {1, 3}``. Stored images live in [0, 1]; intermediate perturbed images
may leave that range and are only clamped at the very end of a pipeline.
"""

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image


class ImageFormatError(ValueError):
    """The file is a readable image but not an 8-bit gray/RGB PNG."""


def as_image(arr):
    """Coerce to a float64 ``(H, W, C)`` array, adding a channel axis to 2-D input."""
    arr = np.asarray(arr, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.ndim != 3 or arr.shape[2] not in (1, 3):
        raise ValueError(f"expected an (H, W, 1|3) image, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError("image must be non-empty")
    if not np.all(np.isfinite(arr)):
        raise ValueError("image contains non-finite values")
    return arr


def is_valid_image(img):
    img = np.asarray(img)
    return bool(
        img.ndim == 3
        and img.shape[2] in (1, 3)
        and np.all(np.isfinite(img))
        and img.min() >= 0.0
        and img.max() <= 1.0
    )


def check_valid_image(img, what="image"):
    if not is_valid_image(img):
        raise ValueError(f"{what} must be a finite (H, W, 1|3) array with values in [0, 1]")


def to_bytes(img):
    """Quantize [0, 1] intensities with round-half-up: ``floor(x * 255 + 0.5)``."""
    q = np.floor(np.asarray(img, dtype=np.float64) * 255.0 + 0.5)
    return np.clip(q, 0, 255).astype(np.uint8)


def load_image(path):
    """Read an 8-bit grayscale or RGB PNG as an ``(H, W, C)`` array in [0, 1]."""
    path = Path(path)
    try:
        with Image.open(path) as im:
            im.load()
            fmt, mode = im.format, im.mode
            data = np.array(im)
    except FileNotFoundError:
        raise
    except OSError as exc:
        raise OSError(f"cannot read image {path}: {exc}") from exc

    if fmt != "PNG":
        raise ImageFormatError(f"{path}: format {fmt} is not PNG")
    if mode == "P":
        raise ImageFormatError(f"{path}: palette images are not supported")
    if mode in ("RGBA", "LA", "PA"):
        raise ImageFormatError(f"{path}: alpha channel is not supported")
    if mode not in ("L", "RGB"):
        raise ImageFormatError(f"{path}: unsupported bit depth / mode {mode!r} (need 8-bit L or RGB)")
    return as_image(data.astype(np.float64) / 255.0)


def save_image(img, path):
    check_valid_image(img, "save_image input")
    data = to_bytes(img)
    if data.shape[2] == 1:
        pil = Image.fromarray(data[:, :, 0], mode="L")
    else:
        pil = Image.fromarray(data, mode="RGB")
    pil.save(Path(path), format="PNG")


@dataclass(frozen=True)
class MaskSet:
    """A partition of the pixel grid into ``region_count`` regions.

    ``labels[r]`` is the index of the raw mask that region ``r`` came from, or
    ``"background"`` for the region collecting uncovered pixels (always last).
    """

    assignment: np.ndarray
    labels: tuple

    @property
    def region_count(self):
        return len(self.labels)

    @property
    def shape(self):
        return self.assignment.shape

    def mask(self, r):
        return self.assignment == r

    def masks(self):
        return [self.mask(r) for r in range(self.region_count)]

    def region_sizes(self):
        return np.bincount(self.assignment.ravel(), minlength=self.region_count)


def canonicalize_masks(raw, shape):
    """Resolve raw binary masks into a pixel partition.

    Overlaps go to the earliest mask in list order. Masks left without pixels
    are dropped, and any uncovered pixels form a trailing background region.
    """
    shape = tuple(shape)
    assignment = np.full(shape, -1, dtype=np.int64)
    labels = []
    for i, m in enumerate(raw):
        m = np.asarray(m)
        if m.shape != shape:
            raise ValueError(f"mask {i} has shape {m.shape}, expected {shape}")
        take = (m != 0) & (assignment < 0)
        if take.any():
            assignment[take] = len(labels)
            labels.append(i)
    uncovered = assignment < 0
    if uncovered.any():
        assignment[uncovered] = len(labels)
        labels.append("background")
    assignment.setflags(write=False)
    return MaskSet(assignment=assignment, labels=tuple(labels))


def load_masks(directory, shape):
    """Load every ``*.png`` in `directory` (lexicographic order) as a raw mask.

    A pixel belongs to a mask when any of its channels is nonzero.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"directory not found: {directory}")
    raw = []
    for p in sorted(directory.glob("*.png"), key=lambda q: q.name):
        m = load_image(p)
        raw.append(np.any(m > 0, axis=2))
    return canonicalize_masks(raw, shape)
