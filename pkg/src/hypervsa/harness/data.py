"""Dataset readers: IDX image files and delimited text tables."""

from __future__ import annotations

import gzip
import re
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import DataError

IMAGES_MAGIC = 0x00000803
LABELS_MAGIC = 0x00000801


@dataclass
class Dataset:
    name: str
    features: np.ndarray  # (M, N) in [-1, 1]
    labels: np.ndarray  # (M,) in 0..C-1
    split: str = "train"
    label_map: dict | None = None  # original label -> index
    scaling: tuple[np.ndarray, np.ndarray] | None = None  # per-column (min, max) applied
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.features.ndim != 2 or len(self.features) != len(self.labels):
            raise DataError(f"{self.name}: feature rows and label count differ")
        if self.features.size and (self.features.min() < -1 or self.features.max() > 1):
            raise DataError(f"{self.name}: features outside [-1, 1]")

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def n_classes(self) -> int:
        if self.label_map is not None:
            return len(self.label_map)
        return int(self.labels.max()) + 1 if len(self.labels) else 0

    def head(self, m: int | None) -> Dataset:
        if m is None or m >= len(self.labels):
            return self
        return Dataset(self.name, self.features[:m], self.labels[:m], self.split, self.label_map, self.scaling, dict(self.meta))


def _read_maybe_gz(path: Path) -> bytes:
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if raw[:2] == b"\x1f\x8b":
        try:
            return gzip.decompress(raw)
        except OSError as exc:
            raise DataError(f"{path}: corrupt gzip stream") from exc
    return raw


def _idx_body(path: Path, magic: int, ndims: int) -> tuple[tuple[int, ...], np.ndarray]:
    raw = _read_maybe_gz(path)
    head = 4 + 4 * ndims
    if len(raw) < head:
        raise DataError(f"{path}: truncated IDX header")
    found = struct.unpack_from(">I", raw, 0)[0]
    if found != magic:
        raise DataError(f"{path}: bad IDX magic 0x{found:08x}, expected 0x{magic:08x}")
    dims = struct.unpack_from(f">{ndims}I", raw, 4)
    size = int(np.prod(dims))
    if len(raw) - head < size:
        raise DataError(f"{path}: truncated payload ({len(raw) - head} of {size} bytes)")
    return dims, np.frombuffer(raw, dtype=np.uint8, count=size, offset=head)


def load_idx(images: str | Path, labels: str | Path, name: str = "idx", split: str = "train") -> Dataset:
    """Images scaled as ``2 * pixel / 255 - 1`` and flattened row-major."""
    (count, rows, cols), pixels = _idx_body(Path(images), IMAGES_MAGIC, 3)
    (n_labels,), lab = _idx_body(Path(labels), LABELS_MAGIC, 1)
    if count != n_labels:
        raise DataError(f"{images}: {count} images but {n_labels} labels")
    x = pixels.reshape(count, rows * cols).astype(np.float64) * (2.0 / 255.0) - 1.0
    return Dataset(name, x, lab.astype(np.int64), split, meta={"source": str(images), "pixel_levels": "native 8-bit"})


def _parse_table(path: Path) -> list[list[str]]:
    try:
        text = Path(path).read_text()
    except (OSError, UnicodeDecodeError) as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    rows = []
    for line in text.splitlines():
        line = line.strip()
        if line:
            rows.append([c for c in re.split(r"[,\s]+", line) if c != ""])
    if not rows:
        raise DataError(f"{path}: no data rows")
    return rows


def _to_float(rows: list[list[str]], path: Path) -> np.ndarray:
    width = len(rows[0])
    out = np.empty((len(rows), width))
    for r, row in enumerate(rows):
        if len(row) != width:
            raise DataError(f"{path}: row {r + 1} has {len(row)} fields, expected {width}")
        for c, cell in enumerate(row):
            try:
                out[r, c] = float(cell)
            except ValueError:
                raise DataError(f"{path}: non-numeric value {cell!r} at row {r + 1}, column {c + 1}") from None
    if not np.isfinite(out).all():
        r, c = np.argwhere(~np.isfinite(out))[0]
        raise DataError(f"{path}: non-finite value at row {r + 1}, column {c + 1}")
    return out


def _labels_from(values: np.ndarray, path: Path, label_map: dict | None) -> tuple[np.ndarray, dict]:
    if not np.all(values == np.round(values)):
        r = int(np.flatnonzero(values != np.round(values))[0])
        raise DataError(f"{path}: label at row {r + 1} is not an integer")
    ints = values.astype(np.int64)
    if label_map is None:
        label_map = {int(v): i for i, v in enumerate(np.unique(ints))}
    try:
        mapped = np.array([label_map[int(v)] for v in ints], dtype=np.int64)
    except KeyError as exc:
        raise DataError(f"{path}: label {exc.args[0]} not seen in the training split") from None
    return mapped, label_map


def load_csv(
    path: str | Path,
    label_column: int | None = -1,
    labels_path: str | Path | None = None,
    name: str | None = None,
    split: str = "train",
    scaling: tuple[np.ndarray, np.ndarray] | None = None,
    label_map: dict | None = None,
    clip: bool = False,
) -> Dataset:
    """Comma- or whitespace-separated numeric table.

    Labels come from ``label_column`` or, when ``labels_path`` is given, from
    a one-column file. If any feature lies outside ``[-1, 1]`` every column is
    min-max scaled into that range; pass the training split's ``scaling`` and
    ``label_map`` when loading a test split so both use the same transform.
    """
    path = Path(path)
    table = _to_float(_parse_table(path), path)
    if labels_path is not None:
        lab_table = _to_float(_parse_table(Path(labels_path)), Path(labels_path))
        if lab_table.shape[1] != 1 or len(lab_table) != len(table):
            raise DataError(f"{labels_path}: expected one label per row of {path}")
        raw_labels, x = lab_table[:, 0], table
    else:
        col = label_column % table.shape[1]
        raw_labels, x = table[:, col], np.delete(table, col, axis=1)
    labels, label_map = _labels_from(raw_labels, path, label_map)
    if scaling is None and x.size and (x.min() < -1 or x.max() > 1):
        scaling = (x.min(axis=0), x.max(axis=0))
    if scaling is not None:
        lo, hi = scaling
        span = np.where(hi > lo, hi - lo, 1.0)
        x = np.clip(2.0 * (x - lo) / span - 1.0, -1.0, 1.0)
        x[:, hi <= lo] = 0.0
    elif clip:
        x = np.clip(x, -1.0, 1.0)
    return Dataset(name or path.stem, x, labels, split, label_map, scaling, {"source": str(path)})


# ---------------------------------------------------------------------------
# directory layouts

_IDX_NAMES = {
    "train": ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
    "test": ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
}
_ISOLET = {"train": "isolet1+2+3+4.data", "test": "isolet5.data"}


def _find(directory: Path, stem: str) -> Path | None:
    for suffix in ("", ".gz"):
        p = directory / (stem + suffix)
        if p.exists():
            return p
    return None


def load_directory(directory: str | Path, split: str, reference: Dataset | None = None) -> Dataset:
    """Load ``split`` from a dataset folder, recognizing a few standard layouts.

    * IDX files (MNIST, Fashion-MNIST): ``train-images-idx3-ubyte[.gz]`` etc.
    * ISOLET: ``isolet1+2+3+4.data`` and ``isolet5.data``.
    * UCI HAR: ``train/X_train.txt`` with ``train/y_train.txt`` (same for test).
    * Generic: ``train.csv`` / ``test.csv`` with the label in the last column.

    ``reference`` is the already-loaded training split; its scaling and label
    mapping are applied to a test split.
    """
    d = Path(directory)
    if not d.is_dir():
        raise DataError(f"dataset directory {d} not found")
    if split not in ("train", "test"):
        raise DataError(f"unknown split {split!r}")
    kw = {}
    if reference is not None:
        kw = {"scaling": reference.scaling, "label_map": reference.label_map, "clip": True}
    img = _find(d, _IDX_NAMES[split][0])
    if img is not None:
        lab = _find(d, _IDX_NAMES[split][1])
        if lab is None:
            raise DataError(f"{d}: image file without matching label file")
        return load_idx(img, lab, d.name, split)
    if (d / _ISOLET[split]).exists():
        return load_csv(d / _ISOLET[split], -1, name=d.name, split=split, **kw)
    har = d / split / f"X_{split}.txt"
    if har.exists():
        return load_csv(har, None, d / split / f"y_{split}.txt", name=d.name, split=split, **kw)
    generic = d / f"{split}.csv"
    if generic.exists():
        return load_csv(generic, -1, name=d.name, split=split, **kw)
    raise DataError(f"{d}: no recognized {split} files")
