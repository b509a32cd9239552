"""Image-classification data ingestion and the shuffle/split protocol.

Supports uncompressed IDX image/label pairs (big-endian, magic 2051/2049),
CIFAR-10 binary batches (3073-byte records, channel-major pixels), and an
internal CSV form with the label in the first column.  Pixel bytes are
scaled by 1/255 into [0, 1] with no centering.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import FormatError, UsageError

_IDX_IMAGE_MAGIC = 2051
_IDX_LABEL_MAGIC = 2049
_CIFAR_RECORD_BYTES = 3073


@dataclass(frozen=True)
class Dataset:
    """An input matrix with integer labels and a provenance tag."""

    inputs: np.ndarray
    labels: np.ndarray
    n_classes: int
    source: str = field(default="unknown")

    def __post_init__(self):
        inputs = np.asarray(self.inputs, dtype=np.float64)
        labels = np.asarray(self.labels)
        if inputs.ndim != 2:
            raise UsageError("inputs must be a 2-D matrix")
        if labels.ndim != 1 or labels.shape[0] != inputs.shape[0]:
            raise UsageError("labels must be a vector with one entry per row")
        if not np.issubdtype(labels.dtype, np.integer):
            raise UsageError("labels must be integers")
        if not isinstance(self.n_classes, int) or self.n_classes < 1:
            raise UsageError("n_classes must be a positive integer")
        if labels.size and (labels.min() < 0 or labels.max() >= self.n_classes):
            raise UsageError(
                f"labels must lie in [0, {self.n_classes}); "
                f"found range [{labels.min()}, {labels.max()}]"
            )
        if not np.all(np.isfinite(inputs)):
            raise UsageError("inputs must be finite")
        labels = labels.astype(np.int64)
        inputs.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "labels", labels)

    @property
    def n(self):
        return self.labels.shape[0]

    @property
    def d(self):
        return self.inputs.shape[1]


def _read_exact(handle, count, path, offset):
    buf = handle.read(count)
    if len(buf) != count:
        raise FormatError(
            f"{path}: truncated at offset {offset}: "
            f"wanted {count} bytes, got {len(buf)}"
        )
    return buf


def _read_be_words(handle, count, path, offset):
    buf = _read_exact(handle, 4 * count, path, offset)
    return [int.from_bytes(buf[4 * i : 4 * i + 4], "big") for i in range(count)]


def load_mnist(images_path, labels_path):
    """Load an uncompressed IDX image/label pair as a Dataset.

    Parameters
    ----------
    images_path, labels_path : str
        Paths to the image file (magic 2051, n x 28 x 28 unsigned bytes)
        and the label file (magic 2049).

    Returns
    -------
    Dataset with d=784 rows scaled into [0, 1].
    """
    with open(images_path, "rb") as handle:
        (magic,) = _read_be_words(handle, 1, images_path, 0)
        if magic != _IDX_IMAGE_MAGIC:
            raise FormatError(
                f"{images_path}: bad magic at offset 0: "
                f"expected {_IDX_IMAGE_MAGIC}, found {magic}"
            )
        n_images, rows, cols = _read_be_words(handle, 3, images_path, 4)
        if (rows, cols) != (28, 28):
            raise FormatError(
                f"{images_path}: expected 28x28 images, found {rows}x{cols}"
            )
        payload = _read_exact(handle, n_images * 784, images_path, 16)
    with open(labels_path, "rb") as handle:
        (magic,) = _read_be_words(handle, 1, labels_path, 0)
        if magic != _IDX_LABEL_MAGIC:
            raise FormatError(
                f"{labels_path}: bad magic at offset 0: "
                f"expected {_IDX_LABEL_MAGIC}, found {magic}"
            )
        (n_labels,) = _read_be_words(handle, 1, labels_path, 4)
        label_bytes = _read_exact(handle, n_labels, labels_path, 8)
    if n_images != n_labels:
        raise FormatError(
            f"image count {n_images} ({images_path}) does not match "
            f"label count {n_labels} ({labels_path})"
        )
    labels = np.frombuffer(label_bytes, dtype=np.uint8)
    bad = np.nonzero(labels > 9)[0]
    if bad.size:
        raise FormatError(
            f"{labels_path}: label {labels[bad[0]]} at offset {8 + bad[0]} "
            "is outside 0..9"
        )
    inputs = np.frombuffer(payload, dtype=np.uint8).reshape(n_images, 784)
    return Dataset(inputs / 255.0, labels.astype(np.int64), 10, source="mnist")


def load_cifar10(batch_paths):
    """Load and concatenate CIFAR-10 binary batches as a Dataset.

    Each file holds 3073-byte records: one label byte followed by 3072
    channel-major pixel bytes, kept in storage order (d=3072).
    """
    if not batch_paths:
        raise UsageError("batch_paths must name at least one file")
    chunks = []
    label_chunks = []
    for path in batch_paths:
        with open(path, "rb") as handle:
            data = handle.read()
        if len(data) % _CIFAR_RECORD_BYTES != 0:
            raise FormatError(
                f"{path}: size {len(data)} is not a multiple of "
                f"{_CIFAR_RECORD_BYTES}"
            )
        records = np.frombuffer(data, dtype=np.uint8).reshape(
            -1, _CIFAR_RECORD_BYTES
        )
        labels = records[:, 0]
        bad = np.nonzero(labels > 9)[0]
        if bad.size:
            raise FormatError(
                f"{path}: label byte {labels[bad[0]]} in record {bad[0]} "
                "is outside 0..9"
            )
        label_chunks.append(labels.astype(np.int64))
        chunks.append(records[:, 1:])
    inputs = np.concatenate(chunks, axis=0)
    if inputs.shape[0] == 0:
        raise FormatError("batch files contain no records")
    labels = np.concatenate(label_chunks)
    return Dataset(inputs / 255.0, labels, 10, source="cifar10")


def split(data, n_t, n_v, seed):
    """Shuffle deterministically and split off the first n_t / next n_v rows.

    The shuffle is a seeded permutation from numpy's PCG64 generator, so
    splits are reproducible across platforms for a fixed seed.
    """
    for name, value in (("n_t", n_t), ("n_v", n_v)):
        if not isinstance(value, int) or value < 0:
            raise UsageError(f"{name} must be a nonnegative integer")
    if n_t + n_v > data.n:
        raise UsageError(
            f"n_t + n_v = {n_t + n_v} exceeds the {data.n} available rows"
        )
    perm = np.random.default_rng(seed).permutation(data.n)
    train_idx = perm[:n_t]
    val_idx = perm[n_t : n_t + n_v]
    train = Dataset(
        data.inputs[train_idx],
        data.labels[train_idx],
        data.n_classes,
        source=f"{data.source}:train(seed={seed})",
    )
    val = Dataset(
        data.inputs[val_idx],
        data.labels[val_idx],
        data.n_classes,
        source=f"{data.source}:validation(seed={seed})",
    )
    return train, val


def save_csv(data, path):
    """Write a Dataset in the internal CSV form: label first, then features."""
    with open(path, "w") as handle:
        for label, row in zip(data.labels, data.inputs):
            handle.write("%d," % label)
            handle.write(",".join("%.17g" % v for v in row))
            handle.write("\n")


def load_csv(path, n_classes=None):
    """Read the internal CSV form back into a Dataset.

    When n_classes is omitted it is inferred as max(label) + 1.
    """
    labels = []
    rows = []
    width = None
    with open(path) as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            fields = line.split(",")
            if width is None:
                width = len(fields)
                if width < 2:
                    raise FormatError(
                        f"{path}:{lineno}: need a label and at least one feature"
                    )
            elif len(fields) != width:
                raise FormatError(
                    f"{path}:{lineno}: expected {width} fields, found {len(fields)}"
                )
            try:
                label = float(fields[0])
                row = [float(v) for v in fields[1:]]
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: {exc}") from None
            if label != int(label):
                raise FormatError(
                    f"{path}:{lineno}: label {fields[0]} is not an integer"
                )
            labels.append(int(label))
            rows.append(row)
    if not rows:
        raise FormatError(f"{path}: no data rows")
    inputs = np.asarray(rows, dtype=np.float64)
    if not np.all(np.isfinite(inputs)):
        raise FormatError(f"{path}: non-finite feature value")
    labels = np.asarray(labels, dtype=np.int64)
    if labels.min() < 0:
        raise FormatError(f"{path}: negative label {labels.min()}")
    if n_classes is None:
        n_classes = int(labels.max()) + 1
    return Dataset(inputs, labels, n_classes, source=f"csv:{path}")
