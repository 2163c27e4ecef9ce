"""Labeled multivariate time-series datasets: normalization and the mimic-ts text format.

A series is a float array of shape ``(V, T)`` (dimensions x time steps); a
dataset stacks equal-length series into ``(n, V, T)``.

The on-disk format (UTF-8, LF)::

    # mimic-ts 1
    V T N
    <label>
    <T floats>      # dimension 0
    ...             # V value lines per record
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

MAGIC = "# mimic-ts 1"


class DataError(ValueError):
    """Series values that violate a data-quality rule (non-finite, wrong shape)."""


class ParseError(ValueError):
    """Malformed mimic-ts file."""

    def __init__(self, message: str, line: int | None = None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if line is not None:
            where += f"{line}: "
        elif where:
            where += " "
        super().__init__(where + message)


def check_series(series) -> np.ndarray:
    """Return ``series`` as a finite float64 ``(V, T)`` array or raise DataError."""
    arr = np.asarray(series, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DataError(f"series must be a non-empty V x T matrix, got shape {arr.shape}")
    bad = np.argwhere(~np.isfinite(arr))
    if len(bad):
        v, t = bad[0]
        raise DataError(f"non-finite value {arr[v, t]!r} at (dim={v}, t={t})")
    return arr


def normalize(series) -> np.ndarray:
    """Shifted max-min normalization applied to each dimension independently.

    Each row ``x`` becomes ``(x - min + 1) / (max - min + 1)``, so every value lies
    in (0, 1] and the row maximum maps to exactly 1. Zeros are then free to mean
    "masked out".
    """
    x = check_series(series)
    lo = x.min(axis=1, keepdims=True)
    hi = x.max(axis=1, keepdims=True)
    out = (x - lo + 1.0) / (hi - lo + 1.0)
    # x == hi must give exactly 1 even when rounding disagrees
    out[x == hi] = 1.0
    return out


@dataclass(frozen=True)
class LabeledDataset:
    X: np.ndarray
    labels: tuple[str, ...]
    name: str = ""
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        if X.ndim != 3:
            raise DataError(f"instances must form an (n, V, T) array, got shape {X.shape}")
        if X.shape[0] == 0:
            raise DataError("no instances")
        if X.shape[1] < 1 or X.shape[2] < 1:
            raise DataError(f"empty series shape {X.shape[1:]}")
        if len(self.labels) != X.shape[0]:
            raise DataError(f"{X.shape[0]} instances but {len(self.labels)} labels")
        bad = np.argwhere(~np.isfinite(X))
        if len(bad):
            i, v, t = bad[0]
            raise DataError(f"non-finite value in instance {i + 1} at (dim={v}, t={t})")
        X.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "labels", tuple(str(lab) for lab in self.labels))
        meta = {
            "train_size": X.shape[0],
            "test_size": None,
            "dims": X.shape[1],
            "length": X.shape[2],
            "classes": len(set(self.labels)),
        }
        meta.update(self.metadata)
        object.__setattr__(self, "metadata", meta)

    def __len__(self) -> int:
        return self.X.shape[0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, LabeledDataset):
            return NotImplemented
        return (
            self.labels == other.labels
            and self.X.shape == other.X.shape
            and bool(np.array_equal(self.X, other.X))
        )

    @property
    def label_set(self) -> tuple[str, ...]:
        return tuple(sorted(set(self.labels)))

    @property
    def shape(self) -> tuple[int, int]:
        return self.X.shape[1], self.X.shape[2]

    @property
    def y(self) -> np.ndarray:
        return np.asarray(self.labels, dtype=object)

    def normalized(self) -> "LabeledDataset":
        X = np.stack([normalize(x) for x in self.X])
        return LabeledDataset(X, self.labels, self.name, dict(self.metadata))

    def subset(self, index) -> "LabeledDataset":
        index = np.asarray(index, dtype=np.intp)
        return LabeledDataset(self.X[index], tuple(self.labels[i] for i in index), self.name)


def _fmt(value: float) -> str:
    return "%.17g" % value


def save_dataset(dataset: LabeledDataset, path) -> None:
    path = Path(path)
    for lab in dataset.labels:
        if not lab or any(ch.isspace() for ch in lab):
            raise DataError(f"label {lab!r} is empty or contains whitespace")
    n, V, T = dataset.X.shape
    lines = [MAGIC, f"{V} {T} {n}"]
    for x, lab in zip(dataset.X, dataset.labels):
        lines.append(lab)
        lines.extend(" ".join(_fmt(v) for v in row) for row in x)
    try:
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write dataset to {path}: {exc.strerror or exc}") from exc


def _parse_floats(text: str, lineno: int, path) -> list[float]:
    try:
        return [float(tok) for tok in text.split()]
    except ValueError as exc:
        raise ParseError(f"bad number ({exc})", lineno, path) from None


def read_records(lines: list[str], V: int, T: int, start: int, count: int | None, path=None, labeled=True):
    """Parse ``count`` records (or until EOF) from ``lines[start:]``.

    Line numbers in errors are 1-based file lines. Yields ``(label, (V, T) array)``.
    """
    pos = start
    k = 0
    while (count is None and pos < len(lines)) or (count is not None and k < count):
        k += 1
        label = None
        if labeled:
            if pos >= len(lines):
                raise ParseError(f"expected {count} instances, found {k - 1}", pos + 1, path)
            label = lines[pos].strip()
            if not label or len(label.split()) != 1:
                raise ParseError(f"instance {k}: label line must be a single token", pos + 1, path)
            pos += 1
        rows = []
        for v in range(V):
            if pos >= len(lines):
                raise ParseError(f"instance {k}: missing value line for dim {v}", pos + 1, path)
            vals = _parse_floats(lines[pos], pos + 1, path)
            if len(vals) != T:
                raise ParseError(
                    f"instance {k}: dim {v} has length {len(vals)}, expected {T}", pos + 1, path
                )
            rows.append(vals)
            pos += 1
        arr = np.asarray(rows, dtype=np.float64)
        if not np.all(np.isfinite(arr)):
            raise ParseError(f"instance {k}: non-finite value", pos, path)
        yield label, arr
    if count is not None and pos < len(lines) and any(l.strip() for l in lines[pos:]):
        raise ParseError(f"trailing content after {count} instances", pos + 1, path)


def parse_header(lines: list[str], path=None) -> tuple[int, int, int]:
    if not lines or lines[0].strip() != MAGIC:
        raise ParseError(f"missing '{MAGIC}' header", 1, path)
    if len(lines) < 2:
        raise ParseError("missing 'V T N' line", 2, path)
    toks = lines[1].split()
    if len(toks) != 3:
        raise ParseError("size line must be 'V T N'", 2, path)
    try:
        V, T, N = (int(t) for t in toks)
    except ValueError:
        raise ParseError("size line must hold three integers", 2, path) from None
    if V < 1 or T < 1 or N < 0:
        raise ParseError(f"invalid sizes V={V} T={T} N={N}", 2, path)
    return V, T, N


def load_dataset(path, name: str | None = None) -> LabeledDataset:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    V, T, N = parse_header(lines, path)
    if N == 0 or len(lines) <= 2 or not any(l.strip() for l in lines[2:]):
        raise ParseError("no instances", 3, path)
    labels, series = [], []
    for label, arr in read_records(lines, V, T, 2, N, path):
        labels.append(label)
        series.append(arr)
    return LabeledDataset(np.stack(series), tuple(labels), name or path.stem)
