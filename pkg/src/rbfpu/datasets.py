"""Reading scattered data, mapping it onto the unit cube, splitting, writing results."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DegenerateDomainError, DuplicateNodeError, ParseError, RBFPUError, ValidationError
from .geometry import Dataset, duplicate_pairs

#: Identifier of the generator behind :func:`validation_split`, kept in outputs.
SPLIT_RNG = "numpy.PCG64"

RESULT_COLUMNS = ("label", "rmse", "mae", "seconds")


def _parse_records(path, min_fields, max_fields):
    rows, lines = [], []
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc.strerror or exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.replace(",", " ").split()
        if not min_fields <= len(fields) <= max_fields:
            want = str(min_fields) if min_fields == max_fields else f"{min_fields}-{max_fields}"
            raise ParseError(f"expected {want} fields, found {len(fields)}", line=lineno, path=path)
        try:
            rows.append([float(v) for v in fields])
        except ValueError:
            raise ParseError(f"non-numeric field in {line!r}", line=lineno, path=path) from None
        if not all(math.isfinite(v) for v in rows[-1]):
            raise ParseError("non-finite value", line=lineno, path=path)
        lines.append(lineno)
    return rows, lines


def load_delimited(path, dim) -> Dataset:
    """Read ``dim`` coordinates plus one value per line (comma or whitespace separated).

    Blank lines and lines starting with ``#`` are skipped.  Coordinates are
    returned as found in the file; see :func:`rescale_to_unit`.
    """
    if dim < 1:
        raise ValidationError("dim must be >= 1")
    rows, lines = _parse_records(path, dim + 1, dim + 1)
    if not rows:
        raise ParseError("no data records", path=path)
    arr = np.array(rows, dtype=float)
    nodes, values = arr[:, :dim], arr[:, dim]
    dup = duplicate_pairs(nodes)
    if dup:
        i, j = dup[0]
        raise DuplicateNodeError(f"{path}: lines {lines[i]} and {lines[j]} repeat the same node "
                                 f"({len(dup)} duplicate pair(s))")
    return Dataset(nodes, values)


def load_points(path, dim):
    """Read evaluation points: ``dim`` coordinates per line, an optional extra value column is ignored."""
    rows, _ = _parse_records(path, dim, dim + 1)
    return np.array([r[:dim] for r in rows], dtype=float).reshape(-1, dim)


def write_delimited(path, dataset: Dataset):
    """Write a dataset in the format read by :func:`load_delimited`, 17 significant digits."""
    with open(path, "w") as fh:
        for x, v in zip(dataset.nodes, dataset.values):
            fh.write(" ".join(f"{c:.17g}" for c in x) + f" {v:.17g}\n")


@dataclass(frozen=True, eq=False)
class DomainTransform:
    """Per-axis affine map ``u = (x - offset) * scale`` onto the unit cube."""

    offset: np.ndarray
    scale: np.ndarray

    def forward(self, x):
        return (np.asarray(x, dtype=float) - self.offset) * self.scale

    def inverse(self, u):
        return np.asarray(u, dtype=float) / self.scale + self.offset

    def to_dict(self):
        return {"offset": self.offset.tolist(), "scale": self.scale.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(np.array(d["offset"], dtype=float), np.array(d["scale"], dtype=float))

    @classmethod
    def identity(cls, dim):
        return cls(np.zeros(dim), np.ones(dim))


def rescale_to_unit(dataset: Dataset):
    """Map node coordinates onto ``[0, 1]^M``; values are left in their own units."""
    lo = dataset.nodes.min(axis=0)
    extent = dataset.nodes.max(axis=0) - lo
    if np.any(extent <= 0):
        axes = np.flatnonzero(extent <= 0).tolist()
        raise DegenerateDomainError(f"zero extent along axis/axes {axes}")
    transform = DomainTransform(lo, 1.0 / extent)
    unit = np.clip(transform.forward(dataset.nodes), 0.0, 1.0)
    return Dataset(unit, dataset.values), transform


@dataclass(frozen=True)
class SplitSpec:
    k: int
    seed: int = 0


def split_indices(n, spec: SplitSpec):
    if not 0 < spec.k < n:
        raise ValidationError(f"holdout count must satisfy 0 < k < N (k={spec.k}, N={n})")
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    perm = rng.permutation(n)
    return np.sort(perm[spec.k:]), np.sort(perm[:spec.k])


def validation_split(dataset: Dataset, spec: SplitSpec):
    """Seeded random split into ``(train, holdout)`` with ``spec.k`` holdout nodes."""
    train, hold = split_indices(dataset.n, spec)
    return dataset.subset(train), dataset.subset(hold)


def format_number(v) -> str:
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.5e}"


def write_results(path, rows, columns=RESULT_COLUMNS):
    """Write result rows as CSV; every non-label cell in 6-significant-digit scientific notation."""
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(columns)
            for row in rows:
                if len(row) != len(columns):
                    raise ValidationError(f"row {row!r} does not match columns {columns}")
                w.writerow([str(row[0])] + [format_number(v) for v in row[1:]])
    except OSError as exc:
        raise RBFPUError(f"cannot write {path}: {exc.strerror or exc}") from exc


def read_results(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        rows = [(r[0], *(float(v) for v in r[1:])) for r in reader]
    return header, rows
