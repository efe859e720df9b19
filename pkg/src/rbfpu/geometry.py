"""Node sets, ball queries and the partition-of-unity cover.

The cover is a uniform grid of patch centers over the unit hypercube.  Each
patch radius is later chosen per center; this module supplies the search
interval for it (:func:`radius_range`), whose lower end grows with the local
node sparsity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product

import numpy as np
from scipy.spatial import cKDTree
from scipy.special import gammaln

from .errors import DegenerateCoverError, DuplicateNodeError, UnsupportedDimensionError, ValidationError

#: Geometric factor used when growing the smallest admissible radius.
RADIUS_GROWTH = 1.2

#: Default minimum number of nodes a patch must hold.
N_MIN = 3

_PRIMES = (
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71,
    73, 79, 83, 89, 97, 101, 103, 107, 109, 113, 127, 131, 137, 139, 149, 151,
    157, 163, 167, 173, 179, 181, 191, 193, 197, 199, 211, 223, 227, 229,
)


@dataclass(frozen=True, eq=False)
class Dataset:
    """Scattered nodes in ``M`` dimensions with one scalar value per node.

    ``nodes`` has shape ``(N, M)`` and ``values`` shape ``(N,)``.  Nodes must
    be pairwise distinct; construction raises :class:`DuplicateNodeError`
    otherwise.
    """

    nodes: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float)
        if nodes.ndim == 1:
            nodes = nodes[:, None]
        values = np.array(self.values, dtype=float).reshape(-1)
        if nodes.ndim != 2 or nodes.shape[1] < 1:
            raise ValidationError(f"nodes must be an (N, M) array, got shape {nodes.shape}")
        if len(nodes) < 1:
            raise ValidationError("dataset needs at least one node")
        if len(nodes) != len(values):
            raise ValidationError(f"{len(nodes)} nodes but {len(values)} values")
        if not (np.all(np.isfinite(nodes)) and np.all(np.isfinite(values))):
            raise ValidationError("nodes and values must be finite")
        dup = duplicate_pairs(nodes)
        if dup:
            i, j = dup[0]
            raise DuplicateNodeError(f"nodes {i} and {j} coincide ({len(dup)} duplicate pair(s))")
        nodes.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return self.nodes.shape[0]

    @property
    def dim(self) -> int:
        return self.nodes.shape[1]

    def in_unit_cube(self, tol=0.0) -> bool:
        return bool(np.all(self.nodes >= -tol) and np.all(self.nodes <= 1.0 + tol))

    def subset(self, indices) -> "Dataset":
        indices = np.asarray(indices, dtype=int)
        return Dataset(self.nodes[indices], self.values[indices])


def duplicate_pairs(nodes):
    """Return ``(i, j)`` index pairs (``i < j``) of exactly coinciding rows."""
    nodes = np.asarray(nodes, dtype=float)
    if len(nodes) < 2:
        return []
    order = np.lexsort(nodes.T[::-1])
    srt = nodes[order]
    same = np.all(srt[1:] == srt[:-1], axis=1)
    pairs = []
    for k in np.flatnonzero(same):
        a, b = int(order[k]), int(order[k + 1])
        pairs.append((min(a, b), max(a, b)))
    return sorted(pairs)


def _radical_inverse(indices, base):
    out = np.zeros(len(indices))
    idx = np.array(indices, dtype=np.int64)
    scale = 1.0 / base
    while np.any(idx > 0):
        idx, digit = np.divmod(idx, base)
        out += digit * scale
        scale /= base
    return out


def halton_sequence(n, dims, skip=0):
    """Plain (unscrambled) Halton points ``skip+1 .. skip+n``.

    Dimension ``k`` uses the ``k``-th prime as radical-inverse base, so
    ``halton_sequence(1, 2)`` is ``[[0.5, 1/3]]``.

    Returns
    -------
    ndarray of shape (n, dims)
    """
    if dims < 1:
        raise ValidationError("dims must be >= 1")
    if dims > len(_PRIMES):
        raise UnsupportedDimensionError(f"Halton sequence supports at most {len(_PRIMES)} dimensions")
    if n < 1:
        raise ValidationError("n must be >= 1")
    if skip < 0:
        raise ValidationError("skip must be >= 0")
    idx = np.arange(skip + 1, skip + n + 1, dtype=np.int64)
    return np.column_stack([_radical_inverse(idx, _PRIMES[k]) for k in range(dims)])


class SpatialIndex:
    """Exact Euclidean ball queries over a fixed node set.

    A k-d tree narrows the candidates; membership is then decided with the
    same explicit distance computation used everywhere else, so a node on the
    sphere is included (``dist <= radius``) regardless of tree rounding.
    """

    def __init__(self, nodes):
        nodes = np.asarray(nodes, dtype=float)
        if nodes.ndim == 1:
            nodes = nodes[:, None]
        self.nodes = nodes
        self.n = len(nodes)
        self._tree = cKDTree(nodes)

    def range_query(self, center, radius):
        if radius < 0:
            raise ValidationError("radius must be non-negative")
        center = np.asarray(center, dtype=float).reshape(-1)
        cand = self._tree.query_ball_point(center, radius * (1.0 + 1e-9) + 1e-15)
        if not cand:
            return np.empty(0, dtype=int)
        cand = np.array(sorted(cand), dtype=int)
        dist = np.sqrt(np.sum((self.nodes[cand] - center) ** 2, axis=1))
        return cand[dist <= radius]

    def count(self, center, radius) -> int:
        return len(self.range_query(center, radius))

    def nearest(self, center, k):
        k = min(k, self.n)
        _, idx = self._tree.query(np.asarray(center, dtype=float), k=k)
        return np.sort(np.atleast_1d(idx).astype(int))


def build_spatial_index(dataset: Dataset) -> SpatialIndex:
    # Dataset construction already enforced distinct nodes.
    return SpatialIndex(dataset.nodes)


def range_query(index: SpatialIndex, center, radius):
    """Indices ``i`` with ``||x_i - center|| <= radius``, ascending."""
    return index.range_query(center, radius)


@dataclass(frozen=True, eq=False)
class PUCover:
    centers: np.ndarray
    spacing: float
    per_axis: int
    dim: int
    baseline_radius: float

    @property
    def d(self) -> int:
        return len(self.centers)

    @property
    def coverage_radius(self) -> float:
        """Half the cell diagonal: every point of the cube is this close to a center."""
        return self.spacing * math.sqrt(self.dim) / 2.0


def generate_pu_cover(n, dim) -> PUCover:
    """Uniform grid of ``ceil((n/4)^(1/dim))**dim`` cell-midpoint centers."""
    if n < 1 or dim < 1:
        raise ValidationError("n and dim must be >= 1")
    return grid_cover(_per_axis_count(n, dim), dim)


def grid_cover(per_axis, dim) -> PUCover:
    """Cover with ``per_axis`` cells along every axis."""
    spacing = 1.0 / per_axis
    axis = (np.arange(per_axis) + 0.5) * spacing
    centers = np.array(list(product(axis, repeat=dim)), dtype=float).reshape(-1, dim)
    d = per_axis**dim
    return PUCover(centers, spacing, per_axis, dim, baseline_radius=1.0 / d ** (1.0 / dim))


def _per_axis_count(n, dim):
    c = max(1, math.ceil((n / 4.0) ** (1.0 / dim)))
    # guard floating error in the root, e.g. (289/4)**0.5 exactly 8.5
    while c > 1 and (c - 1) ** dim >= n / 4.0:
        c -= 1
    while c**dim < n / 4.0:
        c += 1
    return c


def ball_volume(radius, dim):
    """Volume of the ``dim``-dimensional Euclidean ball."""
    if radius < 0:
        raise ValidationError("radius must be non-negative")
    unit = math.exp(0.5 * dim * math.log(math.pi) - gammaln(0.5 * dim + 1.0))
    return unit * radius**dim


@dataclass(frozen=True)
class RadiusRange:
    delta_min: float
    delta_max: float
    h: float
    candidates: np.ndarray = field(compare=False)
    required_count: int = 0

    @property
    def P(self) -> int:
        return len(self.candidates)


def required_count(n, cover: PUCover, n_min=N_MIN) -> int:
    """Node count a patch must reach before its radius is accepted.

    The uniform-density expectation inside a baseline-radius ball, capped at
    ``n`` (few coarse patches can have a ball larger than the cube) and never
    below ``n_min``.
    """
    expected = math.ceil(n * ball_volume(cover.baseline_radius, cover.dim) - 1e-9)
    return max(min(expected, n), n_min)


def start_radius(cover: PUCover) -> float:
    return max(cover.baseline_radius, cover.coverage_radius)


def radius_range(center, index: SpatialIndex, cover: PUCover, h=2.0, P=6, n_min=N_MIN) -> RadiusRange:
    """Search interval ``[delta_min, h*delta_min]`` for one patch.

    ``delta_min`` is the first radius of ``delta0 * 1.2**k`` whose ball holds
    at least :func:`required_count` nodes, so it only grows where the data
    are locally sparse.
    """
    if not h > 1:
        raise ValidationError(f"h must exceed 1, got {h}")
    if P < 2:
        raise ValidationError(f"P must be >= 2, got {P}")
    need = required_count(index.n, cover, n_min)
    diameter = math.sqrt(cover.dim)
    delta = start_radius(cover)
    delta_min = None
    while delta <= diameter:
        if index.count(center, delta) >= need:
            delta_min = delta
            break
        delta *= RADIUS_GROWTH
    if delta_min is None and index.count(center, diameter) >= need:
        delta_min = diameter
    if delta_min is None:
        raise DegenerateCoverError(
            f"no radius up to {diameter:.4g} around {np.asarray(center).tolist()} holds {need} nodes"
        )
    candidates = np.linspace(delta_min, h * delta_min, P)
    candidates[-1] = h * delta_min
    return RadiusRange(delta_min, h * delta_min, h, candidates, need)
