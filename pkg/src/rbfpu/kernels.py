"""Radial kernels used by the local interpolants.

Both kernels are strictly positive definite and depend on ``r`` only through
``eps * r``; their value at ``r = 0`` is 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist, squareform

from .errors import DuplicateNodeError, ValidationError

MATERN_C2 = "matern2"
IMQ = "imq"

KERNELS = (MATERN_C2, IMQ)

_ALIASES = {
    "matern2": MATERN_C2,
    "maternc2": MATERN_C2,
    "matern-c2": MATERN_C2,
    "matern_c2": MATERN_C2,
    "matern": MATERN_C2,
    "imq": IMQ,
    "inverse-multiquadric": IMQ,
}


def kernel_tag(name: str) -> str:
    """Normalize a user-facing kernel name to a canonical tag."""
    try:
        return _ALIASES[name.strip().lower()]
    except KeyError:
        raise ValidationError(f"unknown kernel {name!r}; expected one of {', '.join(KERNELS)}") from None


@dataclass(frozen=True)
class KernelKind:
    tag: str
    shape: float

    def __post_init__(self):
        object.__setattr__(self, "tag", kernel_tag(self.tag))
        if not (np.isfinite(self.shape) and self.shape > 0):
            raise ValidationError(f"shape parameter must be positive, got {self.shape}")

    def __call__(self, r):
        return kernel_eval(self, r)


def phi(tag, eps, r):
    """Vectorised kernel profile; ``eps`` and ``r`` broadcast together."""
    er = np.multiply(eps, r)
    if tag == MATERN_C2:
        return np.exp(-er) * (1.0 + er)
    if tag == IMQ:
        return 1.0 / np.sqrt(1.0 + er * er)
    raise ValidationError(f"unknown kernel tag {tag!r}")


def kernel_eval(kind: KernelKind, r):
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr < 0):
        raise ValidationError("kernel distance must be non-negative")
    out = phi(kind.tag, kind.shape, r_arr)
    return float(out) if out.ndim == 0 else out


def distance_matrix(points):
    """Pairwise Euclidean distances, exactly symmetric with a zero diagonal."""
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points[:, None]
    if len(points) == 1:
        return np.zeros((1, 1))
    return squareform(pdist(points))


def cross_distances(x, y):
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.atleast_2d(np.asarray(y, dtype=float))
    diff = x[:, None, :] - y[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


def gram_matrix(kind: KernelKind, points):
    """Kernel matrix ``A[i, k] = phi(||x_i - x_k||)`` of distinct points."""
    dist = distance_matrix(points)
    n = len(dist)
    if n > 1 and np.any(dist[np.triu_indices(n, 1)] == 0.0):
        raise DuplicateNodeError("gram_matrix requires pairwise distinct points")
    return phi(kind.tag, kind.shape, dist)
