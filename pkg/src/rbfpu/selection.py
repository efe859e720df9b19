"""Closed-form leave-one-out scores and the (radius, shape) search per patch.

For an interpolant with coefficients ``c = A^-1 f`` the residual obtained by
leaving node ``i`` out and refitting is ``c_i / (A^-1)_ii`` (Rippa's
identity), so one factorization yields every leave-one-out residual.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InsufficientDataError, UnfittableSubdomainError, ValidationError
from .geometry import Dataset, RadiusRange, SpatialIndex
from .kernels import KernelKind, distance_matrix, gram_matrix, kernel_tag, phi
from .linalg import PIVOT_TOL, cholesky_batch, factorize_spd, inverse_lower_batch


def shape_grid(count=30, low=1e-3, high=10.0):
    """``count`` log-spaced shape parameters strictly inside ``(low, high)``."""
    if count < 1:
        raise ValidationError("need at least one shape value")
    if not 0 < low < high:
        raise ValidationError(f"invalid shape range ({low}, {high})")
    # open interval: drop the endpoints of a (count + 2)-point log grid
    return np.logspace(np.log10(low), np.log10(high), count + 2)[1:-1]


def rippa_errors(coefficients, inv_diag):
    c = np.asarray(coefficients, dtype=float)
    g = np.asarray(inv_diag, dtype=float)
    if c.shape != g.shape:
        raise ValidationError(f"length mismatch: {c.shape} vs {g.shape}")
    return c / g


def loocv_scores(points, values, tag, shapes, pivot_tol=PIVOT_TOL):
    """Max-norm leave-one-out score of one node set for several shapes.

    Returns an array aligned with ``shapes``; ``inf`` marks shapes whose Gram
    matrix failed the Cholesky pivot test.
    """
    values = np.asarray(values, dtype=float)
    shapes = np.asarray(shapes, dtype=float).reshape(-1)
    dist = distance_matrix(points)
    A = phi(tag, shapes[:, None, None], dist[None, :, :])
    L, failed_at = cholesky_batch(A, pivot_tol)
    scores = np.full(len(shapes), np.inf)
    ok = failed_at < 0
    if not np.any(ok):
        return scores
    X = inverse_lower_batch(L[ok])
    y = X @ values
    coef = np.einsum("bki,bk->bi", X, y)
    inv_diag = np.einsum("bki,bki->bi", X, X)
    err = rippa_errors(coef, inv_diag)
    with np.errstate(invalid="ignore"):
        s = np.max(np.abs(err), axis=1)
    scores[ok] = np.where(np.isfinite(s), s, np.inf)
    return scores


def loocv_errors(points, values, kind: KernelKind):
    """Signed leave-one-out residuals from a single factorization.

    Raises :class:`~rbfpu.errors.NotSPDError` if the Gram matrix fails the
    pivot floor.
    """
    fact = factorize_spd(gram_matrix(kind, points))
    return rippa_errors(fact.solve(np.asarray(values, dtype=float)), fact.inverse_diagonal())


def loocv_score(points, values, kind: KernelKind) -> float:
    points = np.asarray(points, dtype=float)
    if len(points) < 2:
        raise InsufficientDataError("leave-one-out needs at least 2 points")
    return float(loocv_scores(points, values, kind.tag, [kind.shape])[0])


@dataclass(frozen=True, eq=False)
class ErrorMatrix:
    scores: np.ndarray
    radii: np.ndarray
    shapes: np.ndarray
    counts: np.ndarray | None = None

    @property
    def shape(self):
        return self.scores.shape


@dataclass(frozen=True)
class SelectedParameters:
    delta: float
    epsilon: float
    score: float
    p_index: int
    q_index: int


def build_error_matrix(center, dataset: Dataset, index: SpatialIndex, radius_range: RadiusRange,
                       shapes, tag) -> ErrorMatrix:
    """Score every (radius, shape) candidate of one patch.

    Balls holding fewer than two nodes score ``inf``.  Nested radii that pick
    up the same nodes share one evaluation.
    """
    tag = kernel_tag(tag)
    shapes = np.asarray(shapes, dtype=float).reshape(-1)
    radii = np.asarray(radius_range.candidates, dtype=float)
    scores = np.full((len(radii), len(shapes)), np.inf)
    counts = np.zeros(len(radii), dtype=int)
    prev_members = None
    for p, delta in enumerate(radii):
        members = index.range_query(center, delta)
        counts[p] = len(members)
        if prev_members is not None and np.array_equal(members, prev_members):
            scores[p] = scores[p - 1]
            continue
        prev_members = members
        if len(members) >= 2:
            scores[p] = loocv_scores(dataset.nodes[members], dataset.values[members], tag, shapes)
    return ErrorMatrix(scores, radii, shapes, counts)


def select_parameters(E: ErrorMatrix) -> SelectedParameters:
    """Minimize over the score grid; ties go to the smaller radius, then shape."""
    scores = np.asarray(E.scores, dtype=float)
    if not np.any(np.isfinite(scores)):
        raise UnfittableSubdomainError("every (radius, shape) candidate failed")
    flat = np.where(np.isfinite(scores), scores, np.inf)
    # argmin returns the first minimum in row-major order, which is the tie rule
    p, q = np.unravel_index(int(np.argmin(flat)), flat.shape)
    return SelectedParameters(float(E.radii[p]), float(E.shapes[q]), float(flat[p, q]), int(p), int(q))
