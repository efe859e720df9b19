"""Partition-of-unity assembly of local RBF interpolants.

The global interpolant blends local fits with Shepard-normalized Wendland C2
bumps, one per patch, each scaled to its own radius::

    I(x) = sum_j W_j(x) R_j(x),   W_j = psi_j / sum_k psi_k

Two fitting modes are provided: :func:`fit_pu_variable` picks radius and
shape per patch by leave-one-out search, :func:`fit_pu_fixed` uses the
grid-spacing radius and a single shape everywhere.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .errors import NotSPDError, OutOfDomainError, UncoveredPointError, UnfittableSubdomainError, ValidationError
from .geometry import N_MIN, Dataset, PUCover, build_spatial_index, generate_pu_cover, radius_range
from .kernels import KernelKind, cross_distances, gram_matrix, kernel_tag, phi
from .linalg import factorize_spd
from .selection import build_error_matrix, select_parameters, shape_grid

log = logging.getLogger(__name__)

THREADS_ENV = "RBFPU_NUM_THREADS"

#: Slack allowed when checking that evaluation points lie in the unit cube.
DOMAIN_TOL = 1e-12


def wendland_weight(r, delta):
    """Wendland C2 bump ``(1 - r/delta)_+^4 (4 r/delta + 1)``."""
    if not delta > 0:
        raise ValidationError("delta must be positive")
    q = np.asarray(r, dtype=float) / delta
    out = np.maximum(0.0, 1.0 - q) ** 4 * (4.0 * q + 1.0)
    return float(out) if out.ndim == 0 else out


def shepard_weights(x, active):
    """Normalized weights of the patches ``active = [(center, radius), ...]`` at ``x``."""
    x = np.asarray(x, dtype=float).reshape(-1)
    psi = np.array([wendland_weight(np.linalg.norm(x - np.asarray(c, dtype=float)), r) for c, r in active])
    total = psi.sum()
    if not total > 0:
        raise UncoveredPointError(f"no active patch has positive weight at {x.tolist()}")
    return psi / total


@dataclass(eq=False)
class LocalInterpolant:
    center: np.ndarray
    delta: float
    epsilon: float
    member_indices: np.ndarray
    coefficients: np.ndarray
    points: np.ndarray
    delta_min: float | None = None
    score: float | None = None
    note: str = ""

    @property
    def n_members(self) -> int:
        return len(self.member_indices)

    def __call__(self, x, tag):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        # row-wise reduction (no BLAS) so a point's value does not depend on the batch it is in
        return np.einsum("ij,j->i", phi(tag, self.epsilon, cross_distances(x, self.points)), self.coefficients)


def fit_local(dataset: Dataset, member_indices, tag, epsilon, center, delta, lu_fallback=False) -> LocalInterpolant:
    """Solve the local interpolation system on the given members.

    With ``lu_fallback`` a Gram matrix that fails the Cholesky pivot floor is
    solved by pivoted LU instead of raising; the returned interpolant then
    carries a note saying so.
    """
    members = np.asarray(member_indices, dtype=int)
    if len(members) < 1:
        raise ValidationError("local fit needs at least one member")
    pts = dataset.nodes[members]
    A = gram_matrix(KernelKind(tag, epsilon), pts)
    note = ""
    try:
        coef = factorize_spd(A).solve(dataset.values[members])
    except NotSPDError as exc:
        where = f"patch at {np.asarray(center).tolist()} (delta={delta:.4g}, eps={epsilon:.4g})"
        if not lu_fallback:
            raise UnfittableSubdomainError(f"{where}: {exc}") from exc
        coef = np.linalg.solve(A, dataset.values[members])
        note = f"{where}: Cholesky failed, solved by LU"
    return LocalInterpolant(np.asarray(center, dtype=float), float(delta), float(epsilon), members, coef, pts,
                            note=note)


@dataclass(eq=False)
class PUModel:
    tag: str
    dim: int
    cover: PUCover
    subdomains: list
    nodes: np.ndarray
    values: np.ndarray
    provenance: dict = field(default_factory=dict)
    transform: object = None
    warnings: list = field(default_factory=list)

    def __post_init__(self):
        self._centers = np.array([s.center for s in self.subdomains]).reshape(-1, self.dim)
        self._deltas = np.array([s.delta for s in self.subdomains], dtype=float)
        self._center_tree = cKDTree(self._centers)

    @property
    def d(self) -> int:
        return len(self.subdomains)

    @property
    def selected_pairs(self):
        return [(s.delta, s.epsilon) for s in self.subdomains]

    def active(self, x):
        """Indices of patches whose weight is positive at ``x`` (``dist < delta``)."""
        x = np.asarray(x, dtype=float).reshape(-1)
        cand = self._center_tree.query_ball_point(x, float(self._deltas.max()))
        cand = np.array(sorted(cand), dtype=int)
        if len(cand) == 0:
            return cand
        dist = np.sqrt(np.sum((self._centers[cand] - x) ** 2, axis=1))
        return cand[dist < self._deltas[cand]]

    def weights(self, x):
        idx = self.active(x)
        if len(idx) == 0:
            raise UncoveredPointError(f"point {np.asarray(x).tolist()} lies in no patch")
        return idx, shepard_weights(x, [(self._centers[j], self._deltas[j]) for j in idx])

    def __call__(self, points):
        return evaluate(self, points)


def _check_unit_cube(points):
    if np.any(points < -DOMAIN_TOL) or np.any(points > 1.0 + DOMAIN_TOL):
        bad = np.flatnonzero(np.any((points < -DOMAIN_TOL) | (points > 1.0 + DOMAIN_TOL), axis=1))
        raise OutOfDomainError(f"{len(bad)} point(s) outside [0,1]^M, first at row {bad[0]}")


def _as_points(points, dim):
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(-1, dim) if dim > 1 else pts[:, None]
    if pts.shape[1] != dim:
        raise ValidationError(f"points have dimension {pts.shape[1]}, model expects {dim}")
    return pts


def evaluate(model: PUModel, points):
    """Evaluate the blended interpolant at points of the unit cube."""
    pts = _as_points(points, model.dim)
    _check_unit_cube(pts)
    num = np.zeros(len(pts))
    den = np.zeros(len(pts))
    if len(pts) == 0:
        return num
    tree = cKDTree(pts)
    for sub in model.subdomains:
        cand = tree.query_ball_point(sub.center, sub.delta)
        if not cand:
            continue
        cand = np.array(sorted(cand), dtype=int)
        r = np.sqrt(np.sum((pts[cand] - sub.center) ** 2, axis=1))
        inside = r < sub.delta
        cand, r = cand[inside], r[inside]
        if len(cand) == 0:
            continue
        psi = wendland_weight(r, sub.delta)
        num[cand] += psi * sub(pts[cand], model.tag)
        den[cand] += psi
    out = np.empty(len(pts))
    covered = den > 0
    out[covered] = num[covered] / den[covered]
    if not np.all(covered):
        missing = np.flatnonzero(~covered)
        log.warning("%d evaluation point(s) outside every patch; using nearest patch", len(missing))
        _, nearest = model._center_tree.query(pts[missing])
        for i, j in zip(missing, np.atleast_1d(nearest)):
            out[i] = model.subdomains[j](pts[i], model.tag)[0]
    return out


def _n_threads():
    raw = os.environ.get(THREADS_ENV)
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise ValidationError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    return os.cpu_count() or 1


def _map_ordered(fn, items):
    # results are collected by position, so scheduling never changes the model
    n = _n_threads()
    if n == 1 or len(items) < 2:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def _require_unit_dataset(dataset: Dataset):
    if not dataset.in_unit_cube(DOMAIN_TOL):
        raise ValidationError("dataset nodes must lie in [0,1]^M; rescale first")


def fit_pu_variable(dataset: Dataset, tag, shapes=None, h=2.0, P=6, n_min=N_MIN) -> PUModel:
    """Fit with per-patch (radius, shape) chosen by leave-one-out search."""
    _require_unit_dataset(dataset)
    tag = kernel_tag(tag)
    shapes = shape_grid() if shapes is None else np.asarray(shapes, dtype=float).reshape(-1)
    if np.any(shapes <= 0):
        raise ValidationError("shape candidates must be positive")
    cover = generate_pu_cover(dataset.n, dataset.dim)
    index = build_spatial_index(dataset)

    def fit_one(center):
        rr = radius_range(center, index, cover, h, P, n_min)
        E = build_error_matrix(center, dataset, index, rr, shapes, tag)
        try:
            sel = select_parameters(E)
        except UnfittableSubdomainError as exc:
            raise UnfittableSubdomainError(f"patch at {center.tolist()}: {exc}") from None
        # refit from scratch so the stored coefficients match the recorded pair
        members = index.range_query(center, sel.delta)
        sub = fit_local(dataset, members, tag, sel.epsilon, center, sel.delta)
        sub.delta_min = rr.delta_min
        sub.score = sel.score
        return sub

    subdomains = _map_ordered(fit_one, list(cover.centers))
    provenance = {
        "mode": "variable",
        "kernel": tag,
        "shapes": [float(s) for s in shapes],
        "h": float(h),
        "P": int(P),
        "n_min": int(n_min),
    }
    return PUModel(tag, dataset.dim, cover, subdomains, dataset.nodes, dataset.values, provenance)


def fixed_radius(cover: PUCover) -> float:
    """Baseline radius ``1/d^(1/M)`` enlarged only if it would leave holes."""
    kappa = max(1.0, cover.coverage_radius / cover.baseline_radius)
    return cover.baseline_radius * kappa


def fit_pu_fixed(dataset: Dataset, tag, epsilon, n_min=N_MIN) -> PUModel:
    """Fit with one radius and one shape parameter shared by all patches."""
    _require_unit_dataset(dataset)
    tag = kernel_tag(tag)
    if not (np.isfinite(epsilon) and epsilon > 0):
        raise ValidationError(f"shape parameter must be positive, got {epsilon}")
    cover = generate_pu_cover(dataset.n, dataset.dim)
    index = build_spatial_index(dataset)
    delta = fixed_radius(cover)
    warnings = []

    def fit_one(center):
        members = index.range_query(center, delta)
        note = ""
        if len(members) == 0:
            members = index.nearest(center, n_min)
            note = f"empty patch at {center.tolist()}; fitted on nearest {len(members)} nodes"
        sub = fit_local(dataset, members, tag, epsilon, center, delta, lu_fallback=True)
        sub.note = "; ".join(n for n in (note, sub.note) if n)
        return sub

    subdomains = _map_ordered(fit_one, list(cover.centers))
    for sub in subdomains:
        if sub.note:
            warnings.append(sub.note)
    if warnings:
        log.warning("%d patch(es) needed a fallback in the fixed fit", len(warnings))
    provenance = {"mode": "fixed", "kernel": tag, "epsilon": float(epsilon), "n_min": int(n_min)}
    return PUModel(tag, dataset.dim, cover, subdomains, dataset.nodes, dataset.values, provenance,
                   warnings=warnings)
