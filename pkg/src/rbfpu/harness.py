"""Accuracy experiments: the product-function convergence table and holdout validation."""

from __future__ import annotations

import configparser
import logging
import math
import time
from dataclasses import dataclass, field, replace
from itertools import product

import numpy as np

from .datasets import SPLIT_RNG, SplitSpec, load_delimited, rescale_to_unit, validation_split, write_results
from .errors import RBFPUError, ValidationError
from .geometry import N_MIN, Dataset, halton_sequence
from .kernels import IMQ, MATERN_C2, kernel_tag
from .pu import evaluate, fit_pu_fixed, fit_pu_variable
from .selection import shape_grid

log = logging.getLogger(__name__)

PRESET_SIZES = (289, 1089, 4225, 16641, 66049)
DEFAULT_SIZES = (289, 1089, 4225)

BENCH_COLUMNS = ("label", "rmse_var", "mae_var", "rmse_fixed", "mae_fixed")


def product_function(x):
    """``16 x1 x2 (1 - x1) (1 - x2)``; accepts one point or an ``(n, 2)`` array."""
    x = np.asarray(x, dtype=float)
    x1, x2 = x[..., 0], x[..., 1]
    out = 16.0 * x1 * x2 * (1.0 - x1) * (1.0 - x2)
    return float(out) if out.ndim == 0 else out


def eval_grid(g, dim=2):
    """``g**dim`` equispaced points of ``[0,1]^dim``, endpoints included."""
    if g < 2:
        raise ValidationError("grid resolution must be >= 2")
    axis = np.linspace(0.0, 1.0, g)
    return np.array(list(product(axis, repeat=dim)), dtype=float).reshape(-1, dim)


def _residuals(pred, truth):
    pred = np.asarray(pred, dtype=float).reshape(-1)
    truth = np.asarray(truth, dtype=float).reshape(-1)
    if pred.shape != truth.shape:
        raise ValidationError(f"length mismatch: {pred.size} vs {truth.size}")
    if pred.size == 0:
        raise ValidationError("empty input")
    return pred - truth


def mae(pred, truth) -> float:
    return float(np.max(np.abs(_residuals(pred, truth))))


def rmse(pred, truth) -> float:
    r = _residuals(pred, truth)
    return float(np.sqrt(np.mean(r * r)))


@dataclass
class ExperimentConfig:
    kernel: str = IMQ
    mode: str = "both"
    sizes: tuple = DEFAULT_SIZES
    q: int = 30
    shape_min: float = 1e-3
    shape_max: float = 10.0
    h: float = 2.0
    p: int = 6
    eps_fixed: float = 0.6
    grid: int = 40
    seed: int = 0
    n_min: int = N_MIN

    def __post_init__(self):
        self.kernel = kernel_tag(self.kernel)
        self.sizes = tuple(int(n) for n in self.sizes)
        self.validate()

    def validate(self):
        if self.mode not in ("variable", "fixed", "both"):
            raise ValidationError(f"mode must be variable, fixed or both, got {self.mode!r}")
        if self.q < 1:
            raise ValidationError("Q must be >= 1")
        if self.p < 2:
            raise ValidationError("P must be >= 2")
        if not self.h > 1:
            raise ValidationError(f"h must exceed 1, got {self.h}")
        if self.grid < 2:
            raise ValidationError("grid resolution must be >= 2")
        if not 0 < self.shape_min < self.shape_max:
            raise ValidationError(f"invalid shape range ({self.shape_min}, {self.shape_max})")
        if self.mode in ("fixed", "both") and not self.eps_fixed > 0:
            raise ValidationError("fixed mode needs a positive shape parameter")
        if not self.sizes or any(n < 1 for n in self.sizes):
            raise ValidationError("sizes must be positive integers")
        if self.n_min < 1:
            raise ValidationError("n_min must be >= 1")

    @property
    def shapes(self):
        return shape_grid(self.q, self.shape_min, self.shape_max)


_CONFIG_TYPES = {
    "kernel": str, "mode": str, "q": int, "shape_min": float, "shape_max": float, "h": float,
    "p": int, "eps_fixed": float, "grid": int, "seed": int, "n_min": int,
}


def load_config(path) -> ExperimentConfig:
    """Read an ``[experiment]`` section of ``key = value`` lines.

    Keys are the :class:`ExperimentConfig` field names; ``sizes`` is a comma
    separated list.  Unknown keys are rejected.
    """
    parser = configparser.ConfigParser()
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ValidationError(f"cannot read config {path}: {exc}") from exc
    if not parser.has_section("experiment"):
        raise ValidationError(f"{path}: missing [experiment] section")
    kwargs = {}
    for key, raw in parser.items("experiment"):
        if key == "sizes":
            kwargs["sizes"] = tuple(int(s) for s in raw.replace(" ", "").split(",") if s)
        elif key in _CONFIG_TYPES:
            try:
                kwargs[key] = _CONFIG_TYPES[key](raw)
            except ValueError:
                raise ValidationError(f"{path}: bad value for {key}: {raw!r}") from None
        else:
            raise ValidationError(f"{path}: unknown key {key!r}")
    return ExperimentConfig(**kwargs)


@dataclass
class BenchmarkRow:
    n: int
    rmse_var: float = math.nan
    mae_var: float = math.nan
    rmse_fixed: float = math.nan
    mae_fixed: float = math.nan
    seconds_var: float = math.nan
    seconds_fixed: float = math.nan
    error: str = ""

    @property
    def label(self):
        return f"N={self.n}"

    def csv_row(self):
        return (self.label, self.rmse_var, self.mae_var, self.rmse_fixed, self.mae_fixed)


def product_dataset(n) -> Dataset:
    x = halton_sequence(n, 2)
    return Dataset(x, product_function(x))


def run_benchmark(config: ExperimentConfig, out=None):
    """One row per size: Halton nodes, both fitting modes, errors on the ``g x g`` grid.

    A failing fit is logged and leaves NaN cells plus an ``error`` message in
    its row; the remaining sizes still run.  The CSV written to ``out`` holds
    no timings so that repeated runs produce identical files.
    """
    grid = eval_grid(config.grid, 2)
    truth = product_function(grid)
    rows = []
    for n in config.sizes:
        row = BenchmarkRow(n)
        ds = product_dataset(n)
        if config.mode in ("variable", "both"):
            try:
                t0 = time.perf_counter()
                model = fit_pu_variable(ds, config.kernel, config.shapes, config.h, config.p, config.n_min)
                pred = evaluate(model, grid)
                row.seconds_var = time.perf_counter() - t0
                row.rmse_var, row.mae_var = rmse(pred, truth), mae(pred, truth)
            except RBFPUError as exc:
                log.error("N=%d variable fit failed: %s", n, exc)
                row.error = f"variable: {exc}"
        if config.mode in ("fixed", "both"):
            try:
                t0 = time.perf_counter()
                model = fit_pu_fixed(ds, config.kernel, config.eps_fixed, config.n_min)
                pred = evaluate(model, grid)
                row.seconds_fixed = time.perf_counter() - t0
                row.rmse_fixed, row.mae_fixed = rmse(pred, truth), mae(pred, truth)
            except RBFPUError as exc:
                log.error("N=%d fixed fit failed: %s", n, exc)
                row.error = "; ".join(e for e in (row.error, f"fixed: {exc}") if e)
        rows.append(row)
    if out is not None:
        write_results(out, [r.csv_row() for r in rows], BENCH_COLUMNS)
    return rows


def format_table(rows):
    head = f"{'N':>7}  {'RMSE_var':>11}  {'MAE_var':>11}  {'RMSE_fixed':>11}  {'MAE_fixed':>11}  {'time[s]':>8}"
    lines = [head]
    for r in rows:
        secs = np.nansum([r.seconds_var, r.seconds_fixed])
        lines.append(
            f"{r.n:>7}  {r.rmse_var:11.3e}  {r.mae_var:11.3e}  {r.rmse_fixed:11.3e}  {r.mae_fixed:11.3e}  {secs:8.2f}"
            + (f"  ERROR {r.error}" if r.error else "")
        )
    return "\n".join(lines)


@dataclass
class HoldoutResult:
    rmse: float
    mae: float
    n_train: int
    n_holdout: int
    seconds: float
    baseline_rmse: float = math.nan
    baseline_mae: float = math.nan
    provenance: dict = field(default_factory=dict)


def holdout_experiment(raw: Dataset, config: ExperimentConfig, k=90, seed=0, compare_fixed=False) -> HoldoutResult:
    """Rescale, split off ``k`` validation nodes, fit on the rest, score on the held-out nodes.

    Errors are in the units of the data values.
    """
    unit, _ = rescale_to_unit(raw)
    train, hold = validation_split(unit, SplitSpec(k, seed))
    t0 = time.perf_counter()
    model = fit_pu_variable(train, config.kernel, config.shapes, config.h, config.p, config.n_min)
    pred = evaluate(model, hold.nodes)
    secs = time.perf_counter() - t0
    res = HoldoutResult(rmse(pred, hold.values), mae(pred, hold.values), train.n, hold.n, secs,
                        provenance={"split_rng": SPLIT_RNG, "seed": seed, "kernel": config.kernel})
    if compare_fixed:
        base = fit_pu_fixed(train, config.kernel, config.eps_fixed, config.n_min)
        bpred = evaluate(base, hold.nodes)
        res.baseline_rmse, res.baseline_mae = rmse(bpred, hold.values), mae(bpred, hold.values)
    return res


def run_holdout(path, config: ExperimentConfig | None = None, dim=2, k=90, seed=0, compare_fixed=False):
    """Holdout validation on a data file (defaults to the Matern C2 kernel)."""
    config = config or ExperimentConfig(kernel=MATERN_C2)
    return holdout_experiment(load_delimited(path, dim), config, k, seed, compare_fixed)


def contour_dataset(n=8000, levels=20, span=800.0, seed=0) -> Dataset:
    """Points along level curves of a smooth terrain, in the style of digitized contour maps.

    The surface (:func:`contour_surface`) spans ``[0, span]`` over the unit
    square.  Level ``k`` sits at ``span * (k + 0.5) / levels``.  Crossings of
    every level with randomly offset horizontal and vertical scan lines are
    located by bisection, so each node lies on its contour to rounding error;
    the crossings are then subsampled to exactly ``n``.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    surface = contour_surface(span)
    targets = span * (np.arange(levels) + 0.5) / levels
    lines = 200
    nodes = _contour_crossings(surface, targets, lines, rng)
    lines = math.ceil(lines * 1.3 * n / max(len(nodes), 1))
    nodes = _contour_crossings(surface, targets, lines, rng)
    if len(nodes) < n:
        raise RBFPUError(f"could only place {len(nodes)} contour points")
    nodes = nodes[np.sort(rng.choice(len(nodes), size=n, replace=False))]
    return Dataset(nodes, surface(nodes))


def _contour_crossings(surface, targets, lines, rng, samples=1024):
    t = np.linspace(0.0, 1.0, samples)
    found = []
    for axis in (0, 1):
        fixed = (np.arange(lines) + rng.random(lines)) / lines
        grid = np.empty((lines, samples, 2))
        grid[..., axis] = t[None, :]
        grid[..., 1 - axis] = fixed[:, None]
        vals = surface(grid)
        for c in targets:
            s = vals - c
            li, si = np.nonzero(s[:, :-1] * s[:, 1:] < 0)
            if len(li) == 0:
                continue
            lo, hi = t[si].copy(), t[si + 1].copy()
            lo_sign = np.sign(s[li, si])
            pt = np.empty((len(li), 2))
            pt[:, 1 - axis] = fixed[li]
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                pt[:, axis] = mid
                same = np.sign(surface(pt) - c) == lo_sign
                lo = np.where(same, mid, lo)
                hi = np.where(same, hi, mid)
            pt[:, axis] = 0.5 * (lo + hi)
            found.append(pt)
    return np.vstack(found) if found else np.empty((0, 2))


# (weight, center x, center y, scale x, scale y) of the Gaussian features
_TERRAIN_BUMPS = (
    (1.0, 0.35, 0.60, 0.45, 0.30),
    (-0.3, 0.75, 0.30, 0.25, 0.25),
)


@dataclass(frozen=True)
class _Terrain:
    span: float
    low: float
    high: float

    @staticmethod
    def raw(x):
        x = np.asarray(x, dtype=float)
        z = 0.25 * x[..., 0] + 0.15 * x[..., 1]
        for w, cx, cy, sx, sy in _TERRAIN_BUMPS:
            z = z + w * np.exp(-(((x[..., 0] - cx) / sx) ** 2 + ((x[..., 1] - cy) / sy) ** 2))
        return z

    def __call__(self, x):
        return self.span * (self.raw(x) - self.low) / (self.high - self.low)


def contour_surface(span=800.0):
    """Smooth synthetic terrain on the unit square, rescaled to ``[0, span]``.

    A gentle tilt plus a broad anisotropic hill and a shallow depression; the range is
    measured on a 1001 x 1001 grid.
    """
    t = np.linspace(0.0, 1.0, 1001)
    z = _Terrain.raw(np.stack(np.meshgrid(t, t, indexing="ij"), axis=-1))
    return _Terrain(span, float(z.min()), float(z.max()))


def with_sizes(config: ExperimentConfig, sizes):
    return replace(config, sizes=tuple(sizes))
