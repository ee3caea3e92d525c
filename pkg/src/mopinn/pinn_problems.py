"""Benchmark problems, collocation grids, datasets and loss assembly.

Two problems are provided: logistic growth (one input, t) and 1-D heat
conduction (two inputs, x and t). Both have analytic solutions, so residuals
can be verified exactly and noisy datasets can be synthesized at any level.

Loss assembly is written against jet channels and works unchanged for plain
numpy channels (value evaluation) and tape variables (gradient evaluation).
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import autodiff
from .autodiff import Jets
from .errors import ConfigurationError
from .network import MLP

Array = np.ndarray


# ---------------------------------------------------------------------------
# problem parameters
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LogisticParams:
    """Logistic growth du/dt = r u (1 - u/K) with u(0) = u0.

    K and u0 are pinned to 1 and 1/2; the baked-in analytic solution
    1 / (1 + exp(-r t)) assumes them.
    """

    growth_rate: float = 1.0
    carrying_capacity: float = 1.0
    u0: float = 0.5
    horizon: float = 10.0

    def __post_init__(self):
        if self.growth_rate <= 0:
            raise ConfigurationError("growth rate must be positive")
        if self.carrying_capacity != 1.0 or self.u0 != 0.5:
            raise ConfigurationError("carrying capacity 1 and u0 = 1/2 are fixed")
        if self.horizon <= 0:
            raise ConfigurationError("horizon must be positive")


@dataclass(frozen=True)
class HeatParams:
    """Heat conduction u_t = kappa u_xx on a rod of length L.

    IC sin(pi x / L), homogeneous Dirichlet BC. The analytic solution decays
    as exp(-kappa pi^2 t / L^2).
    """

    length: float = 5.0
    diffusivity: float = 1.0
    horizon: float = 1.0

    def __post_init__(self):
        if self.length <= 0 or self.diffusivity <= 0 or self.horizon <= 0:
            raise ConfigurationError("heat parameters must be positive")


@dataclass(frozen=True)
class LossWeights:
    pde: float = 1.0
    ic: float = 1.0
    bc: float = 1.0

    def __post_init__(self):
        if min(self.pde, self.ic, self.bc) < 0:
            raise ConfigurationError("loss weights must be non-negative")


# ---------------------------------------------------------------------------
# exact solutions
# ---------------------------------------------------------------------------

def exact_logistic(t, growth_rate: float = 1.0):
    return 1.0 / (1.0 + np.exp(-growth_rate * np.asarray(t, dtype=np.float64)))


def exact_heat(x, t, length: float = 5.0, diffusivity: float = 1.0):
    x = np.asarray(x, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    k = np.pi / length
    return np.sin(k * x) * np.exp(-diffusivity * k * k * t)


# ---------------------------------------------------------------------------
# collocation grids
# ---------------------------------------------------------------------------

def make_grid_1d(n: int, interval) -> Array:
    """n equally spaced points including both endpoints."""
    a, b = float(interval[0]), float(interval[1])
    if n < 2:
        raise ConfigurationError("need at least 2 grid points")
    if not b > a:
        raise ConfigurationError("degenerate interval")
    return np.linspace(a, b, n)


@dataclass
class CollocationGrids:
    """Full training grid partitioned into interior / IC / BC subsets.

    ``points`` has one (x, t) row per grid node (x = 0 on 1-input problems);
    the index arrays partition its rows, which lets a single network forward
    pass feed every loss term.
    """

    points: Array
    interior_idx: Array
    ic_idx: Array
    bc_idx: Array
    xs_axis: Array | None
    ts_axis: Array

    @property
    def interior(self) -> Array:
        return self.points[self.interior_idx]

    @property
    def ic(self) -> Array:
        return self.points[self.ic_idx]

    @property
    def bc(self) -> Array:
        return self.points[self.bc_idx]


def grids_1d(n: int, t_interval) -> CollocationGrids:
    """1-input grid: the t = start point carries the IC, the rest the residual."""
    ts = make_grid_1d(n, t_interval)
    points = np.column_stack([np.zeros(n), ts])
    idx = np.arange(n)
    ic_mask = ts == ts[0]
    return CollocationGrids(
        points=points,
        interior_idx=idx[~ic_mask],
        ic_idx=idx[ic_mask],
        bc_idx=np.array([], dtype=int),
        xs_axis=None,
        ts_axis=ts,
    )


def make_grid_2d(nx: int, nt: int, x_interval, t_interval) -> CollocationGrids:
    """nx-by-nt space-time grid split into interior, IC and BC subsets.

    IC = points with t at the start (without the two corners), BC = points
    on either rod end. Corners satisfy both conditions with the same value,
    so assigning them to the BC set only avoids double counting.
    """
    xs = make_grid_1d(nx, x_interval)
    ts = make_grid_1d(nt, t_interval)
    xx, tt = np.meshgrid(xs, ts, indexing="ij")
    points = np.column_stack([xx.ravel(), tt.ravel()])
    on_bc = (points[:, 0] == xs[0]) | (points[:, 0] == xs[-1])
    on_ic = (points[:, 1] == ts[0]) & ~on_bc
    idx = np.arange(points.shape[0])
    return CollocationGrids(
        points=points,
        interior_idx=idx[~on_bc & ~on_ic],
        ic_idx=idx[on_ic],
        bc_idx=idx[on_bc],
        xs_axis=xs,
        ts_axis=ts,
    )


def validation_points(grids: CollocationGrids) -> Array:
    """Midpoints between adjacent training points, per axis.

    These never coincide with training nodes, so residuals there probe how
    the model behaves between the points it was fitted on.
    """
    ts = grids.ts_axis
    if ts.size < 2:
        raise ConfigurationError("need at least 2 points per axis")
    t_mid = 0.5 * (ts[:-1] + ts[1:])
    if grids.xs_axis is None:
        return np.column_stack([np.zeros(t_mid.size), t_mid])
    xs = grids.xs_axis
    if xs.size < 2:
        raise ConfigurationError("need at least 2 points per axis")
    x_mid = 0.5 * (xs[:-1] + xs[1:])
    xm, tm = np.meshgrid(x_mid, t_mid, indexing="ij")
    return np.column_stack([xm.ravel(), tm.ravel()])


# ---------------------------------------------------------------------------
# problems
# ---------------------------------------------------------------------------

@dataclass
class PDEProblem:
    name: str
    input_dim: int
    params: object
    grids: CollocationGrids
    t_interval: tuple[float, float]
    x_interval: tuple[float, float] | None = None

    def residual_terms(self, jets: Jets, xs, ts):
        raise NotImplementedError

    def exact(self, xs, ts) -> Array:
        raise NotImplementedError

    def g0(self, xs) -> Array:
        """Initial values at t = start."""
        raise NotImplementedError

    def g_boundary(self, xs, ts) -> Array:
        raise NotImplementedError


class LogisticProblem(PDEProblem):
    def residual_terms(self, jets, xs, ts):
        p = self.params
        u = jets.v
        return jets.dt - p.growth_rate * (u - u * u * (1.0 / p.carrying_capacity))

    def exact(self, xs, ts):
        return exact_logistic(ts, self.params.growth_rate)

    def g0(self, xs):
        return np.full(np.shape(xs), self.params.u0)

    def g_boundary(self, xs, ts):
        raise ConfigurationError("the logistic problem has no boundary condition")


class HeatProblem(PDEProblem):
    def residual_terms(self, jets, xs, ts):
        return jets.dt - self.params.diffusivity * jets.dxx

    def exact(self, xs, ts):
        return exact_heat(xs, ts, self.params.length, self.params.diffusivity)

    def g0(self, xs):
        return np.sin(np.pi * np.asarray(xs, dtype=np.float64) / self.params.length)

    def g_boundary(self, xs, ts):
        return np.zeros(np.shape(xs))


def logistic_problem(params: LogisticParams | None = None, n_points: int = 20) -> LogisticProblem:
    params = params or LogisticParams()
    interval = (0.0, params.horizon)
    return LogisticProblem(
        name="logistic",
        input_dim=1,
        params=params,
        grids=grids_1d(n_points, interval),
        t_interval=interval,
    )


def heat_problem(params: HeatParams | None = None, nx: int = 20, nt: int = 20) -> HeatProblem:
    params = params or HeatParams()
    x_interval = (0.0, params.length)
    t_interval = (0.0, params.horizon)
    return HeatProblem(
        name="heat",
        input_dim=2,
        params=params,
        grids=make_grid_2d(nx, nt, x_interval, t_interval),
        t_interval=t_interval,
        x_interval=x_interval,
    )


def residual(problem: PDEProblem, jet, x: float, t: float) -> float:
    """PDE residual for a single jet at a point."""
    value = problem.residual_terms(jet, np.asarray(x), np.asarray(t))
    return float(value)


# ---------------------------------------------------------------------------
# datasets
# ---------------------------------------------------------------------------

@dataclass
class Dataset:
    points: Array          # (n, 2) rows of (x, t)
    labels: Array          # (n,)
    noise: Array           # realized label - exact, kept for test oracles
    sigma: float
    seed: int

    def __len__(self) -> int:
        return self.points.shape[0]


def make_dataset(problem: PDEProblem, points: Array, sigma: float, seed: int) -> Dataset:
    """Labels from the analytic solution plus seeded Gaussian noise."""
    if sigma < 0:
        raise ConfigurationError("noise standard deviation must be non-negative")
    points = np.asarray(points, dtype=np.float64)
    exact = problem.exact(points[:, 0], points[:, 1])
    rng = np.random.default_rng(seed)
    labels = exact + sigma * rng.standard_normal(points.shape[0])
    return Dataset(points, labels, labels - exact, float(sigma), int(seed))


def save_dataset_csv(dataset: Dataset, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "t", "label", "noise_draw"])
        for (x, t), label, noise in zip(dataset.points, dataset.labels, dataset.noise):
            writer.writerow([repr(float(x)), repr(float(t)),
                             repr(float(label)), repr(float(noise))])


def load_dataset_csv(path, sigma: float = float("nan"), seed: int = -1) -> Dataset:
    xs, ts, labels, noise = [], [], [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        for row in reader:
            xs.append(float(row[0]))
            ts.append(float(row[1]))
            labels.append(float(row[2]))
            noise.append(float(row[3]))
    return Dataset(np.column_stack([xs, ts]), np.array(labels),
                   np.array(noise), sigma, seed)


# ---------------------------------------------------------------------------
# loss assembly (shared by plain and taped evaluation)
# ---------------------------------------------------------------------------

def _squared_mean(x):
    return (x * x).mean()


def pde_loss_from_jets(problem: PDEProblem, jets: Jets, xs, ts):
    r = problem.residual_terms(jets, xs, ts)
    return _squared_mean(r)


def mismatch_loss(values, targets):
    return _squared_mean(values - targets)


def assemble_physics(problem: PDEProblem, jets: Jets, grids: CollocationGrids,
                     weights: LossWeights):
    """Weighted residual + IC + BC loss from one full-grid jet batch."""
    pts = grids.points
    terms = weights.pde * pde_loss_from_jets(
        problem, jets.take(grids.interior_idx),
        pts[grids.interior_idx, 0], pts[grids.interior_idx, 1])
    if grids.ic_idx.size:
        ic_targets = problem.g0(pts[grids.ic_idx, 0])
        terms = terms + weights.ic * mismatch_loss(jets.take(grids.ic_idx).v, ic_targets)
    if grids.bc_idx.size:
        bc_targets = problem.g_boundary(pts[grids.bc_idx, 0], pts[grids.bc_idx, 1])
        terms = terms + weights.bc * mismatch_loss(jets.take(grids.bc_idx).v, bc_targets)
    return terms


# ---------------------------------------------------------------------------
# public value-path losses
# ---------------------------------------------------------------------------

def _forward_at(net: MLP, points: Array) -> Jets:
    points = np.asarray(points, dtype=np.float64)
    return autodiff.forward_jet_batch(net, points[:, 0], points[:, 1])


def pde_loss(net: MLP, problem: PDEProblem, points: Array) -> float:
    """Mean squared residual over the given collocation points."""
    points = np.asarray(points, dtype=np.float64)
    if points.size == 0:
        raise ConfigurationError("pde_loss needs a non-empty point set")
    jets = _forward_at(net, points)
    return float(pde_loss_from_jets(problem, jets, points[:, 0], points[:, 1]))


def ic_loss(net: MLP, problem: PDEProblem, points: Array) -> float:
    points = np.asarray(points, dtype=np.float64)
    if points.size == 0:
        warnings.warn("empty initial-condition point set; loss is 0", RuntimeWarning)
        return 0.0
    values = _forward_at(net, points).v
    return float(mismatch_loss(values, problem.g0(points[:, 0])))


def bc_loss(net: MLP, problem: PDEProblem, points: Array) -> float:
    points = np.asarray(points, dtype=np.float64)
    if points.size == 0:
        warnings.warn("empty boundary point set; loss is 0", RuntimeWarning)
        return 0.0
    values = _forward_at(net, points).v
    return float(mismatch_loss(values, problem.g_boundary(points[:, 0], points[:, 1])))


def physics_loss(net: MLP, problem: PDEProblem,
                 grids: CollocationGrids | None = None,
                 weights: LossWeights | None = None) -> float:
    grids = grids if grids is not None else problem.grids
    weights = weights or LossWeights()
    jets = _forward_at(net, grids.points)
    return float(assemble_physics(problem, jets, grids, weights))


def data_loss(net: MLP, dataset: Dataset) -> float:
    if len(dataset) == 0:
        raise ConfigurationError("data_loss needs a non-empty dataset")
    values = _forward_at(net, dataset.points).v
    return float(mismatch_loss(values, dataset.labels))


def total_loss(net: MLP, problem: PDEProblem, dataset: Dataset, alpha: float,
               weights: LossWeights | None = None) -> float:
    """alpha * data loss + (1 - alpha) * physics loss."""
    if not 0.0 <= alpha <= 1.0:
        raise ConfigurationError("alpha must lie in [0, 1]")
    return alpha * data_loss(net, dataset) + (1.0 - alpha) * physics_loss(
        net, problem, weights=weights)


def l2_error(net: MLP, problem: PDEProblem, points: Array) -> float:
    """Root-mean-square error against the analytic solution."""
    points = np.asarray(points, dtype=np.float64)
    values = _forward_at(net, points).v
    exact = problem.exact(points[:, 0], points[:, 1])
    return float(np.sqrt(np.mean((values - exact) ** 2)))
