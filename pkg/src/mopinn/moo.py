"""Multiobjective core: dominance, scalarization sweeps and common descent.

Two ways of walking the trade-off curve between the data loss and the
physics loss are provided. The weighted-sum route minimizes
``alpha * L_data + (1 - alpha) * L_physics`` for a family of weights; the
common-descent route (multiple-gradient descent) computes, at every step,
the minimum-norm convex combination of the two gradients and hands its
negation to Adam, converging to criticality without any weight parameter.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from . import autodiff, network, pinn_problems, train
from .errors import ConfigurationError, ContractViolationError, RunFailedError
from .pinn_problems import Dataset, LossWeights, PDEProblem
from .train import History, HistoryEntry, TrainConfig

Array = np.ndarray


# ---------------------------------------------------------------------------
# dominance
# ---------------------------------------------------------------------------

def dominates(a, b) -> bool:
    """True iff a is no worse everywhere and strictly better somewhere."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ContractViolationError("objective vectors differ in length")
    return bool(np.all(a <= b) and np.any(a < b))


def _objective_array(points) -> Array:
    rows = [p.objectives if hasattr(p, "objectives") else np.asarray(p, dtype=np.float64)
            for p in points]
    return np.asarray(rows, dtype=np.float64)


def nondominated_mask(values: Array) -> Array:
    """Boolean mask of points not dominated by any other point.

    For two objectives, a lexicographic sweep: walk groups of equal first
    objective in increasing order, tracking the best second objective seen
    in strictly earlier groups. Duplicates survive together.
    """
    values = np.asarray(values, dtype=np.float64)
    n = values.shape[0]
    keep = np.ones(n, dtype=bool)
    if n <= 1:
        return keep
    if values.shape[1] != 2:
        for i in range(n):
            others = np.delete(values, i, axis=0)
            if np.any(np.all(others <= values[i], axis=1)
                      & np.any(others < values[i], axis=1)):
                keep[i] = False
        return keep
    order = np.lexsort((values[:, 1], values[:, 0]))
    best_second = np.inf
    i = 0
    while i < n:
        j = i
        first = values[order[i], 0]
        while j < n and values[order[j], 0] == first:
            j += 1
        group = order[i:j]
        group_min = values[group, 1].min()
        for k in group:
            second = values[k, 1]
            if best_second <= second or second > group_min:
                keep[k] = False
        best_second = min(best_second, group_min)
        i = j
    return keep


def nondominated_filter(points):
    """Subset of points dominated by no other; order and duplicates preserved."""
    points = list(points)
    if not points:
        return []
    mask = nondominated_mask(_objective_array(points))
    return [p for p, k in zip(points, mask) if k]


# ---------------------------------------------------------------------------
# weight grids and simplex machinery
# ---------------------------------------------------------------------------

def ws_alpha_grid(n: int, base: float = 80.0) -> Array:
    """Geometrically spaced weights in [0, 1), clustered near zero.

    alpha_j = (base**(j/n) - 1) / (base - 1) for j = 0..n-1.
    """
    if n < 2:
        raise ConfigurationError("need at least 2 weights")
    if base <= 1.0:
        raise ConfigurationError("base must exceed 1")
    j = np.arange(n)
    return (base ** (j / n) - 1.0) / (base - 1.0)


@dataclass(frozen=True)
class SimplexWeights:
    values: Array

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", vals)
        if np.any(vals < 0.0) or abs(float(vals.sum()) - 1.0) > 1e-12:
            raise ContractViolationError("weights must be non-negative and sum to 1")

    def __iter__(self):
        return iter(self.values)

    def __getitem__(self, i):
        return self.values[i]


def _min_norm_two(g1: Array, g2: Array) -> Array:
    """Closed-form simplex weights minimizing ||w g1 + (1-w) g2||."""
    diff = g1 - g2
    denom = float(diff @ diff)
    if denom == 0.0:
        w = 0.5
    else:
        w = float(np.clip((g2 - g1) @ g2 / denom, 0.0, 1.0))
    return np.array([w, 1.0 - w])


def _min_norm_frank_wolfe(grads: Array, tol: float = 1e-10,
                          max_iter: int = 10_000) -> Array:
    """Frank-Wolfe on the simplex for the min-norm convex combination."""
    m = grads.shape[0]
    gram = grads @ grads.T
    gamma = np.full(m, 1.0 / m)
    for _ in range(max_iter):
        q = gram @ gamma
        i_star = int(np.argmin(q))
        current = float(gamma @ q)
        if current - q[i_star] <= tol:
            break
        gg = gram[i_star, i_star]
        denom = current - 2.0 * q[i_star] + gg
        step = 1.0 if denom <= 0.0 else float(
            np.clip((current - q[i_star]) / denom, 0.0, 1.0))
        gamma *= 1.0 - step
        gamma[i_star] += step
    return gamma


def _prepare_gradients(gradients) -> Array:
    grads = [np.asarray(g, dtype=np.float64).ravel() for g in gradients]
    if not grads:
        raise ContractViolationError("no gradients given")
    length = grads[0].size
    if any(g.size != length for g in grads):
        raise ContractViolationError("gradients differ in length")
    return np.vstack(grads)


def mgda_direction(gradients, normalize: bool) -> tuple[Array, SimplexWeights]:
    """Common descent direction: negated min-norm convex gradient combination.

    With ``normalize`` each gradient is scaled to unit length first (zero
    gradients stay zero), which evens out objective magnitudes and spreads
    multi-start solutions more uniformly along the front.
    """
    grads = _prepare_gradients(gradients)
    if grads.shape[0] < 2:
        raise ContractViolationError("need at least two gradients")
    if normalize:
        norms = np.linalg.norm(grads, axis=1, keepdims=True)
        grads = grads / np.where(norms == 0.0, 1.0, norms)
    if grads.shape[0] == 2:
        gamma = _min_norm_two(grads[0], grads[1])
    else:
        gamma = _min_norm_frank_wolfe(grads)
    direction = -(gamma @ grads)
    return direction, SimplexWeights(gamma)


def pareto_critical_measure(gradients) -> float:
    """Norm of the min-norm convex combination of unnormalized gradients.

    Zero exactly when some convex combination of the gradients vanishes,
    i.e. when the point is Pareto critical.
    """
    grads = _prepare_gradients(gradients)
    if grads.shape[0] == 1:
        return float(np.linalg.norm(grads[0]))
    if grads.shape[0] == 2:
        gamma = _min_norm_two(grads[0], grads[1])
    else:
        gamma = _min_norm_frank_wolfe(grads)
    return float(np.linalg.norm(gamma @ grads))


# ---------------------------------------------------------------------------
# objective adapters
# ---------------------------------------------------------------------------

@dataclass
class ObjectivePoint:
    loss_data: float
    loss_physics: float
    method: str
    alpha: float | None
    seed: int | None
    epoch: int
    params: Array
    critical_measure: float = math.nan

    def __post_init__(self):
        for value in (self.loss_data, self.loss_physics):
            if not np.isfinite(value) or value < 0.0:
                raise RunFailedError(f"invalid objective value {value}")

    @property
    def objectives(self) -> Array:
        return np.array([self.loss_data, self.loss_physics])


class PinnObjectives:
    """(data loss, physics loss) pair of a network on one problem/dataset.

    One taped forward pass over the full collocation grid feeds both losses;
    the dataset gets its own pass only when its points differ from the grid.
    """

    def __init__(self, problem: PDEProblem, dataset: Dataset, layer_sizes,
                 weights: LossWeights | None = None,
                 hidden_activation: str = "tanh"):
        self.problem = problem
        self.dataset = dataset
        self.layer_sizes = tuple(layer_sizes)
        self.weights = weights or LossWeights()
        self.hidden_activation = hidden_activation
        self.template = network.init(self.layer_sizes, seed=0,
                                     hidden_activation=hidden_activation)
        self.validation_pts = pinn_problems.validation_points(problem.grids)
        self._dataset_on_grid = np.array_equal(dataset.points, problem.grids.points)

    def init_theta(self, seed: int) -> Array:
        return network.flatten(network.init(self.layer_sizes, seed,
                                            self.hidden_activation))

    def _record(self, theta: Array):
        net = network.unflatten(self.template, theta)
        ev = autodiff.TapedEvaluation(net)
        grid = self.problem.grids
        jets = ev.forward_jets(grid.points[:, 0], grid.points[:, 1])
        l_physics = pinn_problems.assemble_physics(self.problem, jets, grid,
                                                   self.weights)
        if self._dataset_on_grid:
            values = jets.v
        else:
            values = ev.forward_jets(self.dataset.points[:, 0],
                                     self.dataset.points[:, 1]).v
        l_data = pinn_problems.mismatch_loss(values, self.dataset.labels)
        return ev, l_data, l_physics

    def losses(self, theta: Array) -> tuple[float, float]:
        net = network.unflatten(self.template, theta)
        l_data = pinn_problems.data_loss(net, self.dataset)
        l_physics = pinn_problems.physics_loss(net, self.problem,
                                               weights=self.weights)
        return l_data, l_physics

    def losses_and_grads(self, theta: Array):
        ev, l_data, l_physics = self._record(theta)
        g_data = ev.grad_params(l_data)
        g_physics = ev.grad_params(l_physics)
        return l_data.value, l_physics.value, g_data, g_physics

    def scalarized(self, theta: Array, alpha: float):
        """Single-backward evaluation of the weighted total loss."""
        ev, l_data, l_physics = self._record(theta)
        total = alpha * l_data + (1.0 - alpha) * l_physics
        return l_data.value, l_physics.value, ev.grad_params(total), total.value

    def validation_loss(self, theta: Array) -> float:
        net = network.unflatten(self.template, theta)
        return train.record_validation(net, self.problem, self.validation_pts)

    def critical_measure(self, theta: Array) -> float:
        return critical_measure_at(self, theta)


def critical_measure_at(objectives, theta: Array) -> float:
    """Criticality of a parameter vector under any two-objective adapter."""
    _, _, g1, g2 = objectives.losses_and_grads(theta)
    return pareto_critical_measure([g1, g2])


# ---------------------------------------------------------------------------
# descent drivers
# ---------------------------------------------------------------------------

def _descend(objectives, config: TrainConfig, seed: int, evaluate,
             method: str, alpha: float | None) -> tuple[History, ObjectivePoint]:
    """Shared Adam loop: evaluate -> step -> schedule, with history records.

    ``evaluate(theta)`` returns (loss_data, loss_physics, update_gradient,
    monitored_scalar). Records land every ``checkpoint_every`` epochs and at
    the final epoch; the reported model is chosen afterwards by the
    validation-threshold rule.
    """
    theta = objectives.init_theta(seed)
    state = train.AdamState.zeros(theta.size)
    scheduler = train.PlateauScheduler(config.learning_rate, config.scheduler)
    history = History()
    for epoch in range(1, config.epochs + 1):
        l_data, l_physics, gradient, monitored = evaluate(theta)
        if not (np.isfinite(l_data) and np.isfinite(l_physics)):
            raise RunFailedError(f"non-finite loss at epoch {epoch}")
        if epoch % config.checkpoint_every == 0 or epoch == config.epochs:
            history.append(HistoryEntry(
                epoch=epoch,
                loss_data=float(l_data),
                loss_physics=float(l_physics),
                loss_validation=float(objectives.validation_loss(theta)),
                lr=scheduler.lr,
                params=theta.copy(),
            ))
        if epoch < config.epochs:
            theta = train.adam_step(state, theta, gradient, scheduler.lr,
                                    config.beta1, config.beta2, config.epsilon)
            scheduler.step(float(monitored))
    entry = train.select_checkpoint_threshold(history, config.stop_threshold)
    point = ObjectivePoint(
        loss_data=entry.loss_data,
        loss_physics=entry.loss_physics,
        method=method,
        alpha=alpha,
        seed=seed,
        epoch=entry.epoch,
        params=entry.params,
    )
    return history, point


def minimize_weighted(objectives, alpha: float, seed: int,
                      config: TrainConfig) -> tuple[History, ObjectivePoint]:
    if not 0.0 <= alpha <= 1.0:
        raise ConfigurationError("alpha must lie in [0, 1]")

    if hasattr(objectives, "scalarized"):
        def evaluate(theta):
            return objectives.scalarized(theta, alpha)
    else:
        def evaluate(theta):
            l1, l2, g1, g2 = objectives.losses_and_grads(theta)
            return l1, l2, alpha * g1 + (1.0 - alpha) * g2, \
                alpha * l1 + (1.0 - alpha) * l2

    return _descend(objectives, config, seed, evaluate, "ws", alpha)


def minimize_mgda(objectives, seed: int, config: TrainConfig,
                  normalize: bool = True) -> tuple[History, ObjectivePoint]:
    """Common-descent training; the monitored scalar is the plain loss sum."""
    def evaluate(theta):
        l1, l2, g1, g2 = objectives.losses_and_grads(theta)
        direction, _ = mgda_direction([g1, g2], normalize=normalize)
        return l1, l2, -direction, l1 + l2

    return _descend(objectives, config, seed, evaluate, "mgda", None)


def weighted_sum_train(problem: PDEProblem, dataset: Dataset, alpha: float,
                       seed: int, config: TrainConfig, layer_sizes,
                       weights: LossWeights | None = None
                       ) -> tuple[History, ObjectivePoint]:
    objectives = PinnObjectives(problem, dataset, layer_sizes, weights)
    return minimize_weighted(objectives, alpha, seed, config)


def mgda_train(problem: PDEProblem, dataset: Dataset, seed: int,
               config: TrainConfig, layer_sizes, normalize: bool = True,
               weights: LossWeights | None = None
               ) -> tuple[History, ObjectivePoint]:
    objectives = PinnObjectives(problem, dataset, layer_sizes, weights)
    return minimize_mgda(objectives, seed, config, normalize=normalize)


# ---------------------------------------------------------------------------
# front export
# ---------------------------------------------------------------------------

def save_front_csv(path, points) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "alpha_or_seed", "epoch",
                         "loss_data", "loss_physics", "critical_measure"])
        for p in points:
            key = p.alpha if p.alpha is not None else p.seed
            writer.writerow([p.method, repr(float(key)), p.epoch,
                             repr(p.loss_data), repr(p.loss_physics),
                             repr(float(p.critical_measure))])
