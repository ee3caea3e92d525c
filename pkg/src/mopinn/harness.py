"""Experiment orchestration: sweeps, front post-processing, artifacts.

An experiment fixes (problem, architecture, grid, training budget) and runs
one method across its sweep dimension: a weight grid for weighted-sum runs,
random initializations for common-descent multi-starts, one seeded
population for the evolutionary baseline, repeated per noise level. The
post-processing removes dominated points, checks front convexity in linear
coordinates (and, separately reported, in log-log coordinates where the
shape is a display artifact), and writes CSV, SVG and text reports.
"""

from __future__ import annotations

import os
import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict

import numpy as np

from . import moo, nsga2, pinn_problems, svgplot
from .errors import ConfigurationError, MopinnError
from .moo import ObjectivePoint, PinnObjectives, nondominated_filter
from .nsga2 import NSGAConfig, hypervolume_2d
from .pinn_problems import Dataset, HeatParams, LogisticParams, PDEProblem
from .train import SchedulerConfig, TrainConfig

Array = np.ndarray

_MASK64 = (1 << 64) - 1


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def derive_seed(master_seed: int, label: str, index: int) -> int:
    """Stable per-run seed from (master seed, label, sweep index).

    32-bit so seeds stay exactly representable in CSV float columns.
    """
    h = _splitmix64(master_seed & _MASK64)
    for byte in label.encode():
        h = _splitmix64(h ^ byte)
    h = _splitmix64(h ^ (index & _MASK64))
    return h & 0xFFFFFFFF


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

@dataclass
class ExperimentConfig:
    problem: str = "logistic"                     # logistic | heat
    method: str = "ws"                            # ws | mgda | nsga2
    problem_params: dict = field(default_factory=dict)
    layer_sizes: tuple = (1, 9, 9, 9, 1)
    grid: dict = field(default_factory=dict)      # {"n": 20} or {"nx","nt"}
    noise_levels: tuple = (0.1,)
    method_settings: dict = field(default_factory=dict)
    train: TrainConfig = field(default_factory=TrainConfig)
    master_seed: int = 0
    workers: int = 1

    def validate(self) -> None:
        if self.problem not in ("logistic", "heat"):
            raise ConfigurationError(f"unknown problem {self.problem!r}")
        if self.method not in ("ws", "mgda", "nsga2"):
            raise ConfigurationError(f"unknown method {self.method!r}")
        if not self.noise_levels:
            raise ConfigurationError("noise level list must be non-empty")
        if any(s < 0 for s in self.noise_levels):
            raise ConfigurationError("noise levels must be non-negative")
        if len(self.layer_sizes) < 2:
            raise ConfigurationError("need at least two layers")
        expected_in = 1 if self.problem == "logistic" else 2
        if self.layer_sizes[0] != expected_in or self.layer_sizes[-1] != 1:
            raise ConfigurationError(
                f"layer sizes {self.layer_sizes} do not fit problem "
                f"{self.problem!r} (expect input {expected_in}, output 1)")
        if self.workers < 1:
            raise ConfigurationError("workers must be at least 1")
        build_problem(self)  # grid/param validation
        if self.method == "nsga2":
            self._nsga_config(0)

    def _nsga_config(self, seed: int) -> NSGAConfig:
        s = dict(self.method_settings)
        return NSGAConfig(
            population=int(s.get("population", 100)),
            generations=int(s.get("generations", 100)),
            crossover_prob=float(s.get("crossover_prob", 0.9)),
            sbx_eta=float(s.get("sbx_eta", 15.0)),
            mutation_prob=s.get("mutation_prob"),
            mutation_eta=float(s.get("mutation_eta", 20.0)),
            bound=float(s.get("bound", 5.0)),
            seed=seed,
        )


def train_config_from_dict(d: dict) -> TrainConfig:
    d = dict(d)
    sched = d.pop("scheduler", {})
    return TrainConfig(scheduler=SchedulerConfig(**sched), **d)


def config_from_dict(d: dict) -> ExperimentConfig:
    d = dict(d)
    if "train" in d:
        d["train"] = train_config_from_dict(d["train"])
    if "layer_sizes" in d:
        d["layer_sizes"] = tuple(d["layer_sizes"])
    if "noise_levels" in d:
        d["noise_levels"] = tuple(d["noise_levels"])
    try:
        config = ExperimentConfig(**d)
    except TypeError as exc:
        raise ConfigurationError(str(exc)) from None
    config.validate()
    return config


def config_to_dict(config: ExperimentConfig) -> dict:
    d = asdict(config)
    d["layer_sizes"] = list(config.layer_sizes)
    d["noise_levels"] = list(config.noise_levels)
    return d


def build_problem(config: ExperimentConfig) -> PDEProblem:
    if config.problem == "logistic":
        params = LogisticParams(**config.problem_params)
        n = int(config.grid.get("n", 20))
        return pinn_problems.logistic_problem(params, n_points=n)
    params = HeatParams(**config.problem_params)
    return pinn_problems.heat_problem(params, nx=int(config.grid.get("nx", 20)),
                                      nt=int(config.grid.get("nt", 20)))


def build_dataset(config: ExperimentConfig, problem: PDEProblem,
                  sigma: float, sigma_index: int) -> Dataset:
    seed = derive_seed(config.master_seed, "dataset", sigma_index)
    return pinn_problems.make_dataset(problem, problem.grids.points, sigma, seed)


# ---------------------------------------------------------------------------
# single runs (top-level so worker processes can import them)
# ---------------------------------------------------------------------------

@dataclass
class RunResult:
    method: str
    sigma: float
    key: float                      # alpha for ws, seed otherwise
    points: list                    # ObjectivePoint, one per reported model
    history_rows: list              # (epoch, l_data, l_phys, l_val, lr)
    generation_rows: list = field(default_factory=list)
    error: str | None = None


def execute_run(config_dict: dict, sigma_index: int, run_index: int) -> RunResult:
    """Run one sweep element; exceptions become a failure record."""
    config = config_from_dict(config_dict)
    sigma = config.noise_levels[sigma_index]
    problem = build_problem(config)
    dataset = build_dataset(config, problem, sigma, sigma_index)
    label = f"{config.method}/{sigma_index}"
    seed = derive_seed(config.master_seed, label, run_index)
    try:
        if config.method == "ws":
            alphas = moo.ws_alpha_grid(
                int(config.method_settings.get("alpha_count", 20)),
                float(config.method_settings.get("alpha_base", 80.0)))
            alpha = float(alphas[run_index])
            objectives = PinnObjectives(problem, dataset, config.layer_sizes)
            history, point = moo.minimize_weighted(objectives, alpha, seed,
                                                   config.train)
            point.critical_measure = objectives.critical_measure(point.params)
            rows = [(e.epoch, e.loss_data, e.loss_physics, e.loss_validation,
                     e.lr) for e in history.entries]
            return RunResult(config.method, sigma, alpha, [point], rows)
        if config.method == "mgda":
            normalize = bool(config.method_settings.get("normalize", True))
            objectives = PinnObjectives(problem, dataset, config.layer_sizes)
            history, point = moo.minimize_mgda(objectives, seed, config.train,
                                               normalize=normalize)
            point.critical_measure = objectives.critical_measure(point.params)
            rows = [(e.epoch, e.loss_data, e.loss_physics, e.loss_validation,
                     e.lr) for e in history.entries]
            return RunResult(config.method, sigma, float(seed), [point], rows)
        # nsga2: one seeded population covers the whole front
        result = nsga2.evolve(problem, dataset, config.layer_sizes,
                              config._nsga_config(seed))
        objectives = PinnObjectives(problem, dataset, config.layer_sizes)
        points = []
        for ind in result.front:
            point = ObjectivePoint(
                loss_data=ind.objectives[0], loss_physics=ind.objectives[1],
                method="nsga2", alpha=None, seed=seed,
                epoch=len(result.generation_fronts) - 1, params=ind.genome)
            point.critical_measure = objectives.critical_measure(ind.genome)
            points.append(point)
        gen_rows = [(g, front.copy()) for g, front in
                    enumerate(result.generation_fronts)]
        return RunResult(config.method, sigma, float(seed), points, [], gen_rows)
    except MopinnError as exc:
        return RunResult(config.method, sigma, float(run_index), [], [],
                         error=f"{type(exc).__name__}: {exc}")


def _sweep_size(config: ExperimentConfig) -> int:
    if config.method == "ws":
        return int(config.method_settings.get("alpha_count", 20))
    if config.method == "mgda":
        return int(config.method_settings.get("starts", 20))
    return 1


# ---------------------------------------------------------------------------
# convexity report
# ---------------------------------------------------------------------------

@dataclass
class HullCheck:
    on_hull: list[bool]
    max_rel_deviation: float
    dropped: int = 0


@dataclass
class ConvexityReport:
    n_points: int
    insufficient: bool
    linear: HullCheck | None = None
    loglog: HullCheck | None = None
    is_convex_linear: bool | None = None    # log-log carries no verdict

    def describe(self) -> str:
        if self.insufficient:
            return "insufficient points for a hull report"
        lin = self.linear
        verdict = "convex" if self.is_convex_linear else "non-convex"
        text = (f"linear scale: {sum(lin.on_hull)}/{self.n_points} points on the "
                f"lower hull, max off-hull deviation {lin.max_rel_deviation:.3%} "
                f"of range -> {verdict} (2% tolerance)")
        log = self.loglog
        if log is None:
            return text + "\nlog-log scale: no positive points to examine"
        return text + (
            f"\nlog-log scale (display transform, no convexity claim): "
            f"{sum(log.on_hull)}/{len(log.on_hull)} points on the lower hull, "
            f"max deviation {log.max_rel_deviation:.3%}"
            + (f", {log.dropped} non-positive point(s) dropped" if log.dropped else ""))


def _lower_hull_check(values: Array) -> HullCheck:
    """Lower convex hull membership plus the largest vertical gap above it."""
    n = values.shape[0]
    order = np.lexsort((values[:, 1], values[:, 0]))
    pts = values[order]
    hull: list[int] = []
    for i in range(n):
        while len(hull) >= 2:
            ox, oy = pts[hull[-2]]
            ax, ay = pts[hull[-1]]
            bx, by = pts[i]
            if (ax - ox) * (by - oy) - (ay - oy) * (bx - ox) < 0.0:
                hull.pop()
            else:
                break
        hull.append(i)
    on_hull_sorted = np.zeros(n, dtype=bool)
    on_hull_sorted[hull] = True
    hull_x = pts[hull, 0]
    hull_y = pts[hull, 1]
    y_range = float(pts[:, 1].max() - pts[:, 1].min())
    max_dev = 0.0
    if y_range > 0.0:
        interp = np.interp(pts[:, 0], hull_x, hull_y)
        max_dev = float(np.max(pts[:, 1] - interp) / y_range)
    on_hull = np.zeros(n, dtype=bool)
    on_hull[order] = on_hull_sorted
    return HullCheck(on_hull.tolist(), max_dev)


def convexity_report(points, hull_tolerance: float = 0.02) -> ConvexityReport:
    """Hull membership in linear coordinates plus a log-log re-examination.

    Convexity is only ever asserted in linear coordinates: a logarithmic
    re-plot is a non-linear transform that can flip apparent curvature, so
    its section reports geometry without a verdict.
    """
    values = moo._objective_array(points) if points else np.empty((0, 2))
    if values.shape[0] < 3:
        return ConvexityReport(values.shape[0], insufficient=True)
    linear = _lower_hull_check(values)
    positive = np.all(values > 0.0, axis=1)
    dropped = int((~positive).sum())
    loglog = None
    if int(positive.sum()) >= 3:
        loglog = _lower_hull_check(np.log10(values[positive]))
        loglog.dropped = dropped
    return ConvexityReport(
        n_points=values.shape[0],
        insufficient=False,
        linear=linear,
        loglog=loglog,
        is_convex_linear=linear.max_rel_deviation <= hull_tolerance,
    )


# ---------------------------------------------------------------------------
# experiment driver
# ---------------------------------------------------------------------------

@dataclass
class FrontReport:
    raw: list[tuple[float, ObjectivePoint]]
    filtered: list[tuple[float, ObjectivePoint]]
    dominated_count: dict[float, int]
    hulls: dict[float, ConvexityReport]
    failures: list[str]

    @property
    def all_failed(self) -> bool:
        return not self.raw and bool(self.failures)


def _collect_results(config: ExperimentConfig) -> list[RunResult]:
    config_dict = config_to_dict(config)
    tasks = [(sigma_index, run_index)
             for sigma_index in range(len(config.noise_levels))
             for run_index in range(_sweep_size(config))]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            futures = [pool.submit(execute_run, config_dict, si, ri)
                       for si, ri in tasks]
            return [f.result() for f in futures]
    return [execute_run(config_dict, si, ri) for si, ri in tasks]


def run_experiment(config: ExperimentConfig, out_dir) -> FrontReport:
    """Run the configured sweep and write all artifacts into out_dir."""
    config.validate()
    os.makedirs(out_dir, exist_ok=True)
    results = _collect_results(config)

    raw: list[tuple[float, ObjectivePoint]] = []
    failures: list[str] = []
    for result in results:
        if result.error is not None:
            failures.append(f"{result.method} sigma={result.sigma} "
                            f"key={result.key}: {result.error}")
            continue
        raw.extend((result.sigma, p) for p in result.points)

    filtered: list[tuple[float, ObjectivePoint]] = []
    dominated_count: dict[float, int] = {}
    hulls: dict[float, ConvexityReport] = {}
    for sigma in config.noise_levels:
        group = [p for s, p in raw if s == sigma]
        kept = nondominated_filter(group)
        dominated_count[sigma] = len(group) - len(kept)
        filtered.extend((sigma, p) for p in kept)
        hulls[sigma] = convexity_report(kept)

    report = FrontReport(raw, filtered, dominated_count, hulls, failures)
    _write_artifacts(config, report, results, out_dir)
    return report


def _write_artifacts(config: ExperimentConfig, report: FrontReport,
                     results: list[RunResult], out_dir) -> None:
    with open(os.path.join(out_dir, "runs.csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "alpha_or_seed", "sigma", "epoch",
                         "loss_data", "loss_physics", "loss_validation", "lr"])
        for result in results:
            for epoch, l_data, l_phys, l_val, lr in result.history_rows:
                writer.writerow([result.method, repr(result.key),
                                 repr(result.sigma), epoch, repr(l_data),
                                 repr(l_phys), repr(l_val), repr(lr)])

    moo.save_front_csv(os.path.join(out_dir, "front.csv"),
                       [p for _, p in report.filtered])

    if any(result.generation_rows for result in results):
        with open(os.path.join(out_dir, "nsga2_generations.csv"), "w",
                  newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["method", "alpha_or_seed", "epoch", "loss_data",
                             "loss_physics", "critical_measure"])
            for result in results:
                for generation, front in result.generation_rows:
                    for row in front:
                        writer.writerow(["nsga2", repr(result.key), generation,
                                         repr(float(row[0])), repr(float(row[1])),
                                         repr(math.nan)])

    marks = [(p.loss_data, p.loss_physics, f"sigma={s:g}")
             for s, p in report.filtered]
    style = svgplot.SvgStyle(
        title=f"{config.problem} / {config.method}: non-dominated points",
        xlabel="data loss", ylabel="physics loss")
    for scale, name in (("linear", "front_linear.svg"),
                        ("loglog", "front_loglog.svg")):
        with open(os.path.join(out_dir, name), "w") as fh:
            fh.write(svgplot.emit_svg(marks, scale, style))

    with open(os.path.join(out_dir, "report.txt"), "w") as fh:
        fh.write(f"experiment: problem={config.problem} method={config.method} "
                 f"master_seed={config.master_seed}\n")
        fh.write(f"runs: {len(results)} total, {len(report.failures)} failed\n")
        for sigma in config.noise_levels:
            group = [p for s, p in report.filtered if s == sigma]
            fh.write(f"\nsigma={sigma:g}: {len(group)} non-dominated points, "
                     f"{report.dominated_count[sigma]} dominated removed\n")
            fh.write(report.hulls[sigma].describe() + "\n")
            for p in group:
                key = p.alpha if p.alpha is not None else p.seed
                fh.write(f"  {p.method} key={key:g} epoch={p.epoch} "
                         f"data={p.loss_data:.6e} physics={p.loss_physics:.6e} "
                         f"critical={p.critical_measure:.3e}\n")
        if report.failures:
            fh.write("\nfailed runs:\n")
            for line in report.failures:
                fh.write(f"  {line}\n")


# ---------------------------------------------------------------------------
# method comparison
# ---------------------------------------------------------------------------

@dataclass
class ComparisonReport:
    fronts: dict[str, list[ObjectivePoint]]
    hypervolumes: dict[str, float]
    dominated_count: dict[str, int]
    reference: tuple[float, float]
    warnings: list[str]


def compare_methods(base: ExperimentConfig, method_settings: dict,
                    out_dir) -> ComparisonReport:
    """Run several methods on identical data and compare their fronts.

    All methods share the problem, grid, noise level and dataset seed; the
    hypervolume reference is the componentwise maximum over every raw point,
    scaled by 1.1.
    """
    if len(base.noise_levels) != 1:
        raise ConfigurationError("method comparison uses a single noise level")
    os.makedirs(out_dir, exist_ok=True)
    sigma = base.noise_levels[0]

    raw_by_method: dict[str, list[ObjectivePoint]] = {}
    failures: list[str] = []
    for method, settings in method_settings.items():
        if method not in ("ws", "mgda", "nsga2"):
            raise ConfigurationError(f"unknown method {method!r}")
        config = config_from_dict({**config_to_dict(base), "method": method,
                                   "method_settings": dict(settings)})
        sub_report = run_experiment(config, os.path.join(out_dir, method))
        raw_by_method[method] = [p for _, p in sub_report.raw]
        failures.extend(sub_report.failures)

    warnings_list = list(failures)
    all_points = [p for pts in raw_by_method.values() for p in pts]
    if not all_points:
        raise MopinnError("all comparison runs failed")
    objectives = np.array([[p.loss_data, p.loss_physics] for p in all_points])
    reference = tuple(objectives.max(axis=0) * 1.1)

    fronts: dict[str, list[ObjectivePoint]] = {}
    hypervolumes: dict[str, float] = {}
    dominated: dict[str, int] = {}
    for method, pts in raw_by_method.items():
        if not pts:
            warnings_list.append(f"{method}: no successful runs, omitted")
            continue
        front = nondominated_filter(pts)
        fronts[method] = front
        dominated[method] = len(pts) - len(front)
        hypervolumes[method] = hypervolume_2d(
            [p.objectives for p in front], reference)

    merged = [p for front in fronts.values() for p in front]
    moo.save_front_csv(os.path.join(out_dir, "front.csv"), merged)
    marks = [(p.loss_data, p.loss_physics, p.method) for p in merged]
    style = svgplot.SvgStyle(title=f"{base.problem}: method comparison "
                                   f"(sigma={sigma:g})",
                             xlabel="data loss", ylabel="physics loss")
    for scale, name in (("linear", "front_linear.svg"),
                        ("loglog", "front_loglog.svg")):
        with open(os.path.join(out_dir, name), "w") as fh:
            fh.write(svgplot.emit_svg(marks, scale, style))

    with open(os.path.join(out_dir, "report.txt"), "w") as fh:
        fh.write(f"comparison: problem={base.problem} sigma={sigma:g} "
                 f"reference={reference[0]:.6e},{reference[1]:.6e}\n")
        for method in fronts:
            fh.write(f"{method}: {len(fronts[method])} front points, "
                     f"{dominated[method]} dominated, "
                     f"hypervolume={hypervolumes[method]:.6e}\n")
        for line in warnings_list:
            fh.write(f"warning: {line}\n")

    return ComparisonReport(fronts, hypervolumes, dominated,
                            reference, warnings_list)
