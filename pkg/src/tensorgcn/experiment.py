"""Data-to-metric pipeline: prepare windows, train per alpha, select, test."""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

from .config import ExperimentConfig
from .data import (
    DynamicGraph,
    PreparedData,
    find_dataset,
    load_cached_graph,
    load_graph,
    make_windows,
    save_graph,
)
from .model import Params, evaluate_params, init_params
from .training import TrainResult, train

log = logging.getLogger(__name__)


def load_dynamic_graph(config: ExperimentConfig) -> DynamicGraph:
    """Parse the configured dataset, going through the on-disk cache if set."""
    path = find_dataset(config.dataset, config.resolved_data_path())
    if config.cache_dir:
        days = config.window_days or config.info.window_days
        cache = Path(config.cache_dir) / f"{config.dataset}_{days:g}d.npz"
        if cache.is_file():
            return load_cached_graph(cache)
        g = load_graph(config.dataset, path, config.window_days)
        cache.parent.mkdir(parents=True, exist_ok=True)
        save_graph(cache, g)
        return g
    return load_graph(config.dataset, path, config.window_days)


def prepare(config: ExperimentConfig, graph: DynamicGraph | None = None) -> PreparedData:
    g = graph if graph is not None else load_dynamic_graph(config)
    return make_windows(g, config.split_spec, config.bandwidth, config.edge_life,
                        config.symmetric, config.log_features)


def fit(config: ExperimentConfig, data: PreparedData, alpha) -> TrainResult:
    params = init_params(data.train.num_features, config.layer_sizes, data.num_classes, config.seed)
    return train(params, data.train, data.train_edges, data.val, data.val_edges, alpha,
                 lr=config.lr, momentum=config.momentum, iterations=config.iterations,
                 eval_interval=config.eval_interval, metric=config.metric,
                 activation=config.activation, reduction=config.reduction, seed=config.seed)


def score_test(config: ExperimentConfig, data: PreparedData, params: Params) -> float:
    return evaluate_params(params, data.test, data.test_edges, config.metric, config.activation)


@dataclass
class RunReport:
    config: ExperimentConfig
    rows: list = field(default_factory=list)  # (alpha, best_val, best_iteration)
    selected: int = 0
    test_metric: float = float("nan")
    wall_clock: float = 0.0
    result: TrainResult | None = field(default=None, repr=False)

    @property
    def selected_alpha(self):
        return self.rows[self.selected][0]

    def sweep_csv(self) -> str:
        lines = ["alpha,best_val,best_iteration"]
        for alpha, val, it in self.rows:
            lines.append(f"{' '.join(f'{a:.6g}' for a in alpha)},{val!r},{it}")
        return "\n".join(lines) + "\n"

    def to_text(self) -> str:
        c = self.config
        lines = [
            f"dataset: {c.dataset}  symmetric: {c.symmetric}  seed: {c.seed}",
            f"split: {c.split_spec.s_train}/{c.split_spec.s_val}/{c.split_spec.s_test}  "
            f"b={c.bandwidth} l={c.edge_life} F'={c.out_features} layers={c.layers}",
            f"lr={c.lr} momentum={c.momentum} iterations={c.iterations} metric={c.metric}",
            "",
            "alpha                best_val   best_iter",
        ]
        for k, (alpha, val, it) in enumerate(self.rows):
            mark = " *" if k == self.selected else ""
            lines.append(f"{' '.join(f'{a:.4f}' for a in alpha):20s} {val:9.4f}  {it:9d}{mark}")
        lines += ["", f"selected alpha: {self.selected_alpha}",
                  f"test {c.metric}: {self.test_metric!r}",
                  f"wall clock: {self.wall_clock:.1f} s"]
        return "\n".join(lines) + "\n"


def run(config: ExperimentConfig, data: PreparedData | None = None, alphas=None) -> RunReport:
    """Train once per alpha, keep the best validation model, score it on test.

    Ties in validation score go to the earliest alpha in grid order.
    """
    start = time.perf_counter()
    if data is None:
        data = prepare(config)
    alphas = alphas if alphas is not None else config.alphas(data.num_classes)
    report = RunReport(config)
    best = None
    for k, alpha in enumerate(alphas):
        res = fit(config, data, alpha)
        report.rows.append((tuple(alpha), res.best_val, res.best_iteration))
        log.info("alpha=%s best val %.4f at iteration %d", alpha, res.best_val, res.best_iteration)
        if best is None or res.best_val > best[1].best_val:
            best = (k, res)
    report.selected, report.result = best
    report.test_metric = score_test(config, data, best[1].best_params)
    report.wall_clock = time.perf_counter() - start
    return report
