"""Experiment configuration and its JSON file format.

A config file is a JSON object whose keys are the fields of
:class:`ExperimentConfig`; missing keys take the defaults below. Example::

    {"dataset": "bitcoin_otc", "data_path": "/data/snap", "symmetric": true,
     "alpha_grid": [0.8, 0.85, 0.9], "seed": 3}

``split`` is ``null`` (use the dataset's default) or ``[s_train, s_val, s_test]``.
``alpha_grid`` entries are either a minority-class weight ``a0`` (two-class
datasets, expanded to ``[a0, 1 - a0]``) or a full per-class weight list.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
import os
from dataclasses import dataclass
from pathlib import Path

from .data import SplitSpec, dataset_info
from .errors import ConfigError

DATA_ENV = "TENSORGCN_DATA"

DEFAULT_ALPHA_GRID = tuple(round(0.75 + 0.01 * k, 2) for k in range(21))
CHESS_ALPHA = ((1 / 3, 1 / 3, 1 / 3),)


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: str = "bitcoin_otc"
    data_path: str | None = None
    split: tuple | None = None
    bandwidth: int = 20
    edge_life: int = 10
    out_features: int = 6
    layers: int = 1
    symmetric: bool = False
    lr: float = 0.01
    momentum: float = 0.9
    iterations: int = 10_000
    eval_interval: int = 100
    alpha_grid: tuple | None = None
    seed: int = 0
    activation: str = "relu"
    reduction: str = "mean"
    log_features: bool = False
    window_days: float | None = None
    cache_dir: str | None = None

    def __post_init__(self):
        info = dataset_info(self.dataset)
        if self.split is not None:
            split = tuple(int(v) for v in self.split)
            if len(split) != 3:
                raise ConfigError("split must have three entries")
            object.__setattr__(self, "split", split)
        if self.alpha_grid is not None:
            grid = tuple(tuple(float(x) for x in a) if isinstance(a, (list, tuple)) else float(a)
                         for a in self.alpha_grid)
            object.__setattr__(self, "alpha_grid", grid)
        for name in ("bandwidth", "edge_life", "out_features", "layers", "eval_interval"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.iterations < 0 or self.lr < 0 or not 0 <= self.momentum < 1:
            raise ConfigError("need iterations >= 0, lr >= 0 and 0 <= momentum < 1")
        if self.reduction not in ("mean", "sum"):
            raise ConfigError(f"reduction must be 'mean' or 'sum', got {self.reduction!r}")
        self.alphas(info.num_classes)

    # -- derived values --

    @property
    def info(self):
        return dataset_info(self.dataset)

    @property
    def split_spec(self) -> SplitSpec:
        return SplitSpec(*(self.split or self.info.split))

    @property
    def metric(self) -> str:
        return self.info.metric

    @property
    def layer_sizes(self):
        return [self.out_features] * self.layers

    def resolved_data_path(self) -> Path:
        path = self.data_path or os.environ.get(DATA_ENV)
        if not path:
            raise ConfigError(f"no data path given; set data_path or ${DATA_ENV}")
        return Path(path)

    def alphas(self, num_classes=None):
        """Expand the grid into class-weight vectors (minority/negative class first)."""
        c = num_classes or self.info.num_classes
        grid = self.alpha_grid
        if grid is None:
            grid = DEFAULT_ALPHA_GRID if c == 2 else CHESS_ALPHA
        if len(grid) == 0:
            raise ConfigError("alpha grid is empty")
        out = []
        for a in grid:
            if isinstance(a, tuple):
                vec = a
            else:
                if c != 2:
                    raise ConfigError(f"scalar alpha {a} needs a two-class dataset; give {c} weights")
                vec = (a, 1.0 - a)
            if len(vec) != c:
                raise ConfigError(f"alpha {vec} has {len(vec)} entries for {c} classes")
            if any(not 0 < v < 1 for v in vec) or abs(sum(vec) - 1) > 1e-9:
                raise ConfigError(f"alpha {vec} must lie in (0, 1) and sum to 1")
            out.append(tuple(vec))
        return out

    # -- serialization --

    def to_dict(self):
        d = dataclasses.asdict(self)
        for key in ("split", "alpha_grid"):
            if d[key] is not None:
                d[key] = json.loads(json.dumps(d[key]))
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_json(cls, text):
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid config JSON: {exc}") from exc
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(d)

    @classmethod
    def load(cls, path):
        try:
            return cls.from_json(Path(path).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc

    def save(self, path):
        Path(path).write_text(self.to_json() + "\n")

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def model_hash(self) -> str:
        """Hash of every field that changes the data or the model's shapes."""
        keys = ("dataset", "split", "bandwidth", "edge_life", "out_features", "layers",
                "symmetric", "activation", "log_features", "window_days")
        d = self.to_dict()
        blob = json.dumps({k: d[k] for k in keys}, sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

