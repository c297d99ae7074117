"""Full-batch momentum gradient descent with periodic validation."""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import CheckpointError, NumericError, ParameterError
from .model import EdgeSet, Params, Window, evaluate_params, loss_and_grad

log = logging.getLogger(__name__)

CHECKPOINT_FORMAT = "tensorgcn-checkpoint"
CHECKPOINT_VERSION = 1


@dataclass
class TrainState:
    params: Params
    velocity: Params
    iteration: int = 0
    seed: int = 0

    def __post_init__(self):
        for p, v in zip(self.params.arrays(), self.velocity.arrays()):
            if p.shape != v.shape:
                raise ParameterError("momentum buffer shapes must mirror parameter shapes")


@dataclass
class TrainResult:
    best_params: Params
    best_iteration: int
    best_val: float
    history: list  # (iteration, train_loss, val_metric) per evaluation
    losses: np.ndarray  # loss at every iteration, before the update
    state: TrainState = field(repr=False)


def train(params: Params, train_window: Window, train_edges: EdgeSet,
          val_window: Window, val_edges: EdgeSet, alpha, *,
          lr=0.01, momentum=0.9, iterations=10_000, eval_interval=100,
          metric="f1_negative", activation="relu", reduction="mean", seed=0) -> TrainResult:
    """Classical momentum: ``v <- mu v - lr grad; p <- p + v``.

    The validation metric is computed every ``eval_interval`` iterations and
    the parameters with the highest score are returned (earliest on ties).
    Raises :class:`NumericError` if the loss stops being finite.
    """
    if iterations < 0 or eval_interval < 1:
        raise ParameterError("iterations must be >= 0 and eval_interval >= 1")
    state = TrainState(params.copy(), params.zeros_like(), 0, seed)
    best = (-np.inf, 0, params.copy())
    history = []
    losses = np.empty(iterations)
    for it in range(1, iterations + 1):
        try:
            loss, grads = loss_and_grad(state.params, train_window, train_edges, alpha,
                                        activation, reduction)
        except NumericError as exc:
            raise NumericError(f"training diverged at iteration {it}: {exc}") from exc
        losses[it - 1] = loss
        for p, v, g in zip(state.params.arrays(), state.velocity.arrays(), grads.arrays()):
            v *= momentum
            v -= lr * g
            p += v
        state.iteration = it
        if not all(np.all(np.isfinite(p)) for p in state.params.arrays()):
            raise NumericError(f"training diverged at iteration {it}: non-finite parameters")
        if it % eval_interval == 0:
            val = evaluate_params(state.params, val_window, val_edges, metric, activation)
            history.append((it, loss, val))
            log.debug("iter %d loss %.6f val %.4f", it, loss, val)
            if val > best[0]:
                best = (val, it, state.params.copy())
    if best[1] == 0 and iterations:
        # no evaluation happened: fall back to the final parameters
        val = evaluate_params(state.params, val_window, val_edges, metric, activation)
        best = (val, state.iteration, state.params.copy())
    return TrainResult(best[2], best[1], float(best[0]), history, losses, state)


def write_history(path, history):
    with open(path, "w") as fh:
        fh.write("iteration,train_loss,val_metric\n")
        for it, loss, val in history:
            fh.write(f"{it},{loss!r},{val!r}\n")


def save_checkpoint(path, state: TrainState, extra=None):
    """JSON checkpoint: parameters, momentum buffers, iteration and seed.

    Floats are written with ``repr`` precision, so a reload is bit-exact.
    """
    doc = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "iteration": state.iteration,
        "seed": state.seed,
        "params": [a.tolist() for a in state.params.arrays()],
        "velocity": [a.tolist() for a in state.velocity.arrays()],
    }
    if extra:
        doc["extra"] = extra
    Path(path).write_text(json.dumps(doc))


def load_checkpoint(path):
    """Return ``(TrainState, extra)``; raises :class:`CheckpointError` on bad files."""
    try:
        doc = json.loads(Path(path).read_text())
        if doc.get("format") != CHECKPOINT_FORMAT:
            raise CheckpointError(f"{path}: not a checkpoint file")
        if doc.get("version") != CHECKPOINT_VERSION:
            raise CheckpointError(f"{path}: unsupported checkpoint version {doc.get('version')}")
        params = Params.from_arrays(doc["params"])
        velocity = Params.from_arrays(doc["velocity"])
        params.check()
        state = TrainState(params, velocity, int(doc["iteration"]), int(doc["seed"]))
    except CheckpointError:
        raise
    except (OSError, ValueError, KeyError, TypeError, IndexError, ParameterError) as exc:
        raise CheckpointError(f"cannot load checkpoint {path}: {exc}") from exc
    return state, doc.get("extra", {})
