"""Sequential GED then QE training with epoch- and seed-level selection.

The GED objective is per-token cross entropy averaged within each sentence
and then over the batch. The QE objective is the mean sigmoid of the score
difference sigma(R(S-) - R(S+)) over ordered pairs; note the loss is the
sigmoid itself, not its log. Both come with exact analytic gradients, and
training is plain mini-batch gradient descent with a fixed learning rate.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import expit

from .encoder import (
    EncoderCheckpoint,
    EncoderConfig,
    backprop_tokens,
    content_hash,
    forward_states,
    new_checkpoint,
    softmax_rows,
    with_ged_head,
    with_qe_head,
)
from .errors import ModelError, TrainingError
from .gedlabel import Taxonomy


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 5
    learning_rate: float = 0.5
    batch_size: int = 8
    seed: int = 0
    eval_each_epoch: bool = True

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be at least 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be positive")


@dataclass
class Gradients:
    params: np.ndarray
    ged_weight: np.ndarray | None = None
    ged_bias: np.ndarray | None = None
    qe_weight: np.ndarray | None = None
    qe_bias: float = 0.0


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    train_loss: float
    dev_metric: float | None


@dataclass
class TrainResult:
    checkpoint: EncoderCheckpoint
    history: list[EpochStats]
    selected_epoch: int


@dataclass(frozen=True)
class SelectionProtocol:
    """Datasets driving checkpoint and seed selection."""

    qe_devtest: tuple
    ged_dev: tuple = ()
    qe_dev: tuple = ()
    n_seeds: int = 5
    seeds: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.n_seeds < 1:
            raise ValueError("n_seeds must be at least 1")

    def seed_list(self) -> tuple[int, ...]:
        if self.seeds is not None:
            return tuple(self.seeds)
        return tuple(range(self.n_seeds))


@dataclass
class SeedSelection:
    checkpoint: EncoderCheckpoint
    selected_seed: int
    scores: dict


# ---------------------------------------------------------------------------
# Losses
# ---------------------------------------------------------------------------

def ged_loss(ckpt: EncoderCheckpoint, batch) -> tuple[float, Gradients]:
    """Mean over sentences of per-sentence mean negative log-probability."""
    if ckpt.ged_head is None:
        raise ModelError("checkpoint has no GED head")
    weight, bias = ckpt.ged_head.weight, ckpt.ged_head.bias
    n_labels = weight.shape[1]
    sentences = [s for s in batch if len(s.tokens) > 0]
    if not sentences:
        raise ValueError("GED batch contains no non-empty sentences")
    for s in sentences:
        if any(not 0 <= lab < n_labels for lab in s.labels):
            raise ValueError(
                f"label index out of range for a {n_labels}-label head"
            )
    b = len(sentences)
    loss = 0.0
    grads = Gradients(
        params=np.zeros_like(ckpt.params),
        ged_weight=np.zeros_like(weight),
        ged_bias=np.zeros_like(bias),
    )
    for sent in sentences:
        state = forward_states(ckpt, sent)
        h = state.layers[-1]
        n = h.shape[0]
        probs = softmax_rows(h @ weight + bias)
        gold = np.asarray(sent.labels)
        picked = probs[np.arange(n), gold]
        loss += float(-np.log(picked).mean()) / b
        dz = probs.copy()
        dz[np.arange(n), gold] -= 1.0
        dz /= n * b
        grads.ged_weight += h.T @ dz
        grads.ged_bias += dz.sum(axis=0)
        backprop_tokens(ckpt, state, dz @ weight.T, None, grads.params)
    return loss, grads


def qe_loss(ckpt: EncoderCheckpoint, batch) -> tuple[float, Gradients]:
    """Mean sigmoid of R(S-) - R(S+) over a batch of ordered pairs."""
    if ckpt.qe_head is None:
        raise ModelError("checkpoint has no QE head")
    pairs = list(batch)
    if not pairs:
        raise ValueError("QE batch is empty")
    w = ckpt.qe_head.weight
    b_head = ckpt.qe_head.bias
    n = len(pairs)
    loss = 0.0
    grads = Gradients(
        params=np.zeros_like(ckpt.params),
        qe_weight=np.zeros_like(w),
        qe_bias=0.0,
    )
    for pair in pairs:
        state_p = forward_states(ckpt, pair.s_plus)
        state_m = forward_states(ckpt, pair.s_minus)
        r_plus = float(w @ state_p.pooled + b_head)
        r_minus = float(w @ state_m.pooled + b_head)
        sig = float(expit(r_minus - r_plus))
        loss += sig / n
        g = sig * (1.0 - sig) / n  # d(sigma)/d(delta)
        for state, d_r in ((state_m, g), (state_p, -g)):
            grads.qe_weight += d_r * state.pooled
            grads.qe_bias += d_r
            backprop_tokens(ckpt, state, None, d_r * w, grads.params)
    return loss, grads


def sgd_step(ckpt: EncoderCheckpoint, grads: Gradients, lr: float) -> None:
    ckpt.params -= lr * grads.params
    if grads.ged_weight is not None:
        ckpt.ged_head.weight -= lr * grads.ged_weight
        ckpt.ged_head.bias -= lr * grads.ged_bias
    if grads.qe_weight is not None:
        ckpt.qe_head.weight -= lr * grads.qe_weight
        ckpt.qe_head.bias = float(ckpt.qe_head.bias - lr * grads.qe_bias)


# ---------------------------------------------------------------------------
# Evaluation metrics used for checkpoint selection
# ---------------------------------------------------------------------------

def ged_dev_f05(ckpt: EncoderCheckpoint, dev, taxonomy: Taxonomy) -> float:
    """Micro-averaged F0.5 over non-CORRECT labels (argmax predictions)."""
    tp = fp = fn = 0
    weight, bias = ckpt.ged_head.weight, ckpt.ged_head.bias
    for sent in dev:
        if not sent.tokens:
            continue
        h = forward_states(ckpt, sent).layers[-1]
        pred = np.argmax(h @ weight + bias, axis=1)
        for p, g in zip(pred, sent.labels):
            if p != 0 and p == g:
                tp += 1
            elif p != 0 and p != g:
                fp += 1
            if g != 0 and p != g:
                fn += 1
    if tp + fp == 0 or tp + fn == 0:
        return 0.0
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    if precision == 0.0 and recall == 0.0:
        return 0.0
    return 1.25 * precision * recall / (0.25 * precision + recall)


def ged_token_accuracy(ckpt: EncoderCheckpoint, dev) -> float:
    correct = total = 0
    weight, bias = ckpt.ged_head.weight, ckpt.ged_head.bias
    for sent in dev:
        if not sent.tokens:
            continue
        h = forward_states(ckpt, sent).layers[-1]
        pred = np.argmax(h @ weight + bias, axis=1)
        correct += int(np.sum(pred == np.asarray(sent.labels)))
        total += len(sent.labels)
    return correct / total if total else 0.0


def ranking_accuracy(ckpt: EncoderCheckpoint, pairs) -> float:
    """Fraction of pairs scored strictly higher on the S+ side."""
    if ckpt.qe_head is None:
        raise ModelError("checkpoint has no QE head")
    pairs = list(pairs)
    if not pairs:
        raise ValueError("empty pair set")
    w, b = ckpt.qe_head.weight, ckpt.qe_head.bias
    hits = 0
    for pair in pairs:
        r_plus = float(w @ forward_states(ckpt, pair.s_plus).pooled + b)
        r_minus = float(w @ forward_states(ckpt, pair.s_minus).pooled + b)
        hits += r_plus > r_minus
    return hits / len(pairs)


# ---------------------------------------------------------------------------
# Trainers
# ---------------------------------------------------------------------------

def _batches(n: int, batch_size: int, order) -> list[list[int]]:
    return [list(order[i : i + batch_size]) for i in range(0, n, batch_size)]


def _run_epochs(ckpt, config, train_set, loss_fn, eval_fn):
    """Shared SGD loop; returns (best checkpoint, history, best epoch)."""
    rng = np.random.default_rng(config.seed)
    history: list[EpochStats] = []
    best_ckpt = None
    best_metric = -math.inf
    best_epoch = -1
    n = len(train_set)
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(n)
        losses = []
        for batch_no, idx in enumerate(_batches(n, config.batch_size, order)):
            batch = [train_set[i] for i in idx]
            loss, grads = loss_fn(ckpt, batch)
            if not math.isfinite(loss):
                raise TrainingError(
                    f"non-finite loss {loss} at epoch {epoch}, batch {batch_no}"
                )
            sgd_step(ckpt, grads, config.learning_rate)
            losses.append(loss)
        metric = eval_fn(ckpt) if config.eval_each_epoch else None
        history.append(EpochStats(epoch, float(np.mean(losses)), metric))
        if metric is not None and metric > best_metric:
            best_metric = metric
            best_ckpt = ckpt.clone()
            best_epoch = epoch
    if best_ckpt is None:  # eval disabled: keep the final epoch
        best_ckpt = ckpt.clone()
        best_epoch = config.epochs
    return best_ckpt, history, best_epoch


def train_ged(encoder_config: EncoderConfig, config: TrainConfig, taxonomy: Taxonomy,
              train_set, dev_set, dev_metric: str = "f05") -> TrainResult:
    """Train the GED token classifier and keep the best dev epoch.

    ``dev_metric`` selects the epoch score: "f05" (default, F0.5 over
    non-CORRECT labels) or "accuracy". Ties go to the earlier epoch.
    """
    train_set = list(train_set)
    dev_set = list(dev_set)
    if not train_set or not dev_set:
        raise ValueError("train and dev sets must be non-empty")
    ckpt = with_ged_head(new_checkpoint(encoder_config), taxonomy)
    if dev_metric == "f05":
        eval_fn = lambda c: ged_dev_f05(c, dev_set, taxonomy)
    elif dev_metric == "accuracy":
        eval_fn = lambda c: ged_token_accuracy(c, dev_set)
    else:
        raise ValueError(f"unknown dev metric {dev_metric!r}")
    best, history, best_epoch = _run_epochs(ckpt, config, train_set, ged_loss, eval_fn)
    best.provenance = {
        "stage": "ged",
        "taxonomy": taxonomy.name,
        "train_seed": config.seed,
        "selected_epoch": best_epoch,
    }
    return TrainResult(checkpoint=best, history=history, selected_epoch=best_epoch)


def train_qe(base_checkpoint: EncoderCheckpoint, config: TrainConfig,
             pair_train, pair_dev) -> TrainResult:
    """Fine-tune a checkpoint's encoder into a quality estimator.

    The encoder parameters start from ``base_checkpoint`` (its content
    hash is recorded as provenance) and the QE head starts at zero.
    Epoch selection maximizes dev ranking accuracy; ties go earlier.
    """
    pair_train = list(pair_train)
    pair_dev = list(pair_dev)
    if not pair_train or not pair_dev:
        raise ValueError("pair train and dev sets must be non-empty")
    base_hash = content_hash(base_checkpoint)
    ckpt = with_qe_head(base_checkpoint)
    best, history, best_epoch = _run_epochs(
        ckpt, config, pair_train, qe_loss, lambda c: ranking_accuracy(c, pair_dev)
    )
    best.provenance = {
        "stage": "qe",
        "initialized_from": base_hash,
        "train_seed": config.seed,
        "selected_epoch": best_epoch,
    }
    return TrainResult(checkpoint=best, history=history, selected_epoch=best_epoch)


def select_over_seeds(protocol: SelectionProtocol, run_fn) -> SeedSelection:
    """Run the full pipeline per seed and keep the best devtest seed.

    ``run_fn(seed)`` must return a QE checkpoint. The winner maximizes
    devtest ranking accuracy; ties go to the lowest seed value.
    """
    scores: dict[int, float] = {}
    checkpoints: dict[int, EncoderCheckpoint] = {}
    for seed in protocol.seed_list():
        ckpt = run_fn(seed)
        checkpoints[seed] = ckpt
        scores[seed] = ranking_accuracy(ckpt, protocol.qe_devtest)
    winner = max(sorted(scores), key=lambda s: scores[s])
    return SeedSelection(checkpoint=checkpoints[winner], selected_seed=winner,
                         scores=scores)


def write_training_log(history, path) -> None:
    """JSON-lines per epoch: {"epoch": ..., "train_loss": ..., "dev_metric": ...}."""
    with open(Path(path), "w", encoding="utf-8") as fp:
        for stats in history:
            fp.write(
                json.dumps(
                    {
                        "epoch": stats.epoch,
                        "train_loss": stats.train_loss,
                        "dev_metric": stats.dev_metric,
                    },
                    sort_keys=True,
                    separators=(",", ":"),
                )
            )
            fp.write("\n")
