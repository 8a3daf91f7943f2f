"""Mini-batch SGD training of the reference classifier.

Single-threaded with a fixed reduction order, so a (seed, hyperparameters)
pair maps to one exact weight trajectory. The loss is mean cross-entropy
over the batch, built on the tape from log-softmax so saturated samples
cannot underflow it.
"""

from __future__ import annotations

import time

import numpy as np

from . import engine
from .data import SyntheticSample, images_labels
from .model import Model, toy_cnn
from .rng import SplitMix64, derive

_STREAM_SHUFFLE = 3
_EVAL_CHUNK = 250


class TrainingDiverged(RuntimeError):
    def __init__(self, epoch: int):
        super().__init__(f"training loss became non-finite in epoch {epoch}")
        self.epoch = epoch


def batch_loss_grads(model: Model, images: np.ndarray, labels: np.ndarray):
    """Mean cross-entropy over a batch and its gradients per parameter."""
    fp = model.forward(images, input_grad=False)
    ls = engine.log_softmax(fp.tape, fp.logits_node)
    nll = engine.neg(fp.tape, engine.take_per_row(fp.tape, ls, labels))
    loss = engine.mean_all(fp.tape, nll)
    grads = fp.tape.backward(loss)
    return float(loss.value), {name: grads[node] for name, node in fp.param_nodes.items()}


def evaluate(model: Model, samples: list[SyntheticSample]) -> float:
    """Accuracy of argmax predictions (ties break toward the lowest index)."""
    images, labels = images_labels(samples)
    hits = 0
    for start in range(0, len(samples), _EVAL_CHUNK):
        logits = model.forward(images[start:start + _EVAL_CHUNK]).logits
        hits += int((logits.argmax(axis=1) == labels[start:start + _EVAL_CHUNK]).sum())
    return hits / len(samples)


def train(seed: int, epochs: int, lr: float, train_set: list[SyntheticSample],
          val_set: list[SyntheticSample], batch_size: int = 32) -> Model:
    """Train the reference classifier from a seeded init.

    Returns the model with `val_accuracy` and `train_seconds` recorded.
    Zero epochs returns the untouched initialization.
    """
    if lr <= 0:
        raise ValueError("learning rate must be positive")
    if not train_set or not val_set:
        raise ValueError("train and validation sets must be non-empty")
    started = time.perf_counter()
    model = toy_cnn(seed)
    params = model.param_arrays()
    images, labels = images_labels(train_set)
    order = np.arange(len(train_set))
    shuffler = SplitMix64(derive(seed, _STREAM_SHUFFLE))

    for epoch in range(epochs):
        shuffler.shuffle(order)
        for start in range(0, len(order), batch_size):
            take = order[start:start + batch_size]
            try:
                loss, grads = batch_loss_grads(model, images[take], labels[take])
            except FloatingPointError:
                raise TrainingDiverged(epoch) from None
            if not np.isfinite(loss):
                raise TrainingDiverged(epoch)
            for name, arr in params.items():
                arr -= lr * grads[name]

    model.val_accuracy = evaluate(model, val_set)
    model.train_seconds = time.perf_counter() - started
    return model
