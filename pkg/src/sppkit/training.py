"""Training loops for stacked GRU ensembles.

Each model in a stack minimizes its own per-sequence mean squared error;
gradients are averaged over the utterances of a batch before each Adam
step. Utterances are visited in manifest order every epoch, so a run is
a pure function of (data, config, seed).

Optional chunked backpropagation splits very long sequences: the hidden
state is carried across chunk boundaries but no gradient flows through
them, and chunk gradients are combined so the full-sequence mean loss is
what gets differentiated.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DivergedLossError, EmptyManifestError
from .gru import (
    AdamStackState,
    GruStack,
    HeadConfig,
    adam_init_stack,
    adam_step_stack,
    backward_stack,
    forward_stack,
    head_forward_and_grad,
)


@dataclass
class TrainingExample:
    inputs: np.ndarray  # (L, B, n)
    targets: np.ndarray  # (L, B, h)


@dataclass
class EpochRecord:
    epoch: int  # 1-based
    lr: float
    loss: float  # mean per-model sequence MSE over the epoch's utterances


def _chunk_bounds(length: int, chunk_frames: int | None):
    if chunk_frames is None or length <= chunk_frames:
        return [(0, length)]
    return [(a, min(a + chunk_frames, length)) for a in range(0, length, chunk_frames)]


def _example_grads(stack: GruStack, ex: TrainingExample, head: HeadConfig,
                   chunk_frames: int | None):
    """Per-model mean loss and its gradient for one utterance."""
    length = ex.inputs.shape[0]
    hidden = stack.h
    norm = 1.0 / (length * hidden)
    grads = stack.zeros_like()
    loss_sum = np.zeros(stack.models)
    h_carry = None
    for a, b in _chunk_bounds(length, chunk_frames):
        h_seq, cache = forward_stack(stack, ex.inputs[a:b], h_carry)
        est, d_est_dh = head_forward_and_grad(h_seq, head)
        diff = est - ex.targets[a:b]
        loss_sum += np.sum(diff * diff, axis=(0, 2))
        d_h = (2.0 * norm) * diff * d_est_dh
        g = backward_stack(stack, cache, d_h)
        for acc, part in zip(grads.arrays(), g.arrays()):
            acc += part
        h_carry = h_seq[-1].copy()
    return loss_sum * norm, grads


def fit_stack(
    stack: GruStack,
    examples: list[TrainingExample],
    head: HeadConfig,
    *,
    epochs: int,
    lr: float,
    weight_decay: float,
    lr_decay_epochs: list[int],
    lr_decay_factor: float,
    batch_utterances: int,
    chunk_frames: int | None = None,
    shuffle_seed: int | None = None,
) -> list[EpochRecord]:
    """Train a stack in place; returns one record per epoch.

    When shuffle_seed is set, utterance order is re-drawn per epoch from a
    generator seeded by (shuffle_seed, epoch); the order is therefore the
    same for every slice of the model axis and across reruns.
    """
    if not examples:
        raise EmptyManifestError("no training examples")
    state: AdamStackState = adam_init_stack(stack, weight_decay=weight_decay)
    history: list[EpochRecord] = []
    current_lr = lr
    decay_at = set(lr_decay_epochs)
    for epoch in range(1, epochs + 1):
        if epoch in decay_at:
            current_lr *= lr_decay_factor
        if shuffle_seed is None:
            order = range(len(examples))
        else:
            rng = np.random.default_rng(np.random.SeedSequence((shuffle_seed, epoch)))
            order = rng.permutation(len(examples))
        epoch_examples = [examples[i] for i in order]
        epoch_loss_sum = 0.0
        for start in range(0, len(epoch_examples), batch_utterances):
            batch = epoch_examples[start : start + batch_utterances]
            batch_grads = stack.zeros_like()
            for ex in batch:
                loss_per_model, grads = _example_grads(stack, ex, head, chunk_frames)
                epoch_loss_sum += float(loss_per_model.sum())
                for acc, part in zip(batch_grads.arrays(), grads.arrays()):
                    acc += part
            scale = 1.0 / len(batch)
            for acc in batch_grads.arrays():
                acc *= scale
            adam_step_stack(stack, batch_grads, state, current_lr)
        mean_loss = epoch_loss_sum / (len(examples) * stack.models)
        if not np.isfinite(mean_loss):
            raise DivergedLossError(f"loss became {mean_loss} at epoch {epoch}")
        history.append(EpochRecord(epoch=epoch, lr=current_lr, loss=mean_loss))
    return history


def _slice_stack(stack: GruStack, lo: int, hi: int) -> GruStack:
    return GruStack(
        w_input=stack.w_input[lo:hi],
        w_recurrent=stack.w_recurrent[lo:hi],
        bias_input=stack.bias_input[lo:hi],
        bias_recurrent=stack.bias_recurrent[lo:hi],
    )


def fit_stack_parallel(
    stack: GruStack,
    examples: list[TrainingExample],
    head: HeadConfig,
    *,
    workers: int = 1,
    **fit_kwargs,
) -> list[EpochRecord]:
    """Split the model axis over worker threads.

    Every model's arithmetic is independent of its neighbours, so results
    are bit-identical for any worker count; slices are written back by
    model index.
    """
    num_models = stack.models
    workers = max(1, min(workers, num_models))
    if workers == 1:
        return fit_stack(stack, examples, head, **fit_kwargs)

    bounds = np.linspace(0, num_models, workers + 1).astype(int)
    ranges = [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]

    def run(span):
        lo, hi = span
        sub = _slice_stack(stack, lo, hi).copy()
        sub_examples = [
            TrainingExample(inputs=ex.inputs[:, lo:hi], targets=ex.targets[:, lo:hi])
            for ex in examples
        ]
        hist = fit_stack(sub, sub_examples, head, **fit_kwargs)
        return span, sub, hist

    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(run, ranges))

    merged: list[EpochRecord] | None = None
    for (lo, hi), sub, hist in results:
        stack.w_input[lo:hi] = sub.w_input
        stack.w_recurrent[lo:hi] = sub.w_recurrent
        stack.bias_input[lo:hi] = sub.bias_input
        stack.bias_recurrent[lo:hi] = sub.bias_recurrent
        if merged is None:
            merged = [EpochRecord(r.epoch, r.lr, r.loss * (hi - lo)) for r in hist]
        else:
            for rec, r in zip(merged, hist):
                rec.loss += r.loss * (hi - lo)
    assert merged is not None
    for rec in merged:
        rec.loss /= num_models
    return merged
