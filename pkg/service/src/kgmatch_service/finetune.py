"""Cross-encoder fine-tuning: batch-size search, then a plain seeded loop.

The batch size is found by probing, not configured: starting at 4, one
forward+backward step is run on the batch of longest texts, and the size
doubles until the step no longer fits in memory (or one batch already
covers the whole training set).  The last size that fit is used for
training.  The probe is injectable so memory ceilings can be simulated.
"""

import logging
import random
from typing import Callable

import torch

from .runtime import encode_pair_batch
from .training_file import TrainingExample

log = logging.getLogger("kgmatch_service")

START_BATCH_SIZE = 4
LEARNING_RATE = 2e-5
WEIGHT_DECAY = 0.01

# Pinned and reported in every fine-tune response; the trainer has no
# hidden version-dependent defaults.
HYPERPARAMETERS = {
    "optimizer": "adamw",
    "learningRate": LEARNING_RATE,
    "weightDecay": WEIGHT_DECAY,
    "loss": "binary-cross-entropy-with-logits",
    "headShape": "single-logit-sigmoid",
    "shuffle": "seeded-per-epoch",
}


class InsufficientMemory(RuntimeError):
    """The probe step did not fit on the device."""


# A probe receives the nominal batch size and the batch itself (the
# longest-text examples, capped at the training-set size) and raises
# InsufficientMemory when that step would not fit.
MemoryProbe = Callable[[int, list[TrainingExample]], None]


def _looks_like_oom(exc: BaseException) -> bool:
    text = str(exc).lower()
    return any(phrase in text for phrase in (
        "out of memory", "can't allocate", "cannot allocate", "not enough memory",
    ))


def sort_longest_first(examples: list[TrainingExample], tokenizer) -> list[TrainingExample]:
    def token_length(example: TrainingExample) -> int:
        return (
            len(tokenizer.encode(example.text_a, add_special_tokens=False))
            + len(tokenizer.encode(example.text_b, add_special_tokens=False))
        )

    return sorted(examples, key=token_length, reverse=True)


def search_batch_size(longest_first: list[TrainingExample], probe: MemoryProbe,
                      start: int = START_BATCH_SIZE) -> int:
    """Double from `start` until the probe fails; last successful size wins.

    A failure at the starting size propagates to the caller.  The search
    stops once one batch covers the whole set: larger nominal sizes cannot
    use more memory, so doubling further would never terminate.
    """
    probe(start, longest_first[:start])
    chosen = start
    while chosen < len(longest_first):
        size = chosen * 2
        try:
            probe(size, longest_first[:size])
        except InsufficientMemory:
            log.info("batch size %d does not fit; keeping %d", size, chosen)
            break
        chosen = size
    return chosen


def _batch_inputs(batch: list[TrainingExample], tokenizer, max_length: int, device: str):
    encoded = encode_pair_batch(
        tokenizer, [(ex.text_a, ex.text_b) for ex in batch], max_length, device,
    )
    labels = torch.tensor([float(ex.label) for ex in batch], device=device)
    return encoded, labels


def real_memory_probe(model, tokenizer, max_length: int, device: str) -> MemoryProbe:
    """One forward+backward step on the given batch, gradients discarded."""

    def probe(size: int, batch: list[TrainingExample]) -> None:
        encoded, labels = _batch_inputs(batch, tokenizer, max_length, device)
        model.train()
        try:
            logits = model(**encoded).logits.squeeze(-1)
            loss = torch.nn.functional.binary_cross_entropy_with_logits(logits, labels)
            loss.backward()
        except (RuntimeError, MemoryError) as exc:
            if isinstance(exc, MemoryError) or _looks_like_oom(exc):
                raise InsufficientMemory(f"probe at batch size {size}: {exc}") from exc
            raise
        finally:
            model.zero_grad(set_to_none=True)

    return probe


def finetune_model(model, tokenizer, examples: list[TrainingExample], *,
                   epochs: int, seed: int, device: str, max_length: int,
                   probe: MemoryProbe | None = None) -> tuple[int, float]:
    """Train in place; returns (chosen batch size, mean loss of last epoch)."""
    longest_first = sort_longest_first(examples, tokenizer)
    if probe is None:
        probe = real_memory_probe(model, tokenizer, max_length, device)
    chosen = search_batch_size(longest_first, probe)

    # Re-seed after probing: probe steps consume RNG (dropout), and their
    # count depends on the memory ceiling, which must not affect training.
    torch.manual_seed(seed)
    rng = random.Random(seed)
    optimizer = torch.optim.AdamW(
        model.parameters(), lr=LEARNING_RATE, weight_decay=WEIGHT_DECAY,
    )
    model.train()
    final_loss = 0.0
    for _ in range(epochs):
        order = list(range(len(examples)))
        rng.shuffle(order)
        epoch_losses: list[float] = []
        for start in range(0, len(order), chosen):
            batch = [examples[i] for i in order[start:start + chosen]]
            encoded, labels = _batch_inputs(batch, tokenizer, max_length, device)
            logits = model(**encoded).logits.squeeze(-1)
            loss = torch.nn.functional.binary_cross_entropy_with_logits(logits, labels)
            optimizer.zero_grad(set_to_none=True)
            loss.backward()
            optimizer.step()
            epoch_losses.append(float(loss.detach()))
        final_loss = sum(epoch_losses) / len(epoch_losses)
    model.eval()
    return chosen, final_loss
