"""Loaded-model wrappers: embedding with mean pooling, pair scoring.

Both wrappers own a tokenizer/model pair pinned to one device and do
their own internal chunking so request-level batch sizes never dictate
peak memory.  Scoring encodes text pairs manually because the truncation
rule is part of the contract: tokens are dropped from the end of the
longer text until the pair fits the model window, ties truncating the
first text, and neither text is emptied.
"""

import numpy as np
import torch

# Tokenizers report a huge sentinel when no explicit limit was saved.
_MAX_LENGTH_SENTINEL = 10**6


def effective_max_length(tokenizer, model) -> int:
    limit = int(getattr(model.config, "max_position_embeddings", _MAX_LENGTH_SENTINEL))
    declared = int(getattr(tokenizer, "model_max_length", _MAX_LENGTH_SENTINEL))
    if declared < _MAX_LENGTH_SENTINEL:
        limit = min(limit, declared)
    if limit >= _MAX_LENGTH_SENTINEL:
        raise ValueError("model declares no usable maximum input length")
    return limit


def truncate_pair_tokens(ids_a: list[int], ids_b: list[int],
                         budget: int) -> tuple[list[int], list[int]]:
    """Drop trailing tokens from the longer side until the pair fits.

    Ties truncate the first side; a side is never emptied once it is down
    to a single token.
    """
    if budget < 2:
        raise ValueError("budget must allow at least one token per side")
    ids_a, ids_b = list(ids_a), list(ids_b)
    while len(ids_a) + len(ids_b) > budget:
        if len(ids_a) >= len(ids_b) and len(ids_a) > 1:
            ids_a.pop()
        elif len(ids_b) > 1:
            ids_b.pop()
        else:
            break
    return ids_a, ids_b


def encode_pair_batch(tokenizer, pairs: list[tuple[str, str]], max_length: int,
                      device: str) -> dict[str, torch.Tensor]:
    """Tokenize, truncate, and pad a batch of text pairs into model inputs.

    Rows are assembled as ``[CLS] a [SEP] b [SEP]`` with segment ids 0 for
    the first sentence and 1 for the second, so truncation stays under our
    control rather than the tokenizer's.
    """
    cls_id, sep_id = tokenizer.cls_token_id, tokenizer.sep_token_id
    if cls_id is None or sep_id is None:
        raise ValueError("tokenizer does not define CLS/SEP tokens for pair input")
    budget = max_length - 3  # [CLS], two [SEP]
    rows: list[tuple[list[int], list[int]]] = []
    for text_a, text_b in pairs:
        ids_a = tokenizer.encode(text_a, add_special_tokens=False)
        ids_b = tokenizer.encode(text_b, add_special_tokens=False)
        ids_a, ids_b = truncate_pair_tokens(ids_a, ids_b, budget)
        rows.append((
            [cls_id, *ids_a, sep_id, *ids_b, sep_id],
            [0] * (len(ids_a) + 2) + [1] * (len(ids_b) + 1),
        ))
    width = max(len(ids) for ids, _ in rows)
    pad_id = tokenizer.pad_token_id or 0
    input_ids = torch.full((len(rows), width), pad_id, dtype=torch.long)
    token_type_ids = torch.zeros((len(rows), width), dtype=torch.long)
    attention_mask = torch.zeros((len(rows), width), dtype=torch.long)
    for i, (ids, types) in enumerate(rows):
        input_ids[i, :len(ids)] = torch.tensor(ids, dtype=torch.long)
        token_type_ids[i, :len(types)] = torch.tensor(types, dtype=torch.long)
        attention_mask[i, :len(ids)] = 1
    return {
        "input_ids": input_ids.to(device),
        "token_type_ids": token_type_ids.to(device),
        "attention_mask": attention_mask.to(device),
    }


def positive_probabilities(logits: torch.Tensor) -> list[float]:
    """Map classifier logits to match probabilities in [0, 1].

    One output unit is read as a sigmoid logit; two or more as softmax
    with class 1 the positive class.
    """
    if logits.shape[-1] == 1:
        probs = torch.sigmoid(logits.squeeze(-1))
    else:
        probs = torch.softmax(logits, dim=-1)[..., 1]
    return [float(p) for p in probs.detach().cpu()]


class Embedder:
    """Mean-pooled, L2-normalized sentence vectors from an encoder model."""

    def __init__(self, model, tokenizer, device: str, internal_batch: int = 64):
        self.model = model.to(device).eval()
        self.tokenizer = tokenizer
        self.device = device
        self.internal_batch = internal_batch
        self.max_length = effective_max_length(tokenizer, model)

    @property
    def dim(self) -> int:
        return int(self.model.config.hidden_size)

    def embed(self, texts: list[str]) -> np.ndarray:
        chunks: list[np.ndarray] = []
        for start in range(0, len(texts), self.internal_batch):
            chunk = texts[start:start + self.internal_batch]
            encoded = self.tokenizer(
                chunk, padding=True, truncation=True,
                max_length=self.max_length, return_tensors="pt",
            ).to(self.device)
            with torch.no_grad():
                hidden = self.model(**encoded).last_hidden_state
            mask = encoded["attention_mask"].unsqueeze(-1).to(hidden.dtype)
            pooled = (hidden * mask).sum(dim=1) / mask.sum(dim=1).clamp(min=1.0)
            normalized = torch.nn.functional.normalize(pooled, dim=1)
            chunks.append(normalized.cpu().numpy().astype(np.float32))
        if not chunks:
            return np.zeros((0, self.dim), dtype=np.float32)
        return np.concatenate(chunks, axis=0)


class PairScorer:
    """Match probabilities for text pairs from a sequence classifier."""

    def __init__(self, model, tokenizer, device: str, internal_batch: int = 64):
        self.model = model.to(device).eval()
        self.tokenizer = tokenizer
        self.device = device
        self.internal_batch = internal_batch
        self.max_length = effective_max_length(tokenizer, model)

    def score(self, pairs: list[tuple[str, str]]) -> list[float]:
        scores: list[float] = []
        for start in range(0, len(pairs), self.internal_batch):
            chunk = pairs[start:start + self.internal_batch]
            encoded = encode_pair_batch(self.tokenizer, chunk, self.max_length, self.device)
            with torch.no_grad():
                logits = self.model(**encoded).logits
            scores.extend(positive_probabilities(logits))
        return scores
