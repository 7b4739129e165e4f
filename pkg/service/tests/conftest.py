"""Shared fixtures: tiny offline checkpoints and app clients.

No test touches the model hub.  A two-layer BERT encoder and a
single-logit classifier are built from scratch over a character-level
WordPiece vocabulary (plus a few whole words) and saved once per
session; the service resolves them as local checkpoints in its model
directory, exactly like fine-tuned models.
"""

import pytest
import torch
from fastapi.testclient import TestClient
from transformers import BertConfig, BertForSequenceClassification, BertModel, BertTokenizer
from transformers.utils import logging as hf_logging

from kgmatch_service.app import create_app
from kgmatch_service.config import ServiceConfig

EMBEDDER_ID = "tiny-embedder"
SCORER_ID = "tiny-scorer"
MAX_BATCH = 8  # small so overlong-batch behavior is cheap to trigger

WHOLE_WORDS = [
    "heart", "cardiac", "muscle", "lung", "organ", "blood", "vessel",
    "bone", "brain", "kidney", "liver", "tissue", "cell", "artery", "vein",
]

# Verdict lines collected by the service acceptance tests; echoed after the
# run so they stay visible regardless of output capture.
ACCEPTANCE_RESULTS: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_RESULTS:
        terminalreporter.write_line("")
        terminalreporter.write_line("service acceptance criteria:")
        for line in ACCEPTANCE_RESULTS:
            terminalreporter.write_line(line)


def _build_vocab(path) -> int:
    letters = [chr(c) for c in range(ord("a"), ord("z") + 1)]
    digits = [str(d) for d in range(10)]
    tokens = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]
    tokens += letters + ["##" + ch for ch in letters]
    tokens += digits + ["##" + d for d in digits]
    tokens += WHOLE_WORDS
    path.write_text("\n".join(tokens) + "\n", encoding="utf-8")
    return len(tokens)


def _tiny_config(vocab_size: int, **overrides) -> BertConfig:
    return BertConfig(
        vocab_size=vocab_size,
        hidden_size=64,
        num_hidden_layers=2,
        num_attention_heads=4,
        intermediate_size=128,
        max_position_embeddings=32,
        **overrides,
    )


@pytest.fixture(scope="session")
def model_dir(tmp_path_factory):
    hf_logging.set_verbosity_error()
    hf_logging.disable_progress_bar()
    root = tmp_path_factory.mktemp("models")
    vocab_file = root / "vocab.txt"
    vocab_size = _build_vocab(vocab_file)
    tokenizer = BertTokenizer(str(vocab_file), do_lower_case=True)
    tokenizer.model_max_length = 32

    torch.manual_seed(7)
    BertModel(_tiny_config(vocab_size)).save_pretrained(root / EMBEDDER_ID)
    tokenizer.save_pretrained(root / EMBEDDER_ID)

    torch.manual_seed(8)
    BertForSequenceClassification(_tiny_config(vocab_size, num_labels=1)).save_pretrained(
        root / SCORER_ID,
    )
    tokenizer.save_pretrained(root / SCORER_ID)
    return root


@pytest.fixture(scope="session")
def service_config(model_dir) -> ServiceConfig:
    return ServiceConfig(model_dir=model_dir, device="cpu", max_batch=MAX_BATCH)


@pytest.fixture(scope="session")
def client(service_config):
    """One long-lived app: model caches persist across tests, as in service."""
    with TestClient(create_app(service_config)) as test_client:
        yield test_client


@pytest.fixture
def fresh_client(service_config):
    """A new app per test, for assertions about loading state."""
    with TestClient(create_app(service_config)) as test_client:
        yield test_client
