"""Model registry: opaque ids resolved to checkpoints, loaded lazily.

Resolution order for an id:

1. an explicit alias from `models.json` in the model directory
   (`{"id": "path or hub name", ...}`, read at startup) or registered at
   runtime by a fine-tune job;
2. a checkpoint directory named after the id inside the model directory
   (where fine-tuned models are saved);
3. the id itself, when it looks like a hub name (contains a slash).

Anything else is unknown.  Loaded models are cached per role (embedder
vs. scorer) and reused across requests; loading is serialized.
"""

import json
import logging
import threading

import torch
from transformers import AutoModel, AutoModelForSequenceClassification, AutoTokenizer

from .config import ServiceConfig, resolve_device
from .runtime import Embedder, PairScorer

log = logging.getLogger("kgmatch_service")

REGISTRY_FILE = "models.json"


class UnknownModel(KeyError):
    """The model id maps to nothing we can load."""


class ModelLoadError(RuntimeError):
    """The id resolved but the checkpoint failed to load."""


class ModelRegistry:
    def __init__(self, config: ServiceConfig):
        self.config = config
        self.device = resolve_device(config.device)
        self._aliases: dict[str, str] = {}
        self._embedders: dict[str, Embedder] = {}
        self._scorers: dict[str, PairScorer] = {}
        self._lock = threading.Lock()
        registry_file = config.model_dir / REGISTRY_FILE
        if registry_file.is_file():
            with open(registry_file, "r", encoding="utf-8") as fh:
                self._aliases.update({str(k): str(v) for k, v in json.load(fh).items()})

    def register(self, model_id: str, source: str) -> None:
        with self._lock:
            self._aliases[model_id] = source

    def resolve(self, model_id: str) -> str:
        alias = self._aliases.get(model_id)
        if alias is not None:
            return alias
        local = self.config.model_dir / model_id
        if (local / "config.json").is_file():
            return str(local)
        if "/" in model_id:
            return model_id
        raise UnknownModel(model_id)

    def _load(self, model_id: str, auto_class):
        source = self.resolve(model_id)
        try:
            tokenizer = AutoTokenizer.from_pretrained(source)
            # Seed before loading so any freshly initialized head (e.g. a
            # classifier on top of a bare encoder) is reproducible across
            # restarts.
            torch.manual_seed(0)
            model = auto_class.from_pretrained(source)
        except UnknownModel:
            raise
        except Exception as exc:
            raise ModelLoadError(f"model {model_id!r} ({source}) failed to load: {exc}") from exc
        log.info("loaded %s from %s", model_id, source)
        return model, tokenizer

    def embedder(self, model_id: str) -> Embedder:
        with self._lock:
            if model_id not in self._embedders:
                model, tokenizer = self._load(model_id, AutoModel)
                self._embedders[model_id] = Embedder(
                    model, tokenizer, self.device, self.config.internal_batch,
                )
            return self._embedders[model_id]

    def scorer(self, model_id: str) -> PairScorer:
        with self._lock:
            if model_id not in self._scorers:
                model, tokenizer = self._load(model_id, AutoModelForSequenceClassification)
                self._scorers[model_id] = PairScorer(
                    model, tokenizer, self.device, self.config.internal_batch,
                )
            return self._scorers[model_id]

    def invalidate(self, model_id: str) -> None:
        """Drop cached instances (a fine-tune overwrote the checkpoint)."""
        with self._lock:
            self._embedders.pop(model_id, None)
            self._scorers.pop(model_id, None)

    def loaded_models(self) -> list[str]:
        with self._lock:
            return sorted(set(self._embedders) | set(self._scorers))
