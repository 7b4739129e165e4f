"""The HTTP surface: /health, /embed, /score, /finetune.

Handlers stay thin — shape checks and status-code mapping — and delegate
to the registry, runtime, and finetune modules.  Fine-tune jobs are
serialized by a lock and train a dedicated model instance, so concurrent
embedding and scoring on cached models are never disturbed.
"""

import hashlib
import logging
import threading
from pathlib import Path

import torch
from fastapi import FastAPI, HTTPException
from pydantic import BaseModel
from transformers import AutoModelForSequenceClassification, AutoTokenizer
from transformers.utils import logging as hf_logging

from . import finetune as ft
from .codecs import encode_matrix
from .config import ServiceConfig
from .registry import ModelLoadError, ModelRegistry, UnknownModel
from .runtime import effective_max_length
from .training_file import TrainingFileError, read_training_tsv

log = logging.getLogger("kgmatch_service")


class EmbedRequest(BaseModel):
    modelId: str
    texts: list[str]


class ScoreRequest(BaseModel):
    modelId: str
    pairs: list[tuple[str, str]]


class FinetuneRequest(BaseModel):
    baseModelId: str
    trainingFile: str
    epochs: int = 1
    seed: int = 0


def _derived_model_id(base_model_id: str, file_bytes: bytes, epochs: int, seed: int) -> str:
    digest = hashlib.sha256()
    for part in (base_model_id.encode("utf-8"), file_bytes,
                 str(epochs).encode("ascii"), str(seed).encode("ascii")):
        digest.update(part)
        digest.update(b"\x00")
    return f"ft-{digest.hexdigest()[:12]}"


def create_app(config: ServiceConfig | None = None,
               memory_probe: ft.MemoryProbe | None = None) -> FastAPI:
    """Build the application; `memory_probe` overrides the real fit check."""
    hf_logging.set_verbosity_error()
    hf_logging.disable_progress_bar()
    config = config or ServiceConfig.from_env()
    config.model_dir.mkdir(parents=True, exist_ok=True)
    registry = ModelRegistry(config)
    finetune_lock = threading.Lock()

    app = FastAPI(title="kgmatch inference service")
    app.state.config = config
    app.state.registry = registry

    def _load(loader, model_id: str):
        try:
            return loader(model_id)
        except UnknownModel:
            raise HTTPException(status_code=404, detail=f"unknown model {model_id!r}")
        except ModelLoadError as exc:
            raise HTTPException(status_code=500, detail=str(exc))

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok", "loadedModels": registry.loaded_models()}

    @app.post("/embed")
    def embed(request: EmbedRequest) -> dict:
        if not request.texts:
            raise HTTPException(status_code=400, detail="texts must be a non-empty list")
        if len(request.texts) > config.max_batch:
            raise HTTPException(
                status_code=413,
                detail={
                    "message": (
                        f"batch of {len(request.texts)} texts exceeds "
                        f"the maximum of {config.max_batch}"
                    ),
                    "maxBatchSize": config.max_batch,
                },
            )
        embedder = _load(registry.embedder, request.modelId)
        vectors = embedder.embed(request.texts)
        return {
            "modelId": request.modelId,
            "dim": int(vectors.shape[1]),
            "vectors": encode_matrix(vectors),
        }

    @app.post("/score")
    def score(request: ScoreRequest) -> dict:
        scorer = _load(registry.scorer, request.modelId)
        return {
            "modelId": request.modelId,
            "scores": scorer.score([(a, b) for a, b in request.pairs]),
        }

    @app.post("/finetune")
    def finetune(request: FinetuneRequest) -> dict:
        if request.epochs < 1:
            raise HTTPException(status_code=400, detail="epochs must be >= 1")
        with finetune_lock:
            path = Path(request.trainingFile)
            if not path.is_file():
                raise HTTPException(
                    status_code=400, detail=f"training file not found: {path}",
                )
            file_bytes = path.read_bytes()
            try:
                examples = read_training_tsv(path)
            except TrainingFileError as exc:
                raise HTTPException(status_code=400, detail=str(exc))
            positives = sum(1 for ex in examples if ex.label == 1)
            negatives = len(examples) - positives
            if positives == 0:
                raise HTTPException(
                    status_code=422, detail="training set contains no positive examples",
                )
            if negatives == 0:
                raise HTTPException(
                    status_code=422, detail="training set contains no negative examples",
                )

            try:
                source = registry.resolve(request.baseModelId)
            except UnknownModel:
                raise HTTPException(
                    status_code=404, detail=f"unknown model {request.baseModelId!r}",
                )
            try:
                tokenizer = AutoTokenizer.from_pretrained(source)
                # Seed before loading: a fresh classification head must be
                # reproducible.  Fine-tuned models always carry the standard
                # binary cross-encoder head (one sigmoid logit).
                torch.manual_seed(request.seed)
                model = AutoModelForSequenceClassification.from_pretrained(
                    source, num_labels=1, ignore_mismatched_sizes=True,
                )
            except Exception as exc:
                raise HTTPException(
                    status_code=500,
                    detail=f"base model {request.baseModelId!r} failed to load: {exc}",
                )
            model.to(registry.device)
            max_length = effective_max_length(tokenizer, model)

            try:
                chosen, final_loss = ft.finetune_model(
                    model, tokenizer, examples,
                    epochs=request.epochs, seed=request.seed,
                    device=registry.device, max_length=max_length,
                    probe=memory_probe,
                )
            except ft.InsufficientMemory as exc:
                raise HTTPException(
                    status_code=507,
                    detail=(
                        f"the minimum batch size of {ft.START_BATCH_SIZE} does not fit "
                        f"in memory ({exc}); use a smaller base model, shorter texts, "
                        "or a device with more memory"
                    ),
                )

            model_id = _derived_model_id(
                request.baseModelId, file_bytes, request.epochs, request.seed,
            )
            checkpoint = config.model_dir / model_id
            model.save_pretrained(checkpoint)
            tokenizer.save_pretrained(checkpoint)
            registry.invalidate(model_id)
            registry.register(model_id, str(checkpoint))
            log.info("fine-tuned %s -> %s (batch %d, final loss %.4f)",
                     request.baseModelId, model_id, chosen, final_loss)
            return {
                "modelId": model_id,
                "baseModelId": request.baseModelId,
                "chosenBatchSize": chosen,
                "trainLossFinal": final_loss,
                "epochs": request.epochs,
                "seed": request.seed,
                "examples": {"total": len(examples), "positives": positives,
                             "negatives": negatives},
                "hyperparameters": dict(ft.HYPERPARAMETERS),
            }

    return app
