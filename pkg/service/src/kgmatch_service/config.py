"""Service configuration, read from environment variables.

Everything has a usable default so `kgmatch-service` starts bare; tests
construct the dataclass directly instead of going through the environment.
"""

import os
from dataclasses import dataclass, field
from pathlib import Path

ENV_PORT = "KGMATCH_SERVICE_PORT"
ENV_MODEL_DIR = "KGMATCH_SERVICE_MODEL_DIR"
ENV_DEVICE = "KGMATCH_SERVICE_DEVICE"
ENV_MAX_BATCH = "KGMATCH_SERVICE_MAX_BATCH"

DEFAULT_PORT = 8750
DEFAULT_MODEL_DIR = "~/.cache/kgmatch-service"
DEFAULT_DEVICE = "auto"
DEFAULT_MAX_BATCH = 256


def resolve_device(name: str) -> str:
    """'auto' picks cuda when present; anything else is passed to torch as-is."""
    if name != "auto":
        return name
    import torch

    return "cuda" if torch.cuda.is_available() else "cpu"


@dataclass(frozen=True)
class ServiceConfig:
    """Runtime knobs: where checkpoints live, what device, request limits."""

    model_dir: Path = field(default_factory=lambda: Path(DEFAULT_MODEL_DIR).expanduser())
    device: str = DEFAULT_DEVICE
    max_batch: int = DEFAULT_MAX_BATCH  # texts per /embed request; above this -> 413
    internal_batch: int = 64            # model-forward chunk size, bounds memory
    port: int = DEFAULT_PORT

    def __post_init__(self):
        if self.max_batch < 1 or self.internal_batch < 1:
            raise ValueError("batch limits must be positive")

    @classmethod
    def from_env(cls, env: dict[str, str] | None = None) -> "ServiceConfig":
        env = os.environ if env is None else env
        return cls(
            model_dir=Path(env.get(ENV_MODEL_DIR, DEFAULT_MODEL_DIR)).expanduser(),
            device=env.get(ENV_DEVICE, DEFAULT_DEVICE),
            max_batch=int(env.get(ENV_MAX_BATCH, DEFAULT_MAX_BATCH)),
            port=int(env.get(ENV_PORT, DEFAULT_PORT)),
        )
