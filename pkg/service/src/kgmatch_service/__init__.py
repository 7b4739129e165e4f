"""HTTP inference sidecar for the matching pipeline.

Exposes sentence embedding (POST /embed), pair scoring (POST /score),
cross-encoder fine-tuning with automatic batch-size search
(POST /finetune), and GET /health.
"""

from .app import create_app
from .config import ServiceConfig

__all__ = ["ServiceConfig", "create_app"]
