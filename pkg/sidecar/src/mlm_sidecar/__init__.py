"""HTTP sidecar wrapping a pretrained masked language model."""

from .service import BackendConfig, MaskedLMBackend, PROTOCOL_VERSION, create_app

__all__ = ["BackendConfig", "MaskedLMBackend", "PROTOCOL_VERSION", "create_app"]
