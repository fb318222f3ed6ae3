"""HTTP sentence-embedding microservice."""
from embed_service.app import (ServiceConfig, create_app, load_backend,
                               main)

__all__ = ["ServiceConfig", "create_app", "load_backend", "main"]
__version__ = "0.1.0"
