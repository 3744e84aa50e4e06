"""Multi-tenant testbed-as-a-service control plane over a deterministic
simulated infrastructure substrate."""

from .platform import Platform
from .store import FileStore, MemoryStore

__all__ = ["Platform", "FileStore", "MemoryStore"]
__version__ = "0.1.0"
