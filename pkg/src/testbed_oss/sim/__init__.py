from .config import SimConfig
from .substrate import Substrate

__all__ = ["SimConfig", "Substrate"]
