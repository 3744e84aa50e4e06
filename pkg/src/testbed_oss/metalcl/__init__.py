from .fleet import FleetService
from .discovery import discover_topology
from .overlays import OverlayService
from .stacks import StackService

__all__ = ["FleetService", "discover_topology", "OverlayService", "StackService"]
