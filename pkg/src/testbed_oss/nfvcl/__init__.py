from .catalog import BlueprintCatalog, default_catalog
from .engine import BlueprintEngine
from .topology import TopologyService

__all__ = ["BlueprintCatalog", "default_catalog", "BlueprintEngine", "TopologyService"]
