"""Composition root: one store, one substrate, every service wired up.

A Platform owns no state of its own; rebuilding one over an existing store
resumes exactly where the previous process stopped, which is what makes the
gateway processes disposable.
"""

from __future__ import annotations

from .models import ResourceBudget
from .metalcl.discovery import discover_topology
from .metalcl.fleet import FleetService
from .metalcl.overlays import OverlayService
from .metalcl.stacks import StackService
from .nboss import NbOss
from .nfvcl.catalog import default_catalog
from .nfvcl.engine import BlueprintEngine
from .nfvcl.topology import TopologyService
from .sboss import SbCore
from .sim.config import SimConfig
from .sim.inventory import SimInventory, builtin_inventory
from .sim.substrate import Substrate
from .store import DocumentStore, MemoryStore
from .tenancy import TenantService


class Platform:
    def __init__(
        self,
        store: DocumentStore | None = None,
        seed: int = 0,
        inventory: SimInventory | dict | str | None = None,
        config: SimConfig | None = None,
    ):
        self.store = store if store is not None else MemoryStore()
        if isinstance(inventory, str):
            inventory = builtin_inventory(inventory)
        self.sim = Substrate(self.store, config=config, seed=seed, inventory=inventory)
        self.tenants = TenantService(self.store)
        self.catalog = default_catalog()
        self.topology = TopologyService(self.store, self.sim)
        self.engine = BlueprintEngine(self.store, self.sim, self.catalog, self.topology, self.tenants)
        self.fleet = FleetService(self.store, self.sim, self.tenants)
        self.overlays = OverlayService(self.store, self.sim, self.tenants, self.fleet)
        self.stacks = StackService(self.store, self.sim, self.fleet, self.overlays, self.topology)
        self.sb = SbCore(self.store, self.sim, self.engine, self.tenants, self.catalog)
        self.nb = NbOss(self.store, self.sim, self.sb, self.tenants, self.catalog.tags())

    # -- convenience -----------------------------------------------------------

    def advance(self, dt: float) -> list[dict]:
        return self.sim.advance(dt)

    def settle(self) -> float:
        return self.sim.run_until_quiescent()

    def discover_topology(self):
        return discover_topology(self.sim)

    def usage_snapshot(self) -> dict:
        """Combined resource usage across the substrate and tenant ledgers;
        equality of two snapshots means nothing leaked."""
        tenants = {}
        for tenant in self.tenants.list_tenants():
            tenants[tenant.id] = {k: v.dump() for k, v in self.tenants.usage(tenant.id).items()}
        return {"sim": self.sim.usage_snapshot(), "tenants": tenants}

    def bootstrap_defaults(self) -> None:
        """Small starting registry used by demos and scenario runs: two areas
        and a shared management network."""
        from .models import Area, AreaKind

        if not self.tenants.list_areas():
            self.tenants.register_area(Area(id=1, name="core-dc", kind=AreaKind.CORE))
            self.tenants.register_area(Area(id=2, name="edge-dc", kind=AreaKind.EDGE))
            self.tenants.register_area(Area(id=3, name="edge-annex", kind=AreaKind.EDGE))
        if "control" not in self.topology.network_names():
            self.topology.create_network("control", "10.10.0.0/24", "layer2")
