"""Virtual-infrastructure topology: named networks, VIM and cluster records.

Networks are usable as blueprint endpoints the moment they exist. VIMs and
clusters can be onboarded statically or appear dynamically when a stack
install finishes; blueprint placement picks the most recently registered
record serving the target area.
"""

from __future__ import annotations

import ipaddress

from ..errors import CidrOverlap, DuplicateName, TopologyMissing
from ..models import ResourceBudget
from ..store import DocumentStore
from ..sim.substrate import Substrate

TOPOLOGY = "topology"
DOC = "virtual"


class TopologyService:
    def __init__(self, store: DocumentStore, substrate: Substrate):
        self.store = store
        self.sim = substrate
        if not store.exists(TOPOLOGY, DOC):
            store.insert(TOPOLOGY, DOC, {"networks": {}, "vims": [], "clusters": []})
            # mirror VIMs the substrate already knows (the built-in one)
            for vim_id in substrate.vim_ids():
                record = substrate.vim_record(vim_id)
                self._append_vim(vim_id, record["name"], record["areas"], "static")

    def view(self) -> dict:
        return self.store.get(TOPOLOGY, DOC).body

    # -- networks -----------------------------------------------------------------

    def create_network(self, name: str, cidr: str, mode: str, owner: str = "shared") -> dict:
        try:
            network = ipaddress.ip_network(cidr)
        except ValueError as exc:
            raise CidrOverlap(f"malformed cidr {cidr}") from exc

        def apply(body: dict) -> dict:
            if name in body["networks"]:
                raise DuplicateName(f"network {name} already exists")
            for other_name, other in body["networks"].items():
                if other["owner"] == owner and network.overlaps(ipaddress.ip_network(other["cidr"])):
                    raise CidrOverlap(f"{cidr} overlaps {other_name} ({other['cidr']})")
            record = {"cidr": cidr, "mode": mode, "owner": owner}
            body["networks"][name] = record
            return record

        _, record = self.store.update(TOPOLOGY, DOC, apply)
        self.sim.vim_create_network(name, cidr, mode)
        return {"name": name, **record}

    def network_names(self) -> set[str]:
        return set(self.view()["networks"])

    def require_networks(self, names: list[str]) -> None:
        missing = sorted(set(names) - self.network_names())
        if missing:
            raise TopologyMissing(f"networks not in topology: {', '.join(missing)}")

    # -- VIMs ------------------------------------------------------------------------

    def _append_vim(self, vim_id: str, name: str, areas: list[int] | None, source: str) -> dict:
        def apply(body: dict) -> dict:
            record = {"vim_id": vim_id, "name": name, "areas": areas, "source": source}
            body["vims"] = [v for v in body["vims"] if v["vim_id"] != vim_id] + [record]
            return record

        _, record = self.store.update(TOPOLOGY, DOC, apply)
        return record

    def register_vim(
        self,
        name: str,
        capacity: ResourceBudget,
        areas: list[int] | None,
        source: str = "static",
    ) -> dict:
        vim_id = self.store.next_id("vim", "vim")
        self.sim.vim_register(vim_id, name, capacity, areas)
        # freshly registered VIMs inherit every topology network
        for net_name, net in sorted(self.view()["networks"].items()):
            self.sim.vim_create_network(net_name, net["cidr"], net["mode"], vim_id=vim_id)
        return self._append_vim(vim_id, name, sorted(areas) if areas else areas, source)

    def select_vim(self, area_id: int) -> str:
        """Most recently registered VIM serving the area."""
        for record in reversed(self.view()["vims"]):
            if record["areas"] is None or area_id in record["areas"]:
                return record["vim_id"]
        raise TopologyMissing(f"no VIM registered serving area {area_id}")

    # -- clusters -----------------------------------------------------------------------

    def register_cluster(self, name: str, areas: list[int] | None, owner: str, source: str) -> dict:
        cluster_id = self.store.next_id("cluster", "cluster")

        def apply(body: dict) -> dict:
            record = {
                "cluster_id": cluster_id,
                "name": name,
                "areas": sorted(areas) if areas is not None else None,
                "owner": owner,
                "source": source,
            }
            body["clusters"].append(record)
            return record

        _, record = self.store.update(TOPOLOGY, DOC, apply)
        self.sim.log("engine", cluster_id, "cluster_registered", {"areas": record["areas"], "source": source})
        return record

    def remove_cluster(self, source: str) -> None:
        def apply(body: dict) -> None:
            body["clusters"] = [c for c in body["clusters"] if c["source"] != source]

        self.store.update(TOPOLOGY, DOC, apply)

    def select_cluster(self, area_id: int, owner: str | None = None) -> dict:
        for record in reversed(self.view()["clusters"]):
            serves = record["areas"] is None or area_id in record["areas"]
            if serves and (owner is None or record["owner"] in (owner, "shared")):
                return record
        raise TopologyMissing(f"no cluster registered serving area {area_id}")
