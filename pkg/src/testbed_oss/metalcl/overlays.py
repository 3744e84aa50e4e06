"""Tenant overlay networks over the switching fabric.

An overlay gets the lowest unused VLAN of its tenant's range, one access
port per member machine (the machine's first NIC port not already claimed
by any overlay) and trunk provisioning along shortest switch paths, ties
broken by the lexicographically smallest node-id path. Access ports are
untagged, so two overlays can never share one, which together with
per-tenant disjoint VLAN ranges gives structural cross-tenant isolation.
"""

from __future__ import annotations

import heapq

from ..errors import (
    DisconnectedMembers,
    NoFreeNicPort,
    UnknownOverlay,
    VlanExhausted,
)
from ..store import DocumentStore
from ..sim.substrate import Substrate
from ..tenancy import TenantService
from .fleet import FleetService
from .models import MemberPort, OverlayNetwork

OVERLAYS = "overlays"


def shortest_switch_path(graph: dict[str, set[str]], src: str, dst: str) -> list[str] | None:
    """Minimum-hop path; among equal-length paths the lexicographically
    smallest node sequence wins, so provisioning is deterministic."""
    if src == dst:
        return [src]
    heap: list[tuple[int, list[str]]] = [(0, [src])]
    best: dict[str, tuple[int, list[str]]] = {src: (0, [src])}
    while heap:
        dist, path = heapq.heappop(heap)
        node = path[-1]
        if node == dst:
            return path
        if best.get(node, (dist, path)) < (dist, path):
            continue
        for neighbor in sorted(graph.get(node, ())):
            candidate = (dist + 1, path + [neighbor])
            if neighbor not in best or candidate < best[neighbor]:
                best[neighbor] = candidate
                heapq.heappush(heap, candidate)
    return None


class OverlayService:
    def __init__(self, store: DocumentStore, substrate: Substrate, tenants: TenantService, fleet: FleetService):
        self.store = store
        self.sim = substrate
        self.tenants = tenants
        self.fleet = fleet
        fleet.on_machine_released = self.remove_machine

    def get(self, overlay_id: str) -> OverlayNetwork:
        doc = self.store.try_get(OVERLAYS, overlay_id)
        if doc is None:
            raise UnknownOverlay(f"overlay {overlay_id} does not exist")
        return OverlayNetwork.model_validate(doc.body)

    def list_overlays(self) -> list[OverlayNetwork]:
        return [OverlayNetwork.model_validate(d.body) for d in self.store.list_docs(OVERLAYS)]

    def by_name(self, name: str) -> OverlayNetwork:
        for overlay in self.list_overlays():
            if overlay.name == name:
                return overlay
        raise UnknownOverlay(f"overlay named {name} does not exist")

    def _switch_graph(self) -> dict[str, set[str]]:
        inventory = self.sim.inventory()
        switches = {s.id for s in inventory.switches} if inventory else set()
        graph: dict[str, set[str]] = {s: set() for s in switches}
        for cable in inventory.cabling if inventory else []:
            a, b = cable.a[0], cable.b[0]
            if a in switches and b in switches:
                graph[a].add(b)
                graph[b].add(a)
        return graph

    def create_overlay(self, name: str, tenant_id: str, machine_ids: list[str]) -> OverlayNetwork:
        tenant = self.tenants.get_tenant(tenant_id)
        machines = [self.fleet.get(m) for m in sorted(set(machine_ids))]
        for machine in machines:
            if not machine.nics or not any(n.switch for n in machine.nics):
                raise NoFreeNicPort(f"{machine.machine_id} has no probed NIC ports; commission it first")

        existing = self.list_overlays()
        used_vlans = {o.vlan_id for o in existing if o.tenant_id == tenant_id}
        vlan_id = next((v for v in tenant.vlan_range.ids() if v not in used_vlans), None)
        if vlan_id is None:
            raise VlanExhausted(f"tenant {tenant_id} has no free VLAN in {tenant.vlan_range.dump()}")

        taken_ports = {(p.switch, p.port) for o in existing for p in o.member_ports}
        member_ports: list[MemberPort] = []
        for machine in machines:
            chosen = next(
                (n for n in machine.nics if n.switch and (n.switch, n.port) not in taken_ports), None
            )
            if chosen is None:
                raise NoFreeNicPort(f"{machine.machine_id} has no free NIC port left")
            taken_ports.add((chosen.switch, chosen.port))
            member_ports.append(
                MemberPort(machine_id=machine.machine_id, nic=chosen.name, switch=chosen.switch, port=chosen.port)
            )

        graph = self._switch_graph()
        member_switches = sorted({p.switch for p in member_ports})
        trunk_links: set[tuple[str, str]] = set()
        for i, src in enumerate(member_switches):
            for dst in member_switches[i + 1:]:
                path = shortest_switch_path(graph, src, dst)
                if path is None:
                    raise DisconnectedMembers(f"no switch path between {src} and {dst}")
                trunk_links.update(tuple(sorted((path[k], path[k + 1]))) for k in range(len(path) - 1))

        overlay_id = self.store.next_id("overlay", "ovl")
        overlay = OverlayNetwork(
            overlay_id=overlay_id,
            name=name,
            vlan_id=vlan_id,
            tenant_id=tenant_id,
            member_ports=member_ports,
            trunk_links=sorted(trunk_links),
        )
        self.store.insert(OVERLAYS, overlay_id, overlay.dump())
        for port in member_ports:
            self.sim.program_access_port(port.switch, port.port, vlan_id, overlay_id)
        for link in overlay.trunk_links:
            self.sim.program_trunk(link, vlan_id)
        self.sim.log("engine", overlay_id, "overlay_created", {
            "name": name, "tenant": tenant_id, "vlan": vlan_id,
            "members": [p.machine_id for p in member_ports],
        })
        return overlay

    def remove_machine(self, machine_id: str) -> None:
        """Strip a released machine out of every overlay it is a member of."""
        for overlay in self.list_overlays():
            mine = [p for p in overlay.member_ports if p.machine_id == machine_id]
            if not mine:
                continue

            def apply(body: dict) -> None:
                body["member_ports"] = [p for p in body["member_ports"] if p["machine_id"] != machine_id]

            self.store.update(OVERLAYS, overlay.overlay_id, apply)
            for port in mine:
                self.sim.clear_access_port(port.switch, port.port)
            self.sim.log("engine", overlay.overlay_id, "overlay_member_removed", {"machine": machine_id})
