"""Physical topology reconstruction from per-switch LLDP neighbor tables.

Each reachable switch is queried for its neighbor table; the union of the
reports, deduplicated as undirected port-level links, is the discovered
graph. An unreachable switch is excluded together with its links and
reported as a warning rather than failing the walk.
"""

from __future__ import annotations

from ..errors import SwitchUnreachable
from ..sim.substrate import Substrate
from .models import TopologyGraph


def discover_topology(substrate: Substrate) -> TopologyGraph:
    unreachable: list[str] = []
    edges: set[tuple[str, str]] = set()
    reachable: set[str] = set()

    for switch_id in substrate.switch_ids():
        try:
            table = substrate.read_lldp(switch_id)
        except SwitchUnreachable:
            unreachable.append(switch_id)
            continue
        reachable.add(switch_id)
        for port, (peer, peer_port) in table.items():
            edge = tuple(sorted((f"{switch_id}|{port}", f"{peer}|{peer_port}")))
            edges.add(edge)

    def endpoint_device(endpoint: str) -> str:
        return endpoint.split("|", 1)[0]

    kept = [
        e for e in edges
        if endpoint_device(e[0]) not in unreachable and endpoint_device(e[1]) not in unreachable
    ]
    nodes = set(reachable)
    for a, b in kept:
        nodes.add(endpoint_device(a))
        nodes.add(endpoint_device(b))

    return TopologyGraph(
        nodes=sorted(nodes),
        edges=sorted(kept),
        warnings=[f"switch {s} unreachable" for s in sorted(unreachable)],
    )
