"""Physical inventory documents: servers, switches, cabling, OS images.

The inventory is the sim's ground truth. Commissioning probes read server
resources from it and LLDP answers are derived from its cabling plan.
"""

from __future__ import annotations

import importlib.resources
import json
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field

from ..errors import DanglingCable, MalformedInventory


class NicSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")
    name: str
    mac: str = ""


class ServerSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")
    hostname: str
    cores: int = Field(gt=0)
    ram_gb: int = Field(gt=0)
    storage_gb: int = Field(gt=0)
    nics: list[NicSpec]


class SwitchSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")
    id: str
    ports: int = Field(gt=0)


class CableSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")
    a: tuple[str, str]  # (device, port)
    b: tuple[str, str]


class SimInventory(BaseModel):
    model_config = ConfigDict(extra="forbid")
    servers: list[ServerSpec] = Field(default_factory=list)
    switches: list[SwitchSpec] = Field(default_factory=list)
    cabling: list[CableSpec] = Field(default_factory=list)
    images: list[str] = Field(default_factory=list)


def load_inventory(document: dict) -> SimInventory:
    """Validate an inventory document; raises MalformedInventory or
    DanglingCable with the offending element."""
    try:
        inv = SimInventory.model_validate(document)
    except Exception as exc:
        raise MalformedInventory(str(exc)) from exc

    hostnames = [s.hostname for s in inv.servers]
    switch_ids = [s.id for s in inv.switches]
    if len(set(hostnames)) != len(hostnames):
        raise MalformedInventory("duplicate server hostname")
    if len(set(switch_ids)) != len(switch_ids):
        raise MalformedInventory("duplicate switch id")
    if set(hostnames) & set(switch_ids):
        raise MalformedInventory("server and switch share a device id")

    nic_names = {s.hostname: {n.name for n in s.nics} for s in inv.servers}
    seen_ports: set[tuple[str, str]] = set()
    for cable in inv.cabling:
        for device, port in (cable.a, cable.b):
            if device in nic_names:
                if port not in nic_names[device]:
                    raise DanglingCable(f"server {device} has no NIC {port}")
            elif device not in switch_ids:
                raise DanglingCable(f"cable references unknown device {device}")
            if (device, port) in seen_ports:
                raise MalformedInventory(f"port {device}:{port} cabled twice")
            seen_ports.add((device, port))

    # deterministic MACs for NICs that omit one
    for i, server in enumerate(inv.servers):
        for j, nic in enumerate(server.nics):
            if not nic.mac:
                nic.mac = f"02:00:00:00:{i:02x}:{j:02x}"
    return inv


def builtin_inventory(name: str) -> SimInventory:
    """Bundled fixtures: `lab22` (the full rack: 22 servers, 8 switches) and
    `minimal` (one of each)."""
    if name == "minimal":
        return load_inventory(
            {
                "servers": [
                    {
                        "hostname": "srv01",
                        "cores": 8,
                        "ram_gb": 16,
                        "storage_gb": 100,
                        "nics": [{"name": "eth0"}, {"name": "eth1"}],
                    }
                ],
                "switches": [{"id": "sw1", "ports": 8}],
                "cabling": [
                    {"a": ["srv01", "eth0"], "b": ["sw1", "p1"]},
                    {"a": ["srv01", "eth1"], "b": ["sw1", "p2"]},
                ],
                "images": ["ubuntu-22.04"],
            }
        )
    if name == "lab22":
        raw = importlib.resources.files("testbed_oss.fixtures").joinpath("lab22.json").read_text()
        return load_inventory(json.loads(raw))
    raise MalformedInventory(f"no builtin inventory named {name}")


def build_lab22_document() -> dict:
    """Builder for the bundled rack fixture: 22 servers of 32 cores each
    behind 6 leaf switches dual-homed, plus 2 spine switches (918 switch
    ports in total)."""
    spines = [{"id": "sw1", "ports": 115}, {"id": "sw2", "ports": 115}]
    leaves = [{"id": f"sw{i}", "ports": 115 if i <= 6 else 114} for i in range(3, 9)]
    servers = []
    cabling = []
    spine_next_port = {"sw1": 1, "sw2": 1}
    leaf_assignment = ["sw3"] * 4 + ["sw4"] * 4 + ["sw5"] * 4 + ["sw6"] * 4 + ["sw7"] * 3 + ["sw8"] * 3
    leaf_next_port = {leaf["id"]: 1 for leaf in leaves}

    for leaf in leaves:
        for spine in ("sw1", "sw2"):
            cabling.append(
                {
                    "a": [leaf["id"], f"p{leaf_next_port[leaf['id']]}"],
                    "b": [spine, f"p{spine_next_port[spine]}"],
                }
            )
            leaf_next_port[leaf["id"]] += 1
            spine_next_port[spine] += 1

    for i in range(22):
        hostname = f"srv{i + 1:02d}"
        leaf = leaf_assignment[i]
        servers.append(
            {
                "hostname": hostname,
                "cores": 32,
                "ram_gb": 116,
                "storage_gb": 5000,
                "nics": [{"name": "eth0"}, {"name": "eth1"}],
            }
        )
        for nic in ("eth0", "eth1"):
            cabling.append({"a": [hostname, nic], "b": [leaf, f"p{leaf_next_port[leaf]}"]})
            leaf_next_port[leaf] += 1

    return {
        "servers": servers,
        "switches": spines + leaves,
        "cabling": cabling,
        "images": ["ubuntu-22.04", "ubuntu-20.04", "debian-12"],
    }
