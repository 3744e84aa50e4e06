"""Bare-metal domain types: machine lifecycle, overlays, topology graphs,
stack install plans."""

from __future__ import annotations

from enum import Enum
from typing import Optional

from pydantic import Field, field_validator

from ..models import OssModel, ResourceBudget


class MachineState(str, Enum):
    NEW = "NEW"
    COMMISSIONING = "COMMISSIONING"
    READY = "READY"
    ALLOCATED = "ALLOCATED"
    DEPLOYING = "DEPLOYING"
    DEPLOYED = "DEPLOYED"
    RELEASING = "RELEASING"
    FAILED = "FAILED"


MACHINE_TRANSITIONS: dict[MachineState, set[MachineState]] = {
    MachineState.NEW: {MachineState.COMMISSIONING},
    MachineState.COMMISSIONING: {MachineState.READY, MachineState.FAILED},
    MachineState.READY: {MachineState.ALLOCATED},
    MachineState.ALLOCATED: {MachineState.DEPLOYING},
    MachineState.DEPLOYING: {MachineState.DEPLOYED, MachineState.FAILED},
    MachineState.DEPLOYED: {MachineState.RELEASING},
    MachineState.RELEASING: {MachineState.READY},
    MachineState.FAILED: set(),
}


class PowerState(str, Enum):
    ON = "ON"
    OFF = "OFF"


class MachineNic(OssModel):
    name: str
    mac: str
    switch: str
    port: str


class Machine(OssModel):
    machine_id: str
    hostname: str
    state: MachineState = MachineState.NEW
    power: PowerState = PowerState.OFF
    resources: Optional[ResourceBudget] = None
    nics: list[MachineNic] = Field(default_factory=list)
    os_image: Optional[str] = None
    tenant_id: Optional[str] = None


class MemberPort(OssModel):
    machine_id: str
    nic: str
    switch: str
    port: str


class OverlayNetwork(OssModel):
    overlay_id: str
    name: str
    vlan_id: int
    tenant_id: str
    member_ports: list[MemberPort] = Field(default_factory=list)
    trunk_links: list[tuple[str, str]] = Field(default_factory=list)

    @field_validator("trunk_links")
    @classmethod
    def _normalized(cls, v):
        return sorted(tuple(sorted(link)) for link in v)


class TopologyGraph(OssModel):
    """Port-level discovered graph; edges are sorted ("dev|port", "dev|port")
    pairs so set comparison against a cabling plan is direct."""

    nodes: list[str] = Field(default_factory=list)
    edges: list[tuple[str, str]] = Field(default_factory=list)
    warnings: list[str] = Field(default_factory=list)

    @field_validator("nodes")
    @classmethod
    def _sorted_nodes(cls, v):
        return sorted(set(v))

    @field_validator("edges")
    @classmethod
    def _sorted_edges(cls, v):
        return sorted({tuple(sorted(e)) for e in v})

    def edge_set(self) -> set[frozenset[str]]:
        return {frozenset(e) for e in self.edges}


class StackKind(str, Enum):
    IAAS_STACK = "iaas_stack"
    PAAS_VM = "paas_vm"
    PAAS_BAREMETAL = "paas_baremetal"


DEFAULT_PLAYBOOKS: dict[StackKind, list[str]] = {
    StackKind.IAAS_STACK: ["bootstrap", "network-fabric", "control-plane", "compute-nodes", "validate"],
    StackKind.PAAS_VM: ["bootstrap", "runtime", "cluster-init", "validate"],
    StackKind.PAAS_BAREMETAL: ["bootstrap", "runtime", "cluster-init", "validate"],
}


class StackNetworks(OssModel):
    mgmt: str
    data: str


class StackPlan(OssModel):
    kind: StackKind
    machines: list[str]
    networks: StackNetworks
    playbook_sequence: list[str] = Field(default_factory=list)

    @field_validator("machines")
    @classmethod
    def _nonempty(cls, v):
        if not v:
            raise ValueError("a stack needs at least one machine")
        return v

    def playbooks(self) -> list[str]:
        return self.playbook_sequence or DEFAULT_PLAYBOOKS[self.kind]
