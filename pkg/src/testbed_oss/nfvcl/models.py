"""Blueprint create bodies, descriptor documents and configuration bundles.

Descriptors are a deliberately small structural subset of the standard NSD/
VNFD data model: ids, VDUs with flavors, connection points, virtual links
and, for container NFs, a chart reference with default values. That is
enough to regenerate packages per instance and to change a service's
internal topology without redeploying it.
"""

from __future__ import annotations

from enum import Enum
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator

from ..models import OssModel


class NetMode(str, Enum):
    LAYER2 = "layer2"
    LAYER3 = "layer3"


class DataNet(OssModel):
    mode: NetMode = NetMode.LAYER2
    net_name: str


class NetworkEndpoints(OssModel):
    mgt: str
    data_nets: list[DataNet] = Field(default_factory=list)


class AreaSpec(OssModel):
    """One numbered coverage area in a create request. `core` marks the area
    hosting the control components; exactly one is required."""

    id: int = Field(ge=0)
    core: bool = False
    workers_replica: int = Field(default=1, ge=0)


class BlueprintCreate(OssModel):
    type: str
    config: dict
    areas: list[AreaSpec]


class NfKind(str, Enum):
    VNF = "VNF"
    KNF = "KNF"
    PNF = "PNF"


class VduSpec(OssModel):
    name: str
    vcpus: int = Field(gt=0)
    ram_gb: int = Field(gt=0)
    storage_gb: int = Field(gt=0)
    image: str = ""


class VnfDescriptor(OssModel):
    vnfd_id: str
    kind: NfKind
    vdus: list[VduSpec] = Field(default_factory=list)
    connection_points: list[str] = Field(default_factory=list)
    chart_ref: Optional[str] = None
    chart_values: Optional[dict] = None
    device_ref: Optional[str] = None

    @field_validator("connection_points")
    @classmethod
    def _unique(cls, v: list[str]) -> list[str]:
        if len(set(v)) != len(v):
            raise ValueError("connection point names must be unique")
        return v

    def check_kind_invariants(self) -> None:
        if self.kind == NfKind.VNF and not self.vdus:
            raise ValueError("VNF requires at least one VDU")
        if self.kind == NfKind.PNF and not self.device_ref:
            raise ValueError("PNF requires a device ref")
        if self.kind == NfKind.KNF and not self.chart_ref:
            raise ValueError("KNF requires a chart ref")


class VirtualLink(OssModel):
    name: str
    net_name: str


class NsDescriptor(OssModel):
    nsd_id: str
    name: str
    vnfd_refs: list[str]
    virtual_links: list[VirtualLink] = Field(default_factory=list)
    area_id: int


class NsTemplate(OssModel):
    """Expansion output: one network service to realize in one area."""

    area_id: int
    role: str  # "core" | "edge"
    name: str
    vnfs: list[VnfDescriptor]
    virtual_links: list[VirtualLink] = Field(default_factory=list)

    def compute(self) -> dict:
        total = {"vcpus": 0, "ram_gb": 0, "storage_gb": 0}
        for vnf in self.vnfs:
            for vdu in vnf.vdus:
                total["vcpus"] += vdu.vcpus
                total["ram_gb"] += vdu.ram_gb
                total["storage_gb"] += vdu.storage_gb
        return total


class BundleMechanism(str, Enum):
    PLAYBOOK_BUNDLE = "playbook_bundle"
    CHART_VALUES = "chart_values"


class ConfigBundle(OssModel):
    target_vnf: str
    mechanism: BundleMechanism
    payload: dict

    @staticmethod
    def for_nf(kind: NfKind, target: str, payload: dict) -> "ConfigBundle":
        """Mechanism is decided by NF kind: container NFs get a values patch,
        everything else an instruction document listing playbooks and files."""
        if kind == NfKind.KNF:
            return ConfigBundle(target_vnf=target, mechanism=BundleMechanism.CHART_VALUES, payload=payload)
        return ConfigBundle(target_vnf=target, mechanism=BundleMechanism.PLAYBOOK_BUNDLE, payload=payload)


class InstanceState(str, Enum):
    CREATED = "CREATED"
    DEPLOYING = "DEPLOYING"
    CONFIGURING = "CONFIGURING"
    READY = "READY"
    UPDATING = "UPDATING"
    DESTROYING = "DESTROYING"
    DESTROYED = "DESTROYED"
    ERROR = "ERROR"


INSTANCE_TRANSITIONS: dict[InstanceState, set[InstanceState]] = {
    InstanceState.CREATED: {InstanceState.DEPLOYING, InstanceState.ERROR},
    InstanceState.DEPLOYING: {InstanceState.CONFIGURING, InstanceState.ERROR},
    InstanceState.CONFIGURING: {InstanceState.READY, InstanceState.ERROR},
    InstanceState.READY: {InstanceState.UPDATING, InstanceState.DESTROYING, InstanceState.ERROR},
    InstanceState.UPDATING: {InstanceState.READY, InstanceState.ERROR},
    InstanceState.DESTROYING: {InstanceState.DESTROYED, InstanceState.ERROR},
    InstanceState.DESTROYED: set(),
    InstanceState.ERROR: {InstanceState.DESTROYING},
}
