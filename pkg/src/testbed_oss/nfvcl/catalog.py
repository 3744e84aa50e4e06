"""Blueprint type catalog.

Four types are executable end to end (cluster, two mobile-core stacks, a
router and a radio/UE simulator endpoint); the remaining service offerings
are listed as catalog metadata so clients can discover them, but cannot be
instantiated against the simulated substrate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

from pydantic import BaseModel, ConfigDict, Field

from ..errors import BlueprintTypeNotExecutable, UnknownBlueprintType
from . import expansion
from .models import BlueprintCreate, NsTemplate


class AddWorkerParams(BaseModel):
    model_config = ConfigDict(extra="forbid")
    area: int
    count: int = Field(default=1, ge=1)


class InstallPluginParams(BaseModel):
    model_config = ConfigDict(extra="forbid")
    name: str


class AddSubscriberParams(BaseModel):
    model_config = ConfigDict(extra="forbid")
    imsi: str = Field(pattern=r"^[0-9]{15}$")


class AddSliceParams(BaseModel):
    model_config = ConfigDict(extra="forbid")
    sst: int = Field(ge=0, le=255)
    sd: str = "000001"


class AddTacParams(BaseModel):
    model_config = ConfigDict(extra="forbid")
    tac: int = Field(ge=0)
    area: int


class AddRouteParams(BaseModel):
    model_config = ConfigDict(extra="forbid")
    dest_cidr: str
    next_hop: str


class AttachUeParams(BaseModel):
    model_config = ConfigDict(extra="forbid")
    imsi: str = Field(pattern=r"^[0-9]{15}$")


@dataclass(frozen=True)
class Day2Action:
    name: str
    params_model: type[BaseModel]
    critical: bool = False


@dataclass(frozen=True)
class BlueprintType:
    tag: str
    description: str
    executable: bool = False
    config_model: Optional[type[BaseModel]] = None
    expand: Optional[Callable[[BlueprintCreate], list[NsTemplate]]] = None
    day2_actions: dict[str, Day2Action] = field(default_factory=dict)
    needs_cluster_when: Optional[str] = None  # config flag that switches to container NFs


def _actions(*actions: Day2Action) -> dict[str, Day2Action]:
    return {a.name: a for a in actions}


class BlueprintCatalog:
    def __init__(self, types: list[BlueprintType]):
        self._types = {t.tag: t for t in types}
        if len(self._types) != len(types):
            raise ValueError("duplicate blueprint type tag")

    def tags(self) -> set[str]:
        return set(self._types)

    def executable_tags(self) -> set[str]:
        return {t.tag for t in self._types.values() if t.executable}

    def get(self, tag: str) -> BlueprintType:
        if tag not in self._types:
            raise UnknownBlueprintType(f"no blueprint type {tag} in catalog")
        return self._types[tag]

    def get_executable(self, tag: str) -> BlueprintType:
        bp_type = self.get(tag)
        if not bp_type.executable:
            raise BlueprintTypeNotExecutable(f"{tag} is catalog metadata only")
        return bp_type

    def listing(self) -> list[dict]:
        return [
            {
                "tag": t.tag,
                "description": t.description,
                "executable": t.executable,
                "day2_actions": sorted(t.day2_actions),
            }
            for t in sorted(self._types.values(), key=lambda t: t.tag)
        ]


def default_catalog() -> BlueprintCatalog:
    executable = [
        BlueprintType(
            tag="K8s",
            description="Kubernetes cluster: one controller in the core area, a configurable worker count per area; on VMs or bare-metal",
            executable=True,
            config_model=expansion.K8sConfig,
            expand=expansion.expand_k8s,
            day2_actions=_actions(
                Day2Action("add_worker", AddWorkerParams, critical=True),
                Day2Action("install_plugin", InstallPluginParams),
            ),
        ),
        BlueprintType(
            tag="Free5GC",
            description="Open-source 5G core; VM-based or container-based control plane with per-area user planes",
            executable=True,
            config_model=expansion.Core5gConfig,
            expand=expansion.expand_free5gc,
            day2_actions=_actions(
                Day2Action("add_subscriber", AddSubscriberParams),
                Day2Action("add_slice", AddSliceParams),
                Day2Action("add_tac", AddTacParams),
            ),
            needs_cluster_when="containerized",
        ),
        BlueprintType(
            tag="Open5GS",
            description="Open-source EPC + 5G core; VM-based or container-based with per-area user planes",
            executable=True,
            config_model=expansion.Core5gConfig,
            expand=expansion.expand_open5gs,
            day2_actions=_actions(
                Day2Action("add_subscriber", AddSubscriberParams),
                Day2Action("add_slice", AddSliceParams),
                Day2Action("add_tac", AddTacParams),
            ),
            needs_cluster_when="containerized",
        ),
        BlueprintType(
            tag="VyOS",
            description="Software router instance per area",
            executable=True,
            config_model=expansion.VyosConfig,
            expand=expansion.expand_vyos,
            day2_actions=_actions(Day2Action("add_route", AddRouteParams)),
        ),
        BlueprintType(
            tag="UERANSIM",
            description="5G UE and gNodeB simulator attached as a physical-device endpoint",
            executable=True,
            config_model=expansion.UeransimConfig,
            expand=expansion.expand_ueransim,
            day2_actions=_actions(Day2Action("attach_ue", AttachUeParams)),
        ),
    ]
    metadata_only = [
        BlueprintType("AmariCallbox", "Commercial EPC/5GC/IMS with eNodeB/gNodeB radio heads"),
        BlueprintType("NextEPC", "Open-source 4G/5G core network"),
        BlueprintType("OpenAirInterface", "Open-source RAN and core network stack"),
        BlueprintType("ELK", "Log collection and analytics stack"),
        BlueprintType("OpenWrt", "Embedded Linux router image"),
        BlueprintType("OpenVSwitch", "Distributed multilayer software switch"),
        BlueprintType("S1Bypass", "Packet filter steering eNodeB traffic toward edge data centers"),
        BlueprintType("UeSimbox", "Multi-UE emulator appliance"),
        BlueprintType("TrexTrafficGen", "Software traffic generator as a service"),
        BlueprintType("Lwm2mVirtualObject", "Device-management virtual object for M2M scenarios"),
        BlueprintType("DesktopService", "Remote desktop sessions over HTTPS"),
        BlueprintType("Prometheus", "Metrics collection and alerting"),
        BlueprintType("WanDelayEmulator", "WAN link latency emulation"),
    ]
    return BlueprintCatalog(executable + metadata_only)
