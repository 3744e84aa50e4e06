"""Config -> per-area network-service templates.

The expansion rule is shared by every executable blueprint type: the
request names exactly one core-flagged area which hosts the control
components, and every additional area gets an edge service. How many NFs
and of which kind land in each service is the per-type part, driven by the
request parameters (worker replicas, containerized or VM core, ...).
"""

from __future__ import annotations

from pydantic import BaseModel, ConfigDict, Field

from ..errors import MultipleCoreAreas, NoCoreArea, SchemaViolation
from .models import (
    AreaSpec,
    BlueprintCreate,
    NetworkEndpoints,
    NfKind,
    NsTemplate,
    VduSpec,
    VirtualLink,
    VnfDescriptor,
)


class _ConfigBase(BaseModel):
    model_config = ConfigDict(extra="forbid")
    network_endpoints: NetworkEndpoints
    qos: dict | None = None


class K8sConfig(_ConfigBase):
    version: str = "1.24"


class Core5gConfig(_ConfigBase):
    version: str = "v1"
    containerized: bool = False
    plmn: str = "00101"


class VyosConfig(_ConfigBase):
    pass


class UeransimConfig(_ConfigBase):
    target_core: str | None = None


def core_area(areas: list[AreaSpec]) -> AreaSpec:
    flagged = [a for a in areas if a.core]
    if not flagged:
        raise NoCoreArea("exactly one area must be flagged core")
    if len(flagged) > 1:
        raise MultipleCoreAreas(f"areas {sorted(a.id for a in flagged)} all flagged core")
    return flagged[0]


def _links(endpoints: NetworkEndpoints) -> list[VirtualLink]:
    links = [VirtualLink(name="mgt", net_name=endpoints.mgt)]
    for i, net in enumerate(endpoints.data_nets):
        links.append(VirtualLink(name=f"data{i}", net_name=net.net_name))
    return links


def _cps(endpoints: NetworkEndpoints) -> list[str]:
    return ["mgt"] + [f"data{i}" for i in range(len(endpoints.data_nets))]


def expand_k8s(body: BlueprintCreate) -> list[NsTemplate]:
    config = K8sConfig.model_validate(body.config)
    core = core_area(body.areas)
    image = f"k8s-node-{config.version}"
    templates = []
    for area in sorted(body.areas, key=lambda a: a.id):
        vdus = []
        if area.id == core.id:
            vdus.append(VduSpec(name="controller-0", vcpus=4, ram_gb=8, storage_gb=40, image=image))
        vdus.extend(
            VduSpec(name=f"worker-{i}", vcpus=2, ram_gb=4, storage_gb=20, image=image)
            for i in range(area.workers_replica)
        )
        templates.append(
            NsTemplate(
                area_id=area.id,
                role="core" if area.id == core.id else "edge",
                name=f"k8s-a{area.id}",
                vnfs=[
                    VnfDescriptor(
                        vnfd_id=f"k8s-a{area.id}",
                        kind=NfKind.VNF,
                        vdus=vdus,
                        connection_points=_cps(config.network_endpoints),
                    )
                ],
                virtual_links=_links(config.network_endpoints),
            )
        )
    return templates


def _expand_core5g(body: BlueprintCreate, stack_name: str, chart: str) -> list[NsTemplate]:
    config = Core5gConfig.model_validate(body.config)
    core = core_area(body.areas)
    templates = []
    for area in sorted(body.areas, key=lambda a: a.id):
        if area.id == core.id:
            name, role = f"{stack_name}-core-a{area.id}", "core"
            if config.containerized:
                vnf = VnfDescriptor(
                    vnfd_id=f"{stack_name}-core-a{area.id}",
                    kind=NfKind.KNF,
                    chart_ref=f"{chart}:{config.version}",
                    chart_values={"plmn": config.plmn, "mode": "core"},
                    connection_points=_cps(config.network_endpoints),
                )
            else:
                vnf = VnfDescriptor(
                    vnfd_id=f"{stack_name}-core-a{area.id}",
                    kind=NfKind.VNF,
                    vdus=[VduSpec(name="core5g-0", vcpus=4, ram_gb=8, storage_gb=20, image=f"{stack_name}-{config.version}")],
                    connection_points=_cps(config.network_endpoints),
                )
        else:
            name, role = f"{stack_name}-upf-a{area.id}", "edge"
            if config.containerized:
                vnf = VnfDescriptor(
                    vnfd_id=f"{stack_name}-upf-a{area.id}",
                    kind=NfKind.KNF,
                    chart_ref=f"{chart}-upf:{config.version}",
                    chart_values={"plmn": config.plmn, "mode": "upf"},
                    connection_points=_cps(config.network_endpoints),
                )
            else:
                vnf = VnfDescriptor(
                    vnfd_id=f"{stack_name}-upf-a{area.id}",
                    kind=NfKind.VNF,
                    vdus=[VduSpec(name="upf-0", vcpus=2, ram_gb=4, storage_gb=10, image=f"{stack_name}-upf-{config.version}")],
                    connection_points=_cps(config.network_endpoints),
                )
        templates.append(
            NsTemplate(area_id=area.id, role=role, name=name, vnfs=[vnf],
                       virtual_links=_links(config.network_endpoints))
        )
    return templates


def expand_free5gc(body: BlueprintCreate) -> list[NsTemplate]:
    return _expand_core5g(body, "free5gc", "charts/free5gc")


def expand_open5gs(body: BlueprintCreate) -> list[NsTemplate]:
    return _expand_core5g(body, "open5gs", "charts/open5gs")


def expand_vyos(body: BlueprintCreate) -> list[NsTemplate]:
    config = VyosConfig.model_validate(body.config)
    core = core_area(body.areas)
    return [
        NsTemplate(
            area_id=area.id,
            role="core" if area.id == core.id else "edge",
            name=f"vyos-a{area.id}",
            vnfs=[
                VnfDescriptor(
                    vnfd_id=f"vyos-a{area.id}",
                    kind=NfKind.VNF,
                    vdus=[VduSpec(name="router-0", vcpus=1, ram_gb=2, storage_gb=8, image="vyos-rolling")],
                    connection_points=_cps(config.network_endpoints),
                )
            ],
            virtual_links=_links(config.network_endpoints),
        )
        for area in sorted(body.areas, key=lambda a: a.id)
    ]


def expand_ueransim(body: BlueprintCreate) -> list[NsTemplate]:
    config = UeransimConfig.model_validate(body.config)
    core = core_area(body.areas)
    return [
        NsTemplate(
            area_id=area.id,
            role="core" if area.id == core.id else "edge",
            name=f"ueransim-a{area.id}",
            vnfs=[
                VnfDescriptor(
                    vnfd_id=f"ueransim-a{area.id}",
                    kind=NfKind.PNF,
                    device_ref=f"radio-sim-a{area.id}",
                    connection_points=_cps(config.network_endpoints),
                )
            ],
            virtual_links=_links(config.network_endpoints),
        )
        for area in sorted(body.areas, key=lambda a: a.id)
    ]


def validate_create_body(body: dict, config_model: type[BaseModel]) -> BlueprintCreate:
    """Parse a raw create request against the type's schema, rejecting
    unknown fields; area-list shape errors surface here too."""
    try:
        create = BlueprintCreate.model_validate(body)
        config_model.model_validate(create.config)
    except (ValueError, TypeError) as exc:
        raise SchemaViolation(str(exc)) from exc
    if not create.areas:
        raise SchemaViolation("areas must be non-empty")
    ids = [a.id for a in create.areas]
    if len(set(ids)) != len(ids):
        raise SchemaViolation("duplicate area id in request")
    return create
