"""Per-instance descriptor package generation.

Packages are regenerated from the instance's current expansion every time
its composition changes, then onboarded content-addressed: identical
content is a no-op, new content becomes a new revision the orchestrator can
apply to a running service in place.
"""

from __future__ import annotations

from ..canonical import content_hash
from ..errors import DanglingLinkRef, DanglingVnfdRef
from .models import NsTemplate


def build_package(instance_id: str, template: NsTemplate) -> dict:
    """One package per network service: the NSD plus every VNFD it references."""
    vnfds = []
    for vnf in template.vnfs:
        vnf.check_kind_invariants()
        vnfds.append(vnf.dump())
    nsd = {
        "nsd_id": f"{instance_id}-a{template.area_id}",
        "name": f"{instance_id}-{template.name}",
        "vnfd_refs": [v["vnfd_id"] for v in vnfds],
        "virtual_links": [{"name": vl.name, "net_name": vl.net_name} for vl in template.virtual_links],
        "area_id": template.area_id,
    }
    return {"nsd": nsd, "vnfds": vnfds}


def validate_package(package: dict, known_networks: set[str]) -> None:
    """Reference validation: vnfd_refs resolve inside the package and every
    virtual link targets an existing topology network."""
    vnfd_ids = {v["vnfd_id"] for v in package.get("vnfds", [])}
    nsd = package.get("nsd", {})
    for ref in nsd.get("vnfd_refs", []):
        if ref not in vnfd_ids:
            raise DanglingVnfdRef(f"nsd {nsd.get('nsd_id')} references missing vnfd {ref}")
    for link in nsd.get("virtual_links", []):
        if link["net_name"] not in known_networks:
            raise DanglingLinkRef(f"virtual link {link['name']} targets unknown network {link['net_name']}")


def package_hash(package: dict) -> str:
    return content_hash(package)


def build_validated(instance_id: str, template: NsTemplate, known_networks: set[str]) -> tuple[dict, str]:
    package = build_package(instance_id, template)
    validate_package(package, known_networks)
    return package, package_hash(package)
