from __future__ import annotations

import pytest

from testbed_oss.models import Area, AreaKind, QosProfile, ResourceBudget, SliceRequest
from testbed_oss.platform import Platform
from testbed_oss.store import MemoryStore


@pytest.fixture()
def store():
    return MemoryStore()


@pytest.fixture()
def platform():
    return Platform(inventory="minimal")


@pytest.fixture()
def lab_platform():
    return Platform(inventory="lab22")


@pytest.fixture()
def rigged_platform():
    """Platform with areas 1/2/3, one tenant, a control network and an
    onboarded full-capability domain: ready for slice requests."""
    p = Platform(inventory="lab22")
    p.tenants.register_area(Area(id=1, name="core-dc", kind=AreaKind.CORE))
    p.tenants.register_area(Area(id=2, name="edge-dc", kind=AreaKind.EDGE))
    p.tenants.register_area(Area(id=3, name="edge-annex", kind=AreaKind.EDGE))
    tenant = p.tenants.create_tenant("acme", ResourceBudget(vcpus=400, ram_gb=1024, storage_gb=40000))
    p.topology.create_network("control", "10.0.0.0/24", "layer2")
    p.nb.onboard_sboss(
        "http://sb-a.local", [1, 2, 3], ["metal", "iaas", "paas", "nfv"],
        {"mgt": "control", "data": "control"},
    )
    p.test_tenant = tenant
    return p


def make_request(tenant_id: str, areas: list[int], slice_type: str = "K8s",
                 request_id: str = "req-x", compute: ResourceBudget | None = None) -> SliceRequest:
    return SliceRequest(
        request_id=request_id,
        tenant_id=tenant_id,
        slice_type=slice_type,
        coverage_areas=areas,
        compute=compute or ResourceBudget(vcpus=6, ram_gb=12, storage_gb=60),
        qos=QosProfile(bandwidth_mbps=50),
    )


FIG4_BODY = {
    "type": "K8s",
    "config": {
        "version": "1.24",
        "network_endpoints": {
            "mgt": "control",
            "data_nets": [{"mode": "layer2", "net_name": "control"}],
        },
    },
    "areas": [{"id": 3, "core": True, "workers_replica": 1}],
}


@pytest.fixture()
def fig4_body():
    import copy

    return copy.deepcopy(FIG4_BODY)
