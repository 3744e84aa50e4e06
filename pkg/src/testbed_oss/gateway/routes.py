"""Route table: the single source of truth for the REST surface.

Create maps to POST, read to GET, update to PUT, delete to DELETE. The
machine-readable API description is generated from this table (stable
ordering, canonical encoding), and the verb-discipline check in the test
suite scans it: no mutating handler may sit behind a GET.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..canonical import canonical_bytes


@dataclass(frozen=True)
class ApiRoute:
    name: str
    verb: str
    path: str
    summary: str
    mutating: bool
    success_status: int = 200
    errors: tuple[int, ...] = ()
    accepts_idempotency_key: bool = False


ROUTES: list[ApiRoute] = [
    # administrative registries
    ApiRoute("tenants-create", "POST", "/admin/tenants", "Create a tenant space with an exclusive VLAN block", True, 201, (400, 409), True),
    ApiRoute("tenants-list", "GET", "/admin/tenants", "List tenant spaces", False),
    ApiRoute("tenants-get", "GET", "/admin/tenants/{tenant_id}", "Fetch one tenant space", False, 200, (404,)),
    ApiRoute("tenants-usage", "GET", "/admin/tenants/{tenant_id}/usage", "Per-tenant resource usage ledger", False, 200, (404,)),
    ApiRoute("areas-create", "POST", "/admin/areas", "Register a numbered geographic area", True, 201, (400, 409), True),
    ApiRoute("areas-list", "GET", "/admin/areas", "List registered areas", False),
    # north-bound
    ApiRoute("sboss-onboard", "POST", "/nb/sboss", "Onboard an SB domain with served areas and capabilities", True, 201, (400, 409), True),
    ApiRoute("sboss-list", "GET", "/nb/sboss", "List onboarded SB domains", False),
    ApiRoute("slices-create", "POST", "/nb/slices", "Submit a slice request; negotiation proceeds with sim time", True, 201, (400, 409), True),
    ApiRoute("slices-list", "GET", "/nb/slices", "List slice records", False),
    ApiRoute("slices-get", "GET", "/nb/slices/{slice_id}", "Fetch one slice record", False, 200, (404,)),
    ApiRoute("slices-modify", "PUT", "/nb/slices/{slice_id}", "Modify QoS and/or coverage areas of an active slice", True, 202, (400, 404, 409), True),
    ApiRoute("slices-terminate", "DELETE", "/nb/slices/{slice_id}", "Terminate a slice; returns 202 while teardown runs", True, 202, (404, 409), True),
    # south-bound
    ApiRoute("sb-profile", "GET", "/sb/profile", "Programmability profile of a domain", False, 200, (404,)),
    ApiRoute("sb-slices-process", "POST", "/sb/slices", "Process a sub-request directly against one domain", True, 202, (400, 404, 409), True),
    ApiRoute("sb-slices-modify", "PUT", "/sb/slices/{slice_id}", "Domain-level slice modification", True, 202, (400, 404, 409), True),
    ApiRoute("sb-slices-deinstantiate", "DELETE", "/sb/slices/{slice_id}", "Domain-level slice deinstantiation", True, 202, (404, 409), True),
    # NFV convergence layer
    ApiRoute("catalog-list", "GET", "/nfvcl/catalog", "Blueprint type catalog", False),
    ApiRoute("blueprints-create", "POST", "/nfvcl/blueprints", "Create a blueprint instance", True, 201, (400, 404, 409), True),
    ApiRoute("blueprints-list", "GET", "/nfvcl/blueprints", "List blueprint instances", False),
    ApiRoute("blueprints-get", "GET", "/nfvcl/blueprints/{instance_id}", "Fetch one blueprint instance", False, 200, (404,)),
    ApiRoute("blueprints-update", "PUT", "/nfvcl/blueprints/{instance_id}", "Apply a config delta to a ready instance", True, 202, (400, 404, 409), True),
    ApiRoute("blueprints-destroy", "DELETE", "/nfvcl/blueprints/{instance_id}", "Destroy an instance (Day-N)", True, 202, (404, 409), True),
    ApiRoute("blueprints-day2", "POST", "/nfvcl/blueprints/{instance_id}/day2/{action}", "Run a named day-2 action", True, 202, (400, 404, 409), True),
    ApiRoute("blueprints-operation", "GET", "/nfvcl/blueprints/{instance_id}/operations/{op_id}", "Fetch a day-2 operation record", False, 200, (404,)),
    ApiRoute("topology-get", "GET", "/nfvcl/topology", "Virtual topology: networks, VIMs, clusters", False),
    ApiRoute("topology-networks-create", "POST", "/nfvcl/topology/networks", "Create a network and realize it on the VIMs", True, 201, (400, 409), True),
    ApiRoute("topology-vims-register", "POST", "/nfvcl/topology/vims", "Statically onboard a VIM record", True, 201, (400, 409), True),
    # metal convergence layer
    ApiRoute("machines-enlist", "POST", "/metalcl/machines/enlist", "Enlist inventory servers as machines (idempotent)", True, 200, (), True),
    ApiRoute("machines-list", "GET", "/metalcl/machines", "List machines", False),
    ApiRoute("machines-get", "GET", "/metalcl/machines/{machine_id}", "Fetch one machine", False, 200, (404,)),
    ApiRoute("machines-commission", "POST", "/metalcl/machines/{machine_id}/commission", "Power on and probe a NEW machine", True, 202, (404, 409), True),
    ApiRoute("machines-deploy", "POST", "/metalcl/machines/{machine_id}/deploy", "Install an OS for a tenant", True, 202, (400, 404, 409), True),
    ApiRoute("machines-release", "POST", "/metalcl/machines/{machine_id}/release", "Release a deployed machine back to the pool", True, 202, (404, 409), True),
    ApiRoute("machines-power", "POST", "/metalcl/machines/{machine_id}/power", "Set machine power state", True, 200, (400, 404), True),
    ApiRoute("metal-topology", "GET", "/metalcl/topology", "Physical topology discovered via LLDP", False),
    ApiRoute("overlays-create", "POST", "/metalcl/overlays", "Create a tenant overlay network", True, 201, (400, 404, 409), True),
    ApiRoute("overlays-list", "GET", "/metalcl/overlays", "List overlay networks", False),
    ApiRoute("stacks-install", "POST", "/metalcl/stacks", "Install an IaaS/PaaS stack over deployed machines", True, 202, (400, 404, 409), True),
    ApiRoute("stacks-list", "GET", "/metalcl/stacks", "List stack installs", False),
    ApiRoute("stacks-get", "GET", "/metalcl/stacks/{stack_id}", "Fetch one stack install", False, 200, (404,)),
    # simulation control (test-only namespace)
    ApiRoute("sim-advance", "POST", "/sim/advance", "Advance simulated time", True, 200, (400,)),
    ApiRoute("sim-events", "GET", "/sim/events", "Event feed after a cursor", False),
    ApiRoute("sim-faults", "POST", "/sim/faults", "Replace the scripted fault profile", True, 200, (400,)),
    ApiRoute("sim-inventory", "POST", "/sim/inventory", "Load an inventory document or builtin fixture", True, 200, (400,)),
    ApiRoute("sim-usage", "GET", "/sim/usage", "Combined resource usage snapshot", False),
    # meta
    ApiRoute("api-description", "GET", "/api/description", "Machine-readable description of every route", False),
]


def route_by_name(name: str) -> ApiRoute:
    for route in ROUTES:
        if route.name == name:
            return route
    raise KeyError(name)


def emit_api_description() -> dict:
    """Deterministic OpenAPI-style document built from the route table."""
    paths: dict[str, dict] = {}
    for route in sorted(ROUTES, key=lambda r: (r.path, r.verb)):
        responses = {str(route.success_status): {"description": "success"}}
        for status in route.errors:
            responses[str(status)] = {"description": "error"}
        entry = {
            "operationId": route.name,
            "summary": route.summary,
            "responses": dict(sorted(responses.items())),
            "x-mutating": route.mutating,
        }
        if route.accepts_idempotency_key:
            entry["x-idempotency-key-header"] = "Idempotency-Key"
        paths.setdefault(route.path, {})[route.verb.lower()] = entry
    return {
        "openapi": "3.1.0",
        "info": {"title": "testbed-oss gateway", "version": "0.1.0"},
        "paths": {k: dict(sorted(v.items())) for k, v in sorted(paths.items())},
    }


def api_description_bytes() -> bytes:
    return canonical_bytes(emit_api_description())
