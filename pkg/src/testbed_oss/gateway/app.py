"""HTTP service shell over a Platform.

Handlers validate input, apply the state change (or schedule it) and
return documents; all progression of long-running work happens when sim
time advances. Mutating routes honor an Idempotency-Key header: replaying
a request with the same key returns the original response byte for byte.
"""

from __future__ import annotations

import json
from typing import Any, Callable

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, Response
from pydantic import BaseModel, ConfigDict, ValidationError

from ..errors import BadRequest, OssError, SchemaViolation, UnknownSboss
from ..metalcl.models import PowerState, StackPlan
from ..models import Area, QosProfile, ResourceBudget, SliceRequest, SliceState
from ..platform import Platform
from ..sim.inventory import builtin_inventory, load_inventory
from .routes import ROUTES, ApiRoute, emit_api_description

IDEMPOTENCY = "idempotency"

Handler = Callable[[Platform, dict], tuple[int | None, Any]]


class TenantCreate(BaseModel):
    model_config = ConfigDict(extra="forbid")
    name: str
    quota: ResourceBudget
    vlan_block: int = 100


class SbossOnboard(BaseModel):
    model_config = ConfigDict(extra="forbid")
    endpoint: str
    areas_served: list[int]
    capabilities: list[str]
    default_nets: dict[str, str] = {}


class SliceModify(BaseModel):
    model_config = ConfigDict(extra="forbid")
    qos: QosProfile | None = None
    coverage_areas: list[int] | None = None


class DeployBody(BaseModel):
    model_config = ConfigDict(extra="forbid")
    image: str
    tenant_id: str


class PowerBody(BaseModel):
    model_config = ConfigDict(extra="forbid")
    power: PowerState


class OverlayCreate(BaseModel):
    model_config = ConfigDict(extra="forbid")
    name: str
    tenant_id: str
    machines: list[str]


class NetworkCreate(BaseModel):
    model_config = ConfigDict(extra="forbid")
    name: str
    cidr: str
    mode: str = "layer2"
    owner: str = "shared"


class VimRegister(BaseModel):
    model_config = ConfigDict(extra="forbid")
    name: str
    capacity: ResourceBudget
    areas: list[int] | None = None


class AdvanceBody(BaseModel):
    model_config = ConfigDict(extra="forbid")
    dt: float


class FaultsBody(BaseModel):
    model_config = ConfigDict(extra="forbid")
    rules: list[dict]
    seed: int | None = None


class SbProcessBody(BaseModel):
    model_config = ConfigDict(extra="forbid")
    sboss_id: str
    slice_id: str
    sub_request: SliceRequest


def _parse(model: type[BaseModel], body: Any) -> BaseModel:
    try:
        return model.model_validate(body or {})
    except ValidationError as exc:
        raise SchemaViolation(str(exc)) from exc


def _tenant_header(ctx: dict, body_tenant: str | None) -> str | None:
    header = ctx["headers"].get("x-tenant")
    if header and body_tenant and header != body_tenant:
        raise BadRequest(f"X-Tenant header {header} does not match body tenant {body_tenant}")
    return header or body_tenant


# -- handlers (named after their route) ------------------------------------------------


def tenants_create(p: Platform, ctx: dict):
    req = _parse(TenantCreate, ctx["body"])
    tenant = p.tenants.create_tenant(req.name, req.quota, block=req.vlan_block)
    return None, tenant.dump()


def tenants_list(p: Platform, ctx: dict):
    return None, [t.dump() for t in p.tenants.list_tenants()]


def tenants_get(p: Platform, ctx: dict):
    return None, p.tenants.get_tenant(ctx["path"]["tenant_id"]).dump()


def tenants_usage(p: Platform, ctx: dict):
    return None, {k: v.dump() for k, v in p.tenants.usage(ctx["path"]["tenant_id"]).items()}


def areas_create(p: Platform, ctx: dict):
    area = _parse(Area, ctx["body"])
    return None, p.tenants.register_area(area).dump()


def areas_list(p: Platform, ctx: dict):
    return None, [a.dump() for a in p.tenants.list_areas()]


def sboss_onboard(p: Platform, ctx: dict):
    req = _parse(SbossOnboard, ctx["body"])
    return None, p.nb.onboard_sboss(req.endpoint, req.areas_served, req.capabilities, req.default_nets)


def sboss_list(p: Platform, ctx: dict):
    return None, p.nb.list_sboss()


def slices_create(p: Platform, ctx: dict):
    body = dict(ctx["body"] or {})
    tenant = _tenant_header(ctx, body.get("tenant_id"))
    if tenant:
        body["tenant_id"] = tenant
    if "request_id" not in body:
        body["request_id"] = p.store.next_id("request", "req")
    req = _parse(SliceRequest, body)
    return None, p.nb.submit_slice(req)


def slices_list(p: Platform, ctx: dict):
    return None, p.nb.list_slices()


def slices_get(p: Platform, ctx: dict):
    return None, p.nb.get_slice(ctx["path"]["slice_id"])


def slices_modify(p: Platform, ctx: dict):
    req = _parse(SliceModify, ctx["body"])
    return None, p.nb.modify_slice(ctx["path"]["slice_id"], qos=req.qos, coverage_areas=req.coverage_areas)


def slices_terminate(p: Platform, ctx: dict):
    record = p.nb.terminate_slice(ctx["path"]["slice_id"])
    status = 202 if record["state"] == SliceState.TERMINATING.value else 200
    return status, record


def sb_profile(p: Platform, ctx: dict):
    sboss_id = ctx["query"].get("sboss_id")
    records = p.nb.list_sboss()
    if sboss_id is None and records:
        sboss_id = records[0]["sboss_id"]
    if sboss_id is None:
        raise UnknownSboss("no domain onboarded")
    return None, p.sb.domain_profile(sboss_id).dump()


def sb_slices_process(p: Platform, ctx: dict):
    req = _parse(SbProcessBody, ctx["body"])
    p.nb.get_sboss(req.sboss_id)
    p.sim.schedule("sb_process", {
        "slice_id": req.slice_id, "sboss_id": req.sboss_id, "sub_request": req.sub_request.dump(),
    }, 0.0)
    return None, {"accepted": True, "slice_id": req.slice_id}


def sb_slices_modify(p: Platform, ctx: dict):
    return slices_modify(p, ctx)


def sb_slices_deinstantiate(p: Platform, ctx: dict):
    record = p.sb.deinstantiate_slice(ctx["path"]["slice_id"])
    status = 202 if record["state"] == SliceState.TERMINATING.value else 200
    return status, record


def catalog_list(p: Platform, ctx: dict):
    return None, p.catalog.listing()


def blueprints_create(p: Platform, ctx: dict):
    tenant = ctx["headers"].get("x-tenant", "operator")
    doc = p.engine.create_blueprint(
        ctx["body"] or {}, tenant_id=tenant, operator_owned=True, op_key=ctx["idempotency_key"],
    )
    return None, doc


def blueprints_list(p: Platform, ctx: dict):
    return None, p.engine.list_instances()


def blueprints_get(p: Platform, ctx: dict):
    return None, p.engine.get(ctx["path"]["instance_id"])


def blueprints_update(p: Platform, ctx: dict):
    return None, p.engine.update_blueprint(
        ctx["path"]["instance_id"], ctx["body"] or {}, op_key=ctx["idempotency_key"],
    )


def blueprints_destroy(p: Platform, ctx: dict):
    force = ctx["query"].get("force", "false").lower() in ("1", "true", "yes")
    doc = p.engine.destroy_blueprint(ctx["path"]["instance_id"], force=force, op_key=ctx["idempotency_key"])
    status = 202 if doc["state"] == "DESTROYING" else 200
    return status, doc


def blueprints_day2(p: Platform, ctx: dict):
    return None, p.engine.day2_execute(
        ctx["path"]["instance_id"], ctx["path"]["action"], ctx["body"] or {},
        op_key=ctx["idempotency_key"],
    )


def blueprints_operation(p: Platform, ctx: dict):
    return None, p.engine.fetch_operation(ctx["path"]["instance_id"], ctx["path"]["op_id"])


def topology_get(p: Platform, ctx: dict):
    return None, p.topology.view()


def topology_networks_create(p: Platform, ctx: dict):
    req = _parse(NetworkCreate, ctx["body"])
    return None, p.topology.create_network(req.name, req.cidr, req.mode, owner=req.owner)


def topology_vims_register(p: Platform, ctx: dict):
    req = _parse(VimRegister, ctx["body"])
    return None, p.topology.register_vim(req.name, req.capacity, req.areas, source="static")


def machines_enlist(p: Platform, ctx: dict):
    return None, [m.dump() for m in p.fleet.enlist_fleet()]


def machines_list(p: Platform, ctx: dict):
    return None, [m.dump() for m in p.fleet.list_machines()]


def machines_get(p: Platform, ctx: dict):
    return None, p.fleet.get(ctx["path"]["machine_id"]).dump()


def machines_commission(p: Platform, ctx: dict):
    return None, p.fleet.commission(ctx["path"]["machine_id"]).dump()


def machines_deploy(p: Platform, ctx: dict):
    req = _parse(DeployBody, ctx["body"])
    return None, p.fleet.deploy_os(ctx["path"]["machine_id"], req.image, req.tenant_id).dump()


def machines_release(p: Platform, ctx: dict):
    return None, p.fleet.release(ctx["path"]["machine_id"]).dump()


def machines_power(p: Platform, ctx: dict):
    req = _parse(PowerBody, ctx["body"])
    return None, p.fleet.set_power(ctx["path"]["machine_id"], req.power).dump()


def metal_topology(p: Platform, ctx: dict):
    return None, p.discover_topology().dump()


def overlays_create(p: Platform, ctx: dict):
    req = _parse(OverlayCreate, ctx["body"])
    return None, p.overlays.create_overlay(req.name, req.tenant_id, req.machines).dump()


def overlays_list(p: Platform, ctx: dict):
    return None, [o.dump() for o in p.overlays.list_overlays()]


def stacks_install(p: Platform, ctx: dict):
    plan = _parse(StackPlan, ctx["body"])
    return None, p.stacks.install_stack(plan)


def stacks_list(p: Platform, ctx: dict):
    return None, p.stacks.list_stacks()


def stacks_get(p: Platform, ctx: dict):
    return None, p.stacks.get(ctx["path"]["stack_id"])


def sim_advance(p: Platform, ctx: dict):
    req = _parse(AdvanceBody, ctx["body"])
    if req.dt < 0:
        raise BadRequest("dt must be >= 0")
    fired = p.advance(req.dt)
    return None, {"now": p.sim.now(), "fired": len(fired)}


def sim_events(p: Platform, ctx: dict):
    cursor = int(ctx["query"].get("cursor", "0"))
    if cursor < 0:
        raise BadRequest("cursor must be >= 0")
    events = p.sim.events(after=cursor)
    new_cursor = events[-1]["seq"] if events else cursor
    return None, {"events": events, "cursor": new_cursor, "log_hash": p.sim.log_hash()}


def sim_faults(p: Platform, ctx: dict):
    req = _parse(FaultsBody, ctx["body"])
    return None, p.sim.set_faults(req.rules, seed=req.seed)


def sim_inventory(p: Platform, ctx: dict):
    body = ctx["body"] or {}
    if "builtin" in body:
        inventory = builtin_inventory(body["builtin"])
    else:
        inventory = load_inventory(body.get("document", body))
    p.sim.load_inventory(inventory)
    p.fleet.enlist_fleet()
    return None, {"servers": len(inventory.servers), "switches": len(inventory.switches)}


def sim_usage(p: Platform, ctx: dict):
    return None, p.usage_snapshot()


def api_description(p: Platform, ctx: dict):
    return None, emit_api_description()


HANDLERS: dict[str, Handler] = {
    route.name: globals()[route.name.replace("-", "_")] for route in ROUTES
}


def create_app(platform: Platform) -> FastAPI:
    app = FastAPI(title="testbed-oss gateway", version="0.1.0")
    app.state.platform = platform
    if platform.sim.inventory() is not None:
        platform.fleet.enlist_fleet()
    for route in ROUTES:
        app.add_api_route(
            route.path,
            _make_endpoint(platform, route, HANDLERS[route.name]),
            methods=[route.verb],
            name=route.name,
            operation_id=route.name,
            summary=route.summary,
        )
    return app


def _make_endpoint(platform: Platform, route: ApiRoute, handler: Handler):
    async def endpoint(request: Request) -> Response:
        try:
            raw = await request.body()
            body = json.loads(raw) if raw else None
        except json.JSONDecodeError:
            return _error_response(400, "SchemaViolation", "request body is not valid JSON")

        ctx = {
            "path": dict(request.path_params),
            "query": dict(request.query_params),
            "headers": {k.lower(): v for k, v in request.headers.items()},
            "body": body,
            "idempotency_key": request.headers.get("Idempotency-Key"),
        }

        key = ctx["idempotency_key"] if (route.mutating and route.accepts_idempotency_key) else None
        if key is not None:
            stored = platform.store.try_get(IDEMPOTENCY, f"{route.name}:{key}")
            if stored is not None:
                return JSONResponse(status_code=stored.body["status"], content=stored.body["body"])

        try:
            status, payload = handler(platform, ctx)
            status = status or route.success_status
        except OssError as exc:
            status, payload = exc.http_status, exc.to_dict()

        if route.mutating:
            platform.sim.log("api", route.name, "api_request", {
                "path": request.url.path, "status": status,
            })
        if key is not None:
            try:
                platform.store.insert(IDEMPOTENCY, f"{route.name}:{key}", {"status": status, "body": payload})
            except OssError:
                stored = platform.store.get(IDEMPOTENCY, f"{route.name}:{key}")
                return JSONResponse(status_code=stored.body["status"], content=stored.body["body"])
        return JSONResponse(status_code=status, content=payload)

    return endpoint


def _error_response(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": code, "message": message})
