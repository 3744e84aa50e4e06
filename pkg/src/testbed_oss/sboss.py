"""SB core: per-administrative-domain slice processing.

Turns a sub-request into blueprint actions (reuse an existing instance of
the same type/tenant whose areas cover the request, otherwise instantiate a
fresh one), executes them with quota gating and compensation on mid-plan
failure, and reports readiness back to the north side once every touched
instance settles.
"""

from __future__ import annotations

from enum import Enum
from typing import Optional

from pydantic import Field

from .errors import (
    InvalidState,
    LayerDisabled,
    NoMatchingBlueprintType,
    OssError,
    UnknownSlice,
)
from .models import OssModel, QosProfile, ResourceBudget, SliceRequest
from .nfvcl.catalog import BlueprintCatalog
from .nfvcl.engine import BlueprintEngine, LIVE_STATES
from .nfvcl.models import InstanceState
from .store import DocumentStore
from .sim.substrate import Substrate
from .tenancy import TenantService

NEGOTIATIONS = "negotiations"
WATCHES = "bpwatch"

LAYERS = ("metal", "iaas", "paas", "nfv")


class ProgrammabilityProfile(OssModel):
    layers_enabled: list[str] = Field(default_factory=list)

    def has(self, layer: str) -> bool:
        return layer in self.layers_enabled


def validate_capabilities(capabilities: list[str]) -> ProgrammabilityProfile:
    caps = set(capabilities)
    unknown = caps - set(LAYERS)
    if unknown:
        raise InvalidState(f"unknown capabilities: {sorted(unknown)}")
    if "nfv" in caps and not caps & {"iaas", "paas"}:
        raise InvalidState("nfv capability requires iaas or paas")
    if "paas" in caps and not caps & {"iaas", "metal"}:
        raise InvalidState("paas capability requires iaas (VM-based) or metal (bare-metal)")
    return ProgrammabilityProfile(layers_enabled=sorted(caps))


class ActionKind(str, Enum):
    INSTANTIATE = "INSTANTIATE"
    UPDATE = "UPDATE"


class BlueprintAction(OssModel):
    kind: ActionKind
    blueprint_type: str
    target_instance: Optional[str] = None
    config: dict
    reason: str = ""


def _pick_core_area(area_ids: list[int], area_kinds: dict[int, str]) -> int:
    """Prefer a registry-flagged core area; fall back to the smallest id."""
    core_flagged = sorted(a for a in area_ids if area_kinds.get(a) == "core")
    return core_flagged[0] if core_flagged else min(area_ids)


def build_blueprint_config(
    sub_request: SliceRequest,
    area_kinds: dict[int, str],
    default_nets: dict[str, str],
) -> dict:
    core = _pick_core_area(sub_request.coverage_areas, area_kinds)
    mgt = default_nets.get("mgt", "control")
    data = default_nets.get("data", mgt)
    return {
        "type": sub_request.slice_type,
        "config": {
            "network_endpoints": {
                "mgt": mgt,
                "data_nets": [{"mode": "layer2", "net_name": data}],
            },
            "qos": sub_request.qos.dump(),
        },
        "areas": [
            {"id": a, "core": a == core, "workers_replica": 1}
            for a in sub_request.coverage_areas
        ],
    }


def plan_slice(
    sub_request: SliceRequest,
    profile: ProgrammabilityProfile,
    catalog: BlueprintCatalog,
    live: list[dict],
    area_kinds: dict[int, str],
    default_nets: dict[str, str] | None = None,
) -> list[BlueprintAction]:
    """Pure planning: same inputs, same actions. Reuse rule: one UPDATE when a
    live same-type, same-tenant instance already covers every requested
    area; otherwise one INSTANTIATE covering them all."""
    if not profile.has("nfv"):
        raise LayerDisabled("this domain has no nfv layer enabled")
    if sub_request.slice_type not in catalog.executable_tags():
        raise NoMatchingBlueprintType(f"no executable blueprint type {sub_request.slice_type}")

    wanted = set(sub_request.coverage_areas)
    candidates = [
        inst for inst in live
        if inst["type_tag"] == sub_request.slice_type
        and inst["tenant_id"] == sub_request.tenant_id
        and inst["state"] in LIVE_STATES
        and wanted <= set(inst["areas"])
    ]
    config = build_blueprint_config(sub_request, area_kinds, default_nets or {})
    if candidates:
        target = min(candidates, key=lambda i: i["instance_id"])
        merged = dict(target["body"])
        merged_config = dict(merged["config"])
        merged_config["qos"] = sub_request.qos.dump()
        return [
            BlueprintAction(
                kind=ActionKind.UPDATE,
                blueprint_type=sub_request.slice_type,
                target_instance=target["instance_id"],
                config={"config": merged_config},
                reason=f"instance {target['instance_id']} already covers areas {sorted(wanted)}",
            )
        ]
    return [
        BlueprintAction(
            kind=ActionKind.INSTANTIATE,
            blueprint_type=sub_request.slice_type,
            config=config,
            reason=f"no live instance covers areas {sorted(wanted)}",
        )
    ]


class ReplyState(str, Enum):
    PENDING = "PENDING"
    READY = "READY"
    FAILED = "FAILED"


def aggregate_replies(replies: dict[str, str]) -> str:
    """Slice-level verdict over per-domain replies."""
    if not replies:
        raise ValueError("no reply slots")
    values = set(replies.values())
    if ReplyState.FAILED.value in values:
        return "failed"
    if values == {ReplyState.READY.value}:
        return "all-ready"
    return "still-pending"


class SbCore:
    def __init__(
        self,
        store: DocumentStore,
        substrate: Substrate,
        engine: BlueprintEngine,
        tenants: TenantService,
        catalog: BlueprintCatalog,
    ):
        self.store = store
        self.sim = substrate
        self.engine = engine
        self.tenants = tenants
        self.catalog = catalog
        self.nb = None  # wired by the platform
        self.sboss_meta: dict[str, dict] = {}
        substrate.register_handler("sb_process", self._fire_process)
        substrate.register_handler("sb_teardown", self._fire_teardown)
        substrate.register_handler("sb_modify", self._fire_modify)
        engine.on_instance_settled = self.on_instance_settled

    # -- domain metadata -----------------------------------------------------------

    def domain_profile(self, sboss_id: str) -> ProgrammabilityProfile:
        record = self.nb.get_sboss(sboss_id)
        return ProgrammabilityProfile(layers_enabled=sorted(record["metadata"]["capabilities"]))

    def _domain_nets(self, sboss_id: str) -> dict[str, str]:
        record = self.nb.get_sboss(sboss_id)
        return record["metadata"].get("default_nets", {})

    def _area_kinds(self) -> dict[int, str]:
        return {a.id: a.kind.value for a in self.tenants.list_areas()}

    # -- watch plumbing ---------------------------------------------------------------

    def _watch(self, instance_id: str, slice_id: str, sboss_id: str, purpose: str) -> None:
        if not self.store.exists(WATCHES, instance_id):
            try:
                self.store.insert(WATCHES, instance_id, {"watchers": []})
            except OssError:
                pass

        def apply(body: dict) -> None:
            body["watchers"].append({"slice_id": slice_id, "sboss_id": sboss_id, "purpose": purpose})

        self.store.update(WATCHES, instance_id, apply)

    def _pop_watchers(self, instance_id: str) -> list[dict]:
        if not self.store.exists(WATCHES, instance_id):
            return []

        def apply(body: dict) -> list[dict]:
            watchers = body["watchers"]
            body["watchers"] = []
            return watchers

        _, watchers = self.store.update(WATCHES, instance_id, apply)
        return watchers

    # -- negotiation processing ----------------------------------------------------------

    def _fire_process(self, payload: dict) -> None:
        slice_id = payload["slice_id"]
        sboss_id = payload["sboss_id"]
        sub_request = SliceRequest.model_validate(payload["sub_request"])

        effect = self.sim.fault_effect(sboss_id, "sb_process")
        if effect and effect["effect"] == "unreachable":
            self.nb.mark_sboss_unreachable(sboss_id)
            self._reply(slice_id, sboss_id, ReplyState.FAILED, "domain unreachable")
            return

        try:
            profile = self.domain_profile(sboss_id)
            actions = plan_slice(
                sub_request, profile, self.catalog,
                self.engine.list_instances(live_only=True),
                self._area_kinds(), self._domain_nets(sboss_id),
            )
        except OssError as exc:
            self._reply(slice_id, sboss_id, ReplyState.FAILED, f"{exc.code}: {exc.message}")
            return

        tenant = self.tenants.get_tenant(sub_request.tenant_id)
        from .models import quota_admits
        if not quota_admits(tenant.quota, self.tenants.total_usage(tenant.id), sub_request.compute):
            self._reply(slice_id, sboss_id, ReplyState.FAILED,
                        f"QuotaExceeded: ask {sub_request.compute.dump()} over budget")
            return

        self.apply_plan(slice_id, sboss_id, sub_request, actions)

    def apply_plan(self, slice_id: str, sboss_id: str, sub_request: SliceRequest,
                   actions: list[BlueprintAction]) -> None:
        """Execute actions in order; if one fails synchronously, compensate the
        already-executed ones in reverse order and report failure."""
        executed: list[tuple[BlueprintAction, str, bool]] = []  # (action, instance_id, created)
        pending: list[str] = []
        try:
            for action in actions:
                if action.kind == ActionKind.INSTANTIATE:
                    doc = self.engine.create_blueprint(
                        action.config, tenant_id=sub_request.tenant_id,
                        operator_owned=False, sboss_id=sboss_id,
                    )
                    instance_id = doc["instance_id"]
                    self.engine.attach_slice(instance_id, slice_id)
                    executed.append((action, instance_id, True))
                    self._watch(instance_id, slice_id, sboss_id, "negotiate")
                    pending.append(instance_id)
                else:
                    instance_id = action.target_instance
                    doc = self.engine.get(instance_id)
                    self.engine.attach_slice(instance_id, slice_id)
                    executed.append((action, instance_id, False))
                    if doc["state"] == InstanceState.READY.value:
                        self.engine.update_blueprint(instance_id, action.config)
                        self._watch(instance_id, slice_id, sboss_id, "negotiate")
                        pending.append(instance_id)
                    else:
                        self._watch(instance_id, slice_id, sboss_id, "negotiate")
                        pending.append(instance_id)
        except OssError as exc:
            for action, instance_id, created in reversed(executed):
                self.engine.detach_slice(instance_id, slice_id)
                if created:
                    self.engine.destroy_blueprint(instance_id, force=True)
            self._reply(slice_id, sboss_id, ReplyState.FAILED, f"{exc.code}: {exc.message}")
            return

        def record(body: dict) -> None:
            body["sub_binds"][sboss_id] = [
                {"instance_id": iid, "created": created, "areas": sub_request.coverage_areas,
                 "ready": False}
                for _, iid, created in executed
            ]

        self.store.update(NEGOTIATIONS, slice_id, record)
        if not pending:
            self._reply(slice_id, sboss_id, ReplyState.READY, "")

    def on_instance_settled(self, instance_id: str, state: str) -> None:
        """Engine callback: resolve negotiation/teardown/modify watches."""
        watchers = self._pop_watchers(instance_id)
        for watcher in watchers:
            slice_id, sboss_id, purpose = watcher["slice_id"], watcher["sboss_id"], watcher["purpose"]
            if purpose == "negotiate":
                if state == InstanceState.READY.value:
                    self._binding_ready(slice_id, sboss_id, instance_id)
                else:
                    self._reply(slice_id, sboss_id, ReplyState.FAILED,
                                f"instance {instance_id} entered {state}")
            elif purpose in ("teardown", "rollback"):
                self.nb.binding_closed(slice_id, instance_id, purpose)
            elif purpose == "modify":
                self.nb.modify_settled(slice_id, instance_id, ok=state == InstanceState.READY.value)

    def _binding_ready(self, slice_id: str, sboss_id: str, instance_id: str) -> None:
        def apply(body: dict) -> bool:
            binds = body["sub_binds"].get(sboss_id, [])
            for bind in binds:
                if bind["instance_id"] == instance_id:
                    bind["ready"] = True
            return all(b["ready"] for b in binds)

        _, all_ready = self.store.update(NEGOTIATIONS, slice_id, apply)
        if all_ready:
            self._reply(slice_id, sboss_id, ReplyState.READY, "")

    def _reply(self, slice_id: str, sboss_id: str, state: ReplyState, reason: str) -> None:
        def apply(body: dict) -> None:
            body["replies"][sboss_id] = state.value
            if reason:
                body["reasons"][sboss_id] = reason

        self.store.update(NEGOTIATIONS, slice_id, apply)
        self.sim.log("engine", slice_id, "sb_reply", {"sboss": sboss_id, "state": state.value, "reason": reason})
        self.nb.on_reply(slice_id)

    # -- teardown ---------------------------------------------------------------------------------

    def _fire_teardown(self, payload: dict) -> None:
        slice_id = payload["slice_id"]
        instance_id = payload["instance_id"]
        purpose = payload.get("purpose", "teardown")
        try:
            doc = self.engine.get(instance_id)
        except OssError:
            self.nb.binding_closed(slice_id, instance_id, purpose)
            return
        self.engine.detach_slice(instance_id, slice_id)
        doc = self.engine.get(instance_id)
        if doc["state"] == InstanceState.DESTROYED.value:
            self.nb.binding_closed(slice_id, instance_id, purpose)
            return
        if doc["attached_slices"] or doc["operator_owned"]:
            # shared or operator-owned: the deployment stays, only the
            # attachment record changes
            self.sim.log("engine", instance_id, "blueprint_detached", {"slice": slice_id})
            self.nb.binding_closed(slice_id, instance_id, purpose)
            return
        self._watch(instance_id, slice_id, doc.get("sboss_id") or "", purpose)
        self.engine.destroy_blueprint(instance_id, force=True)

    # -- modification -----------------------------------------------------------------------------

    def _fire_modify(self, payload: dict) -> None:
        slice_id = payload["slice_id"]
        instance_id = payload["instance_id"]
        sub_request = SliceRequest.model_validate(payload["sub_request"])
        doc = self.engine.get(instance_id)
        area_kinds = self._area_kinds()
        merged_config = dict(doc["body"]["config"])
        merged_config["qos"] = sub_request.qos.dump()

        current_areas = set(doc["areas"])
        wanted = set(sub_request.coverage_areas)
        delta: dict = {"config": merged_config}
        if wanted - current_areas or current_areas - wanted:
            existing_core = next(a["id"] for a in doc["body"]["areas"] if a.get("core"))
            by_id = {a["id"]: a for a in doc["body"]["areas"]}
            area_list = []
            for area in sorted(wanted | {existing_core}):
                if area in by_id:
                    area_list.append(by_id[area])
                else:
                    area_list.append({"id": area, "core": False, "workers_replica": 1})
            delta["areas"] = area_list
        try:
            self._watch(instance_id, slice_id, doc.get("sboss_id") or "", "modify")
            self.engine.update_blueprint(instance_id, delta)
        except OssError as exc:
            self._pop_watchers(instance_id)
            self.nb.modify_settled(slice_id, instance_id, ok=False, reason=f"{exc.code}: {exc.message}")

    # -- direct (library/REST) entry points ----------------------------------------------------------

    def deinstantiate_slice(self, slice_id: str) -> dict:
        """Detach every live binding of the slice, destroying instances whose
        last attachment went away; returns the terminal record."""
        return self.nb.terminate_slice(slice_id)

    def modify_slice(self, slice_id: str, qos: QosProfile | None = None,
                     coverage_areas: list[int] | None = None) -> dict:
        return self.nb.modify_slice(slice_id, qos=qos, coverage_areas=coverage_areas)
