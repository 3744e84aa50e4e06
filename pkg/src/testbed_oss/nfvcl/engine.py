"""Blueprint lifecycle engine.

Drives typed service compositions through their whole life: package
generation and onboarding, network-service instantiation, initial
configuration dispatch, runtime reconfiguration (including composition
changes applied in place, without destroying running services), and
teardown. Progression is event-driven: mutating calls persist intent and
schedule work; the substrate clock executes it.
"""

from __future__ import annotations

from typing import Callable, Optional

from ..canonical import content_hash
from ..errors import (
    InstanceNotReady,
    InvalidDelta,
    SchemaViolation,
    SlicesStillAttached,
    UnknownInstance,
    UnknownOperation,
)
from ..models import ResourceBudget
from ..store import DocumentStore
from ..sim.substrate import Substrate
from ..tenancy import TenantService, self_exists
from .catalog import BlueprintCatalog, BlueprintType
from .expansion import core_area, validate_create_body
from .models import (
    BlueprintCreate,
    ConfigBundle,
    InstanceState,
    NfKind,
    NsTemplate,
)
from .packages import build_validated
from .topology import TopologyService

BLUEPRINTS = "blueprints"
OPERATIONS = "operations"
NS_INDEX = "nsindex"
OP_KEYS = "opkeys"

LIVE_STATES = {
    InstanceState.CREATED.value,
    InstanceState.DEPLOYING.value,
    InstanceState.CONFIGURING.value,
    InstanceState.READY.value,
    InstanceState.UPDATING.value,
}


def _template_fingerprint(template: NsTemplate) -> str:
    return content_hash(template.dump())


def _templates_by_area(templates: list[NsTemplate]) -> dict[int, NsTemplate]:
    return {t.area_id: t for t in templates}


class BlueprintEngine:
    def __init__(
        self,
        store: DocumentStore,
        substrate: Substrate,
        catalog: BlueprintCatalog,
        topology: TopologyService,
        tenants: TenantService,
    ):
        self.store = store
        self.sim = substrate
        self.catalog = catalog
        self.topology = topology
        self.tenants = tenants
        self.on_instance_settled: Optional[Callable[[str, str], None]] = None
        substrate.register_handler("bp_deploy", self._fire_deploy)
        substrate.register_handler("bp_bundle", self._fire_bundle)
        substrate.on_ns_settled = self.handle_ns_settled

    # -- reads ---------------------------------------------------------------

    def get(self, instance_id: str) -> dict:
        doc = self.store.try_get(BLUEPRINTS, instance_id)
        if doc is None:
            raise UnknownInstance(f"blueprint instance {instance_id} does not exist")
        return doc.body

    def list_instances(self, tenant_id: str | None = None, live_only: bool = False) -> list[dict]:
        out = []
        for doc in self.store.list_docs(BLUEPRINTS):
            body = doc.body
            if tenant_id is not None and body["tenant_id"] != tenant_id:
                continue
            if live_only and body["state"] not in LIVE_STATES:
                continue
            out.append(body)
        return out

    def fetch_operation(self, instance_id: str, op_id: str) -> dict:
        doc = self.store.try_get(OPERATIONS, op_id)
        if doc is None or doc.body["instance_id"] != instance_id:
            raise UnknownOperation(f"operation {op_id} not found for {instance_id}")
        return doc.body

    def deployment_hash(self, body: dict) -> str:
        """Hash over deployment-relevant fields only; slice attachment
        bookkeeping does not change it."""
        view = {k: body[k] for k in ("type_tag", "tenant_id", "body", "areas", "state", "owned_ns", "ns_by_area")}
        return content_hash(view)

    # -- idempotency by client-supplied operation key ---------------------------

    def _replay(self, op_key: str | None) -> dict | None:
        if op_key is None:
            return None
        doc = self.store.try_get(OP_KEYS, op_key)
        if doc is None:
            return None
        record = doc.body
        if record["kind"] == "operation":
            return self.fetch_operation(record["instance_id"], record["op_id"])
        return self.get(record["instance_id"])

    def _record_key(self, op_key: str | None, kind: str, instance_id: str, op_id: str | None = None) -> None:
        if op_key is None:
            return
        body = {"kind": kind, "instance_id": instance_id}
        if op_id:
            body["op_id"] = op_id
        if not self.store.exists(OP_KEYS, op_key):
            self.store.insert(OP_KEYS, op_key, body)

    # -- create ---------------------------------------------------------------------

    def create_blueprint(
        self,
        raw_body: dict,
        tenant_id: str = "operator",
        operator_owned: bool = True,
        op_key: str | None = None,
        sboss_id: str | None = None,
    ) -> dict:
        replay = self._replay(op_key)
        if replay is not None:
            return replay

        bp_type = self.catalog.get_executable(raw_body.get("type", ""))
        create = validate_create_body(raw_body, bp_type.config_model)
        templates = bp_type.expand(create)
        self._check_placement(create, templates, tenant_id)

        declared = ResourceBudget.zero()
        for template in templates:
            declared = declared.add(ResourceBudget.model_validate(template.compute()))
        if self_exists(self.tenants, tenant_id):
            self.tenants.charge(tenant_id, "nfv", declared)

        instance_id = self.store.next_id("blueprint", "bp")
        area_plan = self._build_area_plan(instance_id, templates)

        body = {
            "instance_id": instance_id,
            "type_tag": create.type,
            "tenant_id": tenant_id,
            "operator_owned": operator_owned,
            "sboss_id": sboss_id,
            "body": create.dump(),
            "areas": sorted(t.area_id for t in templates),
            "state": InstanceState.CREATED.value,
            "owned_ns": [],
            "ns_by_area": {},
            "area_plan": area_plan,
            "attached_slices": [],
            "pending_ns": [],
            "pending_bundles": 0,
            "destroy_queue": [],
            "declared_compute": declared.dump(),
            "config_state": {"subscribers": [], "slices": [], "tacs": [], "routes": [], "ues": [], "plugins": []},
            "active_op": None,
            "error": None,
            "created_t": self.sim.now(),
        }
        self.store.insert(BLUEPRINTS, instance_id, body)
        self._record_key(op_key, "create", instance_id)
        self.sim.log("engine", instance_id, "blueprint_created", {"type": create.type, "areas": body["areas"]})
        self.sim.schedule("bp_deploy", {"instance_id": instance_id}, 0.0)
        return body

    def _check_placement(self, create: BlueprintCreate, templates: list[NsTemplate], tenant_id: str) -> None:
        endpoints = [create.config["network_endpoints"]["mgt"]] + [
            d["net_name"] for d in create.config["network_endpoints"].get("data_nets", [])
        ]
        self.topology.require_networks(endpoints)
        for template in templates:
            for vnf in template.vnfs:
                if vnf.kind == NfKind.KNF:
                    self.topology.select_cluster(template.area_id, owner=tenant_id)
            self.topology.select_vim(template.area_id)

    def _build_area_plan(self, instance_id: str, templates: list[NsTemplate]) -> dict:
        plan = {}
        for template in templates:
            package, digest = build_validated(instance_id, template, self.topology.network_names())
            self.sim.nfvo_onboard(package)
            plan[str(template.area_id)] = {
                "area": template.area_id,
                "name": template.name,
                "role": template.role,
                "nsd_id": package["nsd"]["nsd_id"],
                "package": digest,
                "vim_id": self.topology.select_vim(template.area_id),
                "nfs": [{"name": v.vnfd_id, "kind": v.kind.value} for v in template.vnfs],
                "fingerprint": _template_fingerprint(template),
                "compute": template.compute(),
            }
        return plan

    def _fire_deploy(self, payload: dict) -> None:
        instance_id = payload["instance_id"]
        body = self.get(instance_id)
        if body["state"] != InstanceState.CREATED.value:
            return
        started: list[tuple[str, str]] = []
        for area_key in sorted(body["area_plan"], key=int):
            plan = body["area_plan"][area_key]
            ns_id = self.sim.nfvo_instantiate(
                plan["nsd_id"], plan["package"], plan["vim_id"],
                tags={"bp": instance_id, "area": plan["area"]},
            )
            started.append((area_key, ns_id))
            self.store.insert(NS_INDEX, ns_id, {"instance_id": instance_id})

        def apply(doc: dict) -> None:
            doc["state"] = InstanceState.DEPLOYING.value
            for area_key, ns_id in started:
                doc["owned_ns"].append(ns_id)
                doc["ns_by_area"][area_key] = ns_id
                doc["pending_ns"].append(ns_id)

        self.store.update(BLUEPRINTS, instance_id, apply)
        self.sim.log("engine", instance_id, "blueprint_deploying", {"ns": [n for _, n in started]})

    # -- day-1 configuration --------------------------------------------------------

    def _day1_bundles(self, body: dict, area_keys: list[str] | None = None) -> list[dict]:
        bundles = []
        keys = area_keys if area_keys is not None else sorted(body["area_plan"], key=int)
        for area_key in keys:
            plan = body["area_plan"][area_key]
            for nf in plan["nfs"]:
                kind = NfKind(nf["kind"])
                if kind == NfKind.KNF:
                    payload = {"values": {"instance": body["instance_id"], "area": plan["area"], "phase": "day1"}}
                else:
                    payload = {
                        "playbooks": ["base-system.yaml", f"{body['type_tag'].lower()}-day1.yaml"],
                        "files": [f"{body['instance_id']}-a{plan['area']}.cfg"],
                    }
                bundle = ConfigBundle.for_nf(kind, nf["name"], payload)
                bundles.append(bundle.dump())
        return bundles

    def _dispatch_bundles(self, instance_id: str, bundles: list[dict], phase: str, op_id: str | None = None) -> None:
        for bundle in bundles:
            self.sim.schedule(
                "bp_bundle",
                {"instance_id": instance_id, "bundle": bundle, "phase": phase, "op_id": op_id},
                0.0,
            )

    def _fire_bundle(self, payload: dict) -> None:
        instance_id = payload["instance_id"]
        bundle = payload["bundle"]
        phase = payload["phase"]
        op_id = payload.get("op_id")
        body = self.store.try_get(BLUEPRINTS, instance_id)
        if body is None:
            return
        state = body.body["state"]
        if state in (InstanceState.DESTROYED.value, InstanceState.DESTROYING.value, InstanceState.ERROR.value):
            return

        effect = self.sim.fault_effect(instance_id, "bundle_apply")
        if effect and effect["effect"] == "fail":
            self.sim.log("engine", instance_id, "bundle_failed", {
                "target": bundle["target_vnf"], "mechanism": bundle["mechanism"], "phase": phase,
            })
            if phase == "day1":
                self._enter_error(instance_id, "BundleApplyFailed during day-1 configuration")
            else:
                self._fail_operation(instance_id, op_id, "BundleApplyFailed")
            return

        self.sim.log("engine", instance_id, "bundle_applied", {
            "target": bundle["target_vnf"], "mechanism": bundle["mechanism"], "phase": phase,
        })
        if phase == "day1":
            def apply(doc: dict) -> tuple[str, int]:
                doc["pending_bundles"] = max(0, doc["pending_bundles"] - 1)
                return doc["state"], doc["pending_bundles"]

            _, (state_now, remaining) = self.store.update(BLUEPRINTS, instance_id, apply)
            if remaining == 0 and state_now in (InstanceState.CONFIGURING.value, InstanceState.UPDATING.value):
                self._check_settled(instance_id)
        else:
            self._operation_progress(instance_id, op_id, bundle_done=True)

    # -- ns settlement ------------------------------------------------------------------

    def handle_ns_settled(self, ns_id: str, outcome: str) -> None:
        index = self.store.try_get(NS_INDEX, ns_id)
        if index is None:
            return
        instance_id = index.body["instance_id"]
        body = self.get(instance_id)
        state = body["state"]

        if outcome == "INSTANTIATED":
            if state == InstanceState.DESTROYING.value:
                # destroy requested while this service was still coming up
                if body["destroy_queue"] and body["destroy_queue"][0] == ns_id:
                    self.sim.nfvo_terminate(ns_id)
                return
            def apply(doc: dict) -> None:
                if ns_id in doc["pending_ns"]:
                    doc["pending_ns"].remove(ns_id)
            self.store.update(BLUEPRINTS, instance_id, apply)
            self._maybe_start_configuring(instance_id)
            self._check_settled(instance_id)

        elif outcome == "FAILED":
            if state == InstanceState.DESTROYING.value:
                self._destroy_step_done(instance_id, ns_id)
                return
            self._enter_error(instance_id, f"network service {ns_id} failed")

        elif outcome == "TERMINATED":
            if state == InstanceState.DESTROYING.value:
                self._destroy_step_done(instance_id, ns_id)
            else:
                def apply(doc: dict) -> None:
                    if ns_id in doc["pending_ns"]:
                        doc["pending_ns"].remove(ns_id)
                    if ns_id in doc["owned_ns"]:
                        doc["owned_ns"].remove(ns_id)
                    for key, value in list(doc["ns_by_area"].items()):
                        if value == ns_id:
                            del doc["ns_by_area"][key]
                self.store.update(BLUEPRINTS, instance_id, apply)
                self._check_settled(instance_id)

        elif outcome == "UPDATED":
            if state == InstanceState.UPDATING.value:
                def apply(doc: dict) -> None:
                    if ns_id in doc["pending_ns"]:
                        doc["pending_ns"].remove(ns_id)
                self.store.update(BLUEPRINTS, instance_id, apply)
                self._check_settled(instance_id)
            elif body.get("active_op"):
                self._operation_progress(instance_id, body["active_op"], ns_done=ns_id)

        elif outcome == "UPDATE_FAILED":
            if body.get("active_op"):
                self._fail_operation(instance_id, body["active_op"], "network service update failed")
            else:
                self._enter_error(instance_id, f"network service {ns_id} update failed")

    def _maybe_start_configuring(self, instance_id: str) -> None:
        body = self.get(instance_id)
        if body["state"] != InstanceState.DEPLOYING.value or body["pending_ns"]:
            return
        bundles = self._day1_bundles(body)

        def apply(doc: dict) -> None:
            doc["state"] = InstanceState.CONFIGURING.value
            doc["pending_bundles"] = len(bundles)

        self.store.update(BLUEPRINTS, instance_id, apply)
        self.sim.log("engine", instance_id, "blueprint_configuring", {"bundles": len(bundles)})
        self._dispatch_bundles(instance_id, bundles, "day1")

    def _check_settled(self, instance_id: str) -> None:
        body = self.get(instance_id)
        if body["pending_ns"] or body["pending_bundles"]:
            return
        if body["state"] == InstanceState.CONFIGURING.value or body["state"] == InstanceState.UPDATING.value:
            def apply(doc: dict) -> None:
                doc["state"] = InstanceState.READY.value
            self.store.update(BLUEPRINTS, instance_id, apply)
            self.sim.log("engine", instance_id, "blueprint_ready", {"ns": body["owned_ns"]})
            self._post_ready(instance_id)
            self._notify(instance_id, InstanceState.READY.value)

    def _post_ready(self, instance_id: str) -> None:
        body = self.get(instance_id)
        if body["type_tag"] == "K8s":
            self.topology.remove_cluster(source=instance_id)
            self.topology.register_cluster(
                name=f"{instance_id}-cluster",
                areas=body["areas"],
                owner=body["tenant_id"],
                source=instance_id,
            )

    def _enter_error(self, instance_id: str, reason: str) -> None:
        def apply(doc: dict) -> None:
            doc["state"] = InstanceState.ERROR.value
            doc["error"] = reason

        self.store.update(BLUEPRINTS, instance_id, apply)
        self.sim.log("engine", instance_id, "blueprint_error", {"reason": reason})
        self._notify(instance_id, InstanceState.ERROR.value)

    def _notify(self, instance_id: str, state: str) -> None:
        if self.on_instance_settled is not None:
            self.on_instance_settled(instance_id, state)

    # -- update -------------------------------------------------------------------------

    def update_blueprint(self, instance_id: str, delta: dict, op_key: str | None = None) -> dict:
        replay = self._replay(op_key)
        if replay is not None:
            return replay
        body = self.get(instance_id)
        if body["state"] != InstanceState.READY.value:
            raise InstanceNotReady(f"{instance_id} is {body['state']}")
        if "type" in delta and delta["type"] != body["type_tag"]:
            raise InvalidDelta("blueprint type cannot change")

        bp_type = self.catalog.get_executable(body["type_tag"])
        merged = dict(body["body"])
        if "config" in delta:
            merged["config"] = delta["config"]
        if "areas" in delta:
            merged["areas"] = delta["areas"]
        create = validate_create_body({**merged, "type": body["type_tag"]}, bp_type.config_model)

        old_create = BlueprintCreate.model_validate(body["body"])
        if core_area(create.areas).id != core_area(old_create.areas).id:
            raise InvalidDelta("relocating the core area is not supported")

        new_templates = _templates_by_area(bp_type.expand(create))
        self._check_placement(create, list(new_templates.values()), body["tenant_id"])

        old_plan = body["area_plan"]
        added = sorted(set(new_templates) - {int(k) for k in old_plan})
        removed = sorted({int(k) for k in old_plan} - set(new_templates))
        changed = []
        for area in sorted(set(new_templates) & {int(k) for k in old_plan}):
            if _template_fingerprint(new_templates[area]) != old_plan[str(area)]["fingerprint"]:
                changed.append(area)

        # settle the quota delta up front
        new_total = ResourceBudget.zero()
        for template in new_templates.values():
            new_total = new_total.add(ResourceBudget.model_validate(template.compute()))
        old_total = ResourceBudget.model_validate(body["declared_compute"])
        self._apply_quota_delta(body["tenant_id"], old_total, new_total)

        pending: list[str] = []
        new_plan = dict(old_plan)
        started: list[tuple[str, str]] = []
        for area in added:
            template = new_templates[area]
            package, digest = build_validated(instance_id, template, self.topology.network_names())
            self.sim.nfvo_onboard(package)
            plan = {
                "area": area,
                "name": template.name,
                "role": template.role,
                "nsd_id": package["nsd"]["nsd_id"],
                "package": digest,
                "vim_id": self.topology.select_vim(area),
                "nfs": [{"name": v.vnfd_id, "kind": v.kind.value} for v in template.vnfs],
                "fingerprint": _template_fingerprint(template),
                "compute": template.compute(),
            }
            new_plan[str(area)] = plan
            ns_id = self.sim.nfvo_instantiate(plan["nsd_id"], digest, plan["vim_id"],
                                              tags={"bp": instance_id, "area": area})
            self.store.insert(NS_INDEX, ns_id, {"instance_id": instance_id})
            started.append((str(area), ns_id))
            pending.append(ns_id)
        for area in removed:
            ns_id = body["ns_by_area"][str(area)]
            self.sim.nfvo_terminate(ns_id)
            pending.append(ns_id)
            del new_plan[str(area)]
        for area in changed:
            template = new_templates[area]
            package, digest = build_validated(instance_id, template, self.topology.network_names())
            self.sim.nfvo_onboard(package)
            plan = dict(new_plan[str(area)])
            plan.update({
                "package": digest,
                "fingerprint": _template_fingerprint(template),
                "compute": template.compute(),
                "nfs": [{"name": v.vnfd_id, "kind": v.kind.value} for v in template.vnfs],
            })
            new_plan[str(area)] = plan
            ns_id = body["ns_by_area"][str(area)]
            self.sim.nfvo_update(ns_id, digest, plan["nsd_id"])
            pending.append(ns_id)

        reconfig_only = not (added or removed or changed)
        bundles: list[dict] = []
        if reconfig_only:
            core_key = str(core_area(create.areas).id)
            bundles = self._day1_bundles({**body, "area_plan": new_plan}, area_keys=[core_key])
        else:
            new_area_keys = [str(a) for a in added]
            if new_area_keys:
                bundles = self._day1_bundles({**body, "area_plan": new_plan}, area_keys=new_area_keys)

        def apply(doc: dict) -> None:
            doc["state"] = InstanceState.UPDATING.value
            doc["body"] = create.dump()
            doc["areas"] = sorted(new_templates)
            doc["area_plan"] = new_plan
            doc["declared_compute"] = new_total.dump()
            doc["pending_ns"].extend(pending)
            doc["pending_bundles"] += len(bundles)
            for area_key, ns_id in started:
                doc["owned_ns"].append(ns_id)
                doc["ns_by_area"][area_key] = ns_id

        self.store.update(BLUEPRINTS, instance_id, apply)
        self._record_key(op_key, "update", instance_id)
        self.sim.log("engine", instance_id, "blueprint_updating", {
            "added": added, "removed": removed, "changed": changed, "reconfig_only": reconfig_only,
        })
        self._dispatch_bundles(instance_id, bundles, "day1")
        if not pending and not bundles:
            self._check_settled(instance_id)
        return self.get(instance_id)

    def _apply_quota_delta(self, tenant_id: str, old: ResourceBudget, new: ResourceBudget) -> None:
        if not self_exists(self.tenants, tenant_id):
            return
        delta = new.sub(old)
        charge = ResourceBudget(vcpus=max(0, delta.vcpus), ram_gb=max(0, delta.ram_gb),
                                storage_gb=max(0, delta.storage_gb))
        refund = ResourceBudget(vcpus=max(0, -delta.vcpus), ram_gb=max(0, -delta.ram_gb),
                                storage_gb=max(0, -delta.storage_gb))
        if charge != ResourceBudget.zero():
            self.tenants.charge(tenant_id, "nfv", charge)
        if refund != ResourceBudget.zero():
            self.tenants.refund(tenant_id, "nfv", refund)

    # -- destroy ---------------------------------------------------------------------------

    def destroy_blueprint(self, instance_id: str, force: bool = False, op_key: str | None = None) -> dict:
        replay = self._replay(op_key)
        if replay is not None:
            return replay
        body = self.get(instance_id)
        if body["state"] == InstanceState.DESTROYED.value:
            return body
        if body["state"] == InstanceState.DESTROYING.value:
            return body
        if body["attached_slices"] and not force:
            raise SlicesStillAttached(
                f"{instance_id} still serves slices {sorted(body['attached_slices'])}"
            )

        queue = list(reversed(body["owned_ns"]))

        def apply(doc: dict) -> None:
            doc["state"] = InstanceState.DESTROYING.value
            doc["destroy_queue"] = queue
            doc["pending_ns"] = []
            doc["pending_bundles"] = 0

        self.store.update(BLUEPRINTS, instance_id, apply)
        self._record_key(op_key, "destroy", instance_id)
        self.sim.log("engine", instance_id, "blueprint_destroying", {"ns": queue})
        if queue:
            self._terminate_head(instance_id)
        else:
            self._finalize_destroy(instance_id)
        return self.get(instance_id)

    def _terminate_head(self, instance_id: str) -> None:
        body = self.get(instance_id)
        if not body["destroy_queue"]:
            self._finalize_destroy(instance_id)
            return
        head = body["destroy_queue"][0]
        record = self.sim.ns_record(head)
        if record["state"] == "INSTANTIATING":
            return  # terminate once it settles
        if record["state"] in ("TERMINATED", "FAILED"):
            self._destroy_step_done(instance_id, head)
            return
        self.sim.nfvo_terminate(head)

    def _destroy_step_done(self, instance_id: str, ns_id: str) -> None:
        def apply(doc: dict) -> None:
            if ns_id in doc["destroy_queue"]:
                doc["destroy_queue"].remove(ns_id)

        self.store.update(BLUEPRINTS, instance_id, apply)
        body = self.get(instance_id)
        if body["destroy_queue"]:
            self._terminate_head(instance_id)
        else:
            self._finalize_destroy(instance_id)

    def _finalize_destroy(self, instance_id: str) -> None:
        body = self.get(instance_id)
        declared = ResourceBudget.model_validate(body["declared_compute"])
        if self_exists(self.tenants, body["tenant_id"]):
            self.tenants.refund(body["tenant_id"], "nfv", declared)
        if body["type_tag"] == "K8s":
            self.topology.remove_cluster(source=instance_id)

        def apply(doc: dict) -> None:
            doc["state"] = InstanceState.DESTROYED.value
            doc["owned_ns"] = []
            doc["ns_by_area"] = {}
            doc["destroy_queue"] = []
            doc["declared_compute"] = ResourceBudget.zero().dump()

        self.store.update(BLUEPRINTS, instance_id, apply)
        self.sim.log("engine", instance_id, "blueprint_destroyed", {})
        self._notify(instance_id, InstanceState.DESTROYED.value)

    # -- slice attachment (used by the SB core) ----------------------------------------------

    def attach_slice(self, instance_id: str, slice_id: str) -> None:
        def apply(doc: dict) -> None:
            if slice_id not in doc["attached_slices"]:
                doc["attached_slices"].append(slice_id)
                doc["attached_slices"].sort()

        self.store.update(BLUEPRINTS, instance_id, apply)

    def detach_slice(self, instance_id: str, slice_id: str) -> None:
        def apply(doc: dict) -> None:
            if slice_id in doc["attached_slices"]:
                doc["attached_slices"].remove(slice_id)

        self.store.update(BLUEPRINTS, instance_id, apply)

    # -- day-2 -------------------------------------------------------------------------------

    def day2_execute(self, instance_id: str, action_name: str, params: dict, op_key: str | None = None) -> dict:
        replay = self._replay(op_key)
        if replay is not None:
            return replay
        body = self.get(instance_id)
        bp_type = self.catalog.get(body["type_tag"])
        action = bp_type.day2_actions.get(action_name)
        if action is None:
            from ..errors import UnknownAction
            raise UnknownAction(f"{body['type_tag']} has no day-2 action {action_name}")
        try:
            parsed = action.params_model.model_validate(params)
        except (ValueError, TypeError) as exc:
            raise SchemaViolation(str(exc)) from exc
        if body["state"] != InstanceState.READY.value:
            raise InstanceNotReady(f"{instance_id} is {body['state']}")
        if body.get("active_op"):
            raise InstanceNotReady(f"{instance_id} already has operation {body['active_op']} in flight")

        op_id = self.store.next_id("operation", "op")
        op_body = {
            "op_id": op_id,
            "instance_id": instance_id,
            "action": action_name,
            "params": parsed.model_dump(mode="json"),
            "status": "RUNNING",
            "critical": action.critical,
            "logs": [f"t={self.sim.now()} accepted {action_name}"],
            "output": {},
            "bundles": [],
            "pending_updates": [],
            "queued_bundles": [],
            "pending_bundles": 0,
        }
        self.store.insert(OPERATIONS, op_id, op_body)
        self.store.update(BLUEPRINTS, instance_id, lambda d: d.__setitem__("active_op", op_id))
        self._record_key(op_key, "operation", instance_id, op_id)
        self.sim.log("engine", instance_id, "day2_requested", {"action": action_name, "op": op_id})

        executor = getattr(self, f"_day2_{action_name}", None)
        if executor is None:
            executor = self._day2_generic
        executor(instance_id, op_id, action_name, parsed.model_dump(mode="json"))
        return self.fetch_operation(instance_id, op_id)

    def _core_nf(self, body: dict) -> tuple[str, NfKind]:
        core_key = str(core_area(BlueprintCreate.model_validate(body["body"]).areas).id)
        nf = body["area_plan"][core_key]["nfs"][0]
        return nf["name"], NfKind(nf["kind"])

    def _start_op_bundles(self, instance_id: str, op_id: str, bundles: list[ConfigBundle]) -> None:
        dumped = [b.dump() for b in bundles]

        def apply(doc: dict) -> None:
            doc["bundles"].extend(dumped)
            doc["pending_bundles"] += len(dumped)

        self.store.update(OPERATIONS, op_id, apply)
        self._dispatch_bundles(instance_id, dumped, "day2", op_id=op_id)

    def _day2_generic(self, instance_id: str, op_id: str, action_name: str, params: dict) -> None:
        """Default shape: one configuration bundle to the core NF, plus a
        counter in the instance's runtime config state."""
        body = self.get(instance_id)
        target, kind = self._core_nf(body)
        state_key = {
            "add_subscriber": "subscribers",
            "add_slice": "slices",
            "add_tac": "tacs",
            "add_route": "routes",
            "attach_ue": "ues",
            "install_plugin": "plugins",
        }.get(action_name)
        if state_key is not None:
            def bump(doc: dict) -> int:
                doc["config_state"][state_key].append(params)
                return len(doc["config_state"][state_key])

            _, count = self.store.update(BLUEPRINTS, instance_id, bump)
            self.store.update(OPERATIONS, op_id, lambda d: d["output"].__setitem__(state_key, count))

        if kind == NfKind.KNF:
            payload = {"values": {"action": action_name, **params}}
        else:
            payload = {"playbooks": [f"{action_name}.yaml"], "files": [], "vars": params}
        self._start_op_bundles(instance_id, op_id, [ConfigBundle.for_nf(kind, target, payload)])

    def _day2_add_worker(self, instance_id: str, op_id: str, action_name: str, params: dict) -> None:
        """Grow the worker set of one area in place: new descriptor revision,
        in-place NS update, then a join bundle to the area's NF. The running
        service keeps its NS id throughout."""
        body = self.get(instance_id)
        area = params["area"]
        if str(area) not in body["area_plan"]:
            raise SchemaViolation(f"area {area} is not part of {instance_id}")

        bp_type = self.catalog.get_executable(body["type_tag"])
        create = BlueprintCreate.model_validate(body["body"])
        new_areas = []
        for spec in create.areas:
            if spec.id == area:
                spec = spec.model_copy(update={"workers_replica": spec.workers_replica + params["count"]})
            new_areas.append(spec)
        create = create.model_copy(update={"areas": new_areas})

        templates = _templates_by_area(bp_type.expand(create))
        template = templates[area]
        package, digest = build_validated(instance_id, template, self.topology.network_names())
        self.sim.nfvo_onboard(package)

        old_compute = ResourceBudget.model_validate(body["area_plan"][str(area)]["compute"])
        new_compute = ResourceBudget.model_validate(template.compute())
        self._apply_quota_delta(body["tenant_id"], old_compute, new_compute)

        ns_id = body["ns_by_area"][str(area)]
        self.sim.nfvo_update(ns_id, digest, body["area_plan"][str(area)]["nsd_id"])

        def apply(doc: dict) -> None:
            doc["body"] = create.dump()
            plan = doc["area_plan"][str(area)]
            plan["package"] = digest
            plan["fingerprint"] = _template_fingerprint(template)
            plan["compute"] = template.compute()
            doc["declared_compute"] = (
                ResourceBudget.model_validate(doc["declared_compute"]).sub(old_compute).add(new_compute).dump()
            )

        self.store.update(BLUEPRINTS, instance_id, apply)

        nf = body["area_plan"][str(area)]["nfs"][0]
        join_bundle = ConfigBundle.for_nf(
            NfKind(nf["kind"]), nf["name"],
            {"playbooks": ["join-workers.yaml"], "files": [], "vars": {"area": area, "count": params["count"]}},
        )

        def op_apply(doc: dict) -> None:
            doc["pending_updates"].append(ns_id)
            doc["queued_bundles"].append(join_bundle.dump())
            doc["output"]["workers"] = {
                str(a.id): a.workers_replica for a in create.areas
            }

        self.store.update(OPERATIONS, op_id, op_apply)

    def _operation_progress(self, instance_id: str, op_id: str | None, ns_done: str | None = None,
                            bundle_done: bool = False) -> None:
        if op_id is None:
            return
        op = self.store.try_get(OPERATIONS, op_id)
        if op is None or op.body["status"] != "RUNNING":
            return

        to_dispatch: list[dict] = []

        def apply(doc: dict) -> None:
            if ns_done and ns_done in doc["pending_updates"]:
                doc["pending_updates"].remove(ns_done)
                doc["logs"].append(f"t={self.sim.now()} ns {ns_done} rescaled")
                if not doc["pending_updates"] and doc["queued_bundles"]:
                    queued = doc["queued_bundles"]
                    doc["queued_bundles"] = []
                    doc["bundles"].extend(queued)
                    doc["pending_bundles"] += len(queued)
                    to_dispatch.extend(queued)
            if bundle_done:
                doc["pending_bundles"] = max(0, doc["pending_bundles"] - 1)
                doc["logs"].append(f"t={self.sim.now()} bundle applied")

        self.store.update(OPERATIONS, op_id, apply)
        if to_dispatch:
            self._dispatch_bundles(instance_id, to_dispatch, "day2", op_id=op_id)
            return
        op_body = self.store.get(OPERATIONS, op_id).body
        if not op_body["pending_updates"] and not op_body["pending_bundles"] and not op_body["queued_bundles"]:
            def finish(doc: dict) -> None:
                doc["status"] = "SUCCEEDED"
                doc["logs"].append(f"t={self.sim.now()} completed")

            self.store.update(OPERATIONS, op_id, finish)
            self.store.update(BLUEPRINTS, instance_id, lambda d: d.__setitem__("active_op", None))
            self.sim.log("engine", instance_id, "day2_completed", {"op": op_id})

    def _fail_operation(self, instance_id: str, op_id: str | None, reason: str) -> None:
        if op_id is None:
            return
        def apply(doc: dict) -> bool:
            doc["status"] = "FAILED"
            doc["logs"].append(f"t={self.sim.now()} failed: {reason}")
            return doc["critical"]

        _, critical = self.store.update(OPERATIONS, op_id, apply)
        self.store.update(BLUEPRINTS, instance_id, lambda d: d.__setitem__("active_op", None))
        self.sim.log("engine", instance_id, "day2_failed", {"op": op_id, "reason": reason})
        if critical:
            self._enter_error(instance_id, f"critical day-2 operation {op_id} failed: {reason}")
