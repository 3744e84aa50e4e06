"""NB OSS: domain onboarding, slice-request routing and negotiation.

Routing picks the minimum number of onboarded domains that jointly cover
the requested areas (lexicographically smallest id set among ties) and
partitions the areas among them. Negotiation fans sub-requests out, tallies
per-domain replies, and either activates the slice or rolls every touched
binding back so a failed request leaves resource usage untouched.
"""

from __future__ import annotations

import math
from itertools import combinations
from urllib.parse import urlparse

from .errors import (
    DuplicateEndpoint,
    EmptyAreaSet,
    InvalidState,
    NoCoverage,
    UnknownSboss,
    UnknownSlice,
)
from .models import (
    OssModel,
    QosProfile,
    ResourceBudget,
    SliceRecord,
    SliceRequest,
    SliceState,
    SliceBindingRef,
)
from .sboss import NEGOTIATIONS, ReplyState, SbCore, aggregate_replies, validate_capabilities
from .store import DocumentStore
from .sim.substrate import Substrate
from .tenancy import TenantService, validate_slice_request

SBOSS = "sboss"
SLICES = "slices"
SLICES_BY_REQUEST = "slices_by_request"


class RoutingAssignment(OssModel):
    sboss_id: str
    sub_request: SliceRequest


class RoutingPlan(OssModel):
    assignments: list[RoutingAssignment]


def _split_compute(total: ResourceBudget, share: int, whole: int) -> ResourceBudget:
    """Per-domain compute ask, proportional to its share of the areas,
    rounded up per component so the domain gate never under-asks."""
    if whole <= 0 or share == whole:
        return total
    def part(value: int) -> int:
        return math.ceil(value * share / whole)
    return ResourceBudget(vcpus=part(total.vcpus), ram_gb=part(total.ram_gb), storage_gb=part(total.storage_gb))


def route_slice_request(req: SliceRequest, registry: list[dict]) -> RoutingPlan:
    """Minimal-cardinality cover of the requested areas by nfv-capable,
    onboarded domains; each area is assigned to exactly one chosen domain
    (the smallest id serving it)."""
    serving: dict[str, set[int]] = {}
    for record in registry:
        if record["status"] != "ONBOARDED":
            continue
        if "nfv" not in record["metadata"]["capabilities"]:
            continue
        serving[record["sboss_id"]] = set(record["metadata"]["areas_served"])

    wanted = set(req.coverage_areas)
    covered = set().union(*serving.values()) if serving else set()
    if not wanted <= covered:
        raise NoCoverage(f"areas {sorted(wanted - covered)} served by no onboarded nfv domain")

    ids = sorted(serving)
    chosen: tuple[str, ...] | None = None
    for size in range(1, len(ids) + 1):
        for subset in combinations(ids, size):
            union = set().union(*(serving[s] for s in subset))
            if wanted <= union:
                chosen = subset
                break
        if chosen:
            break
    assert chosen is not None

    per_domain: dict[str, list[int]] = {s: [] for s in chosen}
    for area in sorted(wanted):
        owner = min(s for s in chosen if area in serving[s])
        per_domain[owner].append(area)

    assignments = []
    populated = [s for s in chosen if per_domain[s]]
    for sboss_id in populated:
        areas = per_domain[sboss_id]
        assignments.append(
            RoutingAssignment(
                sboss_id=sboss_id,
                sub_request=SliceRequest(
                    request_id=f"{req.request_id}@{sboss_id}",
                    tenant_id=req.tenant_id,
                    slice_type=req.slice_type,
                    coverage_areas=areas,
                    compute=_split_compute(req.compute, len(areas), len(wanted)),
                    qos=req.qos,
                ),
            )
        )
    return RoutingPlan(assignments=assignments)


class NbOss:
    def __init__(
        self,
        store: DocumentStore,
        substrate: Substrate,
        sb: SbCore,
        tenants: TenantService,
        catalog_types: set[str],
    ):
        self.store = store
        self.sim = substrate
        self.sb = sb
        self.tenants = tenants
        self.catalog_types = catalog_types
        sb.nb = self
        substrate.register_handler("nb_negotiate", self._fire_negotiate)

    # -- domain registry -----------------------------------------------------------

    def onboard_sboss(self, endpoint: str, areas_served: list[int], capabilities: list[str],
                      default_nets: dict | None = None) -> dict:
        parsed = urlparse(endpoint)
        if not parsed.scheme:
            raise InvalidState(f"endpoint {endpoint!r} is not a valid URI")
        if not areas_served:
            raise EmptyAreaSet("areas_served must be non-empty")
        validate_capabilities(capabilities)
        for record in self.list_sboss():
            if record["endpoint"] == endpoint:
                raise DuplicateEndpoint(f"endpoint {endpoint} already onboarded as {record['sboss_id']}")
        sboss_id = self.store.next_id("sboss", "sboss")
        record = {
            "sboss_id": sboss_id,
            "endpoint": endpoint,
            "metadata": {
                "areas_served": sorted(set(areas_served)),
                "capabilities": sorted(set(capabilities)),
                "default_nets": default_nets or {},
            },
            "status": "ONBOARDED",
        }
        self.store.insert(SBOSS, sboss_id, record)
        self.sim.log("engine", sboss_id, "sboss_onboarded", {
            "areas": record["metadata"]["areas_served"], "capabilities": record["metadata"]["capabilities"],
        })
        return record

    def list_sboss(self) -> list[dict]:
        return [d.body for d in self.store.list_docs(SBOSS)]

    def get_sboss(self, sboss_id: str) -> dict:
        doc = self.store.try_get(SBOSS, sboss_id)
        if doc is None:
            raise UnknownSboss(f"domain {sboss_id} is not onboarded")
        return doc.body

    def mark_sboss_unreachable(self, sboss_id: str) -> None:
        self.store.update(SBOSS, sboss_id, lambda d: d.__setitem__("status", "UNREACHABLE"))
        self.sim.log("engine", sboss_id, "sboss_unreachable", {})

    # -- slice records ------------------------------------------------------------------

    def get_slice(self, slice_id: str) -> dict:
        doc = self.store.try_get(SLICES, slice_id)
        if doc is None:
            raise UnknownSlice(f"slice {slice_id} does not exist")
        return doc.body

    def list_slices(self) -> list[dict]:
        return [d.body for d in self.store.list_docs(SLICES)]

    def _transition(self, slice_id: str, to_state: SliceState, error: str | None = None) -> dict:
        t = self.sim.now()

        def apply(body: dict) -> None:
            record = SliceRecord.model_validate(body)
            from .models import SLICE_TRANSITIONS
            if to_state not in SLICE_TRANSITIONS[record.state]:
                raise InvalidState(f"slice {slice_id}: {record.state.value} cannot move to {to_state.value}")
            body["state"] = to_state.value
            body["state_history"].append([to_state.value, t])
            if error:
                body["error"] = error

        doc, _ = self.store.update(SLICES, slice_id, apply)
        self.sim.log("engine", slice_id, "slice_state", {"state": to_state.value, **({"error": error} if error else {})})
        return doc.body

    # -- submission -----------------------------------------------------------------------

    def submit_slice(self, req: SliceRequest) -> dict:
        """Create the record and schedule negotiation. Re-submitting a known
        request_id returns the existing record instead of a second slice."""
        existing = self.store.try_get(SLICES_BY_REQUEST, req.request_id)
        if existing is not None:
            return self.get_slice(existing.body["slice_id"])

        validate_slice_request(req, self.tenants, self.catalog_types)
        slice_id = self.store.next_id("slice", "slice")
        record = SliceRecord(
            slice_id=slice_id,
            request=req,
            state=SliceState.REQUESTED,
            state_history=[(SliceState.REQUESTED, self.sim.now())],
        )
        self.store.insert(SLICES, slice_id, record.dump())
        self.store.insert(SLICES_BY_REQUEST, req.request_id, {"slice_id": slice_id})
        self.sim.log("engine", slice_id, "slice_requested", {"request_id": req.request_id})
        self.sim.schedule("nb_negotiate", {"slice_id": slice_id}, 0.0)
        return self.get_slice(slice_id)

    def negotiate_slice(self, req: SliceRequest) -> dict:
        """Library convenience: submit and run the substrate until the record
        reaches a settled state."""
        record = self.submit_slice(req)
        self.sim.run_until_quiescent()
        return self.get_slice(record["slice_id"])

    def _fire_negotiate(self, payload: dict) -> None:
        slice_id = payload["slice_id"]
        record = self.get_slice(slice_id)
        if record["state"] != SliceState.REQUESTED.value:
            return
        req = SliceRequest.model_validate(record["request"])
        try:
            plan = route_slice_request(req, self.list_sboss())
        except NoCoverage as exc:
            self._transition(slice_id, SliceState.NEGOTIATING)
            self._transition(slice_id, SliceState.FAILED, error=f"{exc.code}: {exc.message}")
            return

        self._transition(slice_id, SliceState.NEGOTIATING)
        self.store.insert(NEGOTIATIONS, slice_id, {
            "slice_id": slice_id,
            "replies": {a.sboss_id: ReplyState.PENDING.value for a in plan.assignments},
            "reasons": {},
            "rollback_issued": False,
            "sub_binds": {},
            "pending_close": [],
        })
        for assignment in plan.assignments:
            self.sim.schedule("sb_process", {
                "slice_id": slice_id,
                "sboss_id": assignment.sboss_id,
                "sub_request": assignment.sub_request.dump(),
            }, 0.0)
        self._transition(slice_id, SliceState.INSTANTIATING)

    # -- replies and settlement ------------------------------------------------------------------

    def on_reply(self, slice_id: str) -> None:
        record = self.get_slice(slice_id)
        if record["state"] != SliceState.INSTANTIATING.value:
            return
        negotiation = self.store.get(NEGOTIATIONS, slice_id).body
        verdict = aggregate_replies(negotiation["replies"])
        if verdict == "still-pending":
            return
        if verdict == "all-ready":
            def apply(body: dict) -> None:
                bindings = []
                for sboss_id, binds in sorted(negotiation["sub_binds"].items()):
                    for bind in binds:
                        bindings.append(SliceBindingRef(
                            sboss_id=sboss_id,
                            instance_id=bind["instance_id"],
                            contributed_areas=bind["areas"],
                        ).dump())
                body["bindings"] = bindings

            self.store.update(SLICES, slice_id, apply)
            self._transition(slice_id, SliceState.ACTIVE)
            return
        self._rollback(slice_id, negotiation)

    def _rollback(self, slice_id: str, negotiation: dict) -> None:
        """Compensate whatever got built, newest domain bindings first, then
        fail the slice once every compensation settles."""
        to_close: list[tuple[str, str]] = []
        for sboss_id, binds in sorted(negotiation["sub_binds"].items(), reverse=True):
            for bind in reversed(binds):
                to_close.append((sboss_id, bind["instance_id"]))

        def apply(body: dict) -> None:
            body["rollback_issued"] = True
            body["pending_close"] = [iid for _, iid in to_close]

        self.store.update(NEGOTIATIONS, slice_id, apply)
        self.sim.log("engine", slice_id, "slice_rollback", {"instances": [iid for _, iid in to_close]})
        if not to_close:
            self._fail_from_negotiation(slice_id)
            return
        for _, instance_id in to_close:
            self.sim.schedule("sb_teardown", {
                "slice_id": slice_id, "instance_id": instance_id, "purpose": "rollback",
            }, 0.0)

    def _fail_from_negotiation(self, slice_id: str) -> None:
        negotiation = self.store.get(NEGOTIATIONS, slice_id).body
        reasons = "; ".join(f"{k}: {v}" for k, v in sorted(negotiation["reasons"].items()))
        self._transition(slice_id, SliceState.FAILED, error=reasons or "negotiation failed")

    def binding_closed(self, slice_id: str, instance_id: str, purpose: str) -> None:
        """A teardown/rollback compensation for one binding has settled."""
        def apply(body: dict) -> list[str]:
            if instance_id in body["pending_close"]:
                body["pending_close"].remove(instance_id)
            return body["pending_close"]

        _, remaining = self.store.update(NEGOTIATIONS, slice_id, apply)

        record = self.get_slice(slice_id)
        if record["state"] == SliceState.TERMINATING.value:
            def mark(body: dict) -> bool:
                for bind in body["bindings"]:
                    if bind["instance_id"] == instance_id:
                        bind["live"] = False
                return all(not b["live"] for b in body["bindings"])

            _, all_closed = self.store.update(SLICES, slice_id, mark)
            if all_closed:
                self._transition(slice_id, SliceState.TERMINATED)
        elif purpose == "rollback" and not remaining:
            self._fail_from_negotiation(slice_id)

    # -- termination --------------------------------------------------------------------------------

    def terminate_slice(self, slice_id: str) -> dict:
        record = self.get_slice(slice_id)
        state = SliceState(record["state"])
        if state in (SliceState.TERMINATED, SliceState.FAILED):
            return record  # absorbing: repeat terminations are no-ops
        if state != SliceState.ACTIVE:
            raise InvalidState(f"slice {slice_id} is {state.value}; termination needs ACTIVE")
        self._transition(slice_id, SliceState.TERMINATING)
        live = [b for b in record["bindings"] if b["live"]]
        if not live:
            self.store.update(SLICES, slice_id, lambda b: None)
            return self._transition(slice_id, SliceState.TERMINATED)
        for bind in live:
            self.sim.schedule("sb_teardown", {
                "slice_id": slice_id, "instance_id": bind["instance_id"], "purpose": "teardown",
            }, 0.0)
        return self.get_slice(slice_id)

    # -- modification --------------------------------------------------------------------------------

    def modify_slice(self, slice_id: str, qos: QosProfile | None = None,
                     coverage_areas: list[int] | None = None) -> dict:
        record = self.get_slice(slice_id)
        state = SliceState(record["state"])
        if state != SliceState.ACTIVE:
            raise InvalidState(f"slice {slice_id} is {state.value}; modification needs ACTIVE")
        req = SliceRequest.model_validate(record["request"])
        new_qos = qos if qos is not None else req.qos
        new_areas = sorted(set(coverage_areas)) if coverage_areas is not None else req.coverage_areas

        if coverage_areas is not None:
            live = [b for b in record["bindings"] if b["live"]]
            served = set()
            for bind in live:
                served |= set(self.get_sboss(bind["sboss_id"])["metadata"]["areas_served"])
            missing = set(new_areas) - served
            if missing:
                raise NoCoverage(f"areas {sorted(missing)} not served by the slice's domains")

        new_request = req.model_copy(update={"qos": new_qos, "coverage_areas": new_areas})

        def apply(body: dict) -> None:
            body["request"] = new_request.dump()

        self.store.update(SLICES, slice_id, apply)
        self._transition(slice_id, SliceState.UPDATING)

        def track(body: dict) -> None:
            body["pending_modify"] = [b["instance_id"] for b in record["bindings"] if b["live"]]

        self.store.update(NEGOTIATIONS, slice_id, track)
        for bind in record["bindings"]:
            if not bind["live"]:
                continue
            sub = new_request.model_copy(update={
                "request_id": f"{new_request.request_id}@{bind['sboss_id']}",
                "coverage_areas": new_areas,
            })
            self.sim.schedule("sb_modify", {
                "slice_id": slice_id,
                "instance_id": bind["instance_id"],
                "sub_request": sub.dump(),
            }, 0.0)
        return self.get_slice(slice_id)

    def modify_settled(self, slice_id: str, instance_id: str, ok: bool, reason: str = "") -> None:
        def apply(body: dict) -> list[str]:
            pending = body.get("pending_modify", [])
            if instance_id in pending:
                pending.remove(instance_id)
            body["pending_modify"] = pending
            return pending

        _, remaining = self.store.update(NEGOTIATIONS, slice_id, apply)
        record = self.get_slice(slice_id)
        if record["state"] != SliceState.UPDATING.value:
            return
        if not ok:
            self._transition(slice_id, SliceState.FAILED, error=reason or f"modification of {instance_id} failed")
            return
        if not remaining:
            def sync_areas(body: dict) -> None:
                for bind in body["bindings"]:
                    if bind["instance_id"] == instance_id or len(body["bindings"]) == 1:
                        bind["contributed_areas"] = body["request"]["coverage_areas"]

            self.store.update(SLICES, slice_id, sync_areas)
            self._transition(slice_id, SliceState.ACTIVE)
