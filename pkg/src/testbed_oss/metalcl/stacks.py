"""Zero-touch stack installation over deployed machines.

A plan runs its playbook sequence step by step against the member machines;
on success the result registers with the virtual topology: an IaaS stack
becomes a VIM whose capacity is the component-wise sum of the member
machines' resources, a PaaS plan becomes a cluster record.
"""

from __future__ import annotations

from ..errors import InvalidState, MachineUnreachable, UnknownStack
from ..models import ResourceBudget
from ..store import DocumentStore
from ..sim.substrate import Substrate
from ..nfvcl.topology import TopologyService
from .fleet import FleetService
from .models import MachineState, PowerState, StackKind, StackPlan
from .overlays import OverlayService

STACKS = "stacks"


class StackService:
    def __init__(
        self,
        store: DocumentStore,
        substrate: Substrate,
        fleet: FleetService,
        overlays: OverlayService,
        topology: TopologyService,
    ):
        self.store = store
        self.sim = substrate
        self.fleet = fleet
        self.overlays = overlays
        self.topology = topology
        substrate.register_handler("stack_step", self._fire_step)

    def get(self, stack_id: str) -> dict:
        doc = self.store.try_get(STACKS, stack_id)
        if doc is None:
            raise UnknownStack(f"stack {stack_id} does not exist")
        return doc.body

    def list_stacks(self) -> list[dict]:
        return [d.body for d in self.store.list_docs(STACKS)]

    def install_stack(self, plan: StackPlan) -> dict:
        machines = [self.fleet.get(m) for m in plan.machines]
        tenants = {m.tenant_id for m in machines}
        if len(tenants) != 1 or None in tenants:
            raise InvalidState("stack machines must all be deployed to one tenant")
        for machine in machines:
            if machine.state != MachineState.DEPLOYED:
                raise InvalidState(f"{machine.machine_id} is {machine.state.value}, stack needs DEPLOYED")
            if machine.power != PowerState.ON:
                raise MachineUnreachable(f"{machine.machine_id} is powered off")
        mgmt = self.overlays.by_name(plan.networks.mgmt)
        data = self.overlays.by_name(plan.networks.data)
        if mgmt.overlay_id == data.overlay_id:
            raise InvalidState("mgmt and data must be different overlays")

        stack_id = self.store.next_id("stack", "stack")
        steps = [{"name": name, "status": "PENDING"} for name in plan.playbooks()]
        body = {
            "stack_id": stack_id,
            "kind": plan.kind.value,
            "tenant_id": machines[0].tenant_id,
            "machines": list(plan.machines),
            "networks": plan.networks.dump(),
            "steps": steps,
            "state": "RUNNING",
            "result": None,
        }
        self.store.insert(STACKS, stack_id, body)
        self.sim.log("engine", stack_id, "stack_install_started", {
            "kind": plan.kind.value, "machines": list(plan.machines), "steps": [s["name"] for s in steps],
        })
        self.sim.schedule("stack_step", {"stack_id": stack_id, "index": 0},
                          self.sim.config.playbook_step_s, subject=stack_id, transition="playbook_step")
        return body

    def _fire_step(self, payload: dict) -> None:
        stack_id = payload["stack_id"]
        index = payload["index"]
        body = self.get(stack_id)
        if body["state"] != "RUNNING":
            return
        step_name = body["steps"][index]["name"]

        offline = [
            m for m in body["machines"]
            if self.fleet.get(m).power != PowerState.ON
        ]
        effect = self.sim.fault_effect(stack_id, f"playbook:{step_name}") or \
            self.sim.fault_effect(stack_id, "playbook_step")
        failed_reason = None
        if offline:
            failed_reason = f"machines unreachable: {', '.join(sorted(offline))}"
        elif effect and effect["effect"] == "fail":
            failed_reason = "fault injected"

        if failed_reason:
            def apply(doc: dict) -> None:
                doc["steps"][index]["status"] = "FAILED"
                for later in doc["steps"][index + 1:]:
                    later["status"] = "SKIPPED"
                doc["state"] = "FAILED"
                doc["result"] = {"error": failed_reason}

            self.store.update(STACKS, stack_id, apply)
            self.sim.log("engine", stack_id, "playbook_step", {
                "step": step_name, "index": index, "status": "FAILED", "reason": failed_reason,
            })
            self.sim.log("engine", stack_id, "stack_failed", {"reason": failed_reason})
            return

        self.store.update(STACKS, stack_id, lambda d: d["steps"][index].__setitem__("status", "SUCCEEDED"))
        self.sim.log("engine", stack_id, "playbook_step", {"step": step_name, "index": index, "status": "SUCCEEDED"})

        if index + 1 < len(body["steps"]):
            self.sim.schedule("stack_step", {"stack_id": stack_id, "index": index + 1},
                              self.sim.config.playbook_step_s, subject=stack_id, transition="playbook_step")
        else:
            self._finalize(stack_id)

    def _finalize(self, stack_id: str) -> None:
        body = self.get(stack_id)
        capacity = ResourceBudget.zero()
        for machine_id in body["machines"]:
            machine = self.fleet.get(machine_id)
            assert machine.resources is not None
            capacity = capacity.add(machine.resources)

        if body["kind"] == StackKind.IAAS_STACK.value:
            record = self.topology.register_vim(
                name=f"{stack_id}-vim", capacity=capacity, areas=None, source=stack_id,
            )
            result = {"vim_id": record["vim_id"], "capacity": capacity.dump()}
        else:
            record = self.topology.register_cluster(
                name=f"{stack_id}-cluster", areas=None, owner=body["tenant_id"], source=stack_id,
            )
            result = {"cluster_id": record["cluster_id"], "capacity": capacity.dump()}

        def apply(doc: dict) -> None:
            doc["state"] = "COMPLETE"
            doc["result"] = result

        self.store.update(STACKS, stack_id, apply)
        self.sim.log("engine", stack_id, "stack_complete", dict(result))
