"""Machine lifecycle: enlist, commission, OS deployment, power, release.

State changes follow the declared machine state machine only; completion of
the timed phases (commissioning probe, OS install, release wipe) arrives as
substrate events, so powering a machine off mid-deployment genuinely
interrupts it.
"""

from __future__ import annotations

from ..errors import InvalidState, QuotaExceeded, UnknownImage, UnknownMachine
from ..models import ResourceBudget
from ..store import DocumentStore
from ..sim.substrate import Substrate
from ..tenancy import TenantService
from .models import Machine, MachineNic, MachineState, PowerState

MACHINES = "machines"


class FleetService:
    def __init__(self, store: DocumentStore, substrate: Substrate, tenants: TenantService):
        self.store = store
        self.sim = substrate
        self.tenants = tenants
        substrate.register_handler("machine_commission_done", self._fire_commission_done)
        substrate.register_handler("machine_deploy_done", self._fire_deploy_done)
        substrate.register_handler("machine_release_done", self._fire_release_done)
        self.on_machine_released = None  # set by the overlay service

    # -- reads ----------------------------------------------------------------

    def get(self, machine_id: str) -> Machine:
        doc = self.store.try_get(MACHINES, machine_id)
        if doc is None:
            raise UnknownMachine(f"machine {machine_id} does not exist")
        return Machine.model_validate(doc.body)

    def list_machines(self) -> list[Machine]:
        return [Machine.model_validate(d.body) for d in self.store.list_docs(MACHINES)]

    def _set(self, machine_id: str, **fields) -> Machine:
        def apply(body: dict) -> None:
            body.update({k: (v.value if hasattr(v, "value") else v) for k, v in fields.items()})

        doc, _ = self.store.update(MACHINES, machine_id, apply)
        return Machine.model_validate(doc.body)

    # -- enlist -----------------------------------------------------------------

    def enlist_fleet(self) -> list[Machine]:
        """One machine per inventory server; re-enlisting adds nothing."""
        inventory = self.sim.inventory()
        created = []
        for server in inventory.servers if inventory else []:
            if self.store.exists(MACHINES, server.hostname):
                continue
            machine = Machine(machine_id=server.hostname, hostname=server.hostname)
            self.store.insert(MACHINES, server.hostname, machine.dump())
            created.append(machine)
        if created:
            self.sim.log("engine", "fleet", "machines_enlisted", {"count": len(created)})
        return self.list_machines()

    # -- commission ----------------------------------------------------------------

    def commission(self, machine_id: str) -> Machine:
        machine = self.get(machine_id)
        if machine.state != MachineState.NEW:
            raise InvalidState(f"{machine_id} is {machine.state.value}, commissioning needs NEW")
        updated = self._set(machine_id, state=MachineState.COMMISSIONING, power=PowerState.ON)
        self.sim.log("engine", machine_id, "machine_commissioning", {})
        self.sim.schedule(
            "machine_commission_done", {"machine_id": machine_id},
            self.sim.config.commission_s, subject=machine_id, transition="commission",
        )
        return updated

    def _fire_commission_done(self, payload: dict) -> None:
        machine_id = payload["machine_id"]
        machine = self.get(machine_id)
        if machine.state != MachineState.COMMISSIONING:
            return
        effect = self.sim.fault_effect(machine_id, "commission")
        if effect and effect["effect"] == "fail":
            self._set(machine_id, state=MachineState.FAILED, power=PowerState.OFF)
            self.sim.log("engine", machine_id, "machine_failed", {"reason": "ProbeFailed"})
            return
        server = self.sim.server_spec(machine_id)
        nics = self._probe_nics(machine_id, server)
        self._set(
            machine_id,
            state=MachineState.READY,
            power=PowerState.OFF,
            resources=ResourceBudget(
                vcpus=server["cores"], ram_gb=server["ram_gb"], storage_gb=server["storage_gb"]
            ).dump(),
            nics=[n.dump() for n in nics],
        )
        self.sim.log("engine", machine_id, "machine_ready", {"vcpus": server["cores"]})

    def _probe_nics(self, machine_id: str, server: dict) -> list[MachineNic]:
        inventory = self.sim.inventory()
        attached: dict[str, tuple[str, str]] = {}
        for cable in inventory.cabling:
            for end, other in ((cable.a, cable.b), (cable.b, cable.a)):
                if end[0] == machine_id:
                    attached[end[1]] = (other[0], other[1])
        nics = []
        for nic in server["nics"]:
            switch, port = attached.get(nic["name"], ("", ""))
            nics.append(MachineNic(name=nic["name"], mac=nic["mac"], switch=switch, port=port))
        return nics

    # -- OS deployment ----------------------------------------------------------------

    def deploy_os(self, machine_id: str, image: str, tenant_id: str) -> Machine:
        machine = self.get(machine_id)
        if machine.state != MachineState.READY:
            raise InvalidState(f"{machine_id} is {machine.state.value}, deploy needs READY")
        if image not in self.sim.images():
            raise UnknownImage(f"image {image} is not available")
        self.tenants.get_tenant(tenant_id)
        assert machine.resources is not None
        self.tenants.charge(tenant_id, "metal", machine.resources)  # raises QuotaExceeded

        self._set(machine_id, state=MachineState.ALLOCATED, tenant_id=tenant_id)
        self.sim.log("engine", machine_id, "machine_allocated", {"tenant": tenant_id})
        updated = self._set(machine_id, state=MachineState.DEPLOYING, power=PowerState.ON, os_image=image)
        self.sim.log("engine", machine_id, "machine_deploying", {"image": image})
        self.sim.schedule(
            "machine_deploy_done", {"machine_id": machine_id},
            self.sim.config.os_deploy_s, subject=machine_id, transition="deploy",
        )
        return updated

    def _fire_deploy_done(self, payload: dict) -> None:
        machine_id = payload["machine_id"]
        machine = self.get(machine_id)
        if machine.state != MachineState.DEPLOYING:
            return
        effect = self.sim.fault_effect(machine_id, "deploy")
        if effect and effect["effect"] == "fail":
            self._fail_deploying(machine_id, "installer fault")
            return
        self._set(machine_id, state=MachineState.DEPLOYED)
        self.sim.log("engine", machine_id, "machine_deployed", {})

    def _fail_deploying(self, machine_id: str, reason: str) -> None:
        machine = self.get(machine_id)
        if machine.tenant_id and machine.resources:
            self.tenants.refund(machine.tenant_id, "metal", machine.resources)
        self._set(machine_id, state=MachineState.FAILED, tenant_id=None, os_image=None, power=PowerState.OFF)
        self.sim.log("engine", machine_id, "machine_failed", {"reason": reason})

    # -- power -----------------------------------------------------------------------------

    def set_power(self, machine_id: str, power: PowerState) -> Machine:
        machine = self.get(machine_id)
        if power == PowerState.OFF and machine.state == MachineState.DEPLOYING:
            # cutting power mid-install bricks the deployment
            self._fail_deploying(machine_id, "power lost during deployment")
            return self.get(machine_id)
        updated = self._set(machine_id, power=power)
        if machine.power != power:
            self.sim.log("engine", machine_id, "machine_power", {"power": power.value})
        return updated

    # -- release -----------------------------------------------------------------------------

    def release(self, machine_id: str) -> Machine:
        machine = self.get(machine_id)
        if machine.state != MachineState.DEPLOYED:
            raise InvalidState(f"{machine_id} is {machine.state.value}, release needs DEPLOYED")
        updated = self._set(machine_id, state=MachineState.RELEASING)
        self.sim.log("engine", machine_id, "machine_releasing", {})
        self.sim.schedule(
            "machine_release_done", {"machine_id": machine_id},
            self.sim.config.release_s, subject=machine_id, transition="release",
        )
        return updated

    def _fire_release_done(self, payload: dict) -> None:
        machine_id = payload["machine_id"]
        machine = self.get(machine_id)
        if machine.state != MachineState.RELEASING:
            return
        if self.on_machine_released is not None:
            self.on_machine_released(machine_id)
        if machine.tenant_id and machine.resources:
            self.tenants.refund(machine.tenant_id, "metal", machine.resources)
        self._set(
            machine_id,
            state=MachineState.READY,
            power=PowerState.OFF,
            tenant_id=None,
            os_image=None,
        )
        self.sim.log("engine", machine_id, "machine_released", {})
