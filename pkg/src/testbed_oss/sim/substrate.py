"""Deterministic discrete-event substrate: clock, event log, VIMs, NFVO,
switches with LLDP, and scriptable faults.

Everything south of the control plane is simulated here. All substrate
state lives in two store documents (`sim/state` and `sim/events`), so a
process restart over the same store resumes exactly where it left off.
Mutations are serialized by a single reentrant lock (file-backed stores use
a cross-process lock): the clock is single-writer and event handlers run
while it is held.

Determinism contract: with the same inventory, seed, ordered request trace
and fault profile, the event log (sequence, sim-time, subject, transition,
detail) is byte-identical between runs. Wall-clock timestamps are carried
for operators but excluded from the canonical log hash.
"""

from __future__ import annotations

import time
from typing import Any, Callable, Optional

from ..canonical import content_hash
from ..errors import (
    QuotaExceeded,
    SwitchUnreachable,
    UnknownNetwork,
    UnknownNs,
    UnknownNsd,
    UnknownVim,
    UnknownVimInstance,
    InvalidPackage,
)
from ..models import ResourceBudget
from ..store import DocumentStore
from .config import SimConfig
from .inventory import SimInventory, load_inventory

SIM = "sim"
STATE_DOC = "state"
EVENTS_DOC = "events"

NS_STATES = ["NOT_INSTANTIATED", "INSTANTIATING", "INSTANTIATED", "TERMINATING", "TERMINATED", "FAILED"]

Handler = Callable[[dict], None]


def _fresh_state(seed: int, config: SimConfig) -> dict:
    return {
        "now": 0.0,
        "order": 0,
        "queue": [],
        "seed": seed,
        "config": config.model_dump(mode="json"),
        "faults": {"seed": seed, "rules": []},
        "inventory": None,
        "vims": {},
        "vim_order": [],
        "nfvo": {"packages": {}, "ns": {}},
        "access_ports": {},
        "trunks": {},
    }


class Substrate:
    def __init__(
        self,
        store: DocumentStore,
        config: SimConfig | None = None,
        seed: int = 0,
        inventory: SimInventory | dict | None = None,
    ):
        self.store = store
        self.lock = store.make_lock("sim")
        self.handlers: dict[str, Handler] = {}
        self.on_ns_settled: Optional[Callable[[str, str], None]] = None
        with self.lock:
            if not store.exists(SIM, STATE_DOC):
                config = config or SimConfig()
                store.insert(SIM, STATE_DOC, _fresh_state(seed, config))
                store.insert(SIM, EVENTS_DOC, {"entries": []})
                if config.default_vim:
                    self.vim_register("vim-default", "built-in IaaS", config.default_vim_capacity, areas=None)
            if inventory is not None:
                self.load_inventory(inventory)
        self._register_internal_handlers()

    # -- state plumbing --------------------------------------------------------

    def _read(self) -> dict:
        return self.store.get(SIM, STATE_DOC).body

    def _mutate(self, fn: Callable[[dict], Any]) -> Any:
        with self.lock:
            doc = self.store.get(SIM, STATE_DOC)
            body = doc.body
            result = fn(body)
            self.store.commit(SIM, STATE_DOC, body, doc.revision)
            return result

    @property
    def config(self) -> SimConfig:
        return SimConfig.model_validate(self._read()["config"])

    @property
    def seed(self) -> int:
        return int(self._read()["seed"])

    def now(self) -> float:
        return float(self._read()["now"])

    # -- event log ----------------------------------------------------------------

    def log(
        self,
        actor: str,
        subject: str,
        transition: str,
        detail: dict | None = None,
        sim_time: float | None = None,
    ) -> dict:
        with self.lock:
            t = self.now() if sim_time is None else sim_time

            def append(body: dict) -> dict:
                entry = {
                    "seq": len(body["entries"]) + 1,
                    "t": t,
                    "actor": actor,
                    "subject": subject,
                    "transition": transition,
                    "detail": detail or {},
                    "wall": time.time(),
                }
                body["entries"].append(entry)
                return entry

            _, entry = self.store.update(SIM, EVENTS_DOC, append)
            return entry

    def events(self, after: int = 0) -> list[dict]:
        entries = self.store.get(SIM, EVENTS_DOC).body["entries"]
        return [e for e in entries if e["seq"] > after]

    def log_hash(self) -> str:
        """Canonical hash of the deterministic log fields."""
        rows = [
            [e["seq"], e["t"], e["actor"], e["subject"], e["transition"], e["detail"]]
            for e in self.events()
        ]
        return content_hash(rows)

    # -- clock ------------------------------------------------------------------------

    def register_handler(self, kind: str, handler: Handler) -> None:
        self.handlers[kind] = handler

    def schedule(
        self,
        kind: str,
        payload: dict,
        delay: float,
        subject: str | None = None,
        transition: str | None = None,
    ) -> float:
        """Enqueue an event `delay` sim-seconds from now. When (subject,
        transition) matches an active delay fault the extra is added here,
        at scheduling time. Returns the fire time."""
        if delay < 0:
            raise ValueError("negative delay")

        def enqueue(state: dict) -> float:
            extra = 0.0
            if subject is not None and transition is not None:
                effect = _match_fault(state["faults"], subject, transition)
                if effect and effect["effect"] == "delay":
                    extra = float(effect.get("extra", 0.0))
            fire = state["now"] + delay + extra
            state["order"] += 1
            state["queue"].append({"fire": fire, "order": state["order"], "kind": kind, "payload": payload})
            return fire

        return self._mutate(enqueue)

    def next_fire_time(self) -> float | None:
        queue = self._read()["queue"]
        if not queue:
            return None
        return min((ev["fire"], ev["order"]) for ev in queue)[0]

    def advance(self, dt: float) -> list[dict]:
        """Fire every event due within the window in (fire_time, order)
        sequence; events scheduled by handlers are fired too when they fall
        inside the window. Returns the fired events."""
        if dt < 0:
            raise ValueError("dt must be >= 0")
        fired: list[dict] = []
        with self.lock:
            target = self.now() + dt
            while True:
                def pop_due(state: dict) -> dict | None:
                    due = [ev for ev in state["queue"] if ev["fire"] <= target]
                    if not due:
                        return None
                    ev = min(due, key=lambda e: (e["fire"], e["order"]))
                    state["queue"].remove(ev)
                    state["now"] = max(state["now"], ev["fire"])
                    return ev

                event = self._mutate(pop_due)
                if event is None:
                    break
                handler = self.handlers.get(event["kind"])
                if handler is None:
                    raise KeyError(f"no handler registered for event kind {event['kind']}")
                handler(event["payload"])
                fired.append(event)
            self._mutate(lambda s: s.__setitem__("now", target))
        return fired

    def run_until_quiescent(self, limit: int = 100_000) -> float:
        """Advance straight to each pending fire time until the queue drains."""
        with self.lock:
            for _ in range(limit):
                nxt = self.next_fire_time()
                if nxt is None:
                    return self.now()
                self.advance(max(0.0, nxt - self.now()))
            raise RuntimeError("event queue did not drain")

    # -- faults ------------------------------------------------------------------------------

    def set_faults(self, rules: list[dict], seed: int | None = None) -> dict:
        """Replace the active fault profile. Each rule: optional `subject`,
        optional `transition`, `effect` in {fail, delay, unreachable} and
        `extra` sim-seconds for delays."""
        def apply(state: dict) -> dict:
            state["faults"] = {
                "seed": state["seed"] if seed is None else seed,
                "rules": rules,
            }
            return state["faults"]

        profile = self._mutate(apply)
        self.log("sim", "faults", "fault_profile_set", {"rules": rules})
        return profile

    def fault_effect(self, subject: str, transition: str) -> dict | None:
        return _match_fault(self._read()["faults"], subject, transition)

    # -- inventory ground truth ------------------------------------------------------------

    def load_inventory(self, document: SimInventory | dict) -> SimInventory:
        inv = document if isinstance(document, SimInventory) else load_inventory(document)
        self._mutate(lambda s: s.__setitem__("inventory", inv.model_dump(mode="json")))
        self.log("sim", "inventory", "inventory_loaded", {
            "servers": len(inv.servers), "switches": len(inv.switches), "cables": len(inv.cabling),
        })
        return inv

    def inventory(self) -> SimInventory | None:
        raw = self._read()["inventory"]
        return SimInventory.model_validate(raw) if raw else None

    def server_spec(self, hostname: str) -> dict:
        inv = self._read()["inventory"] or {"servers": []}
        for server in inv["servers"]:
            if server["hostname"] == hostname:
                return server
        raise UnknownVimInstance(f"no server {hostname} in inventory")

    def images(self) -> list[str]:
        inv = self._read()["inventory"]
        return list(inv["images"]) if inv else []

    def cabling_edges(self) -> set[frozenset[str]]:
        """Ground-truth undirected port-level edge set: each element is a
        frozenset of two "device|port" endpoints."""
        inv = self._read()["inventory"]
        edges = set()
        if inv:
            for cable in inv["cabling"]:
                a, b = cable["a"], cable["b"]
                edges.add(frozenset((f"{a[0]}|{a[1]}", f"{b[0]}|{b[1]}")))
        return edges

    def switch_ids(self) -> list[str]:
        inv = self._read()["inventory"]
        return [s["id"] for s in inv["switches"]] if inv else []

    def read_lldp(self, switch_id: str) -> dict[str, tuple[str, str]]:
        """Per-port neighbor table derived from the cabling plan."""
        inv = self._read()["inventory"]
        if not inv or switch_id not in {s["id"] for s in inv["switches"]}:
            raise UnknownNetwork(f"switch {switch_id} does not exist")
        effect = self.fault_effect(switch_id, "lldp")
        if effect and effect["effect"] == "unreachable":
            raise SwitchUnreachable(f"switch {switch_id} is not answering")
        table: dict[str, tuple[str, str]] = {}
        for cable in inv["cabling"]:
            a, b = tuple(cable["a"]), tuple(cable["b"])
            if a[0] == switch_id:
                table[a[1]] = (b[0], b[1])
            elif b[0] == switch_id:
                table[b[1]] = (a[0], a[1])
        return table

    # -- switch overlay programming ----------------------------------------------------------

    def program_access_port(self, switch: str, port: str, vlan: int, overlay_id: str) -> None:
        def apply(state: dict) -> None:
            state["access_ports"][f"{switch}|{port}"] = {"vlan": vlan, "overlay": overlay_id}

        self._mutate(apply)

    def clear_access_port(self, switch: str, port: str) -> None:
        self._mutate(lambda s: s["access_ports"].pop(f"{switch}|{port}", None))

    def program_trunk(self, link: tuple[str, str], vlan: int) -> None:
        key = "|".join(sorted(link))

        def apply(state: dict) -> None:
            vlans = set(state["trunks"].get(key, []))
            vlans.add(vlan)
            state["trunks"][key] = sorted(vlans)

        self._mutate(apply)

    def access_ports(self) -> dict[str, dict]:
        return dict(self._read()["access_ports"])

    def trunks(self) -> dict[str, list[int]]:
        return dict(self._read()["trunks"])

    # -- VIM -----------------------------------------------------------------------------------

    def vim_register(self, vim_id: str, name: str, capacity: ResourceBudget, areas: list[int] | None) -> dict:
        def apply(state: dict) -> dict:
            record = {
                "vim_id": vim_id,
                "name": name,
                "capacity": capacity.model_dump(mode="json"),
                "areas": sorted(areas) if areas is not None else None,
                "networks": {},
                "instances": {},
                "usage": ResourceBudget.zero().model_dump(mode="json"),
            }
            state["vims"][vim_id] = record
            if vim_id not in state["vim_order"]:
                state["vim_order"].append(vim_id)
            return record

        record = self._mutate(apply)
        self.log("sim", vim_id, "vim_registered", {"capacity": record["capacity"], "areas": record["areas"]})
        return record

    def vim_ids(self) -> list[str]:
        return list(self._read()["vim_order"])

    def vim_record(self, vim_id: str) -> dict:
        vims = self._read()["vims"]
        if vim_id not in vims:
            raise UnknownVim(f"VIM {vim_id} is not registered")
        return vims[vim_id]

    def vim_create_network(self, name: str, cidr: str, mode: str, vim_id: str | None = None) -> None:
        """Realize a network on one VIM, or on every registered VIM."""
        def apply(state: dict) -> None:
            targets = [vim_id] if vim_id else list(state["vim_order"])
            for vid in targets:
                if vid not in state["vims"]:
                    raise UnknownVim(f"VIM {vid} is not registered")
                state["vims"][vid]["networks"][name] = {"cidr": cidr, "mode": mode}

        self._mutate(apply)
        self.log("sim", name, "vim_network_created", {"cidr": cidr, "mode": mode})

    def vim_boot(self, vim_id: str, flavor: ResourceBudget, tags: dict, network: str | None = None) -> str:
        def apply(state: dict) -> str:
            if vim_id not in state["vims"]:
                raise UnknownVim(f"VIM {vim_id} is not registered")
            vim = state["vims"][vim_id]
            if network is not None and network not in vim["networks"]:
                raise UnknownNetwork(f"network {network} not present on {vim_id}")
            usage = ResourceBudget.model_validate(vim["usage"]).add(flavor)
            capacity = ResourceBudget.model_validate(vim["capacity"])
            if not usage.fits_within(capacity):
                raise QuotaExceeded(
                    f"VIM {vim_id} capacity exceeded",
                    ask=flavor.model_dump(mode="json"),
                    usage=vim["usage"],
                    capacity=vim["capacity"],
                )
            state["_next_vm"] = state.get("_next_vm", 0) + 1
            instance_id = f"vm-{state['_next_vm']:04d}"
            vim["instances"][instance_id] = {
                "flavor": flavor.model_dump(mode="json"),
                "tags": tags,
                "network": network,
            }
            vim["usage"] = usage.model_dump(mode="json")
            return instance_id

        instance_id = self._mutate(apply)
        self.log("sim", f"{vim_id}/{instance_id}", "vm_booted", {"flavor": flavor.model_dump(mode="json"), "tags": tags})
        return instance_id

    def vim_delete(self, vim_id: str, instance_id: str) -> None:
        def apply(state: dict) -> None:
            if vim_id not in state["vims"]:
                raise UnknownVim(f"VIM {vim_id} is not registered")
            vim = state["vims"][vim_id]
            if instance_id not in vim["instances"]:
                raise UnknownVimInstance(f"{instance_id} not found on {vim_id}")
            flavor = ResourceBudget.model_validate(vim["instances"][instance_id]["flavor"])
            del vim["instances"][instance_id]
            vim["usage"] = ResourceBudget.model_validate(vim["usage"]).sub(flavor).model_dump(mode="json")

        self._mutate(apply)
        self.log("sim", f"{vim_id}/{instance_id}", "vm_deleted", {})

    def vim_usage(self) -> dict[str, dict]:
        state = self._read()
        return {vid: dict(v["usage"]) for vid, v in sorted(state["vims"].items())}

    def vim_instances(self, vim_id: str | None = None) -> dict[str, dict]:
        state = self._read()
        out: dict[str, dict] = {}
        for vid, vim in sorted(state["vims"].items()):
            if vim_id is not None and vid != vim_id:
                continue
            for iid, rec in vim["instances"].items():
                out[iid] = {**rec, "vim_id": vid}
        return out

    # -- NFVO ---------------------------------------------------------------------------------------

    def nfvo_onboard(self, package: dict) -> str:
        """Content-addressed onboarding; re-onboarding an identical package is
        a no-op returning the same id."""
        _validate_package_refs(package)
        digest = content_hash(package)

        def apply(state: dict) -> bool:
            fresh = digest not in state["nfvo"]["packages"]
            if fresh:
                state["nfvo"]["packages"][digest] = package
            return fresh

        fresh = self._mutate(apply)
        if fresh:
            self.log("sim", digest[:12], "package_onboarded", {"nsd": package["nsd"]["nsd_id"]})
        return digest

    def nfvo_package_count(self) -> int:
        return len(self._read()["nfvo"]["packages"])

    def nfvo_has_package(self, digest: str) -> bool:
        return digest in self._read()["nfvo"]["packages"]

    def nfvo_instantiate(self, nsd_id: str, package_hash: str, vim_id: str, tags: dict | None = None) -> str:
        def begin(state: dict) -> str:
            packages = state["nfvo"]["packages"]
            if package_hash not in packages:
                raise UnknownNsd(f"package {package_hash[:12]} not onboarded")
            if packages[package_hash]["nsd"]["nsd_id"] != nsd_id:
                raise UnknownNsd(f"nsd {nsd_id} not in package {package_hash[:12]}")
            if vim_id not in state["vims"]:
                raise UnknownVim(f"VIM {vim_id} is not registered")
            state["_next_ns"] = state.get("_next_ns", 0) + 1
            ns_id = f"ns-{state['_next_ns']:04d}"
            state["nfvo"]["ns"][ns_id] = {
                "ns_id": ns_id,
                "nsd_id": nsd_id,
                "package": package_hash,
                "vim_id": vim_id,
                "state": "INSTANTIATING",
                "vdus": {},
                "tags": tags or {},
            }
            return ns_id

        ns_id = self._mutate(begin)
        self.log("sim", ns_id, "ns_instantiating", {"nsd_id": nsd_id, "vim": vim_id})
        self.schedule("ns_instantiated", {"ns_id": ns_id}, self.config.ns_instantiate_s,
                      subject=ns_id, transition="ns_instantiate")
        return ns_id

    def nfvo_terminate(self, ns_id: str) -> None:
        def begin(state: dict) -> None:
            ns = state["nfvo"]["ns"].get(ns_id)
            if ns is None:
                raise UnknownNs(f"NS {ns_id} does not exist")
            if ns["state"] not in ("INSTANTIATED", "INSTANTIATING"):
                raise UnknownNs(f"NS {ns_id} is {ns['state']}, not terminable")
            ns["state"] = "TERMINATING"

        self._mutate(begin)
        self.log("sim", ns_id, "ns_terminating", {})
        self.schedule("ns_terminated", {"ns_id": ns_id}, self.config.ns_terminate_s,
                      subject=ns_id, transition="ns_terminate")

    def nfvo_update(self, ns_id: str, new_package_hash: str, new_nsd_id: str) -> None:
        """Apply a new descriptor revision to a running NS: the VDU delta is
        booted/deleted in place, the NS keeps its id and never passes through
        a destroy."""
        def check(state: dict) -> None:
            ns = state["nfvo"]["ns"].get(ns_id)
            if ns is None:
                raise UnknownNs(f"NS {ns_id} does not exist")
            if ns["state"] != "INSTANTIATED":
                raise UnknownNs(f"NS {ns_id} is {ns['state']}, not updatable")
            if new_package_hash not in state["nfvo"]["packages"]:
                raise UnknownNsd(f"package {new_package_hash[:12]} not onboarded")

        self._mutate(check)
        self.log("sim", ns_id, "ns_updating", {"package": new_package_hash[:12]})
        self.schedule("ns_updated", {"ns_id": ns_id, "package": new_package_hash, "nsd_id": new_nsd_id},
                      self.config.ns_instantiate_s, subject=ns_id, transition="ns_update")

    def ns_record(self, ns_id: str) -> dict:
        ns = self._read()["nfvo"]["ns"].get(ns_id)
        if ns is None:
            raise UnknownNs(f"NS {ns_id} does not exist")
        return ns

    def ns_states(self) -> dict[str, str]:
        return {k: v["state"] for k, v in self._read()["nfvo"]["ns"].items()}

    # -- internal event handlers ------------------------------------------------------------------------

    def _register_internal_handlers(self) -> None:
        self.register_handler("ns_instantiated", self._fire_ns_instantiated)
        self.register_handler("ns_terminated", self._fire_ns_terminated)
        self.register_handler("ns_updated", self._fire_ns_updated)

    def _package_vdus(self, state: dict, package_hash: str) -> list[dict]:
        """Flatten a package into bootable VDU specs (KNFs and PNFs carry no
        VDUs and consume no VIM capacity)."""
        package = state["nfvo"]["packages"][package_hash]
        vdus = []
        for vnfd in package["vnfds"]:
            for vdu in vnfd.get("vdus", []):
                vdus.append({
                    "name": vdu["name"],
                    "vnfd_id": vnfd["vnfd_id"],
                    "flavor": {"vcpus": vdu["vcpus"], "ram_gb": vdu["ram_gb"], "storage_gb": vdu["storage_gb"]},
                    "image": vdu.get("image", ""),
                })
        return vdus

    def _fire_ns_instantiated(self, payload: dict) -> None:
        ns_id = payload["ns_id"]
        state = self._read()
        ns = state["nfvo"]["ns"].get(ns_id)
        if ns is None or ns["state"] != "INSTANTIATING":
            return  # superseded (e.g. terminated while in flight)
        effect = self.fault_effect(ns_id, "ns_instantiate")
        if effect and effect["effect"] == "fail":
            self._mutate(lambda s: s["nfvo"]["ns"][ns_id].__setitem__("state", "FAILED"))
            self.log("sim", ns_id, "ns_failed", {"reason": "fault injected"})
            self._notify_ns(ns_id, "FAILED")
            return

        vdus = self._package_vdus(state, ns["package"])
        booted: dict[str, str] = {}
        try:
            for vdu in vdus:
                flavor = ResourceBudget.model_validate(vdu["flavor"])
                booted[vdu["name"]] = self.vim_boot(
                    ns["vim_id"], flavor,
                    tags={"ns": ns_id, "vdu": vdu["name"], **ns.get("tags", {})},
                )
        except QuotaExceeded as exc:
            for instance_id in booted.values():
                self.vim_delete(ns["vim_id"], instance_id)
            self._mutate(lambda s: s["nfvo"]["ns"][ns_id].__setitem__("state", "FAILED"))
            self.log("sim", ns_id, "ns_failed", {"reason": exc.code, "detail": exc.message})
            self._notify_ns(ns_id, "FAILED")
            return

        def finish(s: dict) -> None:
            s["nfvo"]["ns"][ns_id]["state"] = "INSTANTIATED"
            s["nfvo"]["ns"][ns_id]["vdus"] = booted

        self._mutate(finish)
        self.log("sim", ns_id, "ns_instantiated", {"vdus": sorted(booted)})
        self._notify_ns(ns_id, "INSTANTIATED")

    def _fire_ns_terminated(self, payload: dict) -> None:
        ns_id = payload["ns_id"]
        state = self._read()
        ns = state["nfvo"]["ns"].get(ns_id)
        if ns is None or ns["state"] != "TERMINATING":
            return
        for vdu_name in sorted(ns["vdus"]):
            self.vim_delete(ns["vim_id"], ns["vdus"][vdu_name])

        def finish(s: dict) -> None:
            s["nfvo"]["ns"][ns_id]["state"] = "TERMINATED"
            s["nfvo"]["ns"][ns_id]["vdus"] = {}

        self._mutate(finish)
        self.log("sim", ns_id, "ns_terminated", {})
        self._notify_ns(ns_id, "TERMINATED")

    def _fire_ns_updated(self, payload: dict) -> None:
        ns_id = payload["ns_id"]
        state = self._read()
        ns = state["nfvo"]["ns"].get(ns_id)
        if ns is None or ns["state"] != "INSTANTIATED":
            return
        effect = self.fault_effect(ns_id, "ns_update")
        if effect and effect["effect"] == "fail":
            self.log("sim", ns_id, "ns_update_failed", {"reason": "fault injected"})
            self._notify_ns(ns_id, "UPDATE_FAILED")
            return
        new_vdus = {v["name"]: v for v in self._package_vdus(state, payload["package"])}
        current = dict(ns["vdus"])
        added = sorted(set(new_vdus) - set(current))
        removed = sorted(set(current) - set(new_vdus))
        for name in removed:
            self.vim_delete(ns["vim_id"], current.pop(name))
        for name in added:
            flavor = ResourceBudget.model_validate(new_vdus[name]["flavor"])
            current[name] = self.vim_boot(
                ns["vim_id"], flavor, tags={"ns": ns_id, "vdu": name, **ns.get("tags", {})}
            )

        def finish(s: dict) -> None:
            rec = s["nfvo"]["ns"][ns_id]
            rec["vdus"] = current
            rec["package"] = payload["package"]
            rec["nsd_id"] = payload["nsd_id"]

        self._mutate(finish)
        self.log("sim", ns_id, "ns_updated", {"added": added, "removed": removed})
        self._notify_ns(ns_id, "UPDATED")

    def _notify_ns(self, ns_id: str, outcome: str) -> None:
        if self.on_ns_settled is not None:
            self.on_ns_settled(ns_id, outcome)

    # -- snapshots --------------------------------------------------------------------------------------------

    def usage_snapshot(self) -> dict:
        """Deterministic resource usage view used by conservation checks."""
        state = self._read()
        return {
            "vims": {vid: vim["usage"] for vid, vim in sorted(state["vims"].items())},
            "vm_count": sum(len(v["instances"]) for v in state["vims"].values()),
            "live_ns": sorted(
                k for k, v in state["nfvo"]["ns"].items() if v["state"] in ("INSTANTIATING", "INSTANTIATED")
            ),
        }


def _match_fault(faults: dict, subject: str, transition: str) -> dict | None:
    for rule in faults.get("rules", []):
        rule_subject = rule.get("subject")
        rule_transition = rule.get("transition")
        if rule_subject is not None and rule_subject != subject:
            continue
        if rule_transition is not None and rule_transition != transition:
            continue
        return rule
    return None


def _validate_package_refs(package: dict) -> None:
    """Structural reference check on a descriptor package: every vnfd_ref and
    every virtual link target must resolve within the package."""
    if "nsd" not in package or "vnfds" not in package:
        raise InvalidPackage("package must carry nsd and vnfds")
    vnfd_ids = {v["vnfd_id"] for v in package["vnfds"]}
    for ref in package["nsd"].get("vnfd_refs", []):
        if ref not in vnfd_ids:
            raise InvalidPackage(f"nsd references missing vnfd {ref}")
