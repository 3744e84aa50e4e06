"""All simulated operation durations, in one place.

These are placeholder timings: tests advance relative to them and never
depend on the absolute values outside of fixtures.
"""

from __future__ import annotations

from pydantic import BaseModel, ConfigDict

from ..models import ResourceBudget


class SimConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    commission_s: float = 60.0
    os_deploy_s: float = 120.0
    release_s: float = 10.0
    playbook_step_s: float = 30.0
    ns_instantiate_s: float = 30.0
    ns_terminate_s: float = 10.0

    # pre-existing IaaS the control plane can target before any stack install
    default_vim: bool = True
    default_vim_capacity: ResourceBudget = ResourceBudget(vcpus=1024, ram_gb=4096, storage_gb=40960)

    # demo pacing only; sim time semantics never depend on it
    realtime_ms_per_sim_s: float = 0.0
