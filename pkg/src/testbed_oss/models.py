"""Shared domain types: tenants, budgets, areas, slice requests and records.

Collection-valued fields are stored as sorted lists so the canonical JSON
of any model is stable regardless of construction order.
"""

from __future__ import annotations

from enum import Enum
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator


class OssModel(BaseModel):
    model_config = ConfigDict(extra="forbid", validate_assignment=True)

    def dump(self) -> dict:
        return self.model_dump(mode="json")


class ResourceBudget(OssModel):
    """Compute budget triple. Negative values are representable so request
    validation can report them; admission and tenant admin reject them."""

    vcpus: int = 0
    ram_gb: int = 0
    storage_gb: int = 0

    def add(self, other: "ResourceBudget") -> "ResourceBudget":
        return ResourceBudget(
            vcpus=self.vcpus + other.vcpus,
            ram_gb=self.ram_gb + other.ram_gb,
            storage_gb=self.storage_gb + other.storage_gb,
        )

    def sub(self, other: "ResourceBudget") -> "ResourceBudget":
        return ResourceBudget(
            vcpus=self.vcpus - other.vcpus,
            ram_gb=self.ram_gb - other.ram_gb,
            storage_gb=self.storage_gb - other.storage_gb,
        )

    def fits_within(self, other: "ResourceBudget") -> bool:
        return (
            self.vcpus <= other.vcpus
            and self.ram_gb <= other.ram_gb
            and self.storage_gb <= other.storage_gb
        )

    def non_negative(self) -> bool:
        return self.vcpus >= 0 and self.ram_gb >= 0 and self.storage_gb >= 0

    @staticmethod
    def zero() -> "ResourceBudget":
        return ResourceBudget()


def quota_admits(budget: ResourceBudget, used: ResourceBudget, ask: ResourceBudget) -> bool:
    """True iff used + ask fits within budget component-wise."""
    return used.add(ask).fits_within(budget)


class VlanRange(OssModel):
    low: int = Field(ge=2, le=4094)
    high: int = Field(ge=2, le=4094)

    @field_validator("high")
    @classmethod
    def _ordered(cls, v, info):
        low = info.data.get("low")
        if low is not None and v < low:
            raise ValueError("vlan range high < low")
        return v

    def contains(self, vlan_id: int) -> bool:
        return self.low <= vlan_id <= self.high

    def overlaps(self, other: "VlanRange") -> bool:
        return not (self.high < other.low or other.high < self.low)

    def ids(self) -> range:
        return range(self.low, self.high + 1)


class TenantSpace(OssModel):
    id: str
    name: str
    quota: ResourceBudget
    vlan_range: VlanRange


class AreaKind(str, Enum):
    CORE = "core"
    EDGE = "edge"


class Area(OssModel):
    id: int = Field(ge=0)
    name: str
    kind: AreaKind


class LatencyClass(str, Enum):
    BEST_EFFORT = "best_effort"
    LOW_LATENCY = "low_latency"
    ULTRA_LOW_LATENCY = "ultra_low_latency"


class QosProfile(OssModel):
    bandwidth_mbps: float = 0.0
    latency_class: LatencyClass = LatencyClass.BEST_EFFORT
    slice_differentiator: Optional[str] = None


class SliceRequest(OssModel):
    request_id: str
    tenant_id: str
    slice_type: str
    coverage_areas: list[int]
    compute: ResourceBudget = ResourceBudget()
    qos: QosProfile = QosProfile()

    @field_validator("coverage_areas")
    @classmethod
    def _sorted_unique(cls, v: list[int]) -> list[int]:
        return sorted(set(v))


class SliceState(str, Enum):
    REQUESTED = "REQUESTED"
    NEGOTIATING = "NEGOTIATING"
    INSTANTIATING = "INSTANTIATING"
    ACTIVE = "ACTIVE"
    UPDATING = "UPDATING"
    TERMINATING = "TERMINATING"
    TERMINATED = "TERMINATED"
    FAILED = "FAILED"


SLICE_TRANSITIONS: dict[SliceState, set[SliceState]] = {
    SliceState.REQUESTED: {SliceState.NEGOTIATING, SliceState.FAILED},
    SliceState.NEGOTIATING: {SliceState.INSTANTIATING, SliceState.FAILED},
    SliceState.INSTANTIATING: {SliceState.ACTIVE, SliceState.FAILED},
    SliceState.ACTIVE: {SliceState.UPDATING, SliceState.TERMINATING, SliceState.FAILED},
    SliceState.UPDATING: {SliceState.ACTIVE, SliceState.FAILED},
    SliceState.TERMINATING: {SliceState.TERMINATED, SliceState.FAILED},
    SliceState.TERMINATED: set(),
    SliceState.FAILED: set(),
}


class SliceBindingRef(OssModel):
    sboss_id: str
    instance_id: str
    contributed_areas: list[int] = Field(default_factory=list)
    live: bool = True

    @field_validator("contributed_areas")
    @classmethod
    def _sorted_unique(cls, v: list[int]) -> list[int]:
        return sorted(set(v))


class SliceRecord(OssModel):
    slice_id: str
    request: SliceRequest
    state: SliceState = SliceState.REQUESTED
    bindings: list[SliceBindingRef] = Field(default_factory=list)
    state_history: list[tuple[SliceState, float]] = Field(default_factory=list)
    error: Optional[str] = None

    def live_bindings(self) -> list[SliceBindingRef]:
        return [b for b in self.bindings if b.live]
