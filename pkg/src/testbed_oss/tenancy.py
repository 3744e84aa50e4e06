"""Tenant administration, quota accounting and slice request validation.

Tenants get a contiguous VLAN block carved out of a global pool at creation
time, which keeps every pair of tenant ranges disjoint by construction.
Usage is tracked per tenant in two components: compute consumed by live
blueprint instances and compute consumed by allocated bare-metal machines.
"""

from __future__ import annotations

from typing import Optional

from .errors import (
    EmptyCoverage,
    NegativeBudget,
    QuotaExceeded,
    UnknownArea,
    UnknownTenant,
    UnknownSliceType,
    ValidationErrors,
    VlanPoolExhausted,
)
from .models import Area, ResourceBudget, SliceRequest, TenantSpace, VlanRange, quota_admits
from .store import DocumentStore

VLAN_POOL_START = 100
VLAN_POOL_END = 4000
VLAN_BLOCK = 100

TENANTS = "tenants"
AREAS = "areas"
USAGE = "usage"
_POOL_DOC = ("vlan_pool", "global")


class TenantService:
    def __init__(self, store: DocumentStore):
        self.store = store

    # -- tenants --------------------------------------------------------------

    def create_tenant(self, name: str, quota: ResourceBudget, block: int = VLAN_BLOCK) -> TenantSpace:
        if not quota.non_negative():
            raise NegativeBudget("tenant quota fields must be non-negative")
        start = self._allocate_vlan_block(block)
        tenant_id = self.store.next_id("tenant", "t")
        tenant = TenantSpace(
            id=tenant_id,
            name=name,
            quota=quota,
            vlan_range=VlanRange(low=start, high=start + block - 1),
        )
        self.store.insert(TENANTS, tenant_id, tenant.dump())
        self.store.insert(USAGE, tenant_id, {"nfv": ResourceBudget.zero().dump(), "metal": ResourceBudget.zero().dump()})
        return tenant

    def _allocate_vlan_block(self, block: int) -> int:
        coll, doc_id = _POOL_DOC
        if not self.store.exists(coll, doc_id):
            try:
                self.store.insert(coll, doc_id, {"next": VLAN_POOL_START})
            except Exception:
                pass

        def take(body: dict) -> int:
            start = body["next"]
            if start + block - 1 > VLAN_POOL_END:
                raise VlanPoolExhausted(f"global VLAN pool exhausted at {start}")
            body["next"] = start + block
            return start

        _, start = self.store.update(coll, doc_id, take)
        return start

    def get_tenant(self, tenant_id: str) -> TenantSpace:
        doc = self.store.try_get(TENANTS, tenant_id)
        if doc is None:
            raise UnknownTenant(f"tenant {tenant_id} does not exist")
        return TenantSpace.model_validate(doc.body)

    def list_tenants(self) -> list[TenantSpace]:
        return [TenantSpace.model_validate(d.body) for d in self.store.list_docs(TENANTS)]

    # -- areas ----------------------------------------------------------------

    def register_area(self, area: Area) -> Area:
        self.store.insert(AREAS, str(area.id), area.dump())
        return area

    def get_area(self, area_id: int) -> Area:
        doc = self.store.try_get(AREAS, str(area_id))
        if doc is None:
            raise UnknownArea(f"area {area_id} does not exist")
        return Area.model_validate(doc.body)

    def list_areas(self) -> list[Area]:
        areas = [Area.model_validate(d.body) for d in self.store.list_docs(AREAS)]
        return sorted(areas, key=lambda a: a.id)

    def area_ids(self) -> set[int]:
        return {a.id for a in self.list_areas()}

    # -- usage / quota ----------------------------------------------------------

    def usage(self, tenant_id: str) -> dict[str, ResourceBudget]:
        doc = self.store.try_get(USAGE, tenant_id)
        if doc is None:
            raise UnknownTenant(f"tenant {tenant_id} does not exist")
        return {k: ResourceBudget.model_validate(v) for k, v in doc.body.items()}

    def total_usage(self, tenant_id: str) -> ResourceBudget:
        parts = self.usage(tenant_id)
        total = ResourceBudget.zero()
        for part in parts.values():
            total = total.add(part)
        return total

    def admits(self, tenant_id: str, ask: ResourceBudget) -> bool:
        tenant = self.get_tenant(tenant_id)
        return quota_admits(tenant.quota, self.total_usage(tenant_id), ask)

    def charge(self, tenant_id: str, component: str, ask: ResourceBudget) -> None:
        """Reserve `ask` against the tenant budget or raise QuotaExceeded."""
        tenant = self.get_tenant(tenant_id)

        def apply(body: dict) -> None:
            used = ResourceBudget.zero()
            for part in body.values():
                used = used.add(ResourceBudget.model_validate(part))
            if not quota_admits(tenant.quota, used, ask):
                raise QuotaExceeded(
                    f"tenant {tenant_id} quota exceeded",
                    ask=ask.dump(),
                    used=used.dump(),
                    budget=tenant.quota.dump(),
                )
            body[component] = ResourceBudget.model_validate(body[component]).add(ask).dump()

        self.store.update(USAGE, tenant_id, apply)

    def refund(self, tenant_id: str, component: str, amount: ResourceBudget) -> None:
        def apply(body: dict) -> None:
            body[component] = ResourceBudget.model_validate(body[component]).sub(amount).dump()

        self.store.update(USAGE, tenant_id, apply)


def validate_slice_request(
    req: SliceRequest,
    tenants: TenantService,
    catalog_types: set[str],
    area_ids: Optional[set[int]] = None,
) -> SliceRequest:
    """Pure check of every request invariant; raises ValidationErrors carrying
    the complete violation list when anything fails."""
    violations: list[dict] = []
    known_areas = tenants.area_ids() if area_ids is None else area_ids

    if not self_exists(tenants, req.tenant_id):
        violations.append({"error": UnknownTenant.__name__, "detail": req.tenant_id})
    if req.slice_type not in catalog_types:
        violations.append({"error": UnknownSliceType.__name__, "detail": req.slice_type})
    if not req.coverage_areas:
        violations.append({"error": EmptyCoverage.__name__, "detail": "coverage_areas is empty"})
    for area in req.coverage_areas:
        if area not in known_areas:
            violations.append({"error": UnknownArea.__name__, "detail": area})
    if not req.compute.non_negative():
        violations.append({"error": NegativeBudget.__name__, "detail": req.compute.dump()})
    if req.qos.bandwidth_mbps < 0:
        violations.append({"error": NegativeBudget.__name__, "detail": "bandwidth_mbps < 0"})

    if violations:
        raise ValidationErrors(violations)
    return req


def self_exists(tenants: TenantService, tenant_id: str) -> bool:
    try:
        tenants.get_tenant(tenant_id)
        return True
    except UnknownTenant:
        return False
