"""Core domain semantics: request validation, quota arithmetic, tenant VLAN
ranges, slice record transitions."""

from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from testbed_oss.errors import NegativeBudget, ValidationErrors, VlanPoolExhausted
from testbed_oss.models import (
    Area,
    AreaKind,
    QosProfile,
    ResourceBudget,
    SliceRequest,
    quota_admits,
)
from testbed_oss.store import MemoryStore
from testbed_oss.tenancy import TenantService, validate_slice_request

CATALOG = {"K8s", "Free5GC", "VyOS"}


@pytest.fixture()
def tenants():
    service = TenantService(MemoryStore())
    service.register_area(Area(id=3, name="a3", kind=AreaKind.CORE))
    service.register_area(Area(id=5, name="a5", kind=AreaKind.EDGE))
    return service


def _req(tenants, **overrides):
    tenant = tenants.list_tenants()[0] if tenants.list_tenants() else tenants.create_tenant(
        "t", ResourceBudget(vcpus=10, ram_gb=10, storage_gb=10)
    )
    base = dict(
        request_id="r1",
        tenant_id=tenant.id,
        slice_type="K8s",
        coverage_areas=[3],
        compute=ResourceBudget(),
        qos=QosProfile(),
    )
    base.update(overrides)
    return SliceRequest.model_validate(base)


class TestValidateSliceRequest:
    def test_empty_coverage_reported(self, tenants):
        req = _req(tenants, coverage_areas=[])
        with pytest.raises(ValidationErrors) as err:
            validate_slice_request(req, tenants, CATALOG)
        assert "EmptyCoverage" in err.value.codes

    def test_known_type_and_area_passes_unchanged(self, tenants):
        req = _req(tenants, slice_type="K8s", coverage_areas=[3])
        assert validate_slice_request(req, tenants, CATALOG) is req

    def test_all_violations_reported_not_just_first(self, tenants):
        req = _req(
            tenants,
            coverage_areas=[99],
            compute=ResourceBudget(vcpus=-1, ram_gb=0, storage_gb=0),
        )
        with pytest.raises(ValidationErrors) as err:
            validate_slice_request(req, tenants, CATALOG)
        assert {"NegativeBudget", "UnknownArea"} <= err.value.codes

    def test_unknown_tenant_and_type(self, tenants):
        req = _req(tenants, tenant_id="nope", slice_type="Mystery")
        with pytest.raises(ValidationErrors) as err:
            validate_slice_request(req, tenants, CATALOG)
        assert {"UnknownTenant", "UnknownSliceType"} <= err.value.codes

    def test_validation_is_pure(self, tenants):
        req = _req(tenants)
        before = [t.dump() for t in tenants.list_tenants()]
        validate_slice_request(req, tenants, CATALOG)
        validate_slice_request(req, tenants, CATALOG)
        assert [t.dump() for t in tenants.list_tenants()] == before


class TestQuotaAdmits:
    def test_exact_fit(self):
        budget = ResourceBudget(vcpus=10, ram_gb=32, storage_gb=100)
        used = ResourceBudget(vcpus=8, ram_gb=16, storage_gb=50)
        ask = ResourceBudget(vcpus=2, ram_gb=16, storage_gb=50)
        assert quota_admits(budget, used, ask) is True

    def test_single_component_overflow(self):
        budget = ResourceBudget(vcpus=10, ram_gb=32, storage_gb=100)
        used = ResourceBudget(vcpus=8, ram_gb=16, storage_gb=50)
        ask = ResourceBudget(vcpus=3, ram_gb=0, storage_gb=0)
        assert quota_admits(budget, used, ask) is False

    def test_zero_ask_always_admitted(self):
        assert quota_admits(ResourceBudget(), ResourceBudget(), ResourceBudget()) is True

    @given(
        st.builds(ResourceBudget, vcpus=st.integers(0, 50), ram_gb=st.integers(0, 50), storage_gb=st.integers(0, 50)),
        st.builds(ResourceBudget, vcpus=st.integers(0, 50), ram_gb=st.integers(0, 50), storage_gb=st.integers(0, 50)),
        st.builds(ResourceBudget, vcpus=st.integers(0, 50), ram_gb=st.integers(0, 50), storage_gb=st.integers(0, 50)),
    )
    def test_matches_componentwise_definition(self, budget, used, ask):
        expected = all(
            getattr(used, f) + getattr(ask, f) <= getattr(budget, f)
            for f in ("vcpus", "ram_gb", "storage_gb")
        )
        assert quota_admits(budget, used, ask) is expected


class TestTenantVlanRanges:
    def test_ranges_are_pairwise_disjoint(self):
        service = TenantService(MemoryStore())
        tenants = [
            service.create_tenant(f"t{i}", ResourceBudget(vcpus=1, ram_gb=1, storage_gb=1))
            for i in range(8)
        ]
        for i, a in enumerate(tenants):
            for b in tenants[i + 1:]:
                assert not a.vlan_range.overlaps(b.vlan_range)

    def test_blocks_are_contiguous_hundreds_from_pool_start(self):
        service = TenantService(MemoryStore())
        first = service.create_tenant("a", ResourceBudget())
        second = service.create_tenant("b", ResourceBudget())
        assert (first.vlan_range.low, first.vlan_range.high) == (100, 199)
        assert (second.vlan_range.low, second.vlan_range.high) == (200, 299)

    def test_pool_exhaustion(self):
        service = TenantService(MemoryStore())
        for _ in range(39):  # 100..3999 holds 39 blocks of 100
            service.create_tenant("x", ResourceBudget())
        with pytest.raises(VlanPoolExhausted):
            service.create_tenant("overflow", ResourceBudget())

    def test_negative_quota_rejected(self):
        service = TenantService(MemoryStore())
        with pytest.raises(NegativeBudget):
            service.create_tenant("bad", ResourceBudget(vcpus=-1, ram_gb=0, storage_gb=0))


class TestUsageLedger:
    def test_charge_refund_roundtrip(self):
        service = TenantService(MemoryStore())
        tenant = service.create_tenant("t", ResourceBudget(vcpus=10, ram_gb=10, storage_gb=10))
        ask = ResourceBudget(vcpus=4, ram_gb=2, storage_gb=1)
        service.charge(tenant.id, "nfv", ask)
        assert service.total_usage(tenant.id) == ask
        service.refund(tenant.id, "nfv", ask)
        assert service.total_usage(tenant.id) == ResourceBudget.zero()

    def test_charge_over_budget_raises_and_leaves_usage(self):
        from testbed_oss.errors import QuotaExceeded

        service = TenantService(MemoryStore())
        tenant = service.create_tenant("t", ResourceBudget(vcpus=4, ram_gb=4, storage_gb=4))
        service.charge(tenant.id, "nfv", ResourceBudget(vcpus=3, ram_gb=1, storage_gb=1))
        with pytest.raises(QuotaExceeded):
            service.charge(tenant.id, "metal", ResourceBudget(vcpus=2, ram_gb=0, storage_gb=0))
        assert service.total_usage(tenant.id).vcpus == 3
