"""Expansion rule and descriptor package generation."""

from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from testbed_oss.errors import (
    BlueprintTypeNotExecutable,
    DanglingLinkRef,
    DanglingVnfdRef,
    MultipleCoreAreas,
    NoCoreArea,
    SchemaViolation,
    UnknownBlueprintType,
)
from testbed_oss.nfvcl.catalog import default_catalog
from testbed_oss.nfvcl.expansion import validate_create_body
from testbed_oss.nfvcl.models import BundleMechanism, ConfigBundle, NfKind
from testbed_oss.nfvcl.packages import build_package, build_validated, package_hash, validate_package

CATALOG = default_catalog()


def k8s_body(areas):
    return {
        "type": "K8s",
        "config": {
            "version": "1.24",
            "network_endpoints": {"mgt": "control", "data_nets": [{"mode": "layer2", "net_name": "control"}]},
        },
        "areas": areas,
    }


def expand(body):
    bp_type = CATALOG.get_executable(body["type"])
    return bp_type.expand(validate_create_body(body, bp_type.config_model))


class TestK8sExpansion:
    def test_single_core_area_one_service_controller_plus_worker(self, fig4_body):
        templates = expand(fig4_body)
        assert len(templates) == 1
        vdus = [v.name for v in templates[0].vnfs[0].vdus]
        assert vdus == ["controller-0", "worker-0"]
        assert templates[0].area_id == 3
        assert templates[0].role == "core"

    def test_core_plus_edge_area_worker_counts(self):
        templates = expand(k8s_body([
            {"id": 3, "core": True, "workers_replica": 2},
            {"id": 5, "workers_replica": 1},
        ]))
        by_area = {t.area_id: t for t in templates}
        assert [v.name for v in by_area[3].vnfs[0].vdus] == ["controller-0", "worker-0", "worker-1"]
        assert [v.name for v in by_area[5].vnfs[0].vdus] == ["worker-0"]
        assert by_area[5].role == "edge"

    def test_two_core_areas_rejected(self):
        with pytest.raises(MultipleCoreAreas):
            expand(k8s_body([{"id": 3, "core": True}, {"id": 5, "core": True}]))

    def test_no_core_area_rejected(self):
        with pytest.raises(NoCoreArea):
            expand(k8s_body([{"id": 3}, {"id": 5}]))

    def test_duplicate_area_rejected(self):
        with pytest.raises(SchemaViolation):
            expand(k8s_body([{"id": 3, "core": True}, {"id": 3}]))

    def test_unknown_config_field_rejected(self):
        body = k8s_body([{"id": 3, "core": True}])
        body["config"]["mystery"] = 1
        with pytest.raises(SchemaViolation):
            expand(body)


class TestCore5gExpansion:
    def _body(self, areas, containerized=False):
        return {
            "type": "Free5GC",
            "config": {
                "containerized": containerized,
                "network_endpoints": {"mgt": "control", "data_nets": [{"mode": "layer2", "net_name": "control"}]},
            },
            "areas": areas,
        }

    def test_core_service_in_core_area_user_plane_per_edge(self):
        templates = expand(self._body([{"id": 1, "core": True}, {"id": 2}]))
        by_area = {t.area_id: t for t in templates}
        assert by_area[1].role == "core" and "core" in by_area[1].name
        assert by_area[2].role == "edge" and "upf" in by_area[2].name

    def test_vm_variant_uses_vdus_container_variant_uses_charts(self):
        vm = expand(self._body([{"id": 1, "core": True}]))[0].vnfs[0]
        assert vm.kind == NfKind.VNF and vm.vdus
        knf = expand(self._body([{"id": 1, "core": True}], containerized=True))[0].vnfs[0]
        assert knf.kind == NfKind.KNF and knf.chart_ref and not knf.vdus


class TestCatalog:
    def test_every_offered_service_present(self):
        tags = CATALOG.tags()
        for expected in ("K8s", "Free5GC", "Open5GS", "VyOS", "UERANSIM", "ELK", "OpenWrt",
                         "OpenVSwitch", "S1Bypass", "TrexTrafficGen", "Prometheus",
                         "AmariCallbox", "NextEPC", "OpenAirInterface"):
            assert expected in tags

    def test_metadata_only_types_not_instantiable(self):
        with pytest.raises(BlueprintTypeNotExecutable):
            CATALOG.get_executable("ELK")
        with pytest.raises(UnknownBlueprintType):
            CATALOG.get("NoSuchThing")

    def test_day2_action_sets(self):
        assert set(CATALOG.get("K8s").day2_actions) == {"add_worker", "install_plugin"}
        assert set(CATALOG.get("Free5GC").day2_actions) == {"add_subscriber", "add_slice", "add_tac"}
        assert set(CATALOG.get("VyOS").day2_actions) == {"add_route"}
        assert set(CATALOG.get("UERANSIM").day2_actions) == {"attach_ue"}


class TestPackages:
    def test_fig4_package_one_nsd_one_vnfd_two_vdus(self, fig4_body):
        template = expand(fig4_body)[0]
        package = build_package("bp-0001", template)
        assert package["nsd"]["nsd_id"] == "bp-0001-a3"
        assert len(package["vnfds"]) == 1
        assert len(package["vnfds"][0]["vdus"]) == 2
        validate_package(package, {"control"})

    def test_dangling_vnfd_ref_detected(self):
        package = {
            "nsd": {"nsd_id": "x", "name": "x", "vnfd_refs": ["ghost"], "virtual_links": [], "area_id": 1},
            "vnfds": [],
        }
        with pytest.raises(DanglingVnfdRef):
            validate_package(package, set())

    def test_dangling_link_ref_detected(self, fig4_body):
        template = expand(fig4_body)[0]
        package = build_package("bp-0001", template)
        with pytest.raises(DanglingLinkRef):
            validate_package(package, {"somewhere-else"})

    def test_package_hash_content_addressed(self, fig4_body):
        template = expand(fig4_body)[0]
        a = build_package("bp-0001", template)
        b = build_package("bp-0001", template)
        assert package_hash(a) == package_hash(b)
        c = build_package("bp-0002", template)
        assert package_hash(a) != package_hash(c)

    @given(
        tag=st.sampled_from(["K8s", "Free5GC", "Open5GS", "VyOS", "UERANSIM"]),
        area_ids=st.lists(st.integers(0, 9), min_size=1, max_size=4, unique=True),
        core_index=st.integers(0, 3),
        workers=st.integers(0, 3),
    )
    def test_every_expansion_yields_reference_valid_packages(self, tag, area_ids, core_index, workers):
        areas = [
            {"id": a, "core": i == core_index % len(area_ids), "workers_replica": workers}
            for i, a in enumerate(area_ids)
        ]
        body = {
            "type": tag,
            "config": {"network_endpoints": {"mgt": "control", "data_nets": [{"mode": "layer2", "net_name": "data0"}]}},
            "areas": areas,
        }
        templates = expand(body)
        assert {t.area_id for t in templates} == set(area_ids)
        for template in templates:
            package, digest = build_validated("bp-x", template, {"control", "data0"})
            assert package_hash(package) == digest


class TestConfigBundleMechanism:
    def test_mechanism_follows_nf_kind(self):
        assert ConfigBundle.for_nf(NfKind.KNF, "t", {}).mechanism == BundleMechanism.CHART_VALUES
        assert ConfigBundle.for_nf(NfKind.VNF, "t", {}).mechanism == BundleMechanism.PLAYBOOK_BUNDLE
        assert ConfigBundle.for_nf(NfKind.PNF, "t", {}).mechanism == BundleMechanism.PLAYBOOK_BUNDLE
