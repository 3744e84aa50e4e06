"""Revisioned store: CAS semantics, canonical serialization, concurrency."""

from __future__ import annotations

import threading

import pytest

from testbed_oss.canonical import canonical_json, content_hash
from testbed_oss.errors import RevisionConflict, UnknownDocument
from testbed_oss.store import FileStore, MemoryStore


@pytest.fixture(params=["memory", "file"])
def any_store(request, tmp_path):
    if request.param == "memory":
        return MemoryStore()
    return FileStore(tmp_path / "store")


def test_first_write_gets_revision_one(any_store):
    doc = any_store.commit("things", "a", {"x": 1}, expected_revision=0)
    assert doc.revision == 1


def test_stale_write_rejected_and_body_unchanged(any_store):
    any_store.insert("things", "a", {"x": 1})
    any_store.commit("things", "a", {"x": 2}, expected_revision=1)  # rev 2
    with pytest.raises(RevisionConflict):
        any_store.commit("things", "a", {"x": 99}, expected_revision=5)
    assert any_store.get("things", "a").body == {"x": 2}
    assert any_store.get("things", "a").revision == 2


def test_update_to_absent_doc_is_unknown(any_store):
    with pytest.raises(UnknownDocument):
        any_store.commit("things", "missing", {"x": 1}, expected_revision=3)
    with pytest.raises(UnknownDocument):
        any_store.get("things", "missing")


def test_create_conflict_when_doc_exists(any_store):
    any_store.insert("things", "a", {"x": 1})
    with pytest.raises(RevisionConflict):
        any_store.insert("things", "a", {"x": 2})


def test_two_writers_exactly_one_succeeds_per_revision(any_store):
    any_store.insert("things", "a", {"n": 0})
    outcomes = []

    def writer(value):
        try:
            any_store.commit("things", "a", {"n": value}, expected_revision=1)
            outcomes.append(("ok", value))
        except RevisionConflict:
            outcomes.append(("conflict", value))

    threads = [threading.Thread(target=writer, args=(v,)) for v in (1, 2)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert sorted(o for o, _ in outcomes) == ["conflict", "ok"]
    assert any_store.get("things", "a").revision == 2


def test_concurrent_cas_storm_final_revision_counts_successes(any_store):
    any_store.insert("counter", "c", {"n": 0})
    successes = []

    def bump():
        for _ in range(20):
            doc = any_store.get("counter", "c")
            try:
                any_store.commit("counter", "c", {"n": doc.body["n"] + 1}, doc.revision)
                successes.append(1)
            except RevisionConflict:
                pass

    threads = [threading.Thread(target=bump) for _ in range(4)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    doc = any_store.get("counter", "c")
    assert doc.revision == 1 + len(successes)
    assert doc.body["n"] == len(successes)


def test_update_helper_retries_until_applied(any_store):
    any_store.insert("things", "a", {"n": 0})

    def mutate(body):
        body["n"] += 1

    for _ in range(5):
        any_store.update("things", "a", mutate)
    assert any_store.get("things", "a").body["n"] == 5


def test_canonical_json_sorted_compact():
    assert canonical_json({"b": 1, "a": [2, 1]}) == '{"a":[2,1],"b":1}'
    assert content_hash({"a": 1, "b": 2}) == content_hash({"b": 2, "a": 1})


def test_file_store_survives_reopen(tmp_path):
    store = FileStore(tmp_path / "s")
    store.insert("things", "a", {"x": ["y", "z"]})
    store.commit("things", "a", {"x": ["y"]}, expected_revision=1)

    reopened = FileStore(tmp_path / "s")
    doc = reopened.get("things", "a")
    assert doc.revision == 2
    assert doc.body == {"x": ["y"]}
    assert reopened.list_ids("things") == ["a"]


def test_two_file_store_instances_share_cas(tmp_path):
    a = FileStore(tmp_path / "s")
    b = FileStore(tmp_path / "s")
    a.insert("things", "doc", {"v": 1})
    b.commit("things", "doc", {"v": 2}, expected_revision=1)
    with pytest.raises(RevisionConflict):
        a.commit("things", "doc", {"v": 3}, expected_revision=1)
    assert a.get("things", "doc").body == {"v": 2}


def test_next_id_is_sequential_and_deterministic(any_store):
    ids = [any_store.next_id("widget", "w") for _ in range(3)]
    assert ids == ["w-0001", "w-0002", "w-0003"]
