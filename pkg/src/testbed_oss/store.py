"""Revisioned document store with compare-and-swap writes.

All durable state lives here as canonical-JSON documents grouped into
collections. A write must name the revision it read; a stale revision is
rejected and the store left untouched, which is what lets any number of
stateless gateway replicas share one store safely.

Two implementations: an in-memory store for fast tests and an embedded
file-backed store (one file per document, atomic rename on write, a file
lock serializing CAS across processes).
"""

from __future__ import annotations

import os
import threading
from abc import ABC, abstractmethod
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Iterator, TypeVar

import json

from filelock import FileLock

from .canonical import canonical_bytes, content_hash
from .errors import RevisionConflict, UnknownDocument

T = TypeVar("T")

CAS_RETRIES = 5


@dataclass(frozen=True)
class Document:
    collection: str
    doc_id: str
    revision: int
    body: dict

    def body_hash(self) -> str:
        return content_hash(self.body)


class DocumentStore(ABC):
    """CAS contract: commit succeeds iff expected_revision matches the stored
    revision (0 for a document that does not exist yet)."""

    @abstractmethod
    def try_get(self, collection: str, doc_id: str) -> Document | None: ...

    @abstractmethod
    def commit(self, collection: str, doc_id: str, body: dict, expected_revision: int) -> Document: ...

    @abstractmethod
    def list_ids(self, collection: str) -> list[str]: ...

    @abstractmethod
    def collections(self) -> list[str]: ...

    @abstractmethod
    def make_lock(self, name: str) -> Any:
        """Reentrant lock usable as a context manager; file-backed stores
        return a cross-process lock."""

    # -- helpers on top of the primitive CAS ---------------------------------

    def get(self, collection: str, doc_id: str) -> Document:
        doc = self.try_get(collection, doc_id)
        if doc is None:
            raise UnknownDocument(f"{collection}/{doc_id} does not exist")
        return doc

    def exists(self, collection: str, doc_id: str) -> bool:
        return self.try_get(collection, doc_id) is not None

    def insert(self, collection: str, doc_id: str, body: dict) -> Document:
        return self.commit(collection, doc_id, body, expected_revision=0)

    def list_docs(self, collection: str) -> list[Document]:
        return [self.get(collection, i) for i in self.list_ids(collection)]

    def update(
        self,
        collection: str,
        doc_id: str,
        mutate: Callable[[dict], T],
        retries: int = CAS_RETRIES,
    ) -> tuple[Document, T]:
        """Read-modify-CAS loop. `mutate` edits the body in place (or raises)
        and may return a value handed back to the caller."""
        last: RevisionConflict | None = None
        for _ in range(retries):
            doc = self.get(collection, doc_id)
            body = json.loads(canonical_bytes(doc.body))
            result = mutate(body)
            try:
                return self.commit(collection, doc_id, body, doc.revision), result
            except RevisionConflict as exc:
                last = exc
        raise last if last else RevisionConflict(f"CAS retries exhausted on {collection}/{doc_id}")

    def next_id(self, name: str, prefix: str, width: int = 4) -> str:
        """Deterministic sequential id; the counter is itself a document so
        identical request traces yield identical ids."""

        def bump(body: dict) -> int:
            body["n"] = body.get("n", 0) + 1
            return body["n"]

        if not self.exists("counters", name):
            try:
                self.insert("counters", name, {"n": 0})
            except RevisionConflict:
                pass
        _, n = self.update("counters", name, bump, retries=64)
        return f"{prefix}-{n:0{width}d}"


class _CombinedLock:
    """Thread RLock plus optional cross-process file lock."""

    def __init__(self, file_lock: FileLock | None):
        self._rlock = threading.RLock()
        self._file_lock = file_lock

    def __enter__(self):
        self._rlock.acquire()
        if self._file_lock is not None:
            self._file_lock.acquire()
        return self

    def __exit__(self, *exc):
        if self._file_lock is not None:
            self._file_lock.release()
        self._rlock.release()
        return False


class MemoryStore(DocumentStore):
    def __init__(self):
        self._data: dict[str, dict[str, tuple[int, bytes]]] = {}
        self._mutex = threading.Lock()
        self._locks: dict[str, _CombinedLock] = {}

    def try_get(self, collection: str, doc_id: str) -> Document | None:
        with self._mutex:
            entry = self._data.get(collection, {}).get(doc_id)
        if entry is None:
            return None
        revision, raw = entry
        return Document(collection, doc_id, revision, json.loads(raw))

    def commit(self, collection: str, doc_id: str, body: dict, expected_revision: int) -> Document:
        raw = canonical_bytes(body)
        with self._mutex:
            coll = self._data.setdefault(collection, {})
            current = coll.get(doc_id)
            stored_rev = current[0] if current else 0
            if current is None and expected_revision > 0:
                raise UnknownDocument(f"{collection}/{doc_id} does not exist")
            if stored_rev != expected_revision:
                raise RevisionConflict(
                    f"{collection}/{doc_id}: expected revision {expected_revision}, stored {stored_rev}"
                )
            new_rev = stored_rev + 1
            coll[doc_id] = (new_rev, raw)
        return Document(collection, doc_id, new_rev, json.loads(raw))

    def list_ids(self, collection: str) -> list[str]:
        with self._mutex:
            return sorted(self._data.get(collection, {}).keys())

    def collections(self) -> list[str]:
        with self._mutex:
            return sorted(k for k, v in self._data.items() if v)

    def make_lock(self, name: str) -> Any:
        with self._mutex:
            if name not in self._locks:
                self._locks[name] = _CombinedLock(None)
            return self._locks[name]


class FileStore(DocumentStore):
    """One JSON file per document under root/<collection>/<doc_id>.json.

    Writes go through a temp file and an atomic rename; the CAS read-compare-
    write happens under a per-store file lock so two processes sharing the
    directory serialize correctly.
    """

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._cas_lock = FileLock(str(self.root / ".cas.lock"))
        self._locks: dict[str, _CombinedLock] = {}
        self._mutex = threading.Lock()

    def _path(self, collection: str, doc_id: str) -> Path:
        return self.root / collection / f"{doc_id}.json"

    def try_get(self, collection: str, doc_id: str) -> Document | None:
        path = self._path(collection, doc_id)
        try:
            raw = path.read_text(encoding="utf-8")
        except FileNotFoundError:
            return None
        wrapper = json.loads(raw)
        return Document(collection, doc_id, wrapper["revision"], wrapper["body"])

    def commit(self, collection: str, doc_id: str, body: dict, expected_revision: int) -> Document:
        path = self._path(collection, doc_id)
        with self._cas_lock:
            current = self.try_get(collection, doc_id)
            stored_rev = current.revision if current else 0
            if current is None and expected_revision > 0:
                raise UnknownDocument(f"{collection}/{doc_id} does not exist")
            if stored_rev != expected_revision:
                raise RevisionConflict(
                    f"{collection}/{doc_id}: expected revision {expected_revision}, stored {stored_rev}"
                )
            new_rev = stored_rev + 1
            path.parent.mkdir(parents=True, exist_ok=True)
            payload = canonical_bytes({"revision": new_rev, "body": body})
            tmp = path.with_suffix(".tmp")
            tmp.write_bytes(payload)
            os.replace(tmp, path)
        return Document(collection, doc_id, new_rev, json.loads(canonical_bytes(body)))

    def list_ids(self, collection: str) -> list[str]:
        coll_dir = self.root / collection
        if not coll_dir.is_dir():
            return []
        return sorted(p.stem for p in coll_dir.glob("*.json"))

    def collections(self) -> list[str]:
        return sorted(
            p.name for p in self.root.iterdir() if p.is_dir() and any(p.glob("*.json"))
        )

    def make_lock(self, name: str) -> Any:
        with self._mutex:
            if name not in self._locks:
                self._locks[name] = _CombinedLock(FileLock(str(self.root / f".{name}.lock")))
            return self._locks[name]


@contextmanager
def noop_context() -> Iterator[None]:
    yield
