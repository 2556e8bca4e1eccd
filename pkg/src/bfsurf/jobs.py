"""Content-addressed background jobs backed by the filesystem.

A job is a directory holding the canonical request, a status record, and the
result artifacts (the same CSV/JSON files the CLI writes).  Job ids are
hashes of the canonical request, so resubmitting identical work returns the
cached job; completed jobs survive process restarts because the index is
rebuilt from the record files on disk.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, replace
from pathlib import Path

__all__ = ["JobRecord", "JobStore"]

_STATUSES = ("queued", "running", "done", "failed")
_TRANSITIONS = {"queued": {"running"}, "running": {"done", "failed"}}


@dataclass(frozen=True)
class JobRecord:
    job_id: str
    kind: str
    status: str
    progress: float
    result_locator: str | None = None
    error: str | None = None


def canonical_request_hash(kind: str, payload: dict) -> str:
    blob = json.dumps({"kind": kind, "request": payload}, sort_keys=True,
                      separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


class JobStore:
    """Thread-safe job index over a directory of job folders."""

    def __init__(self, root: str | Path, workers: int = 2):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._pool = ThreadPoolExecutor(max_workers=max(workers, 1))
        self._lock = threading.Lock()
        self._records: dict[str, JobRecord] = {}
        self._rebuild()

    def _job_dir(self, job_id: str) -> Path:
        return self.root / job_id

    def _record_path(self, job_id: str) -> Path:
        return self._job_dir(job_id) / "record.json"

    def _write_record(self, record: JobRecord) -> None:
        path = self._record_path(record.job_id)
        tmp = path.with_suffix(".json.tmp")
        tmp.write_text(json.dumps(asdict(record), sort_keys=True, indent=1))
        os.replace(tmp, path)

    def _rebuild(self) -> None:
        """Restore the index from disk; work lost to a crash is marked failed."""
        for record_file in self.root.glob("*/record.json"):
            try:
                payload = json.loads(record_file.read_text())
                record = JobRecord(**payload)
            except (ValueError, TypeError):
                continue
            if record.status in ("queued", "running"):
                record = replace(record, status="failed",
                                 error="interrupted by process restart")
                self._write_record(record)
            self._records[record.job_id] = record

    def _transition(self, job_id: str, status: str, **changes) -> JobRecord:
        with self._lock:
            current = self._records[job_id]
            if status != current.status and status not in _TRANSITIONS.get(current.status, set()):
                raise RuntimeError(f"illegal job transition {current.status} -> {status}")
            record = replace(current, status=status, **changes)
            self._records[job_id] = record
            self._write_record(record)
            return record

    def set_progress(self, job_id: str, fraction: float) -> None:
        with self._lock:
            current = self._records.get(job_id)
            if current is None or current.status != "running":
                return
            record = replace(current, progress=min(max(fraction, 0.0), 1.0))
            self._records[job_id] = record
        # progress is advisory; persist without holding the lock
        self._write_record(record)

    def get(self, job_id: str) -> JobRecord | None:
        with self._lock:
            return self._records.get(job_id)

    def result_dir(self, job_id: str) -> Path:
        return self._job_dir(job_id)

    def submit(self, kind: str, payload: dict, runner) -> JobRecord:
        """Run ``runner(job_dir, progress_callback)`` for this request.

        Identical (kind, payload) pairs share one job: a completed or
        in-flight duplicate is returned as-is instead of recomputed.
        """
        job_id = canonical_request_hash(kind, payload)
        with self._lock:
            existing = self._records.get(job_id)
            if existing is not None and existing.status in ("queued", "running", "done"):
                return existing
            job_dir = self._job_dir(job_id)
            job_dir.mkdir(parents=True, exist_ok=True)
            (job_dir / "request.json").write_text(
                json.dumps(payload, sort_keys=True, indent=1)
            )
            record = JobRecord(job_id=job_id, kind=kind, status="queued", progress=0.0,
                               result_locator=str(job_dir))
            self._records[job_id] = record
            self._write_record(record)

        def task():
            self._transition(job_id, "running")
            try:
                runner(self._job_dir(job_id), lambda f: self.set_progress(job_id, f))
            except Exception as exc:  # noqa: BLE001 - job boundary
                self._transition(job_id, "failed", error=str(exc), progress=1.0)
            else:
                self._transition(job_id, "done", progress=1.0)

        self._pool.submit(task)
        return self.get(job_id)

    def shutdown(self) -> None:
        self._pool.shutdown(wait=True)
