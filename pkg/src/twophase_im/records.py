"""Run records: JSON snapshots of every CLI invocation, replayable bit-exactly.

A record stores the command id, its full parameter dict (including the master
seed and a fingerprint of the input graph), and the numeric results. Replaying
dispatches the same core function and compares results exactly; wall time is
informational and excluded from the comparison.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from contextlib import contextmanager
from pathlib import Path

RECORD_VERSION = 1
LOCK_NAME = ".tpim.lock"


class RecordError(ValueError):
    """Unreadable, incompatible, or mismatched run record."""


class ReproducibilityError(RecordError):
    """Replay produced different numbers than the stored record."""


def graph_fingerprint(graph) -> str:
    h = hashlib.sha256()
    h.update(f"n={graph.n}\n".encode())
    for lab in graph.labels:
        h.update(f"{lab}\n".encode())
    for u, v, p in graph.edges():
        h.update(f"{u} {v} {p!r}\n".encode())
    return h.hexdigest()


@contextmanager
def output_lock(output_dir: Path):
    """One process at a time per output directory."""
    output_dir.mkdir(parents=True, exist_ok=True)
    lock = output_dir / LOCK_NAME
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise RecordError(
            f"output dir {output_dir} is locked by another run ({lock}); "
            "remove the lock file if that run is dead") from None
    try:
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)
        yield
    finally:
        try:
            os.unlink(lock)
        except OSError:
            pass


def write_record(output_dir: Path, command: str, params: dict, results: dict,
                 wall_time: float) -> Path:
    output_dir.mkdir(parents=True, exist_ok=True)
    record = {
        "version": RECORD_VERSION,
        "command": command,
        "params": params,
        "results": results,
        "wall_time": wall_time,
    }
    stamp = time.strftime("%Y%m%d-%H%M%S")
    base = f"{command}-{stamp}"
    path = output_dir / f"{base}.json"
    i = 1
    while path.exists():
        path = output_dir / f"{base}-{i}.json"
        i += 1
    with open(path, "w") as fh:
        json.dump(record, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def load_record(path) -> dict:
    try:
        with open(path) as fh:
            record = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise RecordError(f"cannot read record {path}: {exc}") from None
    if record.get("version") != RECORD_VERSION:
        raise RecordError(
            f"record version {record.get('version')!r} unsupported "
            f"(this build writes v{RECORD_VERSION})")
    for key in ("command", "params", "results"):
        if key not in record:
            raise RecordError(f"record missing field {key!r}")
    return record


def diff_results(stored, fresh, path="results"):
    """All differences between two result trees; [] means bit-exact match."""
    diffs = []
    if isinstance(stored, dict) and isinstance(fresh, dict):
        for key in sorted(set(stored) | set(fresh)):
            if key not in stored:
                diffs.append(f"{path}.{key}: missing in record")
            elif key not in fresh:
                diffs.append(f"{path}.{key}: missing in replay")
            else:
                diffs.extend(diff_results(stored[key], fresh[key], f"{path}.{key}"))
    elif isinstance(stored, list) and isinstance(fresh, list):
        if len(stored) != len(fresh):
            diffs.append(f"{path}: length {len(stored)} vs {len(fresh)}")
        else:
            for i, (a, b) in enumerate(zip(stored, fresh)):
                diffs.extend(diff_results(a, b, f"{path}[{i}]"))
    elif stored != fresh:
        diffs.append(f"{path}: {stored!r} vs {fresh!r}")
    return diffs
