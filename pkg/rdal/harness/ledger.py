"""Resumable JSON ledger of (method, tau, seed) cells."""

from __future__ import annotations

from datetime import datetime
from datetime import timezone
import json
import logging
import os
from pathlib import Path

from rdal.core.errors import LedgerCorruptionError
from rdal.models.checkpoint import file_checksum
from rdal.schemas.error import ErrorDetail
from rdal.schemas.metrics import LedgerEntry
from rdal.schemas.metrics import TauCandidate

UTC = timezone.utc

logger = logging.getLogger(__name__)

LEDGER_FILE = "ledger.json"


def _now_utc_iso() -> str:
    return datetime.now(UTC).replace(microsecond=0).isoformat().replace("+00:00", "Z")


def entry_key(method: str, tau: int | None, seed: int) -> str:
    return f"{method}/tau={'-' if tau is None else tau}/seed={seed}"


class ExperimentLedger:
    """Cell states persisted with atomic replacement; artifact paths are relative to ``root``."""

    def __init__(self, path: Path, entries: dict[str, LedgerEntry] | None = None) -> None:
        self.path = path
        self.root = path.parent
        self.entries: dict[str, LedgerEntry] = dict(entries or {})

    @classmethod
    def load(cls, path: Path) -> ExperimentLedger:
        """Open a ledger for resuming; interrupted cells go back to pending."""
        if not path.is_file():
            return cls(path)
        with path.open(encoding="utf-8") as handle:
            state = json.load(handle)
        ledger = cls(path, {item["key"]: LedgerEntry.model_validate(item) for item in state.get("entries", [])})
        ledger.verify()
        for key, entry in ledger.entries.items():
            if entry.status == "in_progress":
                logger.warning("Resetting interrupted cell %s to pending", key)
                ledger.entries[key] = entry.model_copy(update={"status": "pending"})
        return ledger

    def verify(self) -> None:
        """Check every completed cell's artifacts against their recorded checksums."""
        problems: list[ErrorDetail] = []
        for entry in self.entries.values():
            if entry.status != "completed":
                continue
            for relative, expected in entry.checksums.items():
                artifact = self.root / relative
                if not artifact.is_file():
                    problems.append(ErrorDetail(field=entry.key, issue=f"missing artifact {relative}"))
                elif file_checksum(artifact) != expected:
                    problems.append(ErrorDetail(field=entry.key, issue=f"checksum mismatch for {relative}"))
        if problems:
            raise LedgerCorruptionError("Ledger artifacts do not match their recorded checksums", details=problems)

    def save(self) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        state = {
            "updated_at_utc": _now_utc_iso(),
            "entries": [entry.model_dump(mode="json") for entry in self.entries.values()],
        }
        tmp_path = self.path.with_suffix(self.path.suffix + ".tmp")
        with tmp_path.open("w", encoding="utf-8") as handle:
            json.dump(state, handle, indent=2)
            handle.write("\n")
        os.replace(tmp_path, self.path)

    def ensure(self, method: str, tau: int | None, seed: int, config_hash: str) -> LedgerEntry:
        """Return the cell entry, registering it as pending when new or when its config changed."""
        key = entry_key(method, tau, seed)
        entry = self.entries.get(key)
        if entry is None or entry.config_hash != config_hash:
            entry = LedgerEntry(key=key, method=method, tau=tau, seed=seed, config_hash=config_hash)
            self.entries[key] = entry
            self.save()
        return entry

    def is_completed(self, key: str) -> bool:
        entry = self.entries.get(key)
        return entry is not None and entry.status == "completed"

    def _update(self, key: str, **fields: object) -> LedgerEntry:
        entry = self.entries[key].model_copy(update=fields)
        self.entries[key] = entry
        self.save()
        logger.info("Ledger %s -> %s", key, entry.status)
        return entry

    def start(self, key: str) -> LedgerEntry:
        return self._update(key, status="in_progress", error=None)

    def complete(
        self,
        key: str,
        *,
        checkpoint_path: Path,
        metrics_path: Path,
        report_path: Path,
        validation: TauCandidate | None = None,
    ) -> LedgerEntry:
        artifacts = [checkpoint_path, metrics_path, report_path]
        relative = [str(path.relative_to(self.root)) for path in artifacts]
        return self._update(
            key,
            status="completed",
            checkpoint_path=relative[0],
            metrics_path=relative[1],
            report_path=relative[2],
            checksums={name: file_checksum(path) for name, path in zip(relative, artifacts)},
            validation=validation,
        )

    def block(self, key: str, error: str) -> LedgerEntry:
        return self._update(key, status="blocked", error=error)

    def completed_entries(self) -> list[LedgerEntry]:
        return [entry for entry in self.entries.values() if entry.status == "completed"]
