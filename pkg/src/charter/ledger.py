"""Append-only run ledger and contract journal.

Records carry no wall-clock data so that two runs over the same transcript
serialize to byte-identical ledgers; replay equality is a hash comparison.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path


class RunLedger:
    def __init__(self):
        self.records: list[dict] = []
        self.journal: list[dict] = []

    def add(self, record: dict) -> None:
        self.records.append(record)

    def add_journal(self, record: dict) -> None:
        self.journal.append(record)

    def serialize(self) -> str:
        return "".join(json.dumps(r, sort_keys=True) + "\n" for r in self.records)

    def serialize_journal(self) -> str:
        return "".join(json.dumps(r, sort_keys=True) + "\n" for r in self.journal)

    def sha256(self) -> str:
        return hashlib.sha256(self.serialize().encode("utf-8")).hexdigest()

    def write(self, path) -> None:
        Path(path).write_text(self.serialize(), encoding="utf-8")

    def write_journal(self, path) -> None:
        Path(path).write_text(self.serialize_journal(), encoding="utf-8")

    @staticmethod
    def load(path) -> "RunLedger":
        ledger = RunLedger()
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            if line.strip():
                ledger.add(json.loads(line))
        return ledger


def file_sha256(body: str) -> str:
    return hashlib.sha256(body.encode("utf-8")).hexdigest()
