"""Task lifecycle: the four statuses, their legal transitions, and the task record."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum


class TaskStatus(Enum):
    TODO = "TODO"
    DONE = "DONE"
    ERROR = "ERROR"
    VERIFIED = "VERIFIED"


# VERIFIED is absorbing: it never appears as a source state.
LEGAL_TRANSITIONS: frozenset[tuple[TaskStatus, TaskStatus]] = frozenset(
    {
        (TaskStatus.TODO, TaskStatus.DONE),
        (TaskStatus.DONE, TaskStatus.VERIFIED),
        (TaskStatus.DONE, TaskStatus.ERROR),
        (TaskStatus.ERROR, TaskStatus.DONE),
    }
)


def is_legal_transition(old: TaskStatus, new: TaskStatus) -> bool:
    return (old, new) in LEGAL_TRANSITIONS


class IllegalTransition(RuntimeError):
    """Raised when a status update would leave the legal transition relation."""


@dataclass
class Task:
    """One atomic unit of work: implement and verify a single contracted file."""

    id: str
    file_path: str
    owner: str
    status: TaskStatus = TaskStatus.TODO
    attempts: int = 0
    feedback: list[str] = field(default_factory=list)

    def transition(self, new: TaskStatus) -> tuple[TaskStatus, TaskStatus]:
        """Move to ``new``, returning the (old, new) pair for the run ledger."""
        if not is_legal_transition(self.status, new):
            raise IllegalTransition(f"{self.id}: {self.status.value} -> {new.value}")
        old = self.status
        self.status = new
        return (old, new)
