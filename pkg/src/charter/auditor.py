"""Deterministic layer auditor: structural existence, status synchronization,
and contract/code consistency, with self-healing interventions.

The auditor never executes generated code and never calls a model. After each
layer it compares every produced artifact against the contract's schema and
classifies the difference:

* EMPTY - the artifact matches; commit it and mark the task done.
* CRITICAL - a contracted symbol is missing or its signature drifted; the
  artifact is rejected wholesale and the worker is rescheduled with feedback.
* PATCHABLE - the artifact is a strict superset of the contract (extra
  symbols defined, or symbols demanded from a peer class that the contract
  does not declare yet); the artifact is committed and the contract is
  formally amended to legitimize the superset.

Amendments run through the same guarded transition as any other action; an
amendment that would break the kernel is dropped and the delta is downgraded
to CRITICAL. After amending, every committed file is re-checked: a file that
no longer satisfies the amended schema gets a synchronization task (status
regressed to ERROR with a repair directive).

``audit_layer`` is a pure function of its inputs; the scheduler applies the
returned effects at the barrier.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field, replace
from enum import Enum

from .agents import AgentResponse, RoleKind
from .contract import ActionOp, ContractAction, LanguageContract, Rejection, SectionKey, apply_action
from .kernel import (
    ApiSpecEntry,
    AttributeSpec,
    ClassSpec,
    MethodSig,
    SymbolicKernel,
    guard_violations,
    normalize_module_id,
    print_api_section,
    print_signature,
    project,
    tasks_of,
)
from .tasks import Task, TaskStatus
from .workspace import FileUnit, PathViolation, analyze, normalize_path

logger = logging.getLogger(__name__)

AUDITOR_AUTHOR = "auditor"


class DeltaKind(Enum):
    EMPTY = "EMPTY"
    CRITICAL = "CRITICAL"
    PATCHABLE = "PATCHABLE"


class DetailKind(Enum):
    MISSING = "MISSING"
    MISMATCH = "MISMATCH"
    EXTRA = "EXTRA"
    DEMANDED = "DEMANDED"
    UNANALYZABLE = "UNANALYZABLE"


_CRITICAL_KINDS = {DetailKind.MISSING, DetailKind.MISMATCH, DetailKind.UNANALYZABLE}


@dataclass(frozen=True)
class MismatchDetail:
    kind: DetailKind
    symbol: str
    expected: str = ""
    actual: str = ""

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "symbol": self.symbol,
            "expected": self.expected,
            "actual": self.actual,
        }


@dataclass(frozen=True)
class AuditDelta:
    task_id: str
    kind: DeltaKind
    details: tuple[MismatchDetail, ...] = ()

    def to_dict(self) -> dict:
        return {
            "task": self.task_id,
            "kind": self.kind.value,
            "details": [d.to_dict() for d in self.details],
        }


@dataclass(frozen=True)
class TaskInjection:
    path: str

    def to_dict(self) -> dict:
        return {"kind": "TaskInjection", "path": self.path}


@dataclass(frozen=True)
class StatusRegression:
    task_id: str
    reason: str

    def to_dict(self) -> dict:
        return {"kind": "StatusRegression", "task": self.task_id, "reason": self.reason}


@dataclass(frozen=True)
class SyncTask:
    task_id: str
    directive: str

    def to_dict(self) -> dict:
        return {"kind": "SyncTask", "task": self.task_id, "directive": self.directive}


@dataclass(frozen=True)
class ContractAmendment:
    action: ContractAction
    added_symbols: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "kind": "ContractAmendment",
            "section": self.action.section.value,
            "op": self.action.op.value,
            "added_symbols": list(self.added_symbols),
        }


@dataclass(frozen=True)
class AuditReport:
    existence: float
    unmatched: tuple[str, ...]
    status_updates: tuple[tuple[str, str, str], ...]
    consistency: bool
    deltas: tuple[AuditDelta, ...]
    interventions: tuple
    accepted_artifacts: tuple[tuple[str, tuple[tuple[str, str], ...]], ...]
    contract_actions: tuple[tuple[str, ContractAction], ...]
    feedback: tuple[tuple[str, str], ...]
    injected_tasks: tuple[tuple[str, str], ...]  # (path, owner)
    warnings: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "existence": self.existence,
            "unmatched": list(self.unmatched),
            "status_updates": [list(u) for u in self.status_updates],
            "consistency": self.consistency,
            "deltas": [d.to_dict() for d in self.deltas],
            "interventions": [i.to_dict() for i in self.interventions],
            "accepted_artifacts": [
                {"task": task_id, "paths": [p for p, _ in artifacts]}
                for task_id, artifacts in self.accepted_artifacts
            ],
            "contract_actions": [
                {"author": author, "section": action.section.value, "op": action.op.value}
                for author, action in self.contract_actions
            ],
            "feedback": [list(f) for f in self.feedback],
            "injected_tasks": [list(t) for t in self.injected_tasks],
            "warnings": list(self.warnings),
        }

    def sha256(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class DispatchOutcome:
    task_id: str
    role: RoleKind
    response: AgentResponse | None = None
    error: str = ""


def _is_internal_name(name: str) -> bool:
    return name.startswith("_")


def match(task: Task, unit: FileUnit | None, entry: ApiSpecEntry | None = None) -> bool:
    """Physical alignment: file exists at the task's path, is non-empty, and
    defines every class the contract names for it (the hollow-skeleton guard)."""
    if unit is None:
        return False
    try:
        if normalize_path(unit.path) != normalize_path(task.file_path):
            return False
    except PathViolation:
        return False
    if not unit.body.strip():
        return False
    if entry is not None and entry.classes:
        symbols = analyze(unit)
        if symbols.unanalyzable:
            return False
        defined = {c.name for c in symbols.classes}
        for cls in entry.classes:
            if cls.name not in defined:
                return False
            extracted = next(c for c in symbols.classes if c.name == cls.name)
            # A bare `class X: pass` counts as hollow when attributes or
            # methods are contracted for it.
            if (cls.attributes or cls.methods) and not (
                extracted.attributes or extracted.methods
            ):
                return False
    return True


def existence_check(
    contract: LanguageContract, view: dict[str, str]
) -> tuple[float, tuple[str, ...]]:
    """Fraction of tasks physically realized in the workspace, plus the misses."""
    kernel = project(contract)
    tasks = _tasks_by_id(kernel)
    if not tasks:
        logger.warning("existence check over an empty task set; defining it as 1.0")
        return 1.0, ()
    entries = {normalize_module_id(e.file_path): e for e in kernel.entries}
    unmatched = []
    for task_id, task in sorted(tasks.items()):
        body = view.get(task_id)
        unit = FileUnit(path=task_id, body=body) if body is not None else None
        if not match(task, unit, entries.get(task_id)):
            unmatched.append(task_id)
    fraction = (len(tasks) - len(unmatched)) / len(tasks)
    return fraction, tuple(unmatched)


def _tasks_by_id(kernel: SymbolicKernel) -> dict[str, Task]:
    return {t.id: t for t in tasks_of(kernel)}


def compare_unit(entry: ApiSpecEntry, body: str) -> list[MismatchDetail]:
    """Definition-side comparison of one file against its contract entry."""
    unit = FileUnit(path=entry.file_path, body=body)
    symbols = analyze(unit)
    if symbols.unanalyzable:
        return [MismatchDetail(DetailKind.UNANALYZABLE, entry.file_path, actual="unanalyzable")]
    details: list[MismatchDetail] = []
    extracted_by_name = {c.name: c for c in symbols.classes}

    for cls in entry.classes:
        extracted = extracted_by_name.get(cls.name)
        if extracted is None:
            details.append(MismatchDetail(DetailKind.MISSING, cls.name, expected="class"))
            continue
        declared_attrs = {a.name: a for a in cls.attributes}
        extracted_attrs = dict(extracted.attributes)
        for name, attr in declared_attrs.items():
            if name not in extracted_attrs:
                details.append(
                    MismatchDetail(
                        DetailKind.MISSING, f"{cls.name}.{name}", expected=attr.type_name
                    )
                )
            else:
                actual_type = extracted_attrs[name]
                # Unannotated assignments only prove presence, and a declared
                # "any" accepts every annotation.
                if actual_type != "any" and attr.type_name != "any" and actual_type != attr.type_name:
                    details.append(
                        MismatchDetail(
                            DetailKind.MISMATCH,
                            f"{cls.name}.{name}",
                            expected=attr.type_name,
                            actual=actual_type,
                        )
                    )
        for name, actual_type in extracted_attrs.items():
            if name not in declared_attrs and not _is_internal_name(name):
                details.append(
                    MismatchDetail(DetailKind.EXTRA, f"{cls.name}.{name}", actual=actual_type)
                )

        declared_methods = {m.name: m for m in cls.methods}
        extracted_methods = {m.name: m for m in extracted.methods}
        for name, sig in declared_methods.items():
            got = extracted_methods.get(name)
            if got is None:
                details.append(
                    MismatchDetail(
                        DetailKind.MISSING, f"{cls.name}.{name}", expected=print_signature(sig)
                    )
                )
            elif (got.params, got.return_type) != (sig.params, sig.return_type):
                details.append(
                    MismatchDetail(
                        DetailKind.MISMATCH,
                        f"{cls.name}.{name}",
                        expected=print_signature(sig),
                        actual=print_signature(got),
                    )
                )
        for name in extracted_methods:
            if name not in declared_methods and not _is_internal_name(name):
                details.append(
                    MismatchDetail(
                        DetailKind.EXTRA,
                        f"{cls.name}.{name}",
                        actual=print_signature(extracted_methods[name]),
                    )
                )

    declared_class_names = {c.name for c in entry.classes}
    for name, extracted in extracted_by_name.items():
        if name not in declared_class_names and not _is_internal_name(name):
            details.append(MismatchDetail(DetailKind.EXTRA, name, actual="class"))

    details.sort(key=lambda d: (d.kind.value, d.symbol))
    return details


def demand_details(kernel: SymbolicKernel, path: str, body: str) -> list[MismatchDetail]:
    """Attributes a file reads off a contracted peer class that the contract
    does not declare: the demand side of a schema divergence."""
    unit = FileUnit(path=path, body=body)
    symbols = analyze(unit)
    if symbols.unanalyzable:
        return []
    class_specs = kernel.class_specs()
    by_lower = {name.lower(): name for name in class_specs}

    receiver_types: dict[str, set[str]] = {}
    for method in [m for c in symbols.classes for m in c.methods] + list(symbols.functions):
        for pname, ptype in method.params:
            head = ptype.split("[")[0].strip()
            if head in class_specs:
                receiver_types.setdefault(pname, set()).add(head)

    details: list[MismatchDetail] = []
    seen: set[str] = set()
    for receiver, attr in symbols.attribute_uses:
        if _is_internal_name(attr):
            continue
        candidates = receiver_types.get(receiver, set())
        if not candidates and receiver.lower() in by_lower:
            candidates = {by_lower[receiver.lower()]}
        if not candidates:
            continue
        if any(_class_declares(class_specs[c][1], attr) for c in candidates):
            continue
        target = sorted(candidates)[0]
        symbol = f"{target}.{attr}"
        if symbol in seen:
            continue
        seen.add(symbol)
        details.append(MismatchDetail(DetailKind.DEMANDED, symbol))
    details.sort(key=lambda d: d.symbol)
    return details


def _class_declares(cls: ClassSpec, name: str) -> bool:
    return any(a.name == name for a in cls.attributes) or any(
        m.name == name for m in cls.methods
    )


def classify(details: list[MismatchDetail]) -> DeltaKind:
    if any(d.kind in _CRITICAL_KINDS for d in details):
        return DeltaKind.CRITICAL
    if details:
        return DeltaKind.PATCHABLE
    return DeltaKind.EMPTY


def consistency_check(
    contract: LanguageContract, view: dict[str, str]
) -> tuple[bool, tuple[AuditDelta, ...]]:
    """Signature alignment between the contract and the workspace, per task."""
    kernel = project(contract)
    deltas: list[AuditDelta] = []
    for entry in sorted(kernel.entries, key=lambda e: normalize_module_id(e.file_path)):
        task_id = normalize_module_id(entry.file_path)
        body = view.get(task_id)
        if body is None:
            continue
        details = compare_unit(entry, body)
        deltas.append(AuditDelta(task_id=task_id, kind=classify(details), details=tuple(details)))
    ok = all(d.kind is DeltaKind.EMPTY for d in deltas)
    return ok, tuple(deltas)


def sync_statuses(
    tasks: dict[str, Task], outcomes: list[DispatchOutcome]
) -> tuple[list[tuple[str, TaskStatus, TaskStatus]], list[tuple[str, str]], list[str]]:
    """Planned status moves from critic verdicts alone (worker moves depend on
    the delta classification and are planned by ``audit_layer``)."""
    updates: list[tuple[str, TaskStatus, TaskStatus]] = []
    feedback: list[tuple[str, str]] = []
    warnings: list[str] = []
    for outcome in sorted(outcomes, key=lambda o: o.task_id):
        if outcome.role is not RoleKind.CRITIC:
            continue
        task = tasks.get(outcome.task_id)
        if task is None:
            continue
        if outcome.error or outcome.response is None:
            warnings.append(f"critic for {outcome.task_id} failed: {outcome.error or 'no response'}")
            feedback.append((outcome.task_id, f"critic dispatch failed: {outcome.error or 'no response'}"))
            continue
        verdict = outcome.response.verdict
        if verdict is None:
            warnings.append(f"critic for {outcome.task_id} produced no verdict; status unchanged")
            continue
        if verdict.passed:
            updates.append((outcome.task_id, TaskStatus.DONE, TaskStatus.VERIFIED))
        else:
            updates.append((outcome.task_id, TaskStatus.DONE, TaskStatus.ERROR))
            feedback.append((outcome.task_id, verdict.reason or "critic rejected the implementation"))
    return updates, feedback, warnings


@dataclass
class SchemaAdditions:
    """Accumulated superset legitimizations for one amendment."""

    members: dict[str, list[AttributeSpec | MethodSig]] = field(default_factory=dict)
    classes: dict[str, list[ClassSpec]] = field(default_factory=dict)  # module id -> new classes
    symbols: list[str] = field(default_factory=list)

    def __bool__(self) -> bool:
        return bool(self.members or self.classes)


def _schema_additions(
    kernel: SymbolicKernel,
    deltas: dict[str, list[MismatchDetail]],
    view: dict[str, str],
) -> SchemaAdditions:
    """Turn EXTRA/DEMANDED details into schema additions."""
    class_specs = kernel.class_specs()
    out = SchemaAdditions()

    def add_member(cls_name: str, item: AttributeSpec | MethodSig, symbol: str) -> None:
        if symbol not in out.symbols:
            out.members.setdefault(cls_name, []).append(item)
            out.symbols.append(symbol)

    for task_id in sorted(deltas):
        for detail in deltas[task_id]:
            if detail.kind is DetailKind.DEMANDED:
                cls_name, attr = detail.symbol.split(".", 1)
                if cls_name in class_specs:
                    add_member(
                        cls_name,
                        AttributeSpec(name=attr, type_name="any", description=f"required by {task_id}"),
                        detail.symbol,
                    )
            elif detail.kind is DetailKind.EXTRA and "." in detail.symbol:
                cls_name, member = detail.symbol.split(".", 1)
                if cls_name not in class_specs:
                    continue
                if detail.actual.startswith("def "):
                    sig = _extracted_method(view, kernel, cls_name, member)
                    if sig is not None:
                        add_member(
                            cls_name, replace(sig, docstring=f"recorded from {task_id}"), detail.symbol
                        )
                else:
                    add_member(
                        cls_name,
                        AttributeSpec(
                            name=member,
                            type_name=detail.actual or "any",
                            description=f"observed in {task_id}",
                        ),
                        detail.symbol,
                    )
            elif detail.kind is DetailKind.EXTRA and detail.actual == "class":
                spec = _extracted_class(view, task_id, detail.symbol)
                if spec is not None and detail.symbol not in out.symbols:
                    out.classes.setdefault(task_id, []).append(spec)
                    out.symbols.append(detail.symbol)
    return out


def _extracted_class(view: dict[str, str], module_id: str, cls_name: str) -> ClassSpec | None:
    body = view.get(module_id)
    if body is None:
        return None
    symbols = analyze(FileUnit(path=module_id, body=body))
    for cls in symbols.classes:
        if cls.name == cls_name:
            attrs = tuple(
                AttributeSpec(name=n, type_name=t, description=f"observed in {module_id}")
                for n, t in cls.attributes
                if not _is_internal_name(n)
            )
            methods = tuple(
                replace(m, docstring=f"recorded from {module_id}")
                for m in cls.methods
                if not _is_internal_name(m.name)
            )
            return ClassSpec(name=cls_name, attributes=attrs, methods=methods)
    return None


def _extracted_method(
    view: dict[str, str], kernel: SymbolicKernel, cls_name: str, member: str
) -> MethodSig | None:
    module_id = kernel.class_specs()[cls_name][0]
    body = view.get(module_id)
    if body is None:
        return None
    symbols = analyze(FileUnit(path=module_id, body=body))
    for cls in symbols.classes:
        if cls.name == cls_name:
            for sig in cls.methods:
                if sig.name == member:
                    return sig
    return None


def amended_entries(
    kernel: SymbolicKernel,
    additions: SchemaAdditions,
    statuses: dict[str, TaskStatus],
) -> list[ApiSpecEntry]:
    """Rebuild the entry list with schema additions folded in and live
    statuses written back; amended entries get a version bump."""
    out: list[ApiSpecEntry] = []
    for entry in kernel.entries:
        module_id = normalize_module_id(entry.file_path)
        classes = []
        amended = False
        for cls in entry.classes:
            extra = additions.members.get(cls.name, [])
            new_attrs = list(cls.attributes)
            new_methods = list(cls.methods)
            for item in extra:
                if isinstance(item, AttributeSpec):
                    new_attrs.append(item)
                else:
                    new_methods.append(item)
                amended = True
            classes.append(
                ClassSpec(name=cls.name, attributes=tuple(new_attrs), methods=tuple(new_methods))
            )
        for new_class in additions.classes.get(module_id, []):
            classes.append(new_class)
            amended = True
        status = statuses.get(module_id, entry.status)
        out.append(
            ApiSpecEntry(
                file_path=entry.file_path,
                owner=entry.owner,
                version=entry.version + 1 if amended else entry.version,
                status=status,
                classes=tuple(classes),
            )
        )
    return out


def _repair_directive(missing: dict[str, list[str]]) -> str:
    parts = []
    for cls_name in sorted(missing):
        members = ", ".join(sorted(missing[cls_name]))
        parts.append(f"Fix the schema definition; {cls_name} requires {members}")
    return ". ".join(parts) + "."


def audit_layer(
    contract: LanguageContract,
    view: dict[str, str],
    tasks: dict[str, Task],
    outcomes: list[DispatchOutcome],
) -> AuditReport:
    """Classify one layer's outputs and plan every intervention.

    Pure: identical inputs produce identical reports. The scheduler applies
    the returned artifact commits, status updates, contract actions and task
    injections at the barrier.
    """
    kernel = project(contract)
    entries = {normalize_module_id(e.file_path): e for e in kernel.entries}

    feedback: list[tuple[str, str]] = []
    warnings: list[str] = []
    worker_details: dict[str, list[MismatchDetail]] = {}
    worker_artifacts: dict[str, tuple[tuple[str, str], ...]] = {}

    for outcome in sorted(outcomes, key=lambda o: o.task_id):
        if outcome.role is not RoleKind.WORKER:
            continue
        task = tasks.get(outcome.task_id)
        if task is None:
            continue
        if outcome.error or outcome.response is None:
            feedback.append((outcome.task_id, f"worker dispatch failed: {outcome.error or 'no response'}"))
            continue
        artifacts = []
        own_body: str | None = None
        for path, body in outcome.response.artifacts:
            try:
                normalized = normalize_path(path)
            except PathViolation as exc:
                feedback.append((outcome.task_id, f"artifact dropped: {exc}"))
                continue
            artifacts.append((normalized, body))
            if normalized == outcome.task_id:
                own_body = body
        if own_body is None:
            feedback.append(
                (outcome.task_id, f"worker produced no artifact for {task.file_path}")
            )
            continue
        worker_artifacts[outcome.task_id] = tuple(artifacts)
        entry = entries.get(outcome.task_id)
        details = compare_unit(entry, own_body) if entry is not None else []
        details.extend(demand_details(kernel, outcome.task_id, own_body))
        worker_details[outcome.task_id] = details

    # Tentative amendment from every patchable superset.
    patchable_ids = {
        task_id
        for task_id, details in worker_details.items()
        if classify(details) is DeltaKind.PATCHABLE
    }
    candidate_view = dict(view)
    for task_id in sorted(worker_artifacts):
        if task_id in worker_details and classify(worker_details[task_id]) is not DeltaKind.CRITICAL:
            for path, body in worker_artifacts[task_id]:
                candidate_view[path] = body

    additions = _schema_additions(
        kernel, {tid: worker_details[tid] for tid in patchable_ids}, candidate_view
    )

    amendment_action: ContractAction | None = None
    amended_contract = contract
    if additions:
        body_lines = print_api_section(amended_entries(kernel, additions, {}))
        amendment_action = ContractAction(
            op=ActionOp.UPDATE,
            section=SectionKey.API_SPECIFICATIONS,
            content="\n".join(body_lines),
        )
        outcome_contract = apply_action(contract, amendment_action, guard=guard_violations)
        if isinstance(outcome_contract, Rejection):
            # The superset cannot be legitimized; reject the contributing
            # artifacts instead of polluting the kernel.
            warnings.append(f"amendment rejected: {outcome_contract}")
            for task_id in sorted(patchable_ids):
                worker_details[task_id] = worker_details[task_id] + [
                    MismatchDetail(
                        DetailKind.MISMATCH,
                        task_id,
                        expected="amendable superset",
                        actual=str(outcome_contract.reason),
                    )
                ]
            amendment_action = None
            additions = SchemaAdditions()
        else:
            amended_contract = outcome_contract

    deltas: dict[str, AuditDelta] = {}
    for task_id in sorted(worker_details):
        details = worker_details[task_id]
        deltas[task_id] = AuditDelta(
            task_id=task_id, kind=classify(details), details=tuple(details)
        )

    # Plan worker status moves. A rejected artifact still consumed a worker
    # pass: the task lands on ERROR via the legal TODO -> DONE -> ERROR path.
    status_updates: list[tuple[str, TaskStatus, TaskStatus]] = []
    accepted: dict[str, tuple[tuple[str, str], ...]] = {}
    statuses = {task_id: task.status for task_id, task in tasks.items()}

    for task_id, delta in sorted(deltas.items()):
        task = tasks[task_id]
        if delta.kind is DeltaKind.CRITICAL:
            for detail in delta.details:
                feedback.append((task_id, _describe_detail(detail)))
            if task.status is TaskStatus.TODO:
                status_updates.append((task_id, TaskStatus.TODO, TaskStatus.DONE))
                status_updates.append((task_id, TaskStatus.DONE, TaskStatus.ERROR))
            statuses[task_id] = TaskStatus.ERROR
        else:
            accepted[task_id] = worker_artifacts[task_id]
            if task.status is TaskStatus.TODO:
                status_updates.append((task_id, TaskStatus.TODO, TaskStatus.DONE))
            elif task.status is TaskStatus.ERROR:
                status_updates.append((task_id, TaskStatus.ERROR, TaskStatus.DONE))
            statuses[task_id] = TaskStatus.DONE

    # Critic verdicts.
    critic_updates, critic_feedback, critic_warnings = sync_statuses(tasks, outcomes)
    regressions: list[StatusRegression] = []
    for task_id, old, new in critic_updates:
        status_updates.append((task_id, old, new))
        statuses[task_id] = new
        if new is TaskStatus.ERROR:
            reason = next((note for tid, note in critic_feedback if tid == task_id), "")
            regressions.append(StatusRegression(task_id=task_id, reason=reason))
    feedback.extend(critic_feedback)
    warnings.extend(critic_warnings)

    # Post-amendment synchronization: committed files that no longer satisfy
    # the (possibly amended) schema compel a repair round.
    committed_view = dict(view)
    for task_id, artifacts in accepted.items():
        for path, body in artifacts:
            committed_view[path] = body

    sync_tasks: list[SyncTask] = []
    amended_kernel = project(amended_contract)
    amended_by_id = {normalize_module_id(e.file_path): e for e in amended_kernel.entries}
    for task_id in sorted(tasks):
        if task_id in deltas and deltas[task_id].kind is DeltaKind.CRITICAL:
            continue
        body = committed_view.get(task_id)
        entry = amended_by_id.get(task_id)
        if body is None or entry is None:
            continue
        missing_members: dict[str, list[str]] = {}
        for detail in compare_unit(entry, body):
            if detail.kind is DetailKind.MISSING and "." in detail.symbol:
                cls_name, member = detail.symbol.split(".", 1)
                missing_members.setdefault(cls_name, []).append(member)
        if not missing_members:
            continue
        current = statuses.get(task_id)
        if current is TaskStatus.VERIFIED:
            warnings.append(
                f"{task_id} is already verified but misses amended symbols; no automatic cascade"
            )
            continue
        directive = _repair_directive(missing_members)
        if current is TaskStatus.DONE:
            status_updates.append((task_id, TaskStatus.DONE, TaskStatus.ERROR))
            statuses[task_id] = TaskStatus.ERROR
        feedback.append((task_id, directive))
        sync_tasks.append(SyncTask(task_id=task_id, directive=directive))

    # Structural existence over the post-commit view, against the amended
    # contract. Every unmatched task is (re)injected as next-layer TODO work;
    # for contracted paths with no task yet the injection also creates one.
    existence, unmatched = existence_check(amended_contract, committed_view)
    injections: list[TaskInjection] = []
    injected: list[tuple[str, str]] = []
    missing_task_paths = [m for m in sorted(amended_by_id) if m not in tasks]
    for module_id in sorted(set(unmatched) | set(missing_task_paths)):
        injections.append(TaskInjection(path=module_id))
    for module_id in missing_task_paths:
        injected.append((module_id, amended_by_id[module_id].owner))

    # Write live statuses (and any schema additions) back into the document.
    contract_actions: list[tuple[str, ContractAction]] = []
    final_body = print_api_section(amended_entries(kernel, additions, statuses))
    if tuple(final_body) != contract.body(SectionKey.API_SPECIFICATIONS):
        contract_actions.append(
            (
                AUDITOR_AUTHOR,
                ContractAction(
                    op=ActionOp.UPDATE,
                    section=SectionKey.API_SPECIFICATIONS,
                    content="\n".join(final_body),
                ),
            )
        )

    # Agent-proposed document actions ride along unless their artifact was
    # rejected outright.
    for outcome in sorted(outcomes, key=lambda o: o.task_id):
        if outcome.response is None:
            continue
        delta = deltas.get(outcome.task_id)
        if delta is not None and delta.kind is DeltaKind.CRITICAL:
            continue
        for action in outcome.response.actions:
            contract_actions.append((outcome.task_id or outcome.role.value, action))

    interventions: list = []
    if amendment_action is not None:
        interventions.append(
            ContractAmendment(action=amendment_action, added_symbols=tuple(additions.symbols))
        )
    interventions.extend(regressions)
    interventions.extend(sync_tasks)
    interventions.extend(injections)

    consistency_ok = all(d.kind is DeltaKind.EMPTY for d in deltas.values()) and not sync_tasks

    return AuditReport(
        existence=existence,
        unmatched=unmatched,
        status_updates=tuple((t, old.value, new.value) for t, old, new in status_updates),
        consistency=consistency_ok,
        deltas=tuple(deltas[t] for t in sorted(deltas)),
        interventions=tuple(interventions),
        accepted_artifacts=tuple((t, accepted[t]) for t in sorted(accepted)),
        contract_actions=tuple(contract_actions),
        feedback=tuple(feedback),
        injected_tasks=tuple(injected),
        warnings=tuple(warnings),
    )


def _describe_detail(detail: MismatchDetail) -> str:
    if detail.kind is DetailKind.MISSING:
        return f"missing contracted symbol {detail.symbol} (expected {detail.expected})"
    if detail.kind is DetailKind.MISMATCH:
        return (
            f"signature drift on {detail.symbol}: contract says {detail.expected!r}, "
            f"implementation says {detail.actual!r}"
        )
    if detail.kind is DetailKind.UNANALYZABLE:
        return f"{detail.symbol} could not be analyzed"
    return f"{detail.kind.value.lower()} symbol {detail.symbol}"
