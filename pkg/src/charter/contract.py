"""The contract document: seven canonical sections, mutations, and serialization.

The contract is the single shared planning document every agent reads and
patches. It is stored line-oriented (lines are the coordinate unit for the
patch machinery) and is immutable: every mutation produces a new value. Two
snapshots live side by side:

* ``sections`` - the current body of each section,
* ``base`` - the frozen snapshot taken at the last layer commit, which is the
  coordinate system all patches in the next layer are expressed against.

On disk the document is markdown with two fixed tier headings and the seven
section headings below, extension ``.contract.md``.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable, Iterable, Sequence

from .tasks import TaskStatus


class SectionKey(Enum):
    """Closed set of section identifiers; parsing any other key is an error."""

    PROJECT_OVERVIEW = "ProjectOverview"
    USER_STORIES = "UserStories"
    CONSTRAINTS = "Constraints"
    DIRECTORY_STRUCTURE = "DirectoryStructure"
    GLOBAL_SHARED_KNOWLEDGE = "GlobalSharedKnowledge"
    DEPENDENCY_RELATIONSHIPS = "DependencyRelationships"
    API_SPECIFICATIONS = "SymbolicApiSpecifications"

    @property
    def title(self) -> str:
        return _TITLES[self]


_TITLES: dict[SectionKey, str] = {
    SectionKey.PROJECT_OVERVIEW: "Project Overview",
    SectionKey.USER_STORIES: "User Stories (Features)",
    SectionKey.CONSTRAINTS: "Constraints",
    SectionKey.DIRECTORY_STRUCTURE: "Directory Structure",
    SectionKey.GLOBAL_SHARED_KNOWLEDGE: "Global Shared Knowledge",
    SectionKey.DEPENDENCY_RELATIONSHIPS: "Dependency Relationships",
    SectionKey.API_SPECIFICATIONS: "Symbolic API Specifications",
}

PRODUCT_TIER_TITLE = "Product Requirement Document"
TECHNICAL_TIER_TITLE = "Technical Document"

# Render order: product tier first, technical tier second.
TIERS: tuple[tuple[str, tuple[SectionKey, ...]], ...] = (
    (
        PRODUCT_TIER_TITLE,
        (
            SectionKey.PROJECT_OVERVIEW,
            SectionKey.USER_STORIES,
            SectionKey.CONSTRAINTS,
        ),
    ),
    (
        TECHNICAL_TIER_TITLE,
        (
            SectionKey.DIRECTORY_STRUCTURE,
            SectionKey.GLOBAL_SHARED_KNOWLEDGE,
            SectionKey.DEPENDENCY_RELATIONSHIPS,
            SectionKey.API_SPECIFICATIONS,
        ),
    ),
)

SECTION_ORDER: tuple[SectionKey, ...] = tuple(
    key for _, keys in TIERS for key in keys
)

_TITLE_TO_KEY: dict[str, SectionKey] = {v.lower(): k for k, v in _TITLES.items()}
# Alias table for action payloads; the closed key set itself never grows.
_SECTION_ALIASES: dict[str, SectionKey] = {
    **{k.value.lower(): k for k in SectionKey},
    **_TITLE_TO_KEY,
    "user stories": SectionKey.USER_STORIES,
    "symbolic api specification": SectionKey.API_SPECIFICATIONS,
    "api specifications": SectionKey.API_SPECIFICATIONS,
}


class ContractError(Exception):
    """Base class for contract document failures."""


class MalformedTemplate(ContractError):
    """Document is missing a canonical heading, duplicates one, or adds a stray one."""


class UnknownSection(ContractError):
    """An action named a section outside the closed key set."""


class ActionOp(Enum):
    ADD = "add"
    UPDATE = "update"


@dataclass(frozen=True)
class ContractAction:
    """Atomic mutation: ADD appends lines to a section, UPDATE replaces its body."""

    op: ActionOp
    section: SectionKey
    content: str


@dataclass(frozen=True)
class Rejection:
    """Outcome of a refused action; the input contract is left untouched."""

    reason: str
    violations: tuple = ()

    def __str__(self) -> str:
        parts = [self.reason] + [str(v) for v in self.violations]
        return "; ".join(parts)


def section_key_from_name(name: str) -> SectionKey:
    key = _SECTION_ALIASES.get(name.strip().lower())
    if key is None:
        raise UnknownSection(f"unknown section key: {name!r}")
    return key


def _normalize_body(lines: Iterable[str]) -> tuple[str, ...]:
    body = [line.rstrip("\r") for line in lines]
    while body and not body[0].strip():
        body.pop(0)
    while body and not body[-1].strip():
        body.pop()
    return tuple(body)


def body_from_text(text: str) -> tuple[str, ...]:
    return _normalize_body(text.split("\n"))


@dataclass(frozen=True)
class LanguageContract:
    sections: dict[SectionKey, tuple[str, ...]]
    revision: int
    base: dict[SectionKey, tuple[str, ...]]

    def body(self, key: SectionKey) -> tuple[str, ...]:
        return self.sections[key]

    def base_body(self, key: SectionKey) -> tuple[str, ...]:
        return self.base[key]

    def with_section(self, key: SectionKey, lines: Sequence[str]) -> "LanguageContract":
        sections = dict(self.sections)
        sections[key] = _normalize_body(lines)
        return replace(self, sections=sections, revision=self.revision + 1)

    def refresh_base(self) -> "LanguageContract":
        """Freeze the current sections as the next layer's coordinate system."""
        return replace(self, base=dict(self.sections))

    def fingerprint(self) -> str:
        return hashlib.sha256(render(self).encode("utf-8")).hexdigest()

    @staticmethod
    def empty() -> "LanguageContract":
        sections = {key: () for key in SECTION_ORDER}
        return LanguageContract(sections=sections, revision=0, base=dict(sections))


def render(contract: LanguageContract) -> str:
    """Serialize to the canonical markdown layout, deterministically."""
    lines: list[str] = []
    for tier_title, keys in TIERS:
        lines.append(f"# {tier_title}")
        lines.append("")
        for key in keys:
            lines.append(f"## {key.title}")
            lines.append("")
            body = contract.sections[key]
            if body:
                lines.extend(body)
                lines.append("")
    return "\n".join(lines) + "\n"


_FENCE_RE = re.compile(r"^\s*```")
_TIER_TITLES = {PRODUCT_TIER_TITLE, TECHNICAL_TIER_TITLE}


def parse(doc: str) -> LanguageContract:
    """Parse a canonical document back into a contract at revision 0.

    Section boundaries are ``##`` headings outside fenced code blocks; the two
    tier headings are structural and skipped. Leading/trailing blank lines in
    a section body are tolerated and dropped.
    """
    bodies: dict[SectionKey, list[str]] = {}
    current: SectionKey | None = None
    in_fence = False
    for lineno, raw in enumerate(doc.split("\n"), start=1):
        line = raw.rstrip("\r")
        if _FENCE_RE.match(line):
            in_fence = not in_fence
            if current is not None:
                bodies[current].append(line)
            elif line.strip():
                raise MalformedTemplate(f"line {lineno}: content before first section")
            continue
        if not in_fence and line.startswith("## "):
            title = line[3:].strip()
            key = _TITLE_TO_KEY.get(title.lower())
            if key is None:
                raise MalformedTemplate(f"line {lineno}: unknown section heading {title!r}")
            if key in bodies:
                raise MalformedTemplate(f"line {lineno}: duplicate section heading {title!r}")
            bodies[key] = []
            current = key
            continue
        if not in_fence and line.startswith("# ") and line[2:].strip() in _TIER_TITLES:
            continue
        if current is None:
            if line.strip():
                raise MalformedTemplate(f"line {lineno}: content before first section")
            continue
        bodies[current].append(line)

    missing = [key.title for key in SECTION_ORDER if key not in bodies]
    if missing:
        raise MalformedTemplate(f"missing section heading(s): {', '.join(missing)}")
    sections = {key: _normalize_body(bodies[key]) for key in SECTION_ORDER}
    return LanguageContract(sections=sections, revision=0, base=dict(sections))


def new_contract(template: str) -> LanguageContract:
    """Build a fresh contract from a template document; revision 0, base == sections."""
    return parse(template)


DEFAULT_TEMPLATE = render(LanguageContract.empty())


# A field line is e.g. "- Status: DONE" or "* **Status:** DONE"; bullets and
# bold markers are stripped before matching.
def parse_field_line(line: str) -> tuple[str, str] | None:
    stripped = line.strip()
    stripped = re.sub(r"^[-*]\s+", "", stripped)
    stripped = stripped.replace("*", "")
    m = re.match(r"^([A-Za-z][A-Za-z ]*?)\s*:\s*(.*)$", stripped)
    if m is None:
        return None
    return m.group(1).strip().lower(), m.group(2).strip()


_STATUS_VALUES = {s.value for s in TaskStatus}


def is_partial_api_patch(content: str) -> bool:
    """True when an API-spec patch carries a lifecycle Status field but no File field.

    Such fragments would clobber the section under full-replacement semantics,
    so they are refused at both the parse and the apply layer.
    """
    has_status = False
    has_file = False
    for line in content.split("\n"):
        parsed = parse_field_line(line)
        if parsed is None:
            continue
        key, value = parsed
        if key == "status" and value.split()[:1] and value.split()[0] in _STATUS_VALUES:
            has_status = True
        elif key in ("file", "file path"):
            has_file = True
    return has_status and not has_file


GuardFn = Callable[[LanguageContract], Sequence[object]]


def apply_action(
    contract: LanguageContract,
    action: ContractAction,
    guard: GuardFn | None = None,
) -> LanguageContract | Rejection:
    """Apply one mutation transactionally.

    The candidate contract is validated by ``guard`` (typically the kernel
    validator); any reported violation rejects the action and the caller's
    contract is untouched. ADD appends the content lines to the section body,
    UPDATE replaces the body outright.
    """
    if action.section is SectionKey.API_SPECIFICATIONS and is_partial_api_patch(action.content):
        return Rejection("partial API-spec patch (Status without File) refused to prevent clobbering")
    new_lines = body_from_text(action.content)
    if action.op is ActionOp.ADD:
        candidate_body = contract.body(action.section) + new_lines
    else:
        candidate_body = new_lines
    candidate = contract.with_section(action.section, candidate_body)
    if guard is not None:
        violations = tuple(guard(candidate))
        if violations:
            return Rejection("kernel validation failed", violations)
    return candidate


def journal_record(action: ContractAction, revision: int) -> dict:
    """One append-only sidecar record per accepted action."""
    digest = hashlib.sha256(action.content.encode("utf-8")).hexdigest()
    return {
        "revision": revision,
        "op": action.op.value,
        "section": action.section.value,
        "content_sha256": digest,
    }
