"""The generated repository: file units, symbol extraction, import resolution.

Extraction deliberately uses a line-level grammar rather than a full parser:
the auditor and the evaluation metrics only need symbol presence (classes,
constructor attributes, method signatures, imports), and a shallow grammar
keeps the engine agnostic about the generated language's full syntax.
Analyzers are pluggable per file extension.
"""

from __future__ import annotations

import logging
import posixpath
import re
from dataclasses import dataclass

from .kernel import MethodSig

logger = logging.getLogger(__name__)

WHOLE_MODULE = "*"


class PathViolation(ValueError):
    """Commit path escapes the workspace root or is otherwise unusable."""


def normalize_path(path: str) -> str:
    cleaned = path.strip().replace("\\", "/")
    if not cleaned:
        raise PathViolation("empty path")
    if cleaned.startswith("/") or re.match(r"^[A-Za-z]:", cleaned):
        raise PathViolation(f"absolute path not allowed: {path!r}")
    normalized = posixpath.normpath(cleaned)
    if normalized == "." or normalized.startswith("../") or normalized == "..":
        raise PathViolation(f"path escapes the workspace root: {path!r}")
    return normalized


@dataclass(frozen=True)
class FileUnit:
    path: str
    body: str
    writer: str = ""
    layer: int = 0


@dataclass(frozen=True)
class ExtractedClass:
    name: str
    attributes: tuple[tuple[str, str], ...]  # (name, annotated type or "any")
    methods: tuple[MethodSig, ...]


@dataclass(frozen=True)
class ExtractedSymbols:
    classes: tuple[ExtractedClass, ...] = ()
    functions: tuple[MethodSig, ...] = ()
    imports: tuple[tuple[str, str], ...] = ()  # (module path, symbol or WHOLE_MODULE)
    attribute_uses: tuple[tuple[str, str], ...] = ()  # (receiver name, attribute)
    toplevel_names: tuple[str, ...] = ()
    unanalyzable: bool = False


_CLASS_RE = re.compile(r"^(\s*)class\s+([A-Za-z_]\w*)\s*(?:\([^)]*\))?\s*:")
_DEF_RE = re.compile(r"^(\s*)def\s+([A-Za-z_]\w*)\s*\(")
_SELF_ATTR_RE = re.compile(
    r"^\s*self\.([A-Za-z_]\w*)\s*(?::\s*([^=]+?))?\s*=(?!=)"
)
_IMPORT_RE = re.compile(r"^\s*import\s+(.+?)\s*$")
_FROM_RE = re.compile(r"^\s*from\s+([\w\.]+)\s+import\s+(.+?)\s*$")
_ASSIGN_RE = re.compile(r"^([A-Za-z_]\w*)\s*(?::[^=]+)?=(?!=)")
_USE_RE = re.compile(r"\b([A-Za-z_]\w*)\.([A-Za-z_]\w*)\b")
_KEYWORD_RECEIVERS = {"self", "cls", "super"}


def _strip_comment(line: str) -> str:
    # Rough: drops '#' comments; quote-aware enough for extraction purposes.
    out = []
    quote: str | None = None
    for ch in line:
        if quote:
            out.append(ch)
            if ch == quote:
                quote = None
            continue
        if ch in "\"'":
            quote = ch
            out.append(ch)
            continue
        if ch == "#":
            break
        out.append(ch)
    return "".join(out)


def _lenient_signature(line: str) -> MethodSig | None:
    header = _strip_comment(line).strip()
    if not header.endswith(":"):
        header = header + ":"
    # Tolerate untyped parameters and missing return annotations.
    m = re.match(r"^def\s+([A-Za-z_]\w*)\s*\((.*)\)\s*(?:->\s*(.+?))?\s*:$", header, re.S)
    if m is None:
        return None
    name, inner, ret = m.group(1), m.group(2), m.group(3) or "None"
    params: list[tuple[str, str]] = []
    depth = 0
    piece = ""
    pieces: list[str] = []
    for ch in inner:
        if ch in "([{":
            depth += 1
        elif ch in ")]}":
            depth -= 1
        if ch == "," and depth == 0:
            pieces.append(piece)
            piece = ""
        else:
            piece += ch
    if piece.strip():
        pieces.append(piece)
    for raw in pieces:
        part = raw.split("=", 1)[0].strip()
        if not part or part in ("*", "/"):
            continue
        if ":" in part:
            pname, ptype = part.split(":", 1)
            params.append((pname.strip().lstrip("*"), " ".join(ptype.split())))
        else:
            params.append((part.lstrip("*"), "any"))
    if params and params[0][0] in ("self", "cls"):
        params = params[1:]
    return MethodSig(name=name, params=tuple(params), return_type=" ".join(ret.split()))


def extract_symbols(unit: FileUnit) -> ExtractedSymbols:
    """Line-grammar extraction of classes, signatures, imports and attribute uses."""
    try:
        lines = unit.body.split("\n")
    except (UnicodeDecodeError, AttributeError):
        return ExtractedSymbols(unanalyzable=True)

    classes: list[dict] = []
    functions: list[MethodSig] = []
    imports: list[tuple[str, str]] = []
    uses: list[tuple[str, str]] = []
    toplevel: list[str] = []

    current_class: dict | None = None
    class_indent = -1
    in_init = False
    init_indent = -1

    for raw in lines:
        line = _strip_comment(raw)
        if not line.strip():
            continue
        indent = len(line) - len(line.lstrip())

        if current_class is not None and indent <= class_indent and line.strip():
            current_class = None
            in_init = False
        if in_init and indent <= init_indent:
            in_init = False

        m = _CLASS_RE.match(line)
        if m:
            current_class = {"name": m.group(2), "attributes": [], "methods": []}
            class_indent = indent
            classes.append(current_class)
            if indent == 0:
                toplevel.append(m.group(2))
            in_init = False
            continue

        m = _DEF_RE.match(line)
        if m:
            sig = _lenient_signature(line)
            if sig is None:
                continue
            if current_class is not None and indent > class_indent:
                current_class["methods"].append(sig)
                in_init = sig.name == "__init__"
                init_indent = indent
            else:
                functions.append(sig)
                if indent == 0:
                    toplevel.append(sig.name)
                in_init = False
            continue

        m = _IMPORT_RE.match(line)
        if m and not line.lstrip().startswith("from"):
            for item in m.group(1).split(","):
                module = item.strip().split(" as ")[0].strip()
                if module and re.fullmatch(r"[\w\.]+", module):
                    imports.append((module, WHOLE_MODULE))
            continue

        m = _FROM_RE.match(line)
        if m:
            module = m.group(1)
            for item in m.group(2).split(","):
                symbol = item.strip().split(" as ")[0].strip()
                if symbol == "*":
                    imports.append((module, WHOLE_MODULE))
                elif re.fullmatch(r"[A-Za-z_]\w*", symbol):
                    imports.append((module, symbol))
            continue

        if in_init and current_class is not None:
            m = _SELF_ATTR_RE.match(line)
            if m:
                type_name = " ".join(m.group(2).split()) if m.group(2) else "any"
                pairs = current_class["attributes"]
                if not any(n == m.group(1) for n, _ in pairs):
                    pairs.append((m.group(1), type_name))

        if indent == 0:
            m = _ASSIGN_RE.match(line)
            if m:
                toplevel.append(m.group(1))

        for receiver, attr in _USE_RE.findall(line):
            if receiver not in _KEYWORD_RECEIVERS:
                uses.append((receiver, attr))

    extracted_classes = tuple(
        ExtractedClass(
            name=c["name"],
            attributes=tuple(c["attributes"]),
            methods=tuple(c["methods"]),
        )
        for c in classes
    )
    return ExtractedSymbols(
        classes=extracted_classes,
        functions=tuple(functions),
        imports=tuple(imports),
        attribute_uses=tuple(dict.fromkeys(uses)),
        toplevel_names=tuple(dict.fromkeys(toplevel)),
    )


# Analyzers are keyed by file extension; the default line-grammar analyzer
# covers the dynamic-scripting-language shape the generated repositories use.
ANALYZERS: dict[str, object] = {".py": extract_symbols}


def analyze(unit: FileUnit) -> ExtractedSymbols:
    ext = "." + unit.path.rsplit(".", 1)[-1] if "." in unit.path else ""
    analyzer = ANALYZERS.get(ext, extract_symbols)
    return analyzer(unit)  # type: ignore[operator]


class Workspace:
    """In-memory repository with deterministic iteration and disk materialization."""

    def __init__(self):
        self._units: dict[str, FileUnit] = {}

    def commit_file(self, path: str, body: str, writer: str = "", layer: int = 0) -> FileUnit:
        normalized = normalize_path(path)
        unit = FileUnit(path=normalized, body=body, writer=writer, layer=layer)
        self._units[normalized] = unit
        return unit

    def get(self, path: str) -> FileUnit | None:
        try:
            return self._units.get(normalize_path(path))
        except PathViolation:
            return None

    def paths(self) -> list[str]:
        return sorted(self._units)

    def units(self) -> list[FileUnit]:
        return [self._units[p] for p in self.paths()]

    def view(self) -> dict[str, str]:
        return {p: self._units[p].body for p in self.paths()}

    def __len__(self) -> int:
        return len(self._units)

    def materialize(self, root) -> None:
        from pathlib import Path

        base = Path(root)
        for unit in self.units():
            target = base / unit.path
            target.parent.mkdir(parents=True, exist_ok=True)
            target.write_text(unit.body, encoding="utf-8")

    @staticmethod
    def load(root) -> "Workspace":
        from pathlib import Path

        ws = Workspace()
        base = Path(root)
        for path in sorted(base.rglob("*")):
            if not path.is_file():
                continue
            rel = path.relative_to(base).as_posix()
            try:
                body = path.read_text(encoding="utf-8")
            except UnicodeDecodeError:
                logger.warning("skipping undecodable file %s", rel)
                continue
            ws.commit_file(rel, body)
        return ws


def module_candidates(module: str, importer_path: str) -> list[str]:
    """Repository paths a dotted module path may resolve to."""
    if module.startswith("."):
        stripped = module.lstrip(".")
        hops = len(module) - len(stripped)
        parent = posixpath.dirname(importer_path)
        for _ in range(hops - 1):
            parent = posixpath.dirname(parent)
        prefix = f"{parent}/" if parent else ""
        dotted = stripped
    else:
        prefix = ""
        dotted = module
    rel = dotted.replace(".", "/")
    if not rel:
        return []
    return [f"{prefix}{rel}.py", f"{prefix}{rel}/__init__.py"]


@dataclass(frozen=True)
class ImportCheck:
    importer: str
    module: str
    symbol: str
    target: str | None
    valid: bool


def resolve_imports(workspace: Workspace) -> list[ImportCheck]:
    """Validity of every internal import; external packages are excluded.

    An import is internal when its module path maps onto a repository file.
    ``from M import S`` is valid iff the target file exists and defines S;
    whole-module imports only require the file (or package marker) to exist.
    """
    checks: list[ImportCheck] = []
    paths = set(workspace.paths())
    directories = {p.rsplit("/", 1)[0] for p in paths if "/" in p}
    directories.update(d.split("/", 1)[0] for d in set(directories))
    file_stems = {p.rsplit("/", 1)[-1].rsplit(".", 1)[0] for p in paths}
    defined_cache: dict[str, set[str]] = {}

    def defined_names(path: str) -> set[str]:
        if path not in defined_cache:
            unit = workspace.get(path)
            symbols = analyze(unit) if unit else ExtractedSymbols()
            defined_cache[path] = set(symbols.toplevel_names)
        return defined_cache[path]

    def looks_internal(module: str) -> bool:
        if module.startswith("."):
            return True
        parts = module.split(".")
        return parts[0] in directories or parts[-1] in file_stems

    for unit in workspace.units():
        symbols = analyze(unit)
        if symbols.unanalyzable:
            continue
        for module, symbol in symbols.imports:
            candidates = module_candidates(module, unit.path)
            target = next((c for c in candidates if c in paths), None)
            if target is None:
                # Dangling: counts as internal (and invalid) when the module
                # path points at something that plausibly lives in this
                # repository; anything else is an external package.
                if looks_internal(module):
                    checks.append(ImportCheck(unit.path, module, symbol, None, False))
                continue
            valid = symbol == WHOLE_MODULE or symbol in defined_names(target)
            checks.append(ImportCheck(unit.path, module, symbol, target, valid))
    return checks
