"""Concrete textual syntax for deployment models.

The syntax is a restricted YAML dialect. Each document carries a required
``edmm_version: 1`` header and up to five sections: ``name``,
``properties``, ``component_types``, ``relation_types`` and ``components``.
Relations are declared inline on their source component and lifted into
relation records while parsing. Anchors, aliases, explicit tags and merge
keys are rejected so the grammar stays portable.

Parsing is total: any input text produces either a structurally complete
model or a list of positioned diagnostics, never an exception. Referential
checks (unknown types, dangling relation targets) are deliberately left to
the validation stage.

The normative grammar lives in docs/dsl-reference.md.
"""

from __future__ import annotations

import copy
import re
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .model import (
    Artifact,
    ArtifactKind,
    Component,
    ComponentType,
    DeploymentModel,
    Kind,
    Operation,
    PropertyDeclaration,
    PropertyReference,
    PropertyValue,
    Relation,
    RelationType,
    _Resolver,
    is_element_name,
    is_identifier,
)

EDMM_VERSION = 1
FILE_EXTENSION = ".edmm.yaml"

# Closed diagnostic code set; documented in docs/dsl-reference.md.
P100_SYNTAX = "P100_SYNTAX"
P101_FORBIDDEN_FEATURE = "P101_FORBIDDEN_FEATURE"
P102_VERSION = "P102_VERSION"
P103_STRUCTURE = "P103_STRUCTURE"
P104_UNKNOWN_KEY = "P104_UNKNOWN_KEY"
P105_DUPLICATE_COMPONENT = "P105_DUPLICATE_COMPONENT"
P106_DUPLICATE_TYPE = "P106_DUPLICATE_TYPE"
P107_DUPLICATE_ENTRY = "P107_DUPLICATE_ENTRY"
P108_MODEL_NAME = "P108_MODEL_NAME"
P109_BAD_IDENTIFIER = "P109_BAD_IDENTIFIER"

PARSE_CODES = frozenset(
    {
        P100_SYNTAX,
        P101_FORBIDDEN_FEATURE,
        P102_VERSION,
        P103_STRUCTURE,
        P104_UNKNOWN_KEY,
        P105_DUPLICATE_COMPONENT,
        P106_DUPLICATE_TYPE,
        P107_DUPLICATE_ENTRY,
        P108_MODEL_NAME,
        P109_BAD_IDENTIFIER,
    }
)

_TOP_LEVEL_KEYS = frozenset(
    {"edmm_version", "name", "properties", "component_types", "relation_types", "components"}
)
_CATALOG_KEYS = frozenset({"edmm_version", "component_types", "relation_types"})
_COMPONENT_KEYS = frozenset({"type", "properties", "operations", "artifacts", "relations"})
_COMPONENT_TYPE_KEYS = frozenset({"extends", "metadata", "properties", "operations"})
_RELATION_TYPE_KEYS = frozenset({"extends", "properties"})
_RELATION_KEYS = frozenset({"type", "target", "name", "properties", "operations"})
_DECLARATION_KEYS = frozenset({"kind", "required", "default"})
_ARTIFACT_KEYS = frozenset({"name", "path", "kind"})
_OPERATION_KEYS = frozenset({"path", "kind", "name"})

_REFERENCE_RE = re.compile(r"^\$\{\s*([^{}]+?)\s*\}$")

_SCRIPT_SUFFIXES = {".sh", ".bash", ".py", ".ps1"}
_ARCHIVE_SUFFIXES = {".zip", ".tar", ".gz", ".tgz", ".war", ".jar", ".ear"}


@dataclass(frozen=True)
class SourceSet:
    """Ordered collection of named input texts forming one model."""

    entries: tuple[tuple[str, str], ...]

    def __post_init__(self):
        if not self.entries:
            raise ValueError("a SourceSet needs at least one source")
        names = [name for name, _ in self.entries]
        if len(set(names)) != len(names):
            raise ValueError("source names must be unique")

    @staticmethod
    def of_text(text: str, name: str = "<input>") -> "SourceSet":
        return SourceSet(((name, text),))

    @staticmethod
    def of_pairs(*pairs: tuple[str, str]) -> "SourceSet":
        return SourceSet(tuple(pairs))

    @staticmethod
    def from_files(paths) -> "SourceSet":
        entries = []
        for path in paths:
            p = Path(path)
            entries.append((str(p), p.read_text(encoding="utf-8")))
        return SourceSet(tuple(entries))


@dataclass(frozen=True)
class ParseDiagnostic:
    severity: str  # error | warning
    source: str
    line: int  # 1-based
    column: int  # 1-based
    message: str
    code: str

    def __str__(self):
        return f"{self.source}:{self.line}:{self.column}: {self.severity}: {self.message} [{self.code}]"


@dataclass
class ParseResult:
    """Either a model or at least one error diagnostic."""

    model: DeploymentModel | None
    diagnostics: list[ParseDiagnostic]

    @property
    def ok(self) -> bool:
        return self.model is not None

    def expect(self) -> DeploymentModel:
        if self.model is None:
            raise ValueError(
                "parse failed:\n" + "\n".join(str(d) for d in self.diagnostics)
            )
        return self.model


class _Ctx:
    """Per-source diagnostic sink with position bookkeeping."""

    def __init__(self, source: str, diagnostics: list[ParseDiagnostic]):
        self.source = source
        self.diagnostics = diagnostics

    def error(self, node, code: str, message: str) -> None:
        mark = getattr(node, "start_mark", node)
        line = getattr(mark, "line", 0) + 1
        column = getattr(mark, "column", 0) + 1
        self.diagnostics.append(
            ParseDiagnostic("error", self.source, line, column, message, code)
        )

    def where(self, node) -> str:
        mark = node.start_mark
        return f"{self.source}:{mark.line + 1}"


def _scan_forbidden(ctx: _Ctx, text: str) -> bool:
    """Reject anchors, aliases and explicit tags before composing."""
    clean = True
    try:
        for token in yaml.scan(text):
            if isinstance(token, (yaml.AnchorToken, yaml.AliasToken)):
                ctx.error(token, P101_FORBIDDEN_FEATURE, "anchors and aliases are not supported")
                clean = False
            elif isinstance(token, yaml.TagToken):
                ctx.error(token, P101_FORBIDDEN_FEATURE, "explicit tags are not supported")
                clean = False
    except yaml.YAMLError as exc:
        _yaml_error(ctx, exc)
        return False
    except RecursionError:
        ctx.error(None, P100_SYNTAX, "input nests too deeply")
        return False
    return clean


def _yaml_error(ctx: _Ctx, exc: yaml.YAMLError) -> None:
    mark = getattr(exc, "problem_mark", None)
    message = getattr(exc, "problem", None) or str(exc) or "invalid syntax"
    ctx.error(mark if mark is not None else None, P100_SYNTAX, str(message))


def _scalar(ctx: _Ctx, node, what: str):
    """Construct a python scalar from a resolved scalar node; returns
    (ok, value)."""
    if not isinstance(node, yaml.ScalarNode):
        ctx.error(node, P103_STRUCTURE, f"{what} must be a scalar")
        return False, None
    tag = node.tag
    raw = node.value
    if tag.endswith(":str"):
        return True, raw
    if tag.endswith(":int"):
        if re.fullmatch(r"[-+]?[0-9][0-9_]*", raw):
            return True, int(raw.replace("_", ""))
        ctx.error(node, P103_STRUCTURE, f"{what}: unsupported integer form {raw!r}")
        return False, None
    if tag.endswith(":bool"):
        return True, raw.lower() in ("true", "yes", "on")
    if tag.endswith(":null"):
        return True, None
    if tag.endswith(":float"):
        ctx.error(node, P103_STRUCTURE, f"{what}: floating point values are not supported")
        return False, None
    ctx.error(node, P103_STRUCTURE, f"{what}: unsupported value type")
    return False, None


def _string(ctx: _Ctx, node, what: str) -> str | None:
    ok, value = _scalar(ctx, node, what)
    if not ok:
        return None
    if not isinstance(value, str):
        ctx.error(node, P103_STRUCTURE, f"{what} must be a string")
        return None
    return value


def _mapping(ctx: _Ctx, node, what: str):
    """Ordered (key, key_node, value_node) triples with duplicate and merge
    key rejection; None when the node is not a mapping."""
    if node is None or (isinstance(node, yaml.ScalarNode) and node.tag.endswith(":null")):
        return []
    if not isinstance(node, yaml.MappingNode):
        ctx.error(node, P103_STRUCTURE, f"{what} must be a mapping")
        return None
    items = []
    seen: set[str] = set()
    for key_node, value_node in node.value:
        key = _string(ctx, key_node, f"key in {what}")
        if key is None:
            continue
        if key == "<<":
            ctx.error(key_node, P101_FORBIDDEN_FEATURE, "merge keys are not supported")
            continue
        if key in seen:
            ctx.error(key_node, P107_DUPLICATE_ENTRY, f"duplicate key {key!r} in {what}")
            continue
        seen.add(key)
        items.append((key, key_node, value_node))
    return items


def _sequence(ctx: _Ctx, node, what: str):
    if node is None or (isinstance(node, yaml.ScalarNode) and node.tag.endswith(":null")):
        return []
    if not isinstance(node, yaml.SequenceNode):
        ctx.error(node, P103_STRUCTURE, f"{what} must be a list")
        return None
    return list(node.value)


def parse_reference(text: str) -> PropertyReference | None:
    """Intrinsic reference syntax: ``${prop}`` names a model property,
    ``${component.prop}`` another component's effective property. The whole
    value must be the reference; returns None when text is not one."""
    match = _REFERENCE_RE.match(text)
    if not match:
        return None
    inner = match.group(1)
    if "." in inner:
        owner, prop = inner.rsplit(".", 1)
        owner = owner.strip()
        prop = prop.strip()
        if is_element_name(owner) and is_identifier(prop):
            return PropertyReference(owner, prop)
        return None
    if is_identifier(inner):
        return PropertyReference(None, inner)
    return None


def _property_value(ctx: _Ctx, node, what: str) -> PropertyValue | None:
    if isinstance(node, yaml.SequenceNode):
        items = []
        for item in node.value:
            text = _string(ctx, item, f"list entry in {what}")
            if text is None:
                return None
            items.append(text)
        return PropertyValue.of(items)
    ok, value = _scalar(ctx, node, what)
    if not ok:
        return None
    if value is None:
        ctx.error(node, P103_STRUCTURE, f"{what} must not be null")
        return None
    if isinstance(value, str):
        if value.startswith("${") and value.endswith("}"):
            ref = parse_reference(value)
            if ref is None:
                ctx.error(node, P103_STRUCTURE, f"{what}: malformed reference {value!r}")
                return None
            return PropertyValue(reference=ref)
    return PropertyValue.of(value)


def _literal(ctx: _Ctx, node, what: str):
    """A literal only (references not allowed), e.g. declaration defaults."""
    value = _property_value(ctx, node, what)
    if value is None:
        return None
    if value.is_reference:
        ctx.error(node, P103_STRUCTURE, f"{what} must be a literal, not a reference")
        return None
    return value.literal


def _identifier(ctx: _Ctx, node, text: str, what: str) -> bool:
    if not is_identifier(text):
        ctx.error(node, P109_BAD_IDENTIFIER, f"{what} {text!r} is not a lower_snake_case identifier")
        return False
    return True


def _infer_artifact_kind(path: str) -> ArtifactKind:
    suffix = Path(path).suffix.lower()
    if suffix in _SCRIPT_SUFFIXES:
        return ArtifactKind.SCRIPT
    if suffix in _ARCHIVE_SUFFIXES:
        return ArtifactKind.ARCHIVE
    return ArtifactKind.OTHER


def _artifact(ctx: _Ctx, node, what: str, default_name: str | None = None) -> Artifact | None:
    if isinstance(node, yaml.ScalarNode):
        path = _string(ctx, node, what)
        if not path:
            if path == "":
                ctx.error(node, P103_STRUCTURE, f"{what}: path must be non-empty")
            return None
        name = default_name or Path(path).stem or path
        return Artifact(name=name, path=path, kind=_infer_artifact_kind(path))
    items = _mapping(ctx, node, what)
    if items is None:
        return None
    fields: dict[str, object] = {}
    for key, key_node, value_node in items:
        if key not in _ARTIFACT_KEYS:
            ctx.error(key_node, P104_UNKNOWN_KEY, f"unknown key {key!r} in {what}")
            continue
        text = _string(ctx, value_node, f"{what}.{key}")
        if text is None:
            return None
        fields[key] = text
    path = fields.get("path")
    if not path:
        ctx.error(node, P103_STRUCTURE, f"{what}: path is required and non-empty")
        return None
    kind_text = fields.get("kind")
    if kind_text is None:
        kind = _infer_artifact_kind(path)
    else:
        try:
            kind = ArtifactKind(kind_text)
        except ValueError:
            ctx.error(node, P103_STRUCTURE, f"{what}: unknown artifact kind {kind_text!r}")
            return None
    name = fields.get("name") or default_name or Path(path).stem or path
    return Artifact(name=name, path=path, kind=kind)


def _operation(ctx: _Ctx, node, op_name: str, what: str) -> Operation | None:
    if isinstance(node, yaml.ScalarNode):
        path = _string(ctx, node, what)
        if not path:
            ctx.error(node, P103_STRUCTURE, f"{what}: artifact path must be non-empty")
            return None
        return Operation(op_name, Artifact(name=op_name, path=path, kind=ArtifactKind.SCRIPT))
    items = _mapping(ctx, node, what)
    if items is None:
        return None
    fields: dict[str, str] = {}
    for key, key_node, value_node in items:
        if key not in _OPERATION_KEYS:
            ctx.error(key_node, P104_UNKNOWN_KEY, f"unknown key {key!r} in {what}")
            continue
        text = _string(ctx, value_node, f"{what}.{key}")
        if text is None:
            return None
        fields[key] = text
    path = fields.get("path")
    if not path:
        ctx.error(node, P103_STRUCTURE, f"{what}: path is required and non-empty")
        return None
    kind_text = fields.get("kind", "script")
    try:
        kind = ArtifactKind(kind_text)
    except ValueError:
        ctx.error(node, P103_STRUCTURE, f"{what}: unknown artifact kind {kind_text!r}")
        return None
    return Operation(op_name, Artifact(name=fields.get("name") or op_name, path=path, kind=kind))


def _operations(ctx: _Ctx, node, what: str) -> dict[str, Operation] | None:
    items = _mapping(ctx, node, what)
    if items is None:
        return None
    ops: dict[str, Operation] = {}
    for key, key_node, value_node in items:
        if not _identifier(ctx, key_node, key, f"operation name in {what}"):
            continue
        op = _operation(ctx, value_node, key, f"{what}.{key}")
        if op is not None:
            ops[key] = op
    return ops


def _properties(ctx: _Ctx, node, what: str) -> dict[str, PropertyValue] | None:
    items = _mapping(ctx, node, what)
    if items is None:
        return None
    props: dict[str, PropertyValue] = {}
    for key, key_node, value_node in items:
        if not _identifier(ctx, key_node, key, f"property name in {what}"):
            continue
        value = _property_value(ctx, value_node, f"{what}.{key}")
        if value is not None:
            props[key] = value
    return props


def _declaration(ctx: _Ctx, node, what: str) -> PropertyDeclaration | None:
    if isinstance(node, yaml.ScalarNode):
        text = _string(ctx, node, what)
        if text is None:
            return None
        try:
            return PropertyDeclaration(kind=Kind(text))
        except ValueError:
            ctx.error(node, P103_STRUCTURE, f"{what}: unknown property kind {text!r}")
            return None
    items = _mapping(ctx, node, what)
    if items is None:
        return None
    kind: Kind | None = None
    required = False
    default = None
    for key, key_node, value_node in items:
        if key not in _DECLARATION_KEYS:
            ctx.error(key_node, P104_UNKNOWN_KEY, f"unknown key {key!r} in {what}")
            continue
        if key == "kind":
            text = _string(ctx, value_node, f"{what}.kind")
            if text is None:
                return None
            try:
                kind = Kind(text)
            except ValueError:
                ctx.error(value_node, P103_STRUCTURE, f"{what}: unknown property kind {text!r}")
                return None
        elif key == "required":
            ok, value = _scalar(ctx, value_node, f"{what}.required")
            if not ok or not isinstance(value, bool):
                ctx.error(value_node, P103_STRUCTURE, f"{what}.required must be a boolean")
                return None
            required = value
        elif key == "default":
            default = _literal(ctx, value_node, f"{what}.default")
            if default is None:
                return None
    if kind is None:
        ctx.error(node, P103_STRUCTURE, f"{what}: kind is required")
        return None
    return PropertyDeclaration(kind=kind, required=required, default=default)


def _declarations(ctx: _Ctx, node, what: str) -> dict[str, PropertyDeclaration] | None:
    items = _mapping(ctx, node, what)
    if items is None:
        return None
    decls: dict[str, PropertyDeclaration] = {}
    for key, key_node, value_node in items:
        if not _identifier(ctx, key_node, key, f"property name in {what}"):
            continue
        decl = _declaration(ctx, value_node, f"{what}.{key}")
        if decl is not None:
            decls[key] = decl
    return decls


def _metadata(ctx: _Ctx, node, what: str) -> dict[str, object] | None:
    items = _mapping(ctx, node, what)
    if items is None:
        return None
    meta: dict[str, object] = {}
    for key, key_node, value_node in items:
        if not _identifier(ctx, key_node, key, f"metadata key in {what}"):
            continue
        if isinstance(value_node, yaml.SequenceNode):
            values = []
            for item in value_node.value:
                text = _string(ctx, item, f"{what}.{key} entry")
                if text is not None:
                    values.append(text)
            meta[key] = values
        else:
            ok, value = _scalar(ctx, value_node, f"{what}.{key}")
            if ok and value is not None:
                meta[key] = value
    return meta


def _component_type(ctx: _Ctx, name: str, node, origin: str) -> ComponentType | None:
    items = _mapping(ctx, node, f"component type {name!r}")
    if items is None:
        return None
    ct = ComponentType(name=name, origin=origin)
    for key, key_node, value_node in items:
        if key not in _COMPONENT_TYPE_KEYS:
            ctx.error(key_node, P104_UNKNOWN_KEY, f"unknown key {key!r} in component type {name!r}")
            continue
        if key == "extends":
            text = _string(ctx, value_node, f"component type {name!r}.extends")
            if text is not None:
                ct.extends = text
        elif key == "metadata":
            meta = _metadata(ctx, value_node, f"component type {name!r}.metadata")
            if meta is not None:
                ct.metadata = meta
        elif key == "properties":
            decls = _declarations(ctx, value_node, f"component type {name!r}.properties")
            if decls is not None:
                ct.property_schema = decls
        elif key == "operations":
            ops = _operations(ctx, value_node, f"component type {name!r}.operations")
            if ops is not None:
                ct.operations = ops
    return ct


def _relation_type(ctx: _Ctx, name: str, node, origin: str) -> RelationType | None:
    items = _mapping(ctx, node, f"relation type {name!r}")
    if items is None:
        return None
    rt = RelationType(name=name, origin=origin)
    for key, key_node, value_node in items:
        if key not in _RELATION_TYPE_KEYS:
            ctx.error(key_node, P104_UNKNOWN_KEY, f"unknown key {key!r} in relation type {name!r}")
            continue
        if key == "extends":
            text = _string(ctx, value_node, f"relation type {name!r}.extends")
            if text is not None:
                rt.extends = text
        elif key == "properties":
            decls = _declarations(ctx, value_node, f"relation type {name!r}.properties")
            if decls is not None:
                rt.property_schema = decls
    return rt


def _relation_entry(ctx: _Ctx, node, source_component: str, index: int) -> Relation | None:
    what = f"relation {index + 1} of component {source_component!r}"
    items = _mapping(ctx, node, what)
    if items is None or not items:
        if items is not None:
            ctx.error(node, P103_STRUCTURE, f"{what} must not be empty")
        return None
    keys = {key for key, _, _ in items}
    if len(items) == 1 and not keys & _RELATION_KEYS:
        # shorthand: - <relation_type>: <target component>
        key, key_node, value_node = items[0]
        if not _identifier(ctx, key_node, key, f"relation type in {what}"):
            return None
        target = _string(ctx, value_node, f"{what} target")
        if target is None:
            return None
        return Relation(name=f"{key}_{target}", type=key, source=source_component, target=target)
    rel_type = None
    target = None
    name = None
    properties: dict[str, PropertyValue] = {}
    operations: dict[str, Operation] = {}
    for key, key_node, value_node in items:
        if key not in _RELATION_KEYS:
            ctx.error(key_node, P104_UNKNOWN_KEY, f"unknown key {key!r} in {what}")
            continue
        if key == "type":
            rel_type = _string(ctx, value_node, f"{what}.type")
        elif key == "target":
            target = _string(ctx, value_node, f"{what}.target")
        elif key == "name":
            name = _string(ctx, value_node, f"{what}.name")
        elif key == "properties":
            props = _properties(ctx, value_node, f"{what}.properties")
            if props is not None:
                properties = props
        elif key == "operations":
            ops = _operations(ctx, value_node, f"{what}.operations")
            if ops is not None:
                operations = ops
    if not rel_type or not target:
        ctx.error(node, P103_STRUCTURE, f"{what} needs both type and target")
        return None
    if name is not None and not is_element_name(name):
        ctx.error(node, P109_BAD_IDENTIFIER, f"{what}: invalid relation name {name!r}")
        return None
    return Relation(
        name=name or f"{rel_type}_{target}",
        type=rel_type,
        source=source_component,
        target=target,
        properties=properties,
        operations=operations,
    )


def _component(ctx: _Ctx, name: str, node) -> tuple[Component, list[Relation]] | None:
    what = f"component {name!r}"
    items = _mapping(ctx, node, what)
    if items is None:
        return None
    comp = Component(name=name, type="")
    relations: list[Relation] = []
    for key, key_node, value_node in items:
        if key not in _COMPONENT_KEYS:
            ctx.error(key_node, P104_UNKNOWN_KEY, f"unknown key {key!r} in {what}")
            continue
        if key == "type":
            text = _string(ctx, value_node, f"{what}.type")
            if text is not None:
                comp.type = text
        elif key == "properties":
            props = _properties(ctx, value_node, f"{what}.properties")
            if props is not None:
                comp.properties = props
        elif key == "operations":
            ops = _operations(ctx, value_node, f"{what}.operations")
            if ops is not None:
                comp.operations = ops
        elif key == "artifacts":
            entries = _sequence(ctx, value_node, f"{what}.artifacts")
            if entries is None:
                continue
            for i, entry in enumerate(entries):
                artifact = _artifact(ctx, entry, f"{what}.artifacts[{i}]")
                if artifact is not None:
                    comp.artifacts.append(artifact)
        elif key == "relations":
            entries = _sequence(ctx, value_node, f"{what}.relations")
            if entries is None:
                continue
            seen_names: set[str] = set()
            for i, entry in enumerate(entries):
                rel = _relation_entry(ctx, entry, name, i)
                if rel is None:
                    continue
                if rel.name in seen_names:
                    ctx.error(
                        entry,
                        P107_DUPLICATE_ENTRY,
                        f"duplicate relation name {rel.name!r} on component {name!r}",
                    )
                    continue
                seen_names.add(rel.name)
                relations.append(rel)
    if not comp.type:
        ctx.error(node, P103_STRUCTURE, f"{what}: type is required")
        return None
    return comp, relations


class _Assembler:
    """Accumulates definitions across documents and sources."""

    def __init__(self):
        self.diagnostics: list[ParseDiagnostic] = []
        self.name: str | None = None
        self.name_origin: str | None = None
        self.properties: dict[str, PropertyValue] = {}
        self.property_origin: dict[str, str] = {}
        self.component_types: dict[str, ComponentType] = {}
        self.relation_types: dict[str, RelationType] = {}
        self.type_origin: dict[str, str] = {}
        self.components: dict[str, Component] = {}
        self.component_origin: dict[str, str] = {}
        self.relations: list[Relation] = []

    def add_document(self, ctx: _Ctx, node, allowed_keys: frozenset) -> None:
        items = _mapping(ctx, node, "document")
        if items is None:
            return
        by_key = {}
        for key, key_node, value_node in items:
            if key not in allowed_keys:
                ctx.error(key_node, P104_UNKNOWN_KEY, f"unknown top-level key {key!r}")
                continue
            by_key[key] = (key_node, value_node)
        self._check_version(ctx, node, by_key)
        if "name" in by_key:
            self._take_name(ctx, *by_key["name"])
        if "properties" in by_key:
            self._take_properties(ctx, by_key["properties"][1])
        if "component_types" in by_key:
            self._take_component_types(ctx, by_key["component_types"][1])
        if "relation_types" in by_key:
            self._take_relation_types(ctx, by_key["relation_types"][1])
        if "components" in by_key:
            self._take_components(ctx, by_key["components"][1])

    def _check_version(self, ctx: _Ctx, node, by_key) -> None:
        if "edmm_version" not in by_key:
            ctx.error(node, P102_VERSION, "missing required edmm_version header")
            return
        _, value_node = by_key["edmm_version"]
        ok, value = _scalar(ctx, value_node, "edmm_version")
        if ok and value != EDMM_VERSION:
            ctx.error(
                value_node, P102_VERSION, f"unsupported edmm_version {value!r}; expected {EDMM_VERSION}"
            )

    def _take_name(self, ctx: _Ctx, key_node, value_node) -> None:
        text = _string(ctx, value_node, "name")
        if text is None:
            return
        if not is_element_name(text):
            ctx.error(value_node, P109_BAD_IDENTIFIER, f"invalid model name {text!r}")
            return
        if self.name is None:
            self.name = text
            self.name_origin = ctx.where(value_node)
        elif self.name != text:
            ctx.error(
                value_node,
                P108_MODEL_NAME,
                f"model name {text!r} conflicts with {self.name!r} from {self.name_origin}",
            )

    def _take_properties(self, ctx: _Ctx, node) -> None:
        items = _mapping(ctx, node, "properties")
        if items is None:
            return
        for key, key_node, value_node in items:
            if not _identifier(ctx, key_node, key, "model property name"):
                continue
            if key in self.properties:
                ctx.error(
                    key_node,
                    P107_DUPLICATE_ENTRY,
                    f"model property {key!r} already defined in {self.property_origin[key]}",
                )
                continue
            value = _property_value(ctx, value_node, f"properties.{key}")
            if value is not None:
                self.properties[key] = value
                self.property_origin[key] = ctx.where(key_node)

    def _take_component_types(self, ctx: _Ctx, node) -> None:
        items = _mapping(ctx, node, "component_types")
        if items is None:
            return
        for key, key_node, value_node in items:
            if not _identifier(ctx, key_node, key, "component type name"):
                continue
            if key in self.component_types:
                ctx.error(
                    key_node,
                    P106_DUPLICATE_TYPE,
                    f"component type {key!r} already defined in {self.type_origin.get(key, 'the catalog')}",
                )
                continue
            ct = _component_type(ctx, key, value_node, origin="model")
            if ct is not None:
                self.component_types[key] = ct
                self.type_origin[key] = ctx.where(key_node)

    def _take_relation_types(self, ctx: _Ctx, node) -> None:
        items = _mapping(ctx, node, "relation_types")
        if items is None:
            return
        for key, key_node, value_node in items:
            if not _identifier(ctx, key_node, key, "relation type name"):
                continue
            if key in self.relation_types:
                ctx.error(
                    key_node,
                    P106_DUPLICATE_TYPE,
                    f"relation type {key!r} already defined in {self.type_origin.get(key, 'the catalog')}",
                )
                continue
            rt = _relation_type(ctx, key, value_node, origin="model")
            if rt is not None:
                self.relation_types[key] = rt
                self.type_origin[key] = ctx.where(key_node)

    def _take_components(self, ctx: _Ctx, node) -> None:
        items = _mapping(ctx, node, "components")
        if items is None:
            return
        for key, key_node, value_node in items:
            if not is_element_name(key):
                ctx.error(key_node, P109_BAD_IDENTIFIER, f"invalid component name {key!r}")
                continue
            if key in self.components:
                ctx.error(
                    key_node,
                    P105_DUPLICATE_COMPONENT,
                    f"component {key!r} already defined in {self.component_origin[key]}",
                )
                continue
            parsed = _component(ctx, key, value_node)
            if parsed is None:
                continue
            comp, relations = parsed
            self.components[key] = comp
            self.component_origin[key] = ctx.where(key_node)
            self.relations.extend(relations)


def _compose_documents(ctx: _Ctx, text: str):
    try:
        return [node for node in yaml.compose_all(text) if node is not None]
    except yaml.YAMLError as exc:
        _yaml_error(ctx, exc)
        return None
    except RecursionError:
        ctx.error(None, P100_SYNTAX, "input nests too deeply")
        return None


def parse(
    sources: SourceSet,
    *,
    extra_catalogs=(),
    include_builtin: bool = True,
) -> ParseResult:
    """Assemble a deployment model from one or more sources.

    Documents merge in source order; duplicate component or type names
    across documents are errors. The builtin type catalog (plus any extra
    catalogs) is preloaded into the model's type collections so the result
    is self-contained.
    """
    assembler = _Assembler()
    for source_name, text in sources.entries:
        ctx = _Ctx(source_name, assembler.diagnostics)
        if not _scan_forbidden(ctx, text):
            continue
        documents = _compose_documents(ctx, text)
        if documents is None:
            continue
        if not documents:
            ctx.error(None, P102_VERSION, "source contains no document")
            continue
        for node in documents:
            assembler.add_document(ctx, node, _TOP_LEVEL_KEYS)
    if assembler.name is None:
        loc = yaml.Mark("", 0, 0, 0, None, None)
        _Ctx(sources.entries[0][0], assembler.diagnostics).error(
            loc, P108_MODEL_NAME, "model name is missing"
        )

    catalogs = []
    if include_builtin:
        from .catalog import builtin_catalog

        catalogs.append(builtin_catalog())
    catalogs.extend(extra_catalogs)

    component_types: dict[str, ComponentType] = {}
    relation_types: dict[str, RelationType] = {}
    for cat in catalogs:
        for name, ct in cat.component_types.items():
            component_types[name] = ct
        for name, rt in cat.relation_types.items():
            relation_types[name] = rt
    for name, ct in assembler.component_types.items():
        if name in component_types:
            assembler.diagnostics.append(
                ParseDiagnostic(
                    "error",
                    assembler.type_origin.get(name, sources.entries[0][0]),
                    1,
                    1,
                    f"component type {name!r} redefines a catalog type",
                    P106_DUPLICATE_TYPE,
                )
            )
            continue
        component_types[name] = ct
    for name, rt in assembler.relation_types.items():
        if name in relation_types:
            assembler.diagnostics.append(
                ParseDiagnostic(
                    "error",
                    assembler.type_origin.get(name, sources.entries[0][0]),
                    1,
                    1,
                    f"relation type {name!r} redefines a catalog type",
                    P106_DUPLICATE_TYPE,
                )
            )
            continue
        relation_types[name] = rt

    if any(d.severity == "error" for d in assembler.diagnostics):
        return ParseResult(None, assembler.diagnostics)

    model = DeploymentModel(
        name=assembler.name,
        components=assembler.components,
        relations=assembler.relations,
        component_types=component_types,
        relation_types=relation_types,
        model_properties=assembler.properties,
    )
    return ParseResult(model, assembler.diagnostics)


def parse_text(text: str, name: str = "<input>", **kwargs) -> ParseResult:
    return parse(SourceSet.of_text(text, name), **kwargs)


def parse_catalog_sections(text: str, source_name: str, origin: str):
    """Parse a catalog file: type sections only, no components.

    Returns (component_types, relation_types, diagnostics)."""
    assembler = _Assembler()
    ctx = _Ctx(source_name, assembler.diagnostics)
    if _scan_forbidden(ctx, text):
        documents = _compose_documents(ctx, text)
        if documents is not None:
            if not documents:
                ctx.error(None, P102_VERSION, "source contains no document")
            for node in documents:
                assembler.add_document(ctx, node, _CATALOG_KEYS)
    for ct in assembler.component_types.values():
        ct.origin = origin
    for rt in assembler.relation_types.values():
        rt.origin = origin
    return assembler.component_types, assembler.relation_types, assembler.diagnostics


# ---------------------------------------------------------------------------
# Canonical serialization


def _value_data(value: PropertyValue):
    if value.is_reference:
        return value.reference.render()
    return value.literal


def _declaration_data(decl: PropertyDeclaration) -> dict:
    data: dict = {}
    if decl.default is not None:
        data["default"] = decl.default
    data["kind"] = decl.kind.value
    if decl.required:
        data["required"] = True
    return data


def _operation_data(op: Operation, op_name: str):
    art = op.artifact
    if art.kind is ArtifactKind.SCRIPT and art.name == op_name:
        return art.path
    return {"kind": art.kind.value, "name": art.name, "path": art.path}


def _operations_data(operations: dict[str, Operation]) -> dict:
    return {name: _operation_data(operations[name], name) for name in sorted(operations)}


def _artifact_data(artifact: Artifact) -> dict:
    return {"kind": artifact.kind.value, "name": artifact.name, "path": artifact.path}


def _component_type_data(ct: ComponentType) -> dict:
    data: dict = {}
    if ct.extends:
        data["extends"] = ct.extends
    if ct.metadata:
        data["metadata"] = {key: ct.metadata[key] for key in sorted(ct.metadata)}
    if ct.operations:
        data["operations"] = _operations_data(ct.operations)
    if ct.property_schema:
        data["properties"] = {
            name: _declaration_data(ct.property_schema[name])
            for name in sorted(ct.property_schema)
        }
    return data


def _relation_type_data(rt: RelationType) -> dict:
    data: dict = {}
    if rt.extends:
        data["extends"] = rt.extends
    if rt.property_schema:
        data["properties"] = {
            name: _declaration_data(rt.property_schema[name])
            for name in sorted(rt.property_schema)
        }
    return data


def _relation_data(rel: Relation):
    default_name = f"{rel.type}_{rel.target}"
    shorthand_safe = rel.type not in _RELATION_KEYS
    if (
        shorthand_safe
        and rel.name == default_name
        and not rel.properties
        and not rel.operations
    ):
        return {rel.type: rel.target}
    data: dict = {}
    if rel.name != default_name:
        data["name"] = rel.name
    if rel.operations:
        data["operations"] = _operations_data(rel.operations)
    if rel.properties:
        data["properties"] = {
            name: _value_data(rel.properties[name]) for name in sorted(rel.properties)
        }
    data["target"] = rel.target
    data["type"] = rel.type
    return data


def _component_data(model: DeploymentModel, comp: Component) -> dict:
    data: dict = {}
    if comp.artifacts:
        data["artifacts"] = [_artifact_data(a) for a in comp.artifacts]
    if comp.operations:
        data["operations"] = _operations_data(comp.operations)
    if comp.properties:
        data["properties"] = {
            name: _value_data(comp.properties[name]) for name in sorted(comp.properties)
        }
    relations = model.relations_from(comp.name)
    if relations:
        data["relations"] = [_relation_data(r) for r in relations]
    data["type"] = comp.type
    return data


def serialize(model: DeploymentModel) -> str:
    """Canonical text form: mapping keys sorted, components and their
    relations in insertion order, intrinsic references kept verbatim.
    parse(serialize(m)) is structurally equal to m."""
    doc: dict = {"edmm_version": EDMM_VERSION, "name": model.name}
    local_ct = model.local_component_types()
    if local_ct:
        doc["component_types"] = {
            name: _component_type_data(local_ct[name]) for name in sorted(local_ct)
        }
    local_rt = model.local_relation_types()
    if local_rt:
        doc["relation_types"] = {
            name: _relation_type_data(local_rt[name]) for name in sorted(local_rt)
        }
    if model.model_properties:
        doc["properties"] = {
            name: _value_data(model.model_properties[name])
            for name in sorted(model.model_properties)
        }
    if model.components:
        doc["components"] = {
            name: _component_data(model, comp) for name, comp in model.components.items()
        }
    ordered = {key: doc[key] for key in sorted(doc)}
    return yaml.safe_dump(
        ordered, sort_keys=False, allow_unicode=True, default_flow_style=False, width=100
    )


# ---------------------------------------------------------------------------
# Intrinsic reference resolution


def resolve_intrinsics(model: DeploymentModel) -> DeploymentModel:
    """A copy of the model with every intrinsic reference replaced by the
    literal it resolves to. Raises UnresolvedReferenceError or
    ReferenceCycleError when substitution is impossible."""
    resolver = _Resolver(model)
    resolved = copy.deepcopy(model)
    for name, value in model.model_properties.items():
        literal = resolver.resolve(value, f"model property {name!r}")
        resolved.model_properties[name] = PropertyValue.of(literal)
    for comp_name, comp in model.components.items():
        for prop, value in comp.properties.items():
            literal = resolver.resolve(value, f"component {comp_name!r}")
            resolved.components[comp_name].properties[prop] = PropertyValue.of(literal)
    for index, rel in enumerate(model.relations):
        for prop, value in rel.properties.items():
            literal = resolver.resolve(value, f"relation {rel.name!r} of {rel.source!r}")
            resolved.relations[index].properties[prop] = PropertyValue.of(literal)
    return resolved
