"""Shared machinery for transformer plugins.

A plugin compiles a validated, compatible model into a FileSet: an ordered
list of native files plus a manifest describing every emitted and absorbed
element. Emission must be deterministic; given the same model the bytes
are identical across runs and machines.

Each plugin module pairs its emitter with an independent structural
rechecker that parses the emitted bytes under the target's own document
grammar and verifies component and dependency-edge preservation. The
rechecker never inspects emitter internals, only bytes and the model.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path, PurePosixPath

import yaml

from .. import model as m
from ..validation import ValidatedModel

# Element kinds a plugin can declare it consumes.
ELEMENT_KINDS = frozenset({"components", "relations", "properties", "operations", "artifacts"})


@dataclass(frozen=True)
class GeneratedFile:
    path: str  # relative, posix separators
    content: bytes

    def __post_init__(self):
        p = PurePosixPath(self.path)
        if p.is_absolute() or ".." in p.parts or not p.parts:
            raise ValueError(f"unsafe generated file path: {self.path!r}")

    @property
    def text(self) -> str:
        return self.content.decode("utf-8")


@dataclass(frozen=True)
class EmittedUnit:
    component: str
    unit: str  # native unit id, e.g. "service:order-app"


@dataclass(frozen=True)
class AbsorbedUnit:
    component: str
    into: tuple[str, ...]  # native units that subsume the component


@dataclass(frozen=True)
class EdgeRecord:
    source: str
    target: str
    relation: str  # relation name
    family: str  # mapped builtin family
    construct: str  # native construct carrying the edge, or "internal"


@dataclass(frozen=True)
class RelationFallback:
    relation: str  # "<source>/<name>"
    declared_type: str
    mapped_type: str


@dataclass
class Manifest:
    """Summary of one transformation: files by kind plus the fate of every
    model element."""

    technology: str
    model: str
    files: list[tuple[str, str]] = field(default_factory=list)  # (path, kind)
    emitted: list[EmittedUnit] = field(default_factory=list)
    absorbed: list[AbsorbedUnit] = field(default_factory=list)
    edges: list[EdgeRecord] = field(default_factory=list)
    relation_fallbacks: list[RelationFallback] = field(default_factory=list)
    ignored_operations: list[str] = field(default_factory=list)  # "<component>:<op>"

    def counts(self) -> dict[str, int]:
        result: dict[str, int] = {}
        for _, kind in self.files:
            result[kind] = result.get(kind, 0) + 1
        return result

    def to_data(self) -> dict:
        return {
            "technology": self.technology,
            "model": self.model,
            "files": [{"path": p, "kind": k} for p, k in sorted(self.files)],
            "counts": dict(sorted(self.counts().items())),
            "units": {
                "emitted": [
                    {"component": u.component, "unit": u.unit}
                    for u in sorted(self.emitted, key=lambda u: u.component)
                ],
                "absorbed": [
                    {"component": u.component, "into": list(u.into)}
                    for u in sorted(self.absorbed, key=lambda u: u.component)
                ],
            },
            "edges": [
                {
                    "source": e.source,
                    "target": e.target,
                    "relation": e.relation,
                    "family": e.family,
                    "construct": e.construct,
                }
                for e in sorted(self.edges, key=lambda e: (e.source, e.relation, e.target))
            ],
            "relation_fallbacks": [
                {
                    "relation": f.relation,
                    "declared_type": f.declared_type,
                    "mapped_type": f.mapped_type,
                }
                for f in sorted(self.relation_fallbacks, key=lambda f: f.relation)
            ],
            "ignored_operations": sorted(self.ignored_operations),
        }

    def to_text(self) -> str:
        return yaml.safe_dump(self.to_data(), sort_keys=False, default_flow_style=False)


MANIFEST_PATH = "manifest"


@dataclass(frozen=True)
class FileSet:
    """Ordered, deterministic output of one transformation. The manifest is
    included both structured and rendered (as the file named `manifest`)."""

    files: tuple[GeneratedFile, ...]
    manifest: Manifest

    def paths(self) -> list[str]:
        return [f.path for f in self.files]

    def get(self, path: str) -> GeneratedFile:
        for f in self.files:
            if f.path == path:
                return f
        raise KeyError(path)


def build_fileset(manifest: Manifest, files: list[GeneratedFile]) -> FileSet:
    manifest_file = GeneratedFile(MANIFEST_PATH, manifest.to_text().encode("utf-8"))
    ordered = (manifest_file,) + tuple(sorted(files, key=lambda f: f.path))
    return FileSet(files=ordered, manifest=manifest)


@dataclass(frozen=True)
class TransformContext:
    """Per-invocation inputs a plugin may need beyond the model; artifact
    paths resolve against artifact_root when a plugin embeds content."""

    artifact_root: Path | None = None


class TransformerPlugin:
    """Base contract for emitters; subclasses set the class attributes and
    implement emit()/recheck()."""

    technology: str = ""
    consumes: frozenset[str] = frozenset()

    def emit(self, validated: ValidatedModel, ctx: TransformContext) -> FileSet:
        raise NotImplementedError

    def recheck(self, validated: ValidatedModel, fileset: FileSet) -> list[str]:
        """Structural soundness findings (empty list when sound)."""
        raise NotImplementedError


# ---------------------------------------------------------------------------
# Naming helpers


def dns_slug(name: str) -> str:
    """Lowercase DNS-safe name (services, hosts)."""
    slug = re.sub(r"[^a-z0-9]+", "-", name.lower()).strip("-")
    return slug or "x"


def snake_slug(name: str) -> str:
    """Lowercase underscore name (resources, vars)."""
    slug = re.sub(r"[^a-z0-9_]+", "_", name.lower()).strip("_")
    return slug or "x"


def camel_id(name: str) -> str:
    """Alphanumeric CamelCase id (logical resource ids)."""
    parts = re.split(r"[^A-Za-z0-9]+", name)
    out = "".join(p[:1].upper() + p[1:] for p in parts if p)
    return out or "X"


def env_name(name: str) -> str:
    return re.sub(r"[^A-Z0-9_]+", "_", name.upper()).strip("_") or "X"


def assign_slugs(names, slugger, sep: str = "-") -> dict[str, str]:
    """Deterministic unique slugs in input order; collisions get numeric
    suffixes."""
    taken: set[str] = set()
    result: dict[str, str] = {}
    for name in names:
        base = slugger(name)
        slug = base
        counter = 2
        while slug in taken:
            slug = f"{base}{sep}{counter}"
            counter += 1
        taken.add(slug)
        result[name] = slug
    return result


def stringify(value: m.LiteralValue) -> str:
    """Literal rendering for string-typed targets (env vars, triggers)."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, list):
        return ",".join(value)
    return str(value)


# ---------------------------------------------------------------------------
# Topology view


@dataclass(frozen=True)
class MappedEdge:
    relation: m.Relation
    family: str  # mapped builtin family (fallback applied)


@dataclass
class StackView:
    """Hosting structure of a model, as plugins consume it."""

    model: m.DeploymentModel
    tops: list[m.Component]  # no other component hosted on them
    stacks: dict[str, list[m.Component]]  # top name -> stack, top first
    tops_of: dict[str, list[str]]  # component -> tops whose stacks hold it
    trees: dict[str, list[str]]  # hosting leaf -> members, deployment order
    edges: list[MappedEdge]  # every relation with its mapped family
    fallbacks: list[RelationFallback]
    order: list[str]  # deterministic deployment order

    def service_edges(self) -> list[tuple[str, str, m.Relation]]:
        """Dependency edges lifted to stack tops, self-pairs excluded."""
        lifted = []
        seen = set()
        for edge in self.edges:
            for source_top in self.tops_of[edge.relation.source]:
                for target_top in self.tops_of[edge.relation.target]:
                    if source_top == target_top:
                        continue
                    key = (source_top, target_top, edge.relation.name)
                    if key in seen:
                        continue
                    seen.add(key)
                    lifted.append((source_top, target_top, edge.relation))
        return lifted


def stack_view(model: m.DeploymentModel) -> StackView:
    hosted = set()
    for rel in model.relations:
        if m.relation_family(model, rel) == m.HOSTED_ON:
            hosted.add(rel.target)
    tops = [comp for name, comp in model.components.items() if name not in hosted]
    stacks = {top.name: m.hosting_stack(model, top) for top in tops}
    tops_of: dict[str, list[str]] = {name: [] for name in model.components}
    for top in tops:
        for comp in stacks[top.name]:
            tops_of[comp.name].append(top.name)
    order = m.deployment_order(model)
    position = {name: i for i, name in enumerate(order)}
    trees: dict[str, list[str]] = {}
    for name, comp in model.components.items():
        leaf = m.hosting_stack(model, comp)[-1].name
        trees.setdefault(leaf, []).append(name)
    for members in trees.values():
        members.sort(key=position.__getitem__)
    edges: list[MappedEdge] = []
    fallbacks: list[RelationFallback] = []
    for rel in model.relations:
        family = m.relation_family(model, rel)
        mapped = family or m.DEPENDS_ON
        if rel.type not in m.RELATION_ROOTS:
            fallbacks.append(
                RelationFallback(
                    relation=f"{rel.source}/{rel.name}",
                    declared_type=rel.type,
                    mapped_type=mapped,
                )
            )
        edges.append(MappedEdge(relation=rel, family=mapped))
    return StackView(
        model=model,
        tops=tops,
        stacks=stacks,
        tops_of=tops_of,
        trees=trees,
        edges=edges,
        fallbacks=fallbacks,
        order=order,
    )


def lifecycle_operations(model: m.DeploymentModel, comp: m.Component) -> list[m.Operation]:
    """Forward lifecycle operations in emission order; termination and
    custom phases never emit."""
    ops = m.effective_operations(model, comp)
    return [ops[name] for name in m.LIFECYCLE_ORDER if name in ops]


def skipped_operations(model: m.DeploymentModel, comp: m.Component) -> list[str]:
    ops = m.effective_operations(model, comp)
    return [f"{comp.name}:{name}" for name in sorted(ops) if name not in m.LIFECYCLE_ORDER]


def address_of(model: m.DeploymentModel, comp: m.Component) -> str | None:
    """The property a network connection would dial, when the component
    declares one."""
    effective = m.effective_properties(model, comp)
    for key in ("address", "host", "hostname", "endpoint", "url"):
        value = effective.get(key)
        if isinstance(value, str) and value:
            return value
    return None


def component_env(
    model: m.DeploymentModel, stack: list[m.Component]
) -> dict[str, str]:
    """Environment map for a collapsed stack: the top's properties keep
    their names, absorbed components' properties get a component prefix."""
    env: dict[str, str] = {}
    top = stack[0]
    for prop, value in m.effective_properties(model, top).items():
        env[env_name(prop)] = stringify(value)
    for comp in stack[1:]:
        for prop, value in m.effective_properties(model, comp).items():
            env[f"{env_name(comp.name)}_{env_name(prop)}"] = stringify(value)
    return env


def yaml_bytes(data) -> bytes:
    return yaml.safe_dump(data, sort_keys=True, default_flow_style=False, width=100).encode(
        "utf-8"
    )


def load_yaml(content: bytes):
    return yaml.safe_load(content.decode("utf-8"))
