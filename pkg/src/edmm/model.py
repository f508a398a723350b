"""In-memory representation of a declarative deployment model.

A deployment model is a named, directed, typed graph: components are the
nodes, relations the edges, and both draw their semantics from reusable
type entities with single-inheritance extends chains. Properties carry the
desired configuration, operations the executable management procedures,
and artifacts the files implementing components and operations.

Construction is single-threaded; once a model has passed validation it is
treated as immutable and all queries here are pure reads.
"""

from __future__ import annotations

import heapq
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Union

from .errors import (
    CyclicTypeError,
    DependencyCycleError,
    HostingCycleError,
    KindMismatchError,
    MultipleHostsError,
    ReferenceCycleError,
    UnknownTypeError,
    UnresolvedReferenceError,
)

LiteralValue = Union[str, int, bool, list]

# Relation type roots with ordering semantics: a relation's source depends
# on its target. Anything extending one of these participates in
# deployment ordering; hosting additionally defines stacks.
DEPENDS_ON = "depends_on"
HOSTED_ON = "hosted_on"
CONNECTS_TO = "connects_to"
RELATION_ROOTS = (DEPENDS_ON, HOSTED_ON, CONNECTS_TO)

# Forward lifecycle phases in emission order. Termination phases exist in
# models but are never emitted by transformers.
LIFECYCLE_ORDER = ("create", "install", "configure", "start")

_IDENTIFIER_RE = re.compile(r"^[a-z_][a-z0-9_]*$")


def is_identifier(text: str) -> bool:
    """Strict lower_snake_case identifier (type, property, operation names)."""
    return bool(_IDENTIFIER_RE.match(text))


def is_element_name(text: str) -> bool:
    """Element names (model, components) are free-form but printable,
    non-empty and without surrounding whitespace or line breaks."""
    return bool(text) and text == text.strip() and "\n" not in text and "\t" not in text


class Kind(str, Enum):
    """The four property kinds the modeling language supports."""

    STRING = "string"
    INTEGER = "integer"
    BOOLEAN = "boolean"
    LIST = "list"  # list of strings

    @classmethod
    def of_literal(cls, value: LiteralValue) -> "Kind":
        if isinstance(value, bool):
            return cls.BOOLEAN
        if isinstance(value, int):
            return cls.INTEGER
        if isinstance(value, str):
            return cls.STRING
        if isinstance(value, list):
            return cls.LIST
        raise TypeError(f"unsupported literal type: {type(value).__name__}")


def check_literal(value: LiteralValue) -> None:
    """Reject values outside the supported literal kinds."""
    if isinstance(value, list):
        for item in value:
            if not isinstance(item, str):
                raise TypeError("list properties may only contain strings")
        return
    if not isinstance(value, (str, int, bool)):
        raise TypeError(f"unsupported literal type: {type(value).__name__}")


@dataclass(frozen=True)
class PropertyReference:
    """Reference to a model property (component None) or to another
    component's effective property."""

    component: str | None
    name: str

    def render(self) -> str:
        if self.component is None:
            return "${" + self.name + "}"
        return "${" + self.component + "." + self.name + "}"


@dataclass
class PropertyValue:
    """Either a literal or an intrinsic reference, never both."""

    literal: LiteralValue | None = None
    reference: PropertyReference | None = None

    def __post_init__(self):
        if (self.literal is None) == (self.reference is None):
            raise ValueError("PropertyValue needs exactly one of literal/reference")
        if self.literal is not None:
            check_literal(self.literal)

    @property
    def is_reference(self) -> bool:
        return self.reference is not None

    @staticmethod
    def of(value: LiteralValue) -> "PropertyValue":
        return PropertyValue(literal=value)

    @staticmethod
    def ref(name: str, component: str | None = None) -> "PropertyValue":
        return PropertyValue(reference=PropertyReference(component, name))


@dataclass
class PropertyDeclaration:
    """Schema entry on a type: expected kind, required flag, optional default."""

    kind: Kind
    required: bool = False
    default: LiteralValue | None = None

    def __post_init__(self):
        if self.default is not None:
            check_literal(self.default)


class ArtifactKind(str, Enum):
    SCRIPT = "script"
    ARCHIVE = "archive"
    CONTAINER_IMAGE = "container-image"
    BINARY = "binary"
    OTHER = "other"


@dataclass
class Artifact:
    """A file reference implementing a component or an operation.

    The path is never dereferenced here; only specific transformers read
    artifact contents, and only when emission requires embedding."""

    name: str
    path: str
    kind: ArtifactKind = ArtifactKind.OTHER

    def __post_init__(self):
        if not self.path:
            raise ValueError("artifact path must be non-empty")
        if not self.name:
            raise ValueError("artifact name must be non-empty")


@dataclass
class Operation:
    """An executable management procedure, implemented by one artifact."""

    name: str
    artifact: Artifact


@dataclass
class Component:
    name: str
    type: str
    properties: dict[str, PropertyValue] = field(default_factory=dict)
    operations: dict[str, Operation] = field(default_factory=dict)
    artifacts: list[Artifact] = field(default_factory=list)


@dataclass
class ComponentType:
    """Reusable entity giving components their semantics.

    origin is "builtin" for the shipped catalog, "user" for catalogs passed
    in by the caller and "model" for definitions local to one model; only
    model-origin types are written back out by the serializer.
    """

    name: str
    extends: str | None = None
    property_schema: dict[str, PropertyDeclaration] = field(default_factory=dict)
    operations: dict[str, Operation] = field(default_factory=dict)
    metadata: dict[str, object] = field(default_factory=dict)
    origin: str = "model"


@dataclass
class Relation:
    """Directed dependency between exactly two distinct components."""

    name: str
    type: str
    source: str
    target: str
    properties: dict[str, PropertyValue] = field(default_factory=dict)
    operations: dict[str, Operation] = field(default_factory=dict)


@dataclass
class RelationType:
    name: str
    extends: str | None = None
    property_schema: dict[str, PropertyDeclaration] = field(default_factory=dict)
    origin: str = "model"


def _relation_sort_key(rel: Relation):
    return (rel.source, rel.name, rel.type, rel.target)


@dataclass(eq=False)
class DeploymentModel:
    """Root aggregate: the desired target state of one application.

    components and the type collections are keyed by their unique names and
    keep insertion order; relations keep declaration order. Equality is
    structural and ignores relation ordering (relations compare as a
    canonically sorted sequence).
    """

    name: str
    components: dict[str, Component] = field(default_factory=dict)
    relations: list[Relation] = field(default_factory=list)
    component_types: dict[str, ComponentType] = field(default_factory=dict)
    relation_types: dict[str, RelationType] = field(default_factory=dict)
    model_properties: dict[str, PropertyValue] = field(default_factory=dict)

    def __eq__(self, other):
        if not isinstance(other, DeploymentModel):
            return NotImplemented
        return (
            self.name == other.name
            and self.components == other.components
            and sorted(self.relations, key=_relation_sort_key)
            == sorted(other.relations, key=_relation_sort_key)
            and self.component_types == other.component_types
            and self.relation_types == other.relation_types
            and self.model_properties == other.model_properties
        )

    def local_component_types(self) -> dict[str, ComponentType]:
        return {n: t for n, t in self.component_types.items() if t.origin == "model"}

    def local_relation_types(self) -> dict[str, RelationType]:
        return {n: t for n, t in self.relation_types.items() if t.origin == "model"}

    def relations_from(self, component_name: str) -> list[Relation]:
        return [r for r in self.relations if r.source == component_name]


# ---------------------------------------------------------------------------
# Type chain resolution


def _resolve_chain(types: Mapping[str, object], type_name: str, label: str) -> list:
    if type_name not in types:
        raise UnknownTypeError(f"unknown {label} type: {type_name!r}")
    chain = []
    seen = set()
    current: str | None = type_name
    while current is not None:
        if current in seen:
            raise CyclicTypeError(
                f"{label} type {type_name!r} has a cyclic extends chain at {current!r}"
            )
        entry = types.get(current)
        if entry is None:
            raise UnknownTypeError(
                f"{label} type {chain[-1].name!r} extends unknown type {current!r}"
            )
        seen.add(current)
        chain.append(entry)
        current = entry.extends
    return chain


def resolve_component_type(model: DeploymentModel, type_name: str) -> list[ComponentType]:
    """Walk the extends chain, most-derived first, ending at the root."""
    return _resolve_chain(model.component_types, type_name, "component")


def resolve_relation_type(model: DeploymentModel, type_name: str) -> list[RelationType]:
    return _resolve_chain(model.relation_types, type_name, "relation")


def type_is(model: DeploymentModel, type_name: str, ancestor: str) -> bool:
    """True when ancestor appears anywhere on type_name's chain."""
    return any(t.name == ancestor for t in resolve_component_type(model, type_name))


def declared_properties(chain: Iterable) -> dict[str, PropertyDeclaration]:
    """Flatten a type chain's property schemas; the most-derived declaration
    of a name wins."""
    merged: dict[str, PropertyDeclaration] = {}
    for entry in chain:
        for prop, decl in entry.property_schema.items():
            merged.setdefault(prop, decl)
    return merged


def effective_metadata(chain: Iterable[ComponentType]) -> dict[str, object]:
    """Merge metadata over a chain, nearest definition winning per key.
    The tags key accumulates instead (union, chain order)."""
    merged: dict[str, object] = {}
    tags: list[str] = []
    for entry in chain:
        for key, value in entry.metadata.items():
            if key == "tags":
                for tag in value:
                    if tag not in tags:
                        tags.append(tag)
            else:
                merged.setdefault(key, value)
    if tags:
        merged["tags"] = tags
    return merged


def relation_family(model: DeploymentModel, relation: Relation) -> str | None:
    """Nearest builtin ancestor (hosted_on, connects_to or depends_on) of the
    relation's type; None when the type roots outside the builtin tree or
    does not resolve at all."""
    try:
        chain = resolve_relation_type(model, relation.type)
    except (UnknownTypeError, CyclicTypeError):
        return None
    for entry in chain:
        if entry.name in RELATION_ROOTS:
            return entry.name
    return None


# ---------------------------------------------------------------------------
# Property resolution


class _Resolver:
    """Substitutes intrinsic references, detecting cycles along the way."""

    def __init__(self, model: DeploymentModel):
        self.model = model
        self._stack: list[str] = []

    def resolve(self, value: PropertyValue, context: str) -> LiteralValue:
        if value.literal is not None:
            return value.literal
        ref = value.reference
        assert ref is not None
        key = f"{ref.component or ''}.{ref.name}"
        if key in self._stack:
            cycle = tuple(self._stack[self._stack.index(key):] + [key])
            raise ReferenceCycleError(
                f"property reference cycle: {' -> '.join(cycle)}", cycle=cycle
            )
        self._stack.append(key)
        try:
            if ref.component is None:
                return self._model_property(ref, context)
            return self._component_property(ref, context)
        finally:
            self._stack.pop()

    def _model_property(self, ref: PropertyReference, context: str) -> LiteralValue:
        value = self.model.model_properties.get(ref.name)
        if value is None:
            raise UnresolvedReferenceError(
                f"{context}: reference {ref.render()} names no model property",
                reference=ref.render(),
            )
        return self.resolve(value, f"model property {ref.name!r}")

    def _component_property(self, ref: PropertyReference, context: str) -> LiteralValue:
        component = self.model.components.get(ref.component)
        if component is None:
            raise UnresolvedReferenceError(
                f"{context}: reference {ref.render()} names no component",
                reference=ref.render(),
            )
        override = component.properties.get(ref.name)
        if override is not None:
            return self.resolve(override, f"component {component.name!r}")
        # Fall back to the nearest default on the component's type chain.
        chain = resolve_component_type(self.model, component.type)
        for entry in chain:
            decl = entry.property_schema.get(ref.name)
            if decl is not None and decl.default is not None:
                return decl.default
        raise UnresolvedReferenceError(
            f"{context}: reference {ref.render()} resolves to no value",
            reference=ref.render(),
        )


def _effective(
    model: DeploymentModel,
    owner_label: str,
    overrides: dict[str, PropertyValue],
    chain: Iterable,
) -> dict[str, LiteralValue]:
    decls = declared_properties(chain)
    resolver = _Resolver(model)
    result: dict[str, LiteralValue] = {}
    for prop, decl in decls.items():
        if prop in overrides:
            value = resolver.resolve(overrides[prop], owner_label)
        else:
            value = None
            for entry in chain:
                d = entry.property_schema.get(prop)
                if d is not None and d.default is not None:
                    value = d.default
                    break
            if value is None:
                continue
        if Kind.of_literal(value) is not decl.kind:
            raise KindMismatchError(
                f"{owner_label}: property {prop!r} has kind "
                f"{Kind.of_literal(value).value}, declared {decl.kind.value}"
            )
        result[prop] = value
    # Ad-hoc overrides (undeclared on the chain) still carry desired state;
    # the validator reports them as warnings but they flow through.
    for prop, override in overrides.items():
        if prop not in decls:
            result[prop] = resolver.resolve(override, owner_label)
    return result


def effective_properties(
    model: DeploymentModel, component: Component
) -> dict[str, LiteralValue]:
    """Resolved property map of a component: overrides win over the nearest
    ancestor default; intrinsic references are substituted with literals."""
    chain = resolve_component_type(model, component.type)
    return _effective(model, f"component {component.name!r}", component.properties, chain)


def effective_relation_properties(
    model: DeploymentModel, relation: Relation
) -> dict[str, LiteralValue]:
    chain = resolve_relation_type(model, relation.type)
    label = f"relation {relation.name!r} of {relation.source!r}"
    return _effective(model, label, relation.properties, chain)


def effective_operations(model: DeploymentModel, component: Component) -> dict[str, Operation]:
    """Type-level default operations overlaid with the component's own."""
    chain = resolve_component_type(model, component.type)
    merged: dict[str, Operation] = {}
    for entry in reversed(chain):
        merged.update(entry.operations)
    merged.update(component.operations)
    return merged


# ---------------------------------------------------------------------------
# Topology queries


def outgoing_host_relations(model: DeploymentModel, component_name: str) -> list[Relation]:
    return [
        r
        for r in model.relations
        if r.source == component_name and relation_family(model, r) == HOSTED_ON
    ]


def hosting_stack(model: DeploymentModel, component: Component) -> list[Component]:
    """The component followed by its transitive hosts, ending at the hosting
    leaf (a component with no outgoing host edge)."""
    stack = [component]
    path = [component.name]
    current = component
    while True:
        hosts = outgoing_host_relations(model, current.name)
        if not hosts:
            return stack
        if len(hosts) > 1:
            raise MultipleHostsError(
                f"component {current.name!r} declares {len(hosts)} host relations"
            )
        target_name = hosts[0].target
        if target_name in path:
            cycle = tuple(path[path.index(target_name):] + [target_name])
            raise HostingCycleError(
                f"hosting cycle through {target_name!r}", cycle=cycle
            )
        target = model.components.get(target_name)
        if target is None:
            raise UnknownTypeError(
                f"relation {hosts[0].name!r} targets unknown component {target_name!r}"
            )
        stack.append(target)
        path.append(target_name)
        current = target


def hosting_leaf(model: DeploymentModel, component: Component) -> Component:
    return hosting_stack(model, component)[-1]


def dependency_edges(model: DeploymentModel) -> list[tuple[str, str]]:
    """(source, target) pairs over relations rooted in the builtin relation
    tree; the source depends on the target."""
    edges = []
    for rel in model.relations:
        if relation_family(model, rel) is not None:
            if rel.source in model.components and rel.target in model.components:
                edges.append((rel.source, rel.target))
    return edges


def deployment_order(model: DeploymentModel) -> list[str]:
    """Deterministic topological order of component names: every relation
    target precedes its source, ties broken lexicographically."""
    edges = dependency_edges(model)
    dependents: dict[str, list[str]] = {name: [] for name in model.components}
    pending: dict[str, int] = {name: 0 for name in model.components}
    for source, target in edges:
        dependents[target].append(source)
        pending[source] += 1
    ready = [name for name, count in pending.items() if count == 0]
    heapq.heapify(ready)
    order: list[str] = []
    while ready:
        name = heapq.heappop(ready)
        order.append(name)
        for dependent in dependents[name]:
            pending[dependent] -= 1
            if pending[dependent] == 0:
                heapq.heappush(ready, dependent)
    if len(order) != len(model.components):
        remaining = sorted(set(model.components) - set(order))
        cycle = _find_cycle(remaining, edges)
        raise DependencyCycleError(
            "dependency cycle: " + " -> ".join(cycle), cycle=tuple(cycle)
        )
    return order


def _find_cycle(nodes: list[str], edges: list[tuple[str, str]]) -> list[str]:
    targets: dict[str, list[str]] = {}
    node_set = set(nodes)
    for source, target in edges:
        if source in node_set and target in node_set:
            targets.setdefault(source, []).append(target)
    start = nodes[0]
    path = [start]
    seen = {start}
    current = start
    while True:
        nxt = sorted(targets.get(current, ()))[0]
        if nxt in seen:
            return path[path.index(nxt):] + [nxt]
        path.append(nxt)
        seen.add(nxt)
        current = nxt
