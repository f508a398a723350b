"""Whole-model semantic validation.

validate() is a pure function: findings come back as an ordered, stable
list of diagnostics, never as exceptions. assert_valid() turns a clean
run into a ValidatedModel token; compatibility checks and transformers
accept only certified models.

Diagnostic codes (closed set):

  E001_UNKNOWN_TYPE              component/relation type or parent missing
  E002_DANGLING_RELATION         relation endpoint names no component
  E003_HOSTING_CYCLE             host edges loop
  E004_MULTIPLE_HOSTS            more than one outgoing host edge
  E005_KIND_MISMATCH             value kind differs from declaration
  E006_MISSING_REQUIRED_PROPERTY required property has no value
  E007_SELF_LOOP                 relation source equals target
  E008_DEPENDENCY_CYCLE          dependency graph not acyclic
  E009_UNRESOLVED_REFERENCE      intrinsic reference resolves nowhere
  E010_REFERENCE_CYCLE           intrinsic references form a cycle
  E011_CYCLIC_TYPE_CHAIN         extends chain loops
  W001_ADHOC_PROPERTY            property set but undeclared on the chain
  W002_UNREACHABLE_COMPONENT     component participates in no relation
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from . import model as m
from .errors import (
    CyclicTypeError,
    DependencyCycleError,
    HostingCycleError,
    KindMismatchError,
    MultipleHostsError,
    ReferenceCycleError,
    UnknownTypeError,
    UnresolvedReferenceError,
    ValidationFailed,
)

E001_UNKNOWN_TYPE = "E001_UNKNOWN_TYPE"
E002_DANGLING_RELATION = "E002_DANGLING_RELATION"
E003_HOSTING_CYCLE = "E003_HOSTING_CYCLE"
E004_MULTIPLE_HOSTS = "E004_MULTIPLE_HOSTS"
E005_KIND_MISMATCH = "E005_KIND_MISMATCH"
E006_MISSING_REQUIRED_PROPERTY = "E006_MISSING_REQUIRED_PROPERTY"
E007_SELF_LOOP = "E007_SELF_LOOP"
E008_DEPENDENCY_CYCLE = "E008_DEPENDENCY_CYCLE"
E009_UNRESOLVED_REFERENCE = "E009_UNRESOLVED_REFERENCE"
E010_REFERENCE_CYCLE = "E010_REFERENCE_CYCLE"
E011_CYCLIC_TYPE_CHAIN = "E011_CYCLIC_TYPE_CHAIN"
W001_ADHOC_PROPERTY = "W001_ADHOC_PROPERTY"
W002_UNREACHABLE_COMPONENT = "W002_UNREACHABLE_COMPONENT"

DIAGNOSTIC_CODES = frozenset(
    {
        E001_UNKNOWN_TYPE,
        E002_DANGLING_RELATION,
        E003_HOSTING_CYCLE,
        E004_MULTIPLE_HOSTS,
        E005_KIND_MISMATCH,
        E006_MISSING_REQUIRED_PROPERTY,
        E007_SELF_LOOP,
        E008_DEPENDENCY_CYCLE,
        E009_UNRESOLVED_REFERENCE,
        E010_REFERENCE_CYCLE,
        E011_CYCLIC_TYPE_CHAIN,
        W001_ADHOC_PROPERTY,
        W002_UNREACHABLE_COMPONENT,
    }
)


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # error | warning
    code: str
    subject: str  # component, relation or type name
    message: str

    def sort_key(self):
        return (self.severity, self.code, self.subject, self.message)

    def __str__(self):
        return f"{self.severity}: {self.code}: {self.subject}: {self.message}"


@dataclass(frozen=True)
class ValidatedModel:
    """Certificate that validate() returned zero errors for this model."""

    model: m.DeploymentModel
    warnings: tuple[Diagnostic, ...] = ()


def _augment(model: m.DeploymentModel, catalog) -> m.DeploymentModel:
    """Overlay extra catalog types without mutating the model."""
    if catalog is None:
        return model
    return replace(
        model,
        components=model.components,
        relations=model.relations,
        component_types={**catalog.component_types, **model.component_types},
        relation_types={**catalog.relation_types, **model.relation_types},
        model_properties=model.model_properties,
    )


def validate(model: m.DeploymentModel, catalog=None) -> list[Diagnostic]:
    """All findings for a structurally complete model, sorted by
    (severity, code, subject, message). Empty means the model satisfies
    every structural invariant and is safe for all queries."""
    model = _augment(model, catalog)
    findings: list[Diagnostic] = []

    def err(code, subject, message):
        findings.append(Diagnostic("error", code, subject, message))

    def warn(code, subject, message):
        findings.append(Diagnostic("warning", code, subject, message))

    # Type definitions: parents resolve, chains terminate, defaults match.
    for label, types, resolve in (
        ("component", model.component_types, m.resolve_component_type),
        ("relation", model.relation_types, m.resolve_relation_type),
    ):
        for name, entry in types.items():
            try:
                resolve(model, name)
            except UnknownTypeError:
                err(E001_UNKNOWN_TYPE, name, f"{label} type extends unknown type {entry.extends!r}")
                continue
            except CyclicTypeError:
                err(E011_CYCLIC_TYPE_CHAIN, name, f"{label} type extends chain loops")
                continue
            for prop, decl in entry.property_schema.items():
                if decl.default is not None and m.Kind.of_literal(decl.default) is not decl.kind:
                    err(
                        E005_KIND_MISMATCH,
                        name,
                        f"default for property {prop!r} has kind "
                        f"{m.Kind.of_literal(decl.default).value}, declared {decl.kind.value}",
                    )

    # Components: types resolve.
    typed_components: list[m.Component] = []
    for comp in model.components.values():
        try:
            m.resolve_component_type(model, comp.type)
        except UnknownTypeError:
            err(E001_UNKNOWN_TYPE, comp.name, f"component has unknown type {comp.type!r}")
            continue
        except CyclicTypeError:
            continue  # reported against the type itself
        typed_components.append(comp)

    # Relations: endpoints, arity, types.
    for rel in model.relations:
        subject = f"{rel.source}/{rel.name}"
        if rel.source not in model.components:
            err(E002_DANGLING_RELATION, subject, f"source {rel.source!r} names no component")
        if rel.target not in model.components:
            err(E002_DANGLING_RELATION, subject, f"target {rel.target!r} names no component")
        elif rel.source == rel.target:
            err(E007_SELF_LOOP, subject, "relation connects a component to itself")
        if rel.type not in model.relation_types:
            err(E001_UNKNOWN_TYPE, subject, f"relation has unknown type {rel.type!r}")

    # Hosting: at most one host, chains terminate. Cycles are reported once,
    # against their lexicographically smallest member.
    reported_cycles: set[frozenset] = set()
    for comp in typed_components:
        try:
            m.hosting_stack(model, comp)
        except MultipleHostsError as exc:
            if f"component {comp.name!r}" in str(exc):
                err(E004_MULTIPLE_HOSTS, comp.name, str(exc))
        except HostingCycleError as exc:
            members = frozenset(exc.cycle)
            if members not in reported_cycles:
                reported_cycles.add(members)
                err(E003_HOSTING_CYCLE, min(exc.cycle), str(exc))
        except UnknownTypeError:
            pass  # dangling target, reported above

    # Properties: effective values resolve, kinds match, required present.
    for comp in typed_components:
        chain = m.resolve_component_type(model, comp.type)
        decls = m.declared_properties(chain)
        try:
            effective = m.effective_properties(model, comp)
        except UnresolvedReferenceError as exc:
            err(E009_UNRESOLVED_REFERENCE, comp.name, str(exc))
            continue
        except ReferenceCycleError as exc:
            err(E010_REFERENCE_CYCLE, comp.name, str(exc))
            continue
        except KindMismatchError as exc:
            err(E005_KIND_MISMATCH, comp.name, str(exc))
            continue
        for prop, decl in sorted(decls.items()):
            if decl.required and prop not in effective:
                err(
                    E006_MISSING_REQUIRED_PROPERTY,
                    comp.name,
                    f"required property {prop!r} has no value",
                )
        for prop in sorted(comp.properties):
            if prop not in decls:
                warn(
                    W001_ADHOC_PROPERTY,
                    comp.name,
                    f"property {prop!r} is not declared on the type chain of {comp.type!r}",
                )

    for rel in model.relations:
        if rel.type not in model.relation_types:
            continue
        subject = f"{rel.source}/{rel.name}"
        try:
            chain = m.resolve_relation_type(model, rel.type)
        except (UnknownTypeError, CyclicTypeError):
            continue
        decls = m.declared_properties(chain)
        try:
            effective = m.effective_relation_properties(model, rel)
        except UnresolvedReferenceError as exc:
            err(E009_UNRESOLVED_REFERENCE, subject, str(exc))
            continue
        except ReferenceCycleError as exc:
            err(E010_REFERENCE_CYCLE, subject, str(exc))
            continue
        except KindMismatchError as exc:
            err(E005_KIND_MISMATCH, subject, str(exc))
            continue
        for prop, decl in sorted(decls.items()):
            if decl.required and prop not in effective:
                err(
                    E006_MISSING_REQUIRED_PROPERTY,
                    subject,
                    f"required property {prop!r} has no value",
                )
        for prop in sorted(rel.properties):
            if prop not in decls:
                warn(
                    W001_ADHOC_PROPERTY,
                    subject,
                    f"property {prop!r} is not declared on the type chain of {rel.type!r}",
                )

    # Dependency graph must be acyclic (hosting cycles already reported).
    if not any(f.code in (E002_DANGLING_RELATION, E003_HOSTING_CYCLE) for f in findings):
        try:
            m.deployment_order(model)
        except DependencyCycleError as exc:
            err(E008_DEPENDENCY_CYCLE, min(exc.cycle), str(exc))

    # Isolated components are legal but suspicious.
    participating: set[str] = set()
    for rel in model.relations:
        participating.add(rel.source)
        participating.add(rel.target)
    for name in model.components:
        if name not in participating:
            warn(W002_UNREACHABLE_COMPONENT, name, "component participates in no relation")

    return sorted(findings, key=Diagnostic.sort_key)


def assert_valid(model: m.DeploymentModel, catalog=None) -> ValidatedModel:
    """Certify a model for downstream stages; raises ValidationFailed
    (carrying the full diagnostic list) when any error is present."""
    diagnostics = validate(model, catalog)
    errors = [d for d in diagnostics if d.severity == "error"]
    if errors:
        raise ValidationFailed(diagnostics)
    return ValidatedModel(
        model=_augment(model, catalog),
        warnings=tuple(d for d in diagnostics if d.severity == "warning"),
    )


def render_text(diagnostics) -> str:
    if not diagnostics:
        return "no findings"
    return "\n".join(str(d) for d in diagnostics)


def render_machine(diagnostics) -> str:
    """One tab-separated record per diagnostic: kind, severity, code,
    subject, message."""
    lines = []
    for d in diagnostics:
        fields = ("diagnostic", d.severity, d.code, d.subject, d.message)
        lines.append("\t".join(f.replace("\t", " ").replace("\n", " ") for f in fields))
    return "\n".join(lines)
