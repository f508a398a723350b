"""Provider template: resources keyed by logical id, edges as DependsOn.

Components whose type metadata names a template resource type become
Resources. Software and other platform-resident components collapse into
the nearest resource-bearing host below them; their forward lifecycle
scripts are embedded, concatenated in deployment then lifecycle order,
into the hosting machine's user-data. Embedding reads artifact files, so
a transform context with an artifact root is required whenever scripts
are present.
"""

from __future__ import annotations

import json

from .. import model as m
from ..errors import MissingArtifactError, UnmappableElementError
from ..validation import ValidatedModel
from .common import (
    AbsorbedUnit,
    EdgeRecord,
    EmittedUnit,
    FileSet,
    GeneratedFile,
    Manifest,
    TransformContext,
    TransformerPlugin,
    assign_slugs,
    build_fileset,
    camel_id,
    lifecycle_operations,
    skipped_operations,
    stack_view,
)

TEMPLATE_FILE = "template.json"
TEMPLATE_VERSION = "2010-09-09"


def _resource_type(model: m.DeploymentModel, comp: m.Component) -> str | None:
    chain = m.resolve_component_type(model, comp.type)
    declared = m.effective_metadata(chain).get("cloudformation_type")
    return declared if isinstance(declared, str) else None


def _bearing(model: m.DeploymentModel, comp: m.Component) -> m.Component | None:
    """Nearest component at or below comp in its hosting stack that maps to
    a template resource."""
    for member in m.hosting_stack(model, comp):
        if _resource_type(model, member) is not None:
            return member
    return None


def _is_machine(model: m.DeploymentModel, comp: m.Component) -> bool:
    chain = m.resolve_component_type(model, comp.type)
    tags = m.effective_metadata(chain).get("tags", [])
    return isinstance(tags, list) and "compute" in tags


def _script_lines(comp_name: str, op: m.Operation, ctx: TransformContext) -> list[str]:
    if ctx.artifact_root is None:
        raise MissingArtifactError(
            f"embedding {op.artifact.path!r} for {comp_name!r} requires an artifact root",
            path=op.artifact.path,
        )
    path = ctx.artifact_root / op.artifact.path
    if not path.is_file():
        raise MissingArtifactError(
            f"artifact {op.artifact.path!r} for {comp_name!r} not found under "
            f"{ctx.artifact_root}",
            path=op.artifact.path,
        )
    content = path.read_text(encoding="utf-8").strip("\n")
    return [f"# {comp_name}: {op.name} ({op.artifact.path})", content]


class CloudFormationPlugin(TransformerPlugin):
    technology = "aws-cloudformation"
    consumes = frozenset({"components", "relations", "properties", "operations", "artifacts"})

    def emit(self, validated: ValidatedModel, ctx: TransformContext) -> FileSet:
        model = validated.model
        view = stack_view(model)
        manifest = Manifest(technology=self.technology, model=model.name)
        manifest.relation_fallbacks = list(view.fallbacks)

        bearings: dict[str, m.Component] = {}
        for name, comp in model.components.items():
            bearing = _bearing(model, comp)
            if bearing is None:
                raise UnmappableElementError(
                    f"component {name!r} maps to no template resource and has no "
                    f"resource-bearing host"
                )
            bearings[name] = bearing

        resource_components = [
            comp for name, comp in model.components.items() if bearings[name].name == name
        ]
        logical_ids = assign_slugs((c.name for c in resource_components), camel_id, sep="")

        position = {name: i for i, name in enumerate(view.order)}
        groups: dict[str, list[m.Component]] = {c.name: [] for c in resource_components}
        for name, comp in model.components.items():
            groups[bearings[name].name].append(comp)
        for members in groups.values():
            members.sort(key=lambda c: position[c.name])

        depends: dict[str, set[str]] = {c.name: set() for c in resource_components}
        for edge in view.edges:
            rel = edge.relation
            source_bearing = bearings[rel.source].name
            target_bearing = bearings[rel.target].name
            if source_bearing != target_bearing:
                depends[source_bearing].add(logical_ids[target_bearing])
                construct = "DependsOn"
            else:
                construct = "internal"
            manifest.edges.append(
                EdgeRecord(
                    source=rel.source,
                    target=rel.target,
                    relation=rel.name,
                    family=edge.family,
                    construct=construct,
                )
            )

        resources: dict[str, dict] = {}
        for comp in resource_components:
            properties: dict = dict(sorted(m.effective_properties(model, comp).items()))
            lines: list[str] = []
            for member in groups[comp.name]:
                ops = lifecycle_operations(model, member)
                if not ops:
                    continue
                if not _is_machine(model, comp):
                    raise UnmappableElementError(
                        f"operations of {member.name!r} cannot run on resource "
                        f"{comp.name!r}, which is not a machine"
                    )
                for op in ops:
                    lines.extend(_script_lines(member.name, op, ctx))
            if lines:
                properties["UserData"] = {
                    "Fn::Base64": {"Fn::Join": ["\n", ["#!/bin/sh"] + lines]}
                }
            entry: dict = {"Type": _resource_type(model, comp)}
            if depends[comp.name]:
                entry["DependsOn"] = sorted(depends[comp.name])
            if properties:
                entry["Properties"] = properties
            resources[logical_ids[comp.name]] = entry
            manifest.emitted.append(EmittedUnit(comp.name, f"resource:{logical_ids[comp.name]}"))

        for name, comp in model.components.items():
            manifest.ignored_operations.extend(skipped_operations(model, comp))
            bearing = bearings[name].name
            if bearing != name:
                manifest.absorbed.append(
                    AbsorbedUnit(name, (f"resource:{logical_ids[bearing]}",))
                )

        template = {
            "AWSTemplateFormatVersion": TEMPLATE_VERSION,
            "Description": f"Deployment of {model.name}",
            "Resources": resources,
        }
        content = (json.dumps(template, indent=2, sort_keys=True) + "\n").encode("utf-8")
        manifest.files.append((TEMPLATE_FILE, "cloudformation-template"))
        return build_fileset(manifest, [GeneratedFile(TEMPLATE_FILE, content)])

    def recheck(self, validated: ValidatedModel, fileset: FileSet) -> list[str]:
        from .compose import check_manifest_partition

        model = validated.model
        problems: list[str] = []
        view = stack_view(model)
        try:
            template = json.loads(fileset.get(TEMPLATE_FILE).text)
        except KeyError:
            return [f"missing {TEMPLATE_FILE}"]
        except json.JSONDecodeError as exc:
            return [f"{TEMPLATE_FILE} does not parse: {exc}"]
        if template.get("AWSTemplateFormatVersion") != TEMPLATE_VERSION:
            problems.append("missing or wrong template format version")
        resources = template.get("Resources", {})

        bearings = {name: _bearing(model, comp) for name, comp in model.components.items()}
        if any(b is None for b in bearings.values()):
            return ["model contains components without a resource-bearing host"]
        resource_names = [name for name, b in bearings.items() if b.name == name]
        logical_ids = assign_slugs(resource_names, camel_id, sep="")

        if sorted(resources) != sorted(logical_ids.values()):
            problems.append(
                f"logical ids {sorted(resources)} != expected {sorted(logical_ids.values())}"
            )

        for name in resource_names:
            entry = resources.get(logical_ids[name])
            if entry is None:
                continue
            expected_type = _resource_type(model, model.components[name])
            if entry.get("Type") != expected_type:
                problems.append(f"{name!r}: resource type {entry.get('Type')} != {expected_type}")

        for edge in view.edges:
            rel = edge.relation
            source_bearing = bearings[rel.source].name
            target_bearing = bearings[rel.target].name
            if source_bearing == target_bearing:
                continue
            entry = resources.get(logical_ids.get(source_bearing, ""), {})
            if logical_ids[target_bearing] not in entry.get("DependsOn", []):
                problems.append(
                    f"edge {rel.source!r}->{rel.target!r} missing from DependsOn"
                )

        # Embedded script markers appear in deployment then lifecycle order.
        position = {name: i for i, name in enumerate(view.order)}
        for name in resource_names:
            members = sorted(
                (c for c, b in bearings.items() if b.name == name),
                key=position.__getitem__,
            )
            markers = []
            for member in members:
                for op in lifecycle_operations(model, model.components[member]):
                    markers.append(f"# {member}: {op.name} ({op.artifact.path})")
            entry = resources.get(logical_ids[name], {})
            user_data = entry.get("Properties", {}).get("UserData")
            if not markers:
                if user_data is not None:
                    problems.append(f"{name!r}: unexpected user data")
                continue
            try:
                joined = user_data["Fn::Base64"]["Fn::Join"]
                lines = joined[1]
            except (TypeError, KeyError, IndexError):
                problems.append(f"{name!r}: user data lacks the expected join structure")
                continue
            found = [line for line in lines if line in markers]
            if found != markers:
                problems.append(f"{name!r}: script markers {found} != {markers}")

        problems.extend(check_manifest_partition(model, fileset))
        return problems


PLUGIN = CloudFormationPlugin()
