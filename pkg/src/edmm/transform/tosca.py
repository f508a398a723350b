"""Portable service template: node templates and node types for components
and their type chains, relationship templates for relations.

Relations map onto the normative relationship types hosted_on and
connected_to (everything else onto depends_on); user-defined relation
types are emitted as derived relationship types, so nothing needs a
fallback here. Model properties become topology inputs and intrinsic
references stay declarative as get_input / get_property functions.
"""

from __future__ import annotations

from .. import model as m
from ..validation import ValidatedModel
from .common import (
    EdgeRecord,
    EmittedUnit,
    FileSet,
    GeneratedFile,
    Manifest,
    TransformContext,
    TransformerPlugin,
    assign_slugs,
    build_fileset,
    lifecycle_operations,
    load_yaml,
    skipped_operations,
    snake_slug,
    stack_view,
    yaml_bytes,
)

TEMPLATE_FILE = "service-template.yaml"
DEFINITIONS_VERSION = "tosca_simple_yaml_1_3"

# Builtin relation roots onto the normative relationship type names.
RELATION_NAME_MAP = {
    m.HOSTED_ON: "hosted_on",
    m.CONNECTS_TO: "connected_to",
    m.DEPENDS_ON: "depends_on",
}
REQUIREMENT_KEYS = {
    m.HOSTED_ON: "host",
    m.CONNECTS_TO: "connection",
    m.DEPENDS_ON: "dependency",
}

_KIND_TO_TOSCA = {
    m.Kind.STRING: "string",
    m.Kind.INTEGER: "integer",
    m.Kind.BOOLEAN: "boolean",
    m.Kind.LIST: "list",
}


def _declaration_data(decl: m.PropertyDeclaration) -> dict:
    data: dict = {"type": _KIND_TO_TOSCA[decl.kind], "required": decl.required}
    if decl.kind is m.Kind.LIST:
        data["entry_schema"] = {"type": "string"}
    if decl.default is not None:
        data["default"] = decl.default
    return data


def _value_data(value: m.PropertyValue):
    if not value.is_reference:
        return value.literal
    ref = value.reference
    if ref.component is None:
        return {"get_input": ref.name}
    return {"get_property": [ref.component, ref.name]}


def _relationship_name(model: m.DeploymentModel, type_name: str) -> str:
    return RELATION_NAME_MAP.get(type_name, type_name)


class ToscaPlugin(TransformerPlugin):
    technology = "tosca"
    consumes = frozenset({"components", "relations", "properties", "operations", "artifacts"})

    def emit(self, validated: ValidatedModel, ctx: TransformContext) -> FileSet:
        model = validated.model
        view = stack_view(model)
        manifest = Manifest(technology=self.technology, model=model.name)

        # Node types: closure over every chain in use.
        node_types: dict[str, dict] = {}
        for comp in model.components.values():
            for entry in m.resolve_component_type(model, comp.type):
                if entry.name in node_types:
                    continue
                data: dict = {}
                if entry.extends:
                    data["derived_from"] = entry.extends
                if entry.property_schema:
                    data["properties"] = {
                        name: _declaration_data(entry.property_schema[name])
                        for name in sorted(entry.property_schema)
                    }
                node_types[entry.name] = data

        # Relationship types: closure over used relation types plus roots.
        relationship_types: dict[str, dict] = {
            RELATION_NAME_MAP[m.DEPENDS_ON]: {},
            RELATION_NAME_MAP[m.HOSTED_ON]: {"derived_from": RELATION_NAME_MAP[m.DEPENDS_ON]},
            RELATION_NAME_MAP[m.CONNECTS_TO]: {"derived_from": RELATION_NAME_MAP[m.DEPENDS_ON]},
        }
        for rel in model.relations:
            for entry in m.resolve_relation_type(model, rel.type):
                name = _relationship_name(model, entry.name)
                if name in relationship_types:
                    continue
                data = {}
                if entry.extends:
                    data["derived_from"] = _relationship_name(model, entry.extends)
                if entry.property_schema:
                    data["properties"] = {
                        prop: _declaration_data(entry.property_schema[prop])
                        for prop in sorted(entry.property_schema)
                    }
                relationship_types[name] = data

        template_ids = assign_slugs(
            (f"{rel.source} {rel.name}" for rel in model.relations), snake_slug, sep="_"
        )
        relationship_templates: dict[str, dict] = {}
        requirements: dict[str, list] = {name: [] for name in model.components}
        for edge in view.edges:
            rel = edge.relation
            template_id = template_ids[f"{rel.source} {rel.name}"]
            data = {"type": _relationship_name(model, rel.type)}
            if rel.properties:
                data["properties"] = {
                    name: _value_data(rel.properties[name]) for name in sorted(rel.properties)
                }
            relationship_templates[template_id] = data
            requirements[rel.source].append(
                {
                    REQUIREMENT_KEYS[edge.family]: {
                        "node": rel.target,
                        "relationship": template_id,
                    }
                }
            )
            manifest.edges.append(
                EdgeRecord(
                    source=rel.source,
                    target=rel.target,
                    relation=rel.name,
                    family=edge.family,
                    construct="relationship",
                )
            )

        node_templates: dict[str, dict] = {}
        for name, comp in model.components.items():
            node: dict = {"type": comp.type}
            if comp.properties:
                node["properties"] = {
                    prop: _value_data(comp.properties[prop]) for prop in sorted(comp.properties)
                }
            if comp.artifacts:
                node["artifacts"] = {
                    artifact.name: {"file": artifact.path, "type": artifact.kind.value}
                    for artifact in comp.artifacts
                }
            ops = lifecycle_operations(model, comp)
            if ops:
                node["interfaces"] = {
                    "Standard": {op.name: {"implementation": op.artifact.path} for op in ops}
                }
            if requirements[name]:
                node["requirements"] = requirements[name]
            node_templates[name] = node
            manifest.emitted.append(EmittedUnit(name, f"node_template:{name}"))
            manifest.ignored_operations.extend(skipped_operations(model, comp))

        inputs: dict[str, dict] = {}
        resolver = m._Resolver(model)
        for name in sorted(model.model_properties):
            literal = resolver.resolve(model.model_properties[name], f"model property {name!r}")
            inputs[name] = {
                "type": _KIND_TO_TOSCA[m.Kind.of_literal(literal)],
                "default": literal,
            }

        topology: dict = {}
        if inputs:
            topology["inputs"] = inputs
        topology["node_templates"] = node_templates
        if relationship_templates:
            topology["relationship_templates"] = relationship_templates
        document = {
            "tosca_definitions_version": DEFINITIONS_VERSION,
            "metadata": {"template_name": model.name},
            "node_types": node_types,
            "relationship_types": relationship_types,
            "topology_template": topology,
        }
        content = yaml_bytes(document)
        manifest.files.append((TEMPLATE_FILE, "tosca-service-template"))
        return build_fileset(manifest, [GeneratedFile(TEMPLATE_FILE, content)])

    def recheck(self, validated: ValidatedModel, fileset: FileSet) -> list[str]:
        from .compose import check_manifest_partition

        model = validated.model
        problems: list[str] = []
        try:
            document = load_yaml(fileset.get(TEMPLATE_FILE).content)
        except KeyError:
            return [f"missing {TEMPLATE_FILE}"]
        except Exception as exc:
            return [f"{TEMPLATE_FILE} does not parse: {exc}"]
        if document.get("tosca_definitions_version") != DEFINITIONS_VERSION:
            problems.append("missing or wrong tosca_definitions_version")
        node_types = document.get("node_types", {})
        relationship_types = document.get("relationship_types", {})
        topology = document.get("topology_template", {})
        node_templates = topology.get("node_templates", {})
        relationship_templates = topology.get("relationship_templates", {})

        if sorted(node_templates) != sorted(model.components):
            problems.append("node templates do not match components")
        for name, comp in model.components.items():
            node = node_templates.get(name)
            if node is None:
                continue
            if node.get("type") != comp.type:
                problems.append(f"{name!r}: node type {node.get('type')} != {comp.type}")
            chain = m.resolve_component_type(model, comp.type)
            for entry in chain:
                if entry.name not in node_types:
                    problems.append(f"node type {entry.name!r} missing from closure")

        # Every emitted derived_from edge must resolve and reach a root.
        for name, data in node_types.items():
            seen = set()
            current = name
            while True:
                if current in seen:
                    problems.append(f"node type {name!r} has a looping derived_from chain")
                    break
                seen.add(current)
                parent = node_types.get(current, {}).get("derived_from")
                if parent is None:
                    break
                if parent not in node_types:
                    problems.append(f"node type {current!r} derives from missing {parent!r}")
                    break
                current = parent

        template_ids = assign_slugs(
            (f"{rel.source} {rel.name}" for rel in model.relations), snake_slug, sep="_"
        )
        for rel in model.relations:
            template_id = template_ids[f"{rel.source} {rel.name}"]
            entry = relationship_templates.get(template_id)
            if entry is None:
                problems.append(f"relation {rel.source}/{rel.name}: no relationship template")
                continue
            expected_type = _relationship_name(model, rel.type)
            if entry.get("type") != expected_type:
                problems.append(
                    f"relation {rel.source}/{rel.name}: type {entry.get('type')} != {expected_type}"
                )
            if entry.get("type") not in relationship_types:
                problems.append(f"relationship type {entry.get('type')!r} missing")
            node = node_templates.get(rel.source, {})
            found = False
            for requirement in node.get("requirements", []):
                for value in requirement.values():
                    if (
                        isinstance(value, dict)
                        and value.get("node") == rel.target
                        and value.get("relationship") == template_id
                    ):
                        found = True
            if not found:
                problems.append(
                    f"relation {rel.source}/{rel.name}: no requirement names {rel.target!r}"
                )

        problems.extend(check_manifest_partition(model, fileset))
        return problems


PLUGIN = ToscaPlugin()
