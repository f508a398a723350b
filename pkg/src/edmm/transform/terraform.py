"""Infrastructure configuration in JSON syntax.

Every component becomes one resource block; type metadata selects the
resource type, with null_resource as fallback for software and
provider-less machines. Dependency edges become explicit depends_on
attributes. Software carries its forward lifecycle scripts as remote-exec
provisioner stanzas. Network edges additionally inject a locals entry
carrying the target's dial address, since plain resources have no native
connection construct.
"""

from __future__ import annotations

import json

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
    address_of,
    assign_slugs,
    build_fileset,
    lifecycle_operations,
    skipped_operations,
    snake_slug,
    stack_view,
    stringify,
)

MAIN_FILE = "main.tf.json"
FALLBACK_RESOURCE_TYPE = "null_resource"


def resource_type(model: m.DeploymentModel, comp: m.Component) -> str:
    chain = m.resolve_component_type(model, comp.type)
    declared = m.effective_metadata(chain).get("terraform_type")
    return declared if isinstance(declared, str) else FALLBACK_RESOURCE_TYPE


def _reference(rtype: str, slug: str) -> str:
    return f"{rtype}.{slug}"


def _locals_key(source_slug: str, target_slug: str) -> str:
    return f"connect_{source_slug}_{target_slug}"


class TerraformPlugin(TransformerPlugin):
    technology = "terraform"
    consumes = frozenset({"components", "relations", "properties", "operations", "artifacts"})

    def emit(self, validated: ValidatedModel, ctx: TransformContext) -> FileSet:
        model = validated.model
        view = stack_view(model)
        slugs = assign_slugs(model.components, snake_slug, sep="_")
        rtypes = {name: resource_type(model, comp) for name, comp in model.components.items()}
        refs = {name: _reference(rtypes[name], slugs[name]) for name in model.components}

        manifest = Manifest(technology=self.technology, model=model.name)
        manifest.relation_fallbacks = list(view.fallbacks)

        depends: dict[str, set[str]] = {name: set() for name in model.components}
        locals_block: dict[str, str] = {}
        for edge in view.edges:
            rel = edge.relation
            depends[rel.source].add(refs[rel.target])
            construct = "depends_on"
            if edge.family == m.CONNECTS_TO:
                target_comp = model.components[rel.target]
                address = address_of(model, target_comp)
                if address is None:
                    address = "${" + refs[rel.target] + ".id}"
                locals_block[_locals_key(slugs[rel.source], slugs[rel.target])] = address
                construct = "depends_on+locals"
            manifest.edges.append(
                EdgeRecord(
                    source=rel.source,
                    target=rel.target,
                    relation=rel.name,
                    family=edge.family,
                    construct=construct,
                )
            )

        resources: dict[str, dict[str, dict]] = {}
        for name, comp in model.components.items():
            block: dict = {}
            effective = m.effective_properties(model, comp)
            if rtypes[name] == FALLBACK_RESOURCE_TYPE:
                if effective:
                    block["triggers"] = {
                        prop: stringify(value) for prop, value in sorted(effective.items())
                    }
            else:
                for prop, value in sorted(effective.items()):
                    block[prop] = value
            if depends[name]:
                block["depends_on"] = sorted(depends[name])
            provisioners = [
                {"remote-exec": {"script": op.artifact.path}}
                for op in lifecycle_operations(model, comp)
            ]
            if provisioners:
                block["provisioner"] = provisioners
            resources.setdefault(rtypes[name], {})[slugs[name]] = block
            manifest.emitted.append(EmittedUnit(name, refs[name]))
            manifest.ignored_operations.extend(skipped_operations(model, comp))

        document: dict = {"resource": resources}
        if locals_block:
            document["locals"] = locals_block
        content = (json.dumps(document, indent=2, sort_keys=True) + "\n").encode("utf-8")
        manifest.files.append((MAIN_FILE, "terraform-json"))
        return build_fileset(manifest, [GeneratedFile(MAIN_FILE, content)])

    def recheck(self, validated: ValidatedModel, fileset: FileSet) -> list[str]:
        from .compose import check_manifest_partition

        model = validated.model
        problems: list[str] = []
        view = stack_view(model)
        slugs = assign_slugs(model.components, snake_slug, sep="_")
        try:
            document = json.loads(fileset.get(MAIN_FILE).text)
        except KeyError:
            return [f"missing {MAIN_FILE}"]
        except json.JSONDecodeError as exc:
            return [f"{MAIN_FILE} does not parse: {exc}"]
        resources = document.get("resource", {})
        locals_block = document.get("locals", {})

        blocks: dict[str, dict] = {}
        for name, comp in model.components.items():
            rtype = resource_type(model, comp)
            block = resources.get(rtype, {}).get(slugs[name])
            if block is None:
                problems.append(f"no resource for component {name!r}")
                continue
            blocks[name] = block

        emitted_count = sum(len(group) for group in resources.values())
        if emitted_count != len(blocks):
            problems.append(
                f"{emitted_count} resources emitted for {len(blocks)} components"
            )

        for edge in view.edges:
            rel = edge.relation
            block = blocks.get(rel.source)
            if block is None:
                continue
            target_ref = _reference(
                resource_type(model, model.components[rel.target]), slugs[rel.target]
            )
            if target_ref not in block.get("depends_on", []):
                problems.append(
                    f"edge {rel.source!r}->{rel.target!r} missing from depends_on"
                )
            if edge.family == m.CONNECTS_TO:
                if _locals_key(slugs[rel.source], slugs[rel.target]) not in locals_block:
                    problems.append(
                        f"edge {rel.source!r}->{rel.target!r} missing a locals address entry"
                    )

        for name, comp in model.components.items():
            block = blocks.get(name)
            if block is None:
                continue
            expected = [op.artifact.path for op in lifecycle_operations(model, comp)]
            actual = [
                entry.get("remote-exec", {}).get("script")
                for entry in block.get("provisioner", [])
            ]
            if expected != actual:
                problems.append(f"{name!r}: provisioner scripts {actual} != {expected}")

        problems.extend(check_manifest_partition(model, fileset))
        return problems


PLUGIN = TerraformPlugin()
