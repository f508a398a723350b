"""Container orchestration file for multi-container Docker applications.

Every top-of-stack component becomes one service; everything below it is
absorbed into the service's container image, which the compatibility gate
guarantees to exist for multi-level software stacks. Dependency edges
between stacks surface as depends_on lists; properties of the collapsed
stack become environment entries.
"""

from __future__ import annotations

from .. import model as m
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
    component_env,
    dns_slug,
    load_yaml,
    stack_view,
    yaml_bytes,
)

COMPOSE_FILE = "docker-compose.yml"


def _container_image(comp: m.Component) -> str | None:
    for artifact in comp.artifacts:
        if artifact.kind is m.ArtifactKind.CONTAINER_IMAGE:
            return artifact.path
    return None


class ComposePlugin(TransformerPlugin):
    technology = "docker-compose"
    consumes = frozenset({"components", "relations", "properties", "artifacts"})

    def emit(self, validated: ValidatedModel, ctx: TransformContext) -> FileSet:
        model = validated.model
        view = stack_view(model)
        slugs = assign_slugs((t.name for t in view.tops), dns_slug)

        manifest = Manifest(technology=self.technology, model=model.name)
        manifest.relation_fallbacks = list(view.fallbacks)

        depends: dict[str, set[str]] = {top.name: set() for top in view.tops}
        for edge in view.edges:
            rel = edge.relation
            pairs = [
                (s, t)
                for s in view.tops_of[rel.source]
                for t in view.tops_of[rel.target]
                if s != t
            ]
            for source_top, target_top in pairs:
                depends[source_top].add(slugs[target_top])
            manifest.edges.append(
                EdgeRecord(
                    source=rel.source,
                    target=rel.target,
                    relation=rel.name,
                    family=edge.family,
                    construct="depends_on" if pairs else "internal",
                )
            )

        services: dict[str, dict] = {}
        for top in view.tops:
            slug = slugs[top.name]
            stack = view.stacks[top.name]
            service: dict = {}
            image = _container_image(top)
            if image:
                service["image"] = image
            env = component_env(model, stack)
            if env:
                service["environment"] = dict(sorted(env.items()))
            if depends[top.name]:
                service["depends_on"] = sorted(depends[top.name])
            services[slug] = service
            manifest.emitted.append(EmittedUnit(top.name, f"service:{slug}"))

        for name in model.components:
            if name not in {t.name for t in view.tops}:
                into = tuple(f"service:{slugs[t]}" for t in sorted(view.tops_of[name]))
                manifest.absorbed.append(AbsorbedUnit(name, into))

        content = yaml_bytes({"services": dict(sorted(services.items()))})
        manifest.files.append((COMPOSE_FILE, "compose-yaml"))
        return build_fileset(manifest, [GeneratedFile(COMPOSE_FILE, content)])

    def recheck(self, validated: ValidatedModel, fileset: FileSet) -> list[str]:
        model = validated.model
        problems: list[str] = []
        view = stack_view(model)
        slugs = assign_slugs((t.name for t in view.tops), dns_slug)
        try:
            data = load_yaml(fileset.get(COMPOSE_FILE).content)
        except KeyError:
            return [f"missing {COMPOSE_FILE}"]
        except Exception as exc:  # malformed output is the finding itself
            return [f"{COMPOSE_FILE} does not parse: {exc}"]
        if not isinstance(data, dict) or not isinstance(data.get("services"), dict):
            return [f"{COMPOSE_FILE} lacks a services mapping"]
        services = data["services"]

        top_names = {t.name for t in view.tops}
        for top in view.tops:
            slug = slugs[top.name]
            service = services.get(slug)
            if not isinstance(service, dict):
                problems.append(f"no service for stack top {top.name!r}")
                continue
            image = _container_image(top)
            if image and service.get("image") != image:
                problems.append(f"service {slug!r} image differs from artifact")
            declared = set(service.get("depends_on", []))
            expected = {
                slugs[target_top]
                for source_top, target_top, _ in view.service_edges()
                if source_top == top.name
            }
            if declared != expected:
                problems.append(
                    f"service {slug!r} depends_on {sorted(declared)} != expected {sorted(expected)}"
                )
        if set(services) != {slugs[t] for t in top_names}:
            problems.append("service set does not match stack tops")

        problems.extend(check_manifest_partition(model, fileset))
        return problems


def check_manifest_partition(model: m.DeploymentModel, fileset: FileSet) -> list[str]:
    """Every component must appear exactly once across the manifest's
    emitted and absorbed unit records."""
    problems = []
    try:
        data = load_yaml(fileset.get("manifest").content)
    except Exception as exc:
        return [f"manifest does not parse: {exc}"]
    units = data.get("units", {})
    emitted = [u["component"] for u in units.get("emitted", [])]
    absorbed = [u["component"] for u in units.get("absorbed", [])]
    covered = emitted + absorbed
    if sorted(covered) != sorted(model.components):
        problems.append(
            f"manifest covers {sorted(covered)} but model has {sorted(model.components)}"
        )
    for record in units.get("absorbed", []):
        if not record.get("into"):
            problems.append(f"absorbed component {record.get('component')!r} names no unit")
    return problems


PLUGIN = ComposePlugin()
