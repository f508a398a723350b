"""Container orchestration manifests: one Deployment plus one Service per
top-of-stack component.

The stack below each top is absorbed into the container image (present by
the compatibility gate for multi-level software stacks). Properties become
container env entries; dependency edges toward other stacks surface as env
vars carrying the target's Service name, the construct a pod uses to dial
its peers.
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
    env_name,
    load_yaml,
    stack_view,
    yaml_bytes,
)

DEFAULT_PORT = 80


def _container_image(comp: m.Component) -> str | None:
    for artifact in comp.artifacts:
        if artifact.kind is m.ArtifactKind.CONTAINER_IMAGE:
            return artifact.path
    return None


def _service_port(model: m.DeploymentModel, top: m.Component) -> int:
    value = m.effective_properties(model, top).get("port")
    return value if isinstance(value, int) and not isinstance(value, bool) else DEFAULT_PORT


def _service_env_var(target_slug: str) -> str:
    return f"{env_name(target_slug)}_SERVICE"


class KubernetesPlugin(TransformerPlugin):
    technology = "kubernetes"
    consumes = frozenset({"components", "relations", "properties", "artifacts"})

    def emit(self, validated: ValidatedModel, ctx: TransformContext) -> FileSet:
        model = validated.model
        view = stack_view(model)
        slugs = assign_slugs((t.name for t in view.tops), dns_slug)

        manifest = Manifest(technology=self.technology, model=model.name)
        manifest.relation_fallbacks = list(view.fallbacks)

        peer_env: dict[str, dict[str, str]] = {top.name: {} for top in view.tops}
        for edge in view.edges:
            rel = edge.relation
            pairs = [
                (s, t)
                for s in view.tops_of[rel.source]
                for t in view.tops_of[rel.target]
                if s != t
            ]
            for source_top, target_top in pairs:
                peer_env[source_top][_service_env_var(slugs[target_top])] = slugs[target_top]
            manifest.edges.append(
                EdgeRecord(
                    source=rel.source,
                    target=rel.target,
                    relation=rel.name,
                    family=edge.family,
                    construct="env" if pairs else "internal",
                )
            )

        files: list[GeneratedFile] = []
        for top in view.tops:
            slug = slugs[top.name]
            stack = view.stacks[top.name]
            env = dict(component_env(model, stack))
            env.update(peer_env[top.name])
            container: dict = {"name": slug}
            image = _container_image(top)
            if image:
                container["image"] = image
            if env:
                container["env"] = [
                    {"name": name, "value": env[name]} for name in sorted(env)
                ]
            port = _service_port(model, top)
            container["ports"] = [{"containerPort": port}]
            deployment = {
                "apiVersion": "apps/v1",
                "kind": "Deployment",
                "metadata": {"name": slug, "labels": {"app": slug}},
                "spec": {
                    "replicas": 1,
                    "selector": {"matchLabels": {"app": slug}},
                    "template": {
                        "metadata": {"labels": {"app": slug}},
                        "spec": {"containers": [container]},
                    },
                },
            }
            service = {
                "apiVersion": "v1",
                "kind": "Service",
                "metadata": {"name": slug},
                "spec": {
                    "selector": {"app": slug},
                    "ports": [{"port": port, "targetPort": port}],
                },
            }
            files.append(GeneratedFile(f"{slug}-deployment.yaml", yaml_bytes(deployment)))
            files.append(GeneratedFile(f"{slug}-service.yaml", yaml_bytes(service)))
            manifest.files.append((f"{slug}-deployment.yaml", "k8s-deployment"))
            manifest.files.append((f"{slug}-service.yaml", "k8s-service"))
            manifest.emitted.append(EmittedUnit(top.name, f"deployment:{slug}"))

        top_names = {t.name for t in view.tops}
        for name in model.components:
            if name not in top_names:
                into = tuple(f"deployment:{slugs[t]}" for t in sorted(view.tops_of[name]))
                manifest.absorbed.append(AbsorbedUnit(name, into))

        return build_fileset(manifest, files)

    def recheck(self, validated: ValidatedModel, fileset: FileSet) -> list[str]:
        from .compose import check_manifest_partition

        model = validated.model
        problems: list[str] = []
        view = stack_view(model)
        slugs = assign_slugs((t.name for t in view.tops), dns_slug)

        for top in view.tops:
            slug = slugs[top.name]
            try:
                deployment = load_yaml(fileset.get(f"{slug}-deployment.yaml").content)
                service = load_yaml(fileset.get(f"{slug}-service.yaml").content)
            except KeyError as exc:
                problems.append(f"missing manifest file for {top.name!r}: {exc}")
                continue
            except Exception as exc:
                problems.append(f"manifests for {top.name!r} do not parse: {exc}")
                continue
            if deployment.get("kind") != "Deployment" or service.get("kind") != "Service":
                problems.append(f"{top.name!r}: wrong document kinds")
                continue
            selector = deployment["spec"]["selector"]["matchLabels"]
            labels = deployment["spec"]["template"]["metadata"]["labels"]
            if selector != labels:
                problems.append(f"{slug!r}: selector does not target its pods")
            if service["spec"]["selector"] != selector:
                problems.append(f"{slug!r}: service does not target its pods")
            containers = deployment["spec"]["template"]["spec"]["containers"]
            if len(containers) != 1:
                problems.append(f"{slug!r}: expected exactly one container")
                continue
            env = {
                entry["name"]: entry.get("value")
                for entry in containers[0].get("env", [])
            }
            image = _container_image(top)
            if image and containers[0].get("image") != image:
                problems.append(f"{slug!r}: image differs from artifact")
            for source_top, target_top, rel in view.service_edges():
                if source_top != top.name:
                    continue
                var = _service_env_var(slugs[target_top])
                if env.get(var) != slugs[target_top]:
                    problems.append(
                        f"{slug!r}: missing env {var} for edge {rel.source}->{rel.target}"
                    )

        problems.extend(check_manifest_partition(model, fileset))
        return problems


PLUGIN = KubernetesPlugin()
