"""One playbook; each hosting tree becomes a play against its leaf.

Components contribute a provision marker task plus one script task per
forward lifecycle operation, sequenced in deployment order. Dependency
edges are carried by execution order: plays run in topological tree
order and tasks in topological component order, so a target always runs
before its source. Properties become play vars keyed by component.
"""

from __future__ import annotations

import heapq

from .. import model as m
from ..validation import ValidatedModel
from .common import (
    EdgeRecord,
    EmittedUnit,
    FileSet,
    GeneratedFile,
    Manifest,
    StackView,
    TransformContext,
    TransformerPlugin,
    build_fileset,
    dns_slug,
    lifecycle_operations,
    load_yaml,
    skipped_operations,
    snake_slug,
    stack_view,
    yaml_bytes,
)

PLAYBOOK_FILE = "playbook.yml"


def _ordered_trees(view: StackView) -> list[str]:
    """Hosting tree leaves in an order that respects cross-tree edges where
    possible (contraction cycles fall back to first-use order)."""
    member_tree = {comp: leaf for leaf, members in view.trees.items() for comp in members}
    needed: dict[str, set[str]] = {leaf: set() for leaf in view.trees}
    dependents: dict[str, set[str]] = {leaf: set() for leaf in view.trees}
    for edge in view.edges:
        source_tree = member_tree[edge.relation.source]
        target_tree = member_tree[edge.relation.target]
        if source_tree != target_tree:
            needed[source_tree].add(target_tree)
            dependents[target_tree].add(source_tree)
    pending = {leaf: len(targets) for leaf, targets in needed.items()}
    ready = [leaf for leaf, count in pending.items() if count == 0]
    heapq.heapify(ready)
    order: list[str] = []
    while ready:
        leaf = heapq.heappop(ready)
        order.append(leaf)
        for dependent in sorted(dependents[leaf]):
            pending[dependent] -= 1
            if pending[dependent] == 0:
                heapq.heappush(ready, dependent)
    if len(order) != len(view.trees):
        # Contracting trees can loop even when components do not; order the
        # rest by their earliest member in the global deployment order.
        position = {name: i for i, name in enumerate(view.order)}
        rest = sorted(
            (leaf for leaf in view.trees if leaf not in order),
            key=lambda leaf: (min(position[c] for c in view.trees[leaf]), leaf),
        )
        order.extend(rest)
    return order


def _marker_name(component: str) -> str:
    return f"{component}: provision"


class AnsiblePlugin(TransformerPlugin):
    technology = "ansible"
    consumes = frozenset({"components", "relations", "properties", "operations", "artifacts"})

    def emit(self, validated: ValidatedModel, ctx: TransformContext) -> FileSet:
        model = validated.model
        view = stack_view(model)
        manifest = Manifest(technology=self.technology, model=model.name)
        manifest.relation_fallbacks = list(view.fallbacks)

        plays = []
        for leaf in _ordered_trees(view):
            members = view.trees[leaf]
            leaf_slug = dns_slug(leaf)
            tasks = []
            play_vars: dict[str, dict] = {}
            for name in members:
                comp = model.components[name]
                effective = m.effective_properties(model, comp)
                if effective:
                    play_vars[snake_slug(name)] = dict(sorted(effective.items()))
                tasks.append(
                    {
                        "name": _marker_name(name),
                        "ansible.builtin.debug": {"msg": f"{name} ({comp.type})"},
                    }
                )
                for op in lifecycle_operations(model, comp):
                    tasks.append(
                        {
                            "name": f"{name}: {op.name}",
                            "ansible.builtin.script": op.artifact.path,
                        }
                    )
                manifest.emitted.append(EmittedUnit(name, f"task:{leaf_slug}/{snake_slug(name)}"))
                manifest.ignored_operations.extend(skipped_operations(model, comp))
            play: dict = {
                "name": f"Deploy {leaf} stack",
                "hosts": leaf_slug,
                "gather_facts": False,
            }
            if play_vars:
                play["vars"] = play_vars
            play["tasks"] = tasks
            plays.append(play)

        for edge in view.edges:
            rel = edge.relation
            manifest.edges.append(
                EdgeRecord(
                    source=rel.source,
                    target=rel.target,
                    relation=rel.name,
                    family=edge.family,
                    construct="ordering",
                )
            )

        content = yaml_bytes(plays)
        manifest.files.append((PLAYBOOK_FILE, "ansible-playbook"))
        return build_fileset(manifest, [GeneratedFile(PLAYBOOK_FILE, content)])

    def recheck(self, validated: ValidatedModel, fileset: FileSet) -> list[str]:
        from .compose import check_manifest_partition

        model = validated.model
        problems: list[str] = []
        view = stack_view(model)
        try:
            plays = load_yaml(fileset.get(PLAYBOOK_FILE).content)
        except KeyError:
            return [f"missing {PLAYBOOK_FILE}"]
        except Exception as exc:
            return [f"{PLAYBOOK_FILE} does not parse: {exc}"]
        if not isinstance(plays, list):
            return [f"{PLAYBOOK_FILE} is not a list of plays"]

        markers = {_marker_name(name): name for name in model.components}
        position: dict[str, int] = {}
        sequence: list[tuple[str, dict]] = []  # (component, task) in global order
        counter = 0
        for play in plays:
            if "hosts" not in play or not isinstance(play.get("tasks"), list):
                problems.append("play lacks hosts or tasks")
                continue
            for task in play["tasks"]:
                name = task.get("name", "")
                if name in markers:
                    comp = markers[name]
                    if comp in position:
                        problems.append(f"component {comp!r} appears in more than one task")
                    position[comp] = counter
                sequence.append((name, task))
                counter += 1

        missing = sorted(set(model.components) - set(position))
        if missing:
            problems.append(f"components without tasks: {missing}")
            problems.extend(check_manifest_partition(model, fileset))
            return problems

        for edge in view.edges:
            rel = edge.relation
            if position[rel.target] >= position[rel.source]:
                problems.append(
                    f"edge {rel.source!r}->{rel.target!r} is not respected by task order"
                )

        # Script tasks directly follow their component's marker, in
        # lifecycle order.
        for name, comp in model.components.items():
            expected = [(f"{name}: {op.name}", op.artifact.path) for op in lifecycle_operations(model, comp)]
            index = position[name]
            actual = []
            for task_name, task in sequence[index + 1 : index + 1 + len(expected)]:
                actual.append((task_name, task.get("ansible.builtin.script")))
            if actual != expected:
                problems.append(f"{name!r}: script tasks {actual} != {expected}")

        problems.extend(check_manifest_partition(model, fileset))
        return problems


PLUGIN = AnsiblePlugin()
