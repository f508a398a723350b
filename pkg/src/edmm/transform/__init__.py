"""Plugin framework turning validated models into native deployment files.

transform() gates every run twice: the model must carry a validation
certificate and it must pass the compatibility check for the requested
technology, otherwise IncompatibleModelError echoes the blockers. Bundled
plugins cover docker-compose, kubernetes, terraform, ansible,
aws-cloudformation and tosca; the remaining surveyed technologies are
documented mappings only (see docs/plugin-guide.md for the contract to
add one).
"""

from __future__ import annotations

import shutil
from dataclasses import dataclass
from pathlib import Path

from .. import compat
from ..errors import IncompatibleModelError, UnknownTechnologyError
from ..validation import ValidatedModel
from .common import (
    AbsorbedUnit,
    EdgeRecord,
    EmittedUnit,
    FileSet,
    GeneratedFile,
    Manifest,
    RelationFallback,
    TransformContext,
    TransformerPlugin,
)
from . import ansible, cloudformation, compose, kubernetes, terraform, tosca

__all__ = [
    "AbsorbedUnit",
    "EdgeRecord",
    "EmittedUnit",
    "FileSet",
    "GeneratedFile",
    "Manifest",
    "RelationFallback",
    "TargetStatus",
    "TransformContext",
    "TransformerPlugin",
    "get_plugin",
    "list_targets",
    "plugins",
    "register_plugin",
    "transform",
    "write_fileset",
]

BUNDLED = "bundled"
DOCUMENTED = "mapping-documented-only"

_PLUGINS: dict[str, TransformerPlugin] = {}


def register_plugin(plugin: TransformerPlugin) -> None:
    """Register a plugin under its technology name; the name must resolve
    in the technology registry."""
    compat.technology(plugin.technology)
    _PLUGINS[plugin.technology] = plugin


def plugins() -> dict[str, TransformerPlugin]:
    return dict(_PLUGINS)


def get_plugin(technology: str) -> TransformerPlugin:
    plugin = _PLUGINS.get(technology)
    if plugin is None:
        raise UnknownTechnologyError(
            f"no bundled transformer plugin for {technology!r}"
        )
    return plugin


for _plugin in (
    compose.PLUGIN,
    kubernetes.PLUGIN,
    terraform.PLUGIN,
    ansible.PLUGIN,
    cloudformation.PLUGIN,
    tosca.PLUGIN,
):
    register_plugin(_plugin)


@dataclass(frozen=True)
class TargetStatus:
    name: str
    display_name: str
    category: str
    status: str  # bundled | mapping-documented-only

    @property
    def bundled(self) -> bool:
        return self.status == BUNDLED


def list_targets() -> list[TargetStatus]:
    """Every known technology with its plugin status."""
    return [
        TargetStatus(
            name=tech.name,
            display_name=tech.display_name,
            category=tech.category.value,
            status=BUNDLED if tech.name in _PLUGINS else DOCUMENTED,
        )
        for tech in compat.all_targets()
    ]


def transform(
    validated: ValidatedModel,
    target: str | compat.Technology,
    artifact_root: Path | None = None,
) -> FileSet:
    """Compile a validated model into the target technology's native files.

    Raises UnknownTechnologyError for unknown or plugin-less targets and
    IncompatibleModelError when the compatibility check reports blockers.
    """
    tech = compat.technology(target) if isinstance(target, str) else target
    plugin = get_plugin(tech.name)
    report = compat.check(validated, tech)
    if not report.compatible:
        raise IncompatibleModelError(tech.name, report.blockers)
    return plugin.emit(validated, TransformContext(artifact_root=artifact_root))


def write_fileset(fileset: FileSet, outdir: Path, technology: str) -> Path:
    """Materialize a FileSet under <outdir>/<technology> atomically: files
    land in a staging directory that is renamed into place, so a failed
    run never leaves partial output."""
    outdir = Path(outdir)
    final = outdir / technology
    staging = outdir / f".{technology}.staging"
    if staging.exists():
        shutil.rmtree(staging)
    staging.mkdir(parents=True)
    try:
        for gf in fileset.files:
            path = staging / gf.path
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_bytes(gf.content)
        if final.exists():
            shutil.rmtree(final)
        staging.rename(final)
    except BaseException:
        shutil.rmtree(staging, ignore_errors=True)
        raise
    return final
