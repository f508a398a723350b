"""Deployment modeling toolkit.

Declarative deployment models are parsed from a YAML dialect into typed
topology graphs, validated, checked for expressibility against deployment
technologies and compiled into native files for six of them. See README.md
for a tour and docs/dsl-reference.md for the input grammar.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from . import errors
from .catalog import Catalog, builtin_catalog, load_catalog, load_catalog_file, merge
from .compat import (
    Blocker,
    Category,
    TargetReport,
    Technology,
    all_targets,
    check,
    registry,
    technology,
)
from .dsl import (
    ParseDiagnostic,
    ParseResult,
    SourceSet,
    parse,
    parse_text,
    resolve_intrinsics,
    serialize,
)
from .model import (
    Artifact,
    ArtifactKind,
    Component,
    ComponentType,
    DeploymentModel,
    Kind,
    Operation,
    PropertyDeclaration,
    PropertyReference,
    PropertyValue,
    Relation,
    RelationType,
    deployment_order,
    effective_operations,
    effective_properties,
    effective_relation_properties,
    hosting_stack,
    resolve_component_type,
    resolve_relation_type,
)
from .transform import FileSet, list_targets, transform, write_fileset
from .validation import Diagnostic, ValidatedModel, assert_valid, validate

__version__ = "0.1.0"

SAMPLE_MODELS = ("order-management",)


def sample_model_path(name: str = "order-management") -> Path:
    """Filesystem path of a bundled sample model."""
    if name not in SAMPLE_MODELS:
        raise KeyError(f"unknown sample model {name!r}; available: {SAMPLE_MODELS}")
    root = resources.files("edmm.data").joinpath("samples").joinpath(name).joinpath("model.edmm.yaml")
    return Path(str(root))


def load_sample(name: str = "order-management") -> DeploymentModel:
    """Parse a bundled sample model; raises on diagnostics."""
    return parse(SourceSet.from_files([sample_model_path(name)])).expect()
