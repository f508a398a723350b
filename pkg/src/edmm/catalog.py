"""Built-in and user-supplied type catalogs.

The builtin catalog ships as a data file written in the modeling
language's own type-definition syntax and is loaded once per process. It
is closed: user catalogs and model-local definitions may extend builtin
types but never redefine them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path

from .dsl import parse_catalog_sections
from .errors import CatalogError, NameCollisionError, UnknownParentError
from .model import ComponentType, RelationType

BUILTIN_CATALOG_RESOURCE = "builtin-types.edmm.yaml"


@dataclass
class Catalog:
    """A bundle of reusable component and relation types."""

    component_types: dict[str, ComponentType] = field(default_factory=dict)
    relation_types: dict[str, RelationType] = field(default_factory=dict)
    origin: str = "user"


def load_catalog(text: str, source_name: str = "<catalog>", origin: str = "user") -> Catalog:
    """Parse a catalog document (type sections only). Raises CatalogError
    on any diagnostic."""
    component_types, relation_types, diagnostics = parse_catalog_sections(
        text, source_name, origin
    )
    errors = [d for d in diagnostics if d.severity == "error"]
    if errors:
        raise CatalogError(
            f"catalog {source_name!r} is invalid:\n" + "\n".join(str(d) for d in errors)
        )
    return Catalog(component_types, relation_types, origin=origin)


def load_catalog_file(path, origin: str = "user") -> Catalog:
    p = Path(path)
    return load_catalog(p.read_text(encoding="utf-8"), source_name=str(p), origin=origin)


@lru_cache(maxsize=1)
def builtin_catalog() -> Catalog:
    """The shipped catalog: a minimal taxonomy covering application
    software, middleware, computing resources and managed cloud services,
    plus the three relation type roots."""
    text = (
        resources.files("edmm.data").joinpath(BUILTIN_CATALOG_RESOURCE).read_text("utf-8")
    )
    return load_catalog(text, source_name=BUILTIN_CATALOG_RESOURCE, origin="builtin")


def merge(base: Catalog, user: Catalog) -> Catalog:
    """Union of two catalogs. User type names must be disjoint from the
    base and user extends references must resolve inside the union."""
    for name in user.component_types:
        if name in base.component_types:
            raise NameCollisionError(f"component type {name!r} is already defined")
    for name in user.relation_types:
        if name in base.relation_types:
            raise NameCollisionError(f"relation type {name!r} is already defined")
    component_types = {**base.component_types, **user.component_types}
    relation_types = {**base.relation_types, **user.relation_types}
    for name, ct in user.component_types.items():
        if ct.extends is not None and ct.extends not in component_types:
            raise UnknownParentError(
                f"component type {name!r} extends unknown type {ct.extends!r}"
            )
    for name, rt in user.relation_types.items():
        if rt.extends is not None and rt.extends not in relation_types:
            raise UnknownParentError(
                f"relation type {name!r} extends unknown type {rt.extends!r}"
            )
    return Catalog(component_types, relation_types, origin=user.origin)
