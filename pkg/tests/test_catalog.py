"""Builtin catalog shape and user catalog merging."""

from __future__ import annotations

import pytest

from edmm import model as m
from edmm.catalog import Catalog, builtin_catalog, load_catalog, merge
from edmm.dsl import parse_text
from edmm.errors import CatalogError, NameCollisionError, UnknownParentError

USER_CATALOG = """
edmm_version: 1
component_types:
  my_app:
    extends: web_application
relation_types:
  streams_to:
    extends: connects_to
"""

MINIMUM_COMPONENT_TYPES = {
    "base",
    "compute",
    "software_component",
    "web_server",
    "web_application",
    "dbms",
    "database",
    "queue",
    "function",
    "platform_service",
    "aws_ec2",
    "aws_sqs",
    "aws_lambda",
    "azure_cosmos_db",
    "openstack_compute",
}


def _empty_model_with(catalog: Catalog) -> m.DeploymentModel:
    return m.DeploymentModel(
        name="probe",
        component_types=dict(catalog.component_types),
        relation_types=dict(catalog.relation_types),
    )


class TestBuiltinCatalog:
    def test_minimum_tree_present(self):
        catalog = builtin_catalog()
        assert MINIMUM_COMPONENT_TYPES <= set(catalog.component_types)
        assert {"depends_on", "hosted_on", "connects_to"} <= set(catalog.relation_types)

    def test_host_relation_extends_dependency_root(self):
        catalog = builtin_catalog()
        assert catalog.relation_types["hosted_on"].extends == "depends_on"

    def test_connection_and_hosting_share_the_root(self):
        model = _empty_model_with(builtin_catalog())
        hosted = [t.name for t in m.resolve_relation_type(model, "hosted_on")]
        connects = [t.name for t in m.resolve_relation_type(model, "connects_to")]
        assert hosted != connects
        assert hosted[-1] == connects[-1] == "depends_on"

    def test_aws_machine_service_metadata(self):
        ec2 = builtin_catalog().component_types["aws_ec2"]
        assert "compute" in ec2.metadata["tags"]
        assert ec2.metadata["provider"] == "aws"

    def test_all_component_chains_terminate_at_base(self):
        model = _empty_model_with(builtin_catalog())
        for name in builtin_catalog().component_types:
            chain = m.resolve_component_type(model, name)
            assert chain[-1].name == "base"

    def test_all_relation_chains_terminate_at_dependency_root(self):
        model = _empty_model_with(builtin_catalog())
        for name in builtin_catalog().relation_types:
            chain = m.resolve_relation_type(model, name)
            assert chain[-1].name == "depends_on"

    def test_provider_tags_cover_exactly_three_clouds(self):
        catalog = builtin_catalog()
        model = _empty_model_with(catalog)
        providers = set()
        for name in catalog.component_types:
            chain = m.resolve_component_type(model, name)
            if any(t.name == "platform_service" for t in chain) and name != "platform_service":
                provider = m.effective_metadata(chain).get("provider")
                assert provider in {"aws", "azure", "openstack"}
                providers.add(provider)
        assert providers == {"aws", "azure", "openstack"}

    def test_builtin_types_are_marked_builtin(self):
        catalog = builtin_catalog()
        assert all(t.origin == "builtin" for t in catalog.component_types.values())


class TestMerge:
    def test_user_type_chain_resolves_through_builtins(self):
        merged = merge(builtin_catalog(), load_catalog(USER_CATALOG))
        model = _empty_model_with(merged)
        chain = [t.name for t in m.resolve_component_type(model, "my_app")]
        assert chain == ["my_app", "web_application", "software_component", "base"]

    def test_empty_user_catalog_is_identity(self):
        merged = merge(builtin_catalog(), Catalog())
        assert merged.component_types == builtin_catalog().component_types
        assert merged.relation_types == builtin_catalog().relation_types

    def test_redefining_builtin_collides(self):
        user = load_catalog("edmm_version: 1\ncomponent_types:\n  compute:\n    extends: base\n")
        with pytest.raises(NameCollisionError):
            merge(builtin_catalog(), user)

    def test_unknown_parent_rejected(self):
        user = load_catalog(
            "edmm_version: 1\ncomponent_types:\n  orphan:\n    extends: nothing_here\n"
        )
        with pytest.raises(UnknownParentError):
            merge(builtin_catalog(), user)

    def test_broken_catalog_file_raises(self):
        with pytest.raises(CatalogError):
            load_catalog("edmm_version: 1\ncomponents:\n  c:\n    type: compute\n")


class TestCatalogInParsing:
    def test_extra_catalog_feeds_models(self):
        from edmm.dsl import parse

        result = parse_text(
            "edmm_version: 1\nname: app\ncomponents:\n  a:\n    type: my_app\n",
            extra_catalogs=[load_catalog(USER_CATALOG)],
        )
        model = result.expect()
        chain = [t.name for t in m.resolve_component_type(model, "my_app")]
        assert len(chain) >= 3

    def test_user_types_not_serialized_back(self):
        from edmm.dsl import serialize

        result = parse_text(
            "edmm_version: 1\nname: app\ncomponents:\n  a:\n    type: my_app\n",
            extra_catalogs=[load_catalog(USER_CATALOG)],
        )
        text = serialize(result.expect())
        assert "my_app" in text  # as the component's type reference
        assert "component_types" not in text  # but not as a definition
