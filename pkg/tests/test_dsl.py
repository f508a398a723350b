"""Parsing, canonical serialization and intrinsic resolution."""

from __future__ import annotations

import random

import pytest

from edmm.dsl import (
    P101_FORBIDDEN_FEATURE,
    P102_VERSION,
    P103_STRUCTURE,
    P104_UNKNOWN_KEY,
    P105_DUPLICATE_COMPONENT,
    P106_DUPLICATE_TYPE,
    P107_DUPLICATE_ENTRY,
    PARSE_CODES,
    SourceSet,
    parse,
    parse_text,
    resolve_intrinsics,
    serialize,
)
from edmm.errors import ReferenceCycleError

from generators import random_model

SCENARIO_COMPONENTS = (
    "Order App",
    "Tomcat",
    "Ubuntu LTS",
    "AWS EC2",
    "JMS 1.1 Queue",
    "Order Worker",
    "MongoDB Collection",
    "Azure Cosmos DB",
    "Admin App",
)


def _codes(result):
    return [d.code for d in result.diagnostics]


class TestParse:
    def test_minimal_document(self):
        result = parse_text(
            """
            edmm_version: 1
            name: minimal
            components:
              box:
                type: compute
            """
        )
        assert result.ok and not result.diagnostics
        model = result.model
        assert list(model.components) == ["box"]
        assert model.relations == []

    def test_sample_scenario_parses_clean(self, sample_path):
        result = parse(SourceSet.from_files([sample_path]))
        assert result.diagnostics == []
        for name in SCENARIO_COMPONENTS:
            assert name in result.model.components

    def test_duplicate_component_across_sources_names_both(self):
        first = "edmm_version: 1\nname: two\ncomponents:\n  tomcat:\n    type: web_server\n"
        second = "edmm_version: 1\ncomponents:\n  tomcat:\n    type: web_server\n"
        result = parse(SourceSet.of_pairs(("one.edmm.yaml", first), ("two.edmm.yaml", second)))
        assert not result.ok
        dup = [d for d in result.diagnostics if d.code == P105_DUPLICATE_COMPONENT]
        assert len(dup) == 1
        assert dup[0].source == "two.edmm.yaml"
        assert "one.edmm.yaml" in dup[0].message

    def test_missing_version(self):
        result = parse_text("name: unversioned\ncomponents: {}\n")
        assert P102_VERSION in _codes(result)

    def test_wrong_version(self):
        result = parse_text("edmm_version: 2\nname: future\n")
        assert P102_VERSION in _codes(result)

    def test_unknown_top_level_key(self):
        result = parse_text("edmm_version: 1\nname: odd\nextras: {}\n")
        assert P104_UNKNOWN_KEY in _codes(result)

    def test_anchors_and_aliases_rejected(self):
        result = parse_text(
            "edmm_version: 1\nname: aliased\nproperties:\n  a: &x prod\n  b: *x\n"
        )
        assert P101_FORBIDDEN_FEATURE in _codes(result)

    def test_explicit_tags_rejected(self):
        result = parse_text("edmm_version: 1\nname: tagged\nproperties:\n  a: !!str 12\n")
        assert P101_FORBIDDEN_FEATURE in _codes(result)

    def test_floats_rejected(self):
        result = parse_text(
            "edmm_version: 1\nname: floaty\ncomponents:\n  c:\n    type: web_server\n"
            "    properties:\n      port: 1.5\n"
        )
        assert P103_STRUCTURE in _codes(result)

    def test_duplicate_type_in_model(self):
        result = parse_text(
            "edmm_version: 1\nname: dupes\ncomponent_types:\n  mine:\n    extends: base\n"
            "---\n"
            "edmm_version: 1\ncomponent_types:\n  mine:\n    extends: compute\n"
        )
        assert P106_DUPLICATE_TYPE in _codes(result)

    def test_redefining_builtin_type_rejected(self):
        result = parse_text(
            "edmm_version: 1\nname: clash\ncomponent_types:\n  compute:\n    extends: base\n"
        )
        assert P106_DUPLICATE_TYPE in _codes(result)

    def test_duplicate_relation_name(self):
        result = parse_text(
            """
            edmm_version: 1
            name: rels
            components:
              a:
                type: compute
                relations:
                  - connects_to: b
                  - connects_to: b
              b:
                type: compute
            """
        )
        assert P107_DUPLICATE_ENTRY in _codes(result)

    def test_malformed_reference_is_an_error(self):
        result = parse_text(
            "edmm_version: 1\nname: refs\nproperties:\n  a: '${not closed'\n"
        )
        # A string that is not a full reference stays a literal; one that
        # uses the delimiters but has a bad inner form is rejected.
        assert result.ok
        result = parse_text("edmm_version: 1\nname: refs\nproperties:\n  a: '${Not Valid}'\n")
        assert P103_STRUCTURE in _codes(result)

    def test_multi_document_source_merges(self):
        result = parse_text(
            "edmm_version: 1\nname: split\ncomponents:\n  a:\n    type: compute\n"
            "---\n"
            "edmm_version: 1\ncomponents:\n  b:\n    type: compute\n"
        )
        assert result.ok
        assert sorted(result.model.components) == ["a", "b"]

    def test_all_codes_documented(self):
        assert PARSE_CODES == {
            "P100_SYNTAX",
            "P101_FORBIDDEN_FEATURE",
            "P102_VERSION",
            "P103_STRUCTURE",
            "P104_UNKNOWN_KEY",
            "P105_DUPLICATE_COMPONENT",
            "P106_DUPLICATE_TYPE",
            "P107_DUPLICATE_ENTRY",
            "P108_MODEL_NAME",
            "P109_BAD_IDENTIFIER",
        }


class TestSerialize:
    def test_sample_round_trip(self, sample_path):
        model = parse(SourceSet.from_files([sample_path])).expect()
        text = serialize(model)
        reparsed = parse_text(text).expect()
        assert reparsed == model

    def test_round_trip_preserves_property_kinds(self):
        model = parse_text(
            """
            edmm_version: 1
            name: kinds
            properties:
              flag: true
              count: 42
              label: "8080"
              parts: [a, b]
            """
        ).expect()
        reparsed = parse_text(serialize(model)).expect()
        props = reparsed.model_properties
        assert props["flag"].literal is True
        assert props["count"].literal == 42
        assert props["label"].literal == "8080"
        assert props["parts"].literal == ["a", "b"]

    def test_empty_model_serializes(self):
        model = parse_text("edmm_version: 1\nname: hollow\n").expect()
        text = serialize(model)
        assert "name: hollow" in text
        assert parse_text(text).expect() == model

    def test_reference_kept_verbatim(self, sample_path):
        model = parse(SourceSet.from_files([sample_path])).expect()
        text = serialize(model)
        assert "${region}" in text
        assert "eu-west-1" in text  # the model property itself, unresolved

    def test_generated_models_round_trip(self):
        for seed in range(25):
            model = random_model(seed, valid=False)
            text = serialize(model)
            reparsed = parse_text(text).expect()
            assert reparsed == model, f"seed {seed} failed round trip"


class TestResolveIntrinsics:
    def test_shared_model_property(self):
        model = parse_text(
            """
            edmm_version: 1
            name: shared
            properties:
              env: prod
            components:
              a:
                type: queue
                properties:
                  protocol: ${env}
              b:
                type: queue
                properties:
                  protocol: ${env}
            """
        ).expect()
        resolved = resolve_intrinsics(model)
        assert resolved.components["a"].properties["protocol"].literal == "prod"
        assert resolved.components["b"].properties["protocol"].literal == "prod"

    def test_two_step_cycle(self):
        model = parse_text(
            """
            edmm_version: 1
            name: cycle
            properties:
              a: ${b}
              b: ${a}
            """
        ).expect()
        with pytest.raises(ReferenceCycleError):
            resolve_intrinsics(model)

    def test_sample_matches_hand_substitution(self, sample_path):
        # Oracle: textual substitution of the one reference in the sample,
        # then a fresh parse.
        text = sample_path.read_text(encoding="utf-8")
        expected = parse_text(text.replace("${region}", "eu-west-1")).expect()
        resolved = resolve_intrinsics(parse_text(text).expect())
        assert resolved == expected

    def test_original_model_untouched(self, sample_model):
        resolve_intrinsics(sample_model)
        assert sample_model.components["AWS EC2"].properties["region"].is_reference


class TestTotalityAndMerging:
    def test_parse_never_raises_on_garbage(self, sample_path):
        rng = random.Random(20240817)
        base = sample_path.read_text(encoding="utf-8")
        corpus = [
            "",
            ":",
            "::::",
            "\x00\x01\x02",
            "a: b: c",
            "[unclosed",
            "- - - -",
            "\t\tindent",
            "{" * 50,
            "!!python/object:os.system ls",
        ]
        for _ in range(60):
            start = rng.randrange(0, len(base))
            end = rng.randrange(start, min(len(base), start + 400))
            chunk = base[start:end]
            mutation = rng.choice(("dup", "shuffle", "cut"))
            if mutation == "dup":
                chunk = chunk + "\n" + chunk
            elif mutation == "shuffle":
                lines = chunk.splitlines()
                rng.shuffle(lines)
                chunk = "\n".join(lines)
            corpus.append(chunk)
        for text in corpus:
            result = parse_text(text)
            assert result.model is not None or any(
                d.severity == "error" for d in result.diagnostics
            )

    def test_disjoint_sources_commute(self):
        types_doc = (
            "edmm_version: 1\nname: split\n"
            "component_types:\n  my_worker:\n    extends: software_component\n"
            "properties:\n  env: prod\n"
        )
        comps_doc = (
            "edmm_version: 1\nname: split\n"
            "components:\n  w:\n    type: my_worker\n  v:\n    type: compute\n"
        )
        one = parse(SourceSet.of_pairs(("a", types_doc), ("b", comps_doc))).expect()
        two = parse(SourceSet.of_pairs(("b", comps_doc), ("a", types_doc))).expect()
        assert one == two

    def test_source_names_must_be_unique(self):
        with pytest.raises(ValueError):
            SourceSet.of_pairs(("same", "a"), ("same", "b"))
