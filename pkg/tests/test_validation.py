"""Semantic validation: diagnostics, ordering, certification."""

from __future__ import annotations

import pytest

from edmm.dsl import parse_text
from edmm.errors import ValidationFailed
from edmm.validation import (
    DIAGNOSTIC_CODES,
    Diagnostic,
    assert_valid,
    render_machine,
    validate,
)

from generators import mutate, random_model


def _model(text: str):
    return parse_text(text).expect()


def _codes(diagnostics):
    return [d.code for d in diagnostics]


class TestValidate:
    def test_sample_scenario_is_clean(self, sample_model):
        assert validate(sample_model) == []

    def test_dangling_relation_names_ghost(self):
        model = _model(
            """
            edmm_version: 1
            name: ghosted
            components:
              a:
                type: compute
                relations:
                  - connects_to: ghost
            """
        )
        diagnostics = validate(model)
        dangling = [d for d in diagnostics if d.code == "E002_DANGLING_RELATION"]
        assert dangling and "ghost" in dangling[0].message

    def test_two_outgoing_host_edges(self):
        model = _model(
            """
            edmm_version: 1
            name: twohosts
            components:
              a:
                type: software_component
                relations:
                  - hosted_on: b
                  - hosted_on: c
              b:
                type: compute
              c:
                type: compute
            """
        )
        assert "E004_MULTIPLE_HOSTS" in _codes(validate(model))

    def test_missing_required_property(self):
        model = _model(
            """
            edmm_version: 1
            name: portless
            components:
              w:
                type: web_server
            """
        )
        diagnostics = validate(model)
        missing = [d for d in diagnostics if d.code == "E006_MISSING_REQUIRED_PROPERTY"]
        assert missing and missing[0].subject == "w" and "port" in missing[0].message

    def test_self_loop(self):
        model = _model(
            """
            edmm_version: 1
            name: loops
            components:
              a:
                type: compute
                relations:
                  - connects_to: a
            """
        )
        assert "E007_SELF_LOOP" in _codes(validate(model))

    def test_kind_mismatch(self):
        model = _model(
            """
            edmm_version: 1
            name: kinds
            components:
              w:
                type: web_server
                properties:
                  port: "eighty"
            """
        )
        assert "E005_KIND_MISMATCH" in _codes(validate(model))

    def test_unknown_component_type(self):
        model = _model(
            "edmm_version: 1\nname: unknown\ncomponents:\n  a:\n    type: warp_drive\n"
        )
        assert "E001_UNKNOWN_TYPE" in _codes(validate(model))

    def test_hosting_cycle_reported_once(self):
        model = _model(
            """
            edmm_version: 1
            name: cycle
            components:
              a:
                type: compute
                relations:
                  - hosted_on: b
              b:
                type: compute
                relations:
                  - hosted_on: a
            """
        )
        cycles = [d for d in validate(model) if d.code == "E003_HOSTING_CYCLE"]
        assert len(cycles) == 1

    def test_dependency_cycle(self):
        model = _model(
            """
            edmm_version: 1
            name: depcycle
            components:
              a:
                type: compute
                relations:
                  - connects_to: b
              b:
                type: compute
                relations:
                  - connects_to: a
            """
        )
        assert "E008_DEPENDENCY_CYCLE" in _codes(validate(model))

    def test_unresolved_and_cyclic_references(self):
        model = _model(
            """
            edmm_version: 1
            name: refs
            components:
              a:
                type: queue
                properties:
                  protocol: ${nowhere}
            """
        )
        assert "E009_UNRESOLVED_REFERENCE" in _codes(validate(model))
        model = _model(
            """
            edmm_version: 1
            name: refcycle
            properties:
              x: ${y}
              y: ${x}
            components:
              a:
                type: queue
                properties:
                  protocol: ${x}
            """
        )
        assert "E010_REFERENCE_CYCLE" in _codes(validate(model))

    def test_type_chain_cycle(self):
        model = _model(
            """
            edmm_version: 1
            name: typecycle
            component_types:
              ouro:
                extends: boros
              boros:
                extends: ouro
            components:
              a:
                type: ouro
            """
        )
        assert "E011_CYCLIC_TYPE_CHAIN" in _codes(validate(model))

    def test_adhoc_property_is_warning_only(self):
        model = _model(
            """
            edmm_version: 1
            name: adhoc
            components:
              a:
                type: compute
                properties:
                  favourite_colour: teal
                relations:
                  - connects_to: b
              b:
                type: compute
            """
        )
        diagnostics = validate(model)
        assert _codes(diagnostics) == ["W001_ADHOC_PROPERTY"]
        assert diagnostics[0].severity == "warning"

    def test_isolated_component_warns(self):
        model = _model("edmm_version: 1\nname: lonely\ncomponents:\n  a:\n    type: compute\n")
        assert "W002_UNREACHABLE_COMPONENT" in _codes(validate(model))

    def test_deterministic_and_sorted(self):
        model = _model(
            """
            edmm_version: 1
            name: messy
            components:
              z:
                type: warp_drive
              a:
                type: web_server
                relations:
                  - connects_to: ghost
            """
        )
        first = validate(model)
        second = validate(model)
        assert first == second
        assert first == sorted(first, key=Diagnostic.sort_key)
        assert all(d.code in DIAGNOSTIC_CODES for d in first)


class TestAssertValid:
    def test_sample_scenario_certifies(self, sample_model):
        token = assert_valid(sample_model)
        assert token.model is not None
        assert token.warnings == ()

    def test_hosting_cycle_refused(self):
        model = _model(
            """
            edmm_version: 1
            name: cycle
            components:
              a:
                type: compute
                relations:
                  - hosted_on: b
              b:
                type: compute
                relations:
                  - hosted_on: a
            """
        )
        with pytest.raises(ValidationFailed) as excinfo:
            assert_valid(model)
        assert any(d.code == "E003_HOSTING_CYCLE" for d in excinfo.value.diagnostics)

    def test_warnings_surface_on_the_token(self):
        model = _model(
            """
            edmm_version: 1
            name: warned
            components:
              a:
                type: compute
                properties:
                  favourite_colour: teal
                relations:
                  - connects_to: b
              b:
                type: compute
            """
        )
        token = assert_valid(model)
        assert [d.code for d in token.warnings] == ["W001_ADHOC_PROPERTY"]


class TestSoundness:
    def test_clean_mutants_keep_queries_total(self):
        # Narrow version of the fuzz acceptance criterion: every mutation
        # either keeps validation clean (and all queries working) or
        # produces at least one diagnostic.
        from edmm import model as m
        from edmm.dsl import parse_text as reparse, serialize

        for seed in range(80):
            base = random_model(seed)
            assert not [d for d in validate(base) if d.severity == "error"], f"seed {seed}"
            mutant, kind = mutate(base, seed * 31 + 7)
            diagnostics = validate(mutant)
            if any(d.severity == "error" for d in diagnostics):
                continue
            for comp in mutant.components.values():
                m.resolve_component_type(mutant, comp.type)
                m.effective_properties(mutant, comp)
                m.hosting_stack(mutant, comp)
            m.deployment_order(mutant)
            assert reparse(serialize(mutant)).expect() == mutant


class TestRendering:
    def test_machine_format_is_tab_separated(self):
        diagnostics = [Diagnostic("error", "E001_UNKNOWN_TYPE", "a", "has\tweird\nsubject")]
        line = render_machine(diagnostics)
        record = line.split("\t")
        assert record[0] == "diagnostic"
        assert record[1] == "error"
        assert record[2] == "E001_UNKNOWN_TYPE"
        assert len(record) == 5
