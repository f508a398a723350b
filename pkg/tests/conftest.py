"""Shared fixtures: the bundled sample model and a small chain model that
every bundled transformer accepts."""

from __future__ import annotations

from pathlib import Path

import pytest

import edmm
from edmm.dsl import SourceSet, parse, parse_text
from edmm.validation import assert_valid

CHAIN_MODEL = """
edmm_version: 1
name: chain
components:
  app:
    type: web_application
    artifacts:
      - name: app-image
        path: registry.example.com/app:2.0
        kind: container-image
    operations:
      install: scripts/app_install.sh
    relations:
      - hosted_on: middleware
  middleware:
    type: web_server
    properties:
      port: 9090
    operations:
      install: scripts/mw_install.sh
    relations:
      - hosted_on: vm
  vm:
    type: compute
    properties:
      os_family: debian
"""


@pytest.fixture(scope="session")
def sample_path() -> Path:
    return edmm.sample_model_path()


@pytest.fixture()
def sample_model(sample_path):
    return parse(SourceSet.from_files([sample_path])).expect()


@pytest.fixture()
def sample_validated(sample_model):
    return assert_valid(sample_model)


@pytest.fixture()
def chain_model():
    return parse_text(CHAIN_MODEL).expect()


@pytest.fixture()
def chain_validated(chain_model):
    return assert_valid(chain_model)


@pytest.fixture()
def chain_artifact_root(tmp_path) -> Path:
    scripts = tmp_path / "scripts"
    scripts.mkdir()
    (scripts / "app_install.sh").write_text("#!/bin/sh\necho app\n")
    (scripts / "mw_install.sh").write_text("#!/bin/sh\necho middleware\n")
    return tmp_path
