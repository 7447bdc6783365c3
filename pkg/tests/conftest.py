"""Shared fixtures: the fixed-seed corpus and a full pipeline run."""

from __future__ import annotations

from pathlib import Path

import pytest

from fixture_config import FIXTURE_SYNTH, build_fixture
from tripmill.pipeline import PipelineConfig


@pytest.fixture(scope="session")
def fixture_run(tmp_path_factory) -> PipelineConfig:
    base = tmp_path_factory.mktemp("fixture")
    return build_fixture(base)
