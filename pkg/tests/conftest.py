"""Shared fixtures: synthetic frames, an in-process mock endpoint and configs that use it."""

from pathlib import Path

import pytest

from fcmir.config import load_config
from fcmir.mockserver import MockEndpoint
from fcmir.models import EndpointConfig
from fcmir.synth import build_keyframe_corpus, write_corpus

FIXTURES_DIR = Path(__file__).parent / "fixtures"


@pytest.fixture
def mock_responses():
    """Fixture file of endpoint answers shaped like real model output."""
    return FIXTURES_DIR / "mock_responses.json"


@pytest.fixture
def mock_endpoint():
    """Running mock endpoint; tests queue responses on it."""
    with MockEndpoint() as mock:
        yield mock


@pytest.fixture
def endpoint_config(mock_endpoint):
    """Endpoint settings pointing at the mock, with instant retries."""
    return EndpointConfig(
        base_url=mock_endpoint.base_url,
        model="mock-vision",
        max_retries=2,
        backoff_s=0.0,
        timeout_s=10.0,
    )


@pytest.fixture(scope="session")
def synth_source(tmp_path_factory):
    """One synthetic trajectory written to disk as a frame directory (2 fps)."""
    root = tmp_path_factory.mktemp("synth")
    written = write_corpus(build_keyframe_corpus(1, seed=3), root)
    return written[0] / "frames"


@pytest.fixture
def synth_config(mock_endpoint):
    """Effective config for synthetic trajectories served by the mock endpoint."""
    return load_config(
        env={},
        overrides={
            "sampling": {"fps": 2.0, "interval_s": 0.5},
            "endpoint": {
                "base_url": mock_endpoint.base_url,
                "model": "mock-vision",
                "backoff_s": 0.0,
                "max_retries": 1,
            },
        },
    )
