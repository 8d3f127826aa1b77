import pytest

from psa_audit.engine import load_engine_config


@pytest.fixture(scope="session")
def config():
    """Packaged default engine config (catalog, decision matrix, weights)."""
    return load_engine_config()
