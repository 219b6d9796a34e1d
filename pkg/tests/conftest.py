import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile(
    "ci", max_examples=60, derandomize=True,
    suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("ci")

from scopenorm.index import PositionalIndex  # noqa: E402


@pytest.fixture
def toy_index() -> PositionalIndex:
    """The two-document collection used throughout the worked examples."""
    return PositionalIndex.from_documents([
        ("d1", "a b a c".split()),
        ("d2", "a b".split()),
    ])
