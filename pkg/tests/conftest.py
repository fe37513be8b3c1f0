import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile(
    "ci",
    max_examples=120,
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.filter_too_much, HealthCheck.too_slow],
)
settings.load_profile("ci")


@pytest.fixture(scope="session", autouse=True)
def warm_kernel():
    """Trigger the JIT compile once so timed sections measure the algorithm."""
    import measpec as m

    P = m.build_potential({"domain": [0.0, 1.0], "atoms": [{"x": 0.5, "w": 1.0}]})
    m.count_below(P, (0.0, 1.0), 1.0)
    yield
