import sys
from pathlib import Path

import pytest
from hypothesis import settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", max_examples=200, deadline=None)
settings.load_profile("default")

from qrepeater.config import SimConfig  # noqa: E402
from qrepeater.scheduling import SchedulerKind  # noqa: E402


@pytest.fixture
def small_config():
    """Four hops with enough qubits to finish quickly."""
    return SimConfig(
        hops=4,
        qubits_per_station=24,
        scheduler=SchedulerKind("greedy_bottom_up"),
        target_pairs=20,
        max_sim_time=5.0,
        seed=3,
    )


@pytest.fixture
def perfect_link():
    return {"p_success": 1.0, "base_fidelity": 1.0}


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
