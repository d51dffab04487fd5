"""
Pytest configuration and shared fixtures for the Skia simulator.

Generated workloads are session-scoped; every other fixture builds fresh
objects per test.
"""

import os

import pytest

from src.core.config import SimConfig, get_settings
from src.isa.models import IsaKind
from src.trace.generator import generate_synthetic
from src.trace.params import make_gen_params


@pytest.fixture(autouse=True)
def isolated_environment(monkeypatch, tmp_path):
    """Run every test without SKIA_ variables, .env files or cached settings."""
    for key in list(os.environ):
        if key.startswith("SKIA_"):
            monkeypatch.delenv(key, raising=False)
    monkeypatch.chdir(tmp_path)
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture
def sim_config() -> SimConfig:
    """Default simulator configuration."""
    return SimConfig()


@pytest.fixture
def small_sim_config() -> SimConfig:
    """Scaled-down structures that make BTB capacity misses frequent."""
    return SimConfig(btb_entries=512, usbb_entries=256, rsbb_entries=1024)


@pytest.fixture(scope="session")
def hot_cold_workload():
    """SVL hot-cold workload, 20K instructions."""
    return generate_synthetic(make_gen_params("hot-cold", instruction_count=20000))


@pytest.fixture(scope="session")
def hot_cold_x86_workload():
    """x86 hot-cold workload, 20K instructions."""
    return generate_synthetic(make_gen_params("hot-cold", instruction_count=20000, isa=IsaKind.X86_SUBSET))


@pytest.fixture(scope="session")
def no_shadow_workload():
    """Workload without any code in shadow regions."""
    return generate_synthetic(make_gen_params("no-shadow", instruction_count=20000))
