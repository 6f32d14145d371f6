# tests/conftest.py

import pytest

from src.core.primes import build_prime_table, cached_prime_table
from src.core.settings import SettingsManager


@pytest.fixture(scope="session")
def table():
    return cached_prime_table(10 ** 6)


@pytest.fixture(scope="session")
def small_table():
    return build_prime_table(10 ** 4)


@pytest.fixture
def clean_settings(tmp_path, monkeypatch):
    """Fresh settings singleton rooted in an empty working directory."""
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv("GCDLAB_OUTPUT_DIR", raising=False)
    SettingsManager.reset()
    yield SettingsManager()
    SettingsManager.reset()
