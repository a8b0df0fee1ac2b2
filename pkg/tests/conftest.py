import sys
from functools import lru_cache
from pathlib import Path

import numpy as np
import pytest

from bislant.catalog import builtin, load_scenario
from bislant.oneill import OneillContext
from bislant.submersion import scenario_samples

DATA = Path(__file__).parent / "data"


@lru_cache(maxsize=None)
def cached_builtin(sid):
    return builtin(sid)


@lru_cache(maxsize=None)
def cached_octx(sid):
    return OneillContext(cached_builtin(sid).submersion)


def samples_for(sid, n=6, seed=42):
    return scenario_samples(cached_builtin(sid).submersion, n, seed)


@pytest.fixture(scope="session")
def twisted():
    return load_scenario(DATA / "twisted-r4.json")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(k for k in mod.RESULTS if k):
        terminalreporter.write_line(mod.line(n, *mod.RESULTS[n]))
    if 0 in mod.RESULTS:
        terminalreporter.write_line("note: " + mod.RESULTS[0][1])
