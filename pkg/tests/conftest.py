import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from sdbe.synth import benchmark_spec, generate

settings.register_profile("repo", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repo")


@pytest.fixture(scope="session")
def bench_world():
    return generate(benchmark_spec())


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance results, printed one line per criterion at the end of the run
_CRITERIA = {}


@pytest.fixture
def record():
    def _record(cid, ok, detail):
        _CRITERIA[cid] = (bool(ok), detail)
        return ok
    return _record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(_CRITERIA):
        ok, detail = _CRITERIA[cid]
        terminalreporter.write_line(f"criterion {cid}: {'PASS' if ok else 'FAIL'}  {detail}")
