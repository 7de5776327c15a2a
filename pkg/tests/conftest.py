import os

import pytest

from qkc.circuit import STD_FINITE
from qkc.synthesis import build_sk_cache, load_sk_cache


@pytest.fixture(scope="session")
def cache():
    path = os.environ.get("QKC_SK_CACHE")
    if path and os.path.exists(path):
        return load_sk_cache(path)
    return build_sk_cache(STD_FINITE, 12)


@pytest.fixture(scope="session")
def cache_file(cache, tmp_path_factory):
    from qkc.synthesis import save_sk_cache

    path = tmp_path_factory.mktemp("sk") / "c.skc"
    save_sk_cache(cache, path)
    return path


ACCEPTANCE_KEY = pytest.StashKey[dict]()
CRITERIA = 12


def pytest_configure(config):
    config.stash[ACCEPTANCE_KEY] = {}


@pytest.fixture
def criterion(request):
    """Call criterion(n, ok, detail) once per acceptance criterion."""
    results = request.config.stash[ACCEPTANCE_KEY]

    def record(n: int, ok: bool, detail: str) -> bool:
        results[n] = (bool(ok), detail)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, config):
    results = config.stash.get(ACCEPTANCE_KEY, {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in range(1, CRITERIA + 1):
        ok, detail = results.get(n, (False, "not run or crashed before reporting"))
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
