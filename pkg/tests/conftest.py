import re

import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=50)
settings.load_profile("default")

_CRITERIA: dict[int, tuple[str, str]] = {}


@pytest.fixture(scope="session")
def systems_dir(tmp_path_factory):
    from cocyclelab.systems import write_builtin_files

    d = tmp_path_factory.mktemp("systems")
    write_builtin_files(d)
    return d


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    m = re.match(r"test_criterion_(\d+)", item.name)
    if not m or item.module.__name__.rsplit(".", 1)[-1] != "test_acceptance":
        return
    n = int(m.group(1))
    title = (item.function.__doc__ or "").strip().splitlines()[0] if item.function.__doc__ else item.name
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        _CRITERIA[n] = ("PASS" if rep.passed else "FAIL", title)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        status, title = _CRITERIA[n]
        terminalreporter.write_line(f"criterion {n:2d}: {status}  {title}")
