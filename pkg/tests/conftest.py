import os

from hypothesis import HealthCheck, settings

settings.register_profile(
    "default",
    max_examples=40,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.register_profile("ci", max_examples=200, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


# acceptance lines ------------------------------------------------------------

import pytest  # noqa: E402

_ACCEPTANCE: dict[int, str] = {}


@pytest.fixture
def acceptance():
    """record(n, ok, detail) stores the PASS/FAIL line for criterion n."""

    def record(n: int, ok: bool, detail: str) -> bool:
        line = f"{'PASS' if ok else 'FAIL'} criterion {n:2d}: {detail}"
        _ACCEPTANCE[n] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    lines = [_ACCEPTANCE[n] for n in sorted(_ACCEPTANCE)]
    for line in lines:
        terminalreporter.write_line(line)
    path = os.environ.get("STRONGCONV_ACCEPTANCE_FILE")
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
