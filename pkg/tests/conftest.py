import re

import pytest

_VERDICTS: list[str] = []


@pytest.fixture
def verdict():
    """Record one ``CRITERION n: PASS|FAIL`` line; the lines are repeated in the terminal summary."""
    def record(label, ok, detail):
        line = f"CRITERION {label}: {'PASS' if ok else 'FAIL'}  {detail}"
        print(line)
        _VERDICTS.append(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_VERDICTS, key=lambda s: (int(re.search(r"\d+", s).group()), s)):
            terminalreporter.write_line(line)
