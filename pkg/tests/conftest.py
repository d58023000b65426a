import pytest

_ACCEPTANCE = []


@pytest.fixture()
def criterion():
    """Record one acceptance line: ``criterion(k, ok, detail)``."""

    def record(k, ok, detail):
        _ACCEPTANCE.append((k, bool(ok), detail))
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k, ok, detail in sorted(_ACCEPTANCE, key=lambda x: x[0]):
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
