import pytest


def pytest_configure(config):
    config.acceptance = {}


@pytest.fixture
def criterion(request, capsys):
    """record(n, ok, detail): store an acceptance verdict and print it immediately."""
    def record(n: int, ok: bool, detail: str) -> bool:
        line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        request.config.acceptance[n] = line
        with capsys.disabled():
            print(f"\n{line}")
        return ok
    return record


def pytest_terminal_summary(terminalreporter, config):
    results = getattr(config, "acceptance", {})
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
