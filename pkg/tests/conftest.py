import pytest

_ACCEPTANCE = {}


class AcceptanceLog:
    """Collects one verdict line per acceptance criterion."""

    def record(self, number, title, checks, elapsed, limit):
        failed = [name for name, ok in checks.items() if not ok]
        if elapsed >= limit:
            failed.append(f"runtime {elapsed:.3g} s over {limit:g} s")
        status = "FAIL" if failed else "PASS"
        line = f"criterion {number:2d} {status}  {title}  [{elapsed:.3g} s, limit {limit:g} s]"
        if failed:
            line += "  failed: " + "; ".join(failed)
        _ACCEPTANCE[number] = line
        print(line)
        return not failed, line


@pytest.fixture(scope="session")
def acceptance():
    return AcceptanceLog()


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        terminalreporter.write_line(_ACCEPTANCE[number])
