import contextlib

ACCEPTANCE = {}


@contextlib.contextmanager
def criterion(number, title):
    """Record a PASS or FAIL line for an acceptance criterion; failures still raise."""
    try:
        yield
    except BaseException as exc:
        ACCEPTANCE[number] = f"criterion {number:>2} FAIL  {title}  ({type(exc).__name__}: {str(exc).splitlines()[0] if str(exc) else ''})"
        raise
    ACCEPTANCE[number] = f"criterion {number:>2} PASS  {title}"


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance")
        for number in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[number])
