"""Shared pytest plumbing.

The acceptance tests push one line per check into RESULTS; printing them in
the terminal summary keeps the pass/fail table visible even though pytest
captures stdout inside tests.
"""

RESULTS: list[tuple[float, str]] = []


def record_check(num: float, label: str, ok: bool, detail: str = "") -> None:
    tag = "PASS" if ok else "FAIL"
    line = f"[{tag}] check {num:>4}: {label}"
    if detail:
        line += f"  [{detail}]"
    RESULTS.append((num, line))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if RESULTS:
        terminalreporter.section("acceptance checks")
        for _, line in sorted(RESULTS):
            terminalreporter.write_line(line)
