import logging

import pytest

# criterion number -> list of (passed, detail); filled by test_acceptance.
# ``passed`` is None for informational lines that do not affect the verdict.
ACCEPTANCE: dict[int, list[tuple[bool | None, str]]] = {}


@pytest.fixture
def quiet_training_warnings():
    # refits over windows that contain missed outliers log a warning each
    logging.disable(logging.WARNING)
    yield
    logging.disable(logging.NOTSET)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for crit in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[crit]
        ok = all(p is not False for p, _ in parts)
        tr.write_line(f"criterion {crit}: {'PASS' if ok else 'FAIL'}")
        for passed, detail in parts:
            tag = "info" if passed is None else ("pass" if passed else "FAIL")
            tr.write_line(f"    [{tag}] {detail}")
