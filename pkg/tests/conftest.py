import re

import pytest


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    """Acceptance criteria print their own PASS lines; mirror failures."""
    outcome = yield
    report = outcome.get_result()
    if report.when == "call" and report.failed and "test_acceptance" in item.nodeid:
        m = re.search(r"criterion_(\d+)", item.name)
        if m:
            print(f"\n[criterion {m.group(1)}] FAIL: see traceback")
