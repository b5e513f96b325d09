import functools

import pytest

from ssctraj.scenario_io import corpus, load_scenario, plan_scenario


@functools.lru_cache(maxsize=None)
def planned(path):
    """Plan a corpus scenario once per session; verification failures are returned, not raised."""
    return plan_scenario(load_scenario(path), raise_on_violation=False)


FEASIBLE = corpus("feasible")


@pytest.fixture(scope="session")
def corpus_results():
    return {p.stem: planned(p) for p in FEASIBLE}


# acceptance criterion -> (status, detail); filled by test_acceptance.py
ACCEPTANCE = {}


def record(criterion, title, ok, detail="", warn_only=False):
    status = "PASS" if ok else ("WARN" if warn_only else "FAIL")
    ACCEPTANCE[criterion] = (title, status, detail)
    print(f"criterion {criterion} [{status}] {title}: {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        title, status, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k} [{status}] {title}: {detail}")
