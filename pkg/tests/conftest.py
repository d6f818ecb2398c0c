import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

ACCEPTANCE_RESULTS: dict = {}


def criterion(label):
    """Tag an acceptance test so the summary prints one line for it."""
    def wrap(fn):
        fn._criterion = label
        return fn
    return wrap


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    label = getattr(getattr(item, "function", None), "_criterion", None)
    if label is not None and report.when == "call":
        ACCEPTANCE_RESULTS[label] = "PASS" if report.passed else "FAIL"
    elif label is not None and report.when == "setup" and report.failed:
        ACCEPTANCE_RESULTS[label] = "FAIL"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for label, status in ACCEPTANCE_RESULTS.items():
        terminalreporter.write_line(f"{status}  {label}")


def assert_kcl(result, bound=1e-9):
    """Every net's element pin currents must sum to ~zero.

    Distinct grounded nets share the reference conductor, which can
    carry current between them, so ground nets are pooled into one
    balance instead of being checked one by one.
    """
    states = result.solution.element_states
    ground_total = 0.0
    for net in result.netmap.nets:
        total = 0.0
        for t in net.terminals:
            state = states[t.component_id]
            if state.excluded:
                continue
            total += state.pin_currents.get(t.pin_name, 0.0)
        if net.is_ground:
            ground_total += total
            continue
        assert abs(total) <= bound, (
            f"net {net.net_id} violates KCL: {total:.3e} A")
    assert abs(ground_total) <= bound, (
        f"ground reference violates KCL: {ground_total:.3e} A")


def assert_power_balance(result, bound=1e-6):
    """Absorbed powers over all elements must sum to ~zero."""
    total = sum(state.power or 0.0
                for state in result.solution.element_states.values()
                if not state.excluded)
    assert abs(total) <= bound, f"power imbalance {total:.3e} W"
