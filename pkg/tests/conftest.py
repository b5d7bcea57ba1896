import random

import pytest

def pytest_configure(config):
    # verdict lines recorded by the acceptance tests, echoed after the run so
    # they survive pytest's output capture
    config._acceptance_lines = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)


@pytest.fixture
def check(request):
    """Acceptance verdict helper: records one PASS/FAIL line, then asserts."""

    def _check(num, ok, detail):
        status = "PASS" if ok else "FAIL"
        line = f"acceptance criterion {num:2d}: {status} ({detail})"
        request.config._acceptance_lines.append(line)
        print(line)
        assert ok, f"criterion {num}: {detail}"

    return _check

from sbp.trace_io import SyntheticScenario, Trace, TraceRecord, gen_correlated


@pytest.fixture
def correlated_trace():
    """20k-record correlated trace: B repeats A's outcome one block later."""
    return gen_correlated(
        SyntheticScenario(kind="correlated", length=20_000, seed=11, noise_branches=2)
    )


def random_trace(n, n_pcs=4, seed=0):
    rng = random.Random(seed)
    pcs = [0x400000 + 4 * i for i in range(n_pcs)]
    return Trace(
        [TraceRecord(rng.choice(pcs), rng.random() < 0.5) for _ in range(n)],
        phase_id=f"rand_{seed}",
    )
