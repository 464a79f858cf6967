"""Shared fixtures and the acceptance-criteria terminal summary."""

import numpy as np
import pytest

# one human-readable line per acceptance criterion, printed after the run
CRITERIA = {
    1: "perpetual put threshold and value match the closed form",
    2: "cancellable put: penalty cap, root condition, three-branch value",
    3: "duality suite: taut string == fixpoint == four sup/inf variants",
    4: "envelope oracles agree; idempotence and monotonicity exact",
    5: "Monte Carlo put value and first-passage Laplace agree",
    6: "saddle inequalities hold under common random numbers",
    7: "smooth fit at the put boundary and corridor contact edges",
    8: "Nash failure detected; contact to the boundary restores Nash",
}

_RESULTS = {}


def pytest_runtest_logreport(report):
    if report.when != "call":
        return
    name = report.nodeid.rsplit("::", 1)[-1]
    if name.startswith("test_criterion_"):
        try:
            num = int(name.split("_")[2])
        except (IndexError, ValueError):
            return
        _RESULTS[num] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for num in sorted(CRITERIA):
        outcome = _RESULTS.get(num)
        if outcome is None:
            continue
        tag = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(
            "[%s] criterion %d: %s" % (tag, num, CRITERIA[num]))


def random_corridor(rng, n):
    """Anchored piecewise-linear corridor (pinched ends) on a random grid."""
    y = np.cumsum(rng.uniform(0.2, 1.5, n))
    y -= y[0] - rng.uniform(0.0, 1.0)
    mid = rng.normal(0.0, 1.0, n)
    half = rng.uniform(0.05, 1.2, n)
    wg = mid - half
    wh = mid + half
    wg[0] = wh[0] = mid[0]
    wg[-1] = wh[-1] = mid[-1]
    return y, wg, wh


@pytest.fixture(scope="session")
def gbm_spec():
    from stopgame import GBM, DiffusionSpec
    return DiffusionSpec(kind=GBM, rate=0.05, drift=0.05, sigma=0.3,
                         interval=(0.0, float("inf")))


@pytest.fixture(scope="session")
def put_payoff():
    from stopgame import PayoffSpec
    return PayoffSpec.from_sources("max(K - x, 0)", constants={"K": 100.0})
