import random
from fractions import Fraction

import pytest

from vmetric.space import FiniteMetricSpace

_criteria = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(num, title): acceptance criterion")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    crit = getattr(report, "criterion", None)
    if crit is not None:
        _criteria[crit[0]] = (crit[1], report.outcome)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is not None:
        rep.criterion = mark.args


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_criteria):
        title, outcome = _criteria[num]
        verdict = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"criterion {num:>2}: {verdict}  {title}")


# -- generators shared by the test modules -----------------------------------

def random_ultrametric(rng: random.Random, n: int) -> FiniteMetricSpace:
    """Random agglomeration with nondecreasing rational merge heights."""
    clusters = [[i] for i in range(n)]
    D = [[Fraction(0)] * n for _ in range(n)]
    h = Fraction(0)
    while len(clusters) > 1:
        if h == 0 or rng.random() < 0.7:
            h += Fraction(rng.randint(1, 6), rng.choice([1, 2, 3, 4]))
        k = rng.randint(2, min(3, len(clusters)))
        pick = sorted(rng.sample(range(len(clusters)), k), reverse=True)
        merged = []
        for idx in pick:
            grp = clusters.pop(idx)
            for x in grp:
                for y in merged:
                    D[x][y] = D[y][x] = h
            merged += grp
        clusters.append(merged)
    return FiniteMetricSpace([f"q{i}" for i in range(n)], D)


def random_metric(rng: random.Random, n: int, denominators=(1, 2, 3)) -> FiniteMetricSpace:
    """Shortest-path closure of random positive rational weights."""
    W = [[Fraction(0)] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            W[i][j] = W[j][i] = Fraction(rng.randint(1, 9), rng.choice(denominators))
    for k in range(n):
        for i in range(n):
            for j in range(n):
                if W[i][k] + W[k][j] < W[i][j]:
                    W[i][j] = W[i][k] + W[k][j]
    return FiniteMetricSpace([f"q{i}" for i in range(n)], W)


@pytest.fixture
def rng():
    return random.Random(20240611)
