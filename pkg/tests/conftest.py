import csv

import pytest


@pytest.fixture(scope="session")
def wdbc_csv(tmp_path_factory):
    """WDBC in UCI layout (id, diagnosis, 30 features), from scikit-learn's copy."""
    datasets = pytest.importorskip("sklearn.datasets")
    d = datasets.load_breast_cancer()
    path = tmp_path_factory.mktemp("data") / "wdbc.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        for i, (row, target) in enumerate(zip(d.data, d.target)):
            w.writerow([i + 1, "M" if target == 0 else "B"] + [repr(float(v)) for v in row])
    return path


_REPORT = pytest.StashKey[list]()


@pytest.fixture
def report(request):
    """Record one acceptance line; the lines are echoed in the terminal summary."""
    lines = request.config.stash.setdefault(_REPORT, [])

    def record(number, title, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} ({detail})"
        print(line)
        lines.append((number, line))
        return ok
    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_REPORT, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
