import sys
from pathlib import Path

import pytest

from qbd2d.model import model_m1, model_m2, save_model
from qbd2d.oracle import build_truncated, hitting_measure, occupation_measure

# make tests/scalar_oracle.py importable as a plain module
sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture(scope="session")
def m1():
    return model_m1()


@pytest.fixture(scope="session")
def m2():
    return model_m2()


@pytest.fixture(scope="session")
def m1_file(tmp_path_factory, m1):
    path = tmp_path_factory.mktemp("models") / "m1.json"
    save_model(m1, path)
    return path


@pytest.fixture(scope="session")
def fields():
    """Occupation and hitting fields keyed by (model name, kind, N), computed once."""
    cache = {}
    models = {"m1": model_m1(), "m2": model_m2()}

    def get(name, kind, N):
        key = (name, kind, N)
        if key not in cache:
            op = build_truncated(models[name], N)
            solve = occupation_measure if kind == "occupation" else hitting_measure
            cache[key] = solve(op)
        return cache[key]

    return get


def pytest_terminal_summary(terminalreporter):
    for name, module in list(sys.modules.items()):
        if name.endswith("test_acceptance") and hasattr(module, "summary_lines"):
            if module.RESULTS:
                terminalreporter.section("acceptance criteria")
                for line in module.summary_lines():
                    terminalreporter.write_line(line)
            break
