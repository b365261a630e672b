import numpy as np
import pytest

from dcbem import operators, shapes


@pytest.fixture(scope="session")
def sphere320():
    mesh = shapes.single(shapes.icosphere(50e-6, 4), "sphere")
    return mesh, operators.assemble(mesh)


@pytest.fixture(scope="session")
def sphere1280():
    mesh = shapes.single(shapes.icosphere(50e-6, 8), "sphere")
    return mesh, operators.assemble(mesh)


@pytest.fixture(scope="session")
def unit_cube():
    mesh = shapes.single(shapes.box((0, 0, 0), (1, 1, 1), (3, 3, 3)), "cube")
    return mesh, operators.assemble(mesh)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one summary line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: dict[int, str] = {}


def report_criterion(number: int, passed: bool, detail: str) -> str:
    line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
