import pytest

from reichlab.lattice import Window, make_quasilattice
from reichlab.partition import SurfaceModel, build_partition


@pytest.fixture(scope="session")
def small_model():
    w = Window.centered(3)
    return SurfaceModel("punctured-window", w, make_quasilattice(1, 0.125, w))


@pytest.fixture(scope="session")
def small_atoms(small_model):
    return build_partition(small_model, 1e-8)


@pytest.fixture(scope="session")
def disk_model():
    return SurfaceModel("disk", Window.centered(5))


@pytest.fixture(scope="session")
def disk_atoms(disk_model):
    return build_partition(disk_model, 1e-8)



ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.fixture(scope="session")
def acceptance_log(request):
    return request.config.stash.setdefault(ACCEPTANCE_KEY, [])


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
