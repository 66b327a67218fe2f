import math

import numpy as np
import pytest

from zetaflow.counting import enumerate_by_budget
from zetaflow.interval import ExpandingMarkovMap, GridFunction, IntervalSystem
from zetaflow.suspension import FlowObservable, SuspensionSystem
from zetaflow.symbolic import CylinderFunction, Subshift

SQRT2 = math.sqrt(2.0)


def random_model(seed: int, n_symbols: int = 2, depth: int = 2):
    """Full shift with random depth-`depth` psi and roof, plus a random k."""
    rng = np.random.default_rng(seed)
    shift = Subshift.full(n_symbols)
    shape = (n_symbols,) * depth
    r = CylinderFunction(shift, rng.uniform(0.5, 2.0, shape), positive=True)
    psi = CylinderFunction(shift, rng.uniform(-0.5, 0.5, shape))
    k = CylinderFunction(shift, rng.uniform(-1.0, 1.0, shape))
    return SuspensionSystem.build(shift, r, psi), k


@pytest.fixture(scope="session")
def full2():
    return Subshift.full(2)


@pytest.fixture(scope="session")
def golden():
    return Subshift.golden_mean()


@pytest.fixture(scope="session")
def lattice_system(full2):
    return SuspensionSystem.build(full2, CylinderFunction.constant(full2, 1.0, positive=True))


@pytest.fixture(scope="session")
def golden_system(golden):
    return SuspensionSystem.build(golden, CylinderFunction.constant(golden, 1.0, positive=True))


@pytest.fixture(scope="session")
def nonlattice_system(full2):
    r = CylinderFunction.from_symbols(full2, [1.0, SQRT2], positive=True)
    return SuspensionSystem.build(full2, r)


@pytest.fixture(scope="session")
def indicator0(full2):
    return FlowObservable.from_table(full2, [1.0, 0.0])


@pytest.fixture(scope="session")
def nonlattice_table(nonlattice_system):
    return enumerate_by_budget(nonlattice_system, 16.0)


@pytest.fixture(scope="session")
def doubling():
    return ExpandingMarkovMap.doubling()


@pytest.fixture(scope="session")
def doubling_system(doubling):
    return IntervalSystem.build(doubling, [[1.0]])


@pytest.fixture(scope="session")
def doubling_nonlattice(doubling):
    return IntervalSystem.build(doubling, [[1.0, 0.0, 0.25]])


@pytest.fixture(scope="session")
def cubic_k(doubling):
    return GridFunction.from_function(doubling, lambda x: 1.0 + x + x ** 3)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(mod.RESULTS, key=lambda s: s[6:8]):
        terminalreporter.write_line(line)
