import pytest

from walkmax import DriftWalkSpec, LatticePmf

LAZY = {-1: 0.3, 0: 0.5, 1: 0.2}
SYM_LAZY = {-1: 0.25, 0: 0.5, 1: 0.25}
WALK2 = {-2: 0.35, -1: 0.1, 0: 0.2, 1: 0.2, 2: 0.15}


def walk(probs, span=1):
    return DriftWalkSpec.from_pmf(LatticePmf(span=span, probs=probs))


@pytest.fixture
def lazy():
    return walk(LAZY)


@pytest.fixture
def sym_lazy_pmf():
    return LatticePmf(span=1, probs=SYM_LAZY)


@pytest.fixture
def walk2():
    return walk(WALK2)
