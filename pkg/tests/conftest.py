import pytest

from anisosplit import expand, presets, split_symbols


@pytest.fixture(scope="session")
def het_medium():
    return presets.heterogeneous_full()


@pytest.fixture(scope="session")
def hom_medium():
    return presets.homogeneous_anisotropic()


@pytest.fixture(scope="session")
def het_expansion_pair():
    # order-2 eta=1 pair on the documented heterogeneous medium; several
    # modules exercise the same pair, so build it once per session
    m = presets.heterogeneous_full()
    return expand(m, 1, 1, 2), expand(m, -1, 1, 2)


@pytest.fixture(scope="session")
def het_split(het_expansion_pair):
    plus, minus = het_expansion_pair
    return split_symbols(plus, minus)


@pytest.fixture(scope="session")
def hom_split():
    m = presets.homogeneous_anisotropic()
    return split_symbols(expand(m, 1, 0, 2), expand(m, -1, 0, 2))
