import pytest

from fdpband import build_tables

# Fixed seeds so every statistical assertion in the suite is reproducible.
TABLE_SEED = 20240511


@pytest.fixture(scope="session")
def mc_tables():
    """Moderate-size tables shared across band and acceptance tests.

    d0 = 240 covers the d_infty scan (ceiling + 50) for every (m, alpha)
    combination the suite uses, up to m = 2000 at alpha = 0.1.
    """
    return build_tables(d0=240, gammas=(0.05, 0.01), n_samples=100_000,
                        seed=TABLE_SEED)


@pytest.fixture(scope="session")
def uniform_table(mc_tables):
    return mc_tables[0]


@pytest.fixture(scope="session")
def standardized_table(mc_tables):
    return mc_tables[1]


@pytest.fixture(scope="session")
def d1_uniform_table():
    """Table whose single (gamma=0.05, d=1) entry has the exact analytic law."""
    uniform, _ = build_tables(d0=1, gammas=(0.05,), n_samples=100_000, seed=7)
    return uniform
