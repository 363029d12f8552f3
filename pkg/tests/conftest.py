import numpy as np
import pytest

from glauberlab import generator as gen
from glauberlab import models as md


@pytest.fixture(scope="session")
def k2():
    """Hardcore on a single edge, rho=1: 3 states, everything checkable by hand."""
    return gen.assemble(md.hardcore_graph_model(md.complete_graph(2), intensity=1.0))


@pytest.fixture(scope="session")
def star4():
    return gen.assemble(md.hardcore_graph_model(md.star_graph(4), intensity=0.5))


@pytest.fixture(scope="session")
def loss2():
    # two links of capacity 2, routes {0}, {1}, {0,1} -> 14 states
    return gen.assemble(
        md.loss_network_model(routes=[[0], [1], [0, 1]], capacities=[2, 2], intensity=1.0)
    )


@pytest.fixture(scope="session")
def two_site15():
    return gen.assemble(md.two_site_model(beta=0.5, z=1.0, n_max=15))


@pytest.fixture(scope="session")
def gas_chain():
    # 4-site chain, nearest-neighbour repulsion, small truncation: 256 states
    return gen.assemble(
        md.lattice_gas_model(shape=(4,), h_table={(1,): 1.0}, beta=0.7, z=0.8, n_max=3)
    )


def random_positive(n, rng, spread=1.5):
    return np.exp(rng.uniform(-spread, spread, n))
