import math

import numpy as np
import pytest
import scipy.linalg

from glauberlab import generator as gen
from glauberlab import models as md
from glauberlab import statespace as ss


def test_k2_spectrum_and_measure():
    # one edge, states (00, 01, 10): two birth rates rho out of the empty
    # state, unit death rates back.  Eigenvalues of -Q are {0, 1, 1 + 2 rho}.
    for rho in (0.1, 1.0, 5.0):
        asm = gen.assemble(md.hardcore_graph_model(md.complete_graph(2), intensity=rho))
        vals = np.sort(scipy.linalg.eigvals(asm.Q.toarray()).real)
        assert np.allclose(vals, [-(1 + 2 * rho), -1.0, 0.0], atol=1e-12)
        w = np.array([1.0, rho, rho])
        assert np.allclose(asm.pi, w / w.sum(), atol=1e-14)
    # rho = 1 makes pi uniform
    asm = gen.assemble(md.hardcore_graph_model(md.complete_graph(2), intensity=1.0))
    assert np.allclose(asm.pi, 1 / 3)


def test_gas_measure_brute_force():
    beta, z = 0.7, 0.8
    m = md.lattice_gas_model(shape=(4,), h_table={(1,): 1.0}, beta=beta, z=z, n_max=3)
    space = ss.StateSpace.build(m)
    pi = gen.stationary_measure(m, space)
    logw = np.array(
        [
            m.counts_log_weight if False else
            (np.log(z) * eta.sum()
             - sum(math.lgamma(int(v) + 1) for v in eta)
             - beta * md.hamiltonian(m, eta))
            for eta in space.counts
        ]
    )
    w = np.exp(logw - logw.max())
    assert np.allclose(pi, w / w.sum(), rtol=1e-13)


def test_rate_rows_and_diagonal():
    asm = gen.assemble(md.hard_rods_model(grid=4, k=2, intensity=0.2))
    Q = asm.Q.toarray()
    # rows sum to zero, off-diagonal nonnegative
    assert np.abs(Q.sum(axis=1)).max() < 1e-12
    off = Q - np.diag(np.diag(Q))
    assert off.min() >= 0
    # diagonal equals minus the escape rate
    assert np.allclose(-np.diag(Q), asm.kernel.escape_rates(), atol=1e-14)
    # escape rate bounded by total intensity + total occupancy
    bound = asm.kernel.rates.sum(axis=0).max()
    assert np.diag(Q).min() >= -bound - 1e-12


@pytest.mark.parametrize(
    "model",
    [
        md.hardcore_graph_model(md.petersen_graph(), intensity=1 / 3),
        md.loss_network_model(routes=[[0], [1], [0, 1]], capacities=[2, 2], intensity=1.0),
        md.hard_rods_model(grid=4, k=2, intensity=0.1),
        md.lattice_gas_model(shape=(3,), h_table={(1,): 0.8}, beta=0.9, z=1.1, n_max=2),
        md.lattice_gas_model(shape=(3, 3), h_table={(0, 1): 0.5, (1, 0): 0.5},
                             beta=0.5, z=0.7, n_max=1, periodic=True),
        md.two_site_model(beta=0.5, z=1.0, n_max=8),
    ],
    ids=["petersen", "loss", "rods", "gas1d", "gas2d-periodic", "two-site"],
)
def test_detailed_balance_all_families(model):
    asm = gen.assemble(model)
    assert gen.check_reversibility(asm.kernel, asm.pi) < 1e-12


def test_detailed_balance_negative_control():
    asm = gen.assemble(md.two_site_model(beta=0.5, z=1.0, n_max=6))
    rates = asm.kernel.rates.copy()
    live = np.argwhere(rates > 0)
    mid, state = live[len(live) // 2]
    rates[mid, state] *= 1.5  # corrupt one live rate
    broken = gen.RateKernel(space=asm.kernel.space, rates=rates, model=asm.kernel.model)
    assert gen.check_reversibility(broken, asm.pi) > 1e-6


def test_loss_capacity_zero_is_single_state():
    m = md.loss_network_model(routes=[[0]], capacities=[0], intensity=1.0)
    asm = gen.assemble(m)
    assert asm.space.n_states == 1
    assert asm.Q.shape == (1, 1) and asm.Q.toarray()[0, 0] == 0.0


def test_two_site_large_beta_concentrates_on_empty():
    m = md.two_site_model(beta=50.0, z=1.0, n_max=4)
    asm = gen.assemble(m)
    i0 = asm.space.state_index(np.zeros(2, dtype=ss.COUNT_DTYPE))
    assert asm.pi[i0] > 1 - 1e-10


def test_blocked_moves_have_zero_rate():
    # restricted convention: the kernel stores rate 0 where the move is blocked
    asm = gen.assemble(md.hardcore_graph_model(md.complete_graph(2), intensity=2.0))
    img = asm.space.move_images()
    blocked = img == np.arange(asm.space.n_states)[None, :]
    assert (asm.kernel.rates[blocked] == 0).all()
    assert (asm.kernel.rates[~blocked] > 0).all()


def test_exports_roundtrip(tmp_path):
    asm = gen.assemble(md.hardcore_graph_model(md.star_graph(3), intensity=0.5))
    tri = tmp_path / "q.csv"
    picsv = tmp_path / "pi.csv"
    gen.export_sparse_triplets(asm.Q, str(tri))
    gen.export_pi_csv(asm.pi, asm.space.counts, str(picsv))

    lines = tri.read_text().strip().splitlines()
    coo = asm.Q.tocoo()
    assert len(lines) == coo.nnz
    # reconstruct and compare exactly (repr round-trips doubles)
    Q2 = np.zeros(asm.Q.shape)
    for ln in lines:
        r, c, v = ln.split()
        Q2[int(r), int(c)] = float(v)
    assert (Q2 == asm.Q.toarray()).all()

    plines = picsv.read_text().strip().splitlines()
    assert plines[0] == "state_index,configuration,pi"
    assert len(plines) - 1 == asm.space.n_states
    total = sum(float(ln.split(",")[2]) for ln in plines[1:])
    assert total == pytest.approx(1.0, abs=1e-12)

    # byte-identical on re-export
    before = tri.read_bytes()
    gen.export_sparse_triplets(asm.Q, str(tri))
    assert tri.read_bytes() == before


def test_assemble_respects_cap():
    with pytest.raises(ss.StateSpaceTooLarge):
        gen.assemble(md.hardcore_graph_model([], intensity=1.0, n_vertices=14), max_states=1000)
