import math

import numpy as np
import pytest

from glauberlab import functionals as fn
from glauberlab import generator as gen
from glauberlab import models as md
from glauberlab import montecarlo as mc


# ---------------------------------------------------------------------------
# containers


def test_point_configuration_validation():
    ok = mc.PointConfiguration(points=((0.25, 0.75),), box=(1.0, 1.0))
    assert ok.n_points == 1
    assert ok.as_array().shape == (1, 2)
    empty = mc.PointConfiguration(points=(), box=(1.0, 1.0))
    assert empty.as_array().shape == (0, 2)
    with pytest.raises(ValueError):
        mc.PointConfiguration(points=((0.25,),), box=(1.0, 1.0))
    with pytest.raises(ValueError):
        mc.PointConfiguration(points=((1.5, 0.5),), box=(1.0, 1.0))
    with pytest.raises(ValueError):
        mc.PointConfiguration(points=((0.3, 0.3), (0.3, 0.3)), box=(1.0, 1.0))


def test_trajectory_validate_and_state_at(k2):
    traj = mc.Trajectory(times=[0.0, 1.0, 2.0], states=[0, 1, 0],
                         seed=0, model_id="x", t_end=3.0)
    traj.validate(k2.space)
    assert traj.n_jumps == 2
    assert traj.state_at(0.5) == 0
    assert traj.state_at(1.0) == 1  # right-continuous at jumps
    assert traj.state_at(2.5) == 0
    with pytest.raises(ValueError):
        traj.state_at(-0.1)
    with pytest.raises(ValueError):
        traj.state_at(3.1)

    with pytest.raises(ValueError, match="start at time 0"):
        mc.Trajectory(times=[0.5], states=[0], seed=0, model_id="x", t_end=1.0).validate()
    with pytest.raises(ValueError, match="strictly increasing"):
        mc.Trajectory(times=[0.0, 1.0, 1.0], states=[0, 1, 0],
                      seed=0, model_id="x", t_end=2.0).validate()
    with pytest.raises(ValueError, match="horizon"):
        mc.Trajectory(times=[0.0, 2.0], states=[0, 1],
                      seed=0, model_id="x", t_end=1.0).validate()
    # states 1 = (0,1) and 2 = (1,0) differ in two coordinates: not one move
    with pytest.raises(ValueError, match="one move"):
        mc.Trajectory(times=[0.0, 0.5], states=[1, 2],
                      seed=0, model_id="x", t_end=1.0).validate(k2.space)


def test_trajectory_validate_continuum_steps():
    box = (1.0, 1.0)
    a = mc.PointConfiguration(points=(), box=box)
    b = mc.PointConfiguration(points=((0.2, 0.2),), box=box)
    c = mc.PointConfiguration(points=((0.2, 0.2), (0.8, 0.8)), box=box)
    mc.Trajectory(times=[0.0, 1.0, 2.0], states=[a, b, c],
                  seed=0, model_id="x", t_end=3.0).validate()
    with pytest.raises(ValueError, match="one point"):
        mc.Trajectory(times=[0.0, 1.0], states=[a, c],
                      seed=0, model_id="x", t_end=2.0).validate()


# ---------------------------------------------------------------------------
# finite-space simulation


def test_simulate_finite_basic(k2):
    traj = mc.simulate_finite(k2, t_end=5.0, seed=7)
    traj.validate(k2.space)
    assert traj.times[0] == 0.0 and traj.states[0] == 0
    assert all(0 <= s < k2.space.n_states for s in traj.states)
    assert not traj.absorbed
    with pytest.raises(ValueError):
        mc.simulate_finite(k2, t_end=-1.0, seed=0)
    with pytest.raises(ValueError):
        mc.simulate_finite(k2, t_end=1.0, seed=0, init_state=99)


def test_simulate_finite_deterministic(loss2):
    a = mc.simulate_finite(loss2, t_end=8.0, seed=123)
    b = mc.simulate_finite(loss2, t_end=8.0, seed=123)
    assert a.times == b.times and a.states == b.states
    c = mc.simulate_finite(loss2, t_end=8.0, seed=124)
    assert c.times != a.times


def test_simulate_absorbing_state():
    # one route, zero capacity: the empty state is the whole space and
    # nothing can ever move
    asm = gen.assemble(md.loss_network_model(routes=[[0]], capacities=[0], intensity=1.0))
    traj = mc.simulate_finite(asm, t_end=4.0, seed=0)
    assert traj.absorbed
    assert traj.states == [0] and traj.times == [0.0]


def test_ensemble_spawn_contract(k2):
    trajs = mc.simulate_ensemble(k2, t_end=2.0, n_trajectories=5, seed=42)
    again = mc.simulate_ensemble(k2, t_end=2.0, n_trajectories=5, seed=42)
    assert all(a.times == b.times and a.states == b.states for a, b in zip(trajs, again))
    # trajectory i comes from child stream i of the root sequence
    child0 = np.random.SeedSequence(42).spawn(5)[0]
    solo = mc.simulate_finite(k2, t_end=2.0, seed=child0)
    assert solo.times == trajs[0].times and solo.states == trajs[0].states
    # distinct children produce distinct paths
    assert trajs[0].times != trajs[1].times


def test_equilibration_against_pi(k2):
    trajs = mc.simulate_ensemble(k2, t_end=10.0, n_trajectories=2500, seed=11)
    emp = mc.empirical_distribution(trajs, t=10.0, n_states=k2.space.n_states)
    assert emp.kind == "state"
    assert emp.freq.sum() == pytest.approx(1.0)
    assert np.all(np.abs(emp.freq - k2.pi) < 4.0 * np.maximum(emp.stderr, 1e-3))
    assert emp.tv_against(k2.pi) < 0.04
    # the empirical law obeys the total-variation/entropy comparison too
    h = fn.relative_entropy(emp.freq, k2.pi)
    assert 2.0 * emp.tv_against(k2.pi) ** 2 <= h + 1e-15


def test_single_site_gas_matches_birth_death_moments():
    # beta = 0 single site: births at rate z, unit per-particle deaths; from
    # an empty start the count at time t is Poisson(z(1 - e^{-t})) up to a
    # truncation error ~ z^25/25!
    z, t = 2.0, 1.2
    asm = gen.assemble(md.lattice_gas_model(shape=(1,), h_table={}, beta=0.0, z=z, n_max=25))
    trajs = mc.simulate_ensemble(asm, t_end=t, n_trajectories=2500, seed=3)
    counts = np.array([int(tr.state_at(t)) for tr in trajs])
    lam = mc.mm_infty_mean(0, z, t)
    assert lam == pytest.approx(z * (1 - math.exp(-t)), rel=1e-15)
    assert mc.mm_infty_var(0, z, t) == pytest.approx(lam, rel=1e-12)  # Poisson branch
    n = counts.shape[0]
    assert abs(counts.mean() - lam) < 4.0 * math.sqrt(lam / n)
    assert abs(counts.var(ddof=1) - lam) < 4.0 * lam * math.sqrt(2.0 / (n - 1))


def test_mm_infty_hand_values():
    assert mc.mm_infty_mean(3, 2.0, 0.0) == 3.0
    assert mc.mm_infty_mean(0, 2.0, 50.0) == pytest.approx(2.0)
    assert mc.mm_infty_var(5, 1.0, 0.0) == 0.0
    # pure death from n0: binomial thinning variance n0 p (1 - p)
    e = math.exp(-0.7)
    assert mc.mm_infty_var(6, 0.0, 0.7) == pytest.approx(6 * e * (1 - e), rel=1e-12)


# ---------------------------------------------------------------------------
# continuum simulation


def _free_spec(z=2.0):
    return md.ContinuumSpec(dimension=2, box=(1.0, 1.0), z=z, beta=0.0,
                            phi=md.hardcore_potential(0.15), support_radius=0.15)


def _hardcore_spec(R=0.15, z=1.0, periodic=False, boundary=None):
    return md.ContinuumSpec(dimension=2, box=(1.0, 1.0), z=z, beta=1.0,
                            phi=md.hardcore_potential(R), support_radius=R,
                            periodic=periodic, boundary=boundary,
                            potential_name=f"hardcore R={R}")


def _min_pair_dist(conf, periodic=False):
    X = conf.as_array()
    if X.shape[0] < 2:
        return math.inf
    box = np.asarray(conf.box)
    best = math.inf
    for i in range(X.shape[0] - 1):
        d = X[i + 1:] - X[i]
        if periodic:
            d = d - box * np.round(d / box)
        best = min(best, float(np.sqrt((d * d).sum(axis=1)).min()))
    return best


def test_continuum_deterministic_and_validated():
    spec = _hardcore_spec()
    a = mc.simulate_continuum(spec, t_end=5.0, seed=9)
    b = mc.simulate_continuum(spec, t_end=5.0, seed=9)
    assert a.times == b.times
    assert all(x.points == y.points for x, y in zip(a.states, b.states))
    a.validate()
    assert a.model_id == "hardcore R=0.15"


def test_continuum_initial_points():
    spec = _hardcore_spec()
    init = np.array([[0.2, 0.2], [0.8, 0.8]])
    traj = mc.simulate_continuum(spec, t_end=0.5, seed=1, init_points=init)
    assert traj.states[0].n_points == 2
    assert traj.state_at(0.0).points == (tuple(init[0]), tuple(init[1]))


def test_hardcore_exclusion_invariant_free_and_periodic():
    for periodic in (False, True):
        spec = _hardcore_spec(periodic=periodic)
        trajs = mc.simulate_continuum_ensemble(spec, t_end=10.0, n_trajectories=25,
                                               seed=17 + periodic)
        for tr in trajs:
            for conf in tr.states:
                assert _min_pair_dist(conf, periodic=periodic) > spec.support_radius


def test_free_gas_is_poisson_at_late_times():
    spec = _free_spec(z=2.0)
    trajs = mc.simulate_continuum_ensemble(spec, t_end=8.0, n_trajectories=1500, seed=5)
    emp = mc.empirical_distribution(trajs, t=8.0)
    assert emp.kind == "count"
    counts = np.array([tr.state_at(8.0).n_points for tr in trajs])
    lam = spec.z * spec.volume
    n = counts.shape[0]
    assert abs(counts.mean() - lam) < 4.0 * math.sqrt(lam / n)
    assert abs(counts.var(ddof=1) - lam) < 4.0 * lam * math.sqrt(2.0 / (n - 1))


def test_continuum_guards(caplog):
    with pytest.raises(ValueError):
        mc.simulate_continuum(_hardcore_spec(), t_end=-1.0, seed=0)
    with pytest.raises(ValueError, match="boundary"):
        mc.simulate_continuum(_hardcore_spec(periodic=True,
                                             boundary=np.array([[0.5, 0.5]])),
                              t_end=1.0, seed=0)
    # negative potential makes acceptance probabilities exceed one
    bad = md.ContinuumSpec(dimension=2, box=(1.0, 1.0), z=1.0, beta=1.0,
                           phi=md.step_potential(0.2, -0.5), support_radius=0.2)
    with pytest.raises(ValueError, match="negative"):
        mc.simulate_continuum(bad, t_end=1.0, seed=0)
    # unbounded support needs an explicit cutoff, and using one is logged
    soft = md.ContinuumSpec(dimension=2, box=(1.0, 1.0), z=1.0, beta=0.5,
                            phi=md.exponential_potential(1.0, 0.2))
    with pytest.raises(ValueError, match="cutoff"):
        mc.simulate_continuum(soft, t_end=1.0, seed=0)
    with caplog.at_level("WARNING", logger="glauberlab.montecarlo"):
        mc.simulate_continuum(soft, t_end=1.0, seed=0, cutoff=0.8)
    assert any("cutoff" in rec.message for rec in caplog.records)


# ---------------------------------------------------------------------------
# stationary-count oracle


def test_oracle_free_gas_is_truncated_poisson():
    res = mc.continuum_number_dist_oracle(_free_spec(z=2.0), n_max=5, tail_tol=0.05)
    lam = 2.0
    want = np.array([lam**n / math.factorial(n) for n in range(6)])
    want /= want.sum()
    assert np.abs(res.probs - want).max() < 1e-12
    assert res.tail_bound < 0.05 * res.partition_terms.sum()


def test_oracle_guards():
    with pytest.raises(ValueError):
        mc.continuum_number_dist_oracle(_free_spec(), n_max=6)
    with pytest.raises(ValueError, match="increase n_max"):
        mc.continuum_number_dist_oracle(_free_spec(z=10.0), n_max=2)


def test_oracle_matches_pair_closed_form_periodic():
    spec = _hardcore_spec(R=0.2, z=1.5, periodic=True)
    res = mc.continuum_number_dist_oracle(spec, n_max=5)
    want = mc.hardcore_pair_partition(spec, 0.2)
    total = res.partition_terms.sum()
    sigma = res.stderr[2] * total  # un-normalized quadrature error bar
    assert abs(res.partition_terms[2] - want) < 6.0 * sigma
    assert want == pytest.approx(0.5 * 1.5**2 * (1.0 - math.pi * 0.04), rel=1e-12)


def test_oracle_matches_pair_closed_form_free_1d():
    spec = md.ContinuumSpec(dimension=1, box=(2.0,), z=1.0, beta=1.0,
                            phi=md.hardcore_potential(0.5), support_radius=0.5)
    res = mc.continuum_number_dist_oracle(spec, n_max=5, tail_tol=0.05)
    want = mc.hardcore_pair_partition(spec, 0.5)
    assert want == pytest.approx(0.5 * 1.5**2, rel=1e-12)
    total = res.partition_terms.sum()
    assert abs(res.partition_terms[2] - want) < 6.0 * res.stderr[2] * total


def test_pair_partition_guards():
    with pytest.raises(ValueError, match="2R"):
        mc.hardcore_pair_partition(_hardcore_spec(periodic=True), 0.7)
    with pytest.raises(ValueError, match="dimension 1"):
        mc.hardcore_pair_partition(_hardcore_spec(periodic=False), 0.1)
    tight = md.ContinuumSpec(dimension=1, box=(1.0,), z=1.0, beta=1.0,
                             phi=md.hardcore_potential(1.5), support_radius=1.5)
    assert mc.hardcore_pair_partition(tight, 1.5) == 0.0


# ---------------------------------------------------------------------------
# empirical estimators and exports


def test_empirical_distribution_requires_data():
    with pytest.raises(ValueError):
        mc.empirical_distribution([], t=0.0)


def test_empirical_stderr_formula(k2):
    trajs = mc.simulate_ensemble(k2, t_end=1.0, n_trajectories=400, seed=2)
    emp = mc.empirical_distribution(trajs, t=1.0, n_states=3)
    assert emp.n_samples == 400
    want = np.sqrt(emp.freq * (1 - emp.freq) / 400)
    assert np.abs(emp.stderr - want).max() < 1e-15
    # padding: comparing against a longer reference vector still works
    assert emp.tv_against(np.array([0.2, 0.2, 0.2, 0.2, 0.2])) <= 1.0


def test_export_trajectory_roundtrip_finite(tmp_path, k2):
    traj = mc.simulate_finite(k2, t_end=3.0, seed=77)
    p = tmp_path / "t.csv"
    mc.export_trajectory_csv(str(p), traj)
    text = p.read_text()
    lines = text.strip().splitlines()
    assert lines[0] == "time,state_index"
    assert len(lines) == len(traj.times) + 1
    for line, t, s in zip(lines[1:], traj.times, traj.states):
        ts, ss = line.split(",")
        assert float(ts) == t and int(ss) == s
    mc.export_trajectory_csv(str(p), traj)
    assert p.read_text() == text
    assert "np.float" not in text


def test_export_trajectory_roundtrip_continuum(tmp_path):
    traj = mc.simulate_continuum(_hardcore_spec(z=3.0), t_end=4.0, seed=21)
    p = tmp_path / "c.csv"
    mc.export_trajectory_csv(str(p), traj)
    lines = p.read_text().strip().splitlines()
    assert lines[0] == "time,n_points,points"
    row = lines[-1].split(",")
    conf = traj.states[-1]
    assert int(row[1]) == conf.n_points
    if conf.n_points:
        got = [tuple(float(c) for c in pt.split(" ")) for pt in row[2].split(";")]
        assert tuple(got) == conf.points


def test_export_histogram(tmp_path, k2):
    trajs = mc.simulate_ensemble(k2, t_end=2.0, n_trajectories=50, seed=8)
    emp = mc.empirical_distribution(trajs, t=2.0, n_states=3)
    p = tmp_path / "h.csv"
    mc.export_histogram_csv(str(p), emp)
    text = p.read_text()
    lines = text.strip().splitlines()
    assert lines[0] == "value,frequency,stderr"
    assert len(lines) == 4
    total = sum(float(l.split(",")[1]) for l in lines[1:])
    assert total == pytest.approx(1.0)
    mc.export_histogram_csv(str(p), emp)
    assert p.read_text() == text
