import math

import numpy as np
import pytest

import switchsplit as ss


def two_mode():
    return ss.Model(
        d=1,
        m=2,
        drift_family="constant",
        c=[[-0.5], [1.5]],
        rate_family="constant",
        lambda_bar=[[0.0, 0.1], [1.0, 0.0]],
        x0=[0.0],
        scale0=0.0,
        theta_probs=[0.9, 0.1],
    )


def test_exports():
    assert ss.__version__
    for name in ("Model", "Levels", "run_splitting", "filter_step", "replicate"):
        assert name in ss.__all__
        assert hasattr(ss, name)


def test_project_simplex():
    assert np.array_equal(ss.project_simplex([0.3, 0.7]), [0.3, 0.7])
    assert np.array_equal(ss.project_simplex([1.2, -0.2]), [1.0, 0.0])
    assert np.array_equal(ss.project_simplex([-1.0, -2.0]), [0.5, 0.5])
    out = ss.project_simplex([0.5, 0.5, 0.5])
    assert out == pytest.approx([1 / 3] * 3)


def test_model_evaluation():
    model = two_mode()
    assert model.d == 1
    assert model.m == 2
    assert model.drift([0.0], 0) == pytest.approx([-0.5])
    assert model.drift([2.0], 1) == pytest.approx([1.5])
    rates = model.rates([0.0])
    assert rates.shape == (2, 2)
    assert np.allclose(rates.sum(axis=1), 0.0)
    assert rates[0, 1] == 0.1
    assert model.max_exit_rate_bound() == 1.0
    with pytest.raises(ValueError):
        ss.Model(d=1, m=2, c=[[0.0]], theta_probs=[1.0, 0.0],
                 lambda_bar=[[0.0, 0.0], [0.0, 0.0]], x0=[0.0])


def test_levels():
    levels = ss.Levels(phi="coordinate", coord_index=0,
                       thresholds=[0.5, 1.0], horizon=1.0)
    assert levels.n == 2
    assert levels.threshold(2) == 1.0
    assert levels.phi([0.7]) == 0.7
    with pytest.raises(ValueError):
        ss.Levels(thresholds=[2.0, 1.0], horizon=1.0)
    with pytest.raises(ValueError):
        ss.Levels(thresholds=[1.0], horizon=-1.0)


def test_marginal_trajectory_filters():
    model = two_mode()
    traj = ss.simulate_path_marginal(model, h=0.01, T=1.0, seed=123)
    K = ss.grid_steps(1.0, 0.01) + 1
    assert traj.path.points.shape == (1, K)
    assert traj.filters.shape == (2, K)
    sums = traj.filters.sum(axis=0)
    assert np.max(np.abs(sums - 1.0)) <= 1e-12
    assert traj.filters.min() >= 0.0
    assert np.array_equal(traj.filters[:, 0], [0.9, 0.1])

    again = ss.simulate_path_marginal(model, h=0.01, T=1.0, seed=123)
    assert np.array_equal(traj.path.points, again.path.points)
    assert np.array_equal(traj.filters, again.filters)
    other = ss.simulate_path_marginal(model, h=0.01, T=1.0, seed=124)
    assert not np.array_equal(traj.path.points, other.path.points)


def test_filter_step_vertex_absorption():
    null = ss.Model(d=1, m=2, c=[[0.6], [-0.6]],
                    lambda_bar=[[0.0, 0.0], [0.0, 0.0]],
                    x0=[0.0], theta_probs=[1.0, 0.0])
    pi = np.array([1.0, 0.0])
    out = ss.filter_step(null, [0.0], [0.3], pi, 0.01)
    assert np.array_equal(out, pi)


def test_hits_and_segment_filtering():
    model = two_mode()
    levels = ss.Levels(thresholds=[0.2, 0.5], horizon=1.0)
    traj = ss.simulate_path_marginal(model, h=0.01, T=1.0, seed=7)
    rep = ss.detect_hits(traj.path, levels)
    assert rep.levels == 2
    assert rep.hit_step[0] == 0
    assert len(rep.segments) == 3
    for k in (1, 2):
        if rep.reached(k):
            assert rep.stop_step[k] >= rep.stop_step[k - 1]
            point = traj.path.points[:, rep.stop_step[k]]
            assert levels.phi(point) >= levels.threshold(k)
            assert ss.potential(rep.segments[k], k, levels) == 1

    pi = np.array([0.9, 0.1])
    whole = ss.segment_filter_update(model, pi, traj.path)
    assert np.array_equal(whole, traj.filters[:, -1])


def test_run_splitting_deterministic():
    model = two_mode()
    levels = ss.Levels(thresholds=[0.6, 1.1], horizon=1.0)
    a = ss.run_splitting("weighted", model, levels, n_particles=500,
                         dynamics="marginal", h=0.01, seed=2024)
    b = ss.run_splitting("weighted", model, levels, n_particles=500,
                         dynamics="marginal", h=0.01, seed=2024)
    assert a.estimate == b.estimate
    assert a.p_hat == b.p_hat
    assert a.survivors == b.survivors
    assert 0.0 <= a.estimate <= 1.0
    assert a.scheme == "weighted"
    assert a.dynamics == "marginal"
    assert a.extinct_at is None
    assert math.isclose(a.estimate, a.p_hat[0] * a.p_hat[1], rel_tol=1e-12)

    paths = ss.run_splitting("resampled", model, levels, n_particles=200,
                             dynamics="joint", h=0.01, seed=11, record_paths=True)
    assert len(paths.survivor_paths) == paths.survivors[-1]
    for p in paths.survivor_paths:
        assert p.shape[0] == 1
        assert p.max() >= 1.1

    with pytest.raises(ValueError):
        ss.run_splitting("fancy", model, levels, n_particles=100,
                         dynamics="joint", h=0.01, seed=1)


def test_crude_and_replicate():
    model = two_mode()
    levels = ss.Levels(thresholds=[1.0], horizon=1.0)
    crude = ss.crude_mc(model, levels, n_paths=2000, dynamics="joint", h=0.01, seed=5)
    assert crude.n_paths == 2000
    assert crude.estimate == crude.hits / 2000
    assert 0.0 < crude.estimate < 1.0

    report = ss.replicate(model, levels, schemes=["weighted"], dynamics=["joint"],
                          n_particles=200, h=0.01, R=3, base_seed=99)
    assert len(report.cells) == 1
    cell = report.cells[0]
    assert cell.replicates == 3
    assert len(cell.results) == 3
    assert cell.mean == pytest.approx(sum(r.estimate for r in cell.results) / 3)
    assert cell.results[0].seed == ss.replicate_seed(99, 0)
