import math

import numpy as np
import pytest
import scipy.linalg

from ottolab import (BadOrder, FokkerPlanckKind, GridMeasure, HeatFlowKind,
                     HeatOperator, MassNotConserved, NonPositive, PorousMediaKind,
                     StabilityViolation, continuity_residual, diff_ops, entropy,
                     from_density, from_values, grid_flow, heat_apply,
                     heat_flow_measure, renyi_entropy, uniform, velocity_potential,
                     von_mises_bump)


def test_measure_invariants():
    m = uniform(64)
    assert m.values.sum() * m.dx == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(NonPositive):
        GridMeasure(np.concatenate([[0.0], np.ones(63)]))
    with pytest.raises(MassNotConserved):
        GridMeasure(2.0 * np.ones(64))
    with pytest.raises(ValueError):
        GridMeasure(np.ones(48))      # not a power of two


def test_from_density_uniform_and_bump():
    assert np.array_equal(from_density(lambda x: np.ones_like(x), 32).values, np.ones(32))
    bump = von_mises_bump(0.3, 8.0, 128)
    assert bump.values.min() > 0
    assert bump.values.sum() * bump.dx == pytest.approx(1.0, abs=1e-12)


def test_from_density_clamps_then_normalizes():
    m = from_density(lambda x: np.array([2.0, 1e-30, 1e-30, 2.0]), 4)
    np.testing.assert_allclose(m.values, [2.0, 1e-12, 1e-12, 2.0], rtol=1e-9)
    with pytest.raises(NonPositive):
        from_density(lambda x: -np.ones_like(x), 8)


def test_entropy_examples():
    assert entropy(uniform(64)) == 0.0
    two_cell = GridMeasure(np.array([1.8, 0.2]))
    expected = (1.8 * math.log(1.8) + 0.2 * math.log(0.2)) / 2.0
    assert entropy(two_cell) == pytest.approx(expected, abs=1e-15)
    assert expected == pytest.approx(0.3681, abs=1e-4)


def test_entropy_nonnegative_iff_uniform():
    rng = np.random.default_rng(0)
    for _ in range(100):
        m = from_values(0.2 + rng.random(64))
        e = entropy(m)
        assert e >= 0.0
        if np.ptp(m.values) > 1e-9:
            assert e > 0.0
    assert entropy(uniform(128)) == 0.0


def test_entropy_decreases_under_heat_flow():
    m = von_mises_bump(0.4, 6.0, 128)
    vals = [entropy(heat_flow_measure(m, t)) for t in (0.0, 0.01, 0.05, 0.2)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert vals[-1] < 1e-3


def test_renyi_entropy():
    assert renyi_entropy(uniform(32), 2.0) == pytest.approx(1.0)
    assert renyi_entropy(GridMeasure(np.array([1.8, 0.2])), 2.0) == pytest.approx(1.64)
    m = von_mises_bump(0.5, 6.0, 128)
    vals = [renyi_entropy(heat_flow_measure(m, t), 2.0) for t in (0.0, 0.02, 0.1)]
    assert vals[0] > vals[1] > vals[2]
    with pytest.raises(BadOrder):
        renyi_entropy(m, 1.0)
    with pytest.raises(BadOrder):
        renyi_entropy(m, -1.0)


def test_heat_apply_identity_and_uniform():
    op = HeatOperator(64)
    v = von_mises_bump(0.2, 5.0, 64).values
    np.testing.assert_array_equal(op.apply(v, 0.0), v)
    np.testing.assert_allclose(op.apply(np.ones(64), 3.0), np.ones(64), atol=1e-13)


def test_heat_apply_eigenmode_decay():
    n = 128
    op = HeatOperator(n)
    x = (np.arange(n) + 0.5) / n
    mode = np.cos(2 * np.pi * x)
    lam1 = op.eigenvalues[1]
    for t in (1e-4, 1e-3):
        np.testing.assert_allclose(op.apply(mode, t), math.exp(t * lam1) * mode,
                                   atol=1e-12)


def test_heat_semigroup_property():
    op = HeatOperator(64)
    f = von_mises_bump(0.7, 7.0, 64).values
    lhs = op.apply(op.apply(f, 2e-4), 3e-4)
    rhs = op.apply(f, 5e-4)
    assert np.abs(lhs - rhs).max() <= 1e-10


def test_heat_matches_dense_matrix_exponential():
    # independent oracle: scipy expm of the assembled stencil on N = 16
    n = 16
    dx2 = (1.0 / n) ** 2
    stencil = (np.roll(np.eye(n), 1, axis=1) + np.roll(np.eye(n), -1, axis=1)
               - 2.0 * np.eye(n)) / dx2
    t = 3e-4
    dense = scipy.linalg.expm(t * stencil)
    op = HeatOperator(n)
    np.testing.assert_allclose(op.kernel_matrix(t), dense, atol=1e-10)
    assert op.kernel_matrix(t).min() > 0.0     # strict positivity


def test_heat_mass_conservation():
    m = von_mises_bump(0.3, 9.0, 256)
    out = heat_apply(256, m.values, 0.01)
    assert abs(out.mean() - 1.0) <= 1e-12


def test_diff_ops():
    n = 128
    x = (np.arange(n) + 0.5) / n
    const = diff_ops(np.ones(n))
    assert np.abs(const["grad"]).max() == 0.0
    assert np.abs(const["laplacian"]).max() == 0.0
    mode = np.cos(2 * np.pi * x)
    lam1 = -(2 - 2 * math.cos(2 * math.pi / n)) * n * n
    np.testing.assert_allclose(diff_ops(mode)["laplacian"], lam1 * mode, atol=1e-9)
    assert diff_ops(np.sin(7 * 2 * np.pi * x))["gamma"].min() >= 0.0


def test_velocity_potential_zero_rate():
    m = von_mises_bump(0.5, 5.0, 64)
    v = velocity_potential(m, np.zeros(64))
    assert np.abs(v.half).max() <= 1e-14


def test_velocity_potential_translation():
    # translating density at unit speed: d mu/dt = -d mu/dx
    n = 256
    m = von_mises_bump(0.5, 8.0, n)
    rate = -diff_ops(m.values)["grad"]
    v = velocity_potential(m, rate)
    core = m.values > 1e-2
    assert np.abs(v.at_centers[core] - 1.0).max() <= 2e-2
    res = continuity_residual(m, v, rate)
    assert np.abs(res).max() <= 1e-8


def test_velocity_potential_mass_check():
    m = uniform(32)
    with pytest.raises(MassNotConserved):
        velocity_potential(m, np.ones(32))


def test_grid_flow_heat_relaxes_to_uniform():
    m = von_mises_bump(0.3, 6.0, 64)
    res = grid_flow(HeatFlowKind(), m, 0.2, 5e-5)
    assert res.lyapunov.monotone
    assert entropy(res.snapshots[-1]) <= 1e-6
    assert np.abs(res.snapshots[-1].values - 1.0).max() <= 1e-3


def test_grid_flow_fokker_planck_gibbs_state():
    kind = FokkerPlanckKind(lambda x: np.cos(2 * np.pi * x))
    m = von_mises_bump(0.2, 4.0, 64)
    res = grid_flow(kind, m, 5.0, 9e-5)
    x = m.centers()
    gibbs = np.exp(-np.cos(2 * np.pi * x))
    gibbs /= gibbs.mean()
    assert np.abs(res.snapshots[-1].values - gibbs).max() <= 1e-3
    assert res.lyapunov.monotone


def test_grid_flow_porous_media_dissipates_order_two_entropy():
    kind = PorousMediaKind(2.0)
    m = von_mises_bump(0.5, 4.0, 64)
    res = grid_flow(kind, m, 0.02, 8e-6)
    vals = res.lyapunov.values
    assert np.all(np.diff(vals) < 0.0)


def test_grid_flow_stability_guard():
    with pytest.raises(StabilityViolation):
        grid_flow(HeatFlowKind(), von_mises_bump(0.5, 4.0, 64), 0.1, 1e-3)


def test_grid_flow_mass_conserved_each_snapshot():
    res = grid_flow(HeatFlowKind(), von_mises_bump(0.4, 6.0, 64), 0.05, 5e-5)
    for snap in res.snapshots:
        assert abs(snap.values.mean() - 1.0) <= 1e-12


def test_measure_csv(tmp_path):
    m = uniform(8)
    out = tmp_path / "measure.csv"
    m.to_csv(out, ["command=demo"])
    lines = out.read_text().splitlines()
    assert lines[1] == "cell_center,density"
    assert len(lines) == 10
