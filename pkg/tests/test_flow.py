import math

import numpy as np
import pytest

from ottolab import (Box, CustomPotential, DomainViolation, NegLog, NonFinite,
                     Polynomial, Quadratic, dissipation_identity, evolve)


def test_quadratic_flow_is_exponential_decay():
    F = Quadratic(1.0)
    traj = evolve(F, 4.0, math.log(2.0), 1e-3)
    assert traj.final_state[0] == pytest.approx(2.0, abs=1e-8)
    for t in (0.5, 1.0, 2.0, 5.0):
        traj = evolve(F, 1.0, t, 1e-3)
        assert abs(traj.final_state[0] - math.exp(-t)) <= 1e-8


def test_identity_at_time_zero():
    traj = evolve(NegLog(1.0), 0.7, 0.0, 1e-2)
    assert traj.times.shape == (1,)
    assert traj.states[0, 0] == 0.7


def test_neglog_fourth_order_convergence():
    # closed form: the flow of -log x is x(t) = sqrt(x0^2 + 2t)
    F = NegLog(1.0)
    exact = math.sqrt(1.0 + 2 * 0.5)
    e1 = abs(evolve(F, 1.0, 0.5, 1e-2).final_state[0] - exact)
    e2 = abs(evolve(F, 1.0, 0.5, 5e-3).final_state[0] - exact)
    assert e1 / e2 >= 12.0          # 4th order would give 16
    ref = evolve(F, 1.0, 0.5, 1e-4).final_state[0]
    assert abs(evolve(F, 1.0, 0.5, 1e-2).final_state[0] - ref) <= 1e-8


def test_semigroup_property():
    F = Quadratic(1.0)
    inner = evolve(F, 1.5, 0.2, 1e-3).final_state
    two_step = evolve(F, inner, 0.3, 1e-3).final_state
    one_step = evolve(F, 1.5, 0.5, 1e-3).final_state
    assert abs(two_step[0] - one_step[0]) <= 1e-8


def test_free_energy_is_nonincreasing():
    for F, x0 in [(Quadratic(1.0), 3.0), (NegLog(1.0), 0.5),
                  (Polynomial([[0.0, 0.0, -0.5, 0.0, 0.25]]), 0.3)]:
        traj = evolve(F, x0, 2.0, 1e-3)
        f = traj.free_energy()
        assert traj.lyapunov_defect() <= 1e-10 * (1.0 + np.abs(f).max())


def test_dissipation_identity_quadratic():
    # int_0^1 e^{-2r} dr = (1 - e^-2)/2 = F(1) - F(e^-1)
    rep = dissipation_identity(evolve(Quadratic(1.0), 1.0, 1.0, 1e-3))
    assert rep.rhs == pytest.approx(0.5 * (1 - math.exp(-2.0)), abs=1e-10)
    assert abs(rep.gap) <= 1e-8


def test_dissipation_identity_at_critical_point():
    rep = dissipation_identity(evolve(Quadratic(1.0), 0.0, 1.0, 1e-2))
    assert rep.lhs == 0.0 and rep.rhs == 0.0 and rep.gap == 0.0


def test_dissipation_gap_fourth_order():
    quartic = Polynomial([[0.0, 0.0, 0.0, 0.0, 0.25]])
    g1 = dissipation_identity(evolve(quartic, 1.0, 1.0, 1e-2)).gap
    g2 = dissipation_identity(evolve(quartic, 1.0, 1.0, 5e-3)).gap
    assert abs(g1 / g2) >= 12.0     # target 16 (4th order)


def test_domain_exit_rejected_then_raises():
    # flow of F(x) = x on (0, inf) moves left at unit speed and hits 0
    leftward = CustomPotential(lambda x: float(x[0]), dim=1,
                               grad=lambda x: np.ones(1),
                               hess_vec=lambda x, v: np.zeros(1),
                               domain=Box((0.0,), (math.inf,)))
    with pytest.raises(DomainViolation):
        evolve(leftward, 0.5, 1.0, 0.25)


def test_overflow_raises_nonfinite():
    # F = -x^2 gives dx/dt = 2x: exponential growth overflows
    blowup = Polynomial([[0.0, 0.0, -1.0]])
    with pytest.raises(NonFinite):
        evolve(blowup, 1.0, 400.0, 1.0)


def test_argument_validation():
    F = Quadratic(1.0)
    with pytest.raises(ValueError):
        evolve(F, 1.0, -1.0, 0.1)
    with pytest.raises(ValueError):
        evolve(F, 1.0, 1.0, 2.0)    # dt > t_end
    with pytest.raises(ValueError):
        evolve(F, 1.0, 1.0, 0.0)


def test_trajectory_csv(tmp_path):
    traj = evolve(Quadratic(1.0, dim=2), [1.0, -1.0], 0.1, 0.01)
    out = tmp_path / "traj.csv"
    traj.to_csv(out, ["format_version=1"])
    lines = out.read_text().splitlines()
    assert lines[0] == "# format_version=1"
    assert lines[1] == "t,x_1,x_2,F,I"
    assert len(lines) == 2 + len(traj.times)
