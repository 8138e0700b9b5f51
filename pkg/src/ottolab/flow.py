"""Gradient-flow integration  dx/dt = -F'(x)  and its energy identities."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainViolation, NonFinite
from .potential import Potential, _as_points
from .reporting import write_csv

MAX_HALVINGS = 40


@dataclass(frozen=True)
class FlowTrajectory:
    """Uniform-in-time trajectory of the gradient flow (last step may be shorter)."""

    times: np.ndarray          # (K+1,), starting at 0
    states: np.ndarray         # (K+1, dim)
    potential: Potential

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    def free_energy(self) -> np.ndarray:
        return np.asarray(self.potential._value(self.states))

    def fisher_info(self) -> np.ndarray:
        g = self.potential._grad(self.states)
        return np.einsum("ij,ij->i", g, g)

    def lyapunov_defect(self) -> float:
        """Largest increase of F along the trajectory (should be ~0)."""
        f = self.free_energy()
        return float(np.max(np.diff(f), initial=0.0))

    def to_csv(self, path, header_lines=()):
        cols = {"t": self.times}
        for j in range(self.states.shape[1]):
            cols[f"x_{j + 1}"] = self.states[:, j]
        cols["F"] = self.free_energy()
        cols["I"] = self.fisher_info()
        write_csv(path, cols, header_lines)


def _rk4_step(F: Potential, x: np.ndarray, h: float) -> np.ndarray:
    # raises DomainViolation if any stage leaves the domain
    with np.errstate(over="ignore", invalid="ignore"):
        k1 = -F.grad(x)
        k2 = -F.grad(x + 0.5 * h * k1)
        k3 = -F.grad(x + 0.5 * h * k2)
        k4 = -F.grad(x + h * k3)
        return x + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def _advance(F: Potential, x: np.ndarray, h: float, depth: int = 0) -> np.ndarray:
    """One macro-step of size h; on domain exit the step is halved, up to 40 times."""
    if depth > MAX_HALVINGS:
        raise DomainViolation("step rejected after 40 halvings; trajectory hits the boundary")
    try:
        y = _rk4_step(F, x, h)
        if not np.isfinite(y).all():
            raise NonFinite("state overflowed during gradient-flow integration")
        F.require_inside(y)
        return y
    except DomainViolation:
        mid = _advance(F, x, 0.5 * h, depth + 1)
        return _advance(F, mid, 0.5 * h, depth + 1)


def evolve(F: Potential, x0, t_end: float, dt: float) -> FlowTrajectory:
    """Integrate the gradient flow with the classical 4th-order one-step scheme.

    The grid is uniform with step ``dt``; if ``t_end`` is not a multiple of
    ``dt`` the final step is shortened.  The semigroup property holds to
    integrator order.
    """
    pts, _ = _as_points(x0, F.dim)
    x = pts[0].copy()
    F.require_inside(x)
    if t_end < 0:
        raise ValueError("t_end must be >= 0")
    if t_end > 0 and dt <= 0:
        raise ValueError("dt must be > 0")
    if t_end > 0 and dt > t_end:
        raise ValueError("dt must not exceed t_end")
    times = [0.0]
    states = [x.copy()]
    t = 0.0
    while t < t_end - 1e-15 * max(1.0, t_end):
        h = min(dt, t_end - t)
        x = _advance(F, x, h)
        t = min(t + h, t_end)
        times.append(t)
        states.append(x.copy())
    return FlowTrajectory(np.asarray(times), np.asarray(states), F)


def _grid_integral(times: np.ndarray, values: np.ndarray) -> float:
    """4th-order composite quadrature on a uniform grid (3/8 rule absorbs odd counts).

    A final shortened interval, if present, falls back to the trapezoid rule.
    """
    n = len(times) - 1
    if n == 0:
        return 0.0
    h = times[1] - times[0]
    irregular = np.flatnonzero(np.abs(np.diff(times) - h) > 1e-12 * max(h, 1.0))
    uniform = int(irregular.min()) if irregular.size else n
    total = 0.0
    m = uniform
    if m >= 3 and m % 2 == 1:                      # 3/8 rule on the first 3 intervals
        total += 3 * h / 8 * (values[0] + 3 * values[1] + 3 * values[2] + values[3])
        start = 3
    else:
        start = 0
    m_rem = m - start
    if m_rem >= 2:                                 # composite Simpson on an even count
        v = values[start:m + 1]
        total += h / 3 * (v[0] + v[-1] + 4 * np.sum(v[1:-1:2]) + 2 * np.sum(v[2:-1:2]))
    elif m_rem == 1:
        total += 0.5 * h * (values[start] + values[start + 1])
    for k in range(uniform, n):                    # shortened tail, trapezoid
        total += 0.5 * (times[k + 1] - times[k]) * (values[k] + values[k + 1])
    return float(total)


@dataclass(frozen=True)
class DissipationReport:
    lhs: float      # (1/2) int (|dx/dt|^2 + |F'|^2) dr, using dx/dt = -F'
    rhs: float      # F(x_s) - F(x_t)
    gap: float      # lhs - rhs, O(dt^4) for smooth F


def dissipation_identity(traj: FlowTrajectory) -> DissipationReport:
    """Energy-production balance along a computed trajectory.

    Along the flow |dx/dt|^2 = |F'|^2, so the left-hand side reduces to the
    time integral of the squared gradient, evaluated with 4th-order quadrature
    to match the integrator's order.
    """
    fisher = traj.fisher_info()
    lhs = _grid_integral(traj.times, fisher)
    f = traj.free_energy()
    rhs = float(f[0] - f[-1])
    return DissipationReport(lhs=lhs, rhs=rhs, gap=lhs - rhs)
