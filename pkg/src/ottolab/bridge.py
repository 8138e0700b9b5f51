"""Discrete bridge problem on the circle by iterative proportional fitting.

The reference kernel is the exact discrete heat kernel exp(eps * Lap_h) from
:mod:`ottolab.measure` rather than a sampled Gaussian: with it, the product
form of the optimal coupling, the marginal identities and the dual-value
algebra hold exactly at the discrete level, and the two kernels coincide as
eps, dx -> 0.

Cost conventions.  The static cost ``sch`` is eps times the relative entropy
of the optimal coupling w.r.t. the reference.  The bundle's ``a_ent`` is
defined by the exact rearrangement  a_ent = sch - eps (Ent(mu) + Ent(nu)) / 2,
and the dynamic-route integral is scaled to those same units, i.e.

    dynamic_action = int_0^1 [ |dmu/ds|^2 / 4 + (eps^2/4) int |grad log mu|^2 dmu ] ds,

half the coefficient pair used for the point-space action in
:mod:`ottolab.interp`.  The flow-contraction verifier works in the doubled
(point-space-matching) units 2 * a_ent, for which the contraction statement
carries the dimensional coefficient 1/n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CutViolation, KernelDegenerate, NoConvergence
from .ineq import InequalityReport
from .measure import GridMeasure, HeatOperator, entropy
from .reporting import write_csv

DEFAULT_TOL = 1e-12
MAX_SINKHORN_ITER = 100_000


@dataclass(frozen=True)
class BridgePotentials:
    """Log-domain fitting potentials: the optimal coupling is e^a_i K_ij e^b_j dx^2."""

    a: np.ndarray
    b: np.ndarray
    eps: float
    marginal_error: float
    iterations: int


def _marginal_log_errors(op: HeatOperator, a, b, eps, mu, nu):
    e1 = np.abs(a + np.log(op.apply(np.exp(b), eps)) - np.log(mu.values)).max()
    e2 = np.abs(b + np.log(op.apply(np.exp(a), eps)) - np.log(nu.values)).max()
    return max(float(e1), float(e2))


def sinkhorn(mu: GridMeasure, nu: GridMeasure, eps: float, tol: float = DEFAULT_TOL,
             max_iter: int = MAX_SINKHORN_ITER) -> BridgePotentials:
    """Alternating log-domain marginal fitting, deterministic start b = 0.

    The gauge freedom (a + c, b - c) is fixed by enforcing sum(a) = sum(b).
    Convergence is guaranteed by strict positivity of the heat kernel; if the
    iteration cap is hit, the best iterate is attached to the error.
    """
    if eps <= 0:
        raise ValueError("eps must be > 0")
    if mu.n_cells != nu.n_cells:
        raise ValueError("marginals must share a grid")
    op = HeatOperator(mu.n_cells)
    log_mu = np.log(mu.values)
    log_nu = np.log(nu.values)
    b = np.zeros(mu.n_cells)
    err = math.inf
    for it in range(1, max_iter + 1):
        a = log_mu - np.log(op.apply(np.exp(b), eps))
        b = log_nu - np.log(op.apply(np.exp(a), eps))
        err = _marginal_log_errors(op, a, b, eps, mu, nu)
        if err <= tol:
            shift = (b.sum() - a.sum()) / (2.0 * mu.n_cells)
            return BridgePotentials(a + shift, b - shift, eps, err, it)
    shift = (b.sum() - a.sum()) / (2.0 * mu.n_cells)
    raise NoConvergence(f"marginal log-error {err:.3e} > {tol:.1e} after {max_iter} sweeps",
                        best=BridgePotentials(a + shift, b - shift, eps, err, max_iter))


@dataclass(frozen=True)
class EntropicInterpolation:
    """Marginal flow of the optimal bridge with its velocity potentials."""

    s_grid: np.ndarray
    measures: list                 # S+1 GridMeasure
    phi: np.ndarray                # (S+1, N) scalar potentials
    phi_grad: np.ndarray           # (S+1, N) centered-difference gradient of phi
    eps: float

    @property
    def n_cells(self) -> int:
        return self.measures[0].n_cells

    @property
    def n_segments(self) -> int:
        return len(self.measures) - 1

    def density_matrix(self) -> np.ndarray:
        return np.stack([m.values for m in self.measures])

    def to_csv(self, path, header_lines=()):
        dens = self.density_matrix()
        cols = {"s": np.repeat(self.s_grid, self.n_cells),
                "cell_center": np.tile(self.measures[0].centers(), len(self.measures)),
                "density": dens.ravel(),
                "phi": self.phi.ravel()}
        write_csv(path, cols, header_lines)


def _centered_grad(rows: np.ndarray, n: int) -> np.ndarray:
    return (np.roll(rows, -1, axis=-1) - np.roll(rows, 1, axis=-1)) * (n / 2.0)


def entropic_interpolation(pots: BridgePotentials, mu: GridMeasure, nu: GridMeasure,
                           S: int) -> EntropicInterpolation:
    """Measures mu_s = P_{eps s} e^a * P_{eps (1-s)} e^b on S+1 knots.

    The product is renormalized only to absorb <= 1e-12 rounding: with the
    exact spectral kernel the discrete mass is conserved identically.
    """
    if S < 2:
        raise ValueError("need S >= 2")
    op = HeatOperator(mu.n_cells)
    ea, eb = np.exp(pots.a), np.exp(pots.b)
    s_grid = np.linspace(0.0, 1.0, S + 1)
    measures, phis = [], []
    for s in s_grid:
        log_f = np.log(op.apply(ea, pots.eps * s))
        log_g = np.log(op.apply(eb, pots.eps * (1.0 - s)))
        dens = np.exp(log_f + log_g)
        measures.append(GridMeasure(dens / dens.mean()))
        phis.append(pots.eps * (log_g - log_f))
    phi = np.stack(phis)
    return EntropicInterpolation(s_grid=s_grid, measures=measures, phi=phi,
                                 phi_grad=_centered_grad(phi, mu.n_cells),
                                 eps=pots.eps)


def schrodinger_cost(pots: BridgePotentials, mu: GridMeasure, nu: GridMeasure) -> float:
    """eps * H(optimal coupling | reference), reduced to marginal sums in log domain."""
    dx = mu.dx
    return float(pots.eps * (np.sum(pots.a * mu.values) + np.sum(pots.b * nu.values)) * dx)


def dynamic_action(interp: EntropicInterpolation) -> float:
    """Velocity-plus-fluctuation integral along the interpolation, in ``a_ent`` units."""
    n = interp.n_cells
    dens = interp.density_matrix()
    glog = _centered_grad(np.log(dens), n)
    kinetic = np.sum(interp.phi_grad ** 2 * dens, axis=1) / n
    fluct = np.sum(glog ** 2 * dens, axis=1) / n
    integrand = 0.25 * kinetic + 0.25 * interp.eps ** 2 * fluct
    return float(np.trapezoid(integrand, interp.s_grid))


@dataclass(frozen=True)
class DualReport:
    """Fitting-potential dual value with its exact-algebra identity check."""

    value: float
    identity_gap: float
    perturbed_values: list
    is_supremum: bool


def kantorovich_dual(pots: BridgePotentials, mu: GridMeasure, nu: GridMeasure,
                     a_ent: float, n_perturbations: int = 5) -> DualReport:
    """Dual functional eps (int log h dnu - int log P_eps h dmu) at the optimal h.

    At h = e^b the value equals a_ent + (eps/2)(Ent(nu) - Ent(mu)) by exact
    discrete algebra; perturbations h = e^(b + delta) must score lower.
    """
    op = HeatOperator(mu.n_cells)
    dx = mu.dx
    eps = pots.eps

    def dual_value(log_h):
        return float(eps * (np.sum(log_h * nu.values)
                            - np.sum(np.log(op.apply(np.exp(log_h), eps)) * mu.values)) * dx)

    value = dual_value(pots.b)
    expected = a_ent + 0.5 * eps * (entropy(nu) - entropy(mu))
    x = mu.centers()
    perturbed = [dual_value(pots.b + 0.1 * np.cos(2.0 * np.pi * k * x + 0.3 * k))
                 for k in range(1, n_perturbations + 1)]
    tol = 1e-12 * (1.0 + abs(value))
    return DualReport(value=value, identity_gap=abs(value - expected),
                      perturbed_values=perturbed,
                      is_supremum=all(p <= value + tol for p in perturbed))


@dataclass(frozen=True)
class CostBundle:
    """The three cost routes plus the dual value for one (mu, nu, eps) problem."""

    sch: float
    a_ent: float
    dynamic_action: float
    dual_value: float
    ent_mu: float
    ent_nu: float
    sinkhorn_iterations: int
    marginal_error: float

    @property
    def route_gap(self) -> float:
        return abs(self.a_ent - self.dynamic_action)

    def summary(self) -> dict:
        return {"sch": self.sch, "a_ent": self.a_ent,
                "dynamic_action": self.dynamic_action, "dual_value": self.dual_value,
                "ent_mu": self.ent_mu, "ent_nu": self.ent_nu,
                "sinkhorn_iterations": self.sinkhorn_iterations,
                "marginal_error": self.marginal_error}


def entropic_cost(mu: GridMeasure, nu: GridMeasure, eps: float, S: int = 200,
                  tol: float = DEFAULT_TOL,
                  pots: BridgePotentials = None) -> CostBundle:
    """Assemble the cost bundle; ``a_ent`` is the exact static rearrangement."""
    if pots is None:
        pots = sinkhorn(mu, nu, eps, tol=tol)
    sch = schrodinger_cost(pots, mu, nu)
    ent_mu, ent_nu = entropy(mu), entropy(nu)
    a_ent = sch - eps * (ent_mu + ent_nu) / 2.0
    interp = entropic_interpolation(pots, mu, nu, S)
    dyn = dynamic_action(interp)
    dual = kantorovich_dual(pots, mu, nu, a_ent)
    return CostBundle(sch=sch, a_ent=a_ent, dynamic_action=dyn, dual_value=dual.value,
                      ent_mu=ent_mu, ent_nu=ent_nu,
                      sinkhorn_iterations=pots.iterations,
                      marginal_error=pots.marginal_error)


# ---------------------------------------------------------------------------
# Structural verifiers along the interpolation.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ResidualReport:
    max_residual: float
    per_knot: np.ndarray      # interior s-knots


def newton_residual(interp: EntropicInterpolation) -> ResidualReport:
    """Pointwise defect of the velocity-potential evolution equation.

    r_s = d phi/ds + (d phi/dx)^2 / 2 - eps^2 [ (d log mu/dx)^2 / 2 - Lap mu / mu ],
    evaluated at interior s-knots with central s-differences.  The continuous
    identity is exact, so the residual is pure discretization, O(1/S^2 + dx^2).
    """
    if interp.n_segments < 8:
        raise ValueError("need S >= 8 for interior differencing")
    n = interp.n_cells
    ds = interp.s_grid[1] - interp.s_grid[0]
    dens = interp.density_matrix()
    eps = interp.eps
    per = np.empty(interp.n_segments - 1)
    for k in range(1, interp.n_segments):
        dphi_ds = (interp.phi[k + 1] - interp.phi[k - 1]) / (2.0 * ds)
        mu = dens[k]
        glog = _centered_grad(np.log(mu)[None, :], n)[0]
        lap = (np.roll(mu, -1) - 2.0 * mu + np.roll(mu, 1)) * n * n
        r = dphi_ds + 0.5 * interp.phi_grad[k] ** 2 - eps ** 2 * (0.5 * glog ** 2 - lap / mu)
        per[k - 1] = np.abs(r).max()
    return ResidualReport(max_residual=float(per.max()), per_knot=per)


def conserved_quantity(interp: EntropicInterpolation) -> np.ndarray:
    """Series |dmu/ds|^2_mu - eps^2 int |grad log mu|^2 dmu, constant along bridges."""
    n = interp.n_cells
    dens = interp.density_matrix()
    glog = _centered_grad(np.log(dens), n)
    kinetic = np.sum(interp.phi_grad ** 2 * dens, axis=1) / n
    fluct = np.sum(glog ** 2 * dens, axis=1) / n
    return kinetic - interp.eps ** 2 * fluct


def convexity_suite(interp: EntropicInterpolation, n_param: float = 1.0):
    """Second-difference convexity/concavity tests along the interpolation.

    On the flat circle (curvature 0, dimension 1): Ent(mu_s) is convex in s and
    exp(-Ent(mu_s)/n) is concave in s.  Margins are raw second differences.
    """
    ents = np.array([entropy(m) for m in interp.measures])
    d2 = ents[2:] - 2.0 * ents[1:-1] + ents[:-2]
    expo = np.exp(-ents / n_param)
    d2e = expo[2:] - 2.0 * expo[1:-1] + expo[:-2]
    disc = {"S": interp.n_segments, "N": interp.n_cells}
    convex = InequalityReport("entropy-convex-in-s", lhs=float(-d2.min()), rhs=0.0,
                              params={"eps": interp.eps}, discretization=disc)
    concave = InequalityReport("exp-entropy-concave-in-s", lhs=float(d2e.max()), rhs=0.0,
                               params={"eps": interp.eps, "n": n_param},
                               discretization=disc)
    return [convex, concave]


def cost_pair_units(mu: GridMeasure, nu: GridMeasure, eps: float,
                    tol: float = DEFAULT_TOL) -> float:
    """Entropic cost in point-space-action units (2 * a_ent), used by contraction."""
    pots = sinkhorn(mu, nu, eps, tol=tol)
    sch = schrodinger_cost(pots, mu, nu)
    return 2.0 * (sch - eps * (entropy(mu) + entropy(nu)) / 2.0)


def contraction_check(mu: GridMeasure, nu: GridMeasure, eps: float, t: float,
                      quad_steps: int = 100, tol: float = DEFAULT_TOL) -> InequalityReport:
    """Heat-flow contraction with the flat-circle dimensional correction (rho=0, n=1).

    A(P_t mu, P_t nu) <= A(mu, nu) - int_0^t (Ent(P_u mu) - Ent(P_u nu))^2 du,
    with A the cost in point-space units.  Sinkhorn is re-solved at the flowed
    marginals; the correction integral uses the trapezoid rule.
    """
    if t <= 0:
        raise ValueError("t must be > 0")
    op = HeatOperator(mu.n_cells)
    flow = lambda m, u: GridMeasure(op.apply(m.values, u))
    lhs = cost_pair_units(flow(mu, t), flow(nu, t), eps, tol)
    base = cost_pair_units(mu, nu, eps, tol)
    us = np.linspace(0.0, t, quad_steps + 1)
    gaps = np.array([(entropy(flow(mu, u)) - entropy(flow(nu, u))) ** 2 for u in us])
    correction = float(np.trapezoid(gaps, us))
    return InequalityReport("bridge-contraction[rho=0,n=1]", lhs=lhs,
                            rhs=base - correction,
                            params={"eps": eps, "t": t, "correction": correction,
                                    "ent_gap0": entropy(mu) - entropy(nu)},
                            discretization={"N": mu.n_cells, "quad_steps": quad_steps})


# ---------------------------------------------------------------------------
# Quantile oracle and the small-fluctuation sweep.
# ---------------------------------------------------------------------------

CUT_WINDOW = (0.05, 0.95)
CUT_MASS_BOUND = 1e-6


def w2_oracle(mu: GridMeasure, nu: GridMeasure, n_quantiles: int = 10_000) -> float:
    """Quadratic transport distance via quantile matching on the cut circle.

    Valid when essentially no mass sits near the cut at x = 0 (bound 1e-6);
    the shift-optimal circular distance is out of scope.  Returns W2 itself.
    """
    for m in (mu, nu):
        x = m.centers()
        outside = float(np.sum(m.values[(x < CUT_WINDOW[0]) | (x > CUT_WINDOW[1])]) * m.dx)
        if outside > CUT_MASS_BOUND:
            raise CutViolation(f"mass {outside:.2e} outside {CUT_WINDOW} exceeds 1e-6")
    q = (np.arange(n_quantiles) + 0.5) / n_quantiles
    edges = np.linspace(0.0, 1.0, mu.n_cells + 1)

    def quantiles(m):
        cdf = np.concatenate(([0.0], np.cumsum(m.values) * m.dx))
        cdf[-1] = 1.0
        return np.interp(q, cdf, edges)

    diff = quantiles(mu) - quantiles(nu)
    return float(math.sqrt(np.mean(diff * diff)))


@dataclass(frozen=True)
class SweepRow:
    eps: float
    sch: float
    a_ent: float
    w2sq_over_4: float
    gap: float
    sinkhorn_iters: int


@dataclass(frozen=True)
class SweepTable:
    rows: list
    w2: float

    @property
    def gaps(self) -> np.ndarray:
        return np.array([r.gap for r in self.rows])

    @property
    def gap_decreasing(self) -> bool:
        g = self.gaps
        return bool(np.all(np.diff(g) < 0.0))

    def to_csv(self, path, header_lines=()):
        cols = {"eps": [r.eps for r in self.rows],
                "sch": [r.sch for r in self.rows],
                "a_ent": [r.a_ent for r in self.rows],
                "w2sq_over_4": [r.w2sq_over_4 for r in self.rows],
                "gap": [r.gap for r in self.rows],
                "sinkhorn_iters": [r.sinkhorn_iters for r in self.rows]}
        write_csv(path, cols, header_lines)


def epsilon_sweep(mu: GridMeasure, nu: GridMeasure, eps_list,
                  tol: float = DEFAULT_TOL) -> SweepTable:
    """Static cost against the quarter-squared-distance limit, over decreasing eps."""
    eps_arr = [float(e) for e in eps_list]
    if any(e <= 0 for e in eps_arr):
        raise ValueError("all eps must be > 0")
    if any(b >= a for a, b in zip(eps_arr, eps_arr[1:])):
        raise ValueError("eps_list must be strictly decreasing")
    n = mu.n_cells
    if min(eps_arr) * n * n < 50.0:
        raise KernelDegenerate(
            f"eps*N^2 = {min(eps_arr) * n * n:.1f} < 50: kernel too close to identity")
    if mu.values is nu.values or np.array_equal(mu.values, nu.values):
        w2 = 0.0
    else:
        w2 = w2_oracle(mu, nu)
    target = w2 * w2 / 4.0
    rows = []
    for eps in eps_arr:
        pots = sinkhorn(mu, nu, eps, tol=tol)
        sch = schrodinger_cost(pots, mu, nu)
        a_ent = sch - eps * (entropy(mu) + entropy(nu)) / 2.0
        rows.append(SweepRow(eps=eps, sch=sch, a_ent=a_ent, w2sq_over_4=target,
                             gap=abs(sch - target), sinkhorn_iters=pots.iterations))
    return SweepTable(rows=rows, w2=w2)


# ---------------------------------------------------------------------------
# Canonical test measures.
# ---------------------------------------------------------------------------


def standard_bump_pair(n_cells: int):
    """Translated concentration-10 bumps at 0.35 / 0.65: the canonical test pair.

    Concentrated enough to keep cut mass below 1e-6 for the quantile oracle,
    with W2 exactly the 0.3 translation distance.
    """
    from .measure import von_mises_bump
    return (von_mises_bump(0.35, 10.0, n_cells), von_mises_bump(0.65, 10.0, n_cells))


def asymmetric_bump_pair(n_cells: int):
    """Bumps of different widths (unequal entropies): activates the dimensional term."""
    from .measure import von_mises_bump
    return (von_mises_bump(0.35, 10.0, n_cells), von_mises_bump(0.65, 4.0, n_cells))
