"""Margin-reporting verifiers for the finite-dimensional inequality family.

Every check returns an :class:`InequalityReport` with an explicit margin
``rhs - lhs``; pass means margin >= -slack with slack = 1e-6 (1 + |lhs| + |rhs|).
A margin in (-slack, 0) is flagged "pass-with-warning" since it is absorbed by
solver bias rather than by the inequality itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CertificationFailed, FDUnstable, NormalizationError
from .flow import evolve
from .interp import InterpolationResult, minimize_direct
from .potential import GridSampler, Potential, certify_convexity

SLACK_REL = 1e-6


def theta(a: float, s):
    """theta_a(s) = (1 - e^{-2as}) / (1 - e^{-2a}), with theta_0(s) = s as the limit."""
    s = np.asarray(s, dtype=float)
    if a == 0.0:
        out = s
    else:
        out = np.expm1(-2.0 * a * s) / np.expm1(-2.0 * a)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class InequalityReport:
    name: str
    lhs: float
    rhs: float
    params: dict = field(default_factory=dict)
    discretization: dict = field(default_factory=dict)

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs

    @property
    def slack(self) -> float:
        return SLACK_REL * (1.0 + abs(self.lhs) + abs(self.rhs))

    @property
    def passed(self) -> bool:
        return self.margin >= -self.slack

    @property
    def status(self) -> str:
        if self.margin >= 0:
            return "pass"
        if self.margin >= -self.slack:
            return "pass-with-warning"
        return "fail"

    def row(self) -> dict:
        return {"name": self.name, "lhs": self.lhs, "rhs": self.rhs,
                "margin": self.margin, "pass": self.passed, "status": self.status}


def _require_certified(F: Potential, rho: float, n_param: float, lo, hi) -> None:
    span = np.maximum(np.abs(hi - lo), 1e-3)
    pad = 0.05 * span
    lo_box = np.asarray(F.domain.lower); hi_box = np.asarray(F.domain.upper)
    a = np.where(np.isfinite(lo_box), np.maximum(lo - pad, lo_box + 1e-6), lo - pad)
    b = np.where(np.isfinite(hi_box), np.minimum(hi + pad, hi_box - 1e-6), hi + pad)
    cert = certify_convexity(F, rho, n_param, GridSampler(a, b, count=40), tolerance=1e-7)
    if not cert.passed:
        raise CertificationFailed(
            f"(rho={rho}, n={n_param})-convexity fails on the trajectory hull: "
            f"margin {cert.min_margin:.3e} at {cert.worst_point}")


@dataclass(frozen=True)
class ContractionCheck:
    """Both exponent readings of the flow-contraction inequality.

    ``proof_rate`` puts e^{-2 rho t} on the cost term (what the argument via the
    pathwise Lagrangian bound yields); ``printed_rate`` puts e^{-rho t} there.
    For rho >= 0 the printed variant is the weaker one.
    """

    printed_rate: InequalityReport
    proof_rate: InequalityReport

    @property
    def passed(self) -> bool:
        return self.printed_rate.passed and self.proof_rate.passed

    @property
    def reports(self):
        return [self.printed_rate, self.proof_rate]


def check_contraction(F: Potential, rho: float, n_param: float, x, y, eps: float,
                      t: float, quad_steps: int = 200, S: int = 1024,
                      flow_dt: float = 1e-3) -> ContractionCheck:
    """Cost contraction along the gradient flow under (rho, n)-convexity.

    lhs = A(S_t x, S_t y); rhs = rate * A(x, y) minus the dimensional
    correction (1/n) int_0^t e^{-2 rho (t-u)} [F(S_u x) - F(S_u y)]^2 du.
    """
    dt = min(flow_dt, t / quad_steps) if t > 0 else flow_dt
    tx = evolve(F, x, t, dt)
    ty = evolve(F, y, t, dt)
    hull = np.vstack([tx.states, ty.states])
    _require_certified(F, rho, n_param, hull.min(axis=0), hull.max(axis=0))

    cost0 = minimize_direct(F, x, y, eps, S).cost
    cost_t = minimize_direct(F, tx.final_state, ty.final_state, eps, S).cost

    if math.isinf(n_param):
        correction = 0.0
    else:
        us = np.linspace(0.0, t, quad_steps + 1)
        fx = np.interp(us, tx.times, tx.free_energy())
        fy = np.interp(us, ty.times, ty.free_energy())
        integrand = np.exp(-2.0 * rho * (t - us)) * (fx - fy) ** 2
        correction = float(np.trapezoid(integrand, us)) / n_param

    params = {"rho": rho, "n": n_param, "eps": eps, "t": t,
              "x": np.atleast_1d(x).tolist(), "y": np.atleast_1d(y).tolist()}
    disc = {"S": S, "quad_steps": quad_steps, "flow_dt": dt}
    printed = InequalityReport("contraction[e^-rho t]", lhs=cost_t,
                               rhs=math.exp(-rho * t) * cost0 - correction,
                               params=params, discretization=disc)
    proof = InequalityReport("contraction[e^-2rho t]", lhs=cost_t,
                             rhs=math.exp(-2.0 * rho * t) * cost0 - correction,
                             params=params, discretization=disc)
    return ContractionCheck(printed_rate=printed, proof_rate=proof)


def check_conforti(F: Potential, rho: float, interpolation: InterpolationResult,
                   s_grid=None) -> InequalityReport:
    """Entropy-type convexity of F along a converged interpolation.

    For rho = 0 this degenerates to convexity of s -> F(w_s); otherwise the
    theta-weighted bound with the cost-dependent correction term is checked at
    each requested s (snapped to the knot grid), and the worst point reported.
    """
    path = interpolation.path
    eps = path.eps
    if s_grid is None:
        s_grid = np.linspace(0.1, 0.9, 9)
    s_grid = np.asarray(s_grid, dtype=float)
    S = path.n_segments
    idx = np.clip(np.rint(s_grid * S).astype(int), 0, S)
    svals = idx / S
    fvals = np.asarray(F._value(path.knots))
    f0, f1 = fvals[0], fvals[-1]
    lhs = fvals[idx]
    if rho == 0.0 or eps == 0.0:
        # theta_0(s) = s and the correction vanishes: plain convexity in s
        rhs = (1.0 - svals) * f0 + svals * f1
    else:
        a = rho * eps
        bracket = interpolation.cost + eps * f0 + eps * f1
        coeff = -np.expm1(-2.0 * a) / (2.0 * eps)
        rhs = (theta(a, 1.0 - svals) * f0 + theta(a, svals) * f1
               - coeff * theta(a, svals) * theta(a, 1.0 - svals) * bracket)
    worst = int(np.argmin(rhs - lhs))
    return InequalityReport(
        "interpolation-convexity", lhs=float(lhs[worst]), rhs=float(rhs[worst]),
        params={"rho": rho, "eps": eps, "s": float(svals[worst]),
                "cost": interpolation.cost},
        discretization={"S": S, "s_grid": [float(s) for s in svals]})


def check_talagrand(F: Potential, rho: float, x_star, x, eps: float,
                    S: int = 1024) -> InequalityReport:
    """Transport-entropy comparison: A(x*, x) <= eps (1+e^{-rho eps})/(1-e^{-rho eps}) F(x).

    Requires rho > 0 and F normalized so that inf F = F(x*) = 0.
    """
    if rho <= 0:
        raise ValueError("the transport-entropy bound needs rho > 0")
    if eps <= 0:
        raise ValueError("eps must be > 0")
    fstar = F.value(x_star)
    gstar = np.linalg.norm(np.atleast_1d(F.grad(x_star)), ord=np.inf)
    if abs(fstar) > 1e-10 or gstar > 1e-8:
        raise NormalizationError(
            f"F not normalized at x*: F={fstar:.2e}, |F'|={gstar:.2e}")
    lhs = minimize_direct(F, x_star, x, eps, S).cost
    ratio = (1.0 + math.exp(-rho * eps)) / -math.expm1(-rho * eps)
    rhs = eps * ratio * F.value(x)
    return InequalityReport("talagrand", lhs=lhs, rhs=rhs,
                            params={"rho": rho, "eps": eps,
                                    "x_star": np.atleast_1d(x_star).tolist(),
                                    "x": np.atleast_1d(x).tolist()},
                            discretization={"S": S})


def check_costa(F: Potential, n_param: float, interpolation: InterpolationResult
                ) -> InequalityReport:
    """Concavity of s -> exp(-F(w_s)/n) along a converged interpolation.

    lhs is the largest second difference over the knot grid (concavity wants
    all of them <= 0).
    """
    path = interpolation.path
    vals = np.exp(-np.asarray(F._value(path.knots)) / n_param)
    d2 = vals[2:] - 2.0 * vals[1:-1] + vals[:-2]
    return InequalityReport("exp-concavity", lhs=float(d2.max()), rhs=0.0,
                            params={"n": n_param, "eps": path.eps},
                            discretization={"S": path.n_segments})


def check_evi(F: Potential, x, y, eps: float, rho: float = None,
              n_param: float = None, fd_step: float = 1e-4,
              S: int = 2048, flow_dt: float = 1e-4) -> InequalityReport:
    """Differential (EVI-type) inequality for the cost along the gradient flow.

    The right derivative of t -> A(S_t x, y) at 0 is estimated by one-sided
    differences at fd_step and fd_step/2 with Richardson extrapolation
    (central differences would be wrong at kinks).  Exactly one of ``rho``
    (with n = inf) or ``n_param`` (with rho = 0) must be given.
    """
    if (rho is None) == (n_param is None):
        raise ValueError("give exactly one of rho (with n=inf) or n_param (with rho=0)")
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    ya = np.atleast_1d(np.asarray(y, dtype=float))
    cert_lo = np.minimum(xa, ya); cert_hi = np.maximum(xa, ya)
    _require_certified(F, rho if rho is not None else 0.0,
                       math.inf if rho is not None else n_param, cert_lo, cert_hi)

    a0 = minimize_direct(F, xa, ya, eps, S).cost

    def a_at(h):
        xh = evolve(F, xa, h, min(flow_dt, h)).final_state
        return minimize_direct(F, xh, ya, eps, S).cost

    h = fd_step
    d1 = (a_at(h) - a0) / h
    d2 = (a_at(0.5 * h) - a0) / (0.5 * h)
    scale = max(1.0, abs(d1), abs(d2))
    if abs(d1 - d2) > 0.1 * scale:
        raise FDUnstable(f"one-sided derivative unstable: {d1:.6g} vs {d2:.6g}")
    deriv = 2.0 * d2 - d1          # Richardson for first-order one-sided differences

    fx, fy = F.value(xa), F.value(ya)
    if rho is not None:
        lhs = deriv + rho * a0
        if rho == 0.0:
            rhs = 0.0
        else:
            rhs = rho * eps * (1.0 + math.exp(-2 * rho * eps)) / -math.expm1(-2 * rho * eps) * (fy - fx)
        name = "evi[rho,inf]"
        params = {"rho": rho, "eps": eps}
    else:
        lhs = deriv
        rhs = n_param * -math.expm1(-(fy - fx) / n_param)
        name = "evi[0,n]"
        params = {"n": n_param, "eps": eps}
    params.update({"x": xa.tolist(), "y": ya.tolist()})
    return InequalityReport(name, lhs=lhs, rhs=rhs, params=params,
                            discretization={"S": S, "fd_step": fd_step,
                                            "flow_dt": flow_dt})
