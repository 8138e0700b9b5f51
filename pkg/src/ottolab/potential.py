"""Finite-dimensional free energies F: R^n -> R with exact derivatives.

Every potential provides the value, the gradient, Hessian-vector products and
the second-order forcing term ``eps^2 * F''F'`` without ever forming a dense
Hessian.  All evaluation methods broadcast: a batch of points with shape
``(m, dim)`` is evaluated in one call.  Domains are open boxes; evaluation
within 1e-12 of a boundary raises :class:`~ottolab.errors.DomainViolation`
because the built-in one-dimensional examples blow up there.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DomainViolation, EmptySample

BOUNDARY_MARGIN = 1e-12
FD_SCALE = 1e-6  # central-difference step is FD_SCALE * (1 + |x|)


def _as_points(x, dim: int) -> tuple[np.ndarray, bool]:
    """Canonicalize ``x`` to shape (m, dim); report whether it was a single point."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        if dim != 1:
            raise ValueError(f"scalar input for a dim-{dim} potential")
        return arr.reshape(1, 1), True
    if arr.ndim == 1:
        if arr.shape[0] != dim:
            raise ValueError(f"point of length {arr.shape[0]} for a dim-{dim} potential")
        return arr.reshape(1, dim), True
    if arr.ndim == 2 and arr.shape[1] == dim:
        return arr, False
    raise ValueError(f"cannot interpret array of shape {arr.shape} as points in R^{dim}")


@dataclass(frozen=True)
class Box:
    """Open box domain; +-inf entries mean the coordinate is unconstrained."""

    lower: tuple
    upper: tuple

    @staticmethod
    def unbounded(dim: int) -> "Box":
        return Box((-math.inf,) * dim, (math.inf,) * dim)

    def inside(self, pts: np.ndarray) -> np.ndarray:
        lo = np.asarray(self.lower)
        hi = np.asarray(self.upper)
        ok = np.ones(pts.shape[0], dtype=bool)
        finite_lo = np.isfinite(lo)
        finite_hi = np.isfinite(hi)
        if finite_lo.any():
            ok &= (pts[:, finite_lo] - lo[finite_lo] > BOUNDARY_MARGIN).all(axis=1)
        if finite_hi.any():
            ok &= (hi[finite_hi] - pts[:, finite_hi] > BOUNDARY_MARGIN).all(axis=1)
        return ok

    def to_json(self):
        conv = lambda v: None if math.isinf(v) else v
        return {"lower": [conv(v) for v in self.lower], "upper": [conv(v) for v in self.upper]}

    @staticmethod
    def from_json(obj, dim: int) -> "Box":
        if obj is None:
            return Box.unbounded(dim)
        lo = tuple(-math.inf if v is None else float(v) for v in obj["lower"])
        hi = tuple(math.inf if v is None else float(v) for v in obj["upper"])
        if len(lo) != dim or len(hi) != dim:
            raise ValueError("domain arity does not match dim")
        return Box(lo, hi)


class Potential:
    """Base class: immutable after construction, all operations pure."""

    kind = "custom"

    def __init__(self, dim: int, domain: Optional[Box] = None):
        if dim < 1:
            raise ValueError("dim must be a positive integer")
        self.dim = int(dim)
        self.domain = domain if domain is not None else Box.unbounded(dim)

    # --- kernels supplied by subclasses (operate on (m, dim) arrays) ---

    def _value(self, pts: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _grad(self, pts: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _hess_vec(self, pts: np.ndarray, vecs: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    # --- public API ---

    def require_inside(self, x) -> None:
        pts, _ = _as_points(x, self.dim)
        if not self.domain.inside(pts).all():
            raise DomainViolation(f"point outside the open domain of {self.kind} potential")

    def contains(self, x) -> bool:
        pts, _ = _as_points(x, self.dim)
        return bool(self.domain.inside(pts).all())

    def value(self, x):
        """F(x)."""
        pts, single = _as_points(x, self.dim)
        self.require_inside(pts)
        out = self._value(pts)
        return float(out[0]) if single else out

    def grad(self, x):
        """F'(x), exact for built-in kinds."""
        pts, single = _as_points(x, self.dim)
        self.require_inside(pts)
        out = self._grad(pts)
        return out[0] if single else out

    def hess_vec(self, x, v):
        """F''(x) v as a product, never a dense matrix."""
        pts, single = _as_points(x, self.dim)
        vecs, _ = _as_points(v, self.dim)
        self.require_inside(pts)
        vecs = np.broadcast_to(vecs, pts.shape)
        out = self._hess_vec(pts, vecs)
        return out[0] if single else out

    def fisher_info(self, x):
        """|F'(x)|^2, minus the free-energy production rate along the flow."""
        pts, single = _as_points(x, self.dim)
        self.require_inside(pts)
        g = self._grad(pts)
        out = np.einsum("ij,ij->i", g, g)
        return float(out[0]) if single else out

    def newton_rhs(self, x, eps: float):
        """eps^2 * F''(x) F'(x), the forcing term of the second-order path equation."""
        pts, single = _as_points(x, self.dim)
        self.require_inside(pts)
        if eps == 0.0:
            out = np.zeros_like(pts)
        else:
            out = eps * eps * self._hess_vec(pts, self._grad(pts))
        return out[0] if single else out

    def hessian(self, x) -> np.ndarray:
        """Dense Hessian assembled from dim Hessian-vector products (small dim only)."""
        pts, single = _as_points(x, self.dim)
        self.require_inside(pts)
        cols = [self._hess_vec(pts, np.broadcast_to(e, pts.shape))
                for e in np.eye(self.dim)]
        h = np.stack(cols, axis=-1)
        return h[0] if single else h

    # --- serialization ---

    def params(self) -> dict:
        raise NotImplementedError

    def to_json(self) -> dict:
        return {"kind": self.kind, "dim": self.dim, "params": self.params(),
                "domain": self.domain.to_json()}

    def __repr__(self):
        return f"{type(self).__name__}({self.params()}, dim={self.dim})"


class Quadratic(Potential):
    """F(x) = scale * |x|^2 / 2 on R^n."""

    kind = "quadratic"

    def __init__(self, scale: float = 1.0, dim: int = 1):
        super().__init__(dim)
        self.scale = float(scale)

    def _value(self, pts):
        return 0.5 * self.scale * np.einsum("ij,ij->i", pts, pts)

    def _grad(self, pts):
        return self.scale * pts

    def _hess_vec(self, pts, vecs):
        return self.scale * vecs

    def params(self):
        return {"scale": self.scale}


class NegLog(Potential):
    """F(x) = -n * log x on (0, inf); equality case of (0, n)-convexity."""

    kind = "neglog"

    def __init__(self, n_param: float = 1.0):
        if n_param <= 0:
            raise ValueError("n_param must be > 0")
        super().__init__(1, Box((0.0,), (math.inf,)))
        self.n_param = float(n_param)

    def _value(self, pts):
        return -self.n_param * np.log(pts[:, 0])

    def _grad(self, pts):
        return -self.n_param / pts

    def _hess_vec(self, pts, vecs):
        return self.n_param / pts ** 2 * vecs

    def params(self):
        return {"n_param": self.n_param}


class LogCos(Potential):
    """F(x) = -n * log cos(x sqrt(rho/n)), rho > 0, on the symmetric interval where cos > 0.

    Equality case of (rho, n)-convexity.
    """

    kind = "logcos"

    def __init__(self, rho: float, n_param: float):
        if rho <= 0 or n_param <= 0:
            raise ValueError("LogCos requires rho > 0 and n_param > 0")
        c = math.sqrt(rho / n_param)
        half = 0.5 * math.pi / c
        super().__init__(1, Box((-half,), (half,)))
        self.rho = float(rho)
        self.n_param = float(n_param)
        self._c = c

    def _value(self, pts):
        return -self.n_param * np.log(np.cos(self._c * pts[:, 0]))

    def _grad(self, pts):
        # n * c * tan(c x) = sqrt(rho n) tan(c x)
        return self.n_param * self._c * np.tan(self._c * pts)

    def _hess_vec(self, pts, vecs):
        return self.rho / np.cos(self._c * pts) ** 2 * vecs

    def params(self):
        return {"rho": self.rho, "n_param": self.n_param}


class LogSinh(Potential):
    """F(x) = -n * log sinh(x sqrt(-rho/n)), rho < 0, on (0, inf).

    Equality case of (rho, n)-convexity with negative rho.
    """

    kind = "logsinh"

    def __init__(self, rho: float, n_param: float):
        if rho >= 0 or n_param <= 0:
            raise ValueError("LogSinh requires rho < 0 and n_param > 0")
        super().__init__(1, Box((0.0,), (math.inf,)))
        self.rho = float(rho)
        self.n_param = float(n_param)
        self._c = math.sqrt(-rho / n_param)

    def _value(self, pts):
        return -self.n_param * np.log(np.sinh(self._c * pts[:, 0]))

    def _grad(self, pts):
        return -self.n_param * self._c / np.tanh(self._c * pts)

    def _hess_vec(self, pts, vecs):
        return -self.rho / np.sinh(self._c * pts) ** 2 * vecs

    def params(self):
        return {"rho": self.rho, "n_param": self.n_param}


class Polynomial(Potential):
    """Separable polynomial F(x) = sum_i p_i(x_i), coefficients in ascending order."""

    kind = "polynomial"

    def __init__(self, coefficients: Sequence[Sequence[float]]):
        coeffs = [np.asarray(c, dtype=float) for c in coefficients]
        if not coeffs:
            raise ValueError("need at least one coordinate")
        super().__init__(len(coeffs))
        self.coefficients = coeffs
        self._dcoeffs = [np.polynomial.polynomial.polyder(c) for c in coeffs]
        self._d2coeffs = [np.polynomial.polynomial.polyder(c, 2) for c in coeffs]

    def _value(self, pts):
        return sum(np.polynomial.polynomial.polyval(pts[:, i], c)
                   for i, c in enumerate(self.coefficients))

    def _grad(self, pts):
        return np.stack([np.polynomial.polynomial.polyval(pts[:, i], c)
                         for i, c in enumerate(self._dcoeffs)], axis=1)

    def _hess_vec(self, pts, vecs):
        diag = np.stack([np.polynomial.polynomial.polyval(pts[:, i], c)
                         for i, c in enumerate(self._d2coeffs)], axis=1)
        return diag * vecs

    def params(self):
        return {"coefficients": [list(map(float, c)) for c in self.coefficients]}


class CustomPotential(Potential):
    """User-supplied callables; missing derivatives fall back to central differences."""

    kind = "custom"

    def __init__(self, value: Callable, dim: int, grad: Optional[Callable] = None,
                 hess_vec: Optional[Callable] = None, domain: Optional[Box] = None):
        super().__init__(dim, domain)
        self._value_fn = value
        self._grad_fn = grad
        self._hess_vec_fn = hess_vec

    def _value(self, pts):
        return np.asarray([float(self._value_fn(p)) for p in pts])

    def _grad(self, pts):
        if self._grad_fn is not None:
            return np.asarray([np.asarray(self._grad_fn(p), dtype=float) for p in pts])
        out = np.empty_like(pts)
        for k, p in enumerate(pts):
            h = FD_SCALE * (1.0 + np.linalg.norm(p))
            for j in range(self.dim):
                e = np.zeros(self.dim)
                e[j] = h
                out[k, j] = (self._value_fn(p + e) - self._value_fn(p - e)) / (2 * h)
        return out

    def _hess_vec(self, pts, vecs):
        if self._hess_vec_fn is not None:
            return np.asarray([np.asarray(self._hess_vec_fn(p, v), dtype=float)
                               for p, v in zip(pts, vecs)])
        out = np.empty_like(pts)
        grads = self._grad  # may itself be a finite-difference fallback
        for k, (p, v) in enumerate(zip(pts, vecs)):
            nv = np.linalg.norm(v)
            if nv == 0.0:
                out[k] = 0.0
                continue
            h = FD_SCALE * (1.0 + np.linalg.norm(p))
            d = v / nv
            gp = grads((p + h * d).reshape(1, -1))[0]
            gm = grads((p - h * d).reshape(1, -1))[0]
            out[k] = (gp - gm) / (2 * h) * nv
        return out

    def params(self):
        return {}

    def to_json(self):
        raise TypeError("custom potentials are not JSON-serializable")


_BUILTINS = {"quadratic": Quadratic, "neglog": NegLog, "logcos": LogCos,
             "logsinh": LogSinh, "polynomial": Polynomial}


def potential_from_json(obj) -> Potential:
    """Rebuild a built-in potential from its ``to_json`` form (or a JSON string)."""
    if isinstance(obj, str):
        obj = json.loads(obj)
    kind = obj["kind"]
    if kind not in _BUILTINS:
        raise ValueError(f"unknown potential kind {kind!r}")
    params = dict(obj.get("params", {}))
    if kind == "quadratic":
        pot = Quadratic(scale=params.get("scale", 1.0), dim=int(obj.get("dim", 1)))
    elif kind == "polynomial":
        pot = Polynomial(params["coefficients"])
    else:
        pot = _BUILTINS[kind](**params)
    expected = pot.to_json()
    if int(obj.get("dim", pot.dim)) != pot.dim:
        raise ValueError("dim inconsistent with potential kind")
    if "domain" in obj and obj["domain"] is not None:
        if Box.from_json(obj["domain"], pot.dim) != pot.domain and expected["domain"] != obj["domain"]:
            raise ValueError("domain inconsistent with potential kind")
    return pot


# ---------------------------------------------------------------------------
# (rho, n)-convexity certification: F'' >= rho Id + F' (x) F' / n, sampled.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GridSampler:
    """Cartesian grid of ``count`` points per coordinate inside [lower, upper]."""

    lower: Sequence[float]
    upper: Sequence[float]
    count: int = 64

    def points(self, dim: int) -> np.ndarray:
        lo = np.broadcast_to(np.asarray(self.lower, dtype=float), (dim,))
        hi = np.broadcast_to(np.asarray(self.upper, dtype=float), (dim,))
        axes = [np.linspace(lo[i], hi[i], self.count) for i in range(dim)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def describe(self) -> dict:
        return {"plan": "grid", "lower": list(np.atleast_1d(self.lower).astype(float)),
                "upper": list(np.atleast_1d(self.upper).astype(float)), "count": self.count}


@dataclass(frozen=True)
class RandomSampler:
    """Uniform points in a box; the seed makes failures reproducible."""

    lower: Sequence[float]
    upper: Sequence[float]
    count: int = 256
    seed: int = 0

    def points(self, dim: int) -> np.ndarray:
        lo = np.broadcast_to(np.asarray(self.lower, dtype=float), (dim,))
        hi = np.broadcast_to(np.asarray(self.upper, dtype=float), (dim,))
        rng = np.random.default_rng(self.seed)
        return lo + (hi - lo) * rng.random((self.count, dim))

    def describe(self) -> dict:
        return {"plan": "random", "lower": list(np.atleast_1d(self.lower).astype(float)),
                "upper": list(np.atleast_1d(self.upper).astype(float)),
                "count": self.count, "seed": self.seed}


@dataclass(frozen=True)
class ConvexityCertificate:
    rho: float
    n_param: float
    min_margin: float
    worst_point: np.ndarray
    samples_checked: int
    tolerance: float
    plan: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.min_margin >= -self.tolerance


def certify_convexity(F: Potential, rho: float, n_param: float, sampler,
                      tolerance: float = 1e-9) -> ConvexityCertificate:
    """Sample-based check of F'' - rho Id - F' (x) F'/n >= 0 (smallest eigenvalue).

    ``n_param = inf`` drops the dimensional term.  Certification is numerical,
    not symbolic: the certificate records the sampling plan so that a failure
    can be reproduced exactly.
    """
    pts = sampler.points(F.dim)
    if pts.size == 0:
        raise EmptySample("sampling plan produced no points")
    F.require_inside(pts)
    hess = np.stack([F._hess_vec(pts, np.broadcast_to(e, pts.shape))
                     for e in np.eye(F.dim)], axis=-1)
    hess = 0.5 * (hess + np.swapaxes(hess, 1, 2))
    m = hess - rho * np.eye(F.dim)
    if np.isfinite(n_param):
        g = F._grad(pts)
        m = m - g[:, :, None] * g[:, None, :] / n_param
    eigs = np.linalg.eigvalsh(m)[:, 0]
    k = int(np.argmin(eigs))
    return ConvexityCertificate(
        rho=float(rho), n_param=float(n_param), min_margin=float(eigs[k]),
        worst_point=pts[k].copy(), samples_checked=pts.shape[0],
        tolerance=float(tolerance), plan=sampler.describe())
