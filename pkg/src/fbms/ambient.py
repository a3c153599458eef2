"""Convex container domains: walls, normals, curvature and convexity constant.

A domain is either a round ball or a smooth convex body given as a level set
``{phi <= 0}`` from a small built-in registry. All queries are vectorized over
leading axes and pure; instances are immutable.
"""

from __future__ import annotations

import numpy as np
from scipy.stats import qmc

__all__ = [
    "AmbientError",
    "ConvexAmbient",
    "Ball",
    "LevelSetBody",
    "ellipsoid",
    "ambient_from_config",
]

_NEWTON_MAX_STEPS = 50
_WALL_TOL = 1e-12


class AmbientError(ValueError):
    """Invalid ambient domain, query outside its domain, or failed projection."""


def _as_points(p):
    p = np.asarray(p, dtype=np.float64)
    single = p.ndim == 1
    return np.atleast_2d(p), single


class ConvexAmbient:
    """Common interface of container domains; see :class:`Ball` and
    :class:`LevelSetBody`."""

    kind = "abstract"

    def project_to_boundary(self, p):
        raise NotImplementedError

    def boundary_distance(self, p):
        """Approximate signed distance to the wall (exact for the ball)."""
        raise NotImplementedError

    def boundary_normal(self, p):
        """Outward unit normal at a wall point (inward normal is its negation)."""
        raise NotImplementedError

    def boundary_shape_operator(self, p, u):
        """Wall curvature ``h(u, u)`` w.r.t. the inward normal, for unit
        tangents ``u``; positive values mean convexity."""
        raise NotImplementedError

    def convexity_constant(self):
        """Lower bound ``k > 0`` of the wall curvature over all tangents."""
        raise NotImplementedError

    def to_config(self):
        raise NotImplementedError

    def _check_on_boundary(self, p, tol=1e-9):
        d = np.abs(self.boundary_distance(p))
        if np.max(d) > tol:
            raise AmbientError(
                f"point is not on the wall (distance {np.max(d):.3e} > {tol:.0e})"
            )

    def _check_unit_tangent(self, p, u):
        u = np.asarray(u, dtype=np.float64)
        if np.max(np.abs(np.linalg.norm(np.atleast_2d(u), axis=1) - 1.0)) > 1e-9:
            raise AmbientError("tangent vector is not unit length")
        n = self.boundary_normal(p)
        dot = np.abs((np.atleast_2d(u) * np.atleast_2d(n)).sum(axis=1))
        if np.max(dot) > 1e-9:
            raise AmbientError(
                f"vector is not tangent to the wall (|<u, n>| = {np.max(dot):.3e})"
            )


class Ball(ConvexAmbient):
    """Round ball of radius ``radius`` centered at the origin.

    The wall has constant curvature ``1 / radius``, so the convexity constant
    is exact, projection is radial and all formulas are closed-form.
    """

    kind = "ball"

    def __init__(self, radius=1.0):
        radius = float(radius)
        if radius <= 0.0:
            raise AmbientError("ball radius must be positive")
        self.radius = radius

    def project_to_boundary(self, p):
        p, single = _as_points(p)
        r = np.linalg.norm(p, axis=1)
        if np.any(r < 1e-300):
            raise AmbientError("cannot project the ball center to the wall")
        out = p * (self.radius / r)[:, None]
        return out[0] if single else out

    def boundary_distance(self, p):
        p, single = _as_points(p)
        d = np.linalg.norm(p, axis=1) - self.radius
        return float(d[0]) if single else d

    def boundary_normal(self, p):
        p, single = _as_points(p)
        self._check_on_boundary(p)
        out = p / np.linalg.norm(p, axis=1)[:, None]
        return out[0] if single else out

    def boundary_shape_operator(self, p, u):
        p, single = _as_points(p)
        self._check_on_boundary(p)
        self._check_unit_tangent(p, u)
        out = np.full(p.shape[0], 1.0 / self.radius)
        return float(out[0]) if single else out

    def convexity_constant(self):
        return 1.0 / self.radius

    def to_config(self):
        return {"kind": "ball", "radius": self.radius}

    def __repr__(self):
        return f"Ball(radius={self.radius})"


class LevelSetBody(ConvexAmbient):
    """Convex body ``{phi <= 0}`` for a smooth convex ``phi`` with 0 inside.

    Parameters
    ----------
    name : str
        Registry name used in config files.
    phi, grad, hess : callables
        Vectorized level-set function, gradient and Hessian over (n, 3) points.
    bounding_radius : float
        Radius of an origin-centered ball containing the body (used to bracket
        radial root-finds when sampling the wall).
    params : dict
        Registry parameters, echoed into configs.

    Notes
    -----
    Convexity is verified statistically: the convexity constant is the
    minimum of the wall curvature over a quasi-random (Sobol) sample of at
    least ``min_samples`` (point, tangent) pairs. The sample size is recorded
    on the instance as ``convexity_sample_size``.
    """

    kind = "level_set"

    def __init__(self, name, phi, grad, hess, bounding_radius, params=None,
                 min_samples=10_000):
        self.name = name
        self._phi = phi
        self._grad = grad
        self._hess = hess
        self.bounding_radius = float(bounding_radius)
        self.params = dict(params or {})
        self.min_samples = int(min_samples)
        self._k = None
        self.convexity_sample_size = 0

    def project_to_boundary(self, p):
        p, single = _as_points(p)
        x = p.copy()
        for _ in range(_NEWTON_MAX_STEPS):
            val = self._phi(x)
            g = self._grad(x)
            gn2 = (g * g).sum(axis=1)
            if np.any(gn2 < 1e-24):
                raise AmbientError("projection hit a critical point of phi")
            scale = np.maximum(np.abs(val), 1.0)
            if np.max(np.abs(val) / scale) <= _WALL_TOL:
                break
            x = x - (val / gn2)[:, None] * g
        else:
            raise AmbientError(
                f"Newton projection did not converge in {_NEWTON_MAX_STEPS} steps"
            )
        return x[0] if single else x

    def boundary_distance(self, p):
        p, single = _as_points(p)
        g = np.linalg.norm(self._grad(p), axis=1)
        if np.any(g < 1e-24):
            raise AmbientError("distance estimate hit a critical point of phi")
        d = self._phi(p) / g
        return float(d[0]) if single else d

    def boundary_normal(self, p):
        p, single = _as_points(p)
        self._check_on_boundary(p)
        g = self._grad(p)
        out = g / np.linalg.norm(g, axis=1)[:, None]
        return out[0] if single else out

    def boundary_shape_operator(self, p, u):
        p, single = _as_points(p)
        self._check_on_boundary(p)
        self._check_unit_tangent(p, u)
        u2 = np.atleast_2d(np.asarray(u, dtype=np.float64))
        H = self._hess(p)
        gn = np.linalg.norm(self._grad(p), axis=1)
        quad = np.einsum("ni,nij,nj->n", u2, H, u2)
        out = quad / gn
        return float(out[0]) if single else out

    def convexity_constant(self):
        if self._k is None:
            self._k, self.convexity_sample_size = self._sample_convexity()
        return self._k

    def _sample_convexity(self):
        n_points = max(self.min_samples, 1 << 14)
        sob = qmc.Sobol(d=3, scramble=True, seed=20110914)
        s = sob.random(n_points)
        # Area-uniform directions on the sphere, then radial root-find.
        z = 2.0 * s[:, 0] - 1.0
        th = 2.0 * np.pi * s[:, 1]
        rho = np.sqrt(np.maximum(0.0, 1.0 - z * z))
        dirs = np.column_stack([rho * np.cos(th), rho * np.sin(th), z])
        pts = self._radial_wall_points(dirs)
        n = self.boundary_normal(pts)
        # Tangent frames by Gram-Schmidt against the least-aligned axis.
        a = np.zeros_like(n)
        a[np.arange(n.shape[0]), np.argmin(np.abs(n), axis=1)] = 1.0
        t1 = a - (a * n).sum(axis=1)[:, None] * n
        t1 /= np.linalg.norm(t1, axis=1)[:, None]
        t2 = np.cross(n, t1)
        psi = np.pi * s[:, 2]
        kmin = np.inf
        n_pairs = 0
        for off in (0.0, np.pi / 3.0, 2.0 * np.pi / 3.0):
            u = np.cos(psi + off)[:, None] * t1 + np.sin(psi + off)[:, None] * t2
            vals = self.boundary_shape_operator(pts, u)
            kmin = min(kmin, float(vals.min()))
            n_pairs += n_points
        if kmin <= 0.0:
            raise AmbientError(
                f"domain is not strictly convex: sampled wall curvature "
                f"minimum {kmin:.3e} <= 0 ({n_pairs} samples)"
            )
        return kmin, n_pairs

    def _radial_wall_points(self, dirs):
        """Intersect rays from the origin with the wall by bisection."""
        lo = np.zeros(dirs.shape[0])
        hi = np.full(dirs.shape[0], self.bounding_radius)
        if np.any(self._phi(dirs * hi[:, None]) < 0.0):
            raise AmbientError("bounding_radius does not enclose the body")
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            inside = self._phi(dirs * mid[:, None]) < 0.0
            lo = np.where(inside, mid, lo)
            hi = np.where(inside, hi, mid)
        return self.project_to_boundary(dirs * (0.5 * (lo + hi))[:, None])

    def to_config(self):
        return {"kind": "level_set", "name": self.name, **self.params}

    def __repr__(self):
        return f"LevelSetBody(name={self.name!r}, params={self.params})"


def ellipsoid(semiaxes):
    """Level-set ellipsoid ``sum (x_i / a_i)^2 = 1`` with semiaxes (a, b, c)."""
    ax = np.asarray(semiaxes, dtype=np.float64)
    if ax.shape != (3,) or np.any(ax <= 0.0):
        raise AmbientError("ellipsoid needs three positive semiaxes")
    inv2 = 1.0 / ax**2

    def phi(p):
        return (p * p * inv2).sum(axis=1) - 1.0

    def grad(p):
        return 2.0 * p * inv2

    def hess(p):
        H = np.zeros((p.shape[0], 3, 3))
        H[:, 0, 0] = 2.0 * inv2[0]
        H[:, 1, 1] = 2.0 * inv2[1]
        H[:, 2, 2] = 2.0 * inv2[2]
        return H

    return LevelSetBody(
        "ellipsoid", phi, grad, hess,
        bounding_radius=float(ax.max()) * 1.5,
        params={"semiaxes": [float(a) for a in ax]},
    )


_LEVEL_SET_REGISTRY = {
    "ellipsoid": lambda cfg: ellipsoid(cfg["semiaxes"]),
}


def ambient_from_config(cfg):
    """Build an ambient from a config mapping.

    Accepted forms: ``{"kind": "ball", "radius": 1.0}`` and
    ``{"kind": "level_set", "name": "ellipsoid", "semiaxes": [1, 1, 2]}``.
    """
    if not isinstance(cfg, dict) or "kind" not in cfg:
        raise AmbientError("ambient config must be a mapping with a 'kind' key")
    kind = cfg["kind"]
    if kind == "ball":
        return Ball(cfg.get("radius", 1.0))
    if kind == "level_set":
        name = cfg.get("name")
        if name not in _LEVEL_SET_REGISTRY:
            raise AmbientError(
                f"unknown level-set body {name!r}; "
                f"available: {sorted(_LEVEL_SET_REGISTRY)}"
            )
        return _LEVEL_SET_REGISTRY[name](cfg)
    raise AmbientError(f"unknown ambient kind {kind!r}")
