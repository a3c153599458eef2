"""Closed-form free-boundary minimal surfaces in the unit ball, as meshes.

Two exemplars exist in closed form: the equatorial disk and the critical
catenoid (the catenoid scaled so it meets the unit sphere orthogonally).
Both are produced as structured tensor-grid triangulations so refinement
convergence rates stay clean. ``perturb`` generates deterministic smooth
perturbations used as solver test inputs.
"""

from __future__ import annotations

import numpy as np

from .mesh import MeshError, TriMesh

__all__ = [
    "equatorial_disk",
    "critical_catenoid",
    "critical_catenoid_parameters",
    "perturb",
]


def equatorial_disk(n_radial=8, n_angular=32):
    """Structured triangulation of the unit disk in the plane ``z = 0``.

    Parameters
    ----------
    n_radial : int
        Number of concentric rings (>= 2).
    n_angular : int
        Vertices per ring (>= 8).

    Returns
    -------
    TriMesh
        Disk with ``1 + n_radial * n_angular`` vertices; the outermost ring
        lies exactly on the unit circle, every vertex has ``z = 0`` exactly.
    """
    if n_radial < 2 or n_angular < 8:
        raise ValueError("need n_radial >= 2 and n_angular >= 8")
    theta = 2.0 * np.pi * np.arange(n_angular) / n_angular
    verts = [np.zeros((1, 3))]
    for j in range(1, n_radial + 1):
        r = j / n_radial
        ring = np.column_stack(
            [r * np.cos(theta), r * np.sin(theta), np.zeros(n_angular)]
        )
        verts.append(ring)
    v = np.concatenate(verts, axis=0)

    def ring_index(j, i):
        return 1 + (j - 1) * n_angular + (i % n_angular)

    faces = []
    for i in range(n_angular):
        faces.append([0, ring_index(1, i), ring_index(1, i + 1)])
    for j in range(1, n_radial):
        for i in range(n_angular):
            a = ring_index(j, i)
            b = ring_index(j + 1, i)
            c = ring_index(j + 1, i + 1)
            d = ring_index(j, i + 1)
            faces.append([a, b, c])
            faces.append([a, c, d])
    return TriMesh(v, np.asarray(faces, dtype=np.int64))


def critical_catenoid_parameters():
    """Scaling of the catenoid that meets the unit sphere orthogonally.

    Returns
    -------
    s0 : float
        Unique positive root of ``t * tanh(t) = 1``, found by bisection on
        [1, 1.5] to 1e-14.
    scale : float
        Overall scale ``(cosh(s0)^2 + s0^2) ** -0.5`` putting the boundary
        circles on the unit sphere.

    Notes
    -----
    The orthogonality condition is exactly ``s0 = coth(s0)``: the meridian
    velocity at the rim is then parallel to the position vector. The root is
    verified to satisfy ``s0 * tanh(s0) = 1`` within 1e-13 after bisection.
    """
    lo, hi = 1.0, 1.5

    def f(t):
        return t * np.tanh(t) - 1.0

    if not (f(lo) < 0.0 < f(hi)):
        raise RuntimeError("root of t*tanh(t) - 1 is not bracketed in [1, 1.5]")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if hi - lo <= 1e-14:
            break
        if f(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    s0 = 0.5 * (lo + hi)
    if abs(s0 * np.tanh(s0) - 1.0) > 1e-13:
        raise RuntimeError("bisection failed to converge to the catenoid parameter")
    scale = 1.0 / np.sqrt(np.cosh(s0) ** 2 + s0**2)
    return float(s0), float(scale)


def critical_catenoid(n_s=16, n_theta=32):
    """Structured triangulation of the critical catenoid in the unit ball.

    The surface is ``scale * (cosh(s) cos(t), cosh(s) sin(t), s)`` for
    ``s in [-s0, s0]``; both boundary circles lie exactly on the unit sphere
    and the annulus meets the sphere orthogonally in the continuum limit.

    Parameters
    ----------
    n_s : int
        Grid intervals along the axis (>= 8).
    n_theta : int
        Vertices around each circle (>= 16).
    """
    if n_s < 8 or n_theta < 16:
        raise ValueError("need n_s >= 8 and n_theta >= 16")
    s0, c = critical_catenoid_parameters()
    s = np.linspace(-s0, s0, n_s + 1)
    theta = 2.0 * np.pi * np.arange(n_theta) / n_theta
    S, T = np.meshgrid(s, theta, indexing="ij")
    v = np.column_stack(
        [
            (c * np.cosh(S) * np.cos(T)).ravel(),
            (c * np.cosh(S) * np.sin(T)).ravel(),
            (c * S).ravel(),
        ]
    )

    def vid(j, i):
        return j * n_theta + (i % n_theta)

    faces = []
    for j in range(n_s):
        for i in range(n_theta):
            a = vid(j, i)
            b = vid(j + 1, i)
            cc = vid(j + 1, i + 1)
            d = vid(j, i + 1)
            faces.append([a, b, cc])
            faces.append([a, cc, d])
    return TriMesh(v, np.asarray(faces, dtype=np.int64))


def _orthogonalize(vals, translation_traces, weights):
    """Remove weighted projections of a scalar field onto given trace fields."""
    basis = []
    for phi in translation_traces:
        phi = phi.astype(np.float64).copy()
        for b in basis:
            phi -= (weights * phi * b).sum() * b
        nrm2 = (weights * phi * phi).sum()
        if nrm2 > 1e-20:
            basis.append(phi / np.sqrt(nrm2))
    out = vals.copy()
    for b in basis:
        out -= (weights * out * b).sum() * b
    return out


def _smooth_scalar_field(rng, n_modes=6):
    """Random low-frequency trigonometric field on R^3; smooth by construction."""
    freq = rng.uniform(0.5, 2.5, size=n_modes)
    dirs = rng.normal(size=(n_modes, 3))
    dirs /= np.linalg.norm(dirs, axis=1)[:, None]
    phases = rng.uniform(0.0, 2.0 * np.pi, size=n_modes)
    amps = rng.normal(size=n_modes)

    def field(p):
        out = np.zeros(p.shape[0])
        for k in range(n_modes):
            out += amps[k] * np.sin(freq[k] * (p @ dirs[k]) + phases[k])
        return out

    return field


def perturb(mesh, ambient, amplitude, seed):
    """Smooth deterministic perturbation of a mesh inside its container.

    Interior vertices move along their estimated normals by a smooth random
    field with sup-norm at most ``amplitude``; boundary vertices slide
    tangentially along the wall (also bounded by ``amplitude``) and are
    re-projected onto it. Topology is preserved; the same seed gives
    bit-identical output.

    Raises
    ------
    MeshError
        If the amplitude is large enough to degenerate a face.
    """
    if amplitude < 0.0:
        raise ValueError("amplitude must be nonnegative")
    if amplitude == 0.0:
        return TriMesh(mesh.vertices, mesh.faces)

    rng = np.random.default_rng(seed)
    normal_field = _smooth_scalar_field(rng)
    tangent_fields = [_smooth_scalar_field(rng) for _ in range(3)]

    v = mesh.vertices.copy()
    normals = mesh.vertex_normals()
    interior = mesh.interior_mask
    boundary = mesh.boundary_vertices
    weights = mesh.vertex_areas()

    # The solver looks for saddle points of area whose unstable directions
    # are the trivial families (translations, dilation, coherent boundary
    # slides), so the generated displacement is kept orthogonal to those
    # families: shape noise only.
    vals = normal_field(v[interior])
    if vals.size:
        traces = list(normals[interior].T.copy())
        traces.append((v[interior] * normals[interior]).sum(axis=1))
        vals = _orthogonalize(vals, traces, weights[interior])
    sup = np.max(np.abs(vals)) if vals.size else 0.0
    if sup > 0.0:
        v[interior] += (amplitude / sup) * vals[:, None] * normals[interior]

    if boundary.size:
        pb = v[boundary]
        n = ambient.boundary_normal(ambient.project_to_boundary(pb))
        g = np.column_stack([f(pb) for f in tangent_fields])
        g -= (g * n).sum(axis=1)[:, None] * n
        w = weights[boundary]
        trace_fields = []
        for axis in range(3):
            t_field = np.zeros_like(g)
            t_field[:, axis] = 1.0
            t_field -= (t_field * n).sum(axis=1)[:, None] * n
            trace_fields.append(t_field)
        offset = 0
        tangents = mesh.boundary_tangents()
        meridian = np.cross(n, tangents - (tangents * n).sum(axis=1)[:, None] * n)
        for loop in mesh.boundary_loops:
            t_field = np.zeros_like(g)
            t_field[offset : offset + loop.size] = meridian[
                offset : offset + loop.size
            ]
            offset += loop.size
            trace_fields.append(t_field)
        basis = []
        for t_field in trace_fields:
            for b_prev in basis:
                t_field -= ((t_field * b_prev).sum(axis=1) * w).sum() * b_prev
            nrm2 = ((t_field * t_field).sum(axis=1) * w).sum()
            if nrm2 > 1e-12 * float(w.sum()):
                basis.append(t_field / np.sqrt(nrm2))
        for b_field in basis:
            g -= ((g * b_field).sum(axis=1) * w).sum() * b_field
        sup = np.max(np.linalg.norm(g, axis=1))
        if sup > 0.0:
            pb = pb + (amplitude / sup) * g
        v[boundary] = ambient.project_to_boundary(pb)

    try:
        return TriMesh(v, mesh.faces)
    except MeshError as exc:
        raise MeshError(
            f"perturbation amplitude {amplitude} degenerated the mesh: {exc}"
        ) from exc
