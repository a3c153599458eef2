"""Oriented triangle meshes with boundary.

The :class:`TriMesh` type validates manifoldness, orientation and boundary
structure once at construction time; everything downstream (measurements,
refinement, file I/O, matrix assembly) relies on those invariants and treats
the mesh as immutable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "MeshError",
    "Topology",
    "TriMesh",
    "refine",
    "read_off",
    "write_off",
    "read_obj",
    "write_obj",
    "load_mesh",
    "save_mesh",
]

# Face is degenerate when its area is below this fraction of its longest
# edge squared (scale invariant).
_DEGENERATE_REL = 1e-14


class MeshError(ValueError):
    """Vertex/face data does not describe a valid oriented manifold mesh."""


@dataclass(frozen=True)
class Topology:
    """Genus, boundary-loop count and Euler characteristic of a surface mesh.

    For an orientable compact surface these satisfy
    ``euler_characteristic == 2 - 2 * genus - boundary_components``.
    """

    genus: int
    boundary_components: int
    euler_characteristic: int


def _face_cross(vertices, faces):
    """Cross products (b - a) x (c - a) per face; twice the face area vectors."""
    a = vertices[faces[:, 0]]
    b = vertices[faces[:, 1]]
    c = vertices[faces[:, 2]]
    return np.cross(b - a, c - a)


class TriMesh:
    """Immutable oriented triangle mesh with boundary, embedded in 3-space.

    Parameters
    ----------
    vertices : array_like, shape (n, 3)
        Vertex positions, interpreted in units of the ambient-ball radius.
    faces : array_like, shape (m, 3)
        Oriented vertex index triples with consistent winding.

    Raises
    ------
    MeshError
        If the data violates any invariant: out-of-range or unreferenced
        vertices, degenerate faces, non-manifold edges (three or more
        incident faces), inconsistent orientation, or boundary edges that
        do not close up into disjoint simple loops.

    Notes
    -----
    Boundary loops are extracted once and stored in a deterministic order
    (each loop starts at its smallest vertex index; loops sorted by that
    index). The concatenation of the loops defines the stable boundary-node
    ordering used by the Steklov operators.
    """

    def __init__(self, vertices, faces):
        v = np.ascontiguousarray(np.asarray(vertices, dtype=np.float64))
        f = np.ascontiguousarray(np.asarray(faces, dtype=np.int64))
        if v.ndim != 2 or v.shape[1] != 3:
            raise MeshError(f"vertices must have shape (n, 3), got {v.shape}")
        if f.ndim != 2 or f.shape[1] != 3:
            raise MeshError(f"faces must have shape (m, 3), got {f.shape}")
        if f.shape[0] == 0:
            raise MeshError("face list is empty")
        if not np.all(np.isfinite(v)):
            raise MeshError("vertex coordinates must be finite")
        if f.min() < 0 or f.max() >= v.shape[0]:
            raise MeshError("face indices out of range")

        used = np.zeros(v.shape[0], dtype=bool)
        used[f.reshape(-1)] = True
        if not used.all():
            raise MeshError(
                f"{np.count_nonzero(~used)} vertices are not referenced by any face"
            )

        if (
            np.any(f[:, 0] == f[:, 1])
            or np.any(f[:, 1] == f[:, 2])
            or np.any(f[:, 2] == f[:, 0])
        ):
            bad = int(
                np.nonzero(
                    (f[:, 0] == f[:, 1]) | (f[:, 1] == f[:, 2]) | (f[:, 2] == f[:, 0])
                )[0][0]
            )
            raise MeshError(f"face {bad} repeats a vertex")

        cross = _face_cross(v, f)
        areas2 = np.linalg.norm(cross, axis=1)
        edge_sq = np.zeros(f.shape[0])
        for k in range(3):
            d = v[f[:, (k + 1) % 3]] - v[f[:, k]]
            edge_sq = np.maximum(edge_sq, (d * d).sum(axis=1))
        degenerate = areas2 <= 2.0 * _DEGENERATE_REL * edge_sq
        if degenerate.any():
            bad = int(np.nonzero(degenerate)[0][0])
            raise MeshError(f"face {bad} is degenerate (zero area)")

        # Directed half-edges; duplicates mean inconsistent winding, and an
        # undirected edge present in three or more faces is non-manifold.
        he = np.concatenate(
            [f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]], axis=0
        )
        und = np.sort(he, axis=1)
        _, und_inv, und_counts = np.unique(
            und, axis=0, return_inverse=True, return_counts=True
        )
        if und_counts.max() > 2:
            eid = int(np.argmax(und_counts))
            i, j = und[np.nonzero(und_inv == eid)[0][0]]
            raise MeshError(
                f"non-manifold edge ({i}, {j}) belongs to {und_counts[eid]} faces"
            )
        _, dir_counts = np.unique(he, axis=0, return_counts=True)
        if dir_counts.max() > 1:
            raise MeshError(
                "inconsistent orientation: a directed edge appears in two faces "
                "with the same winding (or the mesh is non-orientable)"
            )

        self._v = v
        self._f = f
        self._n_edges = und_counts.shape[0]
        boundary_he = he[und_counts[und_inv] == 1]
        self._boundary_loops = _extract_loops(boundary_he, v.shape[0])

        bnd = (
            np.concatenate(self._boundary_loops)
            if self._boundary_loops
            else np.zeros(0, dtype=np.int64)
        )
        self._boundary_vertices = bnd
        mask = np.zeros(v.shape[0], dtype=bool)
        mask[bnd] = True
        self._boundary_mask = mask

        self._v.flags.writeable = False
        self._f.flags.writeable = False

    # -- basic accessors ---------------------------------------------------

    @property
    def vertices(self):
        """Read-only (n, 3) float64 array of vertex positions."""
        return self._v

    @property
    def faces(self):
        """Read-only (m, 3) int64 array of oriented faces."""
        return self._f

    @property
    def boundary_loops(self):
        """Tuple of index arrays, one closed loop per boundary component."""
        return self._boundary_loops

    @property
    def boundary_vertices(self):
        """Concatenation of the boundary loops: the stable boundary ordering."""
        return self._boundary_vertices

    @property
    def boundary_mask(self):
        """Boolean mask over vertices, True on the boundary."""
        return self._boundary_mask

    @property
    def interior_mask(self):
        """Boolean mask over vertices, True in the interior."""
        return ~self._boundary_mask

    @property
    def n_vertices(self):
        return self._v.shape[0]

    @property
    def n_faces(self):
        return self._f.shape[0]

    @property
    def n_edges(self):
        return self._n_edges

    # -- measurements ------------------------------------------------------

    def face_areas(self):
        """Areas of all faces (strictly positive by construction)."""
        return 0.5 * np.linalg.norm(_face_cross(self._v, self._f), axis=1)

    def face_normals(self):
        """Unit face normals following the face winding."""
        cross = _face_cross(self._v, self._f)
        return cross / np.linalg.norm(cross, axis=1)[:, None]

    def area(self):
        """Total surface area (sum of face areas)."""
        return float(self.face_areas().sum())

    def boundary_length(self):
        """Total length of all boundary loops.

        Raises
        ------
        MeshError
            If the mesh is closed (no boundary); the toolkit only handles
            surfaces with nonempty boundary.
        """
        if not self._boundary_loops:
            raise MeshError("mesh is closed (no boundary loops)")
        total = 0.0
        for loop in self._boundary_loops:
            p = self._v[loop]
            total += float(np.linalg.norm(np.roll(p, -1, axis=0) - p, axis=1).sum())
        return total

    def topology(self):
        """Topological invariants (genus, boundary components, Euler char).

        Raises
        ------
        MeshError
            If ``2 - chi - gamma`` is odd or negative, which signals a
            corrupt mesh (non-orientable meshes are already rejected at
            construction).
        """
        chi = self.n_vertices - self._n_edges + self.n_faces
        gamma = len(self._boundary_loops)
        twice_genus = 2 - chi - gamma
        if twice_genus < 0 or twice_genus % 2 != 0:
            raise MeshError(
                f"invalid topology: chi={chi}, boundary loops={gamma}"
            )
        return Topology(twice_genus // 2, gamma, chi)

    def corner_angles(self):
        """Interior angle at each face corner, shape (m, 3)."""
        ang = np.empty((self.n_faces, 3))
        for k in range(3):
            p = self._v[self._f[:, k]]
            u = self._v[self._f[:, (k + 1) % 3]] - p
            w = self._v[self._f[:, (k + 2) % 3]] - p
            cu = np.linalg.norm(u, axis=1)
            cw = np.linalg.norm(w, axis=1)
            cosang = (u * w).sum(axis=1) / (cu * cw)
            ang[:, k] = np.arccos(np.clip(cosang, -1.0, 1.0))
        return ang

    def vertex_normals(self):
        """Angle-weighted unit vertex normals (one-sided at the boundary)."""
        fn = self.face_normals()
        ang = self.corner_angles()
        out = np.zeros_like(self._v)
        for k in range(3):
            np.add.at(out, self._f[:, k], ang[:, k][:, None] * fn)
        norms = np.linalg.norm(out, axis=1)
        if np.any(norms == 0.0):
            raise MeshError("vertex normal vanished (folded umbrella)")
        return out / norms[:, None]

    def vertex_areas(self):
        """Mixed Voronoi vertex areas (Voronoi cells, clamped on obtuse faces).

        The areas sum to the total surface area and serve as the quadrature
        weights for all per-vertex integrals.
        """
        v, f = self._v, self._f
        lsq = np.empty((self.n_faces, 3))
        for k in range(3):
            e = v[f[:, (k + 2) % 3]] - v[f[:, (k + 1) % 3]]
            lsq[:, k] = (e * e).sum(axis=1)
        area = self.face_areas()
        cot = np.empty_like(lsq)
        for k in range(3):
            cot[:, k] = (lsq[:, (k + 1) % 3] + lsq[:, (k + 2) % 3] - lsq[:, k]) / (
                4.0 * area
            )
        obtuse = cot < 0.0
        any_obtuse = obtuse.any(axis=1)
        out = np.zeros(self.n_vertices)
        for k in range(3):
            voronoi = (
                lsq[:, (k + 1) % 3] * cot[:, (k + 1) % 3]
                + lsq[:, (k + 2) % 3] * cot[:, (k + 2) % 3]
            ) / 8.0
            clamped = np.where(obtuse[:, k], 0.5 * area, 0.25 * area)
            contrib = np.where(any_obtuse, clamped, voronoi)
            np.add.at(out, f[:, k], contrib)
        return out

    # -- boundary geometry ---------------------------------------------------

    def boundary_tangents(self):
        """Unit tangents of the boundary curve at each boundary vertex.

        Aligned with :attr:`boundary_vertices`; each tangent bisects the two
        incident boundary edges and follows the loop direction induced by
        the face winding.
        """
        if not self._boundary_loops:
            raise MeshError("mesh is closed (no boundary loops)")
        chunks = []
        for loop in self._boundary_loops:
            p = self._v[loop]
            fwd = np.roll(p, -1, axis=0) - p
            bwd = p - np.roll(p, 1, axis=0)
            fwd /= np.linalg.norm(fwd, axis=1)[:, None]
            bwd /= np.linalg.norm(bwd, axis=1)[:, None]
            t = fwd + bwd
            norms = np.linalg.norm(t, axis=1)
            tiny = norms < 1e-12
            if tiny.any():
                t[tiny] = fwd[tiny]
                norms = np.linalg.norm(t, axis=1)
            chunks.append(t / norms[:, None])
        return np.concatenate(chunks)

    # -- misc ----------------------------------------------------------------

    def with_vertices(self, vertices):
        """New mesh with the same faces and replaced (re-validated) positions."""
        return TriMesh(vertices, self._f)

    def __repr__(self):
        gamma = len(self._boundary_loops)
        return (
            f"TriMesh(V={self.n_vertices}, F={self.n_faces}, "
            f"boundary_loops={gamma})"
        )


def _extract_loops(boundary_he, n_vertices):
    """Order directed boundary half-edges into disjoint simple closed loops."""
    if boundary_he.shape[0] == 0:
        return ()
    nxt = np.full(n_vertices, -1, dtype=np.int64)
    indeg = np.zeros(n_vertices, dtype=np.int64)
    for i, j in boundary_he:
        if nxt[i] != -1:
            raise MeshError(
                f"boundary vertex {i} has two outgoing boundary edges "
                "(pinched or non-simple boundary loop)"
            )
        nxt[i] = j
        indeg[j] += 1
    if np.any(indeg[nxt >= 0] != 1) or np.any(indeg[nxt < 0] != 0):
        raise MeshError("open boundary chain: boundary edges do not close up")
    loops = []
    visited = np.zeros(n_vertices, dtype=bool)
    starts = np.sort(np.nonzero(nxt >= 0)[0])
    for start in starts:
        if visited[start]:
            continue
        loop = [start]
        visited[start] = True
        cur = nxt[start]
        while cur != start:
            if cur < 0 or visited[cur]:
                raise MeshError("open boundary chain: boundary edges do not close up")
            loop.append(cur)
            visited[cur] = True
            cur = nxt[cur]
        loops.append(np.asarray(loop, dtype=np.int64))
    loops.sort(key=lambda lp: int(lp[0]))
    return tuple(loops)


def refine(mesh, ambient=None):
    """Uniform 1-to-4 subdivision, with boundary midpoints projected to the wall.

    Parameters
    ----------
    mesh : TriMesh
        Input surface. If ``ambient`` is given, its boundary vertices must lie
        on the ambient wall within 1e-6.
    ambient : ConvexAmbient, optional
        Container domain; new midpoints of boundary edges are projected onto
        its wall so refined meshes keep their boundary on the constraint set.

    Returns
    -------
    TriMesh
        Mesh with four times as many faces and identical topology.
    """
    v, f = mesh.vertices, mesh.faces
    if ambient is not None and mesh.boundary_vertices.size:
        dist = ambient.boundary_distance(v[mesh.boundary_vertices])
        if np.max(np.abs(dist)) > 1e-6:
            raise MeshError(
                "boundary vertices are not on the ambient wall (within 1e-6)"
            )

    he = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]], axis=0)
    und = np.sort(he, axis=1)
    edges, inv, counts = np.unique(und, axis=0, return_inverse=True, return_counts=True)
    n = v.shape[0]
    mid = 0.5 * (v[edges[:, 0]] + v[edges[:, 1]])

    if ambient is not None:
        boundary_edge = counts == 1
        if boundary_edge.any():
            mid[boundary_edge] = ambient.project_to_boundary(mid[boundary_edge])

    m = f.shape[0]
    e01 = n + inv[0:m]
    e12 = n + inv[m : 2 * m]
    e20 = n + inv[2 * m : 3 * m]
    new_f = np.concatenate(
        [
            np.column_stack([f[:, 0], e01, e20]),
            np.column_stack([f[:, 1], e12, e01]),
            np.column_stack([f[:, 2], e20, e12]),
            np.column_stack([e01, e12, e20]),
        ],
        axis=0,
    )
    return TriMesh(np.concatenate([v, mid], axis=0), new_f)


# -- file I/O ----------------------------------------------------------------
#
# Positions and faces only; boundary loops are recomputed on load. The writers
# emit 17 significant digits so that write -> read round-trips bit-exactly.


def write_off(mesh, path):
    """Write mesh to an ASCII OFF file."""
    with open(path, "w") as fh:
        fh.write("OFF\n")
        fh.write(f"{mesh.n_vertices} {mesh.n_faces} 0\n")
        for x, y, z in mesh.vertices:
            fh.write(f"{x:.17g} {y:.17g} {z:.17g}\n")
        for a, b, c in mesh.faces:
            fh.write(f"3 {a} {b} {c}\n")


def read_off(path):
    """Read a triangle mesh from an ASCII OFF file."""
    with open(path) as fh:
        tokens = []
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if line:
                tokens.extend(line.split())
    if not tokens or tokens[0] != "OFF":
        raise MeshError(f"{path}: not an OFF file")
    nv, nf = int(tokens[1]), int(tokens[2])
    pos = 4
    verts = np.array(tokens[pos : pos + 3 * nv], dtype=np.float64).reshape(nv, 3)
    pos += 3 * nv
    faces = []
    for _ in range(nf):
        cnt = int(tokens[pos])
        if cnt != 3:
            raise MeshError(f"{path}: only triangle faces are supported")
        faces.append([int(t) for t in tokens[pos + 1 : pos + 4]])
        pos += 1 + cnt
    return TriMesh(verts, np.asarray(faces, dtype=np.int64))


def write_obj(mesh, path):
    """Write mesh to a Wavefront OBJ file."""
    with open(path, "w") as fh:
        for x, y, z in mesh.vertices:
            fh.write(f"v {x:.17g} {y:.17g} {z:.17g}\n")
        for a, b, c in mesh.faces:
            fh.write(f"f {a + 1} {b + 1} {c + 1}\n")


def read_obj(path):
    """Read a triangle mesh from a Wavefront OBJ file (v/f records only)."""
    verts = []
    faces = []
    with open(path) as fh:
        for line in fh:
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            if parts[0] == "v":
                verts.append([float(p) for p in parts[1:4]])
            elif parts[0] == "f":
                idx = [int(p.split("/", 1)[0]) for p in parts[1:]]
                if len(idx) != 3:
                    raise MeshError(f"{path}: only triangle faces are supported")
                faces.append([i - 1 for i in idx])
    if not faces:
        raise MeshError(f"{path}: no faces found")
    return TriMesh(
        np.asarray(verts, dtype=np.float64), np.asarray(faces, dtype=np.int64)
    )


def load_mesh(path):
    """Load OFF or OBJ by file extension."""
    p = str(path)
    if p.lower().endswith(".off"):
        return read_off(p)
    if p.lower().endswith(".obj"):
        return read_obj(p)
    raise MeshError(f"unsupported mesh format: {p}")


def save_mesh(mesh, path):
    """Save OFF or OBJ by file extension."""
    p = str(path)
    if p.lower().endswith(".off"):
        return write_off(mesh, p)
    if p.lower().endswith(".obj"):
        return write_obj(mesh, p)
    raise MeshError(f"unsupported mesh format: {p}")
