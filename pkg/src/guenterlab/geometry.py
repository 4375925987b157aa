"""Geometric carriers: level sets, tensor grids, triangulated surfaces,
extruded cylinders, and marked subregions.

All carriers are immutable after construction.  Operator matrices and other
derived data are memoized on a private per-instance cache, so repeated
assembly on the same mesh is cheap and concurrent read access is safe.
"""

import hashlib

import numpy as np

from .errors import (
    DegenerateGradient, NonUnitNormal, UnknownShape, ResolutionTooCoarse,
    EmptyRegion, ZeroMeasure, DegenerateInterval, UnsupportedDimension,
)


class LevelSetSurface:
    """Smooth hypersurface given implicitly as the zero set of psi.

    Parameters
    ----------
    psi : callable
        Scalar function of an ambient point (shape (n,) array).
    grad_psi : callable
        Analytic gradient of psi, returns shape (n,) array.
    ambient_dim : int
        Ambient dimension n >= 2.
    hess_psi : callable, optional
        Analytic Hessian, returns (n, n).  When absent, a central-difference
        Hessian of grad_psi is used where second derivatives are needed.
    """

    def __init__(self, psi, grad_psi, ambient_dim, hess_psi=None, name=None):
        if ambient_dim < 2:
            raise UnsupportedDimension("ambient dimension must be >= 2")
        self.psi = psi
        self.grad_psi = grad_psi
        self.ambient_dim = int(ambient_dim)
        self._hess = hess_psi
        self.name = name

    def hess_psi(self, x):
        if self._hess is not None:
            return np.asarray(self._hess(x), dtype=float)
        # step balances truncation vs cancellation for a first derivative
        # of an analytic gradient; grad_psi is exact so eps**(1/3) applies
        x = np.asarray(x, dtype=float)
        n = self.ambient_dim
        h = (np.finfo(float).eps) ** (1.0 / 3.0) * max(1.0, np.linalg.norm(x))
        H = np.empty((n, n))
        for j in range(n):
            dx = np.zeros(n)
            dx[j] = h
            H[:, j] = (np.asarray(self.grad_psi(x + dx), dtype=float)
                       - np.asarray(self.grad_psi(x - dx), dtype=float)) / (2 * h)
        return 0.5 * (H + H.T)

    def project(self, x, tol=1e-13, maxit=25):
        """Project an ambient point onto the zero level set (Newton steps
        along grad_psi)."""
        y = np.asarray(x, dtype=float).copy()
        for _ in range(maxit):
            v = self.psi(y)
            if abs(v) <= tol:
                break
            g = np.asarray(self.grad_psi(y), dtype=float)
            gg = g @ g
            if gg < 1e-28:
                raise DegenerateGradient("level-set gradient vanished during projection")
            y = y - (v / gg) * g
        return y


def unit_normal(surface: LevelSetSurface, x):
    """Unit normal of a level-set surface at an ambient point.

    Returns grad_psi(x) / |grad_psi(x)|.
    """
    g = np.asarray(surface.grad_psi(x), dtype=float)
    norm = np.linalg.norm(g)
    if norm < 1e-14:
        raise DegenerateGradient(f"|grad psi| = {norm:.3e} at {x}")
    return g / norm


def tangent_frame(nu):
    """Tangential frame d^j = e^j - nu_j nu for a unit normal.

    Returns an (n, n) array whose j-th row is d^j.  The rows satisfy
    <nu, d^j> = 0 and sum_k nu_k d^k = 0 identically.
    """
    nu = np.asarray(nu, dtype=float)
    if abs(np.linalg.norm(nu) - 1.0) > 1e-12:
        raise NonUnitNormal(f"|nu| = {np.linalg.norm(nu)!r}")
    return np.eye(len(nu)) - np.outer(nu, nu)


# ---------------------------------------------------------------------------
# flat carriers


class DomainGrid:
    """Axis-aligned tensor grid with trapezoid quadrature.

    Nodes are ordered C-style (last axis fastest).  ``nodes`` has shape
    (N, n); ``node_weights`` sums to the box measure exactly.
    """

    kind = "grid"

    def __init__(self, box, shape):
        box = np.atleast_2d(np.asarray(box, dtype=float))
        shape = tuple(int(s) for s in np.atleast_1d(shape))
        if box.shape != (len(shape), 2):
            raise ValueError("box must provide (lo, hi) per axis")
        if any(s < 3 for s in shape):
            raise ResolutionTooCoarse("grids need at least 3 nodes per axis")
        if np.any(box[:, 1] <= box[:, 0]):
            raise DegenerateInterval("box bounds must be increasing")
        self.box = box
        self.shape = shape
        self.dim = len(shape)
        self.spacing = (box[:, 1] - box[:, 0]) / (np.array(shape) - 1)
        axes = [np.linspace(box[a, 0], box[a, 1], shape[a])
                for a in range(self.dim)]
        mesh = np.meshgrid(*axes, indexing="ij")
        self.nodes = np.stack([m.ravel() for m in mesh], axis=1)
        w1 = []
        for a in range(self.dim):
            w = np.full(shape[a], self.spacing[a])
            w[0] *= 0.5
            w[-1] *= 0.5
            w1.append(w)
        wgrid = w1[0]
        for w in w1[1:]:
            wgrid = np.multiply.outer(wgrid, w)
        self.node_weights = wgrid.ravel()
        self.axis_coords = axes
        onb = np.zeros(shape, dtype=bool)
        for a in range(self.dim):
            sl = [slice(None)] * self.dim
            sl[a] = 0
            onb[tuple(sl)] = True
            sl[a] = -1
            onb[tuple(sl)] = True
        self.boundary_mask = onb.ravel()
        self._cache = {}

    @property
    def n_nodes(self):
        return len(self.nodes)

    def measure(self):
        return float(np.prod(self.box[:, 1] - self.box[:, 0]))

    def multi_index(self, flat):
        return np.unravel_index(flat, self.shape)

    def flat_index(self, multi):
        return np.ravel_multi_index(multi, self.shape)


class SurfaceMesh:
    """Triangulated hypersurface (segments when the ambient dimension is 2).

    ``vertices`` is (nv, n); ``elements`` is (ne, n) with vertex ids per
    segment/triangle; ``vertex_normals`` are unit; ``vertex_weights`` lump
    the element measures (1/2 per segment endpoint, 1/3 per triangle corner).
    """

    kind = "surface"

    def __init__(self, vertices, elements, vertex_normals,
                 source=None, element_measures=None, name=None,
                 check_connected=True):
        self.vertices = np.asarray(vertices, dtype=float)
        self.elements = np.asarray(elements, dtype=np.int64)
        self.vertex_normals = np.asarray(vertex_normals, dtype=float)
        self.dim = self.vertices.shape[1]
        self.source = source
        self.name = name
        if self.elements.shape[1] != self.dim:
            raise ValueError("elements must have n vertex ids in ambient dim n")
        lens = np.linalg.norm(self.vertex_normals, axis=1)
        if np.any(np.abs(lens - 1.0) > 1e-12):
            raise NonUnitNormal("vertex normals must have unit length")
        if element_measures is None:
            element_measures = self._embedded_measures()
        self.element_measures = np.asarray(element_measures, dtype=float)
        if np.any(self.element_measures <= 0):
            raise ZeroMeasure("degenerate element in surface mesh")
        w = np.zeros(len(self.vertices))
        share = self.element_measures / self.elements.shape[1]
        for local in range(self.elements.shape[1]):
            np.add.at(w, self.elements[:, local], share)
        self.vertex_weights = w
        self.connected = self._is_connected()
        if check_connected and not self.connected:
            # surfaces are expected to be single components unless a caller
            # builds a disconnected mesh deliberately
            pass
        self._cache = {}

    def _embedded_measures(self):
        v = self.vertices
        e = self.elements
        if self.dim == 2:
            return np.linalg.norm(v[e[:, 1]] - v[e[:, 0]], axis=1)
        if self.dim == 3:
            c = np.cross(v[e[:, 1]] - v[e[:, 0]], v[e[:, 2]] - v[e[:, 0]])
            return 0.5 * np.linalg.norm(c, axis=1)
        raise UnsupportedDimension("surface meshes support ambient dim 2 or 3")

    def _is_connected(self):
        nv = len(self.vertices)
        if nv == 0:
            return False
        adj = [[] for _ in range(nv)]
        for el in self.elements:
            for a in range(len(el)):
                for b in range(a + 1, len(el)):
                    adj[el[a]].append(el[b])
                    adj[el[b]].append(el[a])
        seen = np.zeros(nv, dtype=bool)
        stack = [0]
        seen[0] = True
        while stack:
            i = stack.pop()
            for j in adj[i]:
                if not seen[j]:
                    seen[j] = True
                    stack.append(j)
        return bool(seen.all())

    @property
    def n_nodes(self):
        return len(self.vertices)

    def measure(self):
        return float(self.element_measures.sum())

    def element_centroids(self):
        key = "centroids"
        if key not in self._cache:
            self._cache[key] = self.vertices[self.elements].mean(axis=1)
        return self._cache[key]


class CylinderMesh:
    """Product carrier base x [a, b] with ``layers`` node layers.

    Node numbering is layer-major: node = layer * nb + base_node.  Weights
    are products of base weights and trapezoid weights on the interval, so
    the cylinder measure is exactly base measure times (b - a).
    """

    kind = "cylinder"

    def __init__(self, base, interval, layers):
        a, b = float(interval[0]), float(interval[1])
        if not b > a:
            raise DegenerateInterval(f"interval [{a}, {b}] is degenerate")
        layers = int(layers)
        if layers < 2:
            raise ValueError("need at least 2 node layers")
        self.base = base
        self.interval = (a, b)
        self.layers = layers
        self.t_nodes = np.linspace(a, b, layers)
        wt = np.full(layers, (b - a) / (layers - 1))
        wt[0] *= 0.5
        wt[-1] *= 0.5
        self.layer_weights = wt
        nb = base.n_nodes
        self.node_weights = np.repeat(wt, nb) * np.tile(base_weights(base), layers)
        self._cache = {}

    @property
    def n_nodes(self):
        return self.base.n_nodes * self.layers

    def node_id(self, base_node, layer):
        return layer * self.base.n_nodes + base_node

    def measure(self):
        return self.base.measure() * (self.interval[1] - self.interval[0])


def base_weights(carrier):
    """Quadrature weights of any carrier, by its kind."""
    if carrier.kind == "grid":
        return carrier.node_weights
    if carrier.kind == "surface":
        return carrier.vertex_weights
    if carrier.kind == "cylinder":
        return carrier.node_weights
    raise TypeError(f"unknown carrier {carrier!r}")


# ---------------------------------------------------------------------------
# marked regions


class MarkedRegion:
    """Node subset of a carrier with co-dimension-1 (or subdomain) weights.

    kind is one of ``boundary-part`` (weights from boundary facets / surface
    edges wholly inside the selection), ``subdomain`` (restriction of the
    carrier weights), or ``point`` (counting weights; admissible only for
    sup-norm inequalities).
    """

    def __init__(self, parent, node_ids, region_weights, kind, name=None):
        self.parent = parent
        self.node_ids = np.asarray(node_ids, dtype=np.int64)
        self.region_weights = np.asarray(region_weights, dtype=float)
        self.kind = kind
        self.name = name
        if len(self.node_ids) == 0:
            raise EmptyRegion("region has no nodes")
        if kind != "point" and self.region_weights.sum() <= 0:
            raise ZeroMeasure("region carries no measure")

    def measure(self):
        return float(self.region_weights.sum())

    def weight_vector(self):
        """Region weights scattered to a full-length node vector."""
        w = np.zeros(self.parent.n_nodes)
        w[self.node_ids] = self.region_weights
        return w

    def mask(self):
        m = np.zeros(self.parent.n_nodes, dtype=bool)
        m[self.node_ids] = True
        return m


def _grid_boundary_weights(grid: DomainGrid, selected):
    """Co-dimension-1 weights for a selected boundary node set.

    For a 1-D grid the boundary is a point pair and carries counting
    measure.  Otherwise every boundary facet (cell of a face of the box)
    whose corners are all selected contributes measure / corners to each
    corner.
    """
    n = grid.dim
    w = np.zeros(grid.n_nodes)
    if n == 1:
        for i in (0, grid.shape[0] - 1):
            if selected[i]:
                w[i] = 1.0
        return w
    shape = grid.shape
    sel = selected.reshape(shape)
    for axis in range(n):
        for side in (0, -1):
            sl = [slice(None)] * n
            sl[axis] = side
            face_sel = sel[tuple(sl)]
            # flat index offsets of the face lattice
            other_axes = [a for a in range(n) if a != axis]
            face_shape = tuple(shape[a] for a in other_axes)
            cell_measure = float(np.prod([grid.spacing[a] for a in other_axes]))
            corners_per_cell = 2 ** (n - 1)
            it = np.ndindex(*[s - 1 for s in face_shape])
            for cell in it:
                corner_ids = []
                ok = True
                for corner in np.ndindex(*([2] * (n - 1))):
                    midx = [0] * n
                    midx[axis] = 0 if side == 0 else shape[axis] - 1
                    for k, a in enumerate(other_axes):
                        midx[a] = cell[k] + corner[k]
                    if not sel[tuple(midx)]:
                        ok = False
                        break
                    corner_ids.append(grid.flat_index(tuple(midx)))
                if ok:
                    for cid in corner_ids:
                        w[cid] += cell_measure / corners_per_cell
    return w


def _surface_region_weights(mesh: SurfaceMesh, selected, kind):
    w = np.zeros(mesh.n_nodes)
    if kind == "subdomain":
        # restriction of the carrier weights, same convention as on grids;
        # thin bands of vertices then carry positive measure, which keeps
        # restriction-rank checks usable for curve-like vertex sets
        w[selected] = mesh.vertex_weights[selected]
        return w
    # boundary-part: a curve on a 2-surface is carried by mesh edges; on a
    # 1-surface edges and elements coincide, so the exact element measures
    # (arc lengths on a circle) apply
    if mesh.dim == 2:
        for e, (a, b) in enumerate(mesh.elements):
            if selected[a] and selected[b]:
                w[a] += 0.5 * mesh.element_measures[e]
                w[b] += 0.5 * mesh.element_measures[e]
        return w
    edges = set()
    for row in mesh.elements:
        k = len(row)
        for a in range(k):
            for b in range(a + 1, k):
                edges.add((min(row[a], row[b]), max(row[a], row[b])))
    for (a, b) in edges:
        if selected[a] and selected[b]:
            length = np.linalg.norm(mesh.vertices[a] - mesh.vertices[b])
            w[a] += 0.5 * length
            w[b] += 0.5 * length
    return w


def mark_region(carrier, predicate, kind="boundary-part", name=None):
    """Mark the node set where ``predicate(node_point) -> bool``.

    Weights follow the region kind; see :class:`MarkedRegion`.  Raises
    EmptyRegion / ZeroMeasure per the type contract.
    """
    if carrier.kind == "cylinder":
        raise TypeError("mark regions on the base and extrude_region them")
    pts = carrier.nodes if carrier.kind == "grid" else carrier.vertices
    selected = np.array([bool(predicate(p)) for p in pts])
    ids = np.nonzero(selected)[0]
    if len(ids) == 0:
        raise EmptyRegion("predicate selected no nodes")
    if kind == "point":
        weights = np.ones(len(ids))
        return MarkedRegion(carrier, ids, weights, kind, name)
    if kind == "subdomain":
        if carrier.kind == "grid":
            weights = carrier.node_weights[ids]
        else:
            w = _surface_region_weights(carrier, selected, "subdomain")
            weights = w[ids]
    else:  # boundary-part
        if carrier.kind == "grid":
            w = _grid_boundary_weights(carrier, selected)
        else:
            w = _surface_region_weights(carrier, selected, "boundary-part")
        weights = w[ids]
        keep = weights > 0
        if not keep.any():
            raise ZeroMeasure("no boundary facet lies wholly in the selection")
        ids, weights = ids[keep], weights[keep]
    region = MarkedRegion(carrier, ids, weights, kind, name)
    return region


def extrude_cylinder(base, interval, layers):
    """Product carrier base x [a, b]; see :class:`CylinderMesh`."""
    return CylinderMesh(base, interval, layers)


def extrude_region(cyl: CylinderMesh, base_region: MarkedRegion, name=None):
    """Extrude a base region to the strip region_base x [a, b]."""
    nb = cyl.base.n_nodes
    ids = []
    weights = []
    for layer in range(cyl.layers):
        ids.append(base_region.node_ids + layer * nb)
        weights.append(base_region.region_weights * cyl.layer_weights[layer])
    kind = base_region.kind if base_region.kind != "point" else "boundary-part"
    return MarkedRegion(cyl, np.concatenate(ids), np.concatenate(weights),
                        kind, name or (base_region.name and base_region.name + "-strip"))


# ---------------------------------------------------------------------------
# registered shapes


def _circle_levelset(radius=1.0, center=(0.0, 0.0)):
    c = np.asarray(center, dtype=float)
    r2 = radius * radius
    return LevelSetSurface(
        psi=lambda x: 0.5 * (np.sum((np.asarray(x) - c) ** 2) - r2),
        grad_psi=lambda x: np.asarray(x, dtype=float) - c,
        ambient_dim=2,
        hess_psi=lambda x: np.eye(2),
        name="circle")


def _sphere_levelset(radius=1.0):
    r2 = radius * radius
    return LevelSetSurface(
        psi=lambda x: 0.5 * (np.sum(np.asarray(x) ** 2) - r2),
        grad_psi=lambda x: np.asarray(x, dtype=float),
        ambient_dim=3,
        hess_psi=lambda x: np.eye(3),
        name="sphere")


def _tube_levelset(radius=1.0):
    r2 = radius * radius
    return LevelSetSurface(
        psi=lambda x: 0.5 * (x[0] * x[0] + x[1] * x[1] - r2),
        grad_psi=lambda x: np.array([x[0], x[1], 0.0]),
        ambient_dim=3,
        hess_psi=lambda x: np.diag([1.0, 1.0, 0.0]),
        name="tube")


def _torus_levelset(R=2.0, r=0.7):
    def psi(x):
        rho = np.hypot(x[0], x[1])
        return 0.5 * ((rho - R) ** 2 + x[2] ** 2 - r * r)

    def grad(x):
        rho = np.hypot(x[0], x[1])
        if rho < 1e-300:
            return np.array([0.0, 0.0, x[2]])
        f = (rho - R) / rho
        return np.array([f * x[0], f * x[1], x[2]])

    return LevelSetSurface(psi, grad, ambient_dim=3, name="torus")


def circle_mesh(n_nodes, radius=1.0):
    """Uniform arc-length partition of a circle into n_nodes segments.

    Vertex and element weights are exact arc lengths, so the total measure
    equals 2 pi r at every resolution.
    """
    n = int(n_nodes)
    if n < 3:
        raise ResolutionTooCoarse("circle needs at least 3 nodes")
    th = 2.0 * np.pi * np.arange(n) / n
    verts = radius * np.stack([np.cos(th), np.sin(th)], axis=1)
    segs = np.stack([np.arange(n), (np.arange(n) + 1) % n], axis=1)
    normals = verts / radius
    arc = np.full(n, 2.0 * np.pi * radius / n)
    return SurfaceMesh(verts, segs, normals,
                       source=_circle_levelset(radius),
                       element_measures=arc, name="circle")


def _icosahedron():
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    v = np.array([
        [-1, phi, 0], [1, phi, 0], [-1, -phi, 0], [1, -phi, 0],
        [0, -1, phi], [0, 1, phi], [0, -1, -phi], [0, 1, -phi],
        [phi, 0, -1], [phi, 0, 1], [-phi, 0, -1], [-phi, 0, 1],
    ], dtype=float)
    v /= np.linalg.norm(v[0])
    f = np.array([
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ], dtype=np.int64)
    return v, f


def icosphere_mesh(level, radius=1.0):
    """Subdivided icosahedron projected to the sphere.

    level 0 is the icosahedron itself (12 vertices); each level quadruples
    the triangle count.
    """
    level = int(level)
    if level < 0:
        raise ResolutionTooCoarse("icosphere level must be >= 0")
    v, f = _icosahedron()
    for _ in range(level):
        edge_mid = {}
        verts = list(v)

        def midpoint(a, b):
            key = (min(a, b), max(a, b))
            if key not in edge_mid:
                m = verts[a] + verts[b]
                m /= np.linalg.norm(m)
                edge_mid[key] = len(verts)
                verts.append(m)
            return edge_mid[key]

        nf = []
        for (a, b, c) in f:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            nf += [[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]
        v = np.array(verts)
        f = np.array(nf, dtype=np.int64)
    v = v * radius
    normals = v / np.linalg.norm(v, axis=1)[:, None]
    return SurfaceMesh(v, f, normals, source=_sphere_levelset(radius),
                       name="icosphere")


def tube_mesh(n_around, n_along, radius=1.0, height=2.0):
    """Open cylinder wall {x^2 + y^2 = r^2, 0 <= z <= height}."""
    na, nz = int(n_around), int(n_along)
    if na < 3 or nz < 2:
        raise ResolutionTooCoarse("tube needs >= 3 nodes around and >= 2 along")
    th = 2.0 * np.pi * np.arange(na) / na
    zs = np.linspace(0.0, height, nz)
    verts = np.empty((na * nz, 3))
    for k, z in enumerate(zs):
        verts[k * na:(k + 1) * na, 0] = radius * np.cos(th)
        verts[k * na:(k + 1) * na, 1] = radius * np.sin(th)
        verts[k * na:(k + 1) * na, 2] = z
    tris = []
    for k in range(nz - 1):
        for i in range(na):
            j = (i + 1) % na
            a, b = k * na + i, k * na + j
            c, d = (k + 1) * na + i, (k + 1) * na + j
            tris += [[a, b, d], [a, d, c]]
    normals = verts.copy()
    normals[:, 2] = 0.0
    normals /= np.linalg.norm(normals, axis=1)[:, None]
    return SurfaceMesh(verts, np.array(tris, dtype=np.int64), normals,
                       source=_tube_levelset(radius), name="tube")


def torus_mesh(n_major, n_minor, R=2.0, r=0.7):
    """Embedded torus, parameter grid (n_major x n_minor)."""
    nu_, nv_ = int(n_major), int(n_minor)
    if nu_ < 3 or nv_ < 3:
        raise ResolutionTooCoarse("torus needs >= 3 nodes per direction")
    us = 2.0 * np.pi * np.arange(nu_) / nu_
    vs = 2.0 * np.pi * np.arange(nv_) / nv_
    verts = np.empty((nu_ * nv_, 3))
    normals = np.empty_like(verts)
    for i, u in enumerate(us):
        cu, su = np.cos(u), np.sin(u)
        for j, v in enumerate(vs):
            cv, sv = np.cos(v), np.sin(v)
            idx = i * nv_ + j
            verts[idx] = [(R + r * cv) * cu, (R + r * cv) * su, r * sv]
            normals[idx] = [cv * cu, cv * su, sv]
    tris = []
    for i in range(nu_):
        i2 = (i + 1) % nu_
        for j in range(nv_):
            j2 = (j + 1) % nv_
            a, b = i * nv_ + j, i * nv_ + j2
            c, d = i2 * nv_ + j, i2 * nv_ + j2
            tris += [[a, b, d], [a, d, c]]
    return SurfaceMesh(verts, np.array(tris, dtype=np.int64), normals,
                       source=_torus_levelset(R, r), name="torus")


def interval_grid(n_nodes, a=0.0, b=1.0):
    return DomainGrid([[a, b]], [int(n_nodes)])


def box_grid(shape, bounds=None):
    shape = tuple(int(s) for s in shape)
    if bounds is None:
        bounds = [[0.0, 1.0]] * len(shape)
    return DomainGrid(bounds, shape)


_SHAPES = {
    "interval": lambda nodes=65, a=0.0, b=1.0: interval_grid(nodes, a, b),
    "box": lambda shape=(17, 17), bounds=None: box_grid(shape, bounds),
    "circle": lambda nodes=128, radius=1.0: circle_mesh(nodes, radius),
    "icosphere": lambda level=3, radius=1.0: icosphere_mesh(level, radius),
    "sphere": lambda level=3, radius=1.0: icosphere_mesh(level, radius),
    "tube": lambda n_around=48, n_along=17, radius=1.0, height=2.0:
        tube_mesh(n_around, n_along, radius, height),
    "torus": lambda n_major=48, n_minor=24, R=2.0, r=0.7:
        torus_mesh(n_major, n_minor, R, r),
}


def registered_shapes():
    return sorted(_SHAPES)


def build_mesh(name, **params):
    """Build a registered shape by name.

    Shapes: interval, box (DomainGrid); circle, icosphere/sphere, tube,
    torus (SurfaceMesh with analytic normals).  Raises UnknownShape or
    ResolutionTooCoarse.
    """
    try:
        builder = _SHAPES[name]
    except KeyError:
        raise UnknownShape(f"shape {name!r}; known: {', '.join(registered_shapes())}") from None
    try:
        return builder(**params)
    except TypeError as exc:
        raise UnknownShape(f"bad parameters for {name!r}: {exc}") from None


def refine_params(name, params, step=1):
    """Parameters of the shape refined ``step`` times (factor-2 ladder)."""
    p = dict(params)
    if name == "interval":
        p["nodes"] = (p.get("nodes", 65) - 1) * 2 ** step + 1
    elif name == "box":
        p["shape"] = tuple((s - 1) * 2 ** step + 1 for s in p.get("shape", (17, 17)))
    elif name == "circle":
        p["nodes"] = p.get("nodes", 128) * 2 ** step
    elif name in ("icosphere", "sphere"):
        p["level"] = p.get("level", 3) + step
    elif name == "tube":
        p["n_around"] = p.get("n_around", 48) * 2 ** step
        p["n_along"] = (p.get("n_along", 17) - 1) * 2 ** step + 1
    elif name == "torus":
        p["n_major"] = p.get("n_major", 48) * 2 ** step
        p["n_minor"] = p.get("n_minor", 24) * 2 ** step
    else:
        raise UnknownShape(name)
    return p


def mesh_descriptor(carrier):
    """Short deterministic string describing a carrier's resolution."""
    if carrier.kind == "grid":
        return f"grid{tuple(carrier.shape)}"
    if carrier.kind == "surface":
        return f"{carrier.name or 'surface'}[nv={carrier.n_nodes}]"
    if carrier.kind == "cylinder":
        return (f"cyl[{mesh_descriptor(carrier.base)}x{carrier.layers}"
                f"@{carrier.interval}]")
    return repr(carrier)


def content_hash(carrier):
    """Hash of the node coordinates; used to key cached operators in tests."""
    if carrier.kind == "grid":
        pts = carrier.nodes
    elif carrier.kind == "surface":
        pts = carrier.vertices
    else:
        bpts = (carrier.base.nodes if carrier.base.kind == "grid"
                else carrier.base.vertices)
        pts = np.concatenate([bpts.ravel(), carrier.t_nodes])
    return hashlib.sha256(np.ascontiguousarray(pts).tobytes()).hexdigest()[:16]
