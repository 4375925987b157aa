"""Discrete differential operators.

Two operator families coexist on surfaces:

* nodal operators (per-vertex least-squares fit of a quadratic in tangent
  coordinates over the vertex star) back the pointwise operations
  guenter_derivative / surface_gradient / deformation_surface and all sup
  seminorms; they are high-order but their quadratic forms are not suited
  to eigenvalue work;
* elementwise operators (piecewise-linear gradients per segment/triangle)
  back every integral seminorm and quadratic form; their forms are coercive
  with exactly the expected null spaces.

Grids use second-order finite differences (central inside, one-sided at the
ends), exact on affine functions, so rigid motions are exact null vectors of
the discrete deformation operator.
"""

import numpy as np
import scipy.sparse as sp

from .errors import (
    GridTooCoarse, DimensionMismatch, RankDeficientNeighborhood,
    OrderOutOfScope, NotTangential,
)
from .fields import ScalarField, VectorField, SymmetricTensorField, MultiIndex
from .geometry import DomainGrid, SurfaceMesh, CylinderMesh


# ---------------------------------------------------------------------------
# grids


def _diff_matrix_1d(n, h):
    if n < 3:
        raise GridTooCoarse("need at least 3 nodes per axis for stencils")
    D = sp.lil_matrix((n, n))
    inv = 1.0 / h
    for i in range(1, n - 1):
        D[i, i - 1] = -0.5 * inv
        D[i, i + 1] = 0.5 * inv
    D[0, 0], D[0, 1], D[0, 2] = -1.5 * inv, 2.0 * inv, -0.5 * inv
    D[-1, -1], D[-1, -2], D[-1, -3] = 1.5 * inv, -2.0 * inv, 0.5 * inv
    return D.tocsr()


def partial_matrix(grid: DomainGrid, axis):
    """Sparse N x N matrix of d/dx_axis on the C-ordered grid nodes."""
    key = ("partial", axis)
    if key not in grid._cache:
        D = _diff_matrix_1d(grid.shape[axis], grid.spacing[axis])
        op = None
        for a in range(grid.dim):
            blk = D if a == axis else sp.identity(grid.shape[a], format="csr")
            op = blk if op is None else sp.kron(op, blk, format="csr")
        grid._cache[key] = op
    return grid._cache[key]


def domain_gradient(f: ScalarField) -> VectorField:
    grid = f.carrier
    if grid.kind != "grid":
        raise DimensionMismatch("domain_gradient needs a DomainGrid field")
    cols = [partial_matrix(grid, a) @ f.values for a in range(grid.dim)]
    return VectorField(grid, np.stack(cols, axis=1))


def normal_derivative(gradient: VectorField, nu=None) -> ScalarField:
    """<nu, grad f> per node, for a gradient field and matching normals."""
    if nu is None:
        carrier = gradient.carrier
        if carrier.kind != "surface":
            raise DimensionMismatch("normals required off surface carriers")
        nu = carrier.vertex_normals
    nu = np.asarray(nu, dtype=float)
    if nu.ndim == 1:
        nu = np.broadcast_to(nu, gradient.values.shape)
    if nu.shape != gradient.values.shape:
        raise DimensionMismatch(
            f"normals {nu.shape} vs gradient {gradient.values.shape}")
    return ScalarField(gradient.carrier, np.sum(gradient.values * nu, axis=1),
                       gradient.support)


def higher_derivative(alpha, f: ScalarField) -> ScalarField:
    """Repeated first derivatives, composed in ascending axis order."""
    alpha = MultiIndex(alpha)
    carrier = f.carrier
    if carrier.kind == "grid":
        if len(alpha) != carrier.dim:
            raise DimensionMismatch("multi-index length must match grid dim")
        if alpha.order > 2:
            raise OrderOutOfScope("grid derivatives limited to order 2")
        vals = f.values
        for axis in range(carrier.dim):
            for _ in range(alpha[axis]):
                vals = partial_matrix(carrier, axis) @ vals
        return ScalarField(carrier, vals)
    if carrier.kind == "surface":
        if len(alpha) != carrier.dim:
            raise DimensionMismatch("multi-index length must match ambient dim")
        if alpha.order > 1:
            # repeated Guenter derivatives do not commute on curved surfaces
            raise OrderOutOfScope("surface derivatives limited to order 1")
        if alpha.order == 0:
            return f.copy()
        j = int(np.nonzero(alpha)[0][0])
        return guenter_derivative(j, f)
    raise DimensionMismatch("higher_derivative supports grids and surfaces")


def deformation_domain(U: VectorField) -> SymmetricTensorField:
    grid = U.carrier
    if grid.kind != "grid":
        raise DimensionMismatch("deformation_domain needs a DomainGrid field")
    n = grid.dim
    if U.values.shape[1] != n:
        raise DimensionMismatch("vector field must have one component per axis")
    dU = np.stack([np.stack([partial_matrix(grid, k) @ U.values[:, j]
                             for k in range(n)], axis=1)
                   for j in range(n)], axis=1)  # (N, j, k) = d_k U_j
    full = 0.5 * (dU + np.swapaxes(dU, 1, 2))
    return SymmetricTensorField.from_full(grid, full)


# ---------------------------------------------------------------------------
# surfaces: nodal least-squares operators


def _vertex_rings(mesh: SurfaceMesh):
    key = "rings"
    if key not in mesh._cache:
        nv = mesh.n_nodes
        one = [set() for _ in range(nv)]
        for el in mesh.elements:
            for a in el:
                for b in el:
                    if a != b:
                        one[a].add(int(b))
        mesh._cache[key] = [sorted(s) for s in one]
    return mesh._cache[key]


def _tangent_basis(nu):
    n = len(nu)
    k = int(np.argmin(np.abs(nu)))
    t1 = np.zeros(n)
    t1[k] = 1.0
    t1 -= nu[k] * nu
    t1 /= np.linalg.norm(t1)
    if n == 2:
        return t1[None, :]
    t2 = np.cross(nu, t1)
    return np.stack([t1, t2])


def nodal_gradient_matrices(mesh: SurfaceMesh):
    """List of n sparse (nv x nv) matrices; row i of matrix j evaluates
    D_j f at vertex i from the vertex star.

    The fit is quadratic in tangent coordinates (falling back to the 2-ring
    when the 1-ring is too small) with inverse-distance weights; the constant
    term is eliminated, so constants map to exactly zero.
    """
    key = "nodal_grad"
    if key in mesh._cache:
        return mesh._cache[key]
    v = mesh.vertices
    n = mesh.dim
    nv = mesh.n_nodes
    rings = _vertex_rings(mesh)
    td = n - 1
    nquad = td + td * (td + 1) // 2  # linear + quadratic monomials
    rows = [[] for _ in range(n)]
    cols = [[] for _ in range(n)]
    vals = [[] for _ in range(n)]
    for i in range(nv):
        nu = mesh.vertex_normals[i]
        T = _tangent_basis(nu)  # (td, n)
        nb = list(rings[i])
        if len(nb) < nquad:
            two = set(nb)
            for j in nb:
                two.update(rings[j])
            two.discard(i)
            nb = sorted(two)
        E = v[nb] - v[i]
        Uc = E @ T.T  # tangent coordinates (deg, td)
        scale = np.linalg.norm(Uc, axis=1).mean()
        if scale < 1e-300:
            raise RankDeficientNeighborhood(f"vertex {i} star is degenerate")
        Us = Uc / scale
        monos = [Us[:, a] for a in range(td)]
        for a in range(td):
            for b in range(a, td):
                fac = 0.5 if a == b else 1.0
                monos.append(fac * Us[:, a] * Us[:, b])
        M = np.column_stack(monos)
        wls = 1.0 / np.maximum(np.linalg.norm(Us, axis=1), 1e-30)
        Mw = M * wls[:, None]
        if np.linalg.matrix_rank(Mw, tol=1e-10) < min(M.shape):
            raise RankDeficientNeighborhood(
                f"vertex {i}: {len(nb)} neighbors give a rank-deficient fit")
        P = np.linalg.pinv(Mw) * wls[None, :]
        grad_rows = P[:td] / scale          # d/du_a at the vertex
        amb = T.T @ grad_rows               # (n, deg)
        for j in range(n):
            rows[j].extend([i] * (len(nb) + 1))
            cols[j].extend(nb)
            cols[j].append(i)
            vals[j].extend(amb[j])
            vals[j].append(-amb[j].sum())
    mats = [sp.csr_matrix((vals[j], (rows[j], cols[j])), shape=(nv, nv))
            for j in range(n)]
    mesh._cache[key] = mats
    return mats


def guenter_derivative(j, f: ScalarField) -> ScalarField:
    mesh = f.carrier
    if mesh.kind != "surface":
        raise DimensionMismatch("guenter_derivative needs a surface field")
    G = nodal_gradient_matrices(mesh)
    if not 0 <= j < mesh.dim:
        raise DimensionMismatch(f"axis {j} out of range for dim {mesh.dim}")
    return ScalarField(mesh, G[j] @ f.values)


def surface_gradient(f: ScalarField) -> VectorField:
    mesh = f.carrier
    if mesh.kind != "surface":
        raise DimensionMismatch("surface_gradient needs a surface field")
    G = nodal_gradient_matrices(mesh)
    vals = np.stack([G[j] @ f.values for j in range(mesh.dim)], axis=1)
    return VectorField(mesh, vals, tangential=True)


def _normal_jacobian(mesh: SurfaceMesh, points, normals):
    """d nu / dx rows at given on-surface points, from the level-set source:
    (I - nu nu^T) Hess(psi) / |grad psi|."""
    src = mesh.source
    out = np.empty((len(points), mesh.dim, mesh.dim))
    for i, (x, nu) in enumerate(zip(points, normals)):
        H = src.hess_psi(x)
        g = np.asarray(src.grad_psi(x), dtype=float)
        P = np.eye(mesh.dim) - np.outer(nu, nu)
        out[i] = P @ H / np.linalg.norm(g)
    return out


def curvature_products(mesh: SurfaceMesh):
    """K[i, pair, m] = D_m(nu_j nu_k) at vertex i, with the provenance used
    ('analytic' from the level-set source, else 'discrete' from nodal
    Guenter derivatives of the products)."""
    key = "curv_nodal"
    if key in mesh._cache:
        return mesh._cache[key]
    n = mesh.dim
    nu = mesh.vertex_normals
    pairs = [(j, k) for j in range(n) for k in range(j, n)]
    K = np.empty((mesh.n_nodes, len(pairs), n))
    if mesh.source is not None:
        dN = _normal_jacobian(mesh, mesh.vertices, nu)
        P = np.eye(n)[None] - nu[:, :, None] * nu[:, None, :]
        for pi, (j, k) in enumerate(pairs):
            # grad(nu_j nu_k)_l = nu_k dN[j,l] + nu_j dN[k,l], then project
            gl = nu[:, k, None] * dN[:, j, :] + nu[:, j, None] * dN[:, k, :]
            K[:, pi, :] = np.einsum("iml,il->im", P, gl)
        provenance = "analytic"
    else:
        G = nodal_gradient_matrices(mesh)
        for pi, (j, k) in enumerate(pairs):
            prod = nu[:, j] * nu[:, k]
            for m in range(n):
                K[:, pi, m] = G[m] @ prod
        provenance = "discrete"
    mesh._cache[key] = (K, provenance)
    return mesh._cache[key]


def deformation_surface(U: VectorField) -> SymmetricTensorField:
    mesh = U.carrier
    if mesh.kind != "surface":
        raise DimensionMismatch("deformation_surface needs a surface field")
    if not U.tangential:
        raise NotTangential("deformation_surface requires a tangential field")
    n = mesh.dim
    G = nodal_gradient_matrices(mesh)
    DU = np.stack([np.stack([G[k] @ U.values[:, j] for k in range(n)], axis=1)
                   for j in range(n)], axis=1)  # (N, j, k) = D_k U_j
    K, provenance = curvature_products(mesh)
    pairs = [(j, k) for j in range(n) for k in range(j, n)]
    packed = np.empty((mesh.n_nodes, len(pairs)))
    for pi, (j, k) in enumerate(pairs):
        curv = np.sum(U.values * K[:, pi, :], axis=1)
        packed[:, pi] = 0.5 * (DU[:, j, k] + DU[:, k, j] + curv)
    out = SymmetricTensorField(mesh, packed, n)
    out.curvature_provenance = provenance
    return out


# ---------------------------------------------------------------------------
# surfaces: elementwise operators


def element_gradient_matrices(mesh: SurfaceMesh):
    """List of n sparse (ne x nv) matrices sampling the piecewise-linear
    tangential gradient components on elements."""
    key = "elem_grad"
    if key in mesh._cache:
        return mesh._cache[key]
    v = mesh.vertices
    el = mesh.elements
    ne = len(el)
    nv = mesh.n_nodes
    n = mesh.dim
    rows, cols, vals = ([[] for _ in range(n)] for _ in range(3))
    if n == 2:
        # segment derivative along the chord direction, arc-length scaled
        t = v[el[:, 1]] - v[el[:, 0]]
        t /= np.linalg.norm(t, axis=1)[:, None]
        inv = 1.0 / mesh.element_measures
        for j in range(n):
            rows[j] = np.concatenate([np.arange(ne), np.arange(ne)])
            cols[j] = np.concatenate([el[:, 0], el[:, 1]])
            vals[j] = np.concatenate([-t[:, j] * inv, t[:, j] * inv])
    else:
        e1 = v[el[:, 1]] - v[el[:, 0]]
        e2 = v[el[:, 2]] - v[el[:, 0]]
        nrm = np.cross(e1, e2)
        A2 = np.linalg.norm(nrm, axis=1)
        nhat = nrm / A2[:, None]
        for local, (o1, o2) in enumerate([(1, 2), (2, 0), (0, 1)]):
            g = np.cross(nhat, v[el[:, o2]] - v[el[:, o1]]) / A2[:, None]
            for j in range(n):
                rows[j].append(np.arange(ne))
                cols[j].append(el[:, local])
                vals[j].append(g[:, j])
        rows = [np.concatenate(r) for r in rows]
        cols = [np.concatenate(c) for c in cols]
        vals = [np.concatenate(x) for x in vals]
    mats = [sp.csr_matrix((vals[j], (rows[j], cols[j])), shape=(ne, nv))
            for j in range(n)]
    mesh._cache[key] = mats
    return mats


def element_normals(mesh: SurfaceMesh):
    """Normals at (projected) element centroids, with curvature data.

    Returns (points, normals, dN, provenance): when the mesh has a level-set
    source the centroids are projected back to the surface and dN is the
    analytic normal Jacobian there; otherwise normals are averaged vertex
    normals and dN comes from elementwise gradients of the nodal products.
    """
    key = "elem_normals"
    if key in mesh._cache:
        return mesh._cache[key]
    cen = mesh.element_centroids()
    if mesh.source is not None:
        pts = np.array([mesh.source.project(c) for c in cen])
        nus = np.array([np.asarray(mesh.source.grad_psi(p), dtype=float)
                        for p in pts])
        nus /= np.linalg.norm(nus, axis=1)[:, None]
        dN = _normal_jacobian(mesh, pts, nus)
        prov = "analytic"
    else:
        pts = cen
        nus = mesh.vertex_normals[mesh.elements].mean(axis=1)
        nus /= np.linalg.norm(nus, axis=1)[:, None]
        dN = None
        prov = "discrete"
    mesh._cache[key] = (pts, nus, dN, prov)
    return mesh._cache[key]


def element_curvature_products(mesh: SurfaceMesh):
    """K[e, pair, m] = D_m(nu_j nu_k) at element samples; provenance as in
    element_normals."""
    key = "curv_elem"
    if key in mesh._cache:
        return mesh._cache[key]
    n = mesh.dim
    pairs = [(j, k) for j in range(n) for k in range(j, n)]
    pts, nus, dN, prov = element_normals(mesh)
    ne = len(mesh.elements)
    K = np.empty((ne, len(pairs), n))
    P = np.eye(n)[None] - nus[:, :, None] * nus[:, None, :]
    if prov == "analytic":
        for pi, (j, k) in enumerate(pairs):
            gl = nus[:, k, None] * dN[:, j, :] + nus[:, j, None] * dN[:, k, :]
            K[:, pi, :] = np.einsum("eml,el->em", P, gl)
    else:
        G = element_gradient_matrices(mesh)
        nu_nodes = mesh.vertex_normals
        for pi, (j, k) in enumerate(pairs):
            prod = nu_nodes[:, j] * nu_nodes[:, k]
            gl = np.stack([G[m] @ prod for m in range(n)], axis=1)
            K[:, pi, :] = np.einsum("eml,el->em", P, gl)
    mesh._cache[key] = (K, prov)
    return mesh._cache[key]


def element_deformation_matrix(mesh: SurfaceMesh):
    """Sparse (ne * npairs) x (nv * n) matrix mapping interleaved nodal
    vector values to packed element samples of the surface deformation
    tensor.  Row e * npairs + pi corresponds to element e, pair pi."""
    key = "elem_def"
    if key in mesh._cache:
        return mesh._cache[key]
    n = mesh.dim
    nv = mesh.n_nodes
    el = mesh.elements
    ne = len(el)
    nl = el.shape[1]
    pairs = [(j, k) for j in range(n) for k in range(j, n)]
    npairs = len(pairs)
    _, nus, _, _ = element_normals(mesh)
    K, prov = element_curvature_products(mesh)
    # projected gradient rows per element and local vertex:
    # gP[e, l, m] = sum_l' P[m, l'] ghat_l'  with ghat the hat-function grad
    P = np.eye(n)[None] - nus[:, :, None] * nus[:, None, :]
    # hat-function gradients per element and local vertex
    ghat = np.empty((ne, nl, n))
    v = mesh.vertices
    if n == 2:
        t = v[el[:, 1]] - v[el[:, 0]]
        t /= np.linalg.norm(t, axis=1)[:, None]
        inv = (1.0 / mesh.element_measures)[:, None]
        ghat[:, 0, :] = -t * inv
        ghat[:, 1, :] = t * inv
    else:
        e1 = v[el[:, 1]] - v[el[:, 0]]
        e2 = v[el[:, 2]] - v[el[:, 0]]
        nrm = np.cross(e1, e2)
        A2 = np.linalg.norm(nrm, axis=1)
        nhat = nrm / A2[:, None]
        for local, (o1, o2) in enumerate([(1, 2), (2, 0), (0, 1)]):
            ghat[:, local, :] = np.cross(nhat, v[el[:, o2]] - v[el[:, o1]]) / A2[:, None]
    gP = np.einsum("eml,eal->eam", P, ghat)  # (ne, local, m): projected
    rows, cols, vals = [], [], []
    erange = np.arange(ne)
    for pi, (j, k) in enumerate(pairs):
        r = erange * npairs + pi
        for local in range(nl):
            vid = el[:, local]
            # 0.5 * D_k U_j term
            rows.append(r)
            cols.append(vid * n + j)
            vals.append(0.5 * gP[:, local, k])
            # 0.5 * D_j U_k term
            rows.append(r)
            cols.append(vid * n + k)
            vals.append(0.5 * gP[:, local, j])
            # curvature: 0.5 * mean(U_m) * K[e, pi, m]
            for m in range(n):
                rows.append(r)
                cols.append(vid * n + m)
                vals.append(0.5 * K[:, pi, m] / nl)
    L = sp.csr_matrix((np.concatenate(vals),
                       (np.concatenate(rows), np.concatenate(cols))),
                      shape=(ne * npairs, nv * n))
    L.prov = prov
    mesh._cache[key] = L
    return mesh._cache[key]


def element_deformation_surface(U: VectorField) -> SymmetricTensorField:
    """Element-sampled surface deformation tensor (cell support); the
    integral Korn seminorms are defined through this sampling."""
    mesh = U.carrier
    if not U.tangential:
        raise NotTangential("element deformation requires a tangential field")
    L = element_deformation_matrix(mesh)
    n = mesh.dim
    npairs = n * (n + 1) // 2
    packed = (L @ U.values.ravel()).reshape(-1, npairs)
    out = SymmetricTensorField(mesh, packed, n, support="cell")
    out.curvature_provenance = L.prov
    return out


def element_gradient(f: ScalarField) -> VectorField:
    """Element-sampled tangential gradient (cell support)."""
    mesh = f.carrier
    G = element_gradient_matrices(mesh)
    vals = np.stack([G[j] @ f.values for j in range(mesh.dim)], axis=1)
    return VectorField(mesh, vals, support="cell")


# ---------------------------------------------------------------------------
# cylinders


def transversal_partial(cyl: CylinderMesh):
    """Sparse d/dt on the cylinder's layer-major nodes."""
    key = "t_partial"
    if key not in cyl._cache:
        a, b = cyl.interval
        D = _diff_matrix_1d(cyl.layers, (b - a) / (cyl.layers - 1))
        cyl._cache[key] = sp.kron(D, sp.identity(cyl.base.n_nodes,
                                                 format="csr"), format="csr")
    return cyl._cache[key]


def lift_base_operator(cyl: CylinderMesh, M):
    """Apply a base-carrier operator layer by layer: I_layers kron M."""
    return sp.kron(sp.identity(cyl.layers, format="csr"), M, format="csr")
