"""Quadratic forms, the generalized eigensolver, and constant estimation.

The best constant of an inequality LHS <= C * RHS (both sides quadratic in
the field for p = 2) is lambda_min(A_rhs, B_lhs)^(-1/2) over the admissible
subspace.  Admissibility is imposed either by eliminating constrained rows
and columns or by deflating a known kernel inside the solver.
"""

from dataclasses import dataclass, field as dc_field
import json

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import (
    MissingRegion, UnsupportedKind, NoConvergence, DisconnectedMesh,
    ZeroMeasure, NoAdmissibleSamples, InvalidP,
)
from .geometry import MarkedRegion, base_weights, mesh_descriptor
from . import calculus as cal


DENSE_LIMIT = 2000


class OperatorMatrix:
    """Sparse symmetric PSD matrix with its provenance."""

    def __init__(self, matrix, kind, carrier, meta=None):
        self.matrix = matrix.tocsr() if sp.issparse(matrix) else sp.csr_matrix(matrix)
        self.kind = kind
        self.carrier = carrier
        self.meta = meta or {}

    @property
    def shape(self):
        return self.matrix.shape

    def quadratic(self, x):
        x = np.asarray(x, dtype=float).ravel()
        return float(x @ (self.matrix @ x))

    def __matmul__(self, x):
        return self.matrix @ x


def _grid_stiffness(grid):
    W = sp.diags(grid.node_weights)
    mats = [cal.partial_matrix(grid, a) for a in range(grid.dim)]
    return sum((M.T @ W @ M for M in mats), sp.csr_matrix((grid.n_nodes,) * 2))


def _surface_stiffness(mesh):
    WA = sp.diags(mesh.element_measures)
    G = cal.element_gradient_matrices(mesh)
    return sum((M.T @ WA @ M for M in G), sp.csr_matrix((mesh.n_nodes,) * 2))


def _grid_def_form(grid):
    n = grid.dim
    W = sp.diags(grid.node_weights)
    mats = [cal.partial_matrix(grid, a) for a in range(n)]
    A = sp.csr_matrix((grid.n_nodes * n,) * 2)
    eye = np.eye(n)
    for j in range(n):
        for k in range(j, n):
            mult = 1.0 if j == k else 2.0
            # D_jk acting on interleaved dofs (node-major, component-minor)
            Djk = 0.5 * (sp.kron(mats[k], eye[j][None, :], format="csr")
                         + sp.kron(mats[j], eye[k][None, :], format="csr"))
            A = A + mult * (Djk.T @ W @ Djk)
    return A


def _surface_def_form(mesh):
    n = mesh.dim
    npairs = n * (n + 1) // 2
    L = cal.element_deformation_matrix(mesh)
    mult = np.array([1.0 if j == k else 2.0
                     for j in range(n) for k in range(j, n)])
    wrow = np.repeat(mesh.element_measures, npairs) * np.tile(mult, len(mesh.elements))
    return L.T @ sp.diags(wrow) @ L


def _sobolev_form(carrier, m):
    W = sp.diags(base_weights(carrier))
    A = W.tocsr()
    if carrier.kind == "grid":
        from itertools import product
        for order in range(1, m + 1):
            for alpha in product(range(order + 1), repeat=carrier.dim):
                if sum(alpha) != order:
                    continue
                M = None
                for axis in range(carrier.dim):
                    for _ in range(alpha[axis]):
                        P = cal.partial_matrix(carrier, axis)
                        M = P if M is None else P @ M
                A = A + M.T @ W @ M
        return A
    if carrier.kind == "surface":
        if m > 1:
            raise UnsupportedKind("surface Sobolev forms support m <= 1")
        return A + _surface_stiffness(carrier)
    raise UnsupportedKind("sobolev_m forms on grids and surfaces")


def assemble_quadratic_form(kind, mesh, region=None, m=1):
    """Assemble the symmetric form named by ``kind`` on a carrier.

    Scalar kinds: mass, stiffness_grad, stiffness_surface_grad,
    rank_one_trace, trace_mass, sobolev_m.  Vector kinds (interleaved
    node-major dofs): vec_mass, stiffness_def, stiffness_surface_def,
    vec_stiffness_grad, vec_trace_mass.
    """
    if kind in ("rank_one_trace", "trace_mass", "vec_trace_mass") and region is None:
        raise MissingRegion(f"{kind} needs a marked region")
    if kind == "mass":
        return OperatorMatrix(sp.diags(base_weights(mesh)), kind, mesh)
    if kind == "stiffness_grad":
        if mesh.kind != "grid":
            raise UnsupportedKind("stiffness_grad expects a grid; use "
                                  "stiffness_surface_grad on surfaces")
        return OperatorMatrix(_grid_stiffness(mesh), kind, mesh)
    if kind == "stiffness_surface_grad":
        if mesh.kind != "surface":
            raise UnsupportedKind("stiffness_surface_grad expects a surface")
        return OperatorMatrix(_surface_stiffness(mesh), kind, mesh)
    if kind == "stiffness_def":
        if mesh.kind != "grid":
            raise UnsupportedKind("stiffness_def expects a grid")
        return OperatorMatrix(_grid_def_form(mesh), kind, mesh)
    if kind == "stiffness_surface_def":
        if mesh.kind != "surface":
            raise UnsupportedKind("stiffness_surface_def expects a surface")
        A = _surface_def_form(mesh)
        L = cal.element_deformation_matrix(mesh)
        return OperatorMatrix(A, kind, mesh, {"curvature_provenance": L.prov})
    if kind == "rank_one_trace":
        b = region.weight_vector()
        bs = sp.csr_matrix(b[:, None])
        return OperatorMatrix(bs @ bs.T, kind, mesh, {"vector": b})
    if kind == "trace_mass":
        return OperatorMatrix(sp.diags(region.weight_vector()), kind, mesh)
    if kind == "sobolev_m":
        return OperatorMatrix(_sobolev_form(mesh, m), kind, mesh)
    if kind == "vec_mass":
        n = _ambient_components(mesh)
        return OperatorMatrix(sp.kron(sp.diags(base_weights(mesh)),
                                      sp.identity(n), format="csr"), kind, mesh)
    if kind == "vec_stiffness_grad":
        n = _ambient_components(mesh)
        S = _grid_stiffness(mesh) if mesh.kind == "grid" else _surface_stiffness(mesh)
        return OperatorMatrix(sp.kron(S, sp.identity(n), format="csr"), kind, mesh)
    if kind == "vec_trace_mass":
        n = _ambient_components(mesh)
        return OperatorMatrix(sp.kron(sp.diags(region.weight_vector()),
                                      sp.identity(n), format="csr"), kind, mesh)
    raise UnsupportedKind(f"unknown form kind {kind!r}")


def _ambient_components(carrier):
    if carrier.kind == "grid":
        return carrier.dim
    if carrier.kind == "surface":
        return carrier.dim
    return _ambient_components(carrier.base)


# ---------------------------------------------------------------------------
# constraint handling


def tangential_reduction(mesh):
    """Sparse (nv*n) x (nv*(n-1)) map from per-vertex tangent coordinates to
    interleaved ambient components."""
    key = "tangential_reduction"
    if key in mesh._cache:
        return mesh._cache[key]
    n = mesh.dim
    td = n - 1
    rows, cols, vals = [], [], []
    for i in range(mesh.n_nodes):
        T = cal._tangent_basis(mesh.vertex_normals[i])  # (td, n)
        for a in range(td):
            for j in range(n):
                rows.append(i * n + j)
                cols.append(i * td + a)
                vals.append(T[a, j])
    T = sp.csr_matrix((vals, (rows, cols)),
                      shape=(mesh.n_nodes * n, mesh.n_nodes * td))
    mesh._cache[key] = T
    return T


def elimination_mask(carrier, region: MarkedRegion, n_components=1):
    """Boolean keep-mask over (vector) dofs, False on the region's nodes."""
    drop = region.mask()
    if n_components == 1:
        return ~drop
    return ~np.repeat(drop, n_components)


def restrict_form(A, keep):
    M = A.matrix if isinstance(A, OperatorMatrix) else A
    M = M.tocsr()[keep][:, keep]
    return M


def constant_vector(carrier, B=None):
    """The constant field, normalized in the B inner product."""
    z = np.ones(carrier.n_nodes)
    if B is not None:
        nb = float(z @ (B @ z))
        z = z / np.sqrt(nb)
    return z


# ---------------------------------------------------------------------------
# eigensolver


@dataclass
class EigenResult:
    values: np.ndarray
    vectors: np.ndarray
    residuals: np.ndarray
    iterations: int
    method: str


def _residuals(A, B, vals, vecs):
    out = np.empty(len(vals))
    for i, lam in enumerate(vals):
        x = vecs[:, i]
        r = A @ x - lam * (B @ x)
        out[i] = np.linalg.norm(r) / max(np.linalg.norm(x), 1e-300)
    return out


def _b_orthonormalize(X, B, Z=None, drop_tol=1e-12):
    """Modified Gram-Schmidt in the B inner product; deflates columns of Z."""
    if Z is not None and Z.shape[1] > 0:
        BZ = B @ Z
        X = X - Z @ (BZ.T @ X)
    cols = []
    for j in range(X.shape[1]):
        v = X[:, j].copy()
        for u in cols:
            v -= u * float(u @ (B @ v))
        nb = float(v @ (B @ v))
        if nb > drop_tol:
            cols.append(v / np.sqrt(nb))
    return np.stack(cols, axis=1) if cols else X[:, :0]


def smallest_eigenpairs(A, B, k, tol=1e-8, deflate=None, seed=0,
                        max_iterations=500):
    """k smallest eigenpairs of A x = lambda B x.

    A symmetric PSD, B symmetric positive definite (diagonal or sparse).
    Dense solve when the dimension is at most 2000; otherwise shifted
    inverse subspace iteration (small negative shift keeps the factor
    nonsingular when A itself is singular) with deflation of ``deflate``
    columns and of converged vectors, deterministic for a fixed seed.
    """
    A = A.matrix if isinstance(A, OperatorMatrix) else A
    B = B.matrix if isinstance(B, OperatorMatrix) else B
    A = sp.csr_matrix(A) if not sp.issparse(A) else A.tocsr()
    B = sp.csr_matrix(B) if not sp.issparse(B) else B.tocsr()
    n = A.shape[0]
    Z = None
    if deflate is not None and deflate.size:
        Z = np.asarray(deflate, dtype=float)
        if Z.ndim == 1:
            Z = Z[:, None]
        Z = _b_orthonormalize(Z, B)
    if n <= DENSE_LIMIT:
        Ad, Bd = A.toarray(), B.toarray()
        if Z is not None:
            # restrict to the B-orthogonal complement of the deflated span
            Q = sla.null_space((Bd @ Z).T)
            vals, vecs_r = sla.eigh(Q.T @ Ad @ Q, Q.T @ Bd @ Q,
                                    subset_by_index=[0, min(k, Q.shape[1]) - 1])
            vecs = Q @ vecs_r
        else:
            vals, vecs = sla.eigh(Ad, Bd, subset_by_index=[0, k - 1])
        vals = vals[:k]
        vecs = vecs[:, :k]
        res = _residuals(A, B, vals, vecs)
        return EigenResult(vals, vecs, res, 0, "dense")

    scale_a = A.diagonal().sum()
    scale_b = max(B.diagonal().sum(), 1e-300)
    sigma = -1e-3 * max(scale_a / scale_b, 1e-12)
    shifted = (A - sigma * B).tocsc()
    lu = spla.splu(shifted)
    m = k + min(k + 2, 8)
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, m))
    X = _b_orthonormalize(X, B, Z)
    vals = np.zeros(k)
    vecs = None
    for it in range(1, max_iterations + 1):
        X = lu.solve(B @ X)
        X = _b_orthonormalize(X, B, Z)
        Ar = X.T @ (A @ X)
        Br = X.T @ (B @ X)
        w, S = sla.eigh(Ar, Br)
        X = X @ S
        vals = w[:k]
        vecs = X[:, :k]
        res = _residuals(A, B, vals, vecs)
        if res.max() <= tol:
            return EigenResult(vals, vecs, res, it, "subspace")
    raise NoConvergence(max_iterations, float(res.max()))


# ---------------------------------------------------------------------------
# constant estimation


@dataclass
class ConstantEstimate:
    id: str
    C: float
    lambda_min: float
    residual: float
    mesh: str
    p: float = 2.0
    regions: dict = dc_field(default_factory=dict)
    curvature_term_provenance: str = "n/a"
    eigenvector: np.ndarray = None
    details: dict = dc_field(default_factory=dict)

    def to_json(self):
        payload = {
            "id": self.id,
            "C": self.C,
            "lambda_min": self.lambda_min,
            "residual": self.residual,
            "mesh": self.mesh,
            "p": self.p,
            "regions": self.regions,
            "curvature_term_provenance": self.curvature_term_provenance,
        }
        return json.dumps(payload, sort_keys=True)


def estimate_constant(id, mesh, regions=None, p=2.0, seed=0):
    """Best-constant estimate C = lambda_min^(-1/2) for a registered
    inequality id at p = 2 (the eigenvalue route is a Rayleigh quotient)."""
    if p != 2.0:
        raise InvalidP("eigen-based constants are defined for p = 2 only; "
                       "use quotient_lower_bound for other p")
    from . import registry
    problem = registry.build_problem(id, mesh, regions)
    if problem.requires_connected and not _carrier_connected(mesh):
        raise DisconnectedMesh(
            f"{id} has an infinite constant on a disconnected mesh")
    k = problem.skip_dimension + 1
    result = smallest_eigenpairs(problem.A, problem.B, k,
                                 deflate=problem.deflate, seed=seed)
    lam = float(result.values[-1])
    vec = problem.expand(result.vectors[:, -1])
    if lam <= 0:
        raise ZeroMeasure(f"{id}: nonpositive lambda_min {lam:.3e}")
    return ConstantEstimate(
        id=id, C=float(lam ** -0.5), lambda_min=lam,
        residual=float(result.residuals[-1]), mesh=mesh_descriptor(mesh),
        p=p, regions={r: regions[r].measure() for r in (regions or {})},
        curvature_term_provenance=problem.curvature_provenance,
        eigenvector=vec,
        details={"method": result.method, "iterations": result.iterations,
                 "skip_dimension": problem.skip_dimension})


def _carrier_connected(carrier):
    if carrier.kind == "surface":
        return carrier.connected
    if carrier.kind == "cylinder":
        return _carrier_connected(carrier.base) if carrier.base.kind == "surface" else True
    return True


def quotient_lower_bound(id, mesh, regions=None, p=2.0, sampler=None,
                         n_samples=100, seed=0):
    """max over sampled admissible fields of LHS/RHS; a lower bound for the
    best constant, never an estimate of it."""
    from . import registry
    from .verify import FieldGenerator
    if sampler is None:
        sampler = FieldGenerator(seed=seed)
    evaluator = registry.build_evaluator(id, mesh, regions, p)
    best = -np.inf
    admissible = 0
    for _ in range(n_samples):
        raw = sampler.sample(mesh, kind=evaluator.field_kind)
        fld = evaluator.project(raw)
        if fld is None:
            continue
        lhs = evaluator.lhs(fld)
        rhs = evaluator.rhs(fld)
        if rhs <= 1e-14 * max(1.0, lhs):
            if lhs > 1e-12:
                return np.inf
            continue
        admissible += 1
        best = max(best, lhs / rhs)
    if admissible == 0:
        raise NoAdmissibleSamples(f"{id}: no admissible samples out of {n_samples}")
    return float(best)
