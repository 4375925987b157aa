"""Kernel extraction for quadratic forms and unique-continuation checks.

A discrete kernel claim has two parts: the d smallest eigenvalues of the
pencil (A, B) sit below a resolution-independent cut, and a spectral gap of
at least gap_factor separates them from the rest.  Both are checked here;
anything between those regimes raises AmbiguousKernel rather than guessing.
"""

import csv
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import AmbiguousKernel, UnsupportedDimension, UnsupportedKind, ZeroMeasure
from .fields import ScalarField, VectorField
from .geometry import MarkedRegion
from . import spectra as spec


def rigid_motion_basis(grid):
    """Translations and infinitesimal rotations as an analytic KernelBasis,
    the n(n+1)/2 dimensional kernel of the flat deformation form."""
    if grid.kind != "grid":
        raise UnsupportedKind("rigid motions live on grids; surfaces use "
                              "tangential_rotation_basis")
    n = grid.dim
    if n not in (2, 3):
        raise UnsupportedDimension("rigid motion bases cover n in {2, 3}")
    pts = grid.nodes
    N = grid.n_nodes
    cols = []
    for c in range(n):
        T = np.zeros((N, n))
        T[:, c] = 1.0
        cols.append(T.ravel())
    for j in range(n):
        for k in range(j + 1, n):
            R = np.zeros((N, n))
            R[:, j] = -pts[:, k]
            R[:, k] = pts[:, j]
            cols.append(R.ravel())
    vectors = np.stack(cols, axis=1)
    d = vectors.shape[1]
    return KernelBasis(grid, vectors, np.zeros(d), n, cut=0.0, gap=np.inf,
                       lambda_ref=0.0)


def tangential_rotation_basis(mesh):
    """Tangential projections of the ambient rotation generators; on a
    sphere these are exactly the Killing fields of the surface metric."""
    if mesh.kind != "surface":
        raise UnsupportedKind("tangential rotations live on surfaces")
    n = mesh.dim
    pts = mesh.vertices
    nu = mesh.vertex_normals
    cols = []
    for j in range(n):
        for k in range(j + 1, n):
            U = np.zeros_like(pts)
            U[:, j] = -pts[:, k]
            U[:, k] = pts[:, j]
            U -= (U * nu).sum(axis=1)[:, None] * nu
            cols.append(U.ravel())
    return np.stack(cols, axis=1)


def _as_csr(A):
    A = A.matrix if isinstance(A, spec.OperatorMatrix) else A
    return sp.csr_matrix(A) if not sp.issparse(A) else A.tocsr()


def _lambda_max(A, B, seed=0):
    """Largest generalized eigenvalue, to set the kernel cut scale."""
    n = A.shape[0]
    if n <= spec.DENSE_LIMIT:
        vals = sla.eigh(A.toarray(), B.toarray(), eigvals_only=True,
                        subset_by_index=[n - 1, n - 1])
        return float(vals[0])
    lu = spla.splu(sp.csc_matrix(B))
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(n)
    x /= np.linalg.norm(x)
    lam = 0.0
    for _ in range(80):
        y = lu.solve(A @ x)
        nrm = np.linalg.norm(y)
        if nrm == 0.0:
            return 0.0
        x = y / nrm
        lam = float(x @ (A @ x)) / float(x @ (B @ x))
    return lam


@dataclass
class KernelBasis:
    """B-orthonormal kernel of a pencil (A, B) with its separation data."""

    carrier: object
    vectors: np.ndarray
    values: np.ndarray
    n_components: int
    cut: float
    gap: float
    lambda_ref: float

    @property
    def dimension(self):
        return self.vectors.shape[1]

    def field(self, j):
        col = self.vectors[:, j]
        if self.n_components == 1:
            return ScalarField(self.carrier, col)
        return VectorField(self.carrier, col.reshape(-1, self.n_components))

    def save_csv(self, path):
        """One row per node; columns k{j}_c{c} hold the j-th kernel field."""
        nc = self.n_components
        d = self.dimension
        n_nodes = self.vectors.shape[0] // nc if nc else self.vectors.shape[0]
        header = ["node"] + [f"k{j}_c{c}" for j in range(d) for c in range(nc)]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for i in range(n_nodes):
                row = [i]
                for j in range(d):
                    for c in range(nc):
                        row.append(self.vectors[i * nc + c, j])
                w.writerow(row)


def nullspace(A, B, carrier=None, n_components=1, max_dim=8,
              tol=1e-6, gap_factor=1e3, seed=0):
    """Kernel of the pencil (A, B) with the cut/gap classification.

    Eigenvalues at most tol * lambda_max(A, B) count as kernel; the first
    eigenvalue above that cut must exceed the last one below by gap_factor.
    A kernel that fills the whole search budget, a gap that is too small,
    and an empty kernel whose first eigenvalue still sits within gap_factor
    of the cut all raise AmbiguousKernel.
    """
    A, B = _as_csr(A), _as_csr(B)
    n = A.shape[0]
    k = min(max_dim + 1, n)
    result = spec.smallest_eigenpairs(A, B, k, seed=seed)
    vals = result.values
    lam_ref = _lambda_max(A, B, seed=seed)
    cut = tol * max(lam_ref, 1e-300)
    d = int((vals <= cut).sum())
    if d >= k:
        raise AmbiguousKernel(
            f"kernel dimension reaches the search budget {max_dim}; "
            f"eigenvalues {vals.tolist()}")
    if d == 0:
        if vals[0] <= gap_factor * cut:
            raise AmbiguousKernel(
                f"no eigenvalue below the cut {cut:.3e} but the smallest "
                f"({vals[0]:.3e}) is within {gap_factor:g} of it")
        gap = np.inf
        vecs = np.zeros((n, 0))
        return KernelBasis(carrier, vecs, vals[:0], n_components, cut, gap,
                           lam_ref)
    gap = float(vals[d] / max(vals[d - 1], 1e-16 * max(lam_ref, 1e-300)))
    if gap < gap_factor:
        raise AmbiguousKernel(
            f"kernel candidate of dimension {d} separated only by a factor "
            f"{gap:.1f} (< {gap_factor:g}); eigenvalues {vals.tolist()}")
    vecs = spec._b_orthonormalize(result.vectors[:, :d], B)
    if vecs.shape[1] != d:
        raise AmbiguousKernel("kernel candidates collapsed under "
                              "B-orthonormalization")
    G = vecs.T @ (B @ vecs)
    defect = float(np.abs(G - np.eye(d)).max())
    if defect > 1e-10:
        raise AmbiguousKernel(f"kernel basis B-orthonormality defect {defect:.3e}")
    return KernelBasis(carrier, vecs, vals[:d], n_components, cut, gap,
                       lam_ref)


def alignment_residual(basis, reference, B):
    """Worst relative B-distance from the span of ``basis`` over the columns
    of ``reference``; small when the computed kernel contains them."""
    B = _as_csr(B)
    V = basis.vectors
    worst = 0.0
    ref = np.atleast_2d(reference.T).T
    for j in range(ref.shape[1]):
        u = ref[:, j]
        nrm = np.sqrt(float(u @ (B @ u)))
        proj = V @ (V.T @ (B @ u)) if V.size else np.zeros_like(u)
        res = np.sqrt(max(float((u - proj) @ (B @ (u - proj))), 0.0))
        worst = max(worst, res / max(nrm, 1e-300))
    return worst


@dataclass
class ContinuationReport:
    """Rank data of a kernel basis restricted to a region.

    Full rank means no kernel field vanishes on the region, the discrete
    form of a unique-continuation statement.  Condition numbers are
    reported as evidence; no threshold is applied to them.
    """

    rank: int
    dimension: int
    singular_values: np.ndarray
    condition: float
    region_measure: float

    @property
    def full_rank(self):
        return self.rank == self.dimension

    @property
    def passed(self):
        return self.full_rank


def principal_angle(basis: KernelBasis, reference, B):
    """Largest principal angle (radians) between the basis span and the
    span of the reference columns, in the B inner product."""
    B = _as_csr(B)
    V = spec._b_orthonormalize(np.asarray(basis.vectors, dtype=float), B)
    W = spec._b_orthonormalize(np.asarray(reference, dtype=float), B)
    if V.shape[1] == 0 or W.shape[1] == 0:
        return np.pi / 2
    G = V.T @ (B @ W)
    s = np.linalg.svd(G, compute_uv=False)
    cos = np.clip(s.min(), -1.0, 1.0)
    return float(np.arccos(cos))


def unique_continuation_check(basis: KernelBasis, region: MarkedRegion,
                              rank_rtol=1e-8):
    """Rank of the weight-scaled restriction of the kernel basis to a region."""
    if region.measure() <= 0:
        raise ZeroMeasure("unique continuation needs a positive-measure region")
    nc = basis.n_components
    ids = region.node_ids
    w = region.region_weights
    scale = np.sqrt(np.maximum(w, 0.0))
    rows = []
    for i, s in zip(ids, scale):
        block = basis.vectors[i * nc:(i + 1) * nc, :]
        rows.append(s * block)
    M = np.vstack(rows) if rows else np.zeros((0, basis.dimension))
    if M.size == 0 or basis.dimension == 0:
        return ContinuationReport(0, basis.dimension, np.zeros(0), np.inf,
                                  region.measure())
    sv = np.linalg.svd(M, compute_uv=False)
    rank = int((sv > rank_rtol * sv[0]).sum()) if sv[0] > 0 else 0
    cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else np.inf
    return ContinuationReport(rank, basis.dimension, sv, cond,
                              region.measure())
