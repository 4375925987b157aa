"""The inequality registry.

Every registered id resolves to exactly one triple (admissible space,
left-hand norm, right-hand functional).  build_problem realizes the p = 2
triple as a generalized eigenvalue pencil (A, B) = (RHS form, LHS form)
over the admissible subspace; build_evaluator realizes the same triple for
any p as norm evaluations on sampled fields, using the identical discrete
operators, so the two routes close on each other at p = 2.

Region keys: 'M0' marks the trace/moment region of the Friedrichs-type and
zero-trace ids, 'G0' the Dirichlet part of the Korn-type ids.  Cylinder ids
expect regions already extruded to strips on the cylinder carrier.
"""

from dataclasses import dataclass
from itertools import product

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .errors import (
    UnsupportedKind, MissingRegion, UnsupportedDimension, ZeroMeasure,
)
from .fields import ScalarField, VectorField
from .geometry import base_weights
from . import calculus as cal
from . import norms
from .spectra import (
    assemble_quadratic_form, tangential_reduction, restrict_form,
    elimination_mask, DENSE_LIMIT,
)


@dataclass
class Problem:
    A: object
    B: object
    deflate: object = None
    expand: object = None
    curvature_provenance: str = "n/a"
    requires_connected: bool = False
    skip_dimension: int = 0


@dataclass
class Evaluator:
    field_kind: str
    project: object
    lhs: object
    rhs: object
    note: str = ""
    sup_norm: bool = False


def _require(cond, msg):
    if not cond:
        raise UnsupportedKind(msg)


def _region(regions, key, id):
    if not regions or key not in regions:
        raise MissingRegion(f"{id} needs a region named {key!r}")
    return regions[key]


def _identity_expand(n):
    return lambda y: np.asarray(y, dtype=float)


def _scatter_expand(keep):
    def expand(y):
        full = np.zeros(len(keep))
        full[keep] = y
        return full
    return expand


# ---------------------------------------------------------------------------
# scalar form helpers


def _scalar_stiffness(carrier, transversal=False):
    """Gradient form; on cylinders only the base-tangential part unless
    transversal is requested."""
    if carrier.kind == "grid":
        return assemble_quadratic_form("stiffness_grad", carrier).matrix
    if carrier.kind == "surface":
        return assemble_quadratic_form("stiffness_surface_grad", carrier).matrix
    base = carrier.base
    Sb = _scalar_stiffness(base)
    Wt = sp.diags(carrier.layer_weights)
    A = sp.kron(Wt, Sb, format="csr")
    if transversal:
        Dt = cal.transversal_partial(carrier)
        W = sp.diags(carrier.node_weights)
        A = A + Dt.T @ W @ Dt
    return A


def _scalar_mass(carrier):
    return sp.diags(base_weights(carrier)).tocsr()


def _order_m_stiffness(grid, m):
    """Sum over |alpha| = m of the weighted squared derivative forms."""
    W = sp.diags(grid.node_weights)
    A = sp.csr_matrix((grid.n_nodes,) * 2)
    for alpha in product(range(m + 1), repeat=grid.dim):
        if sum(alpha) != m:
            continue
        M = sp.identity(grid.n_nodes, format="csr")
        for axis in range(grid.dim):
            for _ in range(alpha[axis]):
                M = cal.partial_matrix(grid, axis) @ M
        A = A + M.T @ W @ M
    return A


def _moment_vectors(grid, region, m):
    """Columns b_beta with b_beta^T x = integral over the region of the
    beta-derivative of the nodal field x, for |beta| < m."""
    w = region.weight_vector()
    cols = []
    for beta in product(range(m), repeat=grid.dim):
        if sum(beta) >= m:
            continue
        M = sp.identity(grid.n_nodes, format="csr")
        for axis in range(grid.dim):
            for _ in range(beta[axis]):
                M = cal.partial_matrix(grid, axis) @ M
        cols.append(M.T @ w)
    return np.stack(cols, axis=1)


def _rank_one_sum(vectors):
    B = sp.csr_matrix(vectors)
    return B @ B.T


def _zero_jet_basis(grid, region, m):
    """Dense orthonormal basis of the fields whose value (and, for m = 2,
    first derivatives) vanish at the region nodes."""
    n = grid.n_nodes
    if n > DENSE_LIMIT:
        raise UnsupportedDimension(
            "zero-jet constraints need the dense path (<= 2000 nodes)")
    rows = []
    ids = region.node_ids
    eye = sp.identity(n, format="csr")
    rows.append(eye[ids])
    if m >= 2:
        for axis in range(grid.dim):
            rows.append(cal.partial_matrix(grid, axis)[ids])
    C = sp.vstack(rows).toarray()
    Z = sla.null_space(C)
    if Z.shape[1] == 0:
        raise ZeroMeasure("zero-jet constraints leave no admissible field")
    return Z


# ---------------------------------------------------------------------------
# vector form helpers


def _vector_w1_form(carrier):
    """Full first-order vector form: mass plus all first-derivative terms
    (ambient partials on grids, Guenter components on surfaces; on
    cylinders the per-layer base terms plus the transversal one)."""
    if carrier.kind in ("grid", "surface"):
        M = assemble_quadratic_form("vec_mass", carrier).matrix
        S = assemble_quadratic_form("vec_stiffness_grad", carrier).matrix
        return M + S
    base = carrier.base
    nc = base.dim
    Wt = sp.diags(carrier.layer_weights)
    base_w1 = _vector_w1_form(base)
    A = sp.kron(Wt, base_w1, format="csr")
    Dt = sp.kron(cal.transversal_partial(carrier), sp.identity(nc), format="csr")
    Wv = sp.diags(np.repeat(carrier.node_weights, nc))
    return A + Dt.T @ Wv @ Dt


def _vector_tangential_w1_form(carrier):
    """Vector mass plus base-tangential derivative terms only (the cylinder
    left-hand sides carry no transversal derivative)."""
    if carrier.kind in ("grid", "surface"):
        return _vector_w1_form(carrier)
    base = carrier.base
    Wt = sp.diags(carrier.layer_weights)
    return sp.kron(Wt, _vector_w1_form(base), format="csr")


def _def_form(carrier):
    if carrier.kind == "grid":
        return assemble_quadratic_form("stiffness_def", carrier).matrix, "n/a"
    if carrier.kind == "surface":
        op = assemble_quadratic_form("stiffness_surface_def", carrier)
        return op.matrix, op.meta["curvature_provenance"]
    base = carrier.base
    Ab, prov = _def_form(base)
    Wt = sp.diags(carrier.layer_weights)
    return sp.kron(Wt, Ab, format="csr"), prov


def _vec_region_diag(carrier, region, nc):
    return sp.diags(np.repeat(region.weight_vector(), nc)).tocsr()


def _cyl_tangential_map(cyl):
    base = cyl.base
    T = tangential_reduction(base)
    return sp.kron(sp.identity(cyl.layers), T, format="csr")


# ---------------------------------------------------------------------------
# the registry table


_REGISTRY = {}


def register(id, carrier_kinds, field_kind, doc):
    def deco(fn):
        _REGISTRY[id] = {"build": fn, "carriers": carrier_kinds,
                         "field": field_kind, "doc": doc}
        return fn
    return deco


def registered_ids():
    return sorted(_REGISTRY)


def describe(id):
    if id not in _REGISTRY:
        raise UnsupportedKind(f"unknown inequality id {id!r}")
    e = _REGISTRY[id]
    return {"id": id, "carriers": e["carriers"], "field": e["field"],
            "doc": e["doc"]}


def _entry(id):
    if id not in _REGISTRY:
        raise UnsupportedKind(
            f"unknown inequality id {id!r}; known: {', '.join(registered_ids())}")
    return _REGISTRY[id]


def build_problem(id, mesh, regions=None):
    e = _entry(id)
    _require(mesh.kind in e["carriers"],
             f"{id} is registered for {e['carriers']}, got {mesh.kind}")
    prob, _ = e["build"](mesh, regions, p=2.0, want="problem")
    if prob is None:
        raise UnsupportedKind(f"{id} has no eigenvalue route (sup-norm id)")
    return prob


def build_evaluator(id, mesh, regions=None, p=2.0):
    e = _entry(id)
    _require(mesh.kind in e["carriers"],
             f"{id} is registered for {e['carriers']}, got {mesh.kind}")
    _, ev = e["build"](mesh, regions, p=p, want="evaluator")
    return ev


# -- scalar Poincare / Friedrichs -------------------------------------------


def _mean_zero_project(carrier):
    def project(f):
        shifted = f - norms.mean_value(f)
        if np.abs(shifted.values).max() < 1e-13 * max(1.0, np.abs(f.values).max()):
            return None
        return shifted
    return project


def _zero_region_project(region):
    ids = region.node_ids

    def project(f):
        vals = f.values.copy()
        if vals.ndim == 1:
            vals[ids] = 0.0
        else:
            vals[ids, :] = 0.0
        if np.abs(vals).max() < 1e-13 * max(1.0, np.abs(f.values).max()):
            return None
        if isinstance(f, VectorField):
            return VectorField(f.carrier, vals, f.tangential, f.support)
        return ScalarField(f.carrier, vals, f.support)
    return project


def _poincare(mesh, regions, p, want, transversal):
    if want == "problem":
        A = _scalar_stiffness(mesh, transversal=transversal)
        B = _scalar_mass(mesh)
        z = np.ones(mesh.n_nodes)
        return Problem(A, B, deflate=z[:, None],
                       expand=_identity_expand(mesh.n_nodes),
                       requires_connected=True), None
    ev = Evaluator(
        field_kind="scalar",
        project=_mean_zero_project(mesh),
        lhs=lambda f: norms.lp_norm(f, p),
        rhs=lambda f: norms.gradient_seminorm(f, p, transversal=transversal),
        note="mean-zero admissible space")
    return None, ev


@register("P_domain", ("grid",), "scalar",
          "mean-zero Poincare on a grid: |f|_p <= C |grad f|_p")
def _(mesh, regions, p, want):
    return _poincare(mesh, regions, p, want, transversal=True)


@register("P_surface", ("surface",), "scalar",
          "mean-zero Poincare on a closed surface with the surface gradient")
def _(mesh, regions, p, want):
    return _poincare(mesh, regions, p, want, transversal=True)


def _zero_trace(mesh, regions, p, want, id, transversal):
    region = _region(regions, "M0", id)
    if want == "problem":
        A = _scalar_stiffness(mesh, transversal=transversal)
        B = _scalar_mass(mesh)
        keep = elimination_mask(mesh, region)
        return Problem(restrict_form(A, keep), restrict_form(B, keep),
                       expand=_scatter_expand(keep),
                       requires_connected=True), None
    ev = Evaluator(
        field_kind="scalar",
        project=_zero_region_project(region),
        lhs=lambda f: norms.lp_norm(f, p),
        rhs=lambda f: norms.gradient_seminorm(f, p, transversal=transversal),
        note="zero trace on M0")
    return None, ev


@register("P0_domain", ("grid",), "scalar",
          "Poincare with vanishing trace on M0 (grid)")
def _(mesh, regions, p, want):
    return _zero_trace(mesh, regions, p, want, "P0_domain", True)


@register("P0_surface", ("surface",), "scalar",
          "Poincare with vanishing trace on M0 (surface)")
def _(mesh, regions, p, want):
    return _zero_trace(mesh, regions, p, want, "P0_surface", True)


def _friedrichs(mesh, regions, p, want, id, transversal, trace_form):
    region = _region(regions, "M0", id)
    if want == "problem":
        A = _scalar_stiffness(mesh, transversal=transversal)
        if trace_form == "moment":
            b = region.weight_vector()
            A = A + _rank_one_sum(b[:, None])
        else:
            A = A + sp.diags(region.weight_vector())
        B = _scalar_mass(mesh)
        return Problem(A, B, expand=_identity_expand(mesh.n_nodes)), None

    def rhs(f):
        g = norms.gradient_seminorm(f, p, transversal=transversal)
        t = norms.trace_moment_functional(f, region, m=1, p=p, form=trace_form)
        return (g ** p + t ** p) ** (1.0 / p)

    ev = Evaluator(field_kind="scalar", project=lambda f: f,
                   lhs=lambda f: norms.lp_norm(f, p), rhs=rhs,
                   note=f"Friedrichs with {trace_form} trace on M0")
    return None, ev


@register("F_domain", ("grid",), "scalar",
          "Friedrichs on a grid: rank-one |int_M0 f|^2 augmentation")
def _(mesh, regions, p, want):
    return _friedrichs(mesh, regions, p, want, "F_domain", True, "moment")


@register("F_surface", ("surface",), "scalar",
          "Friedrichs on a surface: rank-one |int_M0 f|^2 augmentation")
def _(mesh, regions, p, want):
    return _friedrichs(mesh, regions, p, want, "F_surface", True, "moment")


# -- scalar cylinder reductions ---------------------------------------------


@register("Cyl_P0", ("cylinder",), "scalar",
          "cylinder over a surface base: zero trace on a strip, RHS uses "
          "base derivatives only")
def _(mesh, regions, p, want):
    _require(mesh.base.kind == "surface", "Cyl_P0 needs a surface base")
    return _zero_trace(mesh, regions, p, want, "Cyl_P0", False)


@register("Cyl_F", ("cylinder",), "scalar",
          "cylinder over a surface base: Lp strip trace, RHS uses base "
          "derivatives only")
def _(mesh, regions, p, want):
    _require(mesh.base.kind == "surface", "Cyl_F needs a surface base")
    return _friedrichs(mesh, regions, p, want, "Cyl_F", False, "trace")


@register("CylFlat_P0", ("cylinder",), "scalar",
          "cylinder over a flat base: zero trace on a strip, RHS uses base "
          "derivatives only")
def _(mesh, regions, p, want):
    _require(mesh.base.kind == "grid", "CylFlat_P0 needs a grid base")
    return _zero_trace(mesh, regions, p, want, "CylFlat_P0", False)


@register("CylFlat_F", ("cylinder",), "scalar",
          "cylinder over a flat base: Lp strip trace, RHS uses base "
          "derivatives only")
def _(mesh, regions, p, want):
    _require(mesh.base.kind == "grid", "CylFlat_F needs a grid base")
    return _friedrichs(mesh, regions, p, want, "CylFlat_F", False, "trace")


# -- higher-order families ----------------------------------------------------


def _wm_builder(m, mode, surface):
    def build(mesh, regions, p, want):
        id = f"W{m}_{mode}" + ("_surf" if surface else "")
        if surface:
            _require(m == 1, "surface ids support m = 1 only")
        region = _region(regions, "M0", id)
        if want == "problem":
            if surface:
                S = _scalar_stiffness(mesh)
                B = _scalar_mass(mesh) + S
                A = S
            else:
                A = _order_m_stiffness(mesh, m)
                B = _sobolev_matrix(mesh, m)
            if mode == "P":
                bs = (_moment_vectors(mesh, region, m) if not surface
                      else region.weight_vector()[:, None])
                A = A + _rank_one_sum(bs)
                return Problem(A, B, expand=_identity_expand(A.shape[0])), None
            if mode == "F":
                A = A + sp.diags(region.weight_vector())
                return Problem(A, B, expand=_identity_expand(A.shape[0])), None
            # zero-trace mode: order-m jet vanishes on the region
            if m == 1:
                keep = elimination_mask(mesh, region)
                return Problem(restrict_form(A, keep), restrict_form(B, keep),
                               expand=_scatter_expand(keep)), None
            Z = _zero_jet_basis(mesh, region, m)
            Ar = Z.T @ (A @ Z)
            Br = Z.T @ (B @ Z)
            return Problem(sp.csr_matrix(Ar), sp.csr_matrix(Br),
                           expand=lambda y: Z @ y), None

        spec = norms.NormSpec(p=p, m=m)

        def lhs(f):
            return norms.sobolev_norm(f, spec)

        def seminorm_m(f):
            if surface:
                return norms.gradient_seminorm(f, p)
            total = 0.0
            for alpha in product(range(m + 1), repeat=mesh.dim):
                if sum(alpha) == m:
                    d = cal.higher_derivative(alpha, f)
                    total += norms.power_sum(d, p)
            return total ** (1.0 / p)

        if mode == "P":
            def rhs(f):
                s = seminorm_m(f) ** p
                if surface:
                    s += abs(norms.region_integral(f, region)) ** p
                else:
                    for beta in product(range(m), repeat=mesh.dim):
                        if sum(beta) < m:
                            d = cal.higher_derivative(beta, f)
                            s += abs(norms.region_integral(d, region)) ** p
                return s ** (1.0 / p)
            return None, Evaluator("scalar", lambda f: f, lhs, rhs,
                                   note="order-m seminorm plus moments")
        if mode == "F":
            def rhs(f):
                t = norms.trace_moment_functional(f, region, m=1, p=p,
                                                  form="trace")
                return (seminorm_m(f) ** p + t ** p) ** (1.0 / p)
            return None, Evaluator("scalar", lambda f: f, lhs, rhs,
                                   note="order-m seminorm plus Lp trace")

        if m == 1 or surface:
            project = _zero_region_project(region)
        else:
            Z = _zero_jet_basis(mesh, region, m)

            def project(f, Z=Z):
                y = Z.T @ f.values
                vals = Z @ y
                if np.abs(vals).max() < 1e-13 * max(1.0, np.abs(f.values).max()):
                    return None
                return ScalarField(mesh, vals)

        return None, Evaluator("scalar", project, lhs,
                               lambda f: seminorm_m(f),
                               note="zero jet of order m-1 on M0")
    return build


def _sobolev_matrix(grid, m):
    A = sp.diags(grid.node_weights).tocsr()
    for order in range(1, m + 1):
        A = A + _order_m_stiffness(grid, order)
    return A


for _m in (1, 2):
    for _mode in ("P", "P0", "F"):
        register(f"W{_m}_{_mode}", ("grid",), "scalar",
                 f"order-{_m} Sobolev inequality, mode {_mode}, on grids")(
            _wm_builder(_m, _mode, surface=False))
for _mode in ("P", "P0", "F"):
    register(f"W1_{_mode}_surf", ("surface",), "scalar",
             f"first-order Sobolev inequality, mode {_mode}, on surfaces")(
        _wm_builder(1, _mode, surface=True))


# -- Korn family ---------------------------------------------------------------


def _tangential_project(mesh):
    nu = mesh.vertex_normals

    def project(U):
        vals = U.values.copy()
        vals -= (vals * nu).sum(axis=1)[:, None] * nu
        if np.abs(vals).max() < 1e-13 * max(1.0, np.abs(U.values).max()):
            return None
        return VectorField(mesh, vals, tangential=True)
    return project


def _cyl_tangential_project(cyl):
    nu = cyl.base.vertex_normals
    nu_full = np.tile(nu, (cyl.layers, 1))

    def project(U):
        vals = U.values.copy()
        vals -= (vals * nu_full).sum(axis=1)[:, None] * nu_full
        if np.abs(vals).max() < 1e-13 * max(1.0, np.abs(U.values).max()):
            return None
        return VectorField(cyl, vals, tangential=True)
    return project


def _compose(f, g):
    def h(x):
        y = g(x)
        return None if y is None else f(y)
    return h


def _korn1(mesh, regions, p, want):
    surf = mesh.kind == "surface"
    if want == "problem":
        M = assemble_quadratic_form("vec_mass", mesh).matrix
        D, prov = _def_form(mesh)
        A = M + D
        B = _vector_w1_form(mesh)
        if surf:
            T = tangential_reduction(mesh)
            A, B = T.T @ A @ T, T.T @ B @ T
            return Problem(A, B, expand=lambda y: T @ y,
                           curvature_provenance=prov), None
        return Problem(A, B, expand=_identity_expand(A.shape[0]),
                       curvature_provenance=prov), None
    project = _tangential_project(mesh) if surf else (lambda U: U)
    ev = Evaluator(
        field_kind="tangential" if surf else "vector",
        project=project,
        lhs=lambda U: norms.sobolev_norm(U, norms.NormSpec(p=p, m=1)),
        rhs=lambda U: norms.korn_equivalent_norm(U, "korn_equiv_with_L", p),
        note="first Korn inequality (no boundary condition)")
    return None, ev


register("KornI", ("grid",), "vector",
         "Korn I: W1 norm bounded through |U| and |Def U|")(_korn1)
register("KornI_surf", ("surface",), "tangential",
         "surface Korn I for tangential fields with Def_C")(_korn1)


def _korn2(mesh, regions, p, want, id, region_key):
    surf = mesh.kind == "surface"
    if regions and region_key in regions:
        region = regions[region_key]
    elif mesh.kind == "grid":
        from .geometry import mark_region
        region = mark_region(mesh, lambda pt, m=mesh: bool(
            np.any(np.abs(pt - m.box[:, 0]) < 1e-12)
            or np.any(np.abs(pt - m.box[:, 1]) < 1e-12)), "boundary-part")
    else:
        raise MissingRegion(f"{id} needs an explicit region {region_key!r} "
                            "on closed surfaces")
    if want == "problem":
        D, prov = _def_form(mesh)
        B = _vector_w1_form(mesh)
        nc = mesh.dim
        if surf:
            T = tangential_reduction(mesh)
            D, B = T.T @ D @ T, T.T @ B @ T
            keep_nodes = ~region.mask()
            keep = np.repeat(keep_nodes, nc - 1)
            Dr, Br = restrict_form(D, keep), restrict_form(B, keep)

            def expand(y, T=T, keep=keep):
                red = np.zeros(T.shape[1])
                red[keep] = y
                return T @ red
            return Problem(Dr, Br, expand=expand,
                           curvature_provenance=prov), None
        keep = elimination_mask(mesh, region, nc)
        return Problem(restrict_form(D, keep), restrict_form(B, keep),
                       expand=_scatter_expand(keep),
                       curvature_provenance=prov), None
    project = _zero_region_project(region)
    if surf:
        project = _compose(project, _tangential_project(mesh))
    ev = Evaluator(
        field_kind="tangential" if surf else "vector",
        project=project,
        lhs=lambda U: norms.sobolev_norm(U, norms.NormSpec(p=p, m=1)),
        rhs=lambda U: norms.korn_equivalent_norm(U, "korn_equiv_def_only", p),
        note="Korn II / deformation-only norm on the zero-trace space")
    return None, ev


register("KornII", ("grid",), "vector",
         "Korn II on the zero-trace space (default region: whole boundary)")(
    lambda mesh, regions, p, want: _korn2(mesh, regions, p, want, "KornII", "G0"))
register("KornII_surf", ("surface",), "tangential",
         "surface Korn II on the zero-trace space (explicit G0)")(
    lambda mesh, regions, p, want: _korn2(mesh, regions, p, want,
                                          "KornII_surf", "G0"))
register("PK_domain", ("grid",), "vector",
         "Poincare-Korn: W1 norm through |Def U| with vanishing trace on M0")(
    lambda mesh, regions, p, want: _korn2(mesh, regions, p, want,
                                          "PK_domain", "M0"))
register("PK_surface", ("surface",), "tangential",
         "surface Poincare-Korn with vanishing trace on M0")(
    lambda mesh, regions, p, want: _korn2(mesh, regions, p, want,
                                          "PK_surface", "M0"))


def _fk(mesh, regions, p, want, id):
    surf = mesh.kind == "surface"
    region = _region(regions, "M0", id)
    nc = mesh.dim
    if want == "problem":
        D, prov = _def_form(mesh)
        A = D + _vec_region_diag(mesh, region, nc)
        B = _vector_w1_form(mesh)
        if surf:
            T = tangential_reduction(mesh)
            A, B = T.T @ A @ T, T.T @ B @ T
            return Problem(A, B, expand=lambda y: T @ y,
                           curvature_provenance=prov), None
        return Problem(A, B, expand=_identity_expand(A.shape[0]),
                       curvature_provenance=prov), None

    def rhs(U):
        d = norms.korn_equivalent_norm(U, "korn_equiv_def_only", p)
        w = region.region_weights
        vals = np.abs(U.values[region.node_ids]) ** p
        t = float(w @ vals.sum(axis=1))
        return (d ** p + t) ** (1.0 / p)

    project = _tangential_project(mesh) if surf else (lambda U: U)
    ev = Evaluator(
        field_kind="tangential" if surf else "vector",
        project=project,
        lhs=lambda U: norms.sobolev_norm(U, norms.NormSpec(p=p, m=1)),
        rhs=rhs, note="Friedrichs-Korn: |Def U| plus Lp trace of U on M0")
    return None, ev


register("FK_domain", ("grid",), "vector",
         "Friedrichs-Korn on grids: |Def U| plus the Lp trace of U")(
    lambda mesh, regions, p, want: _fk(mesh, regions, p, want, "FK_domain"))
register("FK_surface", ("surface",), "tangential",
         "surface Friedrichs-Korn with Def_C and the Lp trace of U")(
    lambda mesh, regions, p, want: _fk(mesh, regions, p, want, "FK_surface"))


# -- cylinder Korn -------------------------------------------------------------


def _cyl_korn(mesh, regions, p, want, id, mode, flat):
    _require(mesh.kind == "cylinder", f"{id} needs a cylinder carrier")
    base = mesh.base
    if flat:
        _require(base.kind == "grid", f"{id} needs a grid base")
    else:
        _require(base.kind == "surface", f"{id} needs a surface base")
    region = _region(regions, "M0" if mode == "F" else "G0", id)
    nc = base.dim
    if want == "problem":
        D, prov = _def_form(mesh)  # kron(Wt, base def form)
        B = _vector_tangential_w1_form(mesh)
        if mode == "F":
            D = D + _vec_region_diag(mesh, region, nc)
        if not flat:
            T = _cyl_tangential_map(mesh)
            D, B = T.T @ D @ T, T.T @ B @ T
        if mode == "P0":
            keep_nodes = ~region.mask()
            width = (nc - 1) if not flat else nc
            keep = np.repeat(keep_nodes, width)
            Dr, Br = restrict_form(D, keep), restrict_form(B, keep)
            if flat:
                return Problem(Dr, Br, expand=_scatter_expand(keep),
                               curvature_provenance=prov), None

            def expand(y, T=T, keep=keep):
                red = np.zeros(T.shape[1])
                red[keep] = y
                return T @ red
            return Problem(Dr, Br, expand=expand,
                           curvature_provenance=prov), None
        if not flat:
            return Problem(D, B, expand=lambda y: T @ y,
                           curvature_provenance=prov), None
        return Problem(D, B, expand=_identity_expand(D.shape[0]),
                       curvature_provenance=prov), None

    def lhs(U):
        total = norms.power_sum(U, p)
        for c in range(nc):
            fld = ScalarField(mesh, U.values[:, c])
            for d in norms.cylinder_tangential_derivatives(fld):
                total += norms.power_sum(d, p)
        return total ** (1.0 / p)

    def rhs(U):
        d = norms.def_seminorm(U, p)
        if mode == "F":
            w = region.region_weights
            vals = np.abs(U.values[region.node_ids]) ** p
            return (d ** p + float(w @ vals.sum(axis=1))) ** (1.0 / p)
        return d

    project = (lambda U: U) if flat else _cyl_tangential_project(mesh)
    if mode == "P0":
        project = _compose(_zero_region_project(region), project)
    ev = Evaluator(
        field_kind="vector" if flat else "tangential",
        project=project, lhs=lhs, rhs=rhs,
        note=f"cylinder Korn ({'flat' if flat else 'surface'} base), "
             f"mode {mode}; no transversal derivative on either side")
    return None, ev


register("CylK_F", ("cylinder",), "tangential",
         "cylinder Korn with Lp strip trace, surface cross-section")(
    lambda mesh, regions, p, want: _cyl_korn(mesh, regions, p, want,
                                             "CylK_F", "F", flat=False))
register("CylK_P0", ("cylinder",), "tangential",
         "cylinder Korn with vanishing trace on a strip, surface cross-section")(
    lambda mesh, regions, p, want: _cyl_korn(mesh, regions, p, want,
                                             "CylK_P0", "P0", flat=False))
register("CylFlatK_F", ("cylinder",), "vector",
         "cylinder Korn with Lp strip trace, flat cross-section")(
    lambda mesh, regions, p, want: _cyl_korn(mesh, regions, p, want,
                                             "CylFlatK_F", "F", flat=True))
register("CylFlatK_P0", ("cylinder",), "vector",
         "cylinder Korn with vanishing trace on a strip, flat cross-section")(
    lambda mesh, regions, p, want: _cyl_korn(mesh, regions, p, want,
                                             "CylFlatK_P0", "P0", flat=True))


# -- default desk-scale configurations ----------------------------------------


def default_configuration(id):
    """A small mesh plus regions on which the id runs in well under a
    second; the closure and homogeneity invariants are checked here."""
    from . import geometry as geo
    _entry(id)

    def left_end(g):
        return geo.mark_region(g, lambda p: p[0] < 1e-12, "boundary-part")

    def both_ends(g):
        return geo.mark_region(g, lambda p: p[0] < 1e-12 or p[0] > 1 - 1e-12,
                               "boundary-part")

    def left_edge(g):
        return geo.mark_region(g, lambda p: p[0] < 1e-12, "boundary-part")

    def full_boundary(g):
        return geo.mark_region(
            g, lambda p: bool(np.any(np.abs(p - g.box[:, 0]) < 1e-12)
                              or np.any(np.abs(p - g.box[:, 1]) < 1e-12)),
            "boundary-part")

    def cap(s):
        return geo.mark_region(s, lambda p: p[2] > 0.8, "subdomain")

    if id == "P_domain":
        return {"mesh": geo.interval_grid(129), "regions": None}
    if id == "P0_domain":
        g = geo.interval_grid(129)
        return {"mesh": g, "regions": {"M0": both_ends(g)}}
    if id == "F_domain":
        g = geo.interval_grid(129)
        return {"mesh": g, "regions": {"M0": left_end(g)}}
    if id == "P_surface":
        return {"mesh": geo.circle_mesh(128), "regions": None}
    if id in ("P0_surface", "F_surface", "W1_P_surf", "W1_P0_surf",
              "W1_F_surf"):
        s = geo.icosphere_mesh(2)
        return {"mesh": s, "regions": {"M0": cap(s)}}
    if id in ("Cyl_P0", "Cyl_F", "CylK_P0", "CylK_F"):
        base = geo.circle_mesh(48)
        cyl = geo.extrude_cylinder(base, (0.0, 1.0), 3)
        arc = geo.mark_region(base, lambda p: p[0] > 0.9, "boundary-part")
        strip = geo.extrude_region(cyl, arc)
        key = "G0" if id == "CylK_P0" else "M0"
        return {"mesh": cyl, "regions": {key: strip}}
    if id in ("CylFlat_P0", "CylFlat_F"):
        base = geo.interval_grid(65)
        cyl = geo.extrude_cylinder(base, (0.0, 1.0), 4)
        strip = geo.extrude_region(cyl, left_end(base))
        return {"mesh": cyl, "regions": {"M0": strip}}
    if id in ("CylFlatK_P0", "CylFlatK_F"):
        base = geo.box_grid((7, 7))
        cyl = geo.extrude_cylinder(base, (0.0, 1.0), 3)
        strip = geo.extrude_region(cyl, left_edge(base))
        key = "G0" if id == "CylFlatK_P0" else "M0"
        return {"mesh": cyl, "regions": {key: strip}}
    if id in ("W1_P", "W1_P0", "W1_F"):
        g = geo.box_grid((17, 17))
        return {"mesh": g, "regions": {"M0": left_edge(g)}}
    if id in ("W2_P", "W2_P0", "W2_F"):
        g = geo.box_grid((9, 9))
        return {"mesh": g, "regions": {"M0": full_boundary(g)}}
    if id == "KornI":
        return {"mesh": geo.box_grid((13, 13)), "regions": None}
    if id == "KornII":
        return {"mesh": geo.box_grid((13, 13)), "regions": None}
    if id in ("PK_domain", "FK_domain"):
        g = geo.box_grid((13, 13))
        return {"mesh": g, "regions": {"M0": left_edge(g)}}
    if id == "KornI_surf":
        return {"mesh": geo.icosphere_mesh(2), "regions": None}
    if id == "KornII_surf":
        s = geo.icosphere_mesh(2)
        return {"mesh": s, "regions": {"G0": cap(s)}}
    if id in ("PK_surface", "FK_surface"):
        s = geo.icosphere_mesh(2)
        return {"mesh": s, "regions": {"M0": cap(s)}}
    if id == "Sup_P":
        g = geo.box_grid((17, 17))
        pt = geo.mark_region(g, lambda p: abs(p[0] - 0.5) < 1e-9
                             and abs(p[1] - 0.5) < 1e-9, "point")
        return {"mesh": g, "regions": {"M0": pt}}
    raise UnsupportedKind(f"no default configuration for {id!r}")


# -- sup-norm Poincare ---------------------------------------------------------


@register("Sup_P", ("grid", "surface"), "scalar",
          "sup-norm Poincare: sup|f - mean| <= C sup|grad f| (sampled route "
          "only; with a point region, sup|f| with f(x0) = 0)")
def _(mesh, regions, p, want):
    if want == "problem":
        return None, None
    point = regions.get("M0") if regions else None

    if point is not None:
        i0 = int(point.node_ids[0])

        def project(f):
            vals = f.values - f.values[i0]
            if np.abs(vals).max() < 1e-13 * max(1.0, np.abs(f.values).max()):
                return None
            return ScalarField(mesh, vals)

        def lhs(f):
            return float(np.abs(f.values).max())
    else:
        project = _mean_zero_project(mesh)

        def lhs(f):
            return norms.sup_seminorm_pair(f)[0]

    def rhs(f):
        return norms.sup_seminorm_pair(f)[1]

    return None, Evaluator("scalar", project, lhs, rhs,
                           note="sup-norm route; no eigenvalue problem",
                           sup_norm=True)
