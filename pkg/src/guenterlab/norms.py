"""Norms, seminorms, averages, and trace functionals.

Integral seminorms involving derivatives are evaluated on the elementwise
operator samples (cell support) for surface carriers and on the nodal
finite-difference samples for grids; the quadratic forms assembled in the
spectra module integrate the identical samples, so form evaluations and
norm evaluations agree to roundoff.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidP, ZeroMeasure, OrderOutOfScope, DimensionMismatch
from .fields import ScalarField, VectorField, SymmetricTensorField
from .geometry import MarkedRegion, base_weights
from . import calculus as cal


@dataclass(frozen=True)
class NormSpec:
    p: float = 2.0
    m: int = 1
    variant: str = "standard"

    def __post_init__(self):
        if not (self.p >= 1.0 or self.p == np.inf):
            raise InvalidP(f"p = {self.p}")
        if self.m < 0:
            raise ValueError("order must be non-negative")
        if self.variant not in ("standard", "korn_equiv_with_L",
                                "korn_equiv_def_only", "functional_augmented"):
            raise ValueError(f"unknown variant {self.variant!r}")


def _check_p(p):
    if p != np.inf and not p >= 1.0:
        raise InvalidP(f"p = {p} outside [1, inf]")


def _component_matrix(field):
    """(m, c) value matrix and per-component multiplicities."""
    if isinstance(field, ScalarField):
        return field.values[:, None], np.array([1.0])
    if isinstance(field, VectorField):
        return field.values, np.ones(field.values.shape[1])
    if isinstance(field, SymmetricTensorField):
        return field.values, field.pair_multiplicities()
    raise TypeError(f"not a field: {field!r}")


def lp_norm(field, p=2.0, weights=None):
    """(sum_w w * sum_components mult |v|^p)^(1/p); p = inf gives max |v|.

    Tensor components enter with multiplicity 2 off the diagonal, matching
    the full double-indexed sum.
    """
    _check_p(p)
    vals, mult = _component_matrix(field)
    if p == np.inf:
        return float(np.abs(vals).max()) if vals.size else 0.0
    if weights is None:
        weights = field.weights()
    if np.any(np.asarray(weights) < 0):
        raise ValueError("weights must be non-negative")
    acc = (np.abs(vals) ** p * mult[None, :]).sum(axis=1)
    return float((weights @ acc) ** (1.0 / p))


def power_sum(field, p=2.0, weights=None):
    """sum_w w * sum_c mult |v|^p without the root (the p-stack building
    block)."""
    _check_p(p)
    if p == np.inf:
        raise InvalidP("power sums are finite-p only")
    vals, mult = _component_matrix(field)
    if weights is None:
        weights = field.weights()
    return float(weights @ ((np.abs(vals) ** p * mult[None, :]).sum(axis=1)))


def mean_value(f: ScalarField, carrier=None):
    """Weighted average over the carrier or a marked region."""
    if carrier is None:
        carrier = f.carrier
    if isinstance(carrier, MarkedRegion):
        w = carrier.region_weights
        vals = f.values[carrier.node_ids]
    else:
        if f.support != "vertex":
            raise DimensionMismatch("mean over nodes needs a vertex field")
        w = base_weights(carrier)
        vals = f.values
    total = w.sum()
    if total <= 0:
        raise ZeroMeasure("carrier has zero measure")
    return float((w @ vals) / total)


def _scalar_derivative_fields(f: ScalarField, m):
    """All derivative fields of order 1..m (grids) or the Guenter components
    (surfaces, m = 1), as element/nodal samples suited to integration."""
    carrier = f.carrier
    out = []
    if carrier.kind == "grid":
        if m > 2:
            raise OrderOutOfScope("grid norms support order <= 2")
        from itertools import product
        n = carrier.dim
        for order in range(1, m + 1):
            for alpha in product(range(order + 1), repeat=n):
                if sum(alpha) == order:
                    out.append(cal.higher_derivative(alpha, f))
        return out
    if carrier.kind == "surface":
        if m > 1:
            raise OrderOutOfScope("surface norms support order <= 1")
        if m == 1:
            g = cal.element_gradient(f)
            out.extend(g.component(j) for j in range(carrier.dim))
        return out
    # cylinder: per-layer base derivatives plus the transversal one
    if m > 1:
        raise OrderOutOfScope("cylinder norms support order <= 1")
    if m == 1:
        out.extend(cylinder_tangential_derivatives(f))
        out.append(ScalarField(carrier, cal.transversal_partial(carrier) @ f.values))
    return out


def cylinder_tangential_derivatives(f: ScalarField):
    """Base-direction derivative samples of a cylinder field, layer by
    layer; no transversal component."""
    cyl = f.carrier
    base = cyl.base
    nb = base.n_nodes
    per_layer = f.values.reshape(cyl.layers, nb)
    if base.kind == "grid":
        mats = [cal.partial_matrix(base, a) for a in range(base.dim)]
        support = "vertex"
    else:
        mats = cal.element_gradient_matrices(base)
        support = "cell"
    out = []
    for M in mats:
        vals = np.concatenate([M @ per_layer[l] for l in range(cyl.layers)])
        out.append(ScalarField(cyl, vals, support=support))
    return out


def sobolev_norm(field, spec: NormSpec):
    """p-stack of the field and all its derivatives up to order spec.m."""
    p = spec.p
    _check_p(p)
    if p == np.inf:
        raise InvalidP("sobolev_norm is finite-p; use the sup path")
    if isinstance(field, ScalarField):
        total = power_sum(field, p)
        for d in _scalar_derivative_fields(field, spec.m):
            total += power_sum(d, p)
        return float(total ** (1.0 / p))
    if isinstance(field, VectorField):
        if spec.m > 1:
            raise OrderOutOfScope("vector Sobolev norms support order <= 1")
        total = power_sum(field, p)
        if spec.m == 1:
            for c in range(field.values.shape[1]):
                for d in _scalar_derivative_fields(field.component(c), 1):
                    total += power_sum(d, p)
        return float(total ** (1.0 / p))
    raise TypeError("sobolev_norm takes a scalar or vector field")


def gradient_seminorm(f: ScalarField, p=2.0, transversal=True):
    """p-stacked first-derivative seminorm; on cylinders ``transversal``
    False drops the d/dt term (the reduced right-hand sides)."""
    _check_p(p)
    carrier = f.carrier
    if carrier.kind == "cylinder" and not transversal:
        parts = cylinder_tangential_derivatives(f)
    else:
        parts = _scalar_derivative_fields(f, 1)
    total = sum(power_sum(d, p) for d in parts)
    return float(total ** (1.0 / p))


def def_seminorm(U: VectorField, p=2.0):
    """Deformation-tensor Lp seminorm: FD tensor on grids, elementwise
    tensor on surfaces, per-layer base tensor on cylinders."""
    _check_p(p)
    carrier = U.carrier
    if carrier.kind == "grid":
        return lp_norm(cal.deformation_domain(U), p)
    if carrier.kind == "surface":
        return lp_norm(cal.element_deformation_surface(U), p)
    base = carrier.base
    nb = base.n_nodes
    nc = U.values.shape[1]
    per_layer = U.values.reshape(carrier.layers, nb, nc)
    if base.kind == "surface":
        L = cal.element_deformation_matrix(base)
        npairs = base.dim * (base.dim + 1) // 2
        packed = np.concatenate([
            (L @ per_layer[l].ravel()).reshape(-1, npairs)
            for l in range(carrier.layers)])
        tens = SymmetricTensorField(carrier, packed, base.dim, support="cell")
        return lp_norm(tens, p)
    # grid base: FD deformation per layer
    n = base.dim
    mats = [cal.partial_matrix(base, a) for a in range(n)]
    pairs = [(j, k) for j in range(n) for k in range(j, n)]
    packed_layers = []
    for l in range(carrier.layers):
        dU = np.stack([np.stack([mats[k] @ per_layer[l][:, j]
                                 for k in range(n)], axis=1)
                       for j in range(n)], axis=1)
        sym = 0.5 * (dU + np.swapaxes(dU, 1, 2))
        packed_layers.append(np.stack([sym[:, j, k] for (j, k) in pairs], axis=1))
    tens = SymmetricTensorField(carrier, np.concatenate(packed_layers), n,
                                support="vertex")
    return lp_norm(tens, p)


def korn_equivalent_norm(U: VectorField, variant="korn_equiv_with_L", p=2.0):
    """with_L: (|U|_p^p + |Def U|_p^p)^(1/p); def_only: |Def U|_p."""
    _check_p(p)
    if variant == "korn_equiv_def_only":
        return def_seminorm(U, p)
    if variant != "korn_equiv_with_L":
        raise ValueError(f"unknown variant {variant!r}")
    d = def_seminorm(U, p)
    return float((power_sum(U, p) + d ** p) ** (1.0 / p))


def region_integral(f: ScalarField, region: MarkedRegion):
    if f.support != "vertex":
        raise DimensionMismatch("traces need vertex fields")
    return float(region.region_weights @ f.values[region.node_ids])


def trace_moment_functional(f: ScalarField, region: MarkedRegion, m=1, p=2.0,
                            form="moment"):
    """Moment form [sum_{|beta|<m} |int (d^beta f)|^p]^(1/p), or Lp-trace
    form [int |f|^p]^(1/p), over the marked region."""
    _check_p(p)
    if region.measure() <= 0:
        raise ZeroMeasure("region carries no measure")
    if form == "trace":
        vals = np.abs(f.values[region.node_ids]) ** p
        return float((region.region_weights @ vals) ** (1.0 / p))
    if form != "moment":
        raise ValueError(f"unknown form {form!r}")
    carrier = f.carrier
    total = abs(region_integral(f, region)) ** p
    if m >= 2:
        if carrier.kind != "grid" or m > 2:
            raise OrderOutOfScope("moment forms beyond first order need grids, m <= 2")
        for axis in range(carrier.dim):
            alpha = [0] * carrier.dim
            alpha[axis] = 1
            d = cal.higher_derivative(tuple(alpha), f)
            total += abs(region_integral(d, region)) ** p
    return float(total ** (1.0 / p))


def sup_seminorm_pair(f: ScalarField):
    """(sup |f - mean|, sup |grad f|) over nodes, via the pointwise
    operators (finite differences on grids, nodal fits on surfaces)."""
    carrier = f.carrier
    mean = mean_value(f)
    dev = float(np.abs(f.values - mean).max())
    if carrier.kind == "grid":
        g = cal.domain_gradient(f)
    elif carrier.kind == "surface":
        g = cal.surface_gradient(f)
    else:
        raise DimensionMismatch("sup seminorms on grids and surfaces only")
    mag = np.linalg.norm(g.values, axis=1)
    return dev, float(mag.max())
