"""Field containers over the geometric carriers.

Values live either on nodes (``support='vertex'``) or on elements
(``support='cell'``).  Element-sampled fields arise from the elementwise
derivative operators; all integral norms dispatch quadrature weights on the
support, so forms and norm evaluations agree exactly.
"""

import numpy as np

from .errors import DimensionMismatch, NotTangential
from .geometry import base_weights


class MultiIndex(tuple):
    """Multi-index alpha with |alpha| = sum of entries."""

    def __new__(cls, alpha):
        alpha = tuple(int(a) for a in alpha)
        if any(a < 0 for a in alpha):
            raise ValueError("multi-index entries must be non-negative")
        return super().__new__(cls, alpha)

    @property
    def order(self):
        return sum(self)


def support_size(carrier, support):
    if support == "vertex":
        return carrier.n_nodes
    if support == "cell":
        if carrier.kind == "surface":
            return len(carrier.elements)
        if carrier.kind == "cylinder":
            return carrier.layers * len(carrier.base.elements)
        raise DimensionMismatch("cell support needs a surface-backed carrier")
    raise ValueError(f"unknown support {support!r}")


def support_weights(carrier, support):
    """Quadrature weights matching a support choice."""
    if support == "vertex":
        return base_weights(carrier)
    if carrier.kind == "surface":
        return carrier.element_measures
    # cylinder: layer-major cells, trapezoid x element measure
    ne = len(carrier.base.elements)
    return (np.repeat(carrier.layer_weights, ne)
            * np.tile(carrier.base.element_measures, carrier.layers))


class ScalarField:
    """One real value per node (or per cell)."""

    def __init__(self, carrier, values, support="vertex"):
        self.carrier = carrier
        self.values = np.asarray(values, dtype=float).ravel()
        self.support = support
        m = support_size(carrier, support)
        if len(self.values) != m:
            raise DimensionMismatch(
                f"expected {m} values for {support} support, got {len(self.values)}")
        if not np.isfinite(self.values).all():
            raise ValueError("field values must be finite")

    def weights(self):
        return support_weights(self.carrier, self.support)

    def copy(self):
        return ScalarField(self.carrier, self.values.copy(), self.support)

    def __add__(self, other):
        return ScalarField(self.carrier, self.values + _vals(other), self.support)

    def __sub__(self, other):
        return ScalarField(self.carrier, self.values - _vals(other), self.support)

    def __mul__(self, scalar):
        return ScalarField(self.carrier, self.values * float(scalar), self.support)

    __rmul__ = __mul__


def _vals(x):
    return x.values if hasattr(x, "values") else x


class VectorField:
    """n real values per node (or per cell); optionally flagged tangential.

    The tangential flag asserts |<U(x), nu(x)>| <= 1e-10 at every surface
    node and is verified at construction.
    """

    def __init__(self, carrier, values, tangential=False, support="vertex",
                 n_components=None):
        self.carrier = carrier
        vals = np.asarray(values, dtype=float)
        m = support_size(carrier, support)
        if n_components is None:
            n_components = vals.shape[1] if vals.ndim == 2 else vals.size // m
        vals = vals.reshape(m, n_components)
        self.values = vals
        self.support = support
        self.n_components = n_components
        if not np.isfinite(vals).all():
            raise ValueError("field values must be finite")
        self.tangential = bool(tangential)
        if self.tangential:
            nrm = self._normal_defect()
            if nrm > 1e-10:
                raise NotTangential(f"max |<U, nu>| = {nrm:.3e}")

    def _normal_defect(self):
        carrier = self.carrier
        if carrier.kind == "surface" and self.support == "vertex":
            nu = carrier.vertex_normals
            return float(np.abs(np.sum(self.values[:, :nu.shape[1]] * nu, axis=1)).max())
        if carrier.kind == "cylinder" and carrier.base.kind == "surface":
            nu = carrier.base.vertex_normals
            if self.support == "vertex":
                nu_full = np.tile(nu, (carrier.layers, 1))
                return float(np.abs(np.sum(self.values[:, :nu.shape[1]] * nu_full,
                                           axis=1)).max())
        return 0.0

    def weights(self):
        return support_weights(self.carrier, self.support)

    def component(self, j):
        return ScalarField(self.carrier, self.values[:, j], self.support)

    def copy(self):
        return VectorField(self.carrier, self.values.copy(), self.tangential,
                           self.support)


def _sym_index_pairs(n):
    return [(j, k) for j in range(n) for k in range(j, n)]


class SymmetricTensorField:
    """Symmetric n x n tensor per node, stored as the n(n+1)/2 upper
    triangle entries in row-major pair order (0,0), (0,1), ..., (n-1,n-1)."""

    def __init__(self, carrier, packed, n, support="vertex"):
        self.carrier = carrier
        self.n = int(n)
        self.pairs = _sym_index_pairs(self.n)
        packed = np.asarray(packed, dtype=float)
        m = support_size(carrier, support)
        packed = packed.reshape(m, len(self.pairs))
        self.values = packed
        self.support = support
        if not np.isfinite(packed).all():
            raise ValueError("field values must be finite")

    @classmethod
    def from_full(cls, carrier, full, support="vertex", tol=1e-10):
        full = np.asarray(full, dtype=float)
        n = full.shape[-1]
        asym = np.abs(full - np.swapaxes(full, -1, -2)).max()
        if asym > tol:
            raise ValueError(f"tensor not symmetric: defect {asym:.3e}")
        pairs = _sym_index_pairs(n)
        packed = np.stack([full[:, j, k] for (j, k) in pairs], axis=1)
        return cls(carrier, packed, n, support)

    def entry(self, j, k):
        if j > k:
            j, k = k, j
        col = self.pairs.index((j, k))
        return ScalarField(self.carrier, self.values[:, col], self.support)

    def to_full(self):
        m = self.values.shape[0]
        full = np.empty((m, self.n, self.n))
        for col, (j, k) in enumerate(self.pairs):
            full[:, j, k] = self.values[:, col]
            full[:, k, j] = self.values[:, col]
        return full

    def weights(self):
        return support_weights(self.carrier, self.support)

    def pair_multiplicities(self):
        """2 for off-diagonal pairs, 1 on the diagonal (both orderings of
        j, k count in the tensor double sum)."""
        return np.array([1.0 if j == k else 2.0 for (j, k) in self.pairs])


def save_field_csv(path, field):
    """CSV dump: node id followed by the value column(s)."""
    vals = field.values
    if vals.ndim == 1:
        vals = vals[:, None]
    ids = np.arange(vals.shape[0])[:, None]
    data = np.hstack([ids, vals])
    cols = ",".join(f"v{j}" for j in range(vals.shape[1]))
    np.savetxt(path, data, delimiter=",", header="node," + cols, comments="")


def load_field_csv(path, carrier, support="vertex"):
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    vals = data[:, 1:]
    if vals.shape[1] == 1:
        return ScalarField(carrier, vals[:, 0], support)
    return VectorField(carrier, vals, support=support)
