"""Structured simplicial meshes in 1D/2D with constant-strain elements.

Displacements are nodal arrays of shape (n_nodes, dim), strains and dual
(stress-like) fields are per-element packed symmetric matrices:

    1D: 1 component  [xx]                 Frobenius weights [1]
    2D: 3 components [xx, xy, yy]         Frobenius weights [1, 2, 1]

All quadrature is exact because every integrand handled here is constant
per element.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, ContractViolation


@dataclass
class StructuredMesh:
    dim: int
    extents: np.ndarray            # physical lengths per axis
    shape: np.ndarray              # element cells per axis (quads in 2D)
    nodes: np.ndarray              # (n_nodes, dim)
    elements: np.ndarray           # (n_elem, dim+1) node indices
    measures: np.ndarray           # (n_elem,)
    centers: np.ndarray            # (n_elem, dim)
    boundary_mask: np.ndarray      # (n_nodes,) bool
    grad: np.ndarray               # (n_elem, n_comp, (dim+1)*dim)
    frob_w: np.ndarray             # Frobenius weights per packed component
    _basis_strain_norms: np.ndarray | None = field(default=None, repr=False)

    @property
    def n_nodes(self):
        return self.nodes.shape[0]

    @property
    def n_elem(self):
        return self.elements.shape[0]

    @property
    def n_comp(self):
        return self.frob_w.shape[0]

    @property
    def free_nodes(self):
        return np.nonzero(~self.boundary_mask)[0]

    @property
    def n_free_dof(self):
        return self.free_nodes.size * self.dim

    def zero_displacement(self):
        return np.zeros((self.n_nodes, self.dim))

    def check_displacement(self, u):
        u = np.asarray(u, dtype=float)
        if u.shape != (self.n_nodes, self.dim):
            raise ContractViolation(
                f"displacement shape {u.shape} does not conform to mesh "
                f"({self.n_nodes}, {self.dim})")
        return u

    def check_element_field(self, p):
        p = np.asarray(p, dtype=float)
        if p.shape != (self.n_elem, self.n_comp):
            raise ContractViolation(
                f"element field shape {p.shape} does not conform to mesh "
                f"({self.n_elem}, {self.n_comp})")
        return p

    # -- symmetric-matrix algebra on packed fields ------------------------

    def frob_dot(self, x, y):
        """Frobenius inner product per element for packed fields."""
        return ((x * y) * self.frob_w).sum(axis=-1)

    def frob_norm2(self, x):
        return self.frob_dot(x, x)

    def l2_norm(self, p):
        """L2(Omega) norm of a per-element packed field."""
        p = self.check_element_field(p)
        return float(np.sqrt((self.measures * self.frob_norm2(p)).sum()))

    def integrate(self, values):
        """Integral of a per-element scalar field."""
        return float((self.measures * np.asarray(values)).sum())

    # -- kinematics -------------------------------------------------------

    def symmetrized_gradient(self, u):
        """Per-element strain of a nodal displacement field."""
        u = self.check_displacement(u)
        elem_dofs = u[self.elements].reshape(self.n_elem, -1)
        return np.einsum("eck,ek->ec", self.grad, elem_dofs)

    def pairing(self, p, v):
        """Duality pairing  integral of p : eps(v)  over Omega."""
        p = self.check_element_field(p)
        eps = self.symmetrized_gradient(v)
        return float((self.measures * self.frob_dot(p, eps)).sum())

    def basis_strain_norms(self):
        """L2 norms of eps(phi_i) for every nodal basis function.

        Laid out as (n_nodes, dim); entries for boundary nodes included.
        Cached: equals sqrt(diag K) for the unit-coefficient operator.
        """
        if self._basis_strain_norms is None:
            nd = (self.dim + 1) * self.dim
            gw = self.grad * self.frob_w[None, :, None]
            local = np.einsum("eck,eck->ek", gw, self.grad)  # diag of G^T M G
            local = local * self.measures[:, None]
            acc = np.zeros((self.n_nodes, self.dim))
            rows = np.repeat(self.elements, self.dim, axis=1).reshape(
                self.n_elem, nd)
            cols = np.tile(np.arange(self.dim), self.dim + 1)
            np.add.at(acc, (rows.ravel(), np.tile(cols, self.n_elem)),
                      local.ravel())
            self._basis_strain_norms = np.sqrt(acc)
        return self._basis_strain_norms

    def locate_elements(self, points):
        """Element index containing each query point (structured lookup)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        h = self.extents / self.shape
        cell = np.clip((pts / h).astype(int), 0, self.shape - 1)
        if self.dim == 1:
            return cell[:, 0]
        nx = self.shape[0]
        quad = cell[:, 1] * nx + cell[:, 0]
        loc = pts / h - cell
        tri = np.where(loc[:, 0] >= loc[:, 1], 0, 1)
        return 2 * quad + tri


def build_mesh(extents, resolution, dim):
    """Uniform mesh of an interval (1D) or a rectangle split into right
    triangles (2D)."""
    if dim not in (1, 2):
        raise ConfigurationError(f"dimension must be 1 or 2, got {dim}")
    extents = np.atleast_1d(np.asarray(extents, dtype=float))[:dim]
    resolution = np.atleast_1d(np.asarray(resolution, dtype=int))[:dim]
    if extents.size != dim or resolution.size != dim:
        raise ConfigurationError("extents/resolution do not match dimension")
    if np.any(extents <= 0):
        raise ConfigurationError(f"extents must be positive, got {extents}")
    if np.any(resolution < 1):
        raise ConfigurationError(
            f"resolution must be at least 1 per axis, got {resolution}")

    if dim == 1:
        (length,), (ne,) = extents, resolution
        nodes = np.linspace(0.0, length, ne + 1)[:, None]
        elements = np.stack([np.arange(ne), np.arange(ne) + 1], axis=1)
        h = length / ne
        measures = np.full(ne, h)
        centers = 0.5 * (nodes[elements[:, 0], 0] + nodes[elements[:, 1], 0])
        boundary = np.zeros(ne + 1, dtype=bool)
        boundary[[0, -1]] = True
        grad = np.zeros((ne, 1, 2))
        grad[:, 0, 0] = -1.0 / h
        grad[:, 0, 1] = 1.0 / h
        return StructuredMesh(1, extents, resolution, nodes, elements,
                              measures, centers[:, None], boundary, grad,
                              np.array([1.0]))

    (lx, ly), (nx, ny) = extents, resolution
    xs = np.linspace(0.0, lx, nx + 1)
    ys = np.linspace(0.0, ly, ny + 1)
    X, Y = np.meshgrid(xs, ys, indexing="xy")
    nodes = np.stack([X.ravel(), Y.ravel()], axis=1)

    def nid(i, j):
        return j * (nx + 1) + i

    ii, jj = np.meshgrid(np.arange(nx), np.arange(ny), indexing="xy")
    ii, jj = ii.ravel(), jj.ravel()
    n00, n10 = nid(ii, jj), nid(ii + 1, jj)
    n01, n11 = nid(ii, jj + 1), nid(ii + 1, jj + 1)
    # quad q -> triangles 2q (lower) and 2q+1 (upper), split along n00-n11
    tris = np.empty((2 * nx * ny, 3), dtype=int)
    tris[0::2] = np.stack([n00, n10, n11], axis=1)
    tris[1::2] = np.stack([n00, n11, n01], axis=1)

    p0, p1, p2 = nodes[tris[:, 0]], nodes[tris[:, 1]], nodes[tris[:, 2]]
    det = ((p1[:, 0] - p0[:, 0]) * (p2[:, 1] - p0[:, 1])
           - (p2[:, 0] - p0[:, 0]) * (p1[:, 1] - p0[:, 1]))
    measures = 0.5 * np.abs(det)
    centers = (p0 + p1 + p2) / 3.0

    # P1 barycentric gradients
    dldx = np.stack([p1[:, 1] - p2[:, 1], p2[:, 1] - p0[:, 1],
                     p0[:, 1] - p1[:, 1]], axis=1) / det[:, None]
    dldy = np.stack([p2[:, 0] - p1[:, 0], p0[:, 0] - p2[:, 0],
                     p1[:, 0] - p0[:, 0]], axis=1) / det[:, None]
    n_elem = tris.shape[0]
    grad = np.zeros((n_elem, 3, 6))
    for k in range(3):
        grad[:, 0, 2 * k] = dldx[:, k]                  # eps_xx
        grad[:, 1, 2 * k] = 0.5 * dldy[:, k]            # eps_xy
        grad[:, 1, 2 * k + 1] = 0.5 * dldx[:, k]
        grad[:, 2, 2 * k + 1] = dldy[:, k]              # eps_yy
    boundary = ((np.isclose(nodes[:, 0], 0.0)) | (np.isclose(nodes[:, 0], lx))
                | (np.isclose(nodes[:, 1], 0.0))
                | (np.isclose(nodes[:, 1], ly)))
    return StructuredMesh(2, extents, resolution, nodes, tris, measures,
                          centers, boundary, grad, np.array([1.0, 2.0, 1.0]))


def refine(mesh):
    """Uniform refinement by factor 2 per axis."""
    return build_mesh(mesh.extents, mesh.shape * 2, mesh.dim)


def prolong_element_field(coarse, fine, values):
    """Carry a per-element field to the refined mesh (piecewise-constant)."""
    values = np.asarray(values)
    idx = coarse.locate_elements(fine.centers)
    return values[idx]


# -- windowed averaging ---------------------------------------------------

@dataclass
class Windows:
    size: int                  # element cells per axis per window
    shape: np.ndarray          # windows per axis
    elem_window: np.ndarray    # (n_elem,) window index per element
    measures: np.ndarray       # (n_windows,)
    centers: np.ndarray        # (n_windows, dim)

    @property
    def n_windows(self):
        return self.measures.shape[0]


def build_windows(mesh, window_size):
    """Partition the element cells into square windows of `window_size`
    cells per axis."""
    if window_size < 1:
        raise ConfigurationError("window size must be >= 1")
    if np.any(mesh.shape % window_size != 0):
        raise ConfigurationError(
            f"window size {window_size} does not divide element counts "
            f"{tuple(mesh.shape)}")
    wshape = mesh.shape // window_size
    h = mesh.extents / mesh.shape
    cell = (mesh.centers / h).astype(int)
    wcell = cell // window_size
    if mesh.dim == 1:
        widx = wcell[:, 0]
    else:
        widx = wcell[:, 1] * wshape[0] + wcell[:, 0]
    n_w = int(np.prod(wshape))
    measures = np.bincount(widx, weights=mesh.measures, minlength=n_w)
    centers = np.zeros((n_w, mesh.dim))
    for d in range(mesh.dim):
        centers[:, d] = np.bincount(
            widx, weights=mesh.measures * mesh.centers[:, d],
            minlength=n_w) / measures
    return Windows(window_size, wshape, widx, measures, centers)


def window_average(values, mesh, windows):
    """Measure-weighted window means of a per-element field.

    Preserves the global integral exactly:  sum_w |w| * mean_w = integral.
    """
    values = np.asarray(values, dtype=float)
    single = values.ndim == 1
    vals = values[:, None] if single else values
    out = np.empty((windows.n_windows, vals.shape[1]))
    for c in range(vals.shape[1]):
        out[:, c] = np.bincount(
            windows.elem_window, weights=mesh.measures * vals[:, c],
            minlength=windows.n_windows) / windows.measures
    return out[:, 0] if single else out


def window_expand(window_values, windows):
    """Map per-window values back onto elements."""
    return np.asarray(window_values)[windows.elem_window]


# -- smooth test bumps ----------------------------------------------------

@dataclass
class TestFunctionSet:
    """Radial mollifier bumps used by the refinement pairing diagnostic.

    Each bump vanishes (with all derivatives) outside its ball, so it is
    an admissible smooth test function as long as the ball stays inside
    the domain.
    """
    centers: np.ndarray        # (n_test, dim)
    radii: np.ndarray          # (n_test,)

    @property
    def n_test(self):
        return self.centers.shape[0]

    def values_at(self, points):
        """Bump values, shape (n_test, n_points)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        d2 = ((pts[None, :, :] - self.centers[:, None, :]) ** 2).sum(axis=2)
        s2 = d2 / self.radii[:, None] ** 2
        out = np.zeros_like(s2)
        inside = s2 < 1.0
        out[inside] = np.exp(1.0 - 1.0 / (1.0 - s2[inside]))
        return out

    def check_interior(self, mesh):
        """True when every bump support stays off the boundary."""
        lo = self.centers - self.radii[:, None]
        hi = self.centers + self.radii[:, None]
        return bool(np.all(lo > 0.0) and np.all(hi < mesh.extents[None, :]))


def default_test_functions(mesh, count=3):
    """A small spread of interior bumps scaled to the domain."""
    fractions = np.linspace(0.3, 0.7, count)
    centers = fractions[:, None] * mesh.extents[None, :]
    radii = np.full(count, 0.25 * mesh.extents.min())
    return TestFunctionSet(centers, radii)


# -- CSV dumps ------------------------------------------------------------

def dump_element_field(path, mesh, columns):
    """Write per-element fields as CSV.

    `columns` maps column name -> array of shape (n_elem,) or
    (n_elem, n_comp); packed matrices are emitted upper-triangle row-major
    as name_0, name_1, ...
    """
    header = ["elem_index", "x_center"]
    if mesh.dim == 2:
        header.append("y_center")
    flat = []
    for name, arr in columns.items():
        arr = np.asarray(arr)
        if arr.ndim == 1:
            header.append(name)
            flat.append(arr[:, None])
        else:
            header.extend(f"{name}_{k}" for k in range(arr.shape[1]))
            flat.append(arr)
    data = np.hstack(flat) if flat else np.empty((mesh.n_elem, 0))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for e in range(mesh.n_elem):
            row = [e] + [repr(float(v)) for v in mesh.centers[e]]
            row += [repr(float(v)) for v in data[e]]
            w.writerow(row)


def dump_node_field(path, mesh, columns):
    """Write per-node fields as CSV (same conventions as elements)."""
    header = ["node_index", "x"]
    if mesh.dim == 2:
        header.append("y")
    flat = []
    for name, arr in columns.items():
        arr = np.asarray(arr)
        if arr.ndim == 1:
            header.append(name)
            flat.append(arr[:, None])
        else:
            header.extend(f"{name}_{k}" for k in range(arr.shape[1]))
            flat.append(arr)
    data = np.hstack(flat) if flat else np.empty((mesh.n_nodes, 0))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for i in range(mesh.n_nodes):
            row = [i] + [repr(float(v)) for v in mesh.nodes[i]]
            row += [repr(float(v)) for v in data[i]]
            w.writerow(row)
