"""Fourier basis machinery and the ergodic coverage metric.

The basis is the separable half-range cosine family on the rectangle
[0, L1] x [0, L2]:

    f_k(x) = (1/h_k) * cos(k1*pi*x1/L1) * cos(k2*pi*x2/L2),

with 0 <= k1, k2 <= K and h_k chosen so each f_k has unit L2 norm over
the domain. A distribution's coefficients and a trajectory set's
time-average coefficients live in the same (K+1)^2-dimensional space;
the coverage metric is the weighted squared distance between them, with
Sobolev-type weights (1 + |k|^2)^(-3/2).

Coefficient vectors are plain float arrays ordered like
``BasisSpec.indices``.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, PreconditionError
from .maps import GridMap, make_grid_map


@dataclass(frozen=True)
class BasisSpec:
    """Index set, normalizations and metric weights for one domain.

    Build with :func:`make_basis`. ``indices`` has shape (m, 2) with
    m = (max_index + 1)^2, ordered row-major in (k1, k2).
    """

    domain_lengths: np.ndarray
    max_index: int
    indices: np.ndarray
    normalizations: np.ndarray
    weights: np.ndarray

    @property
    def size(self) -> int:
        return self.indices.shape[0]


def make_basis(domain_lengths, max_index: int) -> BasisSpec:
    dl = np.asarray(domain_lengths, dtype=float)
    if dl.shape != (2,) or not np.all(dl > 0):
        raise PreconditionError("domain_lengths must be two positive reals")
    if max_index < 0:
        raise PreconditionError("max_index must be nonnegative")
    k = np.arange(max_index + 1)
    k1, k2 = np.meshgrid(k, k, indexing="ij")
    indices = np.column_stack([k1.ravel(), k2.ravel()])
    # closed form: integral of cos^2(k*pi*x/L) over [0, L] is L (k=0) or L/2
    per_axis = np.where(indices > 0, dl / 2.0, dl)
    normalizations = np.sqrt(per_axis[:, 0] * per_axis[:, 1])
    sq_norm = (indices**2).sum(axis=1)
    weights = (1.0 + sq_norm) ** -1.5
    return BasisSpec(
        domain_lengths=dl,
        max_index=int(max_index),
        indices=indices,
        normalizations=normalizations,
        weights=weights,
    )


def _check_in_domain(basis: BasisSpec, points: np.ndarray) -> None:
    dl = basis.domain_lengths
    if np.any(points < 0.0) or np.any(points > dl):
        bad = points[
            np.any((points < 0.0) | (points > dl), axis=-1)
        ]
        raise DomainError(f"point {np.atleast_2d(bad)[0]} outside domain {dl}")


def basis_eval(basis: BasisSpec, k, x) -> float:
    """f_k at a single in-domain point."""
    x = np.asarray(x, dtype=float)
    _check_in_domain(basis, x)
    k = np.asarray(k)
    h = np.sqrt(
        np.prod(np.where(k > 0, basis.domain_lengths / 2.0, basis.domain_lengths))
    )
    return float(np.prod(np.cos(k * np.pi * x / basis.domain_lengths)) / h)


def basis_grad(basis: BasisSpec, k, x) -> np.ndarray:
    """Gradient of f_k at a single in-domain point."""
    x = np.asarray(x, dtype=float)
    _check_in_domain(basis, x)
    k = np.asarray(k, dtype=float)
    dl = basis.domain_lengths
    h = np.sqrt(np.prod(np.where(k > 0, dl / 2.0, dl)))
    arg = k * np.pi * x / dl
    c = np.cos(arg)
    s = np.sin(arg)
    return np.array(
        [
            -(k[0] * np.pi / dl[0]) * s[0] * c[1] / h,
            -(k[1] * np.pi / dl[1]) * c[0] * s[1] / h,
        ]
    )


def _axis_tables(basis: BasisSpec, points: np.ndarray):
    """cos/sin of k*pi*x/L per axis, shape (P, K+1) each."""
    dl = basis.domain_lengths
    k = np.arange(basis.max_index + 1)
    ax = points[:, 0, None] * (np.pi / dl[0]) * k
    ay = points[:, 1, None] * (np.pi / dl[1]) * k
    return np.cos(ax), np.sin(ax), np.cos(ay), np.sin(ay)


def basis_matrix(basis: BasisSpec, points) -> np.ndarray:
    """All basis functions at all points: shape (P, m)."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    _check_in_domain(basis, points)
    cx, _, cy, _ = _axis_tables(basis, points)
    k1 = basis.indices[:, 0]
    k2 = basis.indices[:, 1]
    return cx[:, k1] * cy[:, k2] / basis.normalizations


def basis_gradient_matrices(basis: BasisSpec, points):
    """d f_k / dx and d f_k / dy at all points: two (P, m) arrays."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    _check_in_domain(basis, points)
    cx, sx, cy, sy = _axis_tables(basis, points)
    dl = basis.domain_lengths
    k1 = basis.indices[:, 0]
    k2 = basis.indices[:, 1]
    h = basis.normalizations
    gx = sx[:, k1] * cy[:, k2] * (-(np.pi / dl[0]) * k1 / h)
    gy = cx[:, k1] * sy[:, k2] * (-(np.pi / dl[1]) * k2 / h)
    return gx, gy


def map_coefficients(grid_map: GridMap, basis: BasisSpec) -> np.ndarray:
    """Coefficients of a normalized map by midpoint quadrature on its grid."""
    if not np.allclose(grid_map.domain_lengths, basis.domain_lengths):
        raise PreconditionError("map and basis domains differ")
    if not grid_map.is_normalized():
        raise PreconditionError(
            f"map integral is {grid_map.integral():.6g}, expected 1"
        )
    points = grid_map.cell_points()
    values = grid_map.cells.ravel()
    # chunked so high-resolution oracles do not allocate (P, m) at once
    out = np.zeros(basis.size)
    chunk = max(1, 2**22 // basis.size)
    for start in range(0, points.shape[0], chunk):
        sl = slice(start, start + chunk)
        out += values[sl] @ basis_matrix(basis, points[sl])
    return out * grid_map.cell_area


def _positions_of(trajectory) -> np.ndarray:
    pos = getattr(trajectory, "positions", trajectory)
    pos = np.asarray(pos, dtype=float)
    if pos.ndim != 2 or pos.shape[1] != 2:
        raise PreconditionError("trajectory positions must have shape (S, 2)")
    return pos


def _stacked_positions(trajectories) -> np.ndarray:
    if not trajectories:
        raise PreconditionError("need at least one trajectory")
    arrays = [_positions_of(t) for t in trajectories]
    steps = {a.shape[0] for a in arrays}
    if len(steps) != 1:
        raise PreconditionError(f"trajectories have mismatched lengths {steps}")
    if 0 in steps:
        raise PreconditionError("trajectories must have at least one state")
    return np.vstack(arrays)


def trajectory_coefficients(trajectories, basis: BasisSpec) -> np.ndarray:
    """Time-average coefficients of a trajectory set.

    c_k is the plain average of f_k over every state of every agent (the
    discrete form of the joint time-average statistics); c_0 is always
    1/h_0.
    """
    pts = _stacked_positions(trajectories)
    return basis_matrix(basis, pts).mean(axis=0)


def ergodic_metric(c, xi, basis: BasisSpec) -> float:
    """Weighted squared coefficient distance; 0 iff the spectra match."""
    c = np.asarray(c, dtype=float)
    xi = np.asarray(xi, dtype=float)
    if c.shape != (basis.size,) or xi.shape != (basis.size,):
        raise PreconditionError("coefficient length does not match basis")
    d = c - xi
    return float(basis.weights @ (d * d))


def ergodic_gradient_points(trajectories, xi, basis: BasisSpec):
    """Gradient of the metric with respect to every trajectory point.

    Returns one (S, 2) array per agent:
    dPhi/dp = (2 / (N*S)) * sum_k alpha_k (c_k - xi_k) grad f_k(p).
    """
    xi = np.asarray(xi, dtype=float)
    if xi.shape != (basis.size,):
        raise PreconditionError("coefficient length does not match basis")
    pts = _stacked_positions(trajectories)
    total = pts.shape[0]
    n_agents = len(trajectories)
    steps = total // n_agents

    fmat = basis_matrix(basis, pts)
    c = fmat.mean(axis=0)
    w = (2.0 / total) * basis.weights * (c - xi)
    gx, gy = basis_gradient_matrices(basis, pts)
    grad = np.column_stack([gx @ w, gy @ w])
    return [grad[i * steps : (i + 1) * steps] for i in range(n_agents)]


def reconstruct_map(coeffs, basis: BasisSpec, resolution) -> GridMap:
    """Inverse transform onto a grid (cells may go negative)."""
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape != (basis.size,):
        raise PreconditionError("coefficient length does not match basis")
    if np.isscalar(resolution):
        nx = ny = int(resolution)
    else:
        nx, ny = (int(r) for r in resolution)
    if nx < 2 or ny < 2:
        raise PreconditionError("resolution must be at least 2 per axis")
    shell = make_grid_map(np.zeros((ny, nx)), basis.domain_lengths)
    values = basis_matrix(basis, shell.cell_points()) @ coeffs
    return make_grid_map(values.reshape(ny, nx), basis.domain_lengths)
