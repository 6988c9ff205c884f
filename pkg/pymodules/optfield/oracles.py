# Copyright (c) 2026-now The optfield developers.
#
# License: BSD 3-clause "new" or "revised" license (BSD-3-Clause).

"""Common Python resources for optfield: independent reference answers.

The functions of this module do not share any code path with the
estimators: Gaussian OT in closed form, 1D OT by quantile matching, convex
conjugates by exhaustive grid search, and optimal assignments by enumeration
of all permutations.

"""

import itertools
import logging
import warnings
import numpy as np
import scipy
from . import generic
from .distributions import Gaussian, Uniform
from .potentials import Quadratic

logger = logging.getLogger(__name__)

SPD_THRESHOLD = 1e-12
BISECTION_XTOL = 1e-12
GRID_CHUNK = 2**18
MAX_BRUTE_FORCE = 8


class GaussianOTSolution:
    """The optimal transport solution between two Gaussian distributions.

    Attributes
    ----------
    linear_map: numpy.ndarray
        The symmetric positive definite matrix A.
    shift: numpy.ndarray
        The vector b such that T(x) = b + A x.
    w2_squared: float
        The squared Wasserstein-2 distance.
    brenier: Quadratic
        The potential x'Ax/2 + b'x, whose gradient is T.

    """

    def __init__(self, linear_map, shift, w2_squared):
        self.linear_map = linear_map
        self.shift = shift
        self.w2_squared = float(w2_squared)
        self.brenier = Quadratic.from_matrix(linear_map, shift)

    def __repr__(self):
        return (
            f"GaussianOTSolution(A={self.linear_map.tolist()}, "
            f"b={self.shift.tolist()}, w2_squared={self.w2_squared})"
        )

    def transport(self, x):
        """Return T(x) = b + A x for given point(s)."""
        rows, single = generic.as_rows(x, self.shift.size)
        out = rows @ self.linear_map.T + self.shift
        return out[0] if single else out

    def to_dict(self):
        """Return the JSON-compatible version of the solution."""
        return dict(
            linear_map=self.linear_map.tolist(),
            shift=self.shift.tolist(),
            w2_squared=self.w2_squared,
        )


def _spd_roots(matrix):
    """Return the square root of an SPD matrix and its inverse."""
    eigvals, eigvecs = np.linalg.eigh(0.5 * (matrix + matrix.T))
    if eigvals[0] <= SPD_THRESHOLD:
        msg = f"Matrix is not positive definite (eigenvalue {eigvals[0]})."
        raise generic.SPDViolation(msg)
    root = (eigvecs * np.sqrt(eigvals)) @ eigvecs.T
    inv_root = (eigvecs / np.sqrt(eigvals)) @ eigvecs.T
    return root, inv_root


def bures_map(g0, g1):
    """Return the optimal transport solution between two Gaussians.

    Parameters
    ----------
    g0, g1: Gaussian
        The source and target distributions.

    Returns
    -------
    GaussianOTSolution
        A = S0^-1/2 (S0^1/2 S1 S0^1/2)^1/2 S0^-1/2, b = m1 - A m0, and
        W2^2 = ||m0-m1||^2 + tr(S0 + S1 - 2 (S0^1/2 S1 S0^1/2)^1/2).

    Raises
    ------
    SPDViolation
        If one of the matrices involved has an eigenvalue <= 1e-12.

    """
    if not isinstance(g0, Gaussian) or not isinstance(g1, Gaussian):
        raise TypeError("The Bures map is only defined between Gaussians.")
    if g0.dim != g1.dim:
        raise ValueError("The Gaussians have different dimensions.")
    cov0, cov1 = g0.covariance(), g1.covariance()
    root0, inv_root0 = _spd_roots(cov0)
    middle = _spd_roots(root0 @ cov1 @ root0)[0]
    linear_map = inv_root0 @ middle @ inv_root0
    linear_map = 0.5 * (linear_map + linear_map.T)
    shift = g1.mean() - linear_map @ g0.mean()
    w2_squared = np.sum((g0.mean() - g1.mean()) ** 2) + np.trace(
        cov0 + cov1 - 2 * middle
    )
    return GaussianOTSolution(linear_map, shift, max(w2_squared, 0.0))


def _cdf_1d(dist, x):
    if isinstance(dist, Gaussian):
        mean = dist.mean()[0]
        std = np.sqrt(dist.covariance()[0, 0])
        return 0.5 * scipy.special.erfc(-(x - mean) / (std * np.sqrt(2)))
    return (x - dist.lower[0]) / (dist.upper[0] - dist.lower[0])


def _support_1d(dist):
    if isinstance(dist, Gaussian):
        mean = dist.mean()[0]
        std = np.sqrt(dist.covariance()[0, 0])
        return mean - 40 * std, mean + 40 * std
    return dist.lower[0], dist.upper[0]


def _check_1d(dist, name):
    if not isinstance(dist, (Gaussian, Uniform)):
        msg = f"{name} must be a Gaussian or a Uniform distribution."
        raise TypeError(msg)
    if dist.dim != 1:
        msg = f"{name} must be one-dimensional (got dimension {dist.dim})."
        raise ValueError(msg)


def _quantile_map_scalar(d0, d1, x):
    if isinstance(d0, Uniform):
        lower, upper = d0.lower[0], d0.upper[0]
        if not lower <= x <= upper:
            warnings.warn(
                f"Input {x} outside of the support [{lower}, {upper}]; "
                "clamping it.",
                RuntimeWarning,
            )
            x = min(max(x, lower), upper)
    level = _cdf_1d(d0, x)
    lower, upper = _support_1d(d1)
    if level <= 0:
        return lower
    if level >= 1:
        return upper
    return scipy.optimize.bisect(
        lambda z: _cdf_1d(d1, z) - level, lower, upper, xtol=BISECTION_XTOL
    )


def quantile_map_1d(d0, d1, x):
    """Return the 1D optimal transport map F1^-1(F0(x)).

    Parameters
    ----------
    d0, d1: Gaussian | Uniform
        One-dimensional source and target distributions.
    x: float | array-like
        The point(s) to transport.

    Returns
    -------
    float | numpy.ndarray
        The transported point(s). The inverse CDF is computed by bisection
        to 1e-12.

    """
    _check_1d(d0, "d0")
    _check_1d(d1, "d1")
    if np.ndim(x) == 0:
        return float(_quantile_map_scalar(d0, d1, float(x)))
    x = np.asarray(x, dtype=float)
    out = [_quantile_map_scalar(d0, d1, float(xi)) for xi in x.ravel()]
    return np.array(out).reshape(x.shape)


class GridConjugate:
    """The result of a brute-force conjugate computation.

    Attributes
    ----------
    value: float
        The maximum of <y,z> - f(z) over the grid.
    argmax: numpy.ndarray
        The grid point where the maximum is reached.
    on_boundary: bool
        Whether the argmax lies on the boundary of the initial box (the true
        maximizer is then probably outside of the box).
    spacing: float
        The grid spacing of the finest level.

    """

    def __init__(self, value, argmax, on_boundary, spacing):
        self.value = float(value)
        self.argmax = argmax
        self.on_boundary = bool(on_boundary)
        self.spacing = float(spacing)

    def __repr__(self):
        return (
            f"GridConjugate(value={self.value}, argmax={self.argmax}, "
            f"on_boundary={self.on_boundary}, spacing={self.spacing})"
        )


def _grid_max(f, y, axes):
    """Return the maximum, its multi-index and the largest gradient norm."""
    shape = tuple(axis.size for axis in axes)
    total = int(np.prod(shape))
    best_value, best_index, slope = -np.inf, None, 0.0
    for start in range(0, total, GRID_CHUNK):
        flat = np.arange(start, min(start + GRID_CHUNK, total))
        index = np.unravel_index(flat, shape)
        points = np.column_stack([axis[i] for axis, i in zip(axes, index)])
        values = points @ y - f.eval(points)
        k = int(np.argmax(values))
        if values[k] > best_value:
            best_value = values[k]
            best_index = tuple(int(i[k]) for i in index)
        gradients = y - f.grad(points)
        slope = max(slope, float(np.linalg.norm(gradients, axis=1).max()))
    return best_value, best_index, slope


def grid_conjugate(f, y, box, points_per_dim, refinements=0):
    """Return the conjugate of f at y by exhaustive search over a grid.

    Parameters
    ----------
    f: ConvexPotential | TimeScaledPotential
        The function to transform (dimension 1 or 2).
    y: array-like
        The point where the conjugate is computed.
    box: array-like
        The (lower, upper) bounds of the search box, either one pair for all
        dimensions or one pair per dimension.
    points_per_dim: int
        The number of grid points along each dimension.
    refinements: int
        The number of zoom levels. Each level searches a full grid on a box
        centered on the previous argmax, with a radius large enough to
        contain the true maximizer given the strong convexity of f.

    Returns
    -------
    GridConjugate
        The maximum over the grid (a lower bound of the conjugate).

    """
    y = np.atleast_1d(np.asarray(y, dtype=float))
    dim = y.size
    if dim != f.dim:
        raise ValueError("The point and the function dimensions differ.")
    if dim > 2:
        msg = f"Grid search is limited to dimensions 1 and 2 (got {dim})."
        raise ValueError(msg)
    if int(points_per_dim) < 2:
        raise ValueError("The grid must have at least 2 points per dim.")
    points = int(points_per_dim)
    refinements = int(refinements)
    bounds = np.asarray(box, dtype=float).reshape(-1, 2)
    bounds = np.array(np.broadcast_to(bounds, (dim, 2)))
    if np.any(bounds[:, 0] >= bounds[:, 1]):
        raise ValueError("Box lower bounds must be below upper bounds.")
    initial = bounds.copy()
    mu = f.strong_convexity
    for level in range(refinements + 1):
        axes = [np.linspace(lo, hi, points) for lo, hi in bounds]
        value, index, slope = _grid_max(f, y, axes)
        argmax = np.array([axis[i] for axis, i in zip(axes, index)])
        spacing = float(np.max((bounds[:, 1] - bounds[:, 0]) / (points - 1)))
        if level == 0:
            on_boundary = any(i in (0, points - 1) for i in index)
        if level == refinements:
            break
        # The grid point nearest to the maximizer is within spacing*sqrt(D)/2
        radius = np.sqrt(slope * spacing * np.sqrt(dim) / mu) + spacing
        bounds[:, 0] = np.maximum(argmax - radius, initial[:, 0])
        bounds[:, 1] = np.minimum(argmax + radius, initial[:, 1])
        logger.debug("Grid level %d: radius %.3e", level + 1, radius)
    if on_boundary:
        warnings.warn(
            f"Grid argmax {argmax} lies on the boundary of the search box.",
            RuntimeWarning,
        )
    return GridConjugate(value, argmax, on_boundary, spacing)


def conjugate_box(f, y, margin=1.0):
    """Return a search box that contains the maximizer of <y,.> - f.

    For a mu-strongly convex f, strong monotonicity of the subdifferential
    gives ||z*|| <= ||y - g0||/mu, where g0 is a subgradient of f at 0.

    Returns
    -------
    numpy.ndarray
        The (D, 2) array of bounds.

    """
    y = np.atleast_1d(np.asarray(y, dtype=float))
    radius = np.linalg.norm(y - f.grad(np.zeros(f.dim))) / f.strong_convexity
    radius += margin
    return np.tile([-radius, radius], (f.dim, 1))


def brute_force_pairing(x0, x1):
    """Return the optimal pairing of two small point sets by enumeration.

    Parameters
    ----------
    x0, x1: array-like
        Two (b, D) arrays of points, with b <= 8.

    Returns
    -------
    numpy.ndarray, float
        The permutation sigma minimizing sum_i ||x0[i] - x1[sigma[i]]||^2,
        and the minimal cost.

    """
    x0 = np.atleast_2d(np.asarray(x0, dtype=float))
    x1 = np.atleast_2d(np.asarray(x1, dtype=float))
    size = x0.shape[0]
    if x1.shape != x0.shape:
        raise ValueError("Point sets must have the same shape.")
    if size > MAX_BRUTE_FORCE:
        msg = (
            f"Enumeration is limited to {MAX_BRUTE_FORCE} points (got {size})."
        )
        raise ValueError(msg)
    cost = np.sum((x0[:, None, :] - x1[None, :, :]) ** 2, axis=2)
    rows = np.arange(size)
    best, best_cost = None, np.inf
    for perm in itertools.permutations(range(size)):
        total = cost[rows, list(perm)].sum()
        if total < best_cost:
            best, best_cost = np.array(perm), total
    return best, float(best_cost)
