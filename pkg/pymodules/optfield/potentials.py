# Copyright (c) 2026-now The optfield developers.
#
# License: BSD 3-clause "new" or "revised" license (BSD-3-Clause).

"""Common Python resources for optfield: parametrized convex potentials.

Two families of strictly convex potentials Psi: R^D -> R are provided:

 - Quadratic: Psi(x) = x'Ax/2 + b'x + c, with A = LL' + eps*I.

 - RegularizedMaxAffine: Psi(x) = alpha*||x||^2/2 + max_k(a_k'x + b_k).

Both expose their flat parameter vector (theta) and the derivatives of Psi
and of grad(Psi) with respect to theta. Every method accepts either a single
point (shape (D,)) or a batch of points (shape (N, D)).

"""

from abc import ABC, abstractmethod
import json
import numpy as np
import scipy
from . import generic

DEFAULT_RIDGE = 1e-6
DEFAULT_STRENGTH = 0.1


class ConvexPotential(ABC):
    """Template for parametrized convex potentials."""

    @property
    @abstractmethod
    def dim(self):
        """The dimension D of the input space."""
        pass

    @property
    @abstractmethod
    def params(self):
        """The flat parameter vector theta."""
        pass

    @property
    @abstractmethod
    def strong_convexity(self):
        """A lower bound of the strong-convexity modulus (positive)."""
        pass

    @abstractmethod
    def with_params(self, params):
        """Return a copy of the potential with parameters theta replaced."""
        pass

    @abstractmethod
    def _eval(self, x):
        pass

    @abstractmethod
    def _grad(self, x, weights=None):
        pass

    @abstractmethod
    def _hessian(self, x):
        pass

    @abstractmethod
    def _param_grad(self, x, weights=None):
        pass

    @abstractmethod
    def _grad_param_jacobian(self, x, weights=None):
        pass

    @abstractmethod
    def _piece(self, x):
        pass

    @abstractmethod
    def to_dict(self):
        """Return the JSON-compatible description of the potential."""
        pass

    def __call__(self, x):
        return self.eval(x)

    @property
    def n_params(self):
        """The size of the parameter vector."""
        return self.params.size

    def eval(self, x):
        """Evaluate the potential.

        Parameters
        ----------
        x: array-like
            A point (D,) or a batch of points (N, D).

        Returns
        -------
        float | numpy.ndarray
            Psi(x), a scalar or a (N,) array.

        """
        rows, single = generic.as_rows(x, self.dim)
        out = self._eval(rows)
        return float(out[0]) if single else out

    def _weight_rows(self, weights, n):
        if weights is None:
            return None
        return np.asarray(weights, dtype=float).reshape(n, -1)

    def grad(self, x, weights=None):
        """Return the gradient of the potential with respect to x.

        Parameters
        ----------
        x: array-like
            A point (D,) or a batch of points (N, D).
        weights: array-like | None
            For max-affine potentials, convex weights of the affine pieces
            (shape (K,) or (N, K)) selecting an element of the
            subdifferential. By default, the active piece with the lowest
            index is selected. Ignored by smooth potentials.

        """
        rows, single = generic.as_rows(x, self.dim)
        out = self._grad(rows, self._weight_rows(weights, rows.shape[0]))
        return out[0] if single else out

    def hessian(self, x):
        """Return the Hessian of the potential with respect to x.

        The Hessian is defined almost everywhere for max-affine potentials.

        """
        rows, single = generic.as_rows(x, self.dim)
        out = self._hessian(rows)
        return out[0] if single else out

    def param_grad(self, x, weights=None):
        """Return the derivative of Psi(x) with respect to theta.

        The optional weights play the same role as in grad.

        Returns
        -------
        numpy.ndarray
            A (P,) array for a single point, (N, P) for a batch.

        """
        rows, single = generic.as_rows(x, self.dim)
        weights = self._weight_rows(weights, rows.shape[0])
        out = self._param_grad(rows, weights)
        return out[0] if single else out

    def grad_param_jacobian(self, x, weights=None):
        """Return the Jacobian of grad(Psi)(x) with respect to theta.

        Returns
        -------
        numpy.ndarray
            A (D, P) array for a single point, (N, D, P) for a batch.

        """
        rows, single = generic.as_rows(x, self.dim)
        weights = self._weight_rows(weights, rows.shape[0])
        out = self._grad_param_jacobian(rows, weights)
        return out[0] if single else out

    def piece(self, x):
        """Return the index of the active affine piece (0 if smooth)."""
        rows, single = generic.as_rows(x, self.dim)
        out = self._piece(rows)
        return int(out[0]) if single else out


class Quadratic(ConvexPotential):
    """Quadratic potential Psi(x) = x'Ax/2 + b'x + c, with A = LL' + eps*I.

    Parameters
    ----------
    factor: array-like
        The lower-triangular (D, D) matrix L.
    shift: array-like | None
        The vector b (zero if None).
    offset: float
        The constant c.
    ridge: float
        The constant eps > 0 that makes A positive definite.

    Notes
    -----
    Layout of theta: the lower triangle of L (row-major), then b, then c.

    """

    def __init__(self, factor, shift=None, offset=0.0, ridge=DEFAULT_RIDGE):
        factor = np.atleast_2d(np.asarray(factor, dtype=float))
        d = factor.shape[0]
        if factor.shape != (d, d):
            raise ValueError("The factor L must be a square matrix.")
        if np.any(np.triu(factor, k=1) != 0):
            raise ValueError("The factor L must be lower triangular.")
        if not ridge > 0:
            msg = f"The ridge must be positive (got {ridge})."
            raise ValueError(msg)
        shift = np.zeros(d) if shift is None else shift
        self._factor = factor
        self._shift = np.atleast_1d(np.asarray(shift, dtype=float))
        if self._shift.shape != (d,):
            msg = f"The shift must have shape ({d},)."
            raise ValueError(msg)
        self._offset = float(offset)
        self._ridge = float(ridge)
        self._matrix = factor @ factor.T + self._ridge * np.eye(d)
        self._tril = np.tril_indices(d)

    def __repr__(self):
        return (
            f"Quadratic(A={self._matrix.tolist()}, b={self._shift.tolist()}, "
            f"c={self._offset})"
        )

    @classmethod
    def from_matrix(cls, matrix, shift=None, offset=0.0, ridge=None):
        """Create a quadratic potential from its matrix A.

        Parameters
        ----------
        matrix: array-like
            The symmetric positive definite matrix A.
        shift: array-like | None
            The vector b.
        offset: float
            The constant c.
        ridge: float | None
            The ridge eps. If None, use the default ridge, or half the
            smallest eigenvalue of A if that is smaller.

        """
        matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
        matrix = 0.5 * (matrix + matrix.T)
        smallest = np.linalg.eigvalsh(matrix)[0]
        if smallest <= 0:
            msg = f"Matrix is not positive definite (eigenvalue {smallest})."
            raise generic.SPDViolation(msg)
        if ridge is None:
            ridge = min(DEFAULT_RIDGE, 0.5 * smallest)
        if ridge >= smallest:
            msg = "The ridge must be smaller than the eigenvalues of A."
            raise ValueError(msg)
        d = matrix.shape[0]
        factor = scipy.linalg.cholesky(matrix - ridge * np.eye(d), lower=True)
        return cls(factor, shift, offset, ridge)

    @property
    def dim(self):
        return self._factor.shape[0]

    @property
    def factor(self):
        """The lower-triangular factor L."""
        return self._factor.copy()

    @property
    def matrix(self):
        """The matrix A = LL' + eps*I."""
        return self._matrix.copy()

    @property
    def shift(self):
        """The vector b."""
        return self._shift.copy()

    @property
    def offset(self):
        """The constant c."""
        return self._offset

    @property
    def ridge(self):
        """The constant eps."""
        return self._ridge

    @property
    def params(self):
        return np.concatenate(
            [self._factor[self._tril], self._shift, [self._offset]]
        )

    @property
    def strong_convexity(self):
        return float(np.linalg.eigvalsh(self._matrix)[0])

    def with_params(self, params):
        params = np.asarray(params, dtype=float)
        if params.shape != (self.n_params,):
            msg = f"Expected {self.n_params} parameters, got {params.shape}."
            raise ValueError(msg)
        d = self.dim
        n_tril = d * (d + 1) // 2
        factor = np.zeros((d, d))
        factor[self._tril] = params[:n_tril]
        shift = params[n_tril : n_tril + d]
        return Quadratic(factor, shift, params[-1], self._ridge)

    def _eval(self, x):
        quad = 0.5 * np.sum((x @ self._matrix) * x, axis=1)
        return quad + x @ self._shift + self._offset

    def _grad(self, x, weights=None):
        return x @ self._matrix + self._shift

    def _hessian(self, x):
        shape = (x.shape[0],) + self._matrix.shape
        return np.broadcast_to(self._matrix, shape)

    def _param_grad(self, x, weights=None):
        grad_factor = np.einsum("ni,nj,jk->nik", x, x, self._factor)
        ones = np.ones((x.shape[0], 1))
        grad_factor = grad_factor[:, self._tril[0], self._tril[1]]
        return np.hstack([grad_factor, x, ones])

    def _grad_param_jacobian(self, x, weights=None):
        n, d = x.shape
        out = np.zeros((n, d, self.n_params))
        lx = x @ self._factor
        for p, (i, j) in enumerate(zip(*self._tril)):
            # d(LL'x)/dL_ij = e_i (L'x)_j + L[:, j] x_i
            out[:, :, p] = np.outer(x[:, i], self._factor[:, j])
            out[:, i, p] += lx[:, j]
        n_tril = d * (d + 1) // 2
        out[:, :, n_tril : n_tril + d] = np.eye(d)
        return out

    def _piece(self, x):
        return np.zeros(x.shape[0], dtype=int)

    def to_dict(self):
        return dict(
            variant="quadratic",
            dims=self.dim,
            factor=self._factor.tolist(),
            shift=self._shift.tolist(),
            offset=self._offset,
            ridge=self._ridge,
        )


class RegularizedMaxAffine(ConvexPotential):
    """Potential Psi(x) = alpha*||x||^2/2 + max_k(a_k'x + b_k).

    Parameters
    ----------
    slopes: array-like
        The (K, D) matrix whose rows are the slopes a_k.
    intercepts: array-like
        The (K,) vector of intercepts b_k.
    strength: float
        The regularization strength alpha > 0 (fixed, not a parameter).

    Notes
    -----
    Layout of theta: the slopes (row-major), then the intercepts. Ties in the
    max are broken in favour of the lowest index.

    """

    def __init__(self, slopes, intercepts, strength=DEFAULT_STRENGTH):
        slopes = np.atleast_2d(np.asarray(slopes, dtype=float))
        intercepts = np.atleast_1d(np.asarray(intercepts, dtype=float))
        if intercepts.shape != (slopes.shape[0],):
            raise ValueError("Expected one intercept per slope.")
        if not strength > 0:
            msg = f"The strength must be positive (got {strength})."
            raise ValueError(msg)
        self._slopes = slopes
        self._intercepts = intercepts
        self._strength = float(strength)

    def __repr__(self):
        return (
            f"RegularizedMaxAffine(alpha={self._strength}, "
            f"slopes={self._slopes.tolist()}, "
            f"intercepts={self._intercepts.tolist()})"
        )

    @property
    def dim(self):
        return self._slopes.shape[1]

    @property
    def n_pieces(self):
        """The number K of affine pieces."""
        return self._slopes.shape[0]

    @property
    def slopes(self):
        """The (K, D) matrix of slopes."""
        return self._slopes.copy()

    @property
    def intercepts(self):
        """The (K,) vector of intercepts."""
        return self._intercepts.copy()

    @property
    def strength(self):
        """The regularization strength alpha."""
        return self._strength

    @property
    def params(self):
        return np.concatenate([self._slopes.ravel(), self._intercepts])

    @property
    def strong_convexity(self):
        return self._strength

    def with_params(self, params):
        params = np.asarray(params, dtype=float)
        if params.shape != (self.n_params,):
            msg = f"Expected {self.n_params} parameters, got {params.shape}."
            raise ValueError(msg)
        n_slopes = self._slopes.size
        slopes = params[:n_slopes].reshape(self._slopes.shape)
        return RegularizedMaxAffine(
            slopes, params[n_slopes:], self._strength
        )

    def _affine(self, x):
        return x @ self._slopes.T + self._intercepts

    def _eval(self, x):
        reg = 0.5 * self._strength * np.sum(x**2, axis=1)
        return reg + np.max(self._affine(x), axis=1)

    def _piece_weights(self, x, weights):
        if weights is not None:
            if weights.shape[1] != self.n_pieces:
                msg = f"Expected {self.n_pieces} weights per point."
                raise ValueError(msg)
            return weights
        out = np.zeros((x.shape[0], self.n_pieces))
        out[np.arange(x.shape[0]), self._piece(x)] = 1.0
        return out

    def _grad(self, x, weights=None):
        weights = self._piece_weights(x, weights)
        return self._strength * x + weights @ self._slopes

    def _hessian(self, x):
        hess = self._strength * np.eye(self.dim)
        return np.broadcast_to(hess, (x.shape[0], self.dim, self.dim))

    def _param_grad(self, x, weights=None):
        n = x.shape[0]
        weights = self._piece_weights(x, weights)
        grad_slopes = weights[:, :, None] * x[:, None, :]
        return np.hstack([grad_slopes.reshape(n, -1), weights])

    def _grad_param_jacobian(self, x, weights=None):
        n, d = x.shape
        weights = self._piece_weights(x, weights)
        out = np.zeros((n, d, self.n_params))
        for m in range(d):
            out[:, m, m : self._slopes.size : d] = weights
        return out

    def _piece(self, x):
        return np.argmax(self._affine(x), axis=1)

    def to_dict(self):
        return dict(
            variant="max_affine",
            dims=self.dim,
            strength=self._strength,
            slopes=self._slopes.tolist(),
            intercepts=self._intercepts.tolist(),
        )


def identity_potential(dim, ridge=DEFAULT_RIDGE):
    """Return the potential ||x||^2/2, whose gradient is the identity."""
    factor = np.sqrt(1 - ridge) * np.eye(dim)
    return Quadratic(factor, np.zeros(dim), 0.0, ridge)


def random_quadratic(dim, gen, scale=0.5, ridge=DEFAULT_RIDGE):
    """Return a random quadratic potential.

    Parameters
    ----------
    dim: int
        The dimension.
    gen: numpy.random.Generator
        The random generator.
    scale: float
        The scale of the off-diagonal factor entries and of the shift.
    ridge: float
        The ridge eps.

    """
    factor = np.tril(gen.normal(scale=0.5 * scale, size=(dim, dim)), k=-1)
    factor += np.diag(0.6 + 0.8 * gen.random(dim))
    shift = gen.normal(scale=scale, size=dim)
    return Quadratic(factor, shift, gen.normal(), ridge)


def random_max_affine(dim, gen, pieces=5, strength=DEFAULT_STRENGTH):
    """Return a random regularized max-affine potential.

    Parameters
    ----------
    dim: int
        The dimension.
    gen: numpy.random.Generator
        The random generator.
    pieces: int
        The number K of affine pieces.
    strength: float
        The regularization strength alpha.

    """
    slopes = gen.normal(size=(pieces, dim))
    intercepts = gen.normal(scale=0.5, size=pieces)
    return RegularizedMaxAffine(slopes, intercepts, strength)


def from_dict(description):
    """Create a potential from its JSON-compatible description.

    Parameters
    ----------
    description: dict
        The description (cf. ConvexPotential.to_dict).

    Returns
    -------
    ConvexPotential
        The corresponding potential.

    """
    description = dict(description)
    variant = description.pop("variant", None)
    dims = description.pop("dims", None)
    if variant == "quadratic":
        allowed = {"factor", "shift", "offset", "ridge", "matrix"}
    elif variant == "max_affine":
        allowed = {"slopes", "intercepts", "strength"}
    else:
        msg = f"Unknown potential variant: {variant}."
        raise ValueError(msg)
    unknown = set(description) - allowed
    if unknown:
        msg = f"Unknown key(s) for {variant} potential: {sorted(unknown)}."
        raise ValueError(msg)
    if variant == "quadratic":
        shift = description.get("shift")
        offset = description.get("offset", 0.0)
        if "matrix" in description:
            potential = Quadratic.from_matrix(
                description["matrix"], shift, offset, description.get("ridge")
            )
        else:
            potential = Quadratic(
                description["factor"],
                shift,
                offset,
                description.get("ridge", DEFAULT_RIDGE),
            )
    else:
        potential = RegularizedMaxAffine(
            description["slopes"],
            description["intercepts"],
            description.get("strength", DEFAULT_STRENGTH),
        )
    if dims is not None and dims != potential.dim:
        msg = f"Inconsistent dimension: {dims} vs. {potential.dim}."
        raise ValueError(msg)
    return potential


def save_potential(potential, filepath):
    """Write given potential into a JSON file."""
    with open(filepath, mode="w") as f:
        json.dump(potential.to_dict(), f, sort_keys=True, indent=4)
        f.write("\n")


def load_potential(filepath):
    """Read a potential from a JSON file."""
    with open(filepath) as f:
        return from_dict(json.load(f))
