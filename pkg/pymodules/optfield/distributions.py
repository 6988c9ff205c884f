# Copyright (c) 2026-now The optfield developers.
#
# License: BSD 3-clause "new" or "revised" license (BSD-3-Clause).

"""Common Python resources for optfield: sampleable distributions.

The distributions defined here serve as the endpoints p0 and p1 of transport
problems. They can be sampled reproducibly and have analytic first and second
moments. Densities are never needed and are not provided.

"""

from abc import ABC, abstractmethod
import numpy as np
import pandas as pd
import scipy
from . import generic


class Distribution(ABC):
    """Template for probability distributions on R^D."""

    @property
    @abstractmethod
    def dim(self):
        """The dimension D of the underlying space."""
        pass

    @abstractmethod
    def _draw(self, n, gen):
        """Return n draws from the distribution, using given generator."""
        pass

    @abstractmethod
    def mean(self):
        """Return the mean vector of the distribution."""
        pass

    @abstractmethod
    def covariance(self):
        """Return the covariance matrix of the distribution."""
        pass

    @abstractmethod
    def to_dict(self):
        """Return a JSON-compatible description of the distribution."""
        pass

    def sample(self, n, seed):
        """Return n independent draws from the distribution.

        Parameters
        ----------
        n: int
            The number of draws (n >= 1).
        seed: int
            The seed. Identical (distribution, n, seed) give bit-identical
            draws.

        Returns
        -------
        numpy.ndarray
            The (n, D) array of draws.

        """
        if int(n) < 1:
            msg = f"The number of draws must be positive (got {n})."
            raise ValueError(msg)
        return self._draw(int(n), generic.rng(seed, "sample"))

    def second_moment(self):
        """Return E||x||^2."""
        m = self.mean()
        return float(m @ m + np.trace(self.covariance()))


class Gaussian(Distribution):
    """A Gaussian distribution.

    Parameters
    ----------
    mean: array-like
        The mean vector (shape (D,)).
    covariance: array-like | None
        The covariance matrix (shape (D, D)), symmetric positive definite.
        Defaults to the identity.

    """

    def __init__(self, mean, covariance=None):
        self._mean = np.atleast_1d(np.asarray(mean, dtype=float))
        if self._mean.ndim != 1:
            raise ValueError("The mean must be a vector.")
        d = self._mean.size
        if covariance is None:
            covariance = np.eye(d)
        cov = np.atleast_2d(np.asarray(covariance, dtype=float))
        if cov.shape != (d, d):
            msg = f"Covariance must have shape ({d}, {d}), got {cov.shape}."
            raise ValueError(msg)
        if not np.allclose(cov, cov.T, rtol=0, atol=1e-12):
            raise generic.SPDViolation("Covariance matrix is not symmetric.")
        smallest = np.linalg.eigvalsh(cov)[0]
        if smallest <= 0:
            msg = (
                "Covariance matrix is not positive definite (smallest "
                f"eigenvalue: {smallest})."
            )
            raise generic.SPDViolation(msg)
        self._cov = 0.5 * (cov + cov.T)
        self._chol = scipy.linalg.cholesky(self._cov, lower=True)

    def __repr__(self):
        return (
            f"Gaussian(mean={self._mean.tolist()}, "
            f"cov={self._cov.tolist()})"
        )

    @property
    def dim(self):
        return self._mean.size

    @property
    def cholesky(self):
        """The lower Cholesky factor of the covariance matrix."""
        return self._chol

    def _draw(self, n, gen):
        z = gen.standard_normal((n, self.dim))
        return self._mean + z @ self._chol.T

    def mean(self):
        return self._mean.copy()

    def covariance(self):
        return self._cov.copy()

    def to_dict(self):
        return dict(
            kind="gaussian", mean=self._mean.tolist(), cov=self._cov.tolist()
        )


class GaussianMixture(Distribution):
    """A finite mixture of Gaussian distributions.

    Parameters
    ----------
    weights: array-like
        The mixture weights (non-negative, summing to 1).
    components: [Gaussian]
        The components, all of the same dimension.

    """

    def __init__(self, weights, components):
        weights = np.asarray(weights, dtype=float)
        components = list(components)
        if weights.ndim != 1 or weights.size != len(components):
            raise ValueError("Expected one weight per mixture component.")
        if len(components) == 0:
            raise ValueError("A mixture needs at least one component.")
        if np.any(weights < 0) or abs(weights.sum() - 1) > 1e-12:
            msg = "Mixture weights must be non-negative and sum to 1."
            raise ValueError(msg)
        if not all(isinstance(comp, Gaussian) for comp in components):
            raise TypeError("Mixture components must be Gaussian.")
        if len(set(comp.dim for comp in components)) != 1:
            raise ValueError("Mixture components must share their dimension.")
        self._weights = weights
        self._components = components
        self._means = np.stack([comp.mean() for comp in components])
        self._chols = np.stack([comp.cholesky for comp in components])

    @property
    def dim(self):
        return self._components[0].dim

    @property
    def weights(self):
        """The mixture weights."""
        return self._weights.copy()

    @property
    def components(self):
        """The mixture components."""
        return list(self._components)

    def _draw(self, n, gen):
        labels = gen.choice(len(self._components), size=n, p=self._weights)
        z = gen.standard_normal((n, self.dim))
        return self._means[labels] + np.einsum(
            "nij,nj->ni", self._chols[labels], z
        )

    def mean(self):
        return self._weights @ self._means

    def covariance(self):
        m = self.mean()
        second = sum(
            w * (comp.covariance() + np.outer(comp.mean(), comp.mean()))
            for w, comp in zip(self._weights, self._components)
        )
        return second - np.outer(m, m)

    def second_moment(self):
        return float(
            sum(
                w * comp.second_moment()
                for w, comp in zip(self._weights, self._components)
            )
        )

    def to_dict(self):
        return dict(
            kind="mixture",
            weights=self._weights.tolist(),
            components=[comp.to_dict() for comp in self._components],
        )


class Uniform(Distribution):
    """The uniform distribution on a box.

    Parameters
    ----------
    lower: array-like
        The lower corner of the box.
    upper: array-like
        The upper corner of the box (upper > lower componentwise).

    """

    def __init__(self, lower, upper):
        self._lower = np.atleast_1d(np.asarray(lower, dtype=float))
        self._upper = np.atleast_1d(np.asarray(upper, dtype=float))
        if self._lower.ndim != 1 or self._lower.shape != self._upper.shape:
            raise ValueError("Box corners must be vectors of the same size.")
        if not np.all(self._lower < self._upper):
            msg = "Box corners must satisfy lower < upper componentwise."
            raise ValueError(msg)

    @property
    def dim(self):
        return self._lower.size

    @property
    def lower(self):
        """The lower corner of the box."""
        return self._lower.copy()

    @property
    def upper(self):
        """The upper corner of the box."""
        return self._upper.copy()

    def _draw(self, n, gen):
        width = self._upper - self._lower
        return self._lower + width * gen.random((n, self.dim))

    def mean(self):
        return 0.5 * (self._lower + self._upper)

    def covariance(self):
        return np.diag((self._upper - self._lower) ** 2 / 12)

    def second_moment(self):
        lo, up = self._lower, self._upper
        return float(np.sum((lo**2 + lo * up + up**2) / 3))

    def to_dict(self):
        return dict(
            kind="uniform",
            lower=self._lower.tolist(),
            upper=self._upper.tolist(),
        )


class Empirical(Distribution):
    """The empirical distribution of a finite set of points.

    Parameters
    ----------
    points: array-like
        The (N, D) array of points (N >= 1, all finite).

    Notes
    -----
    Empirical distributions are not absolutely continuous, so transport
    results that assume densities only hold approximately for them.

    """

    def __init__(self, points):
        points = np.asarray(points, dtype=float)
        if points.ndim == 1:
            points = points.reshape(-1, 1)
        if points.ndim != 2 or points.shape[0] < 1:
            raise ValueError("Expected a non-empty (N, D) array of points.")
        if not np.all(np.isfinite(points)):
            raise ValueError("Empirical points must all be finite.")
        self._points = points

    @classmethod
    def from_csv(cls, filepath):
        """Read points from a CSV file (one point per row, no header).

        Parameters
        ----------
        filepath: str
            Path to the CSV file.

        Returns
        -------
        Empirical
            The empirical distribution of the points in the file.

        """
        frame = pd.read_csv(
            filepath, header=None, encoding="utf-8", dtype=float
        )
        return cls(frame.to_numpy())

    @property
    def dim(self):
        return self._points.shape[1]

    @property
    def points(self):
        """The (N, D) array of points."""
        return self._points.copy()

    def _draw(self, n, gen):
        return self._points[gen.integers(0, self._points.shape[0], size=n)]

    def mean(self):
        return self._points.mean(axis=0)

    def covariance(self):
        centered = self._points - self.mean()
        return centered.T @ centered / self._points.shape[0]

    def second_moment(self):
        return float(np.mean(np.sum(self._points**2, axis=1)))

    def to_dict(self):
        return dict(kind="empirical", points=self._points.tolist())


def sample(dist, n, seed):
    """Return n independent draws from given distribution.

    Parameters
    ----------
    dist: Distribution
        The distribution to sample.
    n: int
        The number of draws.
    seed: int
        The seed.

    Returns
    -------
    numpy.ndarray
        The (n, D) array of draws.

    """
    return dist.sample(n, seed)


def second_moment(dist):
    """Return E||x||^2 under given distribution."""
    return dist.second_moment()


def from_dict(description):
    """Create a distribution from its JSON-compatible description.

    Parameters
    ----------
    description: dict
        The description, eg. {"kind": "gaussian", "mean": [0, 0]}.

    Returns
    -------
    Distribution
        The corresponding distribution.

    """
    description = dict(description)
    kind = description.pop("kind", None)
    if kind == "gaussian":
        allowed = {"mean", "cov"}
    elif kind == "mixture":
        allowed = {"weights", "components"}
    elif kind == "uniform":
        allowed = {"lower", "upper"}
    elif kind == "empirical":
        allowed = {"points", "csv"}
    else:
        msg = f"Unknown distribution kind: {kind}."
        raise ValueError(msg)
    unknown = set(description) - allowed
    if unknown:
        msg = f"Unknown key(s) for {kind} distribution: {sorted(unknown)}."
        raise ValueError(msg)
    if kind == "gaussian":
        return Gaussian(description["mean"], description.get("cov"))
    elif kind == "mixture":
        components = [from_dict(c) for c in description["components"]]
        return GaussianMixture(description["weights"], components)
    elif kind == "uniform":
        return Uniform(description["lower"], description["upper"])
    elif "csv" in description:
        return Empirical.from_csv(generic.process_path(description["csv"]))
    return Empirical(description["points"])
