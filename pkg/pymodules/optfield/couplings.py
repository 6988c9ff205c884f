# Copyright (c) 2026-now The optfield developers.
#
# License: BSD 3-clause "new" or "revised" license (BSD-3-Clause).

"""Common Python resources for optfield: transport plans and paths.

A transport plan samples coupled pairs (x0, x1) whose marginals are p0 and
p1. A path adds an interpolation rule that turns each pair into a point x_t,
which defines a sequence of distributions {p_t} joining p0 to p1.

"""

from abc import ABC, abstractmethod
import numpy as np
import scipy
from . import generic, distributions, potentials

MAX_MINIBATCH = 64


class PlanSpec(ABC):
    """Template for transport plans."""

    def __init__(self, p0):
        if not isinstance(p0, distributions.Distribution):
            raise TypeError("p0 must be a Distribution.")
        self.p0 = p0

    @property
    def dim(self):
        """The dimension of the underlying space."""
        return self.p0.dim

    @property
    def block_size(self):
        """The number of consecutive pairs that are drawn jointly."""
        return 1

    @abstractmethod
    def _pairs(self, x0, n, seed):
        """Return the partners of the n points x0."""
        pass

    @abstractmethod
    def to_dict(self):
        """Return the JSON-compatible description of the plan."""
        pass

    def sample_pairs(self, n, seed):
        """Return n coupled pairs (x0, x1).

        Parameters
        ----------
        n: int
            The number of pairs.
        seed: int
            The seed.

        Returns
        -------
        numpy.ndarray, numpy.ndarray
            The (n, D) arrays x0 and x1.

        """
        x0 = self.p0.sample(n, generic.derive_seed(seed, "x0"))
        return self._pairs(x0, n, seed)


def _check_same_dim(p0, p1):
    if not isinstance(p1, distributions.Distribution):
        raise TypeError("p1 must be a Distribution.")
    if p0.dim != p1.dim:
        msg = f"Marginals have different dimensions ({p0.dim}, {p1.dim})."
        raise ValueError(msg)


class Independent(PlanSpec):
    """The independent plan p0 x p1."""

    def __init__(self, p0, p1):
        super().__init__(p0)
        _check_same_dim(p0, p1)
        self.p1 = p1

    def __repr__(self):
        return f"Independent({self.p0!r}, {self.p1!r})"

    def _pairs(self, x0, n, seed):
        return x0, self.p1.sample(n, generic.derive_seed(seed, "x1"))

    def to_dict(self):
        return dict(kind="independent")


class MinibatchOT(PlanSpec):
    """Independent draws re-paired optimally within minibatches.

    Parameters
    ----------
    p0, p1: Distribution
        The marginals.
    batch: int
        The minibatch size (at most 64). Within each minibatch, draws are
        paired by the permutation that minimizes the sum of squared
        distances.

    """

    def __init__(self, p0, p1, batch):
        super().__init__(p0)
        _check_same_dim(p0, p1)
        if not 1 <= int(batch) <= MAX_MINIBATCH:
            msg = (
                f"The minibatch size must lie in [1, {MAX_MINIBATCH}] "
                f"(got {batch})."
            )
            raise ValueError(msg)
        self.p1 = p1
        self.batch = int(batch)

    def __repr__(self):
        return f"MinibatchOT({self.p0!r}, {self.p1!r}, batch={self.batch})"

    @property
    def block_size(self):
        return self.batch

    def _pairs(self, x0, n, seed):
        if self.batch > n:
            msg = f"Minibatch size ({self.batch}) exceeds sample size ({n})."
            raise ValueError(msg)
        x1 = self.p1.sample(n, generic.derive_seed(seed, "x1"))
        for start in range(0, n, self.batch):
            stop = min(start + self.batch, n)
            x1[start:stop] = x1[start:stop][
                optimal_pairing(x0[start:stop], x1[start:stop])
            ]
        return x0, x1

    def to_dict(self):
        return dict(kind="minibatch_ot", batch=self.batch)


class MapPlan(PlanSpec):
    """The deterministic plan x1 = grad(Psi_map)(x0).

    Parameters
    ----------
    p0: Distribution
        The first marginal.
    map_potential: ConvexPotential
        The potential whose gradient maps x0 to x1.

    """

    def __init__(self, p0, map_potential):
        super().__init__(p0)
        if map_potential.dim != p0.dim:
            raise ValueError("The map potential has the wrong dimension.")
        self.map_potential = map_potential
        self.p1 = None

    def __repr__(self):
        return f"MapPlan({self.p0!r}, {self.map_potential!r})"

    def _pairs(self, x0, n, seed):
        return x0, self.map_potential.grad(x0)

    def to_dict(self):
        return dict(kind="map", map_potential=self.map_potential.to_dict())


def optimal_pairing(x0, x1):
    """Return the permutation that pairs x0 and x1 at minimal squared cost.

    Parameters
    ----------
    x0, x1: numpy.ndarray
        Two (b, D) arrays of points.

    Returns
    -------
    numpy.ndarray
        The permutation sigma minimizing sum_i ||x0[i] - x1[sigma[i]]||^2.

    """
    cost = scipy.spatial.distance.cdist(x0, x1, metric="sqeuclidean")
    rows, cols = scipy.optimize.linear_sum_assignment(cost)
    sigma = np.empty(len(rows), dtype=int)
    sigma[rows] = cols
    return sigma


def sample_pairs(plan, n, seed):
    """Return n coupled pairs (x0, x1) drawn from given plan."""
    return plan.sample_pairs(n, seed)


class PathSpec:
    """A sequence of distributions {p_t} obtained by interpolating a plan.

    Parameters
    ----------
    plan: PlanSpec
        The plan that provides the pairs (x0, x1).
    shape: "linear" | "curved_sine"
        The interpolation rule.
    amplitude: float
        The amplitude a of the curved_sine rule.
    direction: array-like | None
        The unit vector c of the curved_sine rule.

    Notes
    -----
    linear: x_t = (1-t)*x0 + t*x1.

    curved_sine: x_t = (1-t)*x0 + t*x1 + a*sin(pi*t)*||x1-x0||*c.

    """

    def __init__(self, plan, shape="linear", amplitude=0.0, direction=None):
        if not isinstance(plan, PlanSpec):
            raise TypeError("plan must be a PlanSpec.")
        if shape not in ("linear", "curved_sine"):
            msg = f"Unknown path shape: {shape}."
            raise ValueError(msg)
        self.plan = plan
        self.shape = shape
        self.amplitude = float(amplitude)
        if shape == "curved_sine":
            if direction is None:
                direction = np.eye(plan.dim)[-1]
            direction = np.atleast_1d(np.asarray(direction, dtype=float))
            if direction.shape != (plan.dim,):
                raise ValueError("The direction has the wrong dimension.")
            if abs(np.linalg.norm(direction) - 1) > 1e-12:
                raise ValueError("The direction must be a unit vector.")
        self.direction = direction

    def __repr__(self):
        if self.shape == "linear":
            return f"PathSpec({self.plan!r}, linear)"
        return (
            f"PathSpec({self.plan!r}, curved_sine, a={self.amplitude}, "
            f"c={self.direction.tolist()})"
        )

    @property
    def dim(self):
        """The dimension of the underlying space."""
        return self.plan.dim

    def interpolate(self, x0, x1, t):
        """Return the interpolated point(s) x_t.

        Parameters
        ----------
        x0, x1: array-like
            The endpoints, single points (D,) or batches (N, D).
        t: float | array-like
            The time in [0, 1], or one time per pair.

        Returns
        -------
        numpy.ndarray
            x_t, with the same shape as x0.

        """
        rows0, single = generic.as_rows(x0, self.dim)
        rows1 = generic.as_rows(x1, self.dim)[0]
        if rows0.shape != rows1.shape:
            raise ValueError("Endpoints must have the same shape.")
        times = generic.as_times(t, rows0.shape[0])[:, None]
        out = (1 - times) * rows0 + times * rows1
        if self.shape == "curved_sine":
            length = np.linalg.norm(rows1 - rows0, axis=1)[:, None]
            bump = self.amplitude * np.sin(np.pi * times) * length
            out = out + bump * self.direction
        return out[0] if single else out

    def to_dict(self):
        """Return the JSON-compatible description of the path."""
        out = dict(plan=self.plan.to_dict(), shape=self.shape)
        if self.shape == "curved_sine":
            out["amplitude"] = self.amplitude
            out["direction"] = self.direction.tolist()
        return out


def interpolate(path, x0, x1, t):
    """Return the point(s) x_t of given path between x0 and x1."""
    return path.interpolate(x0, x1, t)


def plan_from_dict(description, p0, p1):
    """Create a plan from its JSON-compatible description.

    Parameters
    ----------
    description: dict
        The description, eg. {"kind": "minibatch_ot", "batch": 32}.
    p0, p1: Distribution
        The marginals (p1 is ignored by map plans).

    """
    description = dict(description)
    kind = description.pop("kind", None)
    allowed = dict(
        independent=set(), minibatch_ot={"batch"}, map={"map_potential"}
    )
    if kind not in allowed:
        msg = f"Unknown plan kind: {kind}."
        raise ValueError(msg)
    unknown = set(description) - allowed[kind]
    if unknown:
        msg = f"Unknown key(s) for {kind} plan: {sorted(unknown)}."
        raise ValueError(msg)
    if kind == "independent":
        return Independent(p0, p1)
    elif kind == "minibatch_ot":
        return MinibatchOT(p0, p1, description["batch"])
    return MapPlan(p0, potentials.from_dict(description["map_potential"]))


def path_from_dict(description, p0, p1):
    """Create a path from its JSON-compatible description."""
    description = dict(description)
    unknown = set(description) - {"plan", "shape", "amplitude", "direction"}
    if unknown:
        msg = f"Unknown key(s) for path: {sorted(unknown)}."
        raise ValueError(msg)
    plan = plan_from_dict(
        description.get("plan", dict(kind="independent")), p0, p1
    )
    return PathSpec(
        plan,
        description.get("shape", "linear"),
        description.get("amplitude", 0.0),
        description.get("direction"),
    )
