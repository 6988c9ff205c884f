# Copyright (c) 2026-now The optfield developers.
#
# License: BSD 3-clause "new" or "revised" license (BSD-3-Clause).

"""Common Python resources for optfield: convex conjugates.

This module computes Legendre transforms f*(y) = sup_z [<y,z> - f(z)] of the
potentials defined in potentials.py, and of their time-scaled versions
phi_t = t*Psi + (1-t)*||.||^2/2. The maximizer of the time-scaled transform
recovers the starting point z0 of the straight trajectory through x_t.

Quadratic functions are transformed in closed form. Other functions are
transformed by gradient ascent with Armijo backtracking along the
minimum-norm supergradient. When the function has max-affine structure, the
maximizer often sits on a kink, where ascent stalls: the optimality
conditions are then solved exactly, as a small quadratic program over the
convex weights of the pieces that can be active at the maximizer.

"""

import itertools
import logging
import math
import warnings
import numpy as np
import scipy
from . import generic
from .potentials import ConvexPotential, Quadratic, RegularizedMaxAffine

logger = logging.getLogger(__name__)

ARMIJO_SHRINK = 0.5
ARMIJO_SLOPE = 1e-4
ARMIJO_MAX_HALVINGS = 60
ACTIVE_TOL = 1e-10
MAX_SUPPORTS = 4096
MIN_NORM_ITERS = 200
DUAL_ITERS = 5000


class SolverSettings:
    """Settings of the iterative conjugate solver.

    Parameters
    ----------
    tol: float
        Stop when the norm of the (super)gradient is below this value.
    max_iters: int
        Maximum number of ascent iterations.
    accept_tol: float
        Estimators accept unconverged iterates (with a warning) whose
        gradient norm is below this value.

    """

    def __init__(self, tol=1e-10, max_iters=500, accept_tol=1e-6):
        if not tol > 0 or not accept_tol > 0:
            raise ValueError("Solver tolerances must be positive.")
        if int(max_iters) < 1:
            msg = f"max_iters must be positive (got {max_iters})."
            raise ValueError(msg)
        self.tol = float(tol)
        self.max_iters = int(max_iters)
        self.accept_tol = float(accept_tol)

    def __repr__(self):
        return (
            f"SolverSettings(tol={self.tol}, max_iters={self.max_iters}, "
            f"accept_tol={self.accept_tol})"
        )

    def to_dict(self):
        """Return the settings as a dictionary."""
        return dict(
            tol=self.tol, max_iters=self.max_iters, accept_tol=self.accept_tol
        )


class ConjugateResult:
    """The result of a conjugate computation.

    For a batch of points, every attribute has one entry per point.

    Attributes
    ----------
    value: float | numpy.ndarray
        The value f*(y).
    argmax: numpy.ndarray
        The maximizer z*.
    iterations: int | numpy.ndarray
        The number of ascent iterations (0 for closed forms).
    grad_norm: float | numpy.ndarray
        The norm of the smallest supergradient of <y,.> - f at z*.
    weights: numpy.ndarray | None
        For max-affine structures, the convex weights of the affine pieces
        in the subgradient of f at z* that equals y. None for smooth f.

    """

    def __init__(self, value, argmax, iterations, grad_norm, weights=None):
        self.value = value
        self.argmax = argmax
        self.iterations = iterations
        self.grad_norm = grad_norm
        self.weights = weights

    def __repr__(self):
        return (
            f"ConjugateResult(value={self.value}, argmax={self.argmax}, "
            f"iterations={self.iterations}, grad_norm={self.grad_norm})"
        )

    @classmethod
    def stack(cls, results):
        """Gather single-point results into a batch result."""
        weights = None
        if results[0].weights is not None:
            weights = np.stack([r.weights for r in results])
        return cls(
            np.array([r.value for r in results], dtype=float),
            np.stack([r.argmax for r in results]),
            np.array([r.iterations for r in results], dtype=int),
            np.array([r.grad_norm for r in results], dtype=float),
            weights,
        )


class TimeScaledPotential:
    """The potential phi_t(z) = t*Psi(z) + (1-t)*||z||^2/2.

    Parameters
    ----------
    base: ConvexPotential
        The potential Psi.
    t: float
        The time, in [0, 1].

    """

    def __init__(self, base, t):
        if not isinstance(base, ConvexPotential):
            raise TypeError("The base must be a ConvexPotential.")
        if not 0 <= t <= 1:
            msg = f"Time must lie in [0, 1] (got {t})."
            raise ValueError(msg)
        self.base = base
        self.t = float(t)

    def __repr__(self):
        return f"TimeScaledPotential({self.base!r}, t={self.t})"

    def __call__(self, z):
        return self.eval(z)

    @property
    def dim(self):
        """The dimension of the input space."""
        return self.base.dim

    @property
    def strong_convexity(self):
        """Lower bound of the strong-convexity modulus."""
        return (1 - self.t) + self.t * self.base.strong_convexity

    def eval(self, z):
        """Evaluate phi_t at given point(s)."""
        rows, single = generic.as_rows(z, self.dim)
        out = self.t * self.base.eval(rows)
        out += 0.5 * (1 - self.t) * np.sum(rows**2, axis=1)
        return float(out[0]) if single else out

    def grad(self, z):
        """Return the gradient of phi_t at given point(s)."""
        rows, single = generic.as_rows(z, self.dim)
        out = self.t * self.base.grad(rows) + (1 - self.t) * rows
        return out[0] if single else out

    def as_quadratic(self):
        """Return phi_t as a Quadratic (only if the base is quadratic)."""
        if not isinstance(self.base, Quadratic):
            raise TypeError("The base potential is not quadratic.")
        base, t = self.base, self.t
        return Quadratic(
            np.sqrt(t) * base.factor,
            t * base.shift,
            t * base.offset,
            t * base.ridge + (1 - t),
        )


def _quadratic_form(f):
    """Return f as a Quadratic if possible, None otherwise."""
    if isinstance(f, Quadratic):
        return f
    if isinstance(f, TimeScaledPotential) and isinstance(f.base, Quadratic):
        return f.as_quadratic()
    return None


def _max_affine_structure(f):
    """Return (mu, tau, slopes, intercepts) if f has max-affine structure.

    f has max-affine structure if f(z) = mu*||z||^2/2 + tau*max_k(a_k'z+b_k).

    """
    if isinstance(f, RegularizedMaxAffine):
        return f.strength, 1.0, f.slopes, f.intercepts
    if isinstance(f, TimeScaledPotential) and isinstance(
        f.base, RegularizedMaxAffine
    ):
        mu = (1 - f.t) + f.t * f.base.strength
        return mu, f.t, f.base.slopes, f.base.intercepts
    return None


def _conjugate_quadratic(quad, y):
    """Closed-form conjugate of a quadratic function, for rows y."""
    centered = y - quad.shift
    cho = scipy.linalg.cho_factor(quad.matrix, lower=True)
    z = scipy.linalg.cho_solve(cho, centered.T).T
    value = 0.5 * np.sum(centered * z, axis=1) - quad.offset
    grad_norm = np.linalg.norm(y - quad.grad(z), axis=1)
    n = y.shape[0]
    return ConjugateResult(value, z, np.zeros(n, dtype=int), grad_norm)


def _project_simplex(v):
    """Euclidean projection of a vector onto the probability simplex."""
    u = np.sort(v)[::-1]
    cumsum = np.cumsum(u)
    ind = np.arange(1, v.size + 1)
    count = np.count_nonzero(u - (cumsum - 1) / ind > 0)
    return np.maximum(v - (cumsum[count - 1] - 1) / count, 0.0)


def _accelerated_simplex(gradient, lipschitz, n):
    """Yield the iterates of accelerated projected gradient on the simplex.

    The first iterate is the uniform weights.

    """
    weights = np.full(n, 1 / n)
    extrapolated, momentum = weights, 1.0
    while True:
        yield weights
        previous = weights
        weights = _project_simplex(
            extrapolated - gradient(extrapolated) / lipschitz
        )
        next_momentum = (1 + np.sqrt(1 + 4 * momentum**2)) / 2
        extrapolated = weights + (momentum - 1) / next_momentum * (
            weights - previous
        )
        momentum = next_momentum


def _min_norm_weights(points):
    """Return convex weights of the minimum-norm point of conv(points)."""
    n = points.shape[0]
    gram = points @ points.T
    lipschitz = np.linalg.eigvalsh(gram)[-1]
    if n == 1 or not lipschitz > 0:
        return np.full(n, 1 / n)
    iterates = _accelerated_simplex(lambda w: gram @ w, lipschitz, n)
    return next(itertools.islice(iterates, MIN_NORM_ITERS - 1, None))


def _activity_tol(structure, z, top):
    """Tolerance under which an affine piece counts as active at z."""
    largest_slope = np.linalg.norm(structure[2], axis=1).max()
    return ACTIVE_TOL * (1 + abs(top) + largest_slope * np.linalg.norm(z))


def _supergradient(f, structure, y, z):
    """Return the minimum-norm supergradient of <y,.> - f at z.

    Returns
    -------
    (numpy.ndarray, numpy.ndarray | None)
        The supergradient, and the convex weights of the affine pieces that
        define it (None for smooth f).

    """
    if structure is None:
        return y - f.grad(z), None
    mu, tau, slopes, intercepts = structure
    affine = slopes @ z + intercepts
    top = affine.max()
    active = np.flatnonzero(affine >= top - _activity_tol(structure, z, top))
    points = y - mu * z - tau * slopes[active]
    local = _min_norm_weights(points)
    weights = np.zeros(slopes.shape[0])
    weights[active] = local
    return local @ points, weights


def _n_supports(n_candidates, largest):
    """Number of supports of at most given size among candidates."""
    return sum(
        math.comb(n_candidates, size)
        for size in range(1, min(n_candidates, largest) + 1)
    )


def _candidates(structure, z, grad_norm):
    """Return the pieces that can be active at the maximizer.

    If g is a supergradient at z, the maximizer lies within ||g||/mu of z,
    so its active pieces have values within 2*max||a_k||*||g||/mu of the
    max at z.

    """
    mu, _, slopes, intercepts = structure
    affine = slopes @ z + intercepts
    top = affine.max()
    largest_slope = np.linalg.norm(slopes, axis=1).max()
    band = 2 * largest_slope * grad_norm / mu
    band += 10 * _activity_tol(structure, z, top)
    return np.flatnonzero(affine >= top - band)


def _narrow(structure, y, candidates):
    """Narrow down the candidate pieces by solving the dual approximately.

    For weights w on the candidates, with z = (y - tau*A'w)/mu, the duality
    gap tau*(max_k(a_k'z+b_k) - sum_k w_k*(a_k'z+b_k)) bounds
    mu*||z - z*||^2/2, so the pieces active at the maximizer z* keep values
    within 2*max||a_k||*||z - z*|| of the max at z.

    Returns
    -------
    numpy.ndarray | None
        Candidates with few enough supports to enumerate, or None.

    """
    mu, tau, slopes, intercepts = structure
    sub, offsets = slopes[candidates], intercepts[candidates]
    n = candidates.size
    largest_slope = np.linalg.norm(sub, axis=1).max()
    lipschitz = tau**2 / mu * np.linalg.norm(sub, ord=2) ** 2
    lipschitz = max(lipschitz, 1e-12)

    def point(weights):
        return (y - tau * (weights @ sub)) / mu

    def gradient(weights):
        return -tau * (sub @ point(weights) + offsets)

    iterates = _accelerated_simplex(gradient, lipschitz, n)
    for weights in itertools.islice(iterates, DUAL_ITERS):
        z = point(weights)
        affine = sub @ z + offsets
        top = affine.max()
        gap = max(tau * (top - weights @ affine), 0.0)
        band = 2 * largest_slope * np.sqrt(2 * gap / mu)
        band += 10 * _activity_tol(structure, z, top)
        kept = candidates[affine >= top - band]
        if _n_supports(kept.size, slopes.shape[1] + 1) <= MAX_SUPPORTS:
            return kept
    logger.debug("Dual narrowing kept %d of %d pieces.", kept.size, n)
    return None


def _certify(f, structure, y, weights):
    """Return the maximizer defined by given piece weights if it is optimal.

    The weights w define z = (y - tau*A'w)/mu, where y - mu*z - tau*A'w = 0
    by construction. z is the maximizer if and only if every piece with
    positive weight is active at z.

    """
    mu, tau, slopes, intercepts = structure
    combination = weights @ slopes
    z = (y - tau * combination) / mu
    affine = slopes @ z + intercepts
    top = affine.max()
    support = weights > 0
    if affine[support].min() < top - _activity_tol(structure, z, top):
        return None
    residual = np.linalg.norm(y - mu * z - tau * combination)
    value = float(y @ z - f.eval(z))
    return ConjugateResult(value, z, 0, float(residual), weights)


def _exact_weights(f, structure, y, candidates):
    """Solve the maximization exactly with the pieces among candidates.

    The maximizer is optimal for the dual problem min over the simplex of
    ||y - tau*A'w||^2/(2*mu) - tau*b'w, which has a solution supported on
    at most D+1 pieces with affinely independent slopes. Each such support
    is tried in turn (smallest first): the KKT system of the dual restricted
    to the support is solved, and the weights are kept if they certify
    the maximizer over all pieces. When there are too many supports, the
    candidates are first narrowed down with the dual.

    Returns
    -------
    ConjugateResult | None
        The certified maximizer, or None if no support is certified.

    """
    mu, tau, slopes, intercepts = structure
    n_pieces, dim = slopes.shape
    if _n_supports(candidates.size, dim + 1) > MAX_SUPPORTS:
        candidates = _narrow(structure, y, candidates)
        if candidates is None:
            return None
    for size in range(1, min(candidates.size, dim + 1) + 1):
        for support in itertools.combinations(candidates, size):
            support = np.array(support)
            sub = slopes[support]
            system = np.zeros((size + 1, size + 1))
            system[:size, :size] = tau / mu * (sub @ sub.T)
            system[:size, size] = 1.0
            system[size, :size] = 1.0
            rhs = np.append(sub @ y / mu + intercepts[support], 1.0)
            try:
                solution = np.linalg.solve(system, rhs)
            except np.linalg.LinAlgError:
                continue
            local = solution[:size]
            if not np.all(np.isfinite(local)) or local.min() < -1e-12:
                continue
            weights = np.zeros(n_pieces)
            weights[support] = np.clip(local, 0, None)
            weights /= weights.sum()
            result = _certify(f, structure, y, weights)
            if result is not None:
                return result
    return None


def _conjugate_iterative(f, y, settings):
    """Conjugate of f at a single point y, by Armijo gradient ascent.

    The ascent direction is the minimum-norm supergradient. When f has
    max-affine structure, every iterate that narrows down the pieces that
    can be active at the maximizer is followed by an attempt to solve the
    optimality conditions exactly on these pieces.

    Raises
    ------
    MaxItersExceeded
        If the tolerance is not reached within settings.max_iters
        iterations (or if the line search cannot make progress).

    """
    structure = _max_affine_structure(f)
    if structure is not None and structure[1] == 0:
        # No max-affine part: f = mu*||.||^2/2
        mu, _, slopes, intercepts = structure
        z = y / mu
        weights = np.zeros(slopes.shape[0])
        weights[np.argmax(slopes @ z + intercepts)] = 1.0
        return ConjugateResult(float(y @ z - f.eval(z)), z, 0, 0.0, weights)
    step_init = 1 / f.strong_convexity
    z = y.copy()
    tried = None
    iteration = 0
    while True:
        grad, weights = _supergradient(f, structure, y, z)
        grad_norm = float(np.linalg.norm(grad))
        if structure is not None:
            candidates = _candidates(structure, z, grad_norm)
            if tuple(candidates) != tried:
                tried = tuple(candidates)
                exact = _exact_weights(f, structure, y, candidates)
                if exact is not None:
                    exact.iterations = iteration
                    return exact
        if grad_norm <= settings.tol:
            return ConjugateResult(
                float(y @ z - f.eval(z)), z, iteration, grad_norm, weights
            )
        if iteration == settings.max_iters:
            break
        value = y @ z - f.eval(z)
        step = step_init
        for _ in range(ARMIJO_MAX_HALVINGS):
            candidate = z + step * grad
            increase = y @ candidate - f.eval(candidate) - value
            if increase >= ARMIJO_SLOPE * step * grad_norm**2:
                break
            step *= ARMIJO_SHRINK
        else:
            break
        z = candidate
        iteration += 1
    result = ConjugateResult(
        float(y @ z - f.eval(z)), z, iteration, grad_norm, weights
    )
    msg = (
        f"Conjugate solver stopped after {iteration} iterations with "
        f"gradient norm {grad_norm:.3e} (tolerance: {settings.tol:.1e})."
    )
    raise generic.MaxItersExceeded(msg, result)


def _conjugate_gated(f, y, settings, index):
    """Conjugate at one point, accepting slightly unconverged iterates."""
    try:
        return _conjugate_iterative(f, y, settings)
    except generic.MaxItersExceeded as err:
        if err.result.grad_norm <= settings.accept_tol:
            warnings.warn(
                f"Accepting unconverged conjugate for sample {index}: {err}",
                RuntimeWarning,
            )
            return err.result
        msg = f"Conjugate solver failed for sample {index}: {err}"
        raise generic.EstimatorError(msg, index) from err


def conjugate(f, y, settings=None):
    """Return the convex conjugate of f at given point(s).

    Parameters
    ----------
    f: ConvexPotential | TimeScaledPotential
        The (strongly convex) function to transform.
    y: array-like
        A point (D,) or a batch of points (N, D).
    settings: SolverSettings | None
        The solver settings (defaults if None).

    Returns
    -------
    ConjugateResult
        The value f*(y) and the maximizer z*, with one entry per point for
        a batch.

    Raises
    ------
    MaxItersExceeded
        For a single point, if the iterative solver does not converge.
    EstimatorError
        For a batch, if the solver does not converge for one of the points
        and the final gradient norm exceeds settings.accept_tol.

    """
    settings = SolverSettings() if settings is None else settings
    rows, single = generic.as_rows(y, f.dim)
    quad = _quadratic_form(f)
    if quad is not None:
        result = _conjugate_quadratic(quad, rows)
        if single:
            result = ConjugateResult(
                float(result.value[0]),
                result.argmax[0],
                0,
                float(result.grad_norm[0]),
            )
        return result
    if single:
        return _conjugate_iterative(f, rows[0], settings)
    return ConjugateResult.stack(
        generic.map_rows(
            lambda i: _conjugate_gated(f, rows[i], settings, i), len(rows)
        )
    )


def time_scaled_conjugate(psi, t, x, settings=None):
    """Return the conjugate of phi_t = t*Psi + (1-t)*||.||^2/2 at x.

    Parameters
    ----------
    psi: ConvexPotential
        The potential Psi.
    t: float | array-like
        The time, or one time per point.
    x: array-like
        A point (D,) or a batch of points (N, D).
    settings: SolverSettings | None
        The solver settings (defaults if None).

    Returns
    -------
    ConjugateResult
        The value of the conjugate of phi_t at x, and its maximizer z0.

    """
    settings = SolverSettings() if settings is None else settings
    rows, single = generic.as_rows(x, psi.dim)
    times = generic.as_times(t, rows.shape[0])
    if single:
        f = TimeScaledPotential(psi, float(times[0]))
        return conjugate(f, rows[0], settings)
    if isinstance(psi, Quadratic):
        # phi_t has matrix t*A + (1-t)*I, which shares eigenvectors with A
        eigvals, eigvecs = np.linalg.eigh(psi.matrix)
        rhs = rows - times[:, None] * psi.shift
        scale = times[:, None] * eigvals + (1 - times[:, None])
        z = ((rhs @ eigvecs) / scale) @ eigvecs.T
        at_zero = times == 0
        z[at_zero] = rows[at_zero]
        value = 0.5 * np.sum(rhs * z, axis=1) - times * psi.offset
        grad = times[:, None] * psi.grad(z) + (1 - times[:, None]) * z
        grad_norm = np.linalg.norm(rows - grad, axis=1)
        n = rows.shape[0]
        return ConjugateResult(value, z, np.zeros(n, dtype=int), grad_norm)
    return ConjugateResult.stack(
        generic.map_rows(
            lambda i: _conjugate_gated(
                TimeScaledPotential(psi, float(times[i])),
                rows[i],
                settings,
                i,
            ),
            rows.shape[0],
        )
    )


def recover_z0(psi, t, x, settings=None):
    """Return the starting point z0 of the straight trajectory through x at t.

    z0 solves t*grad(Psi)(z0) + (1-t)*z0 = x. At t=0, z0 = x exactly.

    Parameters
    ----------
    psi: ConvexPotential
        The potential Psi.
    t: float | array-like
        The time, or one time per point.
    x: array-like
        A point (D,) or a batch of points (N, D).
    settings: SolverSettings | None
        The solver settings (defaults if None).

    Returns
    -------
    numpy.ndarray
        z0, with the same shape as x.

    """
    rows, single = generic.as_rows(x, psi.dim)
    times = generic.as_times(t, rows.shape[0])
    if single and times[0] == 0:
        return rows[0].copy()
    z0 = time_scaled_conjugate(psi, t, x, settings).argmax
    return np.array(z0)
