# Copyright (c) 2026-now The optfield developers.
#
# License: BSD 3-clause "new" or "revised" license (BSD-3-Clause).

"""Common Python resources for optfield: Monte Carlo loss estimators.

Four losses of a convex potential Psi are estimated here:

 - ot: the dual OT loss E_p0[Psi(x0)] + E_p1[conj(Psi)(x1)].

 - fm / ofm: the flow matching loss of a vector field along the straight
   interpolation of a plan, and its restriction to optimal fields (ofm).

 - am: the action matching loss of the scalar potential s_t of the optimal
   field, along any path {p_t}.

Every estimator takes an explicit seed and draws its samples from streams
derived from that seed and from the name of the loss, so that two estimators
called with the same seed use independent samples, while the same estimator
called twice with the same seed uses the same samples (common random
numbers).

"""

import logging
import numpy as np
from . import generic
from .conjugate import conjugate, time_scaled_conjugate
from .fields import FieldSettings, field_velocity, s_eval, bracket

logger = logging.getLogger(__name__)


class LossEstimate:
    """A Monte Carlo estimate of a loss.

    Parameters
    ----------
    loss: str
        The name of the loss.
    value: float
        The estimate.
    std_error: float
        The standard error of the estimate.
    n_samples: int
        The number of samples.
    seed: int
        The seed.
    terms: dict | None
        Named partial estimates (each a LossEstimate).

    """

    def __init__(self, loss, value, std_error, n_samples, seed, terms=None):
        if not np.isfinite(value):
            msg = f"Non-finite estimate for loss {loss}: {value}."
            raise generic.EstimatorError(msg, None)
        self.loss = loss
        self.value = float(value)
        self.std_error = float(std_error)
        self.n_samples = int(n_samples)
        self.seed = int(seed)
        self.terms = {} if terms is None else dict(terms)

    def __repr__(self):
        return (
            f"LossEstimate({self.loss}: {self.value:.6g} +/- "
            f"{self.std_error:.2g}, n={self.n_samples})"
        )

    @classmethod
    def from_samples(cls, loss, samples, seed, terms=None, block=1):
        """Create an estimate from per-sample integrand values.

        Parameters
        ----------
        loss: str
            The name of the loss.
        samples: array-like
            The per-sample integrand values.
        seed: int
            The seed.
        terms: dict | None
            Named partial estimates.
        block: int
            The number of consecutive samples that are drawn jointly (eg. the
            minibatch of a minibatch OT plan). The standard error is computed
            from the block means, which are independent.

        """
        samples = np.asarray(samples, dtype=float)
        n = samples.size
        starts = np.arange(0, n, max(int(block), 1))
        if starts.size < 2:
            starts = np.arange(n)
        means = np.add.reduceat(samples, starts) / np.diff(starts, append=n)
        std_error = means.std(ddof=1) / np.sqrt(means.size)
        return cls(loss, samples.mean(), std_error, n, seed, terms)

    def to_dict(self):
        """Return the JSON-compatible version of the estimate."""
        return dict(
            loss=self.loss,
            value=self.value,
            std_error=self.std_error,
            n=self.n_samples,
            seed=self.seed,
            terms={
                name: dict(value=term.value, std_error=term.std_error)
                for name, term in self.terms.items()
            },
        )


def combined_std_error(*estimates, weights=None):
    """Return the standard error of a weighted sum of independent estimates.

    Parameters
    ----------
    *estimates: LossEstimate
        The estimates.
    weights: sequence | None
        The weight of each estimate (1 for all if None).

    """
    weights = [1.0] * len(estimates) if weights is None else weights
    variance = sum(
        (w * e.std_error) ** 2 for w, e in zip(weights, estimates)
    )
    return float(np.sqrt(variance))


def _check_n(n):
    if int(n) < 2:
        msg = f"Estimators need at least 2 samples (got {n})."
        raise ValueError(msg)
    return int(n)


def _field_settings(settings):
    return FieldSettings() if settings is None else settings


def stratified_times(n, seed):
    """Return the shuffled cell midpoints (i + 0.5)/n, i = 0, ..., n-1."""
    times = (np.arange(n) + 0.5) / n
    return generic.rng(seed, "time").permutation(times)


def _ot_samples(psi, p0, p1, n, seed, settings):
    """Return x0, Psi(x0), and the conjugate of Psi at x1."""
    if p0.dim != psi.dim or p1.dim != psi.dim:
        raise ValueError("Distributions and potential dimensions differ.")
    x0 = p0.sample(n, generic.derive_seed(seed, "ot", "x0"))
    x1 = p1.sample(n, generic.derive_seed(seed, "ot", "x1"))
    conj = conjugate(psi, x1, settings.conjugate)
    return x0, psi.eval(x0), conj


def _ot_estimate(psi_values, conj, n, seed):
    first = LossEstimate.from_samples("potential", psi_values, seed)
    second = LossEstimate.from_samples("conjugate", conj.value, seed)
    return LossEstimate(
        "ot",
        first.value + second.value,
        combined_std_error(first, second),
        n,
        seed,
        terms=dict(potential=first, conjugate=second),
    )


def ot_loss_and_grad(psi, p0, p1, n, seed, settings=None):
    """Return the OT dual loss estimate and its parameter gradient.

    The gradient of conj(Psi)(x1) with respect to theta is
    -dPsi(z*)/dtheta, where z* is the maximizer (envelope theorem).

    Returns
    -------
    LossEstimate, numpy.ndarray, numpy.ndarray
        The loss, the gradient, and the standard error of each gradient
        coordinate.

    """
    n = _check_n(n)
    settings = _field_settings(settings)
    x0, psi_values, conj = _ot_samples(psi, p0, p1, n, seed, settings)
    grad0 = psi.param_grad(x0)
    grad1 = psi.param_grad(conj.argmax, conj.weights)
    grad = grad0.mean(axis=0) - grad1.mean(axis=0)
    std_error = np.sqrt(
        (grad0.var(axis=0, ddof=1) + grad1.var(axis=0, ddof=1)) / n
    )
    return _ot_estimate(psi_values, conj, n, seed), grad, std_error


def ot_loss(psi, p0, p1, n, seed, settings=None):
    """Return the Monte Carlo estimate of the dual OT loss.

    Parameters
    ----------
    psi: ConvexPotential
        The potential Psi.
    p0, p1: Distribution
        The marginals.
    n: int
        The number of samples drawn from each marginal (n >= 2).
    seed: int
        The seed.
    settings: FieldSettings | None
        The evaluation settings (conjugate solver).

    Returns
    -------
    LossEstimate
        The estimate of E_p0[Psi(x0)] + E_p1[conj(Psi)(x1)], with terms
        "potential" and "conjugate".

    """
    n = _check_n(n)
    settings = _field_settings(settings)
    _, psi_values, conj = _ot_samples(psi, p0, p1, n, seed, settings)
    return _ot_estimate(psi_values, conj, n, seed)


def ot_loss_grad(psi, p0, p1, n, seed, settings=None, with_std_error=False):
    """Return the gradient of the dual OT loss with respect to theta.

    Parameters
    ----------
    psi, p0, p1, n, seed, settings:
        Same as for ot_loss (the same seed gives the same samples).
    with_std_error: bool
        Whether to also return the standard error of each coordinate.

    Returns
    -------
    numpy.ndarray | (numpy.ndarray, numpy.ndarray)
        The gradient (and its standard errors).

    """
    _, grad, std_error = ot_loss_and_grad(psi, p0, p1, n, seed, settings)
    return (grad, std_error) if with_std_error else grad


def _fm_samples(plan, n, seed):
    x0, x1 = plan.sample_pairs(n, generic.derive_seed(seed, "fm", "pairs"))
    times = stratified_times(n, generic.derive_seed(seed, "fm", "t"))
    x_t = (1 - times[:, None]) * x0 + times[:, None] * x1
    return x0, x1, times, x_t


def fm_loss(field, plan, n, seed, loss="fm"):
    """Return the Monte Carlo estimate of the flow matching loss.

    Parameters
    ----------
    field: callable
        The vector field, called as field(t, x) with t of shape (N,) and x of
        shape (N, D), returning an (N, D) array.
    plan: PlanSpec
        The transport plan.
    n: int
        The number of samples (n >= 2).
    seed: int
        The seed.
    loss: str
        The name given to the estimate.

    Returns
    -------
    LossEstimate
        The estimate of E ||u_t(x_t) - (x1 - x0)||^2, with x_t on the
        straight line between the paired points and stratified times.

    """
    n = _check_n(n)
    x0, x1, times, x_t = _fm_samples(plan, n, seed)
    velocity = np.asarray(field(times, x_t), dtype=float)
    residual = velocity - (x1 - x0)
    return LossEstimate.from_samples(
        loss, np.sum(residual**2, axis=1), seed, block=plan.block_size
    )


def ofm_loss(psi, plan, n, seed, settings=None):
    """Return the flow matching loss of the optimal field of Psi.

    The same seed gives the same samples as fm_loss.

    """
    settings = _field_settings(settings)

    def field(t, x):
        return field_velocity(psi, t, x, settings)

    return fm_loss(field, plan, n, seed, loss="ofm")


def ofm_loss_and_grad(psi, plan, n, seed, settings=None):
    """Return the OFM loss estimate and its parameter gradient.

    Differentiating t*grad(Psi)(z0) + (1-t)*z0 = x_t with respect to theta
    gives du/dtheta = (t*H + (1-t)*I)^-1 dgrad(Psi)(z0)/dtheta, with H the
    Hessian of Psi at z0. For max-affine potentials, this holds where z0
    is not on a kink.

    Returns
    -------
    LossEstimate, numpy.ndarray
        The loss and its gradient.

    """
    n = _check_n(n)
    settings = _field_settings(settings)
    x0, x1, times, x_t = _fm_samples(plan, n, seed)
    conj = time_scaled_conjugate(psi, times, x_t, settings.conjugate)
    z0 = np.array(conj.argmax)
    z0[times == 0] = x_t[times == 0]
    residual = psi.grad(z0, conj.weights) - z0 - (x1 - x0)
    scaled = times[:, None, None] * psi.hessian(z0)
    scaled = scaled + (1 - times[:, None, None]) * np.eye(psi.dim)
    jacobian = psi.grad_param_jacobian(z0, conj.weights)
    dvelocity = np.linalg.solve(scaled, jacobian)
    grad = 2 * np.einsum("nd,ndp->p", residual, dvelocity) / n
    estimate = LossEstimate.from_samples(
        "ofm", np.sum(residual**2, axis=1), seed, block=plan.block_size
    )
    return estimate, grad


def ofm_loss_grad(psi, plan, n, seed, settings=None):
    """Return the gradient of the OFM loss with respect to theta."""
    return ofm_loss_and_grad(psi, plan, n, seed, settings)[1]


def _am_samples(path, n, seed):
    pairs_seed = generic.derive_seed(seed, "am", "pairs")
    x0, x1 = path.plan.sample_pairs(n, pairs_seed)
    times = stratified_times(n, generic.derive_seed(seed, "am", "t"))
    return x0, x1, times, path.interpolate(x0, x1, times)


def am_loss(psi, path, n, seed, settings=None):
    """Return the action matching loss of the optimal field of Psi.

    Parameters
    ----------
    psi: ConvexPotential
        The potential Psi.
    path: PathSpec
        The sequence of distributions {p_t}.
    n: int
        The number of samples (n >= 2).
    seed: int
        The seed.
    settings: FieldSettings | None
        The evaluation settings.

    Returns
    -------
    LossEstimate
        The estimate of E_p0[s_0] - E_p1[s_1] + int E_pt[||grad s_t||^2/2 +
        ds_t/dt] dt, with terms "start" (E_p0[s_0]), "end" (E_p1[s_1]) and
        "interior". The standard error is computed on the per-sample total.

    """
    n = _check_n(n)
    settings = _field_settings(settings)
    x0, x1, times, x_t = _am_samples(path, n, seed)
    start = s_eval(psi, 0.0, x0, settings)
    end = s_eval(psi, 1.0, x1, settings)
    interior = bracket(psi, times, x_t, settings)
    block = path.plan.block_size
    terms = dict(
        start=LossEstimate.from_samples("start", start, seed, block=block),
        end=LossEstimate.from_samples("end", end, seed, block=block),
        interior=LossEstimate.from_samples(
            "interior", interior, seed, block=block
        ),
    )
    return LossEstimate.from_samples(
        "am", start - end + interior, seed, terms, block=block
    )


def am_loss_grad(psi, path, n, seed, settings=None):
    """Return the gradient of the action matching loss w.r.t. theta.

    The interior term vanishes for every theta, so only the endpoint terms
    contribute: E_p0[dPsi(x0)/dtheta] - E_p1[dPsi(z*(x1))/dtheta].

    """
    n = _check_n(n)
    settings = _field_settings(settings)
    x0, x1, _, _ = _am_samples(path, n, seed)
    conj = conjugate(psi, x1, settings.conjugate)
    grad0 = psi.param_grad(x0).mean(axis=0)
    grad1 = psi.param_grad(conj.argmax, conj.weights)
    return grad0 - grad1.mean(axis=0)


def w2_estimate(psi, p0, p1, n, seed, settings=None):
    """Return E||x0||^2 + E||x1||^2 - 2*L_OT(Psi).

    This is the squared Wasserstein-2 distance when Psi minimizes L_OT (and
    a lower bound otherwise).

    """
    ot = ot_loss(psi, p0, p1, n, seed, settings)
    value = p0.second_moment() + p1.second_moment() - 2 * ot.value
    return LossEstimate(
        "w2", value, 2 * ot.std_error, n, seed, terms=dict(ot=ot)
    )


def am_constant(p0, p1):
    """Return -E_p0||x0||^2/2 - E_p1||x1||^2/2.

    The action matching loss of optimal fields equals the dual OT loss plus
    this constant, for every path.

    """
    return -0.5 * (p0.second_moment() + p1.second_moment())
