# Copyright (c) 2026-now The optfield developers.
#
# License: BSD 3-clause "new" or "revised" license (BSD-3-Clause).

"""Common Python resources for optfield: minimization of the losses.

The potential parameters are updated by moment-averaged gradient descent
(Adam) with fresh Monte Carlo batches at each epoch. Progress is measured on
a fixed evaluation sample shared by all epochs, and the iterate with the
lowest evaluation loss is returned.

"""

import logging
import time
import warnings
import numpy as np
import xarray as xr
from . import generic, losses
from .couplings import PathSpec, PlanSpec
from .fields import FieldSettings

logger = logging.getLogger(__name__)

LOSS_KINDS = ("ot", "ofm", "am")
FD_STEP = 1e-4
FD_REL_TOL = 1e-3
CHECKPOINT_EVERY = 50


class SolveConfig:
    """Configuration of the minimization.

    Parameters
    ----------
    loss_kind: "ot" | "ofm" | "am"
        The loss to minimize.
    step_size: float
        The step size of the parameter updates.
    max_epochs: int
        The maximum number of epochs.
    batch: int
        The number of samples per gradient estimate.
    grad_tol: float
        Stop when the norm of the bias-corrected first moment of the
        gradient is below this value.
    seed: int
        The seed. Each epoch uses its own sub-stream.
    beta1, beta2: float
        The decay rates of the first and second moment averages.
    eps: float
        The stabilizer of the update denominator.
    eval_n: int | None
        The size of the evaluation sample (4*batch if None).
    plan: PlanSpec | None
        The plan (required for "ofm").
    path: PathSpec | None
        The path (required for "am").
    validate_grad: bool | None
        Whether to compare the analytic gradient with central differences
        before the first epoch (if None: only for "ofm" and "am"). If they
        disagree, central differences are used for all epochs.
    field_settings: FieldSettings | None
        The evaluation settings of the optimal fields.

    """

    def __init__(
        self,
        loss_kind="ot",
        step_size=0.05,
        max_epochs=500,
        batch=4096,
        grad_tol=1e-3,
        seed=0,
        beta1=0.9,
        beta2=0.999,
        eps=1e-8,
        eval_n=None,
        plan=None,
        path=None,
        validate_grad=None,
        field_settings=None,
    ):
        if loss_kind not in LOSS_KINDS:
            msg = f"Unknown loss kind: {loss_kind} (expected {LOSS_KINDS})."
            raise ValueError(msg)
        if loss_kind == "ofm" and not isinstance(plan, PlanSpec):
            raise ValueError("Loss kind ofm requires a plan.")
        if loss_kind == "am" and not isinstance(path, PathSpec):
            raise ValueError("Loss kind am requires a path.")
        if not step_size > 0:
            msg = f"The step size must be positive (got {step_size})."
            raise ValueError(msg)
        for name, beta in (("beta1", beta1), ("beta2", beta2)):
            if not 0 < beta < 1:
                msg = f"{name} must lie in (0, 1) (got {beta})."
                raise ValueError(msg)
        if not eps > 0:
            raise ValueError("eps must be positive.")
        if int(max_epochs) < 1:
            raise ValueError("max_epochs must be positive.")
        if int(batch) < 2:
            raise ValueError("The batch size must be at least 2.")
        self.loss_kind = loss_kind
        self.step_size = float(step_size)
        self.max_epochs = int(max_epochs)
        self.batch = int(batch)
        self.grad_tol = float(grad_tol)
        self.seed = int(seed)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.eps = float(eps)
        self.eval_n = 4 * self.batch if eval_n is None else int(eval_n)
        if self.eval_n < 2:
            raise ValueError("The evaluation sample needs at least 2 points.")
        self.plan = plan
        self.path = path
        if validate_grad is None:
            validate_grad = loss_kind != "ot"
        self.validate_grad = bool(validate_grad)
        self.field_settings = (
            FieldSettings() if field_settings is None else field_settings
        )

    def __repr__(self):
        return f"SolveConfig({self.to_dict()})"

    def to_dict(self):
        """Return the JSON-compatible version of the configuration."""
        out = dict(
            loss_kind=self.loss_kind,
            step_size=self.step_size,
            max_epochs=self.max_epochs,
            batch=self.batch,
            grad_tol=self.grad_tol,
            seed=self.seed,
            beta1=self.beta1,
            beta2=self.beta2,
            eps=self.eps,
            eval_n=self.eval_n,
            validate_grad=self.validate_grad,
        )
        if self.plan is not None:
            out["plan"] = self.plan.to_dict()
        if self.path is not None:
            out["path"] = self.path.to_dict()
        return out


class SolveTrace:
    """The per-epoch records of a minimization.

    Attributes
    ----------
    dataset: xarray.Dataset
        Variables loss, std_error (of the evaluation loss), grad_norm
        (smoothed), wall_time_ms and skipped, along dimension epoch. Epoch
        0 holds the evaluation of the initial potential.
    best_epoch: int
        The epoch of the returned iterate.
    conjugate_failures: int
        The number of epochs skipped because of conjugate failures.
    fallback: bool
        Whether central-difference gradients were used.
    converged: bool
        Whether the gradient tolerance was reached.

    """

    def __init__(
        self, records, best_epoch, conjugate_failures, fallback, converged
    ):
        columns = ("loss", "std_error", "grad_norm", "wall_time_ms")
        epochs = [record["epoch"] for record in records]
        data = {
            name: ("epoch", np.array([r[name] for r in records], dtype=float))
            for name in columns
        }
        data["skipped"] = (
            "epoch",
            np.array([r["skipped"] for r in records], dtype=bool),
        )
        self.dataset = xr.Dataset(data, coords=dict(epoch=epochs))
        self.best_epoch = int(best_epoch)
        self.conjugate_failures = int(conjugate_failures)
        self.fallback = bool(fallback)
        self.converged = bool(converged)

    def __repr__(self):
        return (
            f"SolveTrace({self.n_epochs} epochs, best={self.best_epoch}, "
            f"failures={self.conjugate_failures})"
        )

    @property
    def epochs(self):
        """The recorded epochs."""
        return self.dataset["epoch"].values

    @property
    def n_epochs(self):
        """The number of epochs run (excluding the initial evaluation)."""
        return int(self.epochs[-1])

    def to_csv(self, filepath):
        """Write the trace to given CSV file."""
        columns = ["loss", "std_error", "grad_norm", "wall_time_ms"]
        self.dataset[columns].to_dataframe().to_csv(filepath)

    def to_dict(self):
        """Return a JSON-compatible summary of the trace."""
        losses_ = self.dataset["loss"].values
        return dict(
            epochs=self.n_epochs,
            best_epoch=self.best_epoch,
            best_loss=float(losses_[self.best_epoch]),
            conjugate_failures=self.conjugate_failures,
            fallback=self.fallback,
            converged=self.converged,
        )


class _Objective:
    """The loss selected by a SolveConfig, with and without gradient."""

    def __init__(self, p0, p1, cfg):
        self.p0 = p0
        self.p1 = p1
        self.cfg = cfg
        self.settings = cfg.field_settings
        self.use_differences = False

    def value(self, psi, n, seed):
        kind, settings = self.cfg.loss_kind, self.settings
        if kind == "ot":
            return losses.ot_loss(psi, self.p0, self.p1, n, seed, settings)
        elif kind == "ofm":
            return losses.ofm_loss(psi, self.cfg.plan, n, seed, settings)
        return losses.am_loss(psi, self.cfg.path, n, seed, settings)

    def analytic(self, psi, n, seed):
        kind, settings = self.cfg.loss_kind, self.settings
        if kind == "ot":
            estimate, grad, _ = losses.ot_loss_and_grad(
                psi, self.p0, self.p1, n, seed, settings
            )
            return estimate, grad
        elif kind == "ofm":
            return losses.ofm_loss_and_grad(
                psi, self.cfg.plan, n, seed, settings
            )
        estimate = losses.am_loss(psi, self.cfg.path, n, seed, settings)
        grad = losses.am_loss_grad(psi, self.cfg.path, n, seed, settings)
        return estimate, grad

    def directional(self, psi, direction, n, seed):
        """Central difference of the loss along direction (same samples)."""
        params = psi.params
        step = FD_STEP * direction
        plus = self.value(psi.with_params(params + step), n, seed)
        minus = self.value(psi.with_params(params - step), n, seed)
        return (plus.value - minus.value) / (2 * FD_STEP)

    def differences(self, psi, n, seed):
        grad = np.array(
            [
                self.directional(psi, basis, n, seed)
                for basis in np.eye(psi.n_params)
            ]
        )
        return self.value(psi, n, seed), grad

    def __call__(self, psi, n, seed):
        if self.use_differences:
            return self.differences(psi, n, seed)
        return self.analytic(psi, n, seed)


def validate_gradient(objective, psi, n, seed):
    """Compare the analytic gradient with a central difference.

    Returns
    -------
    bool, float, float
        Whether they agree within 1e-3 relative, the analytic directional
        derivative, and the central difference.

    """
    direction = generic.rng(seed, "direction").normal(size=psi.n_params)
    direction /= np.linalg.norm(direction)
    grad = objective.analytic(psi, n, seed)[1]
    analytic = float(grad @ direction)
    difference = objective.directional(psi, direction, n, seed)
    scale = max(abs(difference), float(np.linalg.norm(grad)), 1e-12)
    agree = abs(analytic - difference) <= FD_REL_TOL * scale
    return agree, analytic, difference


def _record(epoch, estimate, grad_norm, start, skipped=False):
    return dict(
        epoch=epoch,
        loss=np.nan if estimate is None else estimate.value,
        std_error=np.nan if estimate is None else estimate.std_error,
        grad_norm=grad_norm,
        wall_time_ms=1000 * (time.perf_counter() - start),
        skipped=skipped,
    )


def minimize(psi_init, p0, p1, cfg):
    """Minimize the configured loss over the parameters of a potential.

    Parameters
    ----------
    psi_init: ConvexPotential
        The initial potential (its family is kept).
    p0, p1: Distribution
        The marginals (used by the "ot" loss; the plan or path of cfg
        carries the distributions of the other losses).
    cfg: SolveConfig
        The configuration.

    Returns
    -------
    ConvexPotential, SolveTrace
        The iterate with the lowest evaluation loss, and the trace.

    Raises
    ------
    SolverError
        If a loss or gradient is not finite (the trace is attached).

    """
    start = time.perf_counter()
    objective = _Objective(p0, p1, cfg)
    eval_seed = generic.derive_seed(cfg.seed, "eval")
    records, failures, converged = [], 0, False

    def trace(best_epoch):
        return SolveTrace(
            records,
            best_epoch,
            failures,
            objective.use_differences,
            converged,
        )

    if cfg.validate_grad:
        seed = generic.derive_seed(cfg.seed, "validate")
        agree, analytic, difference = validate_gradient(
            objective, psi_init, cfg.batch, seed
        )
        if agree:
            logger.info(
                "Gradient validated: %.6e (analytic) vs %.6e (differences)",
                analytic,
                difference,
            )
        else:
            warnings.warn(
                f"Analytic gradient ({analytic:.6e}) disagrees with central "
                f"differences ({difference:.6e}); falling back to central "
                "differences.",
                RuntimeWarning,
            )
            objective.use_differences = True

    psi = psi_init
    initial = objective.value(psi, cfg.eval_n, eval_seed)
    records.append(_record(0, initial, np.nan, start))
    best_psi, best_loss, best_epoch = psi, initial.value, 0
    params = psi.params.copy()
    first = np.zeros_like(params)
    second = np.zeros_like(params)
    for epoch in range(1, cfg.max_epochs + 1):
        seed = generic.derive_seed(cfg.seed, "epoch", epoch)
        try:
            estimate, grad = objective(psi, cfg.batch, seed)
        except generic.EstimatorError as err:
            if err.index is None:
                msg = f"Epoch {epoch}: {err}"
                raise generic.SolverError(msg, trace(best_epoch)) from err
            failures += 1
            logger.warning("Skipping epoch %d: %s", epoch, err)
            records.append(_record(epoch, None, np.nan, start, True))
            continue
        if not np.all(np.isfinite(grad)):
            msg = f"Non-finite gradient at epoch {epoch}: {grad}."
            raise generic.SolverError(msg, trace(best_epoch))
        first = cfg.beta1 * first + (1 - cfg.beta1) * grad
        second = cfg.beta2 * second + (1 - cfg.beta2) * grad**2
        first_hat = first / (1 - cfg.beta1**epoch)
        second_hat = second / (1 - cfg.beta2**epoch)
        params = params - cfg.step_size * first_hat / (
            np.sqrt(second_hat) + cfg.eps
        )
        psi = psi.with_params(params)
        grad_norm = float(np.linalg.norm(first_hat))
        try:
            evaluation = objective.value(psi, cfg.eval_n, eval_seed)
        except generic.EstimatorError as err:
            if err.index is None:
                msg = f"Epoch {epoch}: {err}"
                raise generic.SolverError(msg, trace(best_epoch)) from err
            failures += 1
            logger.warning("Evaluation failed at epoch %d: %s", epoch, err)
            records.append(_record(epoch, None, grad_norm, start, True))
            continue
        records.append(_record(epoch, evaluation, grad_norm, start))
        logger.debug(
            "Epoch %d: loss %.6e +/- %.1e, grad norm %.3e",
            epoch,
            evaluation.value,
            evaluation.std_error,
            grad_norm,
        )
        if epoch % CHECKPOINT_EVERY == 0:
            logger.info(
                "Epoch %d/%d: loss %.6e, best %.6e (epoch %d)",
                epoch,
                cfg.max_epochs,
                evaluation.value,
                min(best_loss, evaluation.value),
                epoch if evaluation.value < best_loss else best_epoch,
            )
        if evaluation.value < best_loss:
            best_psi, best_loss, best_epoch = psi, evaluation.value, epoch
        if grad_norm <= cfg.grad_tol:
            converged = True
            logger.info("Converged at epoch %d.", epoch)
            break
    if failures > 0:
        logger.warning(
            "%d epoch(s) skipped after conjugate failures.", failures
        )
    return best_psi, trace(best_epoch)
