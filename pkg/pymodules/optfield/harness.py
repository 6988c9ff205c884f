# Copyright (c) 2026-now The optfield developers.
#
# License: BSD 3-clause "new" or "revised" license (BSD-3-Clause).

"""Common Python resources for optfield: command-line experiments.

Each subcommand reads an experiment configuration (JSON), runs the
corresponding numerical checks, and writes a report (report.json) and CSV
files into the output directory. The exit code is 0 if all checks pass, 2 if
a check fails, and 1 if the experiment could not run.

"""

import os
import sys
import copy
import json
import time
import logging
import argparse
import numpy as np
import pandas as pd
from . import generic, distributions, potentials, couplings, losses, oracles
from .conjugate import SolverSettings
from .fields import FieldSettings, bracket, field_eval, pushforward
from .solver import SolveConfig, minimize

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(levelname)s %(name)s: %(message)s"
CONFIG_DIR = os.path.join(os.path.dirname(__file__), "configs")
REPORT_NAME = "report.json"

SECTIONS = dict(
    conjugate=dict(tol=1e-10, max_iters=500, accept_tol=1e-6),
    bracket=dict(
        points=50, t_min=0.05, t_max=0.95, fd_step=1e-4, x_scale=1.0
    ),
    solver=dict(
        loss_kind="ot",
        step_size=0.05,
        max_epochs=500,
        batch=4096,
        eval_n=None,
        grad_tol=1e-3,
        beta1=0.9,
        beta2=0.999,
        eps=1e-8,
        validate_grad=None,
        path=None,
        plan=None,
        init=None,
    ),
    push=dict(steps=10, method="rk4", n=10000),
    tolerances=dict(
        sigma=4.0,
        bracket_analytic=1e-9,
        bracket_audit=1e-3,
        map_rel=0.02,
        shift_abs=0.05,
        w2_rel=0.02,
        push_rel=1e-6,
        mean_rel=0.03,
        cov_rel=0.05,
        constant=None,
    ),
)

TOP_LEVEL = dict(
    experiment=None,
    seed=0,
    n=100000,
    out="optfield-out",
    p0=None,
    p1=None,
    potentials=None,
    potential=None,
    plan=None,
    paths=None,
)

REQUIRED = {
    "verify-bracket": ("potentials",),
    "verify-theorem": ("p0", "p1", "potentials", "paths"),
    "verify-ofm-relation": ("p0", "p1", "potentials", "plan"),
    "solve-ot": ("p0", "p1"),
    "push-samples": ("p0", "potential"),
}


def prepare_argparser():
    """Return the object that parses command-line arguments.

    Returns
    -------
    argparse.ArgumentParser
        The object that parses command-line arguments.

    """
    parser = argparse.ArgumentParser(
        description="Numerical experiments on optimal vector fields.",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument(
        "subcommand",
        help="The experiment to run.",
        choices=tuple(REQUIRED),
    )
    parser.add_argument(
        "--config",
        help=(
            "File containing the experiment configuration (JSON format). "
            "Defaults to the configuration shipped for the subcommand."
        ),
        default=None,
    )
    parser.add_argument(
        "--seed",
        help="Seed of all random streams (overrides the file).",
        type=int,
        default=None,
    )
    parser.add_argument(
        "--n",
        help="Number of Monte Carlo samples (overrides the file).",
        type=int,
        default=None,
    )
    parser.add_argument(
        "--out",
        help="Output directory (overrides the file).",
        default=None,
    )
    parser.add_argument(
        "--conj-tol",
        help="Tolerance of the conjugate solver (overrides the file).",
        type=float,
        default=None,
    )
    parser.add_argument(
        "--conj-max-iters",
        help="Iteration cap of the conjugate solver (overrides the file).",
        type=int,
        default=None,
    )
    parser.add_argument(
        "--threads",
        help=(
            f"Maximum number of workers (default: environment variable "
            f"{generic.THREADS_ENV_VAR}, or 1)."
        ),
        type=int,
        default=None,
    )
    parser.add_argument(
        "--verbose",
        help="Whether to print debug messages.",
        action=generic.ConvertToBoolean,
        default=False,
    )
    parser.add_argument(
        "--validate-grad",
        help=(
            "Whether the solver compares its gradients with central "
            "differences before the first epoch (overrides the file)."
        ),
        action=generic.ConvertToBoolean,
        default=None,
    )
    return parser


def load_config(filepath):
    """Return the content of given configuration file.

    Raises
    ------
    ConfigError
        If the file is not a JSON dictionary (with the line and column of
        syntax errors).

    """
    with open(filepath) as f:
        text = f.read()
    try:
        config = json.loads(text)
    except json.JSONDecodeError as err:
        msg = f"{filepath}: line {err.lineno}, column {err.colno}: {err.msg}."
        raise generic.ConfigError(msg) from err
    if not isinstance(config, dict):
        msg = f"{filepath}: configuration must represent a JSON dictionary."
        raise generic.ConfigError(msg)
    return config


def merge_config(from_file):
    """Return the complete configuration, with defaults for missing keys.

    Raises
    ------
    ConfigError
        If a key is unknown (the message contains its full path).

    """
    config = copy.deepcopy(TOP_LEVEL)
    config.update(copy.deepcopy(SECTIONS))
    for key, value in from_file.items():
        if key not in config:
            msg = f"Unknown key: {key}."
            raise generic.ConfigError(msg)
        if key in SECTIONS:
            if not isinstance(value, dict):
                msg = f"{key}: expected a dictionary."
                raise generic.ConfigError(msg)
            for subkey, subvalue in value.items():
                if subkey not in SECTIONS[key]:
                    msg = f"Unknown key: {key}.{subkey}."
                    raise generic.ConfigError(msg)
                config[key][subkey] = subvalue
        else:
            config[key] = value
    return config


def _check_config(config, subcommand):
    for key in REQUIRED[subcommand]:
        if config[key] is None:
            msg = f"Missing required key for {subcommand}: {key}."
            raise generic.ConfigError(msg)
    if not isinstance(config["seed"], int) or config["seed"] < 0:
        msg = f"seed: expected a non-negative integer, got {config['seed']}."
        raise generic.ConfigError(msg)
    if not isinstance(config["n"], int) or config["n"] < 2:
        msg = f"n: expected an integer >= 2, got {config['n']}."
        raise generic.ConfigError(msg)
    for key in ("potentials", "paths"):
        if config[key] is not None and not isinstance(config[key], list):
            msg = f"{key}: expected a list."
            raise generic.ConfigError(msg)


def get_config(opts):
    """Return the experiment configuration.

    The configuration is read from the file given with --config (or from
    the file shipped for the subcommand). Command-line arguments have
    priority over the file, which has priority over the built-in defaults.

    Parameters
    ----------
    opts: Namespace
        The command-line arguments.

    Returns
    -------
    dict
        The validated configuration.

    """
    filepath = opts.config
    if filepath is None:
        filepath = os.path.join(CONFIG_DIR, f"{opts.subcommand}.json")
    config = merge_config(load_config(generic.process_path(filepath)))
    if config["experiment"] is None:
        config["experiment"] = opts.subcommand
    for name in ("seed", "n", "out"):
        if getattr(opts, name) is not None:
            config[name] = getattr(opts, name)
    if opts.conj_tol is not None:
        config["conjugate"]["tol"] = opts.conj_tol
    if opts.conj_max_iters is not None:
        config["conjugate"]["max_iters"] = opts.conj_max_iters
    if opts.validate_grad is not None:
        config["solver"]["validate_grad"] = opts.validate_grad
    _check_config(config, opts.subcommand)
    return config


def _build(path, factory, *args):
    """Call factory(*args), reporting errors with the configuration path."""
    try:
        return factory(*args)
    except (ValueError, TypeError, KeyError) as err:
        msg = f"{path}: {err}"
        raise generic.ConfigError(msg) from err


def _field_settings(config):
    conjugate = _build(
        "conjugate", lambda: SolverSettings(**config["conjugate"])
    )
    return FieldSettings(conjugate)


def _distribution(config, key):
    return _build(key, distributions.from_dict, config[key])


def _potential_entries(entry, path, seed, index):
    """Return the (label, potential) pairs described by one entry."""
    if not isinstance(entry, dict):
        msg = f"{path}: expected a dictionary."
        raise generic.ConfigError(msg)
    if "file" in entry:
        filepath = generic.process_path(entry["file"])
        psi = _build(path, potentials.load_potential, filepath)
        return [(os.path.basename(filepath), psi)]
    if "random" not in entry:
        psi = _build(path, potentials.from_dict, entry)
        return [(f"{psi.to_dict()['variant']}-{index}", psi)]
    allowed = {"random", "dim", "count", "seed", "pieces", "strength"}
    unknown = set(entry) - allowed
    if unknown:
        msg = f"{path}: unknown key(s) {sorted(unknown)}."
        raise generic.ConfigError(msg)
    variant = entry["random"]
    if variant not in ("quadratic", "max_affine"):
        msg = f"{path}.random: unknown variant {variant}."
        raise generic.ConfigError(msg)
    gen = generic.rng(entry.get("seed", seed), "potentials", index)
    out = []
    for k in range(int(entry.get("count", 1))):
        if variant == "quadratic":
            psi = potentials.random_quadratic(entry.get("dim", 1), gen)
        else:
            psi = potentials.random_max_affine(
                entry.get("dim", 1),
                gen,
                entry.get("pieces", 5),
                entry.get("strength", potentials.DEFAULT_STRENGTH),
            )
        out.append((f"{variant}-{index}-{k}", psi))
    return out


def _potentials(config):
    out = []
    for index, entry in enumerate(config["potentials"]):
        out.extend(
            _potential_entries(
                entry, f"potentials[{index}]", config["seed"], index
            )
        )
    return out


def _single_potential(entry, path, seed):
    entries = _potential_entries(entry, path, seed, 0)
    if len(entries) != 1:
        msg = f"{path}: expected exactly one potential."
        raise generic.ConfigError(msg)
    return entries[0][1]


def _active_pieces(psi, z):
    """Return which affine pieces are active at each row of z."""
    if not isinstance(psi, potentials.RegularizedMaxAffine):
        return np.ones((z.shape[0], 1), dtype=bool)
    affine = z @ psi.slopes.T + psi.intercepts
    top = affine.max(axis=1, keepdims=True)
    return affine >= top - 1e-7 * (1 + np.abs(top))


def audit_bracket(psi, times, x, step, settings=None):
    """Return the bracket recomputed with central differences of s_t.

    Parameters
    ----------
    psi: ConvexPotential
        The potential Psi.
    times: numpy.ndarray
        The (N,) times (at least step away from 0 and 1).
    x: numpy.ndarray
        The (N, D) points.
    step: float
        The finite-difference step.
    settings: FieldSettings | None
        The evaluation settings.

    Returns
    -------
    numpy.ndarray, numpy.ndarray
        The audited bracket ||grad(s_t)||^2/2 + ds_t/dt at each point, and
        whether the stencil of the point crosses a change of active affine
        pieces (where central differences are not accurate).

    """
    n, dim = x.shape
    shifts = [(np.zeros(dim), 0.0)]
    for d in range(dim):
        unit = np.eye(dim)[d] * step
        shifts.extend([(unit, 0.0), (-unit, 0.0)])
    shifts.extend([(np.zeros(dim), step), (np.zeros(dim), -step)])
    all_x = np.concatenate([x + dx for dx, _ in shifts])
    all_t = np.concatenate([times + dt for _, dt in shifts])
    evaluation = field_eval(psi, all_t, all_x, settings)
    s_values = evaluation.s_value.reshape(len(shifts), n)
    active = _active_pieces(psi, evaluation.z0)
    active = active.reshape(len(shifts), n, -1)
    crossing = np.any(active != active[0], axis=(0, 2))
    grad = np.column_stack(
        [
            (s_values[1 + 2 * d] - s_values[2 + 2 * d]) / (2 * step)
            for d in range(dim)
        ]
    )
    time_derivative = (s_values[-2] - s_values[-1]) / (2 * step)
    return 0.5 * np.sum(grad**2, axis=1) + time_derivative, crossing


def verify_bracket(config, outdir):
    """Check that the bracket of optimal fields vanishes."""
    settings = _field_settings(config)
    options, tol = config["bracket"], config["tolerances"]
    results, failures = [], []
    for index, (label, psi) in enumerate(_potentials(config)):
        gen = generic.rng(config["seed"], "bracket", index)
        points = options["points"]
        times = gen.uniform(options["t_min"], options["t_max"], size=points)
        x = gen.normal(scale=options["x_scale"], size=(points, psi.dim))
        evaluation = field_eval(psi, times, x, settings)
        analytic = np.abs(bracket(psi, times, x, settings))
        bound = np.sum(evaluation.velocity**2, axis=1) + 1
        audited, crossing = audit_bracket(
            psi, times, x, options["fd_step"], settings
        )
        audited = np.abs(audited[~crossing])
        max_audit = float(audited.max()) if audited.size > 0 else 0.0
        passed = bool(
            np.all(analytic <= tol["bracket_analytic"] * bound)
            and max_audit <= tol["bracket_audit"]
        )
        if not passed:
            failures.append(f"{label}: bracket")
        results.append(
            dict(
                label=label,
                variant=psi.to_dict()["variant"],
                dim=psi.dim,
                max_abs_bracket=float(analytic.max()),
                max_audited_bracket=max_audit,
                skipped_audits=int(crossing.sum()),
                passed=passed,
            )
        )
        logger.info(
            "%s: max bracket %.2e, audited %.2e",
            label,
            analytic.max(),
            max_audit,
        )
    return dict(potentials=results), failures


def _combined(*estimates, weights=None):
    return losses.combined_std_error(*estimates, weights=weights)


def _pairwise(values, std_errors, sigma, name, failures, label):
    """Check that given values agree pairwise within sigma std errors."""
    out = []
    for i in range(len(values)):
        for j in range(i + 1, len(values)):
            difference = values[i] - values[j]
            std_error = float(np.hypot(std_errors[i], std_errors[j]))
            passed = bool(abs(difference) <= sigma * std_error)
            if not passed:
                failures.append(f"{label}: {name} {i} vs {j}")
            out.append(
                dict(
                    pair=[i, j],
                    difference=float(difference),
                    std_error=std_error,
                    passed=passed,
                )
            )
    return out


def verify_theorem(config, outdir):
    """Check that L_AM(s) = L_OT(Psi) + constant on every path."""
    settings = _field_settings(config)
    p0, p1 = _distribution(config, "p0"), _distribution(config, "p1")
    paths = [
        _build(f"paths[{j}]", couplings.path_from_dict, desc, p0, p1)
        for j, desc in enumerate(config["paths"])
    ]
    sigma = config["tolerances"]["sigma"]
    constant = config["tolerances"]["constant"]
    if constant is None:
        constant = losses.am_constant(p0, p1)
    seed, n = config["seed"], config["n"]
    results, failures = [], []
    for i, (label, psi) in enumerate(_potentials(config)):
        ot_seed = generic.derive_seed(seed, i)
        ot = losses.ot_loss(psi, p0, p1, n, ot_seed, settings)
        path_results, am_values, am_errors = [], [], []
        for j, path in enumerate(paths):
            am_seed = generic.derive_seed(seed, i, "path", j)
            am = losses.am_loss(psi, path, n, am_seed, settings)
            discrepancy = am.value - ot.value - constant
            std_error = _combined(am, ot)
            passed = bool(abs(discrepancy) <= sigma * std_error)
            if not passed:
                failures.append(f"{label}, path {j}: discrepancy")
            logger.info(
                "%s, path %d: am %.6f, ot %.6f, discrepancy %.2e (se %.1e)",
                label,
                j,
                am.value,
                ot.value,
                discrepancy,
                std_error,
            )
            am_values.append(am.value)
            am_errors.append(am.std_error)
            path_results.append(
                dict(
                    path=path.to_dict(),
                    am_loss=am.to_dict(),
                    discrepancy=discrepancy,
                    abs_discrepancy=abs(discrepancy),
                    std_error=std_error,
                    passed=passed,
                )
            )
        results.append(
            dict(
                label=label,
                potential=psi.to_dict(),
                ot_loss=ot.to_dict(),
                paths=path_results,
                path_independence=_pairwise(
                    am_values,
                    am_errors,
                    sigma,
                    "path independence",
                    failures,
                    label,
                ),
            )
        )
    return dict(am_constant=constant, potentials=results), failures


def ofm_constant(plan):
    """Return the analytic value of L_OFM - 2 L_OT for independent plans.

    For any plan, L_OFM(Psi) - 2 L_OT(Psi) = -2 E<x0, x1>, which is -2
    m0'm1 when x0 and x1 are independent (None for other plans).

    """
    if isinstance(plan, couplings.Independent):
        return float(-2 * plan.p0.mean() @ plan.p1.mean())
    return None


def verify_ofm_relation(config, outdir):
    """Check that L_OFM - 2 L_OT does not depend on Psi."""
    settings = _field_settings(config)
    p0, p1 = _distribution(config, "p0"), _distribution(config, "p1")
    plan = _build("plan", couplings.plan_from_dict, config["plan"], p0, p1)
    sigma = config["tolerances"]["sigma"]
    seed, n = config["seed"], config["n"]
    expected = ofm_constant(plan)
    results, failures, values, errors = [], [], [], []
    for label, psi in _potentials(config):
        # Same seed for every potential (common random numbers)
        ofm = losses.ofm_loss(psi, plan, n, seed, settings)
        ot = losses.ot_loss(psi, p0, p1, n, seed, settings)
        value = ofm.value - 2 * ot.value
        std_error = _combined(ofm, ot, weights=(1, 2))
        entry = dict(
            label=label,
            potential=psi.to_dict(),
            ofm_loss=ofm.to_dict(),
            ot_loss=ot.to_dict(),
            constant=value,
            std_error=std_error,
        )
        if expected is not None:
            entry["passed"] = bool(abs(value - expected) <= sigma * std_error)
            if not entry["passed"]:
                failures.append(f"{label}: constant vs analytic")
        logger.info(
            "%s: ofm %.6f, ot %.6f, constant %.4f (se %.1e)",
            label,
            ofm.value,
            ot.value,
            value,
            std_error,
        )
        values.append(value)
        errors.append(std_error)
        results.append(entry)
    agreement = _pairwise(
        values, errors, sigma, "constant", failures, "potentials"
    )
    return (
        dict(
            plan=plan.to_dict(),
            expected_constant=expected,
            potentials=results,
            agreement=agreement,
        ),
        failures,
    )


def _solve_config(config, p0, p1, settings):
    options = dict(config["solver"])
    plan, path = options.pop("plan"), options.pop("path")
    options.pop("init")
    if plan is not None:
        plan = _build("solver.plan", couplings.plan_from_dict, plan, p0, p1)
    if path is not None:
        path = _build("solver.path", couplings.path_from_dict, path, p0, p1)
    return _build(
        "solver",
        lambda: SolveConfig(
            seed=config["seed"],
            plan=plan,
            path=path,
            field_settings=settings,
            **options,
        ),
    )


def solve_ot(config, outdir):
    """Minimize a loss and compare the result with the Gaussian oracle."""
    settings = _field_settings(config)
    p0, p1 = _distribution(config, "p0"), _distribution(config, "p1")
    cfg = _solve_config(config, p0, p1, settings)
    if config["solver"]["init"] is None:
        init = potentials.identity_potential(p0.dim)
    else:
        init = _single_potential(
            config["solver"]["init"], "solver.init", config["seed"]
        )
    try:
        psi, trace = minimize(init, p0, p1, cfg)
    except generic.SolverError as err:
        err.trace.to_csv(os.path.join(outdir, "trace.csv"))
        raise
    potentials.save_potential(psi, os.path.join(outdir, "potential.json"))
    trace.to_csv(os.path.join(outdir, "trace.csv"))
    seed = generic.derive_seed(config["seed"], "final")
    ot = losses.ot_loss(psi, p0, p1, config["n"], seed, settings)
    w2 = losses.w2_estimate(psi, p0, p1, config["n"], seed, settings)
    results = dict(
        solver=cfg.to_dict(),
        trace=trace.to_dict(),
        potential=psi.to_dict(),
        ot_loss=ot.to_dict(),
        w2_estimate=w2.to_dict(),
    )
    failures = []
    gaussians = isinstance(p0, distributions.Gaussian) and isinstance(
        p1, distributions.Gaussian
    )
    if gaussians:
        tol = config["tolerances"]
        oracle = oracles.bures_map(p0, p1)
        results["oracle"] = oracle.to_dict()
        w2_error = abs(w2.value - oracle.w2_squared)
        if oracle.w2_squared > 0:
            w2_error /= oracle.w2_squared
        checks = dict(w2_rel=w2_error)
        if isinstance(psi, potentials.Quadratic):
            target = oracle.linear_map
            checks["map_rel"] = float(
                np.linalg.norm(psi.matrix - target, ord=2)
                / np.linalg.norm(target, ord=2)
            )
            shift_error = np.linalg.norm(psi.shift - oracle.shift)
            checks["shift_abs"] = float(shift_error)
        results["checks"] = {}
        for name, value in checks.items():
            passed = bool(value <= tol[name])
            results["checks"][name] = dict(
                value=float(value), tolerance=tol[name], passed=passed
            )
            if not passed:
                failures.append(f"{name} ({value:.3e} > {tol[name]})")
            logger.info("%s: %.3e (tolerance %.1e)", name, value, tol[name])
    return results, failures


def push_samples(config, outdir):
    """Integrate the optimal field and compare with the gradient map."""
    settings = _field_settings(config)
    p0 = _distribution(config, "p0")
    psi = _single_potential(config["potential"], "potential", config["seed"])
    options, tol = config["push"], config["tolerances"]
    x0 = p0.sample(options["n"], generic.derive_seed(config["seed"], "push"))
    x1_ode = _build(
        "push",
        pushforward,
        psi,
        x0,
        options["steps"],
        options["method"],
        settings,
    )
    x1_map = psi.grad(x0)
    norms = np.maximum(np.linalg.norm(x1_map, axis=1), 1.0)
    relative = np.linalg.norm(x1_ode - x1_map, axis=1) / norms
    columns = {}
    for name, values in (("x0", x0), ("x1_ode", x1_ode), ("x1_map", x1_map)):
        for d in range(psi.dim):
            columns[f"{name}_{d + 1}"] = values[:, d]
    pd.DataFrame(columns).to_csv(
        os.path.join(outdir, "samples.csv"), index=False
    )
    checks = dict(push_rel=float(relative.max()))
    if config["p1"] is not None:
        p1 = _distribution(config, "p1")
        mean, target_mean = x1_ode.mean(axis=0), p1.mean()
        checks["mean_rel"] = float(
            np.linalg.norm(mean - target_mean)
            / max(np.linalg.norm(target_mean), 1.0)
        )
        variances = np.var(x1_ode, axis=0, ddof=1)
        target_variances = np.diag(p1.covariance())
        checks["cov_rel"] = float(
            np.max(np.abs(variances - target_variances) / target_variances)
        )
    failures, results = [], dict(potential=psi.to_dict(), checks={})
    for name, value in checks.items():
        passed = bool(value <= tol[name])
        results["checks"][name] = dict(
            value=value, tolerance=tol[name], passed=passed
        )
        if not passed:
            failures.append(f"{name} ({value:.3e} > {tol[name]})")
        logger.info("%s: %.3e (tolerance %.1e)", name, value, tol[name])
    return results, failures


SUBCOMMANDS = {
    "verify-bracket": verify_bracket,
    "verify-theorem": verify_theorem,
    "verify-ofm-relation": verify_ofm_relation,
    "solve-ot": solve_ot,
    "push-samples": push_samples,
}


def _json_default(value):
    if hasattr(value, "tolist"):
        return value.tolist()
    msg = f"Object of type {type(value).__name__} is not JSON serializable."
    raise TypeError(msg)


def write_report(report, outdir):
    """Write given report into the output directory."""
    filepath = os.path.join(outdir, REPORT_NAME)
    with open(filepath, mode="w") as f:
        json.dump(report, f, sort_keys=True, indent=4, default=_json_default)
        f.write("\n")
    return filepath


def run(argv=None):
    """Run the experiment described by given command-line arguments.

    Parameters
    ----------
    argv: list | None
        The command-line arguments (sys.argv[1:] if None).

    Returns
    -------
    int
        0 if all checks pass, 2 if a check fails, 1 on execution errors.

    """
    try:
        opts = prepare_argparser().parse_args(argv)
    except SystemExit as err:
        return 0 if err.code in (0, None) else 1
    logging.basicConfig(
        level=logging.DEBUG if opts.verbose else logging.INFO,
        format=LOG_FORMAT,
        force=True,
    )
    logging.captureWarnings(True)
    start = time.perf_counter()
    try:
        generic.set_threads(opts.threads)
        config = get_config(opts)
        outdir = generic.process_path(config["out"])
        os.makedirs(outdir, exist_ok=True)
        results, failures = SUBCOMMANDS[opts.subcommand](config, outdir)
        report = dict(
            experiment=config["experiment"],
            subcommand=opts.subcommand,
            seed=config["seed"],
            n=config["n"],
            threads=generic.get_threads(),
            config=config,
            results=results,
            failures=failures,
            passed=not failures,
            wall_time_s=time.perf_counter() - start,
        )
        filepath = write_report(report, outdir)
    except Exception as err:
        logger.error("%s: %s", type(err).__name__, err)
        return 1
    logger.info("Report written to %s", filepath)
    if failures:
        for failure in failures:
            logger.error("Check failed: %s", failure)
        return 2
    logger.info("All checks passed.")
    return 0


def main():
    """Entry point of the optfield command."""
    sys.exit(run())
