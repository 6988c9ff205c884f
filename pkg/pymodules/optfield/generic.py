# Copyright (c) 2026-now The optfield developers.
#
# License: BSD 3-clause "new" or "revised" license (BSD-3-Clause).

"""Common Python resources for optfield: generic resources."""

import os
import zlib
import argparse
import concurrent.futures
import numpy as np

THREADS_ENV_VAR = "OPTFIELD_THREADS"

_threads = None


class SPDViolation(ValueError):
    """A matrix that must be symmetric positive definite is not."""


class MaxItersExceeded(RuntimeError):
    """An iterative solver stopped before reaching its tolerance.

    Parameters
    ----------
    msg: str
        The error message.
    result: object
        The best result obtained so far (eg. a ConjugateResult).

    """

    def __init__(self, msg, result):
        super().__init__(msg)
        self.result = result


class EstimatorError(RuntimeError):
    """A Monte Carlo estimator had to reject one of its samples.

    Parameters
    ----------
    msg: str
        The error message.
    index: int
        The index of the offending sample.

    """

    def __init__(self, msg, index):
        super().__init__(msg)
        self.index = index


class SolverError(RuntimeError):
    """The minimization of a loss had to be aborted.

    Parameters
    ----------
    msg: str
        The error message.
    trace: object
        The trace of the aborted minimization.

    """

    def __init__(self, msg, trace):
        super().__init__(msg)
        self.trace = trace


class ConfigError(ValueError):
    """An experiment configuration is malformed."""


class ConvertToBoolean(argparse.Action):
    """Action to convert command-line arguments to booleans."""

    def __call__(self, _, namespace, values, option_string=None):
        """Convert command line option value to boolean.

        See https://docs.python.org/3/library/argparse.html#action-classes for
        more details about action classes and the corresponding API.

        """
        if values.lower() in ("true", "t", "yes", "y"):
            values = True
        elif values.lower() in ("false", "f", "no", "n"):
            values = False
        else:
            msg = f'Could not convert "{values}" to boolean.'
            raise ValueError(msg)
        setattr(namespace, self.dest, values)


def process_path(path):
    """Return a unique absolute version of given path.

    Parameters
    ----------
    path: str | None
        The path to process.

    Returns
    -------
    str | None
        The unique and absolute version of given path (or None if given path is
        empty or None)

    """
    if path is None or path.strip() == "":
        return None
    return os.path.abspath(os.path.expanduser(path))


def _stream_key(key):
    """Return the integer spawn key corresponding to given stream name."""
    if isinstance(key, (int, np.integer)):
        return int(key)
    return zlib.crc32(str(key).encode("utf-8"))


def seed_sequence(seed, *streams):
    """Return the seed sequence of the named stream derived from seed.

    Parameters
    ----------
    seed: int
        The user-provided seed (non-negative).
    *streams: str | int
        The names (or indices) identifying the stream, eg. ("x0",) or
        ("epoch", 12).

    Returns
    -------
    numpy.random.SeedSequence
        A seed sequence that is independent of the sequences of all other
        stream names for the same seed.

    """
    if int(seed) < 0:
        msg = f"Seeds must be non-negative integers (got {seed})."
        raise ValueError(msg)
    spawn_key = tuple(_stream_key(s) for s in streams)
    return np.random.SeedSequence(int(seed), spawn_key=spawn_key)


def rng(seed, *streams):
    """Return a counter-based random generator for given seed and stream.

    Parameters
    ----------
    seed: int
        The user-provided seed.
    *streams: str | int
        The stream identifiers (cf. seed_sequence).

    Returns
    -------
    numpy.random.Generator
        A generator backed by the Philox counter-based bit generator.

    """
    return np.random.Generator(np.random.Philox(seed_sequence(seed, *streams)))


def derive_seed(seed, *streams):
    """Return an integer seed for the named sub-stream of given seed.

    This is used when a function that takes an explicit seed calls another
    function that also takes an explicit seed.

    """
    state = seed_sequence(seed, *streams).generate_state(2, dtype=np.uint32)
    return int(state[0]) << 32 | int(state[1])


def set_threads(threads=None):
    """Set the maximum number of workers used by map_rows.

    Parameters
    ----------
    threads: int | None
        The number of workers. If None, use the environment variable
        OPTFIELD_THREADS, and fall back to 1.

    """
    global _threads
    if threads is None:
        threads = int(os.environ.get(THREADS_ENV_VAR, "1"))
    if threads < 1:
        msg = f"The number of threads must be positive (got {threads})."
        raise ValueError(msg)
    _threads = int(threads)


def get_threads():
    """Return the maximum number of workers used by map_rows."""
    if _threads is None:
        set_threads()
    return _threads


def map_rows(func, n_rows):
    """Apply func to every row index and gather the results in row order.

    Parameters
    ----------
    func: callable
        Function of one row index (int).
    n_rows: int
        The number of rows.

    Returns
    -------
    list
        The results [func(0), func(1), ...]. The work is split into
        contiguous chunks, one per worker, and results are concatenated in
        order, so the output does not depend on the number of workers.

    """
    threads = min(get_threads(), max(n_rows, 1))
    if threads == 1:
        return [func(i) for i in range(n_rows)]
    chunks = np.array_split(np.arange(n_rows), threads)
    with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [
            pool.submit(lambda idx: [func(int(i)) for i in idx], chunk)
            for chunk in chunks
        ]
        out = []
        for future in futures:
            out.extend(future.result())
    return out


def as_rows(x, dim=None):
    """Return given point(s) as a 2D array of rows.

    Parameters
    ----------
    x: array-like
        A single point (shape (D,)), a scalar (for D=1), or a batch of points
        (shape (N, D)).
    dim: int | None
        The expected dimension D (not checked if None).

    Returns
    -------
    numpy.ndarray, bool
        The (N, D) array of points, and whether the input was a single point.

    """
    x = np.asarray(x, dtype=float)
    single = x.ndim <= 1
    if x.ndim == 0:
        x = x.reshape(1, 1)
    elif x.ndim == 1:
        x = x.reshape(1, -1)
    elif x.ndim != 2:
        msg = f"Expected a point or a batch of points, got shape {x.shape}."
        raise ValueError(msg)
    if dim is not None and x.shape[1] != dim:
        msg = f"Expected points of dimension {dim}, got {x.shape[1]}."
        raise ValueError(msg)
    return x, single


def as_times(t, n_rows):
    """Return given time(s) as an array with one value per row.

    Parameters
    ----------
    t: float | array-like
        A single time or one time per row.
    n_rows: int
        The number of rows.

    Returns
    -------
    numpy.ndarray
        The (N,) array of times, all checked to lie in [0, 1].

    """
    t = np.asarray(t, dtype=float)
    if t.ndim == 0:
        t = np.full(n_rows, float(t))
    elif t.shape != (n_rows,):
        msg = f"Expected {n_rows} times, got shape {t.shape}."
        raise ValueError(msg)
    if np.any(t < 0) or np.any(t > 1) or not np.all(np.isfinite(t)):
        msg = "Times must lie in [0, 1]."
        raise ValueError(msg)
    return t
