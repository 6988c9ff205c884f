# Copyright (c) 2026-now The optfield developers.
#
# License: BSD 3-clause "new" or "revised" license (BSD-3-Clause).

"""Common Python resources for optfield."""

from . import (
    generic,
    distributions,
    potentials,
    conjugate,
    fields,
    couplings,
    losses,
    oracles,
    solver,
    harness,
)

__all__ = [
    "generic",
    "distributions",
    "potentials",
    "conjugate",
    "fields",
    "couplings",
    "losses",
    "oracles",
    "solver",
    "harness",
]
