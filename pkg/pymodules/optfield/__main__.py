# Copyright (c) 2026-now The optfield developers.
#
# License: BSD 3-clause "new" or "revised" license (BSD-3-Clause).

"""Run an optfield experiment (python -m optfield <subcommand>)."""

from .harness import main

if __name__ == "__main__":
    main()
