# Copyright (c) 2026-now The optfield developers.
#
# License: BSD 3-clause "new" or "revised" license (BSD-3-Clause).

"""Run a numerical experiment on optimal vector fields."""

import sys
from optfield import harness

if __name__ == "__main__":
    # Parse user options, run the checks and write the report
    sys.exit(harness.run())
