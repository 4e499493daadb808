"""Console entry point.

Lives outside the package so the EVOQ_THREADS cap can be exported to the
BLAS thread pools before numpy is imported anywhere.
"""

import os
import sys


def main():
    cap = os.environ.get("EVOQ_THREADS")
    if cap:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                    "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS"):
            os.environ.setdefault(var, cap)
    from evoq.cli import main as cli_main
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
