"""Module entry point so `python -m beliefshift.cli` mirrors the console script."""

import sys

from .main import main

if __name__ == "__main__":
    sys.exit(main())
