"""Module entry point: python -m schwinger_dqpt <command> ..."""

import sys

from .cli import main

if __name__ == "__main__":
    sys.exit(main())
