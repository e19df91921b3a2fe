"""Allow running the CLI as ``python -m trackcut``."""

import sys

from trackcut.cli import main

if __name__ == "__main__":
    sys.exit(main())
