"""python -m framemap: the command-line interface."""
import sys

from framemap.application.cli.main import main

if __name__ == "__main__":
    sys.exit(main())
