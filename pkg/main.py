import sys

from src.jobs.cli import main

if __name__ == "__main__":
    sys.exit(main())
