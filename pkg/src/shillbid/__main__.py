"""Allow running the command line interface as ``python -m shillbid``."""
import sys

from .cli import main

sys.exit(main())
