"""Run the command-line front end with ``python -m sap``."""

import sys

from .cli import main

sys.exit(main())
