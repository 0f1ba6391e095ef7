"""Allow ``python -m brickwall``."""

import sys

from .cli import main

sys.exit(main())
