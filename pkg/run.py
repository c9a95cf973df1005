#!/usr/bin/env python3
#  Copyright (c) modcs contributors.

import sys

from modcs.cli import main

if __name__ == "__main__":
    # Do not add code here, it won't be run. Add them to the function called below.
    sys.exit(main())  # pragma: no cover
