import sys

from .cli_sweep import main

sys.exit(main())
