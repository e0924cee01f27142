import sys

from sqswap.cli import main

sys.exit(main())
