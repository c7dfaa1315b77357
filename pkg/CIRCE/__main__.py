import sys

from CIRCE.cli import main

sys.exit(main())
