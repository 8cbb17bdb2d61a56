import sys

from subplay.runner.cli import main

sys.exit(main())
