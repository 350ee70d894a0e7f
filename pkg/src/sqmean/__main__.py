import sys

from sqmean.harness.cli import main

sys.exit(main())
