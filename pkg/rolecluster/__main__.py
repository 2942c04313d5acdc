import sys

from rolecluster.cli import main

sys.exit(main())
