import sys

from demuskin.cli import main

sys.exit(main())
