import sys

from landscape_lab.cli import main

sys.exit(main())
