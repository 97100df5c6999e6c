import sys

from rooftune.cli import main

sys.exit(main())
